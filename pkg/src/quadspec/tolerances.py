"""Numerical thresholds shared by all modules.

Every exact-arithmetic dichotomy used by the analysis (kernel or not,
real eigenvalue or not, on the imaginary axis or not) is decided by one of
the thresholds below.  They can be tuned at run time through the
``QUADSPEC_TOL_OVERRIDES`` environment variable, which holds a JSON object
mapping field names to new values, e.g.::

    QUADSPEC_TOL_OVERRIDES='{"rank": 1e-9, "conv": 1e-5}'
"""

from __future__ import annotations

import dataclasses
import json
import os

ENV_VAR = "QUADSPEC_TOL_OVERRIDES"


@dataclasses.dataclass(frozen=True)
class Tolerances:
    #: relative SVD threshold for null spaces and ranks
    rank: float = 1e-10
    #: relative threshold on Re Q eigenvalues for dissipativity
    dissipative: float = 1e-10
    #: |Im lam| <= real * (1 + |lam|) classifies an eigenvalue of F as real
    real: float = 1e-8
    #: eigenvalue clustering radius, scaled by (1 + |lam|)
    cluster: float = 1e-8
    #: |Re mu| <= boundary puts a lattice generator on the imaginary axis
    boundary: float = 1e-9
    #: nondegeneracy of the restricted symplectic form
    symplectic: float = 1e-10
    #: ellipticity margin below which a form is declared degenerate
    ellipticity: float = 1e-8
    #: block separation residual of the symplectic splitting
    split: float = 1e-10
    #: Galerkin eigenvalue movement between two truncations
    conv: float = 1e-6
    #: quadrature self-consistency for averaged real parts
    quadrature: float = 1e-9

    def replace(self, **changes: float) -> "Tolerances":
        return dataclasses.replace(self, **changes)

    def as_dict(self) -> dict[str, float]:
        return dataclasses.asdict(self)


def from_env(environ: dict[str, str] | None = None) -> Tolerances:
    """Default tolerances updated with the JSON map in ``QUADSPEC_TOL_OVERRIDES``."""
    environ = os.environ if environ is None else environ
    raw = environ.get(ENV_VAR)
    if not raw:
        return Tolerances()
    overrides = json.loads(raw)
    if not isinstance(overrides, dict):
        raise ValueError(f"{ENV_VAR} must hold a JSON object")
    known = {f.name for f in dataclasses.fields(Tolerances)}
    unknown = set(overrides) - known
    if unknown:
        raise ValueError(f"unknown tolerance names in {ENV_VAR}: {sorted(unknown)}")
    return Tolerances(**{k: float(v) for k, v in overrides.items()})


DEFAULT = Tolerances()
