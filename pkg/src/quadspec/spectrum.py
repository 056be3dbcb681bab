"""Predicted spectrum and decay rate of ``q(x, xi)^w``.

The eigenvalues of the operator are the lattice sums

    sum_lam (r_lam + 2 k_lam) (-i lam),   k_lam = 0, 1, 2, ...

over the eigenvalues ``lam`` of the Hamilton map ``F`` whose generator
``mu = -i lam`` passes a selection rule, with ``r_lam`` the algebraic
multiplicity of ``lam``.  Three rules are implemented:

``partial``
    ``Re mu < 0``, or ``mu`` on the imaginary axis inside ``q(S)`` minus
    the origin (needs the sign of the normal form on ``S``);
``elliptic``
    ``mu`` in the numerical range of ``q``, minus the origin;
``q1_only``
    ``Re mu < 0``, applied to the Hamilton map of the dissipative factor.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .decomposition import SymplecticSplit, split as make_split
from .errors import EnumerationError, HypothesisError, PreconditionError
from .quadform import HamiltonMap, NumericalRangeCone, QuadraticForm, hamilton_map, numerical_range_cone
from .singular import SingularSpaceReport, analyze_singular_space
from .tolerances import DEFAULT, Tolerances

MODES = ("elliptic", "partial", "q1_only")


@dataclass(frozen=True)
class EigenCluster:
    lam: complex
    r: int

    @property
    def mu(self) -> complex:
        return -1j * self.lam

    def to_json(self) -> dict:
        return {"lambda": [self.lam.real, self.lam.imag], "r": self.r,
                "mu": [self.mu.real, self.mu.imag]}


def eigen_clusters(F, tol: Tolerances = DEFAULT) -> list[EigenCluster]:
    """Eigenvalues of ``F`` grouped into clusters with algebraic multiplicities.

    Two eigenvalues are linked when they are closer than
    ``tol.cluster * (1 + |lam|)``; clusters are the connected components and
    are represented by their mean.
    """
    F = F.F if isinstance(F, HamiltonMap) else np.asarray(F)
    ev = np.linalg.eigvals(F)
    m = ev.size
    parent = list(range(m))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    for i in range(m):
        for j in range(i + 1, m):
            if abs(ev[i] - ev[j]) <= tol.cluster * (1 + max(abs(ev[i]), abs(ev[j]))):
                parent[find(i)] = find(j)
    groups: dict[int, list[complex]] = {}
    for i in range(m):
        groups.setdefault(find(i), []).append(ev[i])
    clusters = [EigenCluster(complex(np.mean(g)), len(g)) for g in groups.values()]
    clusters.sort(key=lambda c: (round(c.mu.real, 12), round(c.mu.imag, 12)))
    for a in range(len(clusters)):
        for b in range(a + 1, len(clusters)):
            la, lb = clusters[a].lam, clusters[b].lam
            if abs(la - lb) <= 3 * tol.cluster * (1 + max(abs(la), abs(lb))):
                warnings.warn(f"eigenvalue clusters {la} and {lb} are nearly merged; "
                              "multiplicities may be ambiguous", stacklevel=2)
    return clusters


def _on_axis(mu: complex, tol: Tolerances) -> bool:
    return abs(mu.real) <= tol.boundary * (1 + abs(mu))


def select_generators(clusters: list[EigenCluster], mode: str, split: SymplecticSplit | None = None,
                      *, cone: NumericalRangeCone | None = None,
                      tol: Tolerances = DEFAULT) -> list[EigenCluster]:
    """Filter eigenvalue clusters according to ``mode`` (see module docstring)."""
    if mode not in MODES:
        raise ValueError(f"mode must be one of {MODES}")
    if mode == "q1_only":
        return [c for c in clusters if c.mu.real < 0 and not _on_axis(c.mu, tol)]
    if mode == "elliptic":
        if cone is None:
            raise PreconditionError("elliptic selection needs the numerical range cone")
        return [c for c in clusters if abs(c.mu) > tol.boundary and cone.contains(c.mu)]
    if split is None:
        raise PreconditionError("partial selection needs the symplectic splitting")
    eps = split.epsilon
    if split.n_dprime and eps is None:
        raise PreconditionError("partial selection needs the normal form of q2 (form not elliptic on S)")
    keep = []
    for c in clusters:
        mu = c.mu
        if _on_axis(mu, tol):
            if eps is not None and eps * mu.imag > tol.boundary * (1 + abs(mu)):
                keep.append(c)
        elif mu.real < 0:
            keep.append(c)
    return keep


@dataclass(frozen=True)
class LatticePoint:
    value: complex
    count: int

    def to_json(self) -> list:
        return [self.value.real, self.value.imag, self.count]


def default_rectangle(generators: list[EigenCluster]) -> tuple[float, float]:
    """``(re_min, im_max)`` covering the desk-scale window of a generator set."""
    neg = [abs(g.mu.real) for g in generators if g.mu.real < 0]
    re_min = -20.0 * ((min(neg) if neg else 0.0) + 1.0)
    im_max = 20.0 * (max((abs(g.mu.imag) for g in generators), default=0.0) + 1.0)
    return re_min, im_max


def enumerate_lattice(generators: list[EigenCluster], re_min: float, im_max: float,
                      *, max_nodes: int = 10 ** 6, tol: Tolerances = DEFAULT) -> list[LatticePoint]:
    """All sums ``sum (r + 2k) mu`` inside ``{re_min <= Re <= 0, |Im| <= im_max}``.

    Coincident sums are merged and their number of index tuples reported as
    ``count``.  Points are sorted by decreasing real part.
    """
    if re_min >= 0:
        raise PreconditionError("re_min must be negative")
    if not generators:
        return []
    damped = [g for g in generators if not _on_axis(g.mu, tol)]
    axis = [g for g in generators if _on_axis(g.mu, tol)]
    if any(g.mu.real > 0 for g in damped):
        raise PreconditionError("generators must have non-positive real part")
    signs = {np.sign(g.mu.imag) for g in axis}
    if 0.0 in signs or len(signs) > 1:
        raise PreconditionError("imaginary-axis generators must be non-zero with a common sign")
    sign = signs.pop() if signs else 1.0

    base = sum(g.r * g.mu for g in generators)
    slack = 1e-9 * (1 + max(abs(g.mu) for g in generators))
    nodes = 0
    partials: list[complex] = []

    def bump():
        nonlocal nodes
        nodes += 1
        if nodes > max_nodes:
            raise EnumerationError(f"lattice enumeration exceeded {max_nodes} nodes; "
                                   "use a smaller rectangle")

    def walk_damped(i: int, value: complex):
        if i == len(damped):
            partials.append(value)
            return
        step = 2 * damped[i].mu
        while value.real >= re_min - slack:
            bump()
            walk_damped(i + 1, value)
            value += step

    def walk_axis(i: int, value: complex, out: list[complex]):
        if i == len(axis):
            out.append(value)
            return
        step = 2 * axis[i].mu
        while sign * value.imag <= im_max + slack:
            bump()
            walk_axis(i + 1, value, out)
            value += step

    if base.real < re_min - slack:
        return []
    walk_damped(0, base)
    sums: list[complex] = []
    for v in partials:
        walk_axis(0, v, sums)

    merged: dict[tuple[int, int], list] = {}
    q = 1e-8 * (1 + max(abs(g.mu) for g in generators))
    for v in sums:
        if not (re_min - slack <= v.real <= slack and abs(v.imag) <= im_max + slack):
            continue
        key = (round(v.real / q), round(v.imag / q))
        if key in merged:
            merged[key][1] += 1
        else:
            merged[key] = [v, 1]
    points = [LatticePoint(complex(v), c) for v, c in merged.values()]
    points.sort(key=lambda p: (-p.value.real, p.value.imag))
    return points


def decay_rate(generators: list[EigenCluster], n_prime: int = 1) -> float:
    """Exponential decay rate ``a = sum r (-Re mu)`` of the dissipative factor.

    The infimum over the lattice is reached at ``k = 0``.  With no
    dissipative factor (``n_prime == 0``) the semigroup is unitary and the
    rate is zero.
    """
    if n_prime == 0:
        return 0.0
    if not generators:
        raise HypothesisError("a non-trivial dissipative factor must have damped generators")
    if any(g.mu.real >= 0 for g in generators):
        raise PreconditionError("decay_rate expects q1_only generators")
    return float(sum(g.r * -g.mu.real for g in generators))


@dataclass(eq=False)
class Verdict:
    """Outcome of a pipeline run whose hypotheses failed."""

    reason: str
    dissipative: bool
    singular_space_symplectic: bool
    details: list[str] = field(default_factory=list)

    def to_json(self) -> dict:
        return {"verdict": self.reason, "dissipative": self.dissipative,
                "singular_space_symplectic": self.singular_space_symplectic,
                "details": list(self.details)}


@dataclass(eq=False)
class SpectrumPrediction:
    generators: list[EigenCluster]
    lattice: list[LatticePoint]
    decay_rate: float
    selection_rule: str
    q1_generators: list[EigenCluster] = field(default_factory=list)
    rectangle: tuple[float, float] = (0.0, 0.0)
    theorems: list[str] = field(default_factory=list)
    diagnostics: list[str] = field(default_factory=list)

    @property
    def resonances(self) -> list[LatticePoint]:
        return [p for p in self.lattice if p.count > 1]

    def values(self) -> np.ndarray:
        return np.array([p.value for p in self.lattice])

    def generator_mus(self) -> np.ndarray:
        return np.array(sorted((g.mu for g in self.generators), key=lambda z: (z.real, z.imag)))

    def to_json(self) -> dict:
        return {
            "mode": self.selection_rule,
            "generators": [g.to_json() for g in self.generators],
            "q1_generators": [g.to_json() for g in self.q1_generators],
            "lattice": [p.to_json() for p in self.lattice],
            "rectangle": {"re_min": self.rectangle[0], "im_max": self.rectangle[1]},
            "decay_rate": self.decay_rate,
            "resonances": [p.to_json() for p in self.resonances],
            "theorems": list(self.theorems),
            "diagnostics": list(self.diagnostics),
        }


def predict_spectrum(q: QuadraticForm, report: SingularSpaceReport | None = None,
                     split: SymplecticSplit | None = None, *, mode: str | None = None,
                     rect: tuple[float, float] | None = None,
                     tol: Tolerances = DEFAULT) -> SpectrumPrediction | Verdict:
    """Clusters, selection, lattice and decay rate for ``q``.

    Returns a :class:`Verdict` instead of a prediction when ``Re q`` is not
    non-positive or when the singular space is not symplectic.
    """
    dissipative = q.is_dissipative(tol)
    report = analyze_singular_space(q, tol) if report is None else report
    if not dissipative:
        return Verdict("real part of q is not non-positive", False, report.is_symplectic)
    if not report.is_symplectic:
        return Verdict(
            "singular space not symplectic", True, False,
            [f"dim S = {report.d}",
             "smoothing, spectrum and decay results do not apply; the semigroup need not decay "
             "(multiplication by exp(-t x^2) has norm 1 for all t)"])
    split = make_split(q, report, tol) if split is None else split

    q1_gens: list[EigenCluster] = []
    if split.n_prime:
        q1_gens = select_generators(eigen_clusters(hamilton_map(split.q1), tol), "q1_only", tol=tol)
    rate = decay_rate(q1_gens, split.n_prime)
    theorems = ["smoothing", "decay"]

    if mode is None:
        mode = "partial" if report.is_partially_elliptic else "q1_only"
    if mode == "q1_only":
        gens = q1_gens
        if not report.is_partially_elliptic:
            theorems.append("spectrum_of_q1_factor_only")
        else:
            theorems.append("spectrum_of_q1_factor")
    else:
        if not report.is_partially_elliptic:
            raise HypothesisError(f"{mode} selection needs q elliptic on its singular space")
        clusters = eigen_clusters(hamilton_map(q), tol)
        cone = numerical_range_cone(q) if mode == "elliptic" else None
        gens = select_generators(clusters, mode, split, cone=cone, tol=tol)
        theorems.append("spectrum")

    if rect is None:
        rect = default_rectangle(gens)
    lattice = enumerate_lattice(gens, rect[0], rect[1], tol=tol) if gens else []
    pred = SpectrumPrediction(gens, lattice, rate, mode, q1_gens, tuple(rect), theorems,
                              list(report.diagnostics) + list(split.diagnostics))
    if pred.resonances:
        pred.diagnostics.append(f"{len(pred.resonances)} lattice points reached by several index tuples")
    if split.n_prime == 0:
        pred.diagnostics.append("Re q vanishes identically: the semigroup is unitary")
    return pred


def lattice_base_point(generators: list[EigenCluster]) -> complex:
    """The lattice point with all ``k = 0``."""
    return complex(sum(g.r * g.mu for g in generators))


def infimum_rate(generators: list[EigenCluster]) -> float:
    """``-max Re`` over the lattice, from an enumeration on a rectangle around the base point."""
    if not generators:
        return 0.0
    base = lattice_base_point(generators)
    pts = enumerate_lattice(generators, base.real * 2 - 1.0,
                            abs(base.imag) + 4 * sum(abs(g.mu) for g in generators) + 1.0)
    return float(-max(p.value.real for p in pts)) if pts else math.inf
