"""Symplectic splitting ``q o chi = q1(x', xi') + i q2(x'', xi'')``.

When the singular space ``S`` is symplectic, R^{2n} is the sigma-orthogonal
sum of ``S^{sigma perp}`` and ``S``, both stable under ``Re F`` and
``Im F``.  Gluing symplectic bases of the two pieces gives a real
symplectic map ``chi`` in which the form separates.  The primed block
``q1`` carries all the dissipation; the double-primed block is purely
imaginary.

Column convention of ``chi``: ``(e', e'', eps', eps'')``, so that primed
coordinates occupy the first ``n'`` slots of both the ``x`` and ``xi`` halves.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .errors import ConvergenceError, HypothesisError, QuadSpecError
from .quadform import QuadraticForm, hamilton_map, symplectic_matrix
from .singular import (
    SingularSpaceReport,
    compute_singular_space,
    pairs_to_matrix,
    symplectic_basis,
    symplectic_complement,
)
from .tolerances import DEFAULT, Tolerances


@dataclass(eq=False)
class SymplecticSplit:
    chi: np.ndarray
    n_prime: int
    n_dprime: int
    q1: QuadraticForm | None
    q2_tilde: QuadraticForm | None
    epsilon: int | None = None
    lambdas: list[float] | None = None
    cross_residual: float = 0.0
    diagnostics: list[str] = field(default_factory=list)

    @property
    def n(self) -> int:
        return self.n_prime + self.n_dprime

    def primed_indices(self) -> np.ndarray:
        n, m = self.n, self.n_prime
        return np.r_[0:m, n:n + m]

    def dprimed_indices(self) -> np.ndarray:
        n, m = self.n, self.n_prime
        return np.r_[m:n, n + m:2 * n]

    def to_json(self) -> dict:
        return {
            "chi": self.chi.tolist(),
            "n_prime": self.n_prime,
            "n_dprime": self.n_dprime,
            "q1": None if self.q1 is None else self.q1.to_json(),
            "q2_tilde": None if self.q2_tilde is None else self.q2_tilde.Q.real.tolist(),
            "epsilon": self.epsilon,
            "lambdas": self.lambdas,
            "cross_residual": self.cross_residual,
            "diagnostics": list(self.diagnostics),
        }


def split(q: QuadraticForm, report: SingularSpaceReport, tol: Tolerances = DEFAULT) -> SymplecticSplit:
    """Build ``chi``, ``q1`` and ``q2_tilde`` from the singular space in ``report``."""
    if not report.is_symplectic:
        raise HypothesisError("the singular space is not symplectic; no splitting exists")
    n = q.n
    S = report.S
    if S.d == 0 or S.d == 2 * n:
        chi = np.eye(2 * n)
        n_dprime = S.d // 2
    else:
        E1, Eps1 = pairs_to_matrix(symplectic_basis(symplectic_complement(S, tol), tol=tol), n)
        E2, Eps2 = pairs_to_matrix(symplectic_basis(S, tol=tol), n)
        chi = np.hstack([E1, E2, Eps1, Eps2])
        n_dprime = E2.shape[1]
    n_prime = n - n_dprime

    J = symplectic_matrix(n)
    if np.max(np.abs(chi.T @ J @ chi - J)) > 1e-9 * max(1.0, np.linalg.norm(chi, 2) ** 2):
        raise QuadSpecError("assembled chi is not symplectic")

    Qt = chi.T @ q.Q @ chi
    out = SymplecticSplit(chi, n_prime, n_dprime, None, None)
    i1 = out.primed_indices()
    i2 = out.dprimed_indices()
    scale = max(np.linalg.norm(Qt, 2), np.linalg.norm(q.Q, 2), 1e-300)
    cross = float(np.max(np.abs(Qt[np.ix_(i1, i2)]))) if n_prime and n_dprime else 0.0
    out.cross_residual = cross / scale
    if out.cross_residual > tol.split:
        raise QuadSpecError(
            f"primed/double-primed cross terms {out.cross_residual:.2e} exceed {tol.split:.0e}; "
            "S is not stable under Re F and Im F")
    if n_prime:
        out.q1 = QuadraticForm(Qt[np.ix_(i1, i1)])
        if compute_singular_space(hamilton_map(out.q1), tol).d != 0:
            out.diagnostics.append("singular space of q1 is not trivial")
    if n_dprime:
        Q2 = Qt[np.ix_(i2, i2)]
        re2 = float(np.max(np.abs(Q2.real))) / scale
        if re2 > tol.split:
            out.diagnostics.append(f"Re q on the S block is {re2:.2e}, not zero")
        out.q2_tilde = QuadraticForm(Q2.imag)
        if report.is_partially_elliptic:
            out.epsilon, out.lambdas = normal_form_q2(out.q2_tilde, tol)
    return out


def flow(q: QuadraticForm, t: float) -> np.ndarray:
    """Hamilton flow ``exp(t H_q)`` of a real form, i.e. ``expm(2 t F)``."""
    return scipy.linalg.expm(2.0 * t * hamilton_map(q).F.real)


def _average(re_q: np.ndarray, im_F: np.ndarray, T: float, points: int) -> np.ndarray:
    s, w = np.polynomial.legendre.leggauss(points)
    acc = np.zeros_like(re_q)
    for sk, wk in zip(s, w):
        M = scipy.linalg.expm(2.0 * T * sk * im_F)
        acc += wk * (M.T @ re_q @ M)
    # (1/2T) * integral over [-T, T] = (1/2) * sum_k w_k f(T s_k)
    acc *= 0.5
    return 0.5 * (acc + acc.T)


def averaged_real_part(q1: QuadraticForm, T: float = 1.0, quadrature_points: int = 64,
                       tol: Tolerances = DEFAULT) -> QuadraticForm:
    """Average of ``Re q1`` along the flow of ``Im q1`` over ``[-T, T]``.

    Gauss-Legendre quadrature with ``quadrature_points`` nodes, checked
    against twice as many nodes.
    """
    if T <= 0:
        raise ValueError("T must be positive")
    re_q = q1.Q.real
    im_F = hamilton_map(q1).F.imag
    coarse = _average(re_q, im_F, T, quadrature_points)
    fine = _average(re_q, im_F, T, 2 * quadrature_points)
    err = np.max(np.abs(fine - coarse)) / max(np.max(np.abs(fine)), 1e-300)
    if err > tol.quadrature:
        raise ConvergenceError(
            f"quadrature with {quadrature_points} and {2 * quadrature_points} nodes "
            f"disagrees by {err:.2e}")
    return QuadraticForm(fine)


def r_form(q1: QuadraticForm, terms: int | None = None) -> QuadraticForm:
    """``sum_j Re q1((Im F1)^j X)`` for ``j = 0 .. terms - 1`` (default ``2 n``)."""
    terms = 2 * q1.n if terms is None else terms
    re_q = q1.Q.real
    im_F = hamilton_map(q1).F.imag
    acc = np.zeros_like(re_q)
    P = np.eye(re_q.shape[0])
    for _ in range(terms):
        acc += P.T @ re_q @ P
        P = im_F @ P
    return QuadraticForm(acc)


def normal_form_q2(q2_tilde: QuadraticForm, tol: Tolerances = DEFAULT) -> tuple[int, list[float]]:
    """Sign and symplectic invariants of a definite real form.

    Returns ``(epsilon, lambdas)`` such that ``q2_tilde`` is symplectically
    equivalent to ``epsilon * sum_j lambdas[j] (x_j^2 + xi_j^2)``, with the
    ``lambdas`` sorted ascending.
    """
    Q = q2_tilde.Q.real
    w, V = np.linalg.eigh(Q)
    thr = tol.ellipticity * max(np.max(np.abs(w)), 1e-300)
    if w[0] > thr:
        eps = 1
    elif w[-1] < -thr:
        eps = -1
    else:
        raise HypothesisError("q2_tilde is not definite: the form is not elliptic on S")
    root = (V * np.sqrt(eps * w)) @ V.T
    # root J root is real skew-symmetric with eigenvalues +- i lambda_j
    K = root @ symplectic_matrix(q2_tilde.n) @ root
    mods = np.sort(np.abs(np.linalg.eigvals(K).imag))
    return eps, [float(x) for x in mods[::2]]
