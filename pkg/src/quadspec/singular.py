"""Singular space of a dissipative quadratic form and its symplectic structure.

For a form with Hamilton map ``F`` the singular space is

    S = ( intersection_{j=0}^{2n-1} Ker[Re F (Im F)^j] ) cap R^{2n},

the set of real directions that the real part never sees, even after being
transported by the imaginary part.  This module computes ``S``, decides
whether it is symplectic and whether ``q`` is elliptic on it, builds
symplectic bases, and splits ``S`` along the real eigenvalues of ``F``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .errors import HypothesisError, PreconditionError
from .quadform import HamiltonMap, QuadraticForm, hamilton_map, symplectic_matrix
from .tolerances import DEFAULT, Tolerances


@dataclass(frozen=True, eq=False)
class SubspaceBasis:
    """Orthonormal real basis (columns of ``vectors``) of a subspace of R^{2n}."""

    n: int
    vectors: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.vectors, dtype=float).reshape(2 * self.n, -1)
        object.__setattr__(self, "vectors", v)

    @property
    def d(self) -> int:
        return self.vectors.shape[1]

    @classmethod
    def from_spanning(cls, n: int, M, rtol: float = 1e-10) -> "SubspaceBasis":
        """Orthonormalise the column span of ``M`` (rank decided by SVD)."""
        M = np.asarray(M, dtype=float).reshape(2 * n, -1)
        if M.shape[1] == 0:
            return cls(n, np.zeros((2 * n, 0)))
        U, s, _ = np.linalg.svd(M, full_matrices=False)
        if s.size == 0 or s[0] == 0.0:
            return cls(n, np.zeros((2 * n, 0)))
        rank = int(np.sum(s > rtol * s[0]))
        return cls(n, U[:, :rank])

    @classmethod
    def full(cls, n: int) -> "SubspaceBasis":
        return cls(n, np.eye(2 * n))

    @classmethod
    def trivial(cls, n: int) -> "SubspaceBasis":
        return cls(n, np.zeros((2 * n, 0)))

    def projector(self) -> np.ndarray:
        return self.vectors @ self.vectors.T

    def contains(self, v, atol: float = 1e-10) -> bool:
        v = np.asarray(v, dtype=float)
        return bool(np.linalg.norm(v - self.projector() @ v) <= atol * max(np.linalg.norm(v), 1.0))

    def to_json(self) -> dict:
        return {"n": self.n, "d": self.d, "basis": self.vectors.T.tolist()}


def null_space(A, rtol: float = 1e-10, scale: float | None = None) -> np.ndarray:
    """Orthonormal basis of the kernel of a real matrix.

    Singular values up to ``rtol * scale`` count as zero; ``scale`` defaults
    to the largest singular value of ``A``.
    """
    A = np.atleast_2d(np.asarray(A, dtype=float))
    if A.size == 0 or not np.any(A):
        return np.eye(A.shape[1])
    _, s, vh = np.linalg.svd(A)
    ref = s[0] if scale is None else scale
    rank = int(np.sum(s > rtol * ref))
    return vh[rank:].T


def principal_angles(A: SubspaceBasis, B: SubspaceBasis) -> np.ndarray:
    """Principal angles between two subspaces; ``pi/2`` pads a dimension mismatch."""
    if A.d != B.d:
        return np.full(max(A.d, B.d), math.pi / 2)
    if A.d == 0:
        return np.zeros(0)
    return scipy.linalg.subspace_angles(A.vectors, B.vectors)


def compute_singular_space(F: HamiltonMap, tol: Tolerances = DEFAULT) -> SubspaceBasis:
    """Orthonormal basis of the singular space of the form behind ``F``.

    The ``2n`` real matrices ``Re F (Im F)^j`` are stacked and the null space
    of the stack is extracted by SVD.  ``Re F`` and ``Im F`` are first
    rescaled to unit norm, which leaves the kernels unchanged and keeps
    the relative rank threshold independent of the size of ``q``.  The
    blocks themselves are not rescaled: a block whose norm has collapsed
    to roundoff carries no constraint.
    """
    n = F.n
    re = F.real
    im = F.imag
    re_norm = np.linalg.norm(re, 2)
    if re_norm == 0:
        return SubspaceBasis.full(n)
    re = re / re_norm
    im_norm = np.linalg.norm(im, 2)
    if im_norm > 0:
        im = im / im_norm
    blocks = []
    power = np.eye(2 * n)
    for _ in range(2 * n):
        blocks.append(re @ power)
        power = im @ power
    return SubspaceBasis(n, null_space(np.vstack(blocks), tol.rank))


def symplectic_gram(B: SubspaceBasis) -> np.ndarray:
    """Restricted symplectic form ``B^T J B`` on the subspace."""
    return B.vectors.T @ symplectic_matrix(B.n) @ B.vectors


def is_symplectic(B: SubspaceBasis, tol: Tolerances = DEFAULT) -> bool:
    """Whether the restriction of ``sigma`` to the subspace is nondegenerate.

    The subspace ``{0}`` counts as symplectic.  Because the basis is
    orthonormal the Gram matrix has norm at most one, so the smallest
    singular value is compared with ``tol.symplectic * max(1, largest)``.
    """
    if B.d == 0:
        return True
    if B.d % 2:
        return False
    s = np.linalg.svd(symplectic_gram(B), compute_uv=False)
    return bool(s[-1] > tol.symplectic * max(s[0], 1.0))


def symplectic_complement(B: SubspaceBasis, tol: Tolerances = DEFAULT) -> SubspaceBasis:
    """``B^{sigma perp} = {v : sigma(v, s) = 0 for all s in B}``."""
    if B.d == 0:
        return SubspaceBasis.full(B.n)
    J = symplectic_matrix(B.n)
    return SubspaceBasis(B.n, null_space(B.vectors.T @ J, tol.rank))


def _restricted_form(q: QuadraticForm, B: SubspaceBasis) -> np.ndarray:
    return B.vectors.T @ q.Q @ B.vectors


def _minimize_modulus(Qs: np.ndarray, restarts: int, rng) -> float:
    """Smallest |u^T Qs u| found by projected gradient descent on the sphere."""
    d = Qs.shape[0]
    best = np.inf
    for _ in range(restarts):
        u = rng.standard_normal(d)
        u /= np.linalg.norm(u)
        step = 0.25 / max(np.linalg.norm(Qs, 2) ** 2, 1e-300)
        for _ in range(200):
            v = u @ Qs @ u
            # gradient of |v|^2 = 4 Re(conj(v) Qs u)
            g = 4.0 * np.real(np.conj(v) * (Qs @ u))
            g -= (g @ u) * u
            u_new = u - step * g
            u_new /= np.linalg.norm(u_new)
            if abs(u_new @ Qs @ u_new) >= abs(v):
                step *= 0.5
                if step < 1e-300:
                    break
                continue
            u = u_new
        best = min(best, abs(u @ Qs @ u))
    return float(best)


def _modulus_lower_bound(Qs: np.ndarray, angles: int = 720) -> float:
    """``max_theta lambda_min(Re(e^{-i theta} Qs))``, a lower bound of min |q| on the sphere."""
    best = -np.inf
    for theta in np.linspace(0.0, 2 * math.pi, angles, endpoint=False):
        M = np.real(np.exp(-1j * theta) * Qs)
        best = max(best, np.linalg.eigvalsh(M)[0])
    return float(best)


def check_partial_ellipticity(q: QuadraticForm, S: SubspaceBasis, tol: Tolerances = DEFAULT,
                              *, seed: int = 0) -> tuple[bool, float]:
    """Whether ``q(X) = 0, X in S`` forces ``X = 0``, with the margin ``min |q|`` on the unit sphere of ``S``.

    On a singular space the form is purely imaginary and the margin is exact
    (smallest modulus of the eigenvalues of ``Im q|_S`` when that form is
    definite, zero otherwise).  For a general subspace an eigenvalue-based
    lower bound is combined with random-restart descent, which gives an
    upper bound.
    """
    if S.d == 0:
        return True, math.inf
    Qs = _restricted_form(q, S)
    scale = max(np.linalg.norm(q.Q, 2), 1e-300)
    thresh = tol.ellipticity * scale
    if np.max(np.abs(Qs.real)) <= tol.rank * scale or np.max(np.abs(Qs.imag)) <= tol.rank * scale:
        part = Qs.imag if np.max(np.abs(Qs.real)) <= tol.rank * scale else Qs.real
        w = np.linalg.eigvalsh(part)
        margin = float(min(abs(w[0]), abs(w[-1]))) if w[0] * w[-1] > 0 else 0.0
        return margin > thresh, margin
    lower = _modulus_lower_bound(Qs)
    upper = _minimize_modulus(Qs, 10 * S.d ** 2, np.random.default_rng(seed))
    # a positive lower bound certifies ellipticity even if descent stalls
    return bool(lower > thresh or upper > thresh), upper


@dataclass(frozen=True, eq=False)
class SymplecticPair:
    e: np.ndarray
    eps: np.ndarray


def symplectic_basis(B: SubspaceBasis, q: QuadraticForm | None = None,
                     tol: Tolerances = DEFAULT) -> list[SymplecticPair]:
    """Symplectic basis ``(e_k, eps_k)`` of a symplectic subspace.

    The pairs satisfy ``sigma(eps_j, e_k) = delta_jk`` and
    ``sigma(e_j, e_k) = sigma(eps_j, eps_k) = 0``.  The construction is a
    symplectic Gram-Schmidt process: at every step the pair of remaining
    orthonormal vectors with the largest symplectic product is taken, and
    its symplectic projection is removed from the rest.  ``q`` is accepted
    for interface compatibility and is not needed.
    """
    del q
    if B.d == 0:
        return []
    if not is_symplectic(B, tol):
        raise HypothesisError("subspace is not symplectic: restricted sigma is degenerate")
    J = symplectic_matrix(B.n)
    W = B.vectors.copy()
    pairs = []
    while W.shape[1] > 0:
        G = W.T @ J @ W
        i, j = np.unravel_index(np.argmax(np.abs(G)), G.shape)
        if abs(G[i, j]) <= tol.symplectic:
            raise HypothesisError("symplectic Gram-Schmidt broke down")
        e = W[:, i]
        # sigma(W_j, W_i) = G[j, i]
        eps = W[:, j] / G[j, i]
        pairs.append(SymplecticPair(e, eps))
        # remove the span of (e, eps): v <- v + sigma(v, eps) e - sigma(v, e) eps
        rest = np.delete(W, [i, j], axis=1)
        if rest.shape[1] == 0:
            break
        s_eps = rest.T @ J @ eps
        s_e = rest.T @ J @ e
        rest = rest + np.outer(e, s_eps) - np.outer(eps, s_e)
        W = np.linalg.svd(rest, full_matrices=False)[0]
    return pairs


def pairs_to_matrix(pairs: list[SymplecticPair], n: int) -> tuple[np.ndarray, np.ndarray]:
    """Stack pairs into ``(E, Eps)`` matrices with the vectors as columns."""
    if not pairs:
        return np.zeros((2 * n, 0)), np.zeros((2 * n, 0))
    return (np.column_stack([p.e for p in pairs]), np.column_stack([p.eps for p in pairs]))


@dataclass(eq=False)
class SingularSpaceReport:
    S: SubspaceBasis
    is_symplectic: bool
    is_partially_elliptic: bool
    ellipticity_margin: float
    real_eigenvalues_of_F: list[float] = field(default_factory=list)
    blocks: list[SubspaceBasis] = field(default_factory=list)
    S0: SubspaceBasis | None = None
    diagnostics: list[str] = field(default_factory=list)

    @property
    def d(self) -> int:
        return self.S.d

    def to_json(self) -> dict:
        margin = self.ellipticity_margin
        return {
            "dim_S": self.S.d,
            "n": self.S.n,
            "S_basis": self.S.vectors.T.tolist(),
            "is_symplectic": self.is_symplectic,
            "is_partially_elliptic": self.is_partially_elliptic,
            "ellipticity_margin": "inf" if math.isinf(margin) else margin,
            "real_eigenvalues_of_F": list(self.real_eigenvalues_of_F),
            "blocks": [b.to_json() for b in self.blocks],
            "dim_S0": None if self.S0 is None else self.S0.d,
            "diagnostics": list(self.diagnostics),
        }


def kernel_real(F: np.ndarray, n: int, tol: Tolerances = DEFAULT) -> SubspaceBasis:
    """``Ker F cap R^{2n}`` for a complex matrix."""
    return SubspaceBasis(n, null_space(np.vstack([F.real, F.imag]), tol.rank))


def real_eigen_blocks(q: QuadraticForm, S: SubspaceBasis, tol: Tolerances = DEFAULT,
                      *, check: bool = True) -> SingularSpaceReport:
    """Split ``S`` into the symplectically orthogonal pieces attached to the real eigenvalues of ``F``.

    Each piece is ``S_lam = (Ker(F - lam) + Ker(F + lam)) cap R^{2n}``,
    computed as the real kernel of ``F^2 - lam^2``.
    """
    elliptic, margin = check_partial_ellipticity(q, S, tol)
    symp = is_symplectic(S, tol)
    F = hamilton_map(q).F
    n = q.n
    S0 = kernel_real(F, n, tol)
    report = SingularSpaceReport(S, symp, elliptic, margin, S0=S0)
    if check:
        if not elliptic:
            raise PreconditionError("q is not elliptic on the given subspace")
        if not q.is_dissipative(tol):
            raise HypothesisError("Re q is not non-positive")
    if S0.d > 0:
        msg = f"0 is a real eigenvalue of F (dim Ker F cap R^2n = {S0.d})"
        if elliptic and check:
            raise HypothesisError(msg + ", which contradicts ellipticity on S")
        report.diagnostics.append(msg)
    if S.d == 0:
        return report

    ev = np.linalg.eigvals(F)
    real_ev = ev[np.abs(ev.imag) <= tol.real * (1 + np.abs(ev))].real
    positives = np.sort(np.abs(real_ev[np.abs(real_ev) > tol.real]))
    lambdas: list[float] = []
    for lam in positives:
        if not lambdas or lam - lambdas[-1] > math.sqrt(tol.real) * (1 + lam):
            lambdas.append(float(lam))
    scale = np.linalg.norm(F, 2) ** 2
    blocks = []
    for lam in lambdas:
        M = F @ F - lam ** 2 * np.eye(2 * n)
        K = null_space(np.vstack([M.real, M.imag]), tol.rank, scale=max(scale, 1e-300))
        blocks.append(SubspaceBasis(n, K))
    report.real_eigenvalues_of_F = lambdas
    report.blocks = blocks

    if sum(b.d for b in blocks) != S.d:
        report.diagnostics.append(
            f"block dimensions {[b.d for b in blocks]} do not add up to dim S = {S.d}")
    J = symplectic_matrix(n)
    for a in range(len(blocks)):
        for b in range(a + 1, len(blocks)):
            cross = np.max(np.abs(blocks[a].vectors.T @ J @ blocks[b].vectors))
            if cross > 1e-8:
                report.diagnostics.append(f"blocks {a} and {b} are not sigma-orthogonal ({cross:.2e})")
    return report


def analyze_singular_space(q: QuadraticForm, tol: Tolerances = DEFAULT) -> SingularSpaceReport:
    """Full singular-space analysis of ``q``, without raising on failed hypotheses."""
    F = hamilton_map(q)
    S = compute_singular_space(F, tol)
    elliptic, _ = check_partial_ellipticity(q, S, tol)
    if elliptic and q.is_dissipative(tol):
        try:
            report = real_eigen_blocks(q, S, tol)
        except HypothesisError as exc:
            report = real_eigen_blocks(q, S, tol, check=False)
            report.diagnostics.append(str(exc))
    else:
        report = real_eigen_blocks(q, S, tol, check=False)
    if report.is_partially_elliptic and not report.is_symplectic:
        report.diagnostics.append("partially elliptic but S is not symplectic: numerical inconsistency")
    return report
