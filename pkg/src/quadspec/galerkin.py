"""Hermite-Galerkin matrices of quadratic Weyl operators.

The operator ``q(x, xi)^w`` is compressed onto the span of the Hermite
functions ``phi_gamma``, ``|gamma| <= N``.  With ladder operators

    x_j = (a_j + a_j^+) / sqrt(2),    D_j = (a_j - a_j^+) / (i sqrt(2)),

the Weyl quantization of ``X^T Q X`` is ``sum_ab Q_ab A_a A_b`` (symmetric
ordering, since ``Q`` is symmetric), and every entry of the compressed
matrix is an exact finite combination of the coefficients
``sqrt(gamma_j)`` and ``sqrt(gamma_j + 1)``.  Products are formed on the
basis of degree ``N + 1`` and then restricted, so no truncation error
enters the matrix itself.

Basis order is graded lexicographic: by total degree, then by decreasing
``gamma_1``, ``gamma_2``, ...  Eigenvalue lists are canonicalised by sorting
on decreasing real part, then increasing imaginary part.
"""

from __future__ import annotations

import csv
import io
import math
import warnings
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
import scipy.linalg
import scipy.sparse as sp
import scipy.special

from .decomposition import SymplecticSplit
from .errors import DimensionError, PreconditionError
from .quadform import QuadraticForm, symplectic_matrix
from .tolerances import DEFAULT, Tolerances

#: dense eigenvalue problems above this size are refused
MAX_DENSE_DIM = 8000


@lru_cache(maxsize=32)
def hermite_multi_indices(n: int, N: int) -> tuple[tuple[int, ...], ...]:
    """Multi-indices ``gamma`` with ``|gamma| <= N`` in graded lexicographic order."""

    def level(k: int, slots: int):
        if slots == 1:
            yield (k,)
            return
        for first in range(k, -1, -1):
            for rest in level(k - first, slots - 1):
                yield (first,) + rest

    return tuple(g for k in range(N + 1) for g in level(k, n))


def basis_dim(n: int, N: int) -> int:
    return math.comb(N + n, n)


@lru_cache(maxsize=16)
def _ladder_ops(n: int, N: int) -> tuple[sp.csr_matrix, ...]:
    """Matrices of ``x_1..x_n, D_1..D_n`` on the basis ``|gamma| <= N``.

    Entries that would leave the basis are dropped, so products are only
    exact on vectors of degree at most ``N - 1``.
    """
    basis = hermite_multi_indices(n, N)
    index = {g: i for i, g in enumerate(basis)}
    dim = len(basis)
    ops = []
    for j in range(n):
        rows, cols, lower, raise_ = [], [], [], []
        for c, g in enumerate(basis):
            h = list(g)
            h[j] += 1
            r = index.get(tuple(h))
            if r is not None:
                # a_j^+ phi_g = sqrt(g_j + 1) phi_{g + e_j};  a_j phi_h = sqrt(h_j) phi_{h - e_j}
                rows += [r, c]
                cols += [c, r]
                coef = math.sqrt(g[j] + 1) / math.sqrt(2)
                raise_ += [coef, 0.0]
                lower += [0.0, coef]
        rows = np.array(rows, dtype=int)
        cols = np.array(cols, dtype=int)
        up = sp.csr_matrix((np.array(raise_), (rows, cols)), shape=(dim, dim))
        down = sp.csr_matrix((np.array(lower), (rows, cols)), shape=(dim, dim))
        ops.append(((up + down).tocsr(), (-1j * (down - up)).tocsr()))
    xs = tuple(o[0] for o in ops)
    ds = tuple(o[1] for o in ops)
    return xs + ds


def _weyl_on(q: QuadraticForm, N: int, N_out: int | None = None) -> sp.csr_matrix:
    """Weyl matrix from degree ``<= N`` to degree ``<= N_out`` (default ``N``), exact."""
    n = q.n
    N_out = N if N_out is None else N_out
    ext = max(N, N_out) + 1
    A = _ladder_ops(n, ext)
    d_in = basis_dim(n, N)
    d_out = basis_dim(n, N_out)
    left = [a[:d_out, :] for a in A]
    right = [a[:, :d_in] for a in A]
    Q = q.Q
    M = sp.csr_matrix((d_out, d_in), dtype=complex)
    for a in range(2 * n):
        for b in range(a, 2 * n):
            c = Q[a, b]
            if c == 0:
                continue
            if a == b:
                M = M + c * (left[a] @ right[a])
            else:
                M = M + c * (left[a] @ right[b] + left[b] @ right[a])
    M.eliminate_zeros()
    return M.tocsr()


@dataclass(eq=False)
class GalerkinOperator:
    n: int
    N: int
    M: sp.csr_matrix

    @property
    def dim(self) -> int:
        return self.M.shape[0]

    @property
    def basis(self) -> tuple[tuple[int, ...], ...]:
        return hermite_multi_indices(self.n, self.N)

    def dense(self) -> np.ndarray:
        return self.M.toarray()

    def numerical_abscissa(self) -> float:
        """Largest eigenvalue of the Hermitian part ``(M + M^*) / 2``."""
        A = self.dense()
        return float(np.linalg.eigvalsh(0.5 * (A + A.conj().T))[-1])

    def band_violations(self) -> int:
        """Number of non-zero entries coupling indices that a quadratic symbol cannot couple."""
        basis = np.array(self.basis)
        coo = self.M.tocoo()
        keep = np.abs(coo.data) > 0
        gi = basis[coo.row[keep]]
        gj = basis[coo.col[keep]]
        deg = np.abs(gi.sum(axis=1) - gj.sum(axis=1))
        inf = np.max(np.abs(gi - gj), axis=1)
        return int(np.sum((deg > 2) | (inf > 2) | (deg % 2 == 1)))


def weyl_matrix(q: QuadraticForm, N: int) -> GalerkinOperator:
    """Compression of ``q(x, xi)^w`` onto the Hermite functions of degree ``<= N``."""
    if N < 2:
        raise PreconditionError("truncation degree N must be at least 2")
    return GalerkinOperator(q.n, N, _weyl_on(q, N))


def _sorted_eigs(values: np.ndarray) -> np.ndarray:
    idx = np.lexsort((values.imag, -values.real))
    return values[idx]


def _dense_eigvals(op: GalerkinOperator) -> np.ndarray:
    if op.dim > MAX_DENSE_DIM:
        raise DimensionError(f"Galerkin dimension {op.dim} exceeds {MAX_DENSE_DIM}; lower N")
    return _sorted_eigs(scipy.linalg.eigvals(op.dense()))


@dataclass(eq=False)
class ConvergedEigenvalues:
    values: np.ndarray
    movements: np.ndarray
    N: int
    dN: int
    requested: int
    candidates: np.ndarray = field(default_factory=lambda: np.zeros(0, complex))
    converged_flags: np.ndarray = field(default_factory=lambda: np.zeros(0, bool))

    def to_json(self) -> dict:
        return {"N": self.N, "dN": self.dN, "requested": self.requested,
                "values": [[v.real, v.imag] for v in self.values],
                "movements": self.movements.tolist()}

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf)
        w.writerow(["re", "im", "converged_flag"])
        for v, ok in zip(self.candidates, self.converged_flags):
            w.writerow([repr(float(v.real)), repr(float(v.imag)), int(ok)])
        return buf.getvalue()


def numerical_spectrum(q: QuadraticForm, N: int, dN: int = 10, k: int = 10,
                       tol: Tolerances = DEFAULT) -> ConvergedEigenvalues:
    """Eigenvalues of the truncation that survive a change of truncation.

    The ``k`` eigenvalues of largest real part at degree ``N`` are paired
    with their nearest neighbours at degree ``N + dN``; pairs that moved
    less than ``tol.conv * (1 + |value|)`` are accepted and the finer value
    is returned.
    """
    if k > basis_dim(q.n, N):
        raise PreconditionError(f"k = {k} exceeds the basis dimension {basis_dim(q.n, N)}")
    coarse = _dense_eigvals(weyl_matrix(q, N))[:k]
    fine = _dense_eigvals(weyl_matrix(q, N + dN))
    vals, moves, flags = [], [], []
    for v in coarse:
        j = int(np.argmin(np.abs(fine - v)))
        move = abs(fine[j] - v)
        ok = move < tol.conv * (1 + abs(v))
        flags.append(ok)
        if ok:
            vals.append(fine[j])
            moves.append(move)
    if len(vals) < k:
        warnings.warn(f"only {len(vals)} of {k} eigenvalues converged between N={N} and N={N + dN}",
                      stacklevel=2)
    vals = np.array(vals, dtype=complex)
    order = np.lexsort((vals.imag, -vals.real)) if vals.size else np.zeros(0, int)
    return ConvergedEigenvalues(vals[order], np.array(moves)[order], N, dN, k,
                                coarse, np.array(flags, dtype=bool))


def match_to_lattice(values, predicted, tol_match: float) -> tuple[bool, list[tuple[complex, complex, float]]]:
    """Bijective nearest matching of computed eigenvalues to predicted points.

    ``predicted`` may repeat a value to represent multiplicity.  Returns
    whether every computed value found a distinct partner within
    ``tol_match`` and the matched triples ``(computed, predicted, distance)``.
    """
    from scipy.optimize import linear_sum_assignment

    values = np.asarray(values, dtype=complex)
    predicted = np.asarray(predicted, dtype=complex)
    if values.size == 0:
        return True, []
    if predicted.size < values.size:
        return False, []
    cost = np.abs(values[:, None] - predicted[None, :])
    rows, cols = linear_sum_assignment(cost)
    triples = [(complex(values[r]), complex(predicted[c]), float(cost[r, c])) for r, c in zip(rows, cols)]
    return all(t[2] <= tol_match for t in triples), triples


# --------------------------------------------------------------------------
# semigroup


def semigroup_norm_curve(q: QuadraticForm | GalerkinOperator, N: int | None = None,
                         times=(0.0, 1.0)) -> list[tuple[float, float]]:
    """``(t, ||exp(t M)||_2)`` for the Galerkin matrix ``M``.

    Matrix exponentials use scaling and squaring (``scipy.linalg.expm``).
    """
    op = q if isinstance(q, GalerkinOperator) else weyl_matrix(q, N)
    A = op.dense()
    norm_A = np.linalg.norm(A, 1)
    out = []
    for t in times:
        t = float(t)
        if t < 0:
            raise PreconditionError("times must be non-negative")
        if t * norm_A > 1e4:
            raise OverflowError(f"t ||M|| = {t * norm_A:.3g} is too large for a stable exponential")
        E = scipy.linalg.expm(t * A)
        out.append((t, float(np.linalg.norm(E, 2))))
    return out


def curve_to_csv(curve) -> str:
    buf = io.StringIO()
    w = csv.writer(buf)
    w.writerow(["t", "norm"])
    for t, v in curve:
        w.writerow([repr(float(t)), repr(float(v))])
    return buf.getvalue()


def decay_fit(curve, t_window: tuple[float, float]) -> float:
    """Least-squares rate ``-d/dt log ||exp(tM)||`` over a time window."""
    t0, t1 = t_window
    pts = [(t, v) for t, v in curve if t0 <= t <= t1]
    if len(pts) < 5:
        raise PreconditionError("decay fit needs at least 5 samples in the window")
    t = np.array([p[0] for p in pts])
    v = np.array([p[1] for p in pts])
    if np.any(v <= 0):
        raise PreconditionError("norm curve must be positive on the window")
    slope = np.polyfit(t, np.log(v), 1)[0]
    return float(-slope)


# --------------------------------------------------------------------------
# smoothing


def weight_form(split: SymplecticSplit | None, n: int) -> QuadraticForm:
    """``|x'|^2 + |xi'|^2`` written in the original coordinates.

    With ``Y = chi^{-1} X`` the primed coordinates of ``Y`` are selected,
    so the matrix is ``chi^{-T} P chi^{-1}``.
    """
    if split is None:
        return QuadraticForm(np.eye(2 * n))
    P = np.zeros(2 * n)
    P[split.primed_indices()] = 1.0
    inv = np.linalg.inv(split.chi)
    return QuadraticForm((inv.T * P) @ inv)


def moyal_square_constant(G: np.ndarray) -> float:
    """Constant ``c`` with ``(g^2)^w = (g^w)^2 + c`` for ``g(X) = X^T G X``.

    The Moyal product of a quadratic symbol with itself stops at second
    order, which gives ``c = -tr(G J G J) / 2``.
    """
    J = symplectic_matrix(G.shape[0] // 2)
    return float(-0.5 * np.trace(G @ J @ G @ J))


def apply_weight(g: QuadraticForm, p: int, v: np.ndarray, N: int) -> np.ndarray:
    """``((1 + g)^p)^w v`` for a vector of Hermite coefficients of degree ``<= N``.

    The result lives on degree ``<= N + 2p`` and is exact.
    """
    if p not in (1, 2):
        raise PreconditionError("weight powers p > 2 are not supported (p must be 1 or 2)")
    n = g.n
    Nout = N + 2 * p
    d_out = basis_dim(n, Nout)
    w = np.zeros(d_out, dtype=complex)
    w[: v.size] = v
    G = _weyl_on(g, Nout)
    gv = G @ w
    if p == 1:
        return w + gv
    c = moyal_square_constant(g.Q.real)
    return (1.0 + c) * w + 2.0 * gv + G @ gv


def rough_vector(n: int, N: int, p: int, seed: int = 0) -> np.ndarray:
    """Seeded unit vector that lies in L^2 but not in the p-weighted space.

    The coefficient of ``phi_gamma`` is ``exp(i theta_gamma) (|gamma| + 1)^{-alpha}``
    with ``alpha = p + n/2 - 0.15`` and a phase drawn from a generator keyed
    by ``(seed, gamma)``, so coefficients do not depend on ``N``.  The
    p-weighted norm of the projection onto degree ``<= N`` grows like
    ``N^{0.15}``.  Scaled so that the untruncated vector has unit norm.
    """
    alpha = p + n / 2 - 0.15
    basis = hermite_multi_indices(n, N)
    out = np.empty(len(basis), dtype=complex)
    for i, g in enumerate(basis):
        theta = 2 * math.pi * np.random.default_rng([seed, *g]).random()
        out[i] = np.exp(1j * theta) * (sum(g) + 1) ** (-alpha)
    k = np.arange(0, 200000, dtype=float)
    total = np.sum(scipy.special.comb(k + n - 1, n - 1) * (k + 1) ** (-2 * alpha))
    return out / math.sqrt(total)


@dataclass(frozen=True)
class SmoothingRow:
    vector: str
    p: int
    t: float
    N: int
    N_fine: int
    value: float
    value_fine: float

    @property
    def relative_change(self) -> float:
        return abs(self.value_fine - self.value) / max(abs(self.value_fine), 1e-300)

    def stabilized(self, rtol: float = 0.01) -> bool:
        return self.relative_change < rtol

    def to_json(self) -> dict:
        return {"vector": self.vector, "p": self.p, "t": self.t, "N": self.N,
                "N_fine": self.N_fine, "value": self.value, "value_fine": self.value_fine,
                "relative_change": self.relative_change, "stabilized": self.stabilized(),
                "rtol": 0.01}


def smoothing_diagnostic(q: QuadraticForm, split: SymplecticSplit | None, N: int, t: float,
                         p: int = 1, *, dN: int = 10, seed: int = 0) -> list[SmoothingRow]:
    """Weighted norms ``||((1 + |x'|^2 + |xi'|^2)^p)^w exp(t M) u0||`` at two truncations.

    Two initial vectors are used: the first Hermite function and
    :func:`rough_vector`.  A value that stabilises between ``N`` and
    ``N + dN`` indicates that the evolved state has the weighted regularity.
    """
    if t < 0:
        raise PreconditionError("t must be non-negative")
    if p not in (1, 2):
        raise PreconditionError("weight powers p > 2 are not supported (p must be 1 or 2)")
    g = weight_form(split, q.n)
    values: dict[str, list[float]] = {"ground": [], "rough": []}
    for NN in (N, N + dN):
        d = basis_dim(q.n, NN)
        E = scipy.linalg.expm(t * weyl_matrix(q, NN).dense()) if t > 0 else None
        ground = np.zeros(d, dtype=complex)
        ground[0] = 1.0
        for name, u0 in (("ground", ground), ("rough", rough_vector(q.n, NN, p, seed))):
            u = u0 if E is None else E @ u0
            values[name].append(float(np.linalg.norm(apply_weight(g, p, u, NN))))
    return [SmoothingRow(name, p, float(t), N, N + dN, v[0], v[1]) for name, v in values.items()]
