"""Complex quadratic forms on phase space and their Hamilton maps.

Coordinates on R^{2n} are always ordered ``(x_1, ..., x_n, xi_1, ..., xi_n)``.
A form is stored as a complex symmetric matrix ``Q`` with ``q(X) = X^T Q X``,
so the polarized form is ``q(X; Y) = X^T Q Y``.  The symplectic form is

    sigma((x, xi), (y, eta)) = xi . y - x . eta = X^T J Y,   J = [[0, -I], [I, 0]],

and the Hamilton map is the matrix ``F = J^{-1} Q`` characterised by
``q(X; Y) = sigma(X, F Y)``.
"""

from __future__ import annotations

import itertools
import math
import warnings
from dataclasses import dataclass, field

import numpy as np
import scipy.optimize

from .errors import DimensionError, HypothesisError, PreconditionError
from .tolerances import DEFAULT, Tolerances


def symplectic_matrix(n: int) -> np.ndarray:
    """Matrix ``J`` of the canonical symplectic form on R^{2n}."""
    eye = np.eye(n)
    zero = np.zeros((n, n))
    return np.block([[zero, -eye], [eye, zero]])


def sigma(X, Y) -> complex:
    """Canonical symplectic form ``sigma(X, Y) = xi . y - x . eta``."""
    X = np.asarray(X)
    Y = np.asarray(Y)
    n = X.shape[0] // 2
    return X[n:] @ Y[:n] - X[:n] @ Y[n:]


class QuadraticForm:
    """A complex-valued quadratic form ``q(X) = X^T Q X`` on R^{2n}.

    Parameters
    ----------
    Q : array_like, shape (2n, 2n)
        Matrix of the form.  A non-symmetric input is replaced by its
        symmetric part, with a warning.
    require_dissipative : bool
        If true, check that ``Re q <= 0`` and raise
        :class:`~quadspec.errors.HypothesisError` otherwise.
    """

    def __init__(self, Q, *, require_dissipative: bool = False, tol: Tolerances = DEFAULT):
        Q = np.array(Q, dtype=complex)
        if Q.ndim != 2 or Q.shape[0] != Q.shape[1] or Q.shape[0] % 2 or Q.shape[0] == 0:
            raise DimensionError(f"expected a (2n, 2n) matrix, got shape {Q.shape}")
        asym = np.max(np.abs(Q - Q.T))
        if asym > 0:
            if asym > 1e-14 * max(1.0, np.max(np.abs(Q))):
                warnings.warn("quadratic form matrix is not symmetric; using its symmetric part",
                              stacklevel=2)
            Q = 0.5 * (Q + Q.T)
        Q.setflags(write=False)
        self._Q = Q
        self.n = Q.shape[0] // 2
        if require_dissipative and not self.is_dissipative(tol):
            raise HypothesisError(
                f"Re q is not non-positive: largest eigenvalue of Re Q is "
                f"{self.max_real_eigenvalue():.3e}")

    @property
    def Q(self) -> np.ndarray:
        return self._Q

    @classmethod
    def from_parts(cls, re, im=None, **kwargs) -> "QuadraticForm":
        re = np.asarray(re, dtype=float)
        im = np.zeros_like(re) if im is None else np.asarray(im, dtype=float)
        return cls(re + 1j * im, **kwargs)

    @classmethod
    def zero(cls, n: int) -> "QuadraticForm":
        return cls(np.zeros((2 * n, 2 * n)))

    @property
    def real(self) -> "QuadraticForm":
        return QuadraticForm(self._Q.real)

    @property
    def imag(self) -> "QuadraticForm":
        return QuadraticForm(self._Q.imag)

    def max_real_eigenvalue(self) -> float:
        return float(np.linalg.eigvalsh(self._Q.real)[-1])

    def is_dissipative(self, tol: Tolerances = DEFAULT) -> bool:
        """True when ``Re Q`` is negative semidefinite up to ``tol.dissipative * ||Q||``."""
        scale = max(np.linalg.norm(self._Q, 2), 1e-300)
        return self.max_real_eigenvalue() <= tol.dissipative * scale

    def compose(self, chi) -> "QuadraticForm":
        """The form ``q o chi`` for a real linear map ``chi``."""
        chi = np.asarray(chi, dtype=float)
        return QuadraticForm(chi.T @ self._Q @ chi)

    def __call__(self, X) -> complex:
        return evaluate(self, X)

    def __add__(self, other: "QuadraticForm") -> "QuadraticForm":
        _check_same_n(self, other)
        return QuadraticForm(self._Q + other._Q)

    def __sub__(self, other: "QuadraticForm") -> "QuadraticForm":
        _check_same_n(self, other)
        return QuadraticForm(self._Q - other._Q)

    def __mul__(self, c) -> "QuadraticForm":
        return QuadraticForm(c * self._Q)

    __rmul__ = __mul__

    def __neg__(self) -> "QuadraticForm":
        return QuadraticForm(-self._Q)

    def __repr__(self) -> str:
        return f"QuadraticForm(n={self.n})"

    def to_json(self) -> dict:
        return {"n": self.n, "Q_re": self._Q.real.tolist(), "Q_im": self._Q.imag.tolist()}

    @classmethod
    def from_json(cls, data: dict, **kwargs) -> "QuadraticForm":
        """Build a form from the ``{"n", "Q_re", "Q_im"}`` schema."""
        try:
            n = int(data["n"])
            re = np.asarray(data["Q_re"], dtype=float)
            im = np.asarray(data.get("Q_im", np.zeros_like(re)), dtype=float)
        except (KeyError, TypeError, ValueError) as exc:
            raise DimensionError(f"malformed quadratic form record: {exc}") from exc
        if n < 1 or re.shape != (2 * n, 2 * n) or im.shape != (2 * n, 2 * n):
            raise DimensionError(
                f"Q_re/Q_im must be {2 * n}x{2 * n} for n={n}, got {re.shape} and {im.shape}")
        return cls(re + 1j * im, **kwargs)


def _check_same_n(q1: QuadraticForm, q2: QuadraticForm) -> None:
    if q1.n != q2.n:
        raise DimensionError(f"forms live on R^{2 * q1.n} and R^{2 * q2.n}")


def evaluate(q: QuadraticForm, X) -> complex:
    """Value ``X^T Q X`` of the form at a (real or complex) point."""
    X = np.asarray(X)
    if X.shape != (2 * q.n,):
        raise DimensionError(f"point must have length {2 * q.n}, got shape {X.shape}")
    return complex(X @ q.Q @ X)


def polarize(q: QuadraticForm, X, Y) -> complex:
    X = np.asarray(X)
    Y = np.asarray(Y)
    return complex(X @ q.Q @ Y)


@dataclass(frozen=True, eq=False)
class HamiltonMap:
    """Hamilton map ``F`` of a form: ``q(X; Y) = sigma(X, F Y)``."""

    F: np.ndarray
    parent: QuadraticForm = field(repr=False)

    @property
    def n(self) -> int:
        return self.parent.n

    @property
    def real(self) -> np.ndarray:
        return self.F.real

    @property
    def imag(self) -> np.ndarray:
        return self.F.imag

    def skew_residual(self) -> float:
        """Relative size of ``(J F)^T - J F``; zero for a genuine Hamilton map."""
        JF = symplectic_matrix(self.n) @ self.F
        return float(np.max(np.abs(JF.T - JF)) / max(np.max(np.abs(JF)), 1e-300))


def hamilton_map(q: QuadraticForm) -> HamiltonMap:
    # J^{-1} = -J, so F = -J Q: the rows of F are (Q_xi, -Q_x).
    n = q.n
    F = np.vstack([q.Q[n:], -q.Q[:n]])
    F.setflags(write=False)
    return HamiltonMap(F, q)


def poisson_bracket(q1: QuadraticForm, q2: QuadraticForm) -> QuadraticForm:
    """Poisson bracket ``{q1, q2} = d_xi q1 . d_x q2 - d_x q1 . d_xi q2``.

    With ``grad q = 2 Q X`` the bracket is ``4 X^T Q1 J Q2 X``, whose
    symmetric matrix is ``2 (Q1 J Q2 - Q2 J Q1)``.
    """
    _check_same_n(q1, q2)
    J = symplectic_matrix(q1.n)
    A = q1.Q @ J @ q2.Q
    # A - A^T written out so that {q, q} is exactly zero
    return QuadraticForm(2.0 * (A - q2.Q @ J @ q1.Q))


# --------------------------------------------------------------------------
# numerical range


@dataclass(frozen=True)
class NumericalRangeCone:
    """Directions of the closed cone ``Sigma(q)`` spanned by the values of ``q``.

    ``arcs`` are closed angular intervals ``(start, end)`` in radians, taken
    counter-clockwise, with ``0 <= start < 2 pi`` and ``start <= end < start + 2 pi``.
    """

    arcs: tuple[tuple[float, float], ...]
    full: bool
    angle_tol: float

    def contains(self, z: complex, angle_tol: float | None = None) -> bool:
        if z == 0:
            return True
        if self.full:
            return True
        tol = self.angle_tol if angle_tol is None else angle_tol
        theta = math.atan2(z.imag, z.real) % (2 * math.pi)
        for start, end in self.arcs:
            rel = (theta - start) % (2 * math.pi)
            if rel <= end - start + tol or rel >= 2 * math.pi - tol:
                return True
        return False

    def is_whole_plane(self) -> bool:
        return self.full

    def to_json(self) -> dict:
        return {"arcs": [list(a) for a in self.arcs], "full": self.full,
                "angle_tol": self.angle_tol}


def sphere_points(dim: int, samples: int, seed: int = 0) -> np.ndarray:
    """Quasi-uniform points on the unit sphere of R^dim (rows).

    Coordinate axes and the diagonals ``(e_i +- e_j)/sqrt 2`` are always
    included, topped up with seeded Gaussian directions.
    """
    pts = [np.eye(dim), -np.eye(dim)]
    for i, j in itertools.combinations(range(dim), 2):
        for s in (1.0, -1.0):
            v = np.zeros(dim)
            v[i], v[j] = 1.0, s
            pts.append((v / math.sqrt(2))[None, :])
            pts.append((-v / math.sqrt(2))[None, :])
    fixed = np.vstack(pts)
    extra = max(samples - fixed.shape[0], 0)
    rng = np.random.default_rng(seed)
    g = rng.standard_normal((extra, dim))
    g /= np.linalg.norm(g, axis=1, keepdims=True)
    return np.vstack([fixed, g])


def _push_endpoint(q: QuadraticForm, X0: np.ndarray, center: float, sign: float,
                   floor: float) -> float:
    """Extend an arc endpoint by a local search on the sphere.

    Maximises ``sign * (arg q(X) - center)`` starting from ``X0``; points
    where ``|q|`` falls below ``floor`` are rejected.
    """
    Q = q.Q

    def objective(X):
        nrm = np.linalg.norm(X)
        if nrm == 0:
            return math.pi
        X = X / nrm
        v = X @ Q @ X
        if abs(v) <= floor:
            return math.pi
        rel = (math.atan2(v.imag, v.real) - center + math.pi) % (2 * math.pi) - math.pi
        return -sign * rel

    res = scipy.optimize.minimize(objective, X0, method="Nelder-Mead",
                                  options={"xatol": 1e-12, "fatol": 1e-13,
                                           "maxiter": 4000 * X0.size})
    best = min(res.fun, objective(X0))
    return center - sign * best


def numerical_range_cone(q: QuadraticForm, samples: int = 4000, *,
                         gap: float = 0.1, angle_tol: float = 1e-3,
                         zero_tol: float = 1e-12, seed: int = 0,
                         refine: bool = True) -> NumericalRangeCone:
    """Sample the values of ``q`` on the unit sphere and collect their arguments.

    Since ``q`` is homogeneous of degree two, ``Sigma(q)`` is the closed cone
    generated by these values.  Sampled arguments closer than ``gap`` are
    merged into one arc.  With ``refine`` each arc endpoint is then pushed
    outwards by a local search, which recovers boundary rays that are only
    reached in the limit ``|q| -> 0``.
    """
    dim = 2 * q.n
    if samples < dim:
        raise PreconditionError(f"need at least {dim} samples, got {samples}")
    P = sphere_points(dim, samples, seed)
    vals = np.einsum("ij,jk,ik->i", P, q.Q, P)
    scale = np.max(np.abs(vals)) if vals.size else 0.0
    if scale == 0.0:
        return NumericalRangeCone((), False, angle_tol)
    keep = np.abs(vals) > zero_tol * scale
    P = P[keep]
    theta = np.mod(np.angle(vals[keep]), 2 * math.pi)
    # snap values that land within rounding of 2 pi back to 0
    theta[theta > 2 * math.pi - 1e-15] = 0.0
    order = np.argsort(theta)
    theta, P = theta[order], P[order]
    gaps = np.diff(np.concatenate([theta, [theta[0] + 2 * math.pi]]))
    big = np.nonzero(gaps > gap)[0]
    if big.size == 0:
        return NumericalRangeCone((), True, angle_tol)
    arcs = []
    m = theta.size
    for k in range(big.size):
        # arc runs from the point after gap big[k-1] to the point before gap big[k]
        i0, i1 = (big[k - 1] + 1) % m, big[k]
        start, end = float(theta[i0]), float(theta[i1])
        if end < start:
            end += 2 * math.pi
        if refine:
            center = 0.5 * (start + end)
            floor = zero_tol * scale
            end = max(end, _push_endpoint(q, P[i1], center, 1.0, floor))
            start = min(start, _push_endpoint(q, P[i0], center, -1.0, floor))
        arcs.append([start, end])
    return _merge_arcs(arcs, angle_tol)


def _merge_arcs(arcs: list[list[float]], angle_tol: float) -> NumericalRangeCone:
    two_pi = 2 * math.pi
    norm = []
    for start, end in arcs:
        if end - start >= two_pi:
            return NumericalRangeCone((), True, angle_tol)
        shift = math.floor(start / two_pi) * two_pi
        norm.append([start - shift, end - shift])
    norm.sort()
    merged = [norm[0]]
    for start, end in norm[1:]:
        if start <= merged[-1][1]:
            merged[-1][1] = max(merged[-1][1], end)
        else:
            merged.append([start, end])
    # wrap-around overlap between the last and first arc
    if len(merged) > 1 and merged[-1][1] >= merged[0][0] + two_pi:
        merged[0] = [merged[-1][0], max(merged[-1][1], merged[0][1] + two_pi)]
        merged.pop()
    if sum(e - s for s, e in merged) >= two_pi - angle_tol:
        return NumericalRangeCone((), True, angle_tol)
    return NumericalRangeCone(tuple((float(s), float(e)) for s, e in merged), False, angle_tol)


# --------------------------------------------------------------------------
# order of a symbol

INFINITE = "infinite up to j_max"


def _words(length: int):
    return itertools.product((0, 1), repeat=length)


def symbol_order(q: QuadraticForm, z: complex, X0, j_max: int | None = None, *,
                 atol: float = 1e-10):
    """Order of ``p = q - z`` at a characteristic point ``X0``.

    Returns the largest ``j`` such that every iterated bracket ``p_I`` with
    ``1 <= |I| <= j`` vanishes at ``X0``, or :data:`INFINITE` if all words of
    length up to ``j_max + 1`` vanish.  ``j_max`` defaults to ``4n - 2``.
    """
    X0 = np.asarray(X0, dtype=float)
    if X0.shape != (2 * q.n,):
        raise DimensionError(f"X0 must have length {2 * q.n}")
    if j_max is None:
        j_max = 4 * q.n - 2
    scale = max(np.linalg.norm(q.Q, 2) * (X0 @ X0), abs(z), 1.0)
    if abs(evaluate(q, X0) - z) > atol * scale:
        raise PreconditionError(f"q(X0) = {evaluate(q, X0)} differs from z = {z}")

    parts = (q.real, q.imag)
    # Brackets only see the quadratic parts: constants Re z, Im z drop out.
    # cache[word] holds H_{p_i1} ... H_{p_i(k-1)} p_ik as a quadratic form
    cache = {(0,): parts[0], (1,): parts[1]}
    for length in range(2, j_max + 2):
        for word in _words(length):
            inner = cache[word[1:]]
            form = poisson_bracket(parts[word[0]], inner)
            cache[word] = form
            val = evaluate(form, X0).real
            if abs(val) > atol * max(np.linalg.norm(form.Q, 2), 1.0) * max(X0 @ X0, 1e-300):
                return length - 1
    return INFINITE
