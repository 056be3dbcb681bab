import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from builders import constructed_family, glue, kfp, random_definite, random_symplectic
from quadspec import (
    HypothesisError,
    PreconditionError,
    QuadraticForm,
    SubspaceBasis,
    Tolerances,
    analyze_singular_space,
    check_partial_ellipticity,
    compute_singular_space,
    hamilton_map,
    is_symplectic,
    principal_angles,
    real_eigen_blocks,
    symplectic_basis,
    symplectic_complement,
    symplectic_matrix,
)
from quadspec.singular import pairs_to_matrix, symplectic_gram


def S_of(q):
    return compute_singular_space(hamilton_map(q))


# ---------------------------------------------------------------- singular space

def test_kfp_singular_space_trivial():
    assert S_of(kfp()).d == 0


def test_minus_x2_singular_space_is_xi_axis():
    S = S_of(QuadraticForm(np.diag([-1.0, 0.0])))
    assert S.d == 1
    assert S.contains([0.0, 1.0])


@pytest.mark.parametrize("n", [1, 2, 3])
def test_purely_imaginary_has_full_singular_space(n):
    rng = np.random.default_rng(n)
    A = rng.standard_normal((2 * n, 2 * n))
    assert S_of(QuadraticForm(1j * (A + A.T))).d == 2 * n


def test_zero_form_singular_space_is_everything():
    assert S_of(QuadraticForm.zero(2)).d == 4


def test_negative_definite_singular_space_trivial():
    assert S_of(QuadraticForm(-np.eye(6))).d == 0


@settings(max_examples=30, deadline=None)
@given(st.integers(1, 2), st.integers(1, 2), st.integers(0, 2**32 - 1))
def test_singular_space_stability(n1, n2, seed):
    q, *_ = constructed_family(n1, n2, np.random.default_rng(seed))
    F = hamilton_map(q)
    S = S_of(q).vectors
    scale = np.linalg.norm(F.F, 2)
    assert np.linalg.norm(F.real @ S) < 1e-10 * scale
    # Im F maps S into S
    im = F.imag @ S
    assert np.linalg.norm(im - S @ (S.T @ im)) < 1e-10 * scale


@settings(max_examples=30, deadline=None)
@given(st.integers(1, 2), st.integers(0, 2), st.integers(0, 2**32 - 1))
def test_singular_space_round_trip(n1, n2, seed):
    q, S_true, *_ = constructed_family(n1, n2, np.random.default_rng(seed))
    S = S_of(q)
    truth = SubspaceBasis.from_spanning(n1 + n2, S_true)
    assert S.d == 2 * n2
    assert np.all(principal_angles(S, truth) < 1e-8)


def test_orthonormal_columns():
    q, *_ = constructed_family(2, 1, np.random.default_rng(7))
    V = S_of(q).vectors
    assert np.allclose(V.T @ V, np.eye(V.shape[1]), atol=1e-12)


# ---------------------------------------------------------------- symplecticity

def test_is_symplectic_examples():
    assert is_symplectic(S_of(kfp()))
    assert not is_symplectic(S_of(QuadraticForm(np.diag([-1.0, 0.0]))))
    assert is_symplectic(SubspaceBasis.full(3))
    # a Lagrangian plane is as far from symplectic as possible
    assert not is_symplectic(SubspaceBasis(2, np.eye(4)[:, :2]))


def test_symplectic_complement_of_coordinate_plane():
    B = SubspaceBasis(2, np.eye(4)[:, [0, 2]])
    C = symplectic_complement(B)
    assert C.d == 2
    assert np.all(principal_angles(C, SubspaceBasis(2, np.eye(4)[:, [1, 3]])) < 1e-12)


# ---------------------------------------------------------------- ellipticity

def test_ellipticity_minus_x2():
    q = QuadraticForm(np.diag([-1.0, 0.0]))
    ok, margin = check_partial_ellipticity(q, S_of(q))
    assert not ok and margin == 0.0


def test_ellipticity_imaginary_harmonic():
    q = QuadraticForm(1j * np.eye(2))
    ok, margin = check_partial_ellipticity(q, S_of(q))
    assert ok and abs(margin - 1.0) < 1e-12


def test_ellipticity_trivial_space():
    ok, margin = check_partial_ellipticity(kfp(), S_of(kfp()))
    assert ok and math.isinf(margin)


def test_ellipticity_ix2_degenerate():
    q = QuadraticForm(np.diag([1j, 0.0]))
    ok, margin = check_partial_ellipticity(q, S_of(q))
    assert not ok and margin == 0.0


def test_ellipticity_general_subspace():
    # q = -x^2 + i xi^2 + 2i x xi on R^2: q(X) = 0 only at X = 0
    q = QuadraticForm(np.array([[-1.0, 1j], [1j, 1j]]))
    ok, margin = check_partial_ellipticity(q, SubspaceBasis.full(1))
    assert ok and margin > 0.1
    # x^2 - xi^2 vanishes on the diagonals
    ok, margin = check_partial_ellipticity(QuadraticForm(np.diag([1.0, -1.0])), SubspaceBasis.full(1))
    assert not ok and margin < 1e-6


@settings(max_examples=25, deadline=None)
@given(st.integers(1, 2), st.integers(0, 2), st.integers(0, 2**32 - 1))
def test_ellipticity_implies_symplectic(n1, n2, seed):
    q, *_ = constructed_family(n1, n2, np.random.default_rng(seed))
    report = analyze_singular_space(q)
    assert report.is_partially_elliptic
    assert report.is_symplectic


# ---------------------------------------------------------------- symplectic basis

def canonical_check(E, Eps):
    J = symplectic_matrix(E.shape[0] // 2)
    m = E.shape[1]
    assert np.allclose(Eps.T @ J @ E, np.eye(m), atol=1e-10)
    assert np.allclose(E.T @ J @ E, 0, atol=1e-10)
    assert np.allclose(Eps.T @ J @ Eps, 0, atol=1e-10)


def test_symplectic_basis_of_plane():
    pairs = symplectic_basis(SubspaceBasis.full(1))
    assert len(pairs) == 1
    e, eps = pairs[0].e, pairs[0].eps
    canonical_check(e[:, None], eps[:, None])
    assert np.allclose(np.abs(np.column_stack([e, eps])), np.eye(2))


def test_symplectic_basis_trivial():
    assert symplectic_basis(SubspaceBasis.trivial(2)) == []


@pytest.mark.parametrize("seed", range(10))
def test_symplectic_basis_random_subspace(seed):
    rng = np.random.default_rng(seed)
    R = random_symplectic(4, rng)
    # image of a coordinate symplectic 4-plane under R
    cols = R[:, [0, 1, 4, 5]]
    B = SubspaceBasis.from_spanning(4, cols)
    E, Eps = pairs_to_matrix(symplectic_basis(B), 4)
    assert E.shape == (8, 2)
    canonical_check(E, Eps)
    span = SubspaceBasis.from_spanning(4, np.hstack([E, Eps]))
    assert np.all(principal_angles(span, B) < 1e-8)


def test_symplectic_basis_rejects_isotropic():
    with pytest.raises(HypothesisError):
        symplectic_basis(SubspaceBasis(2, np.eye(4)[:, :2]))


# ---------------------------------------------------------------- real eigen blocks

def test_blocks_imaginary_harmonic():
    q = QuadraticForm(1j * np.eye(2))
    report = real_eigen_blocks(q, S_of(q))
    assert report.real_eigenvalues_of_F == pytest.approx([1.0], abs=1e-12)
    assert len(report.blocks) == 1 and report.blocks[0].d == 2


def test_blocks_kfp_empty():
    report = real_eigen_blocks(kfp(), S_of(kfp()))
    assert report.blocks == [] and report.real_eigenvalues_of_F == []


def test_blocks_two_frequencies():
    q = QuadraticForm(1j * np.diag([1.0, 2.0, 1.0, 2.0]))
    report = real_eigen_blocks(q, S_of(q))
    assert report.real_eigenvalues_of_F == pytest.approx([1.0, 2.0], abs=1e-12)
    B1, B2 = report.blocks
    assert B1.d == 2 and B2.d == 2
    J = symplectic_matrix(2)
    assert np.max(np.abs(B1.vectors.T @ J @ B2.vectors)) < 1e-10
    assert np.all(principal_angles(B1, SubspaceBasis(2, np.eye(4)[:, [0, 2]])) < 1e-10)
    assert not report.diagnostics


@pytest.mark.parametrize("seed", range(10))
def test_blocks_sum_to_singular_space(seed):
    rng = np.random.default_rng(seed)
    q, S_true, *_ = constructed_family(1, 2, rng)
    report = analyze_singular_space(q)
    assert sum(b.d for b in report.blocks) == report.d == 4
    blocks = np.hstack([b.vectors for b in report.blocks])
    assert np.all(principal_angles(SubspaceBasis.from_spanning(3, blocks), report.S) < 1e-8)
    J = symplectic_matrix(3)
    for a in range(len(report.blocks)):
        for b in range(a + 1, len(report.blocks)):
            assert np.max(np.abs(report.blocks[a].vectors.T @ J @ report.blocks[b].vectors)) < 1e-10


def test_blocks_precondition():
    q = QuadraticForm(np.diag([-1.0, 0.0]))
    with pytest.raises(PreconditionError):
        real_eigen_blocks(q, S_of(q))


def test_analyze_never_raises_and_reports_kernel():
    report = analyze_singular_space(QuadraticForm(np.diag([-1.0, 0.0])))
    assert report.d == 1 and not report.is_symplectic and not report.is_partially_elliptic
    assert report.S0.d == 1
    assert any("real eigenvalue" in d for d in report.diagnostics)


def test_report_json_encodes_infinite_margin():
    data = analyze_singular_space(kfp()).to_json()
    assert data["ellipticity_margin"] == "inf"
    assert data["dim_S"] == 0


def test_rank_tolerance_is_configurable():
    eps = 1e-9
    q = QuadraticForm(np.diag([-1.0, -eps]))
    assert compute_singular_space(hamilton_map(q)).d == 0
    loose = Tolerances(rank=1e-6)
    assert compute_singular_space(hamilton_map(q), loose).d == 1


def test_theorem_equivalence_on_glued_forms():
    rng = np.random.default_rng(11)
    q = QuadraticForm(glue(-np.eye(2), 1j * random_definite(1, rng, 1)))
    assert S_of(q).d == 2
    assert np.any(q.Q.real)
