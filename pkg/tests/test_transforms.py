import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from qmbounds.bounds import heisenberg_bound_fixed
from qmbounds.errors import DimensionMismatch, NotOrthogonal, SingularMatrix, SingularTransformedFisher
from qmbounds.fisher import qfi_matrix
from qmbounds.hilbert import Basis, ModeConfig, QuantumState, build_generators
from qmbounds.states import haar_vector, mspe_noon_product, random_density_matrix
from qmbounds.transforms import (
    WeightMatrix,
    check_orthogonal,
    random_orthogonal,
    trace_weighted_crb,
    transform_generators,
    transformed_spreads,
    verify_qfi_transform,
    weighted_bound,
)

CFG2 = ModeConfig.uniform(2)
CFG3 = ModeConfig.uniform(3)


def test_identity_and_rotation():
    b = Basis.fock(CFG2, (2, 1))
    g = build_generators(b)
    np.testing.assert_array_equal(transform_generators(g, np.eye(2)).h, g.h)
    R = np.array([[0.0, -1.0], [1.0, 0.0]])
    t = transform_generators(g, R)
    np.testing.assert_allclose(t.h, np.stack([-g.h[1], g.h[0]]))
    P = np.array([[0.0, 1.0], [1.0, 0.0]])
    np.testing.assert_allclose(transform_generators(g, P).h, g.h[::-1])


def test_orthogonality_checks():
    with pytest.raises(NotOrthogonal):
        check_orthogonal([[1.0, 0.1], [0.0, 1.0]])
    with pytest.raises(DimensionMismatch):
        check_orthogonal(np.ones((2, 3)))
    g = build_generators(Basis.fock(CFG2, (1, 1)))
    with pytest.raises(DimensionMismatch):
        transform_generators(g, np.eye(3))


@settings(max_examples=30)
@given(st.integers(0, 2**31))
def test_qfi_transformation_law(seed):
    rng = np.random.default_rng(seed)
    b = Basis.fock(CFG3, (1, 1, 1))
    s = QuantumState.mixed(b, random_density_matrix(rng, b.dim, int(rng.integers(1, 4))))
    O = random_orthogonal(rng, 3)
    rep = verify_qfi_transform(s, build_generators(b), O)
    assert rep.satisfied and rep.details["residual"] <= 1e-8


def test_inverse_transformed_fisher():
    rng = np.random.default_rng(5)
    b = Basis.fock(CFG2, (2, 1))
    s = QuantumState.pure(b, haar_vector(rng, b.dim))
    g = build_generators(b)
    F = qfi_matrix(s, g)
    O = random_orthogonal(rng, 2)
    Ft = qfi_matrix(s, transform_generators(g, O))
    np.testing.assert_allclose(np.linalg.inv(Ft), O @ np.linalg.inv(F) @ O.T, atol=1e-8)


def test_weight_matrix_decomposition():
    rng = np.random.default_rng(2)
    A = rng.standard_normal((3, 3))
    wm = WeightMatrix.from_matrix(A @ A.T)
    np.testing.assert_allclose(wm.reconstruct(), A @ A.T, atol=1e-12)
    with pytest.raises(ValueError):
        WeightMatrix.from_matrix(-np.eye(2))
    ident = WeightMatrix.from_matrix(np.eye(2))
    np.testing.assert_array_equal(ident.O, np.eye(2))


def test_rank_one_weighted_bound_matches_heisenberg_fixed():
    rng = np.random.default_rng(8)
    counts = (2, 3)
    for _ in range(10):
        n = rng.standard_normal(2)
        n /= np.linalg.norm(n)
        wb = weighted_bound(WeightMatrix.rank_one(n), CFG2, counts)
        expect = 1.0 / heisenberg_bound_fixed(n, counts, CFG2).form()
        assert wb.value == pytest.approx(expect, rel=1e-10)


def test_diagonal_weights_give_mode_noon_maxima():
    wb = weighted_bound(np.eye(2), CFG2, (2, 2))
    np.testing.assert_allclose(wb.sigma_max, np.diag([0.25, 0.25]))
    assert wb.value == pytest.approx(0.5)
    np.testing.assert_allclose(wb.spreads, [2.0, 2.0])
    # the product of per-mode NOONs attains it
    F = qfi_matrix(mspe_noon_product(CFG2, (2, 2)), build_generators(Basis.fock(CFG2, (2, 2))))
    assert trace_weighted_crb(np.eye(2), F) == pytest.approx(wb.value, abs=1e-10)
    wb = weighted_bound(np.diag([1.0, 0.0]), CFG2, (3, 2))
    np.testing.assert_allclose(wb.sigma_max, np.diag([1 / 9, 0.0]))


def test_zero_spread_direction():
    with pytest.raises(SingularTransformedFisher):
        weighted_bound(np.diag([1.0, 0.0]), CFG2, (0, 2))
    np.testing.assert_allclose(transformed_spreads(CFG2, (2, 2), np.eye(2)), [2.0, 2.0])


def test_trace_weighted_crb():
    F = np.diag([4.0, 16.0])
    assert trace_weighted_crb(np.eye(2), F) == pytest.approx(0.3125)
    assert trace_weighted_crb(np.diag([0.0, 1.0]), F) == pytest.approx(1 / 16)
    with pytest.raises(SingularMatrix):
        trace_weighted_crb(np.eye(2), np.ones((2, 2)))
    rng = np.random.default_rng(4)
    A = rng.standard_normal((3, 3))
    W = A @ A.T
    B = rng.standard_normal((3, 3))
    F = B @ B.T + np.eye(3)
    assert trace_weighted_crb(W, F) == pytest.approx(np.trace(W @ np.linalg.inv(F)), rel=1e-10)


def test_random_orthogonal_is_orthogonal():
    O = random_orthogonal(np.random.default_rng(0), 4)
    np.testing.assert_allclose(O.T @ O, np.eye(4), atol=1e-12)
