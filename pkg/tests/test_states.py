import numpy as np
import pytest

from qmbounds.errors import InvalidP, InvalidPartition, NegativeTarget, NonIntegerTargets, UnbalancedSpectrum
from qmbounds.fisher import mean_values, qfi_matrix
from qmbounds.hilbert import ModeConfig, build_generators, reduce_particle
from qmbounds.states import (
    CLASSES,
    Direction,
    EntanglementSpec,
    gain_optimal_state,
    lambda_sep_multinoon,
    mepe_multinoon,
    meps_state,
    msps_assignment,
    msps_state,
    mspe_noon_product,
    p_producible_noon_chain,
    sample_state,
)

CFG1 = ModeConfig.uniform(1)
CFG2 = ModeConfig.uniform(2)
CFG3 = ModeConfig.uniform(3)
SKEW = ModeConfig(((1.0, -0.5), (0.5, -0.5)))


def qfi(state):
    return qfi_matrix(state, build_generators(state.basis), method="spectral")


def test_direction_signs():
    np.testing.assert_array_equal(Direction((1.0, -2.0, 0.0)).signs, [1, -1, 1])
    assert np.linalg.norm(Direction((3.0, 4.0)).normalized().vector) == pytest.approx(1.0, abs=1e-12)


def test_msps_examples():
    s = msps_state(CFG2, [0, 1])
    assert s.basis.dim == 16
    np.testing.assert_allclose(qfi(s), np.eye(2), atol=1e-12)
    np.testing.assert_allclose(qfi(msps_state(CFG1, [0])), [[1.0]], atol=1e-12)
    g = build_generators(s.basis)
    np.testing.assert_allclose(g.n @ s.populations, [1.0, 1.0], atol=1e-12)
    np.testing.assert_allclose(mean_values(s, g), 0.0, atol=1e-12)
    with pytest.raises(UnbalancedSpectrum):
        msps_state(SKEW, [0])


def test_msps_assignment():
    assert msps_assignment([2, 1]) == [0, 0, 1]
    with pytest.raises(NonIntegerTargets):
        msps_assignment([1.5, 0.5])
    with pytest.raises(NegativeTarget):
        msps_assignment([-1, 3])


def test_meps_examples():
    s = meps_state(CFG2, 2, [1, 1])
    np.testing.assert_allclose(np.abs(s.terms[0][1][0].ket), 0.5, atol=1e-14)
    np.testing.assert_allclose(qfi(s), np.eye(2), atol=1e-12)
    np.testing.assert_allclose(qfi(meps_state(CFG1, 3, [3])), qfi(msps_state(CFG1, [0, 0, 0])), atol=1e-12)
    np.testing.assert_allclose(np.linalg.eigvalsh(reduce_particle(s, 0).dm)[-1], 1.0, atol=1e-12)
    with pytest.raises(NegativeTarget):
        meps_state(CFG2, 2, [3, -1])


def test_optimal_conditionals_are_balanced():
    for s in (msps_state(CFG2, [0, 1, 1]), meps_state(CFG2, 3, [1, 2])):
        for _, fs in s.terms:
            for f in fs:
                p = np.abs(f.ket) ** 2
                for k in range(2):
                    pk = p[2 * k:2 * k + 2]
                    if pk.sum() > 0:
                        np.testing.assert_allclose(pk / pk.sum(), [0.5, 0.5], atol=1e-12)


def test_mspe_examples():
    np.testing.assert_allclose(qfi(mspe_noon_product(CFG1, [4])), [[16.0]], atol=1e-10)
    np.testing.assert_allclose(qfi(mspe_noon_product(CFG2, [2, 2])), np.diag([4.0, 4.0]), atol=1e-10)
    np.testing.assert_allclose(qfi(mspe_noon_product(CFG2, [3, 2])), np.diag([9.0, 4.0]), atol=1e-10)


def test_mepe_examples():
    np.testing.assert_allclose(qfi(mepe_multinoon(CFG2, (2, 2), (1, 1))), [[4, 4], [4, 4]], atol=1e-10)
    np.testing.assert_allclose(qfi(mepe_multinoon(CFG2, (2, 2), (1, -1))), [[4, -4], [-4, 4]], atol=1e-10)
    np.testing.assert_allclose(qfi(mepe_multinoon(CFG1, (5,), (1,))), [[25.0]], atol=1e-10)


def test_multilevel_noon_uses_extremal_sublevels():
    cfg = ModeConfig(((1.0, 0.0, -1.0),))
    s = mspe_noon_product(cfg, [3])
    np.testing.assert_allclose(qfi(s), [[36.0]], atol=1e-10)


def test_p_chain_examples():
    c1 = ModeConfig.uniform(1)
    np.testing.assert_allclose(qfi(p_producible_noon_chain(c1, [5], [2])), [[9.0]], atol=1e-10)
    np.testing.assert_allclose(qfi(p_producible_noon_chain(c1, [5], [1])), [[5.0]], atol=1e-10)
    np.testing.assert_allclose(qfi(p_producible_noon_chain(c1, [5], [5])), [[25.0]], atol=1e-10)
    with pytest.raises(InvalidP):
        p_producible_noon_chain(c1, [3], [4])


def test_lambda_sep_examples():
    n = Direction.uniform(3)
    s = lambda_sep_multinoon(CFG2, (2, 2), [[0], [1]], (1, 1))
    np.testing.assert_allclose(qfi(s), np.diag([4, 4]), atol=1e-10)
    whole = lambda_sep_multinoon(CFG2, (2, 2), [[0, 1]], (1, -1))
    np.testing.assert_allclose(whole.ket, mepe_multinoon(CFG2, (2, 2), (1, -1)).ket)
    s3 = lambda_sep_multinoon(CFG3, (2, 2, 2), [[0, 1], [2]], n.n)
    expect = np.zeros((3, 3))
    expect[:2, :2] = 4
    expect[2, 2] = 4
    np.testing.assert_allclose(qfi(s3), expect, atol=1e-10)
    with pytest.raises(InvalidPartition):
        lambda_sep_multinoon(CFG3, (2, 2, 2), [[0, 1], [1, 2]], n.n)
    with pytest.raises(InvalidPartition):
        lambda_sep_multinoon(CFG3, (2, 2, 2), [[0, 1]], n.n)


def test_gain_state_structure():
    s = gain_optimal_state(ModeConfig.uniform(3), 2, 2, 1)
    # groups {0,1} and {2}; one-particle blocks: two 2-mode NOON(1,1) factors and two single-mode factors
    assert len(s.terms[0][1]) == 4


@pytest.mark.parametrize("cls", CLASSES)
def test_sample_state_deterministic_and_normalized(cls):
    spec = EntanglementSpec(P=(1, 2), partition=((0, 1),))
    a = sample_state(CFG2, 2, cls, spec, seed=11)
    b = sample_state(CFG2, 2, cls, spec, seed=11)
    c = sample_state(CFG2, 2, cls, spec, seed=12)
    np.testing.assert_array_equal(a.dm, b.dm)
    assert np.abs(a.dm - c.dm).max() > 1e-6
    assert a.trace() == pytest.approx(1.0, abs=1e-10)
    assert np.linalg.eigvalsh(a.dm)[0] >= -1e-10
    if a.terms is not None:
        assert 1 <= len(a.terms) <= 4
