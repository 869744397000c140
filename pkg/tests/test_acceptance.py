"""The twelve acceptance criteria, each at its stated tolerance; one PASS/FAIL line per criterion."""
import time

import numpy as np
import pytest

from conftest import criterion
from qmbounds.bounds import (
    MomentData,
    gain_factor,
    gain_from_states,
    heisenberg_bound,
    localization_envelope,
    mode_separable_bound,
    moments_from_state,
    p_producible_bound,
    shot_noise_bound,
    shot_noise_rank,
    weak_qcrb,
)
from qmbounds.errors import SingularMatrix
from qmbounds.estimation import Grid, MeasurementModel, crb_report, run_estimation
from qmbounds.fisher import Povm, classical_fisher_matrix, covariance_matrix, fluctuation_matrix, qfi_matrix
from qmbounds.hilbert import Basis, ModeConfig, QuantumState, build_generators
from qmbounds.linalg import count_positive_eigenvalues, invert_spd, loewner_leq, max_abs, min_eigenvalue
from qmbounds.states import (
    haar_vector,
    mepe_multinoon,
    meps_state,
    msps_assignment,
    msps_state,
    mspe_noon_product,
    noon,
    p_producible_noon_chain,
    random_density_matrix,
    random_povm,
    sample_state,
)
from qmbounds.bounds import heisenberg_bound_fixed
from qmbounds.transforms import WeightMatrix, random_orthogonal, verify_qfi_transform, weighted_bound

CFG1 = ModeConfig.uniform(1)
CFG2 = ModeConfig.uniform(2)
CFG3 = ModeConfig.uniform(3)
SAMPLES = 100


def F_of(state, method="auto"):
    return qfi_matrix(state, build_generators(state.basis), method=method)


def rel_leq(A, B, rtol=1e-8):
    return loewner_leq(A, B, rtol * (1.0 + max(max_abs(A), max_abs(B))))


def test_01_shot_noise_saturation():
    with criterion(1, "msps/meps with M=2, N=4, <N_k>=(2,2) give F_Q = diag(2,2), runtime < 1 s"):
        t0 = time.perf_counter()
        a = F_of(msps_state(CFG2, msps_assignment((2, 2))), "spectral")
        b = F_of(meps_state(CFG2, 4, (2, 2)), "spectral")
        elapsed = time.perf_counter() - t0
        assert max_abs(a - np.diag([2.0, 2.0])) <= 1e-8
        assert max_abs(b - np.diag([2.0, 2.0])) <= 1e-8
        assert elapsed < 1.0, f"took {elapsed:.2f} s"


def test_02_single_mode_heisenberg():
    with criterion(2, "NOON(4) gives F_Q = [[16]]; weak bound 1/(16 mu)"):
        F = F_of(noon(CFG1, 0, 4), "spectral")
        assert abs(F[0, 0] - 16.0) <= 1e-8
        mu = 1000
        assert abs(weak_qcrb((1.0,), F) / mu - 1 / (16 * mu)) <= 1e-12


def test_03_p_hierarchy():
    with criterion(3, "N_k=4, P in {4,2,1}: bounds 16 >= 8 >= 4, each saturated by the NOON chain"):
        entries = [p_producible_bound((4,), (P,), CFG1)[0, 0] for P in (4, 2, 1)]
        assert entries == [16.0, 8.0, 4.0]
        for P, e in zip((4, 2, 1), entries):
            F = F_of(p_producible_noon_chain(CFG1, (4,), (P,)), "spectral")
            assert abs(F[0, 0] - e) <= 1e-8


def test_04_heisenberg_matrix():
    with criterion(4, "multimode NOON (2,2): n^T F_Q n = 8 = n^T F_HL n for n=(1,+-1)/sqrt2; F_HL singular"):
        m = MomentData.fixed((2, 2))
        for signs in ((1, 1), (1, -1), (-1, 1), (-1, -1)):
            n = np.array(signs) / np.sqrt(2)
            F = F_of(mepe_multinoon(CFG2, (2, 2), n), "spectral")
            hb = heisenberg_bound(n, m, CFG2)
            assert abs(n @ F @ n - 8.0) <= 1e-8
            assert abs(hb.form() - 8.0) <= 1e-8
            with pytest.raises(SingularMatrix):
                invert_spd(hb.matrix)


def test_05_shot_noise_rank():
    with criterion(5, "r_SN = 1 (multimode NOON), 2 (NOON product), 0 (optimal particle-separable)"):
        sn = shot_noise_bound(MomentData.fixed((2, 2)), CFG2)
        assert shot_noise_rank(F_of(mepe_multinoon(CFG2, (2, 2), (1, 1))), sn) == 1
        assert shot_noise_rank(F_of(mspe_noon_product(CFG2, (2, 2))), sn) == 2
        assert shot_noise_rank(F_of(msps_state(CFG2, msps_assignment((2, 2)))), sn) == 0
        assert shot_noise_rank(F_of(meps_state(CFG2, 4, (2, 2))), sn) == 0


def test_06_gain_table():
    with criterion(6, "N=8, M=2 corners G = (1,4,2,8); closed form = constructed-state ratio for N<=8, M<=3"):
        corners = [gain_factor(8, 2, me, pe)[1] for me, pe in ((1, 1), (1, 4), (2, 1), (2, 4))]
        assert corners == [1.0, 4.0, 2.0, 8.0]
        checked = 0
        for M in (1, 2, 3):
            for N in range(M, 9, M):
                for Me in range(1, M + 1):
                    for Pe in range(1, N // M + 1):
                        _, _, ratio = gain_from_states(N, M, Me, Pe)
                        assert abs(ratio - gain_factor(N, M, Me, Pe)[1]) <= 1e-8, (N, M, Me, Pe)
                        checked += 1
        assert checked > 0


def _mode_product(rng):
    """Product of random pure states living on mode 0 and mode 1 separately."""
    f0 = QuantumState.pure(Basis.fock(CFG2, (2, 0)), haar_vector(rng, 3))
    f1 = QuantumState.pure(Basis.fock(CFG2, (0, 3)), haar_vector(rng, 4))
    return QuantumState.product(f0, f1), f0, f1


def test_07_property_suite():
    with criterion(7, f"property suite, {SAMPLES} seeded samples per property, runtime < 2 min"):
        t0 = time.perf_counter()
        for seed in range(SAMPLES):
            rng = np.random.default_rng(seed)

            s = sample_state(CFG2, 3, "particle-sep", seed=seed)
            g = build_generators(s.basis)
            assert rel_leq(qfi_matrix(s, g), shot_noise_bound(moments_from_state(s, g), CFG2)), seed

            s = sample_state(CFG2, (2, 2), "mode-sep", seed=seed)
            g = build_generators(s.basis)
            assert rel_leq(qfi_matrix(s, g), mode_separable_bound(moments_from_state(s, g), CFG2)), seed

            s = sample_state(CFG2, (2, 2), "arbitrary-pure", seed=seed)
            g = build_generators(s.basis)
            F, G4 = qfi_matrix(s, g, method="spectral"), 4 * covariance_matrix(s, g)
            assert max_abs(F - G4) <= 1e-8 * (1 + max_abs(G4)), seed

            b = Basis.fock(CFG2, (2, 1))
            g = build_generators(b)
            r1 = QuantumState.mixed(b, random_density_matrix(rng, b.dim, int(rng.integers(1, b.dim + 1))))
            r2 = QuantumState.mixed(b, random_density_matrix(rng, b.dim, int(rng.integers(1, b.dim + 1))))
            p = rng.uniform()
            mix = QuantumState.mixed(b, p * r1.dm + (1 - p) * r2.dm)
            F1, F2, Fm = qfi_matrix(r1, g), qfi_matrix(r2, g), qfi_matrix(mix, g)
            assert rel_leq(Fm, p * F1 + (1 - p) * F2), seed
            C1, C2, Cm = covariance_matrix(r1, g), covariance_matrix(r2, g), covariance_matrix(mix, g)
            assert rel_leq(p * C1 + (1 - p) * C2, Cm), seed

            D = fluctuation_matrix(mix, g) - Cm
            assert min_eigenvalue(D) >= -1e-8 * (1 + max_abs(D)), seed
            assert count_positive_eigenvalues(D, 1e-8 * (1 + max_abs(D))) <= 1, seed

            prod, f0, f1 = _mode_product(rng)
            Fp = qfi_matrix(prod, build_generators(prod.basis), method="spectral")
            expect = np.diag([F_of(f0)[0, 0], F_of(f1)[1, 1]])
            assert max_abs(Fp - expect) <= 1e-8 * (1 + max_abs(expect)), seed
        elapsed = time.perf_counter() - t0
        assert elapsed < 120.0, f"took {elapsed:.1f} s"


def test_08_transformation_law():
    with criterion(8, "50 random orthogonal O: ||F_Q[rho, O H] - O F_Q O^T||_max <= 1e-8"):
        b = Basis.fock(CFG3, (1, 1, 1))
        g = build_generators(b)
        for seed in range(50):
            rng = np.random.default_rng(seed)
            s = QuantumState.mixed(b, random_density_matrix(rng, b.dim, int(rng.integers(1, b.dim + 1))))
            rep = verify_qfi_transform(s, g, random_orthogonal(rng, 3))
            assert rep.details["residual"] <= 1e-8, (seed, rep.details["residual"])


def test_09_weighted_bound():
    with criterion(9, "rank-one W = n n^T reproduces 1/(n^T F_HL,b n); diagonal W gives per-mode NOON maxima"):
        rng = np.random.default_rng(99)
        counts = (2, 3)
        for _ in range(20):
            n = rng.standard_normal(2)
            n /= np.linalg.norm(n)
            wb = weighted_bound(WeightMatrix.rank_one(n), CFG2, counts)
            ref = 1.0 / heisenberg_bound_fixed(n, counts, CFG2).form()
            assert abs(wb.value - ref) <= 1e-10 * ref
        wb = weighted_bound(np.diag([0.3, 1.7]), CFG2, counts)
        np.testing.assert_allclose(wb.sigma_max, np.diag([1 / 4, 1 / 9]), atol=1e-12)
        np.testing.assert_allclose(weighted_bound(np.eye(2), CFG2, (2, 2)).sigma_max, np.diag([0.25, 0.25]),
                                   atol=1e-12)


def noon2_parity_model(theta):
    s = noon(CFG1, 0, 2)
    b = s.basis
    v0 = np.eye(b.dim)[b.index((((2, 0),),))]
    v1 = np.eye(b.dim)[b.index((((0, 2),),))]
    povm = Povm.projective([(v0 + v1) / np.sqrt(2), (v0 - v1) / np.sqrt(2)])
    return MeasurementModel(s, build_generators(b), povm, [theta])


def test_10_monte_carlo_crb():
    with criterion(10, "NOON(2) parity, theta=0.2, mu=1e4, R=200: variance/(1/4mu) in [0.8, 1.25], < 30 s"):
        t0 = time.perf_counter()
        mu, R = 10_000, 200
        m = noon2_parity_model(0.2)
        run = run_estimation(m, mu, R, seed=1234, grid=Grid((0.2,)))
        F = classical_fisher_matrix(m.state, m.gens, m.povm, m.true_theta)
        rep = crb_report(run, F, qfi_matrix(m.state, m.gens), [[1.0]])
        elapsed = time.perf_counter() - t0
        d = rep.directions[0]
        ratio = d.empirical / (1.0 / (4 * mu))
        print(f"    empirical/CRB = {ratio:.4f}, runtime {elapsed:.2f} s")
        assert 0.8 <= ratio <= 1.25, ratio
        assert d.empirical >= d.weak_classical - 3 * d.empirical_se
        assert d.empirical >= d.weak_quantum - 3 * d.empirical_se
        assert elapsed < 30.0


def test_11_classical_vs_quantum():
    with criterion(11, "parity POVM gives F = F_Q = 4 at generic theta; F <= F_Q for 50 random pairs"):
        for theta in (0.2, 0.37, 0.9, 1.4):
            m = noon2_parity_model(theta)
            F = classical_fisher_matrix(m.state, m.gens, m.povm, [theta])
            assert abs(F[0, 0] - 4.0) <= 1e-8
            assert abs(qfi_matrix(m.state, m.gens)[0, 0] - 4.0) <= 1e-8
        b = Basis.fock(CFG2, (1, 2))
        g = build_generators(b)
        for seed in range(50):
            rng = np.random.default_rng(seed)
            s = QuantumState.mixed(b, random_density_matrix(rng, b.dim, int(rng.integers(1, b.dim + 1))))
            povm = Povm(tuple(random_povm(rng, b.dim, int(rng.integers(2, 7)))))
            F = classical_fisher_matrix(s, g, povm, rng.uniform(-np.pi, np.pi, 2))
            assert loewner_leq(F, qfi_matrix(s, g), 1e-8), seed


def test_12_localization_envelope():
    with criterion(12, "p_+|k = 0.8: eig(G_MePs - G_MsPs) = {0, 0.09}; balanced: all three equal"):
        cond = [(0.8, 0.2), (0.8, 0.2)]
        ms, _, me = localization_envelope(CFG2, cond, (1, 1))
        assert np.allclose(np.linalg.eigvalsh(me - ms), [0.0, 0.09], atol=1e-9, rtol=0)
        bal = [(0.5, 0.5), (0.5, 0.5)]
        ms, mid, me = localization_envelope(CFG2, bal, (1, 1), [[0.25, 0.75], [0.75, 0.25]])
        assert max_abs(ms - me) <= 1e-10 and max_abs(mid - me) <= 1e-10
