import numpy as np
import pytest

from ris_sesd.channel_model import ChannelParams, Scenario, SystemDimensions, sample_scenario
from ris_sesd.errors import ConfigError, NumericError
from ris_sesd.ils_core import brute_force_solve, build_alphabet, quadratic_objective, RisConfiguration
from ris_sesd.wmmse_bcd import (
    BcdOptions,
    ReceiverBank,
    assemble_quadratic,
    bcd_optimize,
    mmse_receiver,
    mse,
    mses,
    optimal_weights,
    simulate_received_signal,
    sinr,
    sinrs,
    solve_phase,
    sum_rate,
    wmmse_objective,
)

SMALL = SystemDimensions(M=4, N_h=4, N_v=2, K=3)
# SNR low enough that the discrete phase step actually moves
MODERATE = ChannelParams(sigma2_dbm=-100.0)


def _cn(rng, *shape):
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2)


@pytest.fixture
def instance(rng):
    sc = sample_scenario(SMALL, MODERATE, rng)
    theta = build_alphabet(2).points[rng.integers(0, 4, SMALL.N)]
    rx = ReceiverBank(_cn(rng, SMALL.K, SMALL.M) * 1e6)
    return sc, theta, rx


def test_sinr_single_user(rng):
    sc = sample_scenario(SystemDimensions(M=3, N_h=2, N_v=2, K=1), MODERATE, rng)
    theta = np.ones(4)
    a = _cn(rng, 1, 3)
    h = sc.G[0] @ theta
    expected = sc.p_lin[0] * abs(np.vdot(a[0], h)) ** 2 / (sc.sigma2_lin * np.linalg.norm(a) ** 2)
    assert sinr(0, ReceiverBank(a), theta, sc) == pytest.approx(expected, rel=1e-12)


def test_sinr_zero_power_and_zero_receiver(instance):
    sc, theta, rx = instance
    p = sc.p_lin.copy()
    p[1] = 0.0
    assert sinr(1, rx, theta, sc.with_powers(p)) == 0.0
    a = rx.a.copy()
    a[2] = 0
    assert sinr(2, ReceiverBank(a), theta, sc) == 0.0


def test_sinr_against_scalar_loop(instance):
    sc, theta, rx = instance
    got = sinrs(rx, theta, sc)
    for k in range(sc.K):
        terms = []
        for i in range(sc.K):
            acc = 0j
            for m in range(sc.M):
                for n in range(sc.N):
                    acc += np.conj(rx.a[k, m]) * sc.H[m, n] * sc.g[i, n] * theta[n]
            terms.append(sc.p_lin[i] * abs(acc) ** 2)
        noise = sc.sigma2_lin * sum(abs(x) ** 2 for x in rx.a[k])
        ref = terms[k] / (sum(terms) - terms[k] + noise)
        assert got[k] == pytest.approx(ref, rel=1e-10)


def test_sum_rate_cases(instance):
    sc, theta, rx = instance
    assert sum_rate(rx, theta, sc.with_powers(np.zeros(sc.K))) == 0.0
    per_user = [np.log2(1 + sinr(k, rx, theta, sc)) for k in range(sc.K)]
    assert sum_rate(rx, theta, sc) == pytest.approx(sum(per_user), rel=1e-12)


def test_sum_rate_one_bit():
    # M = N = K = 1 with gamma = 1
    sc = Scenario.from_channels([[1.0]], [[1.0]], [1.0], 1.0)
    assert sum_rate(ReceiverBank([[1.0]]), [1.0], sc) == pytest.approx(1.0)


def test_mse_zero_receiver(instance):
    sc, theta, _ = instance
    assert mse(0, np.zeros(sc.M), theta, sc) == pytest.approx(1.0)


def test_mse_scalar_mmse():
    p, s2, G = 0.3, 0.05, 0.7 - 0.2j
    sc = Scenario.from_channels([[G]], [[1.0]], [p], s2)
    a = np.sqrt(p) * G / (p * abs(G) ** 2 + s2)
    expected = 1 - p * abs(G) ** 2 / (p * abs(G) ** 2 + s2)
    assert mse(0, [a], [1.0], sc) == pytest.approx(expected, rel=1e-12)
    np.testing.assert_allclose(mmse_receiver([1.0], sc).a, [[a]], rtol=1e-12)


def test_mse_matches_sampling(instance):
    sc, theta, _ = instance
    rng = np.random.default_rng(99)
    rx = mmse_receiver(theta, sc)
    T = 100_000
    s = _cn(rng, T, sc.K)
    n = _cn(rng, T, sc.M) * np.sqrt(sc.sigma2_lin)
    y = simulate_received_signal(theta, sc, s, n)
    for k in range(sc.K):
        sample = np.mean(np.abs(y @ rx.a[k].conj() - s[:, k]) ** 2)
        assert sample == pytest.approx(mses(rx, theta, sc)[k], rel=0.01)


def test_received_signal_cases(instance):
    sc, theta, rx = instance
    np.testing.assert_array_equal(simulate_received_signal(theta, sc, np.zeros(sc.K), np.zeros(sc.M)), 0)
    s = np.zeros(sc.K)
    s[0] = 1
    y = simulate_received_signal(theta, sc, s, np.zeros(sc.M))
    np.testing.assert_allclose(y, np.sqrt(sc.p_lin[0]) * sc.G[0] @ theta)


def test_received_signal_decomposition(instance, rng):
    sc, theta, rx = instance
    s = _cn(rng, sc.K)
    n = _cn(rng, sc.M) * np.sqrt(sc.sigma2_lin)
    y = simulate_received_signal(theta, sc, s, n)
    for k in range(sc.K):
        a = rx.a[k]
        signal = np.vdot(a, sc.H @ (sc.g[k] * theta)) * np.sqrt(sc.p_lin[k]) * s[k]
        interf = sum(np.vdot(a, sc.H @ (sc.g[i] * theta)) * np.sqrt(sc.p_lin[i]) * s[i] for i in range(sc.K) if i != k)
        assert np.vdot(a, y) == pytest.approx(signal + interf + np.vdot(a, n), rel=1e-10)


def test_mmse_single_active_user(rng):
    sc = sample_scenario(SystemDimensions(M=1, N_h=2, N_v=1, K=2), MODERATE, rng)
    sc = sc.with_powers([0.2, 0.0])
    theta = np.array([1, -1])
    h = (sc.G[0] @ theta)[0]
    a = mmse_receiver(theta, sc).a[0, 0]
    assert a == pytest.approx(np.sqrt(0.2) * h / (0.2 * abs(h) ** 2 + sc.sigma2_lin), rel=1e-10)


def test_mmse_matched_filter_limit(instance):
    sc, theta, _ = instance
    noisy = Scenario.from_channels(sc.H, sc.g, sc.p_lin, 1e6)
    a = mmse_receiver(theta, noisy).a
    for k in range(sc.K):
        h = sc.G[k] @ theta
        cos = abs(np.vdot(a[k], h)) / (np.linalg.norm(a[k]) * np.linalg.norm(h))
        assert cos > 1 - 1e-6


def test_mmse_first_order_optimal(instance, rng):
    sc, theta, _ = instance
    rx = mmse_receiver(theta, sc)
    base = mses(rx, theta, sc)
    for k in range(sc.K):
        for _ in range(20):
            d = _cn(rng, sc.M)
            d *= 1e-3 * np.linalg.norm(rx.a[k]) / np.linalg.norm(d)
            assert mse(k, rx.a[k] + d, theta, sc) >= base[k] - 1e-12


def test_mmse_rate_identity(instance):
    sc, theta, _ = instance
    rx = mmse_receiver(theta, sc)
    np.testing.assert_allclose(mses(rx, theta, sc), 1 / (1 + sinrs(rx, theta, sc)), rtol=0, atol=1e-8)


def test_optimal_weights():
    np.testing.assert_allclose(optimal_weights([1.0, 0.5]), [1.0, 2.0])
    with pytest.raises(NumericError):
        optimal_weights([0.3, 0.0])
    for E in (0.01, 0.4, 1.0):
        vals = [w * E - np.log(w) for w in (0.5 / E, 1 / E, 2 / E)]
        assert vals[1] < vals[0] and vals[1] < vals[2]


def test_wmmse_objective_values():
    assert wmmse_objective([1.0], [1.0]) == 1.0
    E = np.array([0.2, 0.5, 0.9])
    assert wmmse_objective(1 / E, E) == pytest.approx(3 + np.log(E).sum())


def test_weight_perturbation_increases_objective(instance):
    sc, theta, _ = instance
    rx = mmse_receiver(theta, sc)
    E = mses(rx, theta, sc)
    w = optimal_weights(E)
    f = wmmse_objective(w, E)
    for k in range(sc.K):
        for scale in (0.9, 1.1):
            w2 = w.copy()
            w2[k] *= scale
            assert wmmse_objective(w2, E) > f


def test_objective_rate_link(instance):
    sc, theta, _ = instance
    rx = mmse_receiver(theta, sc)
    E = mses(rx, theta, sc)
    assert -np.log(E).sum() / np.log(2) == pytest.approx(sum_rate(rx, theta, sc), abs=1e-6)


def test_assemble_zero_receivers(instance):
    sc, _, _ = instance
    form = assemble_quadratic(ReceiverBank(np.zeros((sc.K, sc.M))), np.ones(sc.K), sc)
    assert not form.B.any() and not form.b.any()


def test_assemble_single_user_rank_one(rng):
    sc = sample_scenario(SystemDimensions(M=1, N_h=3, N_v=1, K=1), MODERATE, rng)
    a = np.array([[2.0 - 1j]])
    form = assemble_quadratic(ReceiverBank(a), [1.7], sc)
    G = sc.G[0]
    expected = 1.7 * sc.p_lin[0] * abs(a[0, 0]) ** 2 * G.conj().T @ G
    np.testing.assert_allclose(form.B, expected, rtol=1e-12)
    assert np.linalg.matrix_rank(form.B, tol=1e-9 * np.abs(form.B).max()) <= 1


def test_assemble_rank_and_psd(rng):
    sc = sample_scenario(SystemDimensions(M=2, N_h=4, N_v=4, K=3), MODERATE, rng)
    theta = np.ones(16)
    rx = mmse_receiver(theta, sc)
    form = assemble_quadratic(rx, optimal_weights(mses(rx, theta, sc)), sc)
    lam = np.linalg.eigvalsh(form.B)
    assert lam.min() >= -1e-10 * np.trace(form.B).real
    assert np.sum(lam > 1e-9 * lam.max()) <= sc.K * sc.M
    form.check()


def test_quadratic_matches_weighted_mse(instance, rng):
    sc, theta, rx = instance
    w = rng.uniform(0.5, 3.0, sc.K)
    form = assemble_quadratic(rx, w, sc)
    offsets = []
    for _ in range(5):
        t = np.exp(1j * rng.uniform(0, 2 * np.pi, sc.N))
        offsets.append(np.dot(w, mses(rx, t, sc)) - quadratic_objective(form, t))
    np.testing.assert_allclose(offsets, offsets[0], rtol=1e-9)


def test_solver_dominance_per_iteration(instance):
    sc, theta, _ = instance
    rx = mmse_receiver(theta, sc)
    form = assemble_quadratic(rx, optimal_weights(mses(rx, theta, sc)), sc)
    al = build_alphabet(1)
    assert solve_phase(form, al, "sesd").objective <= solve_phase(form, al, "nearest").objective + 1e-9


def test_options_validation():
    with pytest.raises(ConfigError):
        BcdOptions(epsilon=0)
    with pytest.raises(ConfigError):
        BcdOptions(max_iters=0)
    with pytest.raises(ConfigError):
        BcdOptions(solver="greedy")


@pytest.mark.parametrize("seed", range(6))
def test_bcd_monotone_and_consistent(seed):
    sc = sample_scenario(SystemDimensions(M=4, N_h=4, N_v=3, K=3), MODERATE, np.random.default_rng(seed))
    tr = bcd_optimize(sc, BcdOptions(seed=seed, epsilon=1e-6))
    f = tr.objectives()
    assert np.all(np.diff(f) <= 1e-9)
    assert tr.converged and tr.deltas[-1] <= 1e-6
    np.testing.assert_allclose(tr.deltas, np.abs(np.diff(f)), rtol=0, atol=0)
    for state in tr.iterations:
        assert np.all(state.mses > 0)
        assert state.objective_f == pytest.approx(wmmse_objective(state.weights, state.mses), abs=1e-9)
        assert state.sum_rate == pytest.approx(sum_rate(state.receivers, state.config, sc), abs=1e-9)
    # one more sweep from the converged point barely moves f
    again = bcd_optimize(sc, BcdOptions(init_indices=tuple(tr.final.config.indices), epsilon=1e-6, max_iters=1))
    assert abs(again.iterations[0].objective_f - tr.final.objective_f) <= 1e-6


def test_bcd_deterministic():
    sc = sample_scenario(SMALL, MODERATE, np.random.default_rng(3))
    a = bcd_optimize(sc, BcdOptions(seed=11))
    b = bcd_optimize(sc, BcdOptions(seed=11))
    assert np.array_equal(a.objectives(), b.objectives())
    assert [s.config.indices.tolist() for s in a.iterations] == [s.config.indices.tolist() for s in b.iterations]


def test_bcd_tiny_instance_final_step_is_exhaustive_optimum():
    sc = sample_scenario(SystemDimensions(M=2, N_h=2, N_v=1, K=1), MODERATE, np.random.default_rng(0))
    tr = bcd_optimize(sc, BcdOptions(seed=0, q=1))
    last = tr.final
    form = assemble_quadratic(last.receivers, last.weights, sc)
    al = build_alphabet(1)
    best = brute_force_solve(form, al)
    assert last.config.objective == pytest.approx(best.objective, abs=1e-12)


def test_bcd_max_iters_not_exception():
    sc = sample_scenario(SMALL, MODERATE, np.random.default_rng(1))
    tr = bcd_optimize(sc, BcdOptions(seed=1, solver="nearest", epsilon=1e-300, max_iters=3))
    assert tr.iteration_count == 3 and not tr.converged


def test_bcd_oracle_solver_agrees():
    sc = sample_scenario(SystemDimensions(M=3, N_h=3, N_v=2, K=2), MODERATE, np.random.default_rng(5))
    a = bcd_optimize(sc, BcdOptions(seed=2, solver="sesd"))
    b = bcd_optimize(sc, BcdOptions(seed=2, solver="oracle"))
    np.testing.assert_allclose(a.objectives(), b.objectives(), atol=1e-9)


def test_init_indices_validation():
    sc = sample_scenario(SMALL, MODERATE, np.random.default_rng(1))
    with pytest.raises(ConfigError):
        bcd_optimize(sc, BcdOptions(init_indices=(0, 1)))
