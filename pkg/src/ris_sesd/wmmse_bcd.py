"""Rate, SINR and MSE algebra plus the block coordinate descent loop.

The loop alternates three exact block minimisations of
``f = sum_k w_k E_k - ln w_k``: MMSE receivers for fixed ``theta``, weights
``w_k = 1 / E_k``, and the discrete ``theta`` step. The ``1 / ln 2`` factor
is dropped from ``f``; rates are always reported in bits/s/Hz.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ris_sesd.channel_model import Scenario
from ris_sesd.errors import ConfigError, NumericError
from ris_sesd.ils_core import (
    DEFAULT_ALPHA,
    ORDERINGS,
    PhaseAlphabet,
    QuadraticForm,
    RisConfiguration,
    brute_force_solve,
    build_alphabet,
    continuous_relaxation,
    factorize,
    nearest_point_quantize,
    sesd_solve,
)

__all__ = [
    "SOLVERS",
    "ReceiverBank",
    "WmmseState",
    "BcdTrace",
    "BcdOptions",
    "effective_channels",
    "sinr",
    "sinrs",
    "sum_rate",
    "mse",
    "mses",
    "simulate_received_signal",
    "mmse_receiver",
    "optimal_weights",
    "assemble_quadratic",
    "wmmse_objective",
    "solve_phase",
    "bcd_optimize",
    "initial_configuration",
]

SOLVERS = ("sesd", "nearest", "oracle")


@dataclass(frozen=True)
class ReceiverBank:
    """Receive beamformers stacked as rows, ``a[k]`` is ``a_k`` (shape K x M)."""

    a: np.ndarray

    def __post_init__(self):
        a = np.atleast_2d(np.asarray(self.a, dtype=complex))
        if not np.all(np.isfinite(a)):
            raise NumericError("receiver has non-finite entries")
        object.__setattr__(self, "a", a)


@dataclass(frozen=True)
class WmmseState:
    receivers: ReceiverBank
    weights: np.ndarray
    mses: np.ndarray
    config: RisConfiguration
    objective_f: float
    sum_rate: float
    baseline_objective: float | None = None


@dataclass
class BcdTrace:
    """``initial`` is the state at ``theta^(0)``; ``iterations[l-1]`` is iteration ``l``."""

    initial: WmmseState
    iterations: list[WmmseState] = field(default_factory=list)
    deltas: list[float] = field(default_factory=list)
    converged: bool = False

    @property
    def iteration_count(self) -> int:
        return len(self.iterations)

    @property
    def final(self) -> WmmseState:
        return self.iterations[-1] if self.iterations else self.initial

    def objectives(self) -> np.ndarray:
        return np.array([self.initial.objective_f] + [s.objective_f for s in self.iterations])

    def sum_rates(self) -> np.ndarray:
        return np.array([self.initial.sum_rate] + [s.sum_rate for s in self.iterations])


@dataclass(frozen=True)
class BcdOptions:
    epsilon: float = 1e-3
    max_iters: int = 200
    solver: str = "sesd"
    q: int = 1
    seed: int | None = 0
    alpha: float = 0.0
    fallback_alpha: float = DEFAULT_ALPHA
    ordering: str = "vblast"
    warm_start: bool = True
    track_baseline: bool = False
    init_indices: tuple[int, ...] | None = None

    def __post_init__(self):
        if not self.epsilon > 0:
            raise ConfigError("epsilon must be > 0")
        if self.max_iters < 1:
            raise ConfigError("max_iters must be >= 1")
        if self.solver not in SOLVERS:
            raise ConfigError(f"solver must be one of {SOLVERS}, got {self.solver!r}")
        if self.ordering not in ORDERINGS:
            raise ConfigError(f"ordering must be one of {ORDERINGS}, got {self.ordering!r}")
        if self.alpha < 0 or self.fallback_alpha < 0:
            raise ConfigError("alpha and fallback_alpha must be >= 0")


def effective_channels(config_or_theta, scenario: Scenario) -> np.ndarray:
    """Columns ``G_k theta``, shape (M, K)."""
    theta = getattr(config_or_theta, "theta", config_or_theta)
    return np.einsum("kmn,n->mk", scenario.G, np.asarray(theta, dtype=complex))


def _gains(receivers: ReceiverBank, config, scenario: Scenario) -> np.ndarray:
    # gains[k, i] = a_k^H G_i theta
    return receivers.a.conj() @ effective_channels(config, scenario)


def sinrs(receivers: ReceiverBank, config, scenario: Scenario) -> np.ndarray:
    """Every user's SINR with the noise term at its mean ``sigma^2 ||a_k||^2``."""
    power = np.abs(_gains(receivers, config, scenario)) ** 2 * scenario.p_lin[None, :]
    signal = np.diag(power).copy()
    interference = power.sum(axis=1) - signal
    noise = scenario.sigma2_lin * np.sum(np.abs(receivers.a) ** 2, axis=1)
    denom = interference + noise
    out = np.zeros_like(signal)
    ok = denom > 0
    out[ok] = signal[ok] / denom[ok]
    return out


def sinr(k: int, receivers: ReceiverBank, config, scenario: Scenario) -> float:
    return float(sinrs(receivers, config, scenario)[k])


def sum_rate(receivers: ReceiverBank, config, scenario: Scenario) -> float:
    return float(np.sum(np.log2(1.0 + sinrs(receivers, config, scenario))))


def mses(receivers: ReceiverBank, config, scenario: Scenario) -> np.ndarray:
    gains = _gains(receivers, config, scenario)
    p = scenario.p_lin
    total = (np.abs(gains) ** 2 * p[None, :]).sum(axis=1)
    cross = 2.0 * np.sqrt(p) * np.diag(gains).real
    noise = scenario.sigma2_lin * np.sum(np.abs(receivers.a) ** 2, axis=1)
    return total - cross + noise + 1.0


def mse(k: int, a_k, config, scenario: Scenario) -> float:
    """``E_k`` for a single receiver ``a_k`` (the other users' receivers are irrelevant)."""
    a_k = np.asarray(a_k, dtype=complex).reshape(1, -1)
    bank = np.zeros((scenario.K, scenario.M), dtype=complex)
    bank[k] = a_k
    return float(mses(ReceiverBank(bank), config, scenario)[k])


def simulate_received_signal(config, scenario: Scenario, symbols, noise) -> np.ndarray:
    """``y = sum_i G_i theta sqrt(p_i) s_i + n``.

    ``symbols`` may be (K,) or (T, K) and ``noise`` (M,) or (T, M) for a
    batch of T channel uses.
    """
    eff = effective_channels(config, scenario) * np.sqrt(scenario.p_lin)[None, :]
    symbols = np.asarray(symbols, dtype=complex)
    return symbols @ eff.T + np.asarray(noise, dtype=complex)


def mmse_receiver(config, scenario: Scenario) -> ReceiverBank:
    if not scenario.sigma2_lin > 0:
        raise ConfigError("noise power must be > 0")
    eff = effective_channels(config, scenario)
    # normalised by sigma^2 so the system matrix is I + (rank-K term)
    scaled = eff * np.sqrt(scenario.p_lin / scenario.sigma2_lin)[None, :]
    C = scaled @ scaled.conj().T + np.eye(scenario.M)
    try:
        X = np.linalg.solve(C, eff)
    except np.linalg.LinAlgError as exc:
        raise NumericError(f"MMSE system is singular: {exc}") from exc
    a = (X * (np.sqrt(scenario.p_lin) / scenario.sigma2_lin)[None, :]).T
    return ReceiverBank(a)


def optimal_weights(mse_values) -> np.ndarray:
    E = np.asarray(mse_values, dtype=float)
    if np.any(~(E > 0)):
        raise NumericError(f"MSE values must be positive, got {E}")
    return 1.0 / E


def assemble_quadratic(receivers: ReceiverBank, weights, scenario: Scenario) -> QuadraticForm:
    """Phase sub-problem ``theta^H B theta - 2 Re(b^H theta)`` for fixed receivers and weights."""
    a = receivers.a
    w = np.asarray(weights, dtype=float)
    p = scenario.p_lin
    # u[k, i, :] = G_i^H a_k
    u = np.einsum("imn,km->kin", scenario.G.conj(), a)
    scale = np.sqrt(w[:, None] * p[None, :])[..., None]
    V = (scale * u).reshape(-1, scenario.N)
    B = V.T @ V.conj()
    B = 0.5 * (B + B.conj().T)
    K = scenario.K
    b = (w * np.sqrt(p)) @ u[np.arange(K), np.arange(K), :]
    return QuadraticForm(B=B, b=b)


def wmmse_objective(weights, mse_values) -> float:
    w = np.asarray(weights, dtype=float)
    E = np.asarray(mse_values, dtype=float)
    return float(np.sum(w * E - np.log(w)))


def solve_phase(form: QuadraticForm, alphabet: PhaseAlphabet, solver: str = "sesd",
                alpha: float = 0.0, fallback_alpha: float = DEFAULT_ALPHA, ordering: str = "vblast",
                incumbent=None) -> RisConfiguration:
    """One discrete phase update; ``incumbent`` seeds the SESD radius only."""
    if solver == "sesd":
        factor = factorize(form, alpha=alpha, fallback_alpha=fallback_alpha, ordering=ordering)
        return sesd_solve(factor, alphabet, incumbent=incumbent)
    if solver == "nearest":
        return nearest_point_quantize(continuous_relaxation(form), alphabet, form)
    if solver == "oracle":
        return brute_force_solve(form, alphabet)
    raise ConfigError(f"unknown solver {solver!r}")


def _state(receivers, weights, config, scenario, baseline=None) -> WmmseState:
    E = mses(receivers, config, scenario)
    if np.any(~(E > 0)):
        raise NumericError(f"non-positive MSE {E}")
    return WmmseState(
        receivers=receivers,
        weights=np.asarray(weights, dtype=float),
        mses=E,
        config=config,
        objective_f=wmmse_objective(weights, E),
        sum_rate=sum_rate(receivers, config, scenario),
        baseline_objective=baseline,
    )


def initial_configuration(N: int, alphabet: PhaseAlphabet, seed) -> RisConfiguration:
    rng = np.random.default_rng(seed)
    return RisConfiguration.from_indices(rng.integers(0, len(alphabet), size=N), alphabet)


def bcd_optimize(scenario: Scenario, options: BcdOptions | None = None, **overrides) -> BcdTrace:
    """Run the alternating optimisation from a random discrete ``theta^(0)``.

    Stops once ``|f^(l) - f^(l-1)| <= epsilon`` or after ``max_iters``
    iterations (then ``converged`` is False). ``f^(0)`` is evaluated at
    ``theta^(0)`` with its MMSE receivers and optimal weights.

    With ``track_baseline`` each state also records the nearest-point
    objective on the same phase sub-problem, for dominance checks.
    """
    options = options or BcdOptions()
    if overrides:
        options = BcdOptions(**{**options.__dict__, **overrides})
    alphabet = build_alphabet(options.q)
    if options.init_indices is not None:
        config = RisConfiguration.from_indices(options.init_indices, alphabet)
        if config.indices.shape != (scenario.N,):
            raise ConfigError("init_indices must have length N")
    else:
        config = initial_configuration(scenario.N, alphabet, options.seed)

    receivers = mmse_receiver(config, scenario)
    weights = optimal_weights(mses(receivers, config, scenario))
    trace = BcdTrace(initial=_state(receivers, weights, config, scenario))
    f_prev = trace.initial.objective_f
    for _ in range(options.max_iters):
        receivers = mmse_receiver(config, scenario)
        weights = optimal_weights(mses(receivers, config, scenario))
        form = assemble_quadratic(receivers, weights, scenario)
        incumbent = config.indices if options.warm_start else None
        config = solve_phase(form, alphabet, options.solver, options.alpha, options.fallback_alpha,
                             options.ordering, incumbent)
        baseline = None
        if options.track_baseline:
            baseline = solve_phase(form, alphabet, "nearest").objective
        state = _state(receivers, weights, config, scenario, baseline)
        delta = abs(state.objective_f - f_prev)
        trace.iterations.append(state)
        trace.deltas.append(delta)
        f_prev = state.objective_f
        if delta <= options.epsilon:
            trace.converged = True
            break
    return trace
