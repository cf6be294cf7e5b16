"""Experiment configuration files.

TOML with four optional sections; anything missing takes the default
set-up (M=10, K=6, 8x8 RIS, 1-bit phases, Rician factors 5, noise -160 dBm,
epsilon 1e-3). Unknown sections or keys are rejected::

    [system]
    N = 32            # or N_h / N_v explicitly; N implies N_h = 8
    M = 10
    K = 6
    q = 1

    [channel]
    kappa_H = 5.0
    p_dbm = 20.0      # scalar or one value per UE
    sigma2_dbm = -160.0

    [bcd]
    epsilon = 1e-3
    max_iters = 200
    solver = "sesd"
    alpha = 0.0       # 0: plain Cholesky when B is PD, else fallback_alpha
    fallback_alpha = 0.01

    [experiment]
    trials = 100
    master_seed = 2024
    powers_dbm = [0, 5, 10, 15, 20, 25, 30]
    ris_sizes = [32, 64]
"""

from __future__ import annotations

import dataclasses
import sys
from dataclasses import dataclass, field, replace
from pathlib import Path

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from ris_sesd.channel_model import ChannelParams, SystemDimensions
from ris_sesd.errors import ConfigError
from ris_sesd.wmmse_bcd import BcdOptions

__all__ = ["ExperimentConfig", "load_config", "parse_config", "DEFAULT_POWERS_DBM", "DEFAULT_RIS_SIZES"]

DEFAULT_POWERS_DBM = (0.0, 5.0, 10.0, 15.0, 20.0, 25.0, 30.0)
DEFAULT_RIS_SIZES = (32, 64)
DEFAULT_TRIALS = {"convergence": 100, "power-sweep": 200}

_BCD_KEYS = {"epsilon", "max_iters", "solver", "alpha", "fallback_alpha", "ordering", "warm_start"}
_EXPERIMENT_KEYS = {"trials", "master_seed", "powers_dbm", "ris_sizes", "convergence_power_dbm"}
_TUPLE_FIELDS = {"ue_distance_range", "ue_azimuth_range", "ue_elevation_range", "p_dbm"}


@dataclass(frozen=True)
class ExperimentConfig:
    dims: SystemDimensions = field(default_factory=SystemDimensions)
    channel: ChannelParams = field(default_factory=ChannelParams)
    bcd: BcdOptions = field(default_factory=BcdOptions)
    trials: int | None = None
    master_seed: int = 2024
    powers_dbm: tuple[float, ...] = DEFAULT_POWERS_DBM
    ris_sizes: tuple[int, ...] = DEFAULT_RIS_SIZES
    convergence_power_dbm: float = 20.0

    def __post_init__(self):
        if self.trials is not None and self.trials < 1:
            raise ConfigError("trials must be >= 1")
        if not self.powers_dbm:
            raise ConfigError("powers_dbm must be non-empty")
        if not self.ris_sizes:
            raise ConfigError("ris_sizes must be non-empty")
        if not 0 <= self.master_seed < 2**64:
            raise ConfigError("master_seed must be an unsigned 64-bit integer")
        for n in self.ris_sizes:
            SystemDimensions.for_ris_size(n, N_h=self.dims.N_h)

    def trials_for(self, experiment: str) -> int:
        return self.trials if self.trials is not None else DEFAULT_TRIALS.get(experiment, 100)

    def dims_for(self, N: int) -> SystemDimensions:
        return SystemDimensions.for_ris_size(N, N_h=self.dims.N_h, M=self.dims.M, K=self.dims.K, q=self.dims.q)

    def bcd_options(self, seed: int, solver: str | None = None) -> BcdOptions:
        return replace(self.bcd, q=self.dims.q, seed=seed, solver=solver or self.bcd.solver)

    def with_overrides(self, **kwargs) -> "ExperimentConfig":
        kwargs = {k: v for k, v in kwargs.items() if v is not None}
        if "solver" in kwargs:
            kwargs["bcd"] = replace(self.bcd, solver=kwargs.pop("solver"))
        try:
            return replace(self, **kwargs)
        except TypeError as exc:
            raise ConfigError(str(exc)) from exc


def _check_keys(section: str, got: dict, allowed: set) -> None:
    unknown = sorted(set(got) - allowed)
    if unknown:
        raise ConfigError(f"unknown key(s) in [{section}]: {', '.join(unknown)}")


def _system(raw: dict) -> SystemDimensions:
    _check_keys("system", raw, {"M", "N", "N_h", "N_v", "K", "q"})
    raw = dict(raw)
    try:
        if "N" in raw:
            N = raw.pop("N")
            if "N_v" in raw:
                raise ConfigError("give either N or N_v, not both")
            return SystemDimensions.for_ris_size(N, **raw)
        return SystemDimensions(**raw)
    except ConfigError as exc:
        raise ConfigError(f"[system] {exc}") from exc


def _channel(raw: dict) -> ChannelParams:
    allowed = {f.name for f in dataclasses.fields(ChannelParams)}
    _check_keys("channel", raw, allowed)
    kwargs = {}
    for key, value in raw.items():
        if key in _TUPLE_FIELDS:
            value = tuple(float(v) for v in (value if isinstance(value, list) else [value]))
            if key != "p_dbm" and len(value) != 2:
                raise ConfigError(f"[channel] {key} must be a [lo, hi] pair")
        elif not isinstance(value, (int, float)) or isinstance(value, bool):
            raise ConfigError(f"[channel] {key} must be a number")
        kwargs[key] = value
    try:
        return ChannelParams(**kwargs)
    except ConfigError as exc:
        raise ConfigError(f"[channel] {exc}") from exc


def _bcd(raw: dict) -> BcdOptions:
    _check_keys("bcd", raw, _BCD_KEYS)
    try:
        return BcdOptions(**raw)
    except (ConfigError, TypeError) as exc:
        raise ConfigError(f"[bcd] {exc}") from exc


def parse_config(data: dict) -> ExperimentConfig:
    _check_keys("top level", data, {"system", "channel", "bcd", "experiment"})
    exp = dict(data.get("experiment", {}))
    _check_keys("experiment", exp, _EXPERIMENT_KEYS)
    for key in ("powers_dbm", "ris_sizes"):
        if key in exp:
            if not isinstance(exp[key], list):
                raise ConfigError(f"[experiment] {key} must be a list")
            exp[key] = tuple(exp[key])
    if "ris_sizes" in exp:
        exp["ris_sizes"] = tuple(int(n) for n in exp["ris_sizes"])
    if "trials" in exp and (not isinstance(exp["trials"], int) or exp["trials"] < 1):
        raise ConfigError("[experiment] trials must be a positive integer")
    return ExperimentConfig(
        dims=_system(data.get("system", {})),
        channel=_channel(data.get("channel", {})),
        bcd=_bcd(data.get("bcd", {})),
        **exp,
    )


def load_config(path: str | Path | None) -> ExperimentConfig:
    if path is None:
        return ExperimentConfig()
    path = Path(path)
    try:
        with path.open("rb") as fh:
            data = tomllib.load(fh)
    except FileNotFoundError as exc:
        raise ConfigError(f"config file not found: {path}") from exc
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"{path}: {exc}") from exc
    return parse_config(data)
