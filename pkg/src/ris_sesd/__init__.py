"""Discrete RIS phase-shift design for uplink multi-user MIMO.

Block coordinate descent over MMSE receivers, MSE weights and the RIS
configuration, with the discrete phase step solved exactly by
Schnorr-Euchner sphere decoding.
"""

from ris_sesd.channel_model import (
    ChannelParams,
    Scenario,
    SystemDimensions,
    sample_scenario,
)
from ris_sesd.ils_core import (
    CholeskyFactor,
    PhaseAlphabet,
    QuadraticForm,
    RisConfiguration,
    brute_force_solve,
    build_alphabet,
    continuous_relaxation,
    factorize,
    nearest_point_quantize,
    quadratic_objective,
    sesd_solve,
)
from ris_sesd.wmmse_bcd import BcdOptions, BcdTrace, bcd_optimize

__version__ = "0.1.0"

__all__ = [
    "BcdOptions",
    "BcdTrace",
    "ChannelParams",
    "CholeskyFactor",
    "PhaseAlphabet",
    "QuadraticForm",
    "RisConfiguration",
    "Scenario",
    "SystemDimensions",
    "bcd_optimize",
    "brute_force_solve",
    "build_alphabet",
    "continuous_relaxation",
    "factorize",
    "nearest_point_quantize",
    "quadratic_objective",
    "sample_scenario",
    "sesd_solve",
]
