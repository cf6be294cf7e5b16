"""Experiment configuration, Monte Carlo drivers, file formats and the CLI."""

from ris_sesd.harness.config import ExperimentConfig, load_config
from ris_sesd.harness.experiments import oracle_check, run_convergence, run_power_sweep

__all__ = ["ExperimentConfig", "load_config", "oracle_check", "run_convergence", "run_power_sweep"]
