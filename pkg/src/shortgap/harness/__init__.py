"""Configuration, experiments, reports and the command-line entry point."""

from .config import ConfigError, ExperimentConfig, load_config, parse_config, parse_F
from .experiments import experiment_density, experiment_short_interval_pnt, hl_gap_prediction
from .report import RunManifest, run_full_report

__all__ = [
    "ConfigError", "ExperimentConfig", "RunManifest", "experiment_density", "experiment_short_interval_pnt",
    "hl_gap_prediction", "load_config", "parse_F", "parse_config", "run_full_report",
]
