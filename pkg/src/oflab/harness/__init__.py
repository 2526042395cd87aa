"""Experiment runner: configs in, CSV tables, SVG figures and a JSON report out."""
from .config import ConfigError, ExperimentConfig, load_config, load_drift, parse_config
from .experiments import REGISTRY, run
from .plotting import emit_plot
from .report import Metric, Report

__all__ = [
    "ConfigError",
    "ExperimentConfig",
    "Metric",
    "REGISTRY",
    "Report",
    "emit_plot",
    "load_config",
    "load_drift",
    "parse_config",
    "run",
]
