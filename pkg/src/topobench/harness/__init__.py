"""Experiment matrix, run logs, statistics and exports."""
from .config import (
    DEFAULT_SEEDS, ConfigError, ExperimentConfig, default_matrix, format_config, load_config, parse_config,
    parse_seeds,
)
from .export import export_convergence, export_summary, mean_curve, pairwise_tests
from .probe import ProbeResult, probe_feasible_fraction
from .render import raster_pgm, render_design
from .runs import RUN_COLUMNS, RunLog, RunResult, execute_run, read_manifest, read_run, read_runs, run_matrix
from .stats import StatTestResult, mann_whitney_u

__all__ = [
    "DEFAULT_SEEDS", "ConfigError", "ExperimentConfig", "default_matrix", "format_config", "load_config",
    "parse_config", "parse_seeds", "export_convergence", "export_summary", "mean_curve", "pairwise_tests",
    "ProbeResult", "probe_feasible_fraction", "raster_pgm", "render_design", "RUN_COLUMNS", "RunLog",
    "RunResult", "execute_run", "read_manifest", "read_run", "read_runs", "run_matrix", "StatTestResult",
    "mann_whitney_u",
]
