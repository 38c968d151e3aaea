"""Configured runs, figure presets, CSV persistence and the command line."""

from .config import ConfigError, ExperimentConfig, from_dict, load_config
from .io import export_csv, export_report, read_csv
from .runner import (
    TraceRecord,
    build_plan,
    figure_config,
    reproduce_figure,
    run_free,
    run_seeds,
    run_steered,
    run_verify,
)
