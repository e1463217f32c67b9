"""Experiment harness: config parsing, ensembles, CSV output, CLI."""

from .config import ConfigError, ExperimentSpec, parse_config, parse_config_text
from .csvio import emit_csv, load_csv, render_csv
from .presets import get_preset, preset_names
from .runner import RunSet, run_experiment
