"""Configuration, seeded runs, replicate ensembles and the CLI."""

from .config import ConfigError, ExperimentConfig, load_config, parse_config
from .runner import RunSummary, compute_oracle, mix64, run_replicates, run_single
