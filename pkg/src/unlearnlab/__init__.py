"""Twin-run online learning under deletion events, with optimizer-state diagnostics."""

from .errors import (
    ConfigError,
    DeletionError,
    NumericError,
    UndefinedAlignmentError,
    UsageError,
)
from .harness import (
    ExperimentConfig,
    Model,
    RunFailure,
    RunResult,
    RunSpec,
    run_pair,
    run_sweep,
    summarize,
    table_row_specs,
)
from .stream import Environment, Observation, StreamConfig, gen_stream
from .unlearn import DeletionEvent, InterventionKind, InterventionSpec

__all__ = [
    "ConfigError", "DeletionError", "NumericError", "UndefinedAlignmentError", "UsageError",
    "ExperimentConfig", "Model", "RunFailure", "RunResult", "RunSpec",
    "run_pair", "run_sweep", "summarize", "table_row_specs",
    "Environment", "Observation", "StreamConfig", "gen_stream",
    "DeletionEvent", "InterventionKind", "InterventionSpec",
]

__version__ = "0.1.0"
