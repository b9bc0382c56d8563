"""Store-and-forward packet scheduling with makespan linear in congestion + dilation."""

from .dissection import LevelLadder, build_ladder, dissect_plain, dissect_shifted
from .fixer import FixerConfig, FixerError, PipelineResult, run_pipeline, stretch
from .instance import (
    Edge,
    Instance,
    InvalidInstanceError,
    decode,
    encode,
    generate_random_instance,
    pad,
    shared_path_instance,
    stats,
    validate,
)
from .oracle import OracleCapacityError, exhaustive_expectation, optimal_makespan
from .schedule import Schedule, ScheduleError
from .simulator import CheckRequirements, check, simulate

__version__ = "0.1.0"

__all__ = [
    "Edge",
    "Instance",
    "InvalidInstanceError",
    "decode",
    "encode",
    "validate",
    "stats",
    "pad",
    "shared_path_instance",
    "generate_random_instance",
    "LevelLadder",
    "build_ladder",
    "dissect_plain",
    "dissect_shifted",
    "Schedule",
    "ScheduleError",
    "simulate",
    "check",
    "CheckRequirements",
    "FixerConfig",
    "FixerError",
    "PipelineResult",
    "run_pipeline",
    "stretch",
    "OracleCapacityError",
    "optimal_makespan",
    "exhaustive_expectation",
    "__version__",
]
