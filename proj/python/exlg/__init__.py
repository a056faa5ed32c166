from ._core import (
    Algorithm,
    AssumptionError,
    ConfigError,
    DivergenceError,
    LinRegTask,
    LogRegTask,
    MixingSet,
    QuadraticTask,
    Task,
    __version__,
    mixing_set,
    mixing_set_from_w,
    run_chain,
    run_command,
    theory_constants,
    validate_assumptions,
    w2_gaussian,
)

__all__ = [
    "Algorithm",
    "AssumptionError",
    "ConfigError",
    "DivergenceError",
    "LinRegTask",
    "LogRegTask",
    "MixingSet",
    "QuadraticTask",
    "Task",
    "mixing_set",
    "mixing_set_from_w",
    "run_chain",
    "run_command",
    "theory_constants",
    "validate_assumptions",
    "w2_gaussian",
]
