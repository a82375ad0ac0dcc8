"""Robust durable-goods monopoly: pricing against worst-case information arrival."""

from .coase import GameConfig, KnownValuesEquilibrium, solve_known_values, solve_known_values_infinite, static_monopoly
from .dist import (
    Beta,
    DiscreteDistribution,
    PowerFamily,
    Tabulated,
    Truncated,
    Uniform,
    ValueDistribution,
    from_json,
    press,
)
from .errors import (
    ConsistencyError,
    DomainError,
    NonConvergenceError,
    PreconditionError,
    ProfileError,
    RobustCoaseError,
)
from .robust import RobustEquilibrium, indifference_residuals, solve_robust

__version__ = "0.1.0"

__all__ = [
    "Beta", "ConsistencyError", "DiscreteDistribution", "DomainError", "GameConfig", "KnownValuesEquilibrium",
    "NonConvergenceError", "PowerFamily", "PreconditionError", "ProfileError", "RobustCoaseError",
    "RobustEquilibrium", "Tabulated", "Truncated", "Uniform", "ValueDistribution", "from_json",
    "indifference_residuals", "press", "solve_known_values", "solve_known_values_infinite", "solve_robust",
    "static_monopoly",
]
