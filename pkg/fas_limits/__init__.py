"""
FAS Limits

Performance limits of unsourced random access with integrated sensing and
communication on fluid-antenna receivers: MRA port selection, compressive
AOA sensing, achievability bounds and the optimistic performance floor.
"""

__version__ = "0.4.0"

from .exceptions import (  # noqa: E402
    ConfigError,
    ConvergenceError,
    DomainError,
    EnumerationBudgetError,
    FasLimitsError,
    InfeasibleError,
    NumericalError,
)
from .models import (  # noqa: E402
    BoundBreakdown,
    ChannelParams,
    ExperimentConfig,
    FloorConfig,
    PowerAssignment,
    SystemConfig,
)

__all__ = [
    "__version__",
    "BoundBreakdown",
    "ChannelParams",
    "ConfigError",
    "ConvergenceError",
    "DomainError",
    "EnumerationBudgetError",
    "ExperimentConfig",
    "FasLimitsError",
    "FloorConfig",
    "InfeasibleError",
    "NumericalError",
    "PowerAssignment",
    "SystemConfig",
]
