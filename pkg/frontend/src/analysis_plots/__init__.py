"""Publication figures for the threshold-dynamics simulator's CSV outputs."""

__version__ = "0.1.0"

from .figures import (
    FIGURE_KINDS,
    FigureSpec,
    InvariantViolation,
    ValidationError,
    plot,
    read_table,
)

__all__ = [
    "FIGURE_KINDS",
    "FigureSpec",
    "InvariantViolation",
    "ValidationError",
    "plot",
    "read_table",
    "__version__",
]
