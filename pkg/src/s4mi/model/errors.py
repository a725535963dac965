"""Exception hierarchy shared by every s4mi layer."""

from typing import Any, Dict, Optional


class S4MIError(Exception):
    """Base class for all s4mi errors.

    The diagnostic dict is persisted verbatim in the run record.
    """

    def __init__(self, message: str, diagnostic: Optional[Dict[str, Any]] = None):
        super().__init__(message)
        self.diagnostic = diagnostic or {}


class InvalidInputError(S4MIError, ValueError):
    """Raised when an operation receives data violating its preconditions."""


class ConfigError(S4MIError, ValueError):
    """Raised for invalid model specs, budgets or experiment configs."""


class TrainingAbortedError(S4MIError, RuntimeError):
    """Raised when a training run cannot continue."""


class CollapseError(TrainingAbortedError):
    """Raised when embeddings or pixel clusters collapse to a single point."""
