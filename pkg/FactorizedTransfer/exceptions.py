from __future__ import annotations

from typing import TYPE_CHECKING, Any, List, Optional, Tuple

if TYPE_CHECKING:
    from .training.loop import TraceRow


__all__: Tuple[str, ...] = (
    "FactorizedTransferError",
    "UsageError",
    "MetricError",
    "GradientError",
    "DivergenceError",
    "SolverError",
    "PersistenceError",
    "DatasetFormatError",
    "CheckpointError",
    "CellError",
)


class FactorizedTransferError(Exception):
    """Base class for all module errors."""


class UsageError(FactorizedTransferError):
    """Raised when an operation is called with arguments that violate its preconditions."""


class MetricError(UsageError):
    """Raised when a metric is undefined for its inputs, e.g. a zero-norm target."""


class GradientError(FactorizedTransferError):
    """
    Raised when a reverse-mode gradient contains non-finite entries.

    Attributes
    ----------
    path: str
        The canonical parameter path whose gradient is not finite.
    loss: float
        The loss value the gradient was computed from.
    """

    def __init__(self, path: str, loss: float = float("nan")) -> None:
        self.path: str = path
        self.loss: float = loss
        super().__init__(f'Gradient of "{path}" is not finite.')


class DivergenceError(FactorizedTransferError):
    """
    Raised when the training loss becomes non-finite.

    Attributes
    ----------
    iteration: int
        The iteration at which the loss diverged.
    trace: List[TraceRow]
        The loss trace recorded up to and including the diverging iteration.
    """

    def __init__(self, iteration: int, trace: List[TraceRow]) -> None:
        self.iteration: int = iteration
        self.trace: List[TraceRow] = trace
        super().__init__(f"Training loss diverged at iteration {iteration}.")


class SolverError(FactorizedTransferError):
    """
    Raised when a generated trajectory contains non-finite values.

    Attributes
    ----------
    sample: int
        Index of the offending sample.
    """

    def __init__(self, sample: int, message: Optional[str] = None) -> None:
        self.sample: int = sample
        super().__init__(message or f"Sample {sample} produced a non-finite state.")


class PersistenceError(FactorizedTransferError):
    """Base class for errors raised while reading or writing files."""


class DatasetFormatError(PersistenceError):
    """Raised when a trajectory dataset file is malformed, truncated or of another version."""


class CheckpointError(PersistenceError):
    """Raised when a checkpoint is malformed, truncated or does not match the requested model."""


class CellError(FactorizedTransferError):
    """
    Raised when an unexpected exception occurs while running a sweep cell.

    Attributes
    ----------
    cell: Tuple[Any, ...]
        The ``(tag, n_samples, seed)`` key of the failing cell.
    original: Exception
        The original exception that occurred.
    """

    def __init__(self, cell: Tuple[Any, ...], error: Exception) -> None:
        self.cell: Tuple[Any, ...] = cell
        self.original: Exception = error
        super().__init__(f"Sweep cell {cell!r} failed: {error}")
