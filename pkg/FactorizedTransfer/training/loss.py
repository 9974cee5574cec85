from __future__ import annotations

from typing import NamedTuple, Optional, Tuple

import torch

from ..exceptions import MetricError, UsageError
from ..model import FfnoConfig, FfnoParams, forward
from ..spectral import Field


__all__: Tuple[str, ...] = ("PairBatch", "rl2", "rl2_pairs", "batch_loss")

ERROR_NORM_FLOOR: float = 1e-12


class PairBatch(NamedTuple):
    """
    A batch of ``(u_t, u_{t+1})`` pairs.

    Attributes
    ----------
    inputs: torch.Tensor
        ``[B, 1, S_1, ..., S_D]`` states at time ``t``.
    targets: torch.Tensor
        ``[B, 1, S_1, ..., S_D]`` states at time ``t + 1``.
    """

    inputs: torch.Tensor
    targets: torch.Tensor

    def __len__(self) -> int:  # type: ignore[override]
        return self.inputs.shape[0]


def _error_norm(error: torch.Tensor, dims: Tuple[int, ...]) -> torch.Tensor:
    # The forward value is the exact norm; the backward pass sees the norm
    # floored at ERROR_NORM_FLOOR so pred == target yields a zero gradient.
    squared = error.square().sum(dim=dims)
    floored = squared.clamp_min(ERROR_NORM_FLOOR**2).sqrt()
    return floored + (squared.detach().sqrt() - floored.detach())


def _relative(pred: Field, target: Field, dims: Tuple[int, ...]) -> torch.Tensor:
    if pred.shape != target.shape:
        raise UsageError(
            f"Prediction shape {tuple(pred.shape)} does not match target {tuple(target.shape)}."
        )
    target_norm = torch.linalg.vector_norm(target, dim=dims)
    if bool((target_norm == 0).any()):
        raise MetricError("rL2 is undefined for a zero-norm target.")
    return _error_norm(pred - target, dims) / target_norm


def rl2(pred: Field, target: Field) -> torch.Tensor:
    """
    Relative L2 error ``||pred - target|| / ||target||`` over all flattened entries.

    >>> rl2(torch.tensor([3.0, 9.0]), torch.tensor([3.0, 4.0]))
    tensor(1.)

    Raises
    ------
    UsageError
        The shapes differ.
    MetricError
        The target has zero norm.
    """
    return _relative(pred, target, tuple(range(pred.dim())))


def rl2_pairs(pred: Field, target: Field) -> torch.Tensor:
    """Per-pair rL2 of batched ``[B, ...]`` tensors, shape ``[B]``."""
    return _relative(pred, target, tuple(range(1, pred.dim())))


def batch_loss(
    params: FfnoParams, batch: PairBatch, cfg: Optional[FfnoConfig] = None
) -> torch.Tensor:
    """Mean rL2 over the pairs of ``batch``."""
    if len(batch) == 0:
        raise UsageError("Cannot compute the loss of an empty batch.")
    return rl2_pairs(forward(params, batch.inputs, cfg), batch.targets).mean()
