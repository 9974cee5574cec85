from __future__ import annotations

import logging
from typing import AbstractSet, Dict, Tuple

import torch
from typing_extensions import TypeAlias

from ..exceptions import GradientError, UsageError
from ..model import FfnoParams
from .loss import PairBatch, batch_loss


__all__: Tuple[str, ...] = ("GradStore", "grad", "loss_and_grad")

log: logging.Logger = logging.getLogger(__name__)

GradStore: TypeAlias = Dict[str, torch.Tensor]


def _check_mask(params: FfnoParams, mask: AbstractSet[str]) -> None:
    if not mask:
        raise UsageError("The trainable mask is empty.")
    unknown = sorted(set(mask) - set(params))
    if unknown:
        raise UsageError(f"Mask names unknown parameter paths: {unknown}.")


def loss_and_grad(
    params: FfnoParams, batch: PairBatch, mask: AbstractSet[str]
) -> Tuple[float, GradStore]:
    """
    Batch loss and its exact reverse-mode gradient with respect to every masked path.

    Parameters
    ----------
    params: FfnoParams
        Model parameters; left untouched.
    batch: PairBatch
        The training pairs.
    mask: Set[str]
        Paths to differentiate. Only these appear in the result.

    Returns
    -------
    Tuple[float, GradStore]
        The loss value and the gradients. Fourier gradients are real ``[H, H, M, 2]``
        tensors, i.e. real and imaginary parts as independent scalars.

    Raises
    ------
    UsageError
        The mask is empty or names unknown paths.
    GradientError
        A gradient has non-finite entries.
    """
    _check_mask(params, mask)
    # detached aliases share storage with params, so no copy is made
    leaves = {path: tensor.detach() for path, tensor in params.items()}
    ordered = [path for path in params if path in mask]
    for path in ordered:
        leaves[path].requires_grad_(True)
    loss = batch_loss(params.with_tensors(leaves), batch)
    value = float(loss.detach())
    grads = torch.autograd.grad(loss, [leaves[path] for path in ordered])
    store: GradStore = {}
    for path, gradient in zip(ordered, grads):
        if not bool(torch.isfinite(gradient).all()):
            raise GradientError(path, value)
        store[path] = gradient
    log.debug("Computed gradients for %d paths, loss %.6e", len(store), value)
    return value, store


def grad(params: FfnoParams, batch: PairBatch, mask: AbstractSet[str]) -> GradStore:
    """Reverse-mode gradient of `batch_loss`; see `loss_and_grad`."""
    return loss_and_grad(params, batch, mask)[1]
