from __future__ import annotations

import logging
import math
from typing import List, Tuple, Union

import torch

from ..datagen import TrajectoryDataset, pairs
from ..exceptions import UsageError
from ..interface import Stepper
from ..model import FfnoParams
from ..stepper import OperatorStepper
from ..training.loss import rl2_pairs


__all__: Tuple[str, ...] = ("evaluate_next_step", "evaluate_rollout", "as_stepper")

log: logging.Logger = logging.getLogger(__name__)

Model = Union[FfnoParams, Stepper]

EVAL_BATCH: int = 256


def as_stepper(model: Model) -> Stepper:
    """Wrap parameters in an `OperatorStepper`; steppers pass through unchanged."""
    if isinstance(model, Stepper):
        return model
    if isinstance(model, FfnoParams):
        return OperatorStepper(model)
    raise UsageError(f"Cannot evaluate an object of type {type(model).__name__}.")


def _scores(prediction: torch.Tensor, target: torch.Tensor) -> torch.Tensor:
    return rl2_pairs(prediction.to(torch.float64), target.to(torch.float64))


def evaluate_next_step(model: Model, dataset: TrajectoryDataset) -> float:
    """
    Mean next-step relative L2 error over every ``(u_t, u_{t+1})`` pair of every sample.

    Parameters
    ----------
    model: Union[FfnoParams, Stepper]
        The one-step map to score.
    dataset: TrajectoryDataset
        Validation trajectories.

    Returns
    -------
    float
        The mean over ``n_samples * (T - 1)`` pairs.
    """
    stepper = as_stepper(model)
    batch = pairs(dataset)
    scores: List[torch.Tensor] = []
    with torch.no_grad():
        for start in range(0, len(batch), EVAL_BATCH):
            stop = start + EVAL_BATCH
            prediction = stepper(batch.inputs[start:stop])
            scores.append(_scores(prediction, batch.targets[start:stop]))
    value = float(torch.cat(scores).mean())
    log.debug("next-step rl2 of %r on %r: %.6e", stepper, dataset, value)
    return value


def evaluate_rollout(model: Model, dataset: TrajectoryDataset, depth: int = 5) -> float:
    """
    Mean relative L2 error of an autoregressive rollout from snapshot 0.

    Every prediction is fed back as the next input. A sample scores the mean of
    ``rl2(u_hat_k, u_k)`` over ``k = 1..depth``; the result is the mean over samples.

    Raises
    ------
    UsageError
        ``depth`` is not in ``[1, T - 1]``.
    """
    horizon = dataset.n_snapshots - 1
    if not 1 <= depth <= horizon:
        raise UsageError(f"Rollout depth must be in [1, {horizon}], got {depth}.")
    stepper = as_stepper(model)
    data = dataset.data
    per_sample: List[torch.Tensor] = []
    with torch.no_grad():
        for start in range(0, dataset.n_samples, EVAL_BATCH):
            chunk = data[start : start + EVAL_BATCH]
            state = chunk[:, 0:1]
            total = torch.zeros(chunk.shape[0], dtype=torch.float64)
            for k in range(1, depth + 1):
                state = stepper(state)
                total += _scores(state, chunk[:, k : k + 1])
            per_sample.append(total / depth)
    value = float(torch.cat(per_sample).mean())
    if not math.isfinite(value):
        log.warning("Rollout of %r diverged to a non-finite error", stepper)
    log.debug("rollout-%d rl2 of %r on %r: %.6e", depth, stepper, dataset, value)
    return value
