from __future__ import annotations

import csv
import logging
import math
from collections import deque
from pathlib import Path
from typing import AbstractSet, Deque, List, NamedTuple, Tuple, Union

import torch

from ..exceptions import DivergenceError, GradientError, UsageError
from ..model import FfnoParams
from ..utils import make_generator
from .gradients import loss_and_grad
from .loss import PairBatch
from .optimizer import OptimizerState, TrainConfig, adamw_step, plateau_step


__all__: Tuple[str, ...] = (
    "TraceRow",
    "TrainResult",
    "sample_indices",
    "train",
    "write_trace",
    "TRACE_HEADER",
)

log: logging.Logger = logging.getLogger(__name__)

TRACE_HEADER: Tuple[str, ...] = ("iteration", "lr", "train_loss")

LOG_EVERY: int = 100


class TraceRow(NamedTuple):
    iteration: int
    lr: float
    train_loss: float


class TrainResult(NamedTuple):
    """
    Outcome of `train`.

    Attributes
    ----------
    params: FfnoParams
        The trained parameters (the same object that was passed in).
    trace: List[TraceRow]
        One row per iteration; ``lr`` is the rate used for that iteration's update.
    state: OptimizerState
        Final optimizer and scheduler state.
    """

    params: FfnoParams
    trace: List[TraceRow]
    state: OptimizerState

    @property
    def final_lr(self) -> float:
        return self.state.lr


def sample_indices(seed: int, iteration: int, n_pairs: int, batch_size: int) -> torch.Tensor:
    """
    Pair indices of one mini-batch, drawn uniformly with replacement.

    A pure function of its arguments, so any iteration can be replayed on its own.
    """
    generator = make_generator(seed, "batch", iteration)
    return torch.randint(n_pairs, (min(batch_size, n_pairs),), generator=generator)


def train(
    params: FfnoParams, pairs: PairBatch, mask: AbstractSet[str], config: TrainConfig
) -> TrainResult:
    """
    Run the training loop: sample a batch, differentiate, take an AdamW step and
    feed the smoothed training loss to the plateau rule once
    ``plateau_warmup`` iterations have passed and a full window of losses followed them.

    Parameters
    ----------
    params: FfnoParams
        Updated in place; paths outside ``mask`` are never written.
    pairs: PairBatch
        Every available training pair.
    mask: Set[str]
        Trainable paths.
    config: TrainConfig
        Loop settings.

    Returns
    -------
    TrainResult
        Parameters, per-iteration loss trace and final optimizer state.

    Raises
    ------
    UsageError
        There are no training pairs.
    DivergenceError
        The loss became non-finite; the partial trace is attached.
    """
    config.validate()
    n_pairs = len(pairs)
    if n_pairs < 1:
        raise UsageError("Training needs at least one input-output pair.")
    state = OptimizerState(params, mask, config)
    window: Deque[float] = deque(maxlen=config.plateau_window)
    trace: List[TraceRow] = []
    log.info(
        "Training %d/%d tensors on %d pairs for %d iterations",
        len(state.paths),
        len(params),
        n_pairs,
        config.iterations,
    )
    for iteration in range(config.iterations):
        index = sample_indices(config.seed, iteration, n_pairs, config.batch_size)
        batch = PairBatch(pairs.inputs[index], pairs.targets[index])
        lr = state.lr
        try:
            loss, grads = loss_and_grad(params, batch, mask)
        except GradientError as exc:
            if math.isfinite(exc.loss):
                raise
            loss = exc.loss
        if not math.isfinite(loss):
            trace.append(TraceRow(iteration, lr, loss))
            log.error("Loss diverged at iteration %d", iteration)
            raise DivergenceError(iteration, trace)
        adamw_step(params, grads, state)
        if iteration >= config.plateau_warmup:
            window.append(loss)
        # full windows only
        if len(window) == config.plateau_window:
            plateau_step(state, sum(window) / len(window))
        trace.append(TraceRow(iteration, lr, loss))
        log.debug("iteration %d lr %.3e loss %.6e", iteration, lr, loss)
        if (iteration + 1) % LOG_EVERY == 0:
            log.info("iteration %d/%d loss %.6e", iteration + 1, config.iterations, loss)
    return TrainResult(params, trace, state)


def write_trace(path: Union[str, Path], trace: List[TraceRow]) -> None:
    """Write a loss trace as CSV with header ``iteration,lr,train_loss``."""
    with open(path, "w", newline="") as fp:
        writer = csv.writer(fp, lineterminator="\n")
        writer.writerow(TRACE_HEADER)
        for row in trace:
            writer.writerow((row.iteration, repr(row.lr), repr(row.train_loss)))
