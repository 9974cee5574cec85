from __future__ import annotations

from typing import Tuple

from .loss import (
    PairBatch as PairBatch,
    rl2 as rl2,
    rl2_pairs as rl2_pairs,
    batch_loss as batch_loss,
)
from .gradients import (
    GradStore as GradStore,
    grad as grad,
    loss_and_grad as loss_and_grad,
)
from .optimizer import (
    TrainConfig as TrainConfig,
    OptimizerState as OptimizerState,
    adamw_step as adamw_step,
    plateau_step as plateau_step,
)
from .loop import (
    TraceRow as TraceRow,
    TrainResult as TrainResult,
    sample_indices as sample_indices,
    train as train,
    write_trace as write_trace,
)

__all__: Tuple[str, ...] = (
    "PairBatch",
    "rl2",
    "rl2_pairs",
    "batch_loss",
    "GradStore",
    "grad",
    "loss_and_grad",
    "TrainConfig",
    "OptimizerState",
    "adamw_step",
    "plateau_step",
    "TraceRow",
    "TrainResult",
    "sample_indices",
    "train",
    "write_trace",
)
