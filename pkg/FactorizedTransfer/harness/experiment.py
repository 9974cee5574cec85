from __future__ import annotations

import logging
from itertools import product
from typing import Any, Dict, List, NamedTuple, Optional, Sequence, Tuple

from ..datagen import TrajectoryDataset, pairs, subset
from ..exceptions import UsageError
from ..model import FfnoConfig, FfnoParams, init_params, parameter_paths
from ..training import TrainConfig, TrainResult, train
from ..transfer import FinetuneConfig, prepare_downstream
from .evaluation import Model, evaluate_next_step, evaluate_rollout
from .metrics import MetricsRecord
from .profiles import Profile


__all__: Tuple[str, ...] = (
    "Cell",
    "ExperimentSpec",
    "pretrain",
    "finetune",
    "score",
    "records_for",
    "training_summary",
)

log: logging.Logger = logging.getLogger(__name__)


class Cell(NamedTuple):
    tag: FinetuneConfig
    n_samples: int
    seed: int

    def __str__(self) -> str:
        return f"{self.tag}/n={self.n_samples}/seed={self.seed}"


class ExperimentSpec(NamedTuple):
    """
    Everything a sweep varies and everything it holds fixed.

    Attributes
    ----------
    family: str
    coefficient: float
    profile: Profile
        Model, data and default training sizes.
    tags: Tuple[FinetuneConfig, ...]
    counts: Tuple[int, ...]
        Downstream training sample counts.
    seeds: Tuple[int, ...]
    train: Optional[TrainConfig]
        Overrides ``profile.train`` when set.
    """

    family: str
    coefficient: float
    profile: Profile
    tags: Tuple[FinetuneConfig, ...]
    counts: Tuple[int, ...]
    seeds: Tuple[int, ...]
    train: Optional[TrainConfig] = None

    @property
    def train_config(self) -> TrainConfig:
        return self.train if self.train is not None else self.profile.train

    @property
    def rollouts(self) -> Tuple[int, ...]:
        return self.profile.rollouts

    @property
    def needs_pretrained(self) -> bool:
        return any(tag.pretrained for tag in self.tags)

    def cells(self) -> List[Cell]:
        return [Cell(*key) for key in product(self.tags, self.counts, self.seeds)]

    def validate(self) -> ExperimentSpec:
        if not (self.tags and self.counts and self.seeds):
            raise UsageError("A sweep needs at least one tag, one sample count and one seed.")
        if min(self.counts) < 1:
            raise UsageError("Sample counts must be positive.")
        self.train_config.validate()
        return self


def pretrain(
    dataset: TrajectoryDataset, cfg: FfnoConfig, config: TrainConfig, seed: int
) -> TrainResult:
    """Train a randomly initialized 1D model on every pair of ``dataset``."""
    if dataset.pde.dims != 1 or cfg.dims != 1:
        raise UsageError("Pretraining runs on 1D data with a 1D model.")
    params = init_params(cfg, seed, dtype=dataset.data.dtype)
    log.info("Pretraining %r on %r", params, dataset)
    mask = frozenset(parameter_paths(cfg))
    return train(params, pairs(dataset), mask, config._replace(seed=seed))


def finetune(
    tag: FinetuneConfig,
    pretrained: Optional[FfnoParams],
    dataset: TrajectoryDataset,
    n_samples: int,
    seed: int,
    cfg: FfnoConfig,
    config: TrainConfig,
) -> TrainResult:
    """
    Fine-tune one downstream 2D model.

    ``n_samples`` whole trajectories are drawn from ``dataset`` under ``seed``;
    the same seed initializes C0 and orders the mini-batches, so every tag of a
    cell sees the same data.
    """
    if dataset.pde.dims != 2 or cfg.dims != 2:
        raise UsageError("Fine-tuning runs on 2D data with a 2D model.")
    chosen = subset(dataset, n_samples, seed)
    params, mask = prepare_downstream(tag, pretrained, cfg, seed, dtype=dataset.data.dtype)
    log.info(
        "Fine-tuning %s with %d/%d tensors on %d samples", tag, len(mask), len(params), n_samples
    )
    return train(params, pairs(chosen), mask, config._replace(seed=seed))


def score(model: Model, dataset: TrajectoryDataset, rollouts: Sequence[int]) -> Dict[int, float]:
    """Depth 1 is the next-step metric over every pair; deeper depths roll out from snapshot 0."""
    scores: Dict[int, float] = {}
    for depth in rollouts:
        if depth == 1:
            scores[depth] = evaluate_next_step(model, dataset)
        else:
            scores[depth] = evaluate_rollout(model, dataset, depth)
    return scores


def records_for(
    cell: Cell,
    scores: Dict[int, float],
    iterations: int,
    final_lr: float,
    wall_time_s: float = 0.0,
) -> List[MetricsRecord]:
    return [
        MetricsRecord(
            str(cell.tag),
            cell.n_samples,
            cell.seed,
            depth,
            value,
            wall_time_s,
            iterations,
            final_lr,
        )
        for depth, value in sorted(scores.items())
    ]


def training_summary(result: TrainResult) -> Dict[str, Any]:
    return {
        "config": result.state.config._asdict(),
        "iterations": len(result.trace),
        "final_lr": result.final_lr,
        "final_loss": result.trace[-1].train_loss if result.trace else None,
    }
