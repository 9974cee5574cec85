from __future__ import annotations

import logging
from typing import AbstractSet, Any, Dict, List, Mapping, NamedTuple, Optional, Tuple

import torch
from torch.optim import AdamW
from torch.optim.lr_scheduler import ReduceLROnPlateau

from ..exceptions import UsageError
from ..model import FfnoParams, is_bias


__all__: Tuple[str, ...] = ("TrainConfig", "OptimizerState", "adamw_step", "plateau_step")

log: logging.Logger = logging.getLogger(__name__)


class TrainConfig(NamedTuple):
    """
    Optimizer, scheduler and loop settings of one training stage.

    Attributes
    ----------
    iterations: int
        Optimizer steps; one step uses one sampled mini-batch.
    lr: float
        Initial learning rate.
    plateau_factor: float
        Learning-rate multiplier applied on a plateau, in ``(0, 1)``.
    plateau_patience: int
        Non-improving iterations tolerated before the rate is reduced.
    plateau_window: int
        Length of the moving average of the training loss watched by the scheduler.
    plateau_warmup: int
        Leading iterations whose losses the scheduler never sees; the first smoothed
        loss it watches averages the ``plateau_window`` losses after them.
    batch_size: int
        Pairs per mini-batch, clamped to the number of available pairs.
    weight_decay: float
        Decoupled weight decay, applied to every trainable tensor except biases.
    betas: Tuple[float, float]
        Adam moment coefficients.
    eps: float
        Adam denominator guard.
    min_lr: float
        Floor of the learning rate.
    seed: int
        Seed of the batch sampler.
    """

    iterations: int = 5000
    lr: float = 1e-3
    plateau_factor: float = 0.2
    plateau_patience: int = 100
    plateau_window: int = 20
    plateau_warmup: int = 0
    batch_size: int = 32
    weight_decay: float = 1e-4
    betas: Tuple[float, float] = (0.9, 0.999)
    eps: float = 1e-8
    min_lr: float = 1e-6
    seed: int = 0

    def validate(self) -> TrainConfig:
        if self.iterations < 0:
            raise UsageError(f"iterations must be non-negative, got {self.iterations}.")
        for name in ("lr", "eps", "min_lr"):
            if getattr(self, name) <= 0:
                raise UsageError(f"{name} must be positive, got {getattr(self, name)}.")
        if self.weight_decay < 0:
            raise UsageError(f"weight_decay must be non-negative, got {self.weight_decay}.")
        if self.plateau_warmup < 0:
            raise UsageError(f"plateau_warmup must be non-negative, got {self.plateau_warmup}.")
        if not 0 < self.plateau_factor < 1:
            raise UsageError(f"plateau_factor must lie in (0, 1), got {self.plateau_factor}.")
        if self.plateau_patience < 1 or self.plateau_window < 1 or self.batch_size < 1:
            raise UsageError("plateau_patience, plateau_window and batch_size must be positive.")
        return self


class OptimizerState:
    """
    AdamW moments and plateau-scheduler bookkeeping for the masked paths of one model.

    The state is bound to the parameter tensors it was created from and updates
    them in place.

    Attributes
    ----------
    config: TrainConfig
        Settings used to build the optimizer and the scheduler.
    paths: Tuple[str, ...]
        Masked paths in canonical order.
    step: int
        Number of optimizer steps taken.
    """

    __slots__: Tuple[str, ...] = ("config", "paths", "step", "optimizer", "scheduler", "_bound")

    def __init__(self, params: FfnoParams, mask: AbstractSet[str], config: TrainConfig) -> None:
        self.config: TrainConfig = config.validate()
        self.paths: Tuple[str, ...] = tuple(path for path in params if path in mask)
        if not self.paths:
            raise UsageError("The trainable mask selects no parameters.")
        self.step: int = 0
        self._bound: Dict[str, torch.Tensor] = {path: params[path] for path in self.paths}
        decay = [params[p] for p in self.paths if not is_bias(p)]
        no_decay = [params[p] for p in self.paths if is_bias(p)]
        groups: List[Dict[str, Any]] = []
        if decay:
            groups.append({"params": decay, "weight_decay": config.weight_decay})
        if no_decay:
            groups.append({"params": no_decay, "weight_decay": 0.0})
        self.optimizer: AdamW = AdamW(
            groups, lr=config.lr, betas=config.betas, eps=config.eps, foreach=False
        )
        # torch reduces once the bad-step count exceeds its patience; ours reduces
        # once it reaches plateau_patience, so 1 improving + 100 flat steps cut the rate.
        self.scheduler: ReduceLROnPlateau = ReduceLROnPlateau(
            self.optimizer,
            mode="min",
            factor=config.plateau_factor,
            patience=config.plateau_patience - 1,
            threshold=0.0,
            threshold_mode="abs",
            cooldown=0,
            min_lr=config.min_lr,
            eps=0.0,
        )

    def __repr__(self) -> str:
        return (
            f"<{type(self).__qualname__} step={self.step} lr={self.lr:.3e}"
            f" paths={len(self.paths)}>"
        )

    @property
    def lr(self) -> float:
        return float(self.optimizer.param_groups[0]["lr"])

    @property
    def best_loss(self) -> float:
        return float(self.scheduler.best)

    @property
    def since_improvement(self) -> int:
        return int(self.scheduler.num_bad_epochs)

    def moments(self, path: str) -> Optional[Tuple[torch.Tensor, torch.Tensor]]:
        """First and second moment of ``path``, or None before its first update."""
        state = self.optimizer.state.get(self._bound[path])
        if not state:
            return None
        return state["exp_avg"], state["exp_avg_sq"]

    def check_bound(self, params: FfnoParams) -> None:
        for path, tensor in self._bound.items():
            if params[path] is not tensor:
                raise UsageError(f'Optimizer state is not bound to the tensor at "{path}".')


def adamw_step(
    params: FfnoParams,
    grads: Mapping[str, torch.Tensor],
    state: OptimizerState,
    config: Optional[TrainConfig] = None,
) -> Tuple[FfnoParams, OptimizerState]:
    """
    One decoupled-weight-decay Adam update of every masked path.

    Gradients of paths outside the mask are ignored; those tensors are untouched.

    Parameters
    ----------
    params: FfnoParams
        Parameters the state was created from; updated in place.
    grads: Mapping[str, torch.Tensor]
        Gradients keyed by path.
    state: OptimizerState
        Moments and step counter; updated in place.
    config: Optional[TrainConfig]
        Must equal ``state.config`` when given.

    Returns
    -------
    Tuple[FfnoParams, OptimizerState]
        ``params`` and ``state``, for chaining.
    """
    if config is not None and config != state.config:
        raise UsageError("TrainConfig differs from the one the optimizer state was built with.")
    state.check_bound(params)
    for path in state.paths:
        gradient = grads.get(path)
        params[path].grad = None if gradient is None else gradient.detach()
    state.optimizer.step()
    for path in state.paths:
        params[path].grad = None
    state.step += 1
    return params, state


def plateau_step(
    state: OptimizerState, current_loss: float, config: Optional[TrainConfig] = None
) -> OptimizerState:
    """
    Feed one loss observation to the reduce-on-plateau rule.

    A strictly lower loss becomes the new best and resets the counter; any other
    value increments it. When the counter reaches ``plateau_patience`` the rate is
    multiplied by ``plateau_factor`` (never below ``min_lr``) and the counter resets.
    """
    if config is not None and config != state.config:
        raise UsageError("TrainConfig differs from the one the optimizer state was built with.")
    before = state.lr
    state.scheduler.step(float(current_loss))
    if state.lr != before:
        log.info("Plateau detected: learning rate %.3e -> %.3e", before, state.lr)
    return state
