from __future__ import annotations

from typing import Dict, NamedTuple, Tuple

from ..datagen import IcSpec, PdeSpec
from ..exceptions import UsageError
from ..model import FfnoConfig
from ..training import TrainConfig


__all__: Tuple[str, ...] = ("Profile", "PROFILES", "DESK", "PAPER", "get_profile")


class Profile(NamedTuple):
    """
    A named bundle of experiment sizes.

    Attributes
    ----------
    name: str
    model: FfnoConfig
        Shared by the 1D and 2D models; ``dims`` is replaced per stage.
    train: TrainConfig
        Used for pretraining and for every fine-tuning run.
    ic: IcSpec
    resolution_1d: int
    resolution_2d: int
    samples_1d: int
        Generated 1D trajectories, validation included.
    samples_2d: int
        Generated 2D trajectories, validation included.
    valid_samples: int
        Trajectories held out for validation from each generated set.
    counts: Tuple[int, ...]
        Default downstream sample counts of a sweep.
    seeds: Tuple[int, ...]
        Default seeds of a sweep.
    rollouts: Tuple[int, ...]
        Rollout depths scored per fine-tuned model; depth 1 is the next-step metric.
    """

    name: str
    model: FfnoConfig
    train: TrainConfig
    ic: IcSpec
    resolution_1d: int
    resolution_2d: int
    samples_1d: int
    samples_2d: int
    valid_samples: int
    counts: Tuple[int, ...]
    seeds: Tuple[int, ...] = (0, 1, 2)
    rollouts: Tuple[int, ...] = (1, 5)

    def config(self, dims: int) -> FfnoConfig:
        return self.model._replace(dims=dims)

    def resolution(self, dims: int) -> int:
        return self.resolution_1d if dims == 1 else self.resolution_2d

    def pde(self, family: str, coefficient: float, dims: int) -> PdeSpec:
        return PdeSpec(family, coefficient, dims, self.resolution(dims)).validate()


DESK: Profile = Profile(
    name="desk",
    model=FfnoConfig(width=32, layers=4, modes=8),
    train=TrainConfig(iterations=1000, plateau_warmup=200),
    ic=IcSpec(),
    resolution_1d=256,
    resolution_2d=32,
    samples_1d=576,
    samples_2d=96,
    valid_samples=64,
    counts=(8,),
)

PAPER: Profile = Profile(
    name="paper",
    model=FfnoConfig(width=128, layers=4, modes=16),
    train=TrainConfig(iterations=5000),
    ic=IcSpec(),
    resolution_1d=1024,
    resolution_2d=64,
    samples_1d=10000,
    samples_2d=10000,
    valid_samples=2000,
    counts=(1, 2, 4, 8, 16, 32, 64, 128, 256, 512, 1024),
)

PROFILES: Dict[str, Profile] = {
    DESK.name: DESK,
    PAPER.name: PAPER,
    "full": PAPER,
}


def get_profile(name: str) -> Profile:
    try:
        return PROFILES[name.lower()]
    except KeyError:
        raise UsageError(
            f'Unknown profile "{name}"; expected one of {sorted(PROFILES)}.'
        ) from None
