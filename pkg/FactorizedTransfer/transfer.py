"""
Weight lifting from a 1D operator to a 2D operator, and the fine-tuning masks.

Layer rows are first (index 0), middle (``0 < l < L-1``) and last (index ``L-1``).
"""

from __future__ import annotations

import enum
import logging
from fnmatch import fnmatchcase
from typing import Dict, FrozenSet, Iterable, Optional, Tuple

import torch

from .exceptions import UsageError
from .model import FfnoConfig, FfnoParams, init_params, parameter_paths


__all__: Tuple[str, ...] = (
    "FinetuneConfig",
    "Component",
    "TABLE",
    "lift_1d_to_2d",
    "trainable_mask",
    "prepare_downstream",
    "expand_patterns",
)

log: logging.Logger = logging.getLogger(__name__)

SHARED_FIELDS: Tuple[str, ...] = ("layers", "width", "modes", "ff_expansion", "activation")


class FinetuneConfig(str, enum.Enum):
    """Fine-tuning configuration tags; C0 is the randomly initialized baseline."""

    C0 = "C0"
    C1 = "C1"
    C2 = "C2"
    C3 = "C3"
    C4 = "C4"
    C5 = "C5"
    C6 = "C6"
    C7 = "C7"
    C8 = "C8"

    def __str__(self) -> str:
        return self.value

    @property
    def pretrained(self) -> bool:
        return self is not FinetuneConfig.C0

    @classmethod
    def parse(cls, tag: str) -> FinetuneConfig:
        try:
            return cls(tag.strip().upper())
        except ValueError:
            raise UsageError(f'Unknown fine-tuning configuration "{tag}".') from None


class Component(enum.Enum):
    FOURIER_FIRST = "fourier.first"
    FF_FIRST = "ff.first"
    FOURIER_MIDDLE = "fourier.middle"
    FF_MIDDLE = "ff.middle"
    FOURIER_LAST = "fourier.last"
    FF_LAST = "ff.last"


_ALL: FrozenSet[Component] = frozenset(Component)

TABLE: Dict[FinetuneConfig, FrozenSet[Component]] = {
    FinetuneConfig.C0: _ALL,
    FinetuneConfig.C1: _ALL,
    FinetuneConfig.C2: frozenset(
        {Component.FOURIER_FIRST, Component.FOURIER_MIDDLE, Component.FOURIER_LAST}
    ),
    FinetuneConfig.C3: frozenset({Component.FF_FIRST, Component.FF_MIDDLE, Component.FF_LAST}),
    FinetuneConfig.C4: frozenset({Component.FF_LAST}),
    FinetuneConfig.C5: frozenset({Component.FOURIER_FIRST}),
    FinetuneConfig.C6: frozenset({Component.FOURIER_FIRST, Component.FF_FIRST}),
    FinetuneConfig.C7: frozenset({Component.FOURIER_FIRST, Component.FF_LAST}),
    FinetuneConfig.C8: frozenset({Component.FOURIER_LAST, Component.FF_LAST}),
}

# projectors are trainable under every tag
PROJECTOR_PATTERNS: Tuple[str, ...] = ("proj.in.*", "proj.out.*")


def _layers_of(position: str, layers: int) -> Tuple[int, ...]:
    if position == "first":
        return (0,)
    if position == "last":
        return (layers - 1,)
    return tuple(range(1, layers - 1))


def _patterns(component: Component, layers: int) -> Tuple[str, ...]:
    kind, position = component.value.split(".")
    return tuple(f"layer.{layer}.{kind}.*" for layer in _layers_of(position, layers))


def expand_patterns(patterns: Iterable[str], paths: Iterable[str]) -> FrozenSet[str]:
    """Every path matching at least one glob pattern, e.g. ``"layer.3.ff.*"``."""
    patterns = tuple(patterns)
    return frozenset(p for p in paths if any(fnmatchcase(p, pat) for pat in patterns))


def trainable_mask(tag: FinetuneConfig, layers: int, *, dims: int = 2) -> FrozenSet[str]:
    """
    Resolve a fine-tuning configuration to its set of trainable paths.

    Parameters
    ----------
    tag: FinetuneConfig
        One of C0 to C8; a string is parsed.
    layers: int
        Number of operator layers, at least 2. With 2 layers the middle row is empty.
    dims: int
        Spatial axes of the model the mask applies to.

    Returns
    -------
    FrozenSet[str]
        Canonical paths, always including both projectors.

    Raises
    ------
    UsageError
        Unknown tag or fewer than 2 layers.
    """
    if not isinstance(tag, FinetuneConfig):
        tag = FinetuneConfig.parse(str(tag))
    if layers < 2:
        raise UsageError(f"Fine-tuning masks need at least 2 layers, got {layers}.")
    # width and modes do not change path names
    cfg = FfnoConfig(dims=dims, layers=layers, width=1, modes=1)
    patterns = list(PROJECTOR_PATTERNS)
    for component in TABLE[tag]:
        patterns.extend(_patterns(component, layers))
    return expand_patterns(patterns, parameter_paths(cfg))


def _check_compatible(source: FfnoConfig, target: FfnoConfig) -> None:
    if source.dims != 1:
        raise UsageError(f"Lifting starts from a 1D model, got dims={source.dims}.")
    if target.dims != 2:
        raise UsageError(f"Lifting targets a 2D model, got dims={target.dims}.")
    for name in SHARED_FIELDS:
        if getattr(source, name) != getattr(target, name):
            raise UsageError(
                f"Cannot lift: {name} is {getattr(source, name)!r} in the 1D model "
                f"but {getattr(target, name)!r} in the 2D configuration."
            )


def lift_1d_to_2d(p1: FfnoParams, cfg2: FfnoConfig) -> FfnoParams:
    """
    Build 2D parameters from trained 1D parameters.

    Both axes of every layer receive an independent copy of the layer's 1D
    Fourier weights; projectors and feedforward tensors are copied verbatim.

    Raises
    ------
    UsageError
        The configurations differ in a shared hyperparameter; the message names it.
    """
    cfg2.validate()
    _check_compatible(p1.config, cfg2)
    tensors: Dict[str, torch.Tensor] = {}
    for path in parameter_paths(cfg2):
        if ".fourier." in path:
            source = path.rsplit(".", 1)[0] + ".x"
        else:
            source = path
        tensors[path] = p1[source].detach().clone()
    log.debug("Lifted %d tensors of %r into %r", len(tensors), p1.config, cfg2)
    return FfnoParams(cfg2, tensors)


def prepare_downstream(
    tag: FinetuneConfig,
    pretrained_1d: Optional[FfnoParams],
    cfg2: FfnoConfig,
    seed: int,
    *,
    dtype: torch.dtype = torch.float32,
) -> Tuple[FfnoParams, FrozenSet[str]]:
    """
    Parameters and trainable mask of a downstream run.

    C0 is a fresh ``init_params(cfg2, seed)`` with every path trainable; C1 to C8
    lift the pretrained 1D model and apply the tag's mask.

    Raises
    ------
    UsageError
        A pretrained model is required but missing, or is given for C0.
    """
    if not isinstance(tag, FinetuneConfig):
        tag = FinetuneConfig.parse(str(tag))
    if not tag.pretrained:
        if pretrained_1d is not None:
            raise UsageError("C0 is the randomly initialized baseline and takes no checkpoint.")
        return init_params(cfg2, seed, dtype=dtype), frozenset(parameter_paths(cfg2))
    if pretrained_1d is None:
        raise UsageError(f"{tag} needs pretrained 1D parameters.")
    params = lift_1d_to_2d(pretrained_1d.to(dtype), cfg2)
    return params, trainable_mask(tag, cfg2.layers, dims=cfg2.dims)
