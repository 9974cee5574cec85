from __future__ import annotations

import logging
import math
from collections import OrderedDict
from typing import Dict, Iterator, List, Mapping, Tuple

import torch

from ..exceptions import UsageError
from .config import FfnoConfig

__all__: Tuple[str, ...] = (
    "FfnoParams",
    "parameter_shapes",
    "parameter_paths",
    "is_bias",
    "is_fourier",
    "init_params",
)

log: logging.Logger = logging.getLogger(__name__)

PROJ_IN: str = "proj.in"
PROJ_OUT: str = "proj.out"


def _layer_shapes(cfg: FfnoConfig, layer: int) -> List[Tuple[str, Tuple[int, ...]]]:
    h, e, m = cfg.width, cfg.hidden, cfg.modes
    shapes: List[Tuple[str, Tuple[int, ...]]] = [
        (f"layer.{layer}.fourier.{axis}", (h, h, m, 2)) for axis in cfg.axes
    ]
    shapes += [
        (f"layer.{layer}.ff.w1", (e, h)),
        (f"layer.{layer}.ff.b1", (e,)),
        (f"layer.{layer}.ff.w2", (h, e)),
        (f"layer.{layer}.ff.b2", (h,)),
    ]
    return shapes


def parameter_shapes(cfg: FfnoConfig) -> Dict[str, Tuple[int, ...]]:
    """
    Canonical path of every parameter tensor mapped to its shape, in canonical order.

    Fourier weights ``R[l][d]`` are complex ``[H, H, M]`` tensors (output channel by
    input channel by mode) stored as real ``[H, H, M, 2]`` pairs.
    """
    shapes: Dict[str, Tuple[int, ...]] = OrderedDict()
    shapes[f"{PROJ_IN}.w"] = (cfg.width, cfg.in_channels)
    shapes[f"{PROJ_IN}.b"] = (cfg.width,)
    for layer in range(cfg.layers):
        shapes.update(_layer_shapes(cfg, layer))
    shapes[f"{PROJ_OUT}.w"] = (cfg.out_channels, cfg.width)
    shapes[f"{PROJ_OUT}.b"] = (cfg.out_channels,)
    return shapes


def parameter_paths(cfg: FfnoConfig) -> Tuple[str, ...]:
    return tuple(parameter_shapes(cfg))


def is_bias(path: str) -> bool:
    return path.endswith((".b", ".b1", ".b2"))


def is_fourier(path: str) -> bool:
    return ".fourier." in path


class FfnoParams(Mapping[str, torch.Tensor]):
    """
    The complete named parameter set of one FFNO.

    Behaves as a read-only mapping from canonical path to tensor. The tensors
    themselves are mutable in place, which is how the optimizer updates them.

    Attributes
    ----------
    config: FfnoConfig
        The configuration the tensors were built for.
    tensors: Dict[str, torch.Tensor]
        Parameter tensors keyed by canonical path, in canonical order.
    """

    __slots__: Tuple[str, ...] = ("config", "tensors")

    def __init__(self, config: FfnoConfig, tensors: Mapping[str, torch.Tensor]) -> None:
        self.config: FfnoConfig = config.validate()
        expected = parameter_shapes(config)
        if set(tensors) != set(expected):
            missing = sorted(set(expected) - set(tensors))
            extra = sorted(set(tensors) - set(expected))
            raise UsageError(f"Parameter paths mismatch; missing={missing} extra={extra}.")
        self.tensors: Dict[str, torch.Tensor] = OrderedDict()
        for path, shape in expected.items():
            tensor = tensors[path]
            if tuple(tensor.shape) != shape:
                raise UsageError(
                    f'Parameter "{path}" has shape {tuple(tensor.shape)}, expected {shape}.'
                )
            self.tensors[path] = tensor

    def __repr__(self) -> str:
        return f"<{type(self).__qualname__} config={self.config!r}>"

    def __getitem__(self, path: str) -> torch.Tensor:
        return self.tensors[path]

    def __iter__(self) -> Iterator[str]:
        return iter(self.tensors)

    def __len__(self) -> int:
        return len(self.tensors)

    @property
    def dtype(self) -> torch.dtype:
        return self.tensors[f"{PROJ_IN}.w"].dtype

    def fourier(self, layer: int, axis: str) -> torch.Tensor:
        """Complex ``[H, H, M]`` view of ``R[layer][axis]``."""
        return torch.view_as_complex(self.tensors[f"layer.{layer}.fourier.{axis}"])

    def clone(self) -> FfnoParams:
        """Deep copy; the clone shares no storage with ``self``."""
        return FfnoParams(self.config, {p: t.detach().clone() for p, t in self.tensors.items()})

    def with_tensors(self, tensors: Mapping[str, torch.Tensor]) -> FfnoParams:
        """Return params sharing ``self.config`` with some tensors swapped for ``tensors``."""
        merged = dict(self.tensors)
        merged.update(tensors)
        return FfnoParams(self.config, merged)

    def to(self, dtype: torch.dtype) -> FfnoParams:
        return FfnoParams(self.config, {p: t.to(dtype) for p, t in self.tensors.items()})


def init_params(
    cfg: FfnoConfig, seed: int, *, dtype: torch.dtype = torch.float32
) -> FfnoParams:
    """
    Randomly initialize every parameter of an FFNO.

    Fourier weights have real and imaginary parts uniform on ``[-1/H, 1/H]``;
    affine weights are uniform on ``[-sqrt(1/fan_in), sqrt(1/fan_in)]``; biases are zero.
    The result is a pure function of ``(cfg, seed, dtype)``.

    Parameters
    ----------
    cfg: FfnoConfig
        The model configuration.
    seed: int
        Seed of the CPU generator that draws the tensors in canonical path order.
    dtype: torch.dtype
        ``torch.float32`` for training, ``torch.float64`` for gradient checking.

    Returns
    -------
    FfnoParams
        The freshly initialized parameters.
    """
    cfg.validate()
    generator = torch.Generator(device="cpu")
    generator.manual_seed(seed)
    tensors: Dict[str, torch.Tensor] = OrderedDict()
    for path, shape in parameter_shapes(cfg).items():
        if is_bias(path):
            tensors[path] = torch.zeros(shape, dtype=dtype)
            continue
        if is_fourier(path):
            bound = 1.0 / cfg.width
        else:
            bound = math.sqrt(1.0 / shape[1])
        draw = torch.rand(shape, generator=generator, dtype=torch.float64)
        tensors[path] = ((draw * 2.0 - 1.0) * bound).to(dtype)
    log.debug("Initialized %d parameter tensors for %r with seed %d", len(tensors), cfg, seed)
    return FfnoParams(cfg, tensors)
