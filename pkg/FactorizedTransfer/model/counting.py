from __future__ import annotations

from typing import AbstractSet, NamedTuple, Optional, Tuple

from .config import FfnoConfig
from .params import is_fourier, parameter_shapes


__all__: Tuple[str, ...] = ("ParamCount", "param_count")


class ParamCount(NamedTuple):
    """
    Exact parameter accounting for one configuration.

    Complex Fourier weights count as one parameter each.

    Attributes
    ----------
    fourier_complex_per_layer: int
        ``H^2 * M * D`` when factorized, ``H^2 * M^D`` otherwise.
    ff_real_per_layer: int
        Weights and biases of one two-layer feedforward block.
    fourier_trainable: int
        Complex Fourier parameters selected by the mask.
    real_trainable: int
        Real (projector and feedforward) parameters selected by the mask.
    total_trainable: int
        ``fourier_trainable + real_trainable``.
    """

    fourier_complex_per_layer: int
    ff_real_per_layer: int
    fourier_trainable: int
    real_trainable: int
    total_trainable: int


def param_count(
    cfg: FfnoConfig, factorized: bool = True, mask: Optional[AbstractSet[str]] = None
) -> ParamCount:
    """
    Count parameters of a factorized or non-factorized operator.

    Parameters
    ----------
    cfg: FfnoConfig
        The model configuration.
    factorized: bool
        When False, the Fourier block of each layer is the dense ``H^2 * M^D`` kernel
        of a non-factorized operator; a mask selects it when it selects any of the
        layer's per-axis paths.
    mask: Optional[Set[str]]
        Trainable paths; every path when omitted.

    Returns
    -------
    ParamCount
        The counts.
    """
    h, m, d = cfg.width, cfg.modes, cfg.dims
    e = cfg.hidden
    per_layer = h * h * m * d if factorized else h * h * m**d
    ff = h * e + e + e * h + h
    shapes = parameter_shapes(cfg)
    selected = set(shapes) if mask is None else set(mask) & set(shapes)

    fourier = 0
    real = 0
    if factorized:
        for path in selected:
            shape = shapes[path]
            if is_fourier(path):
                fourier += shape[0] * shape[1] * shape[2]
            else:
                real += _numel(shape)
    else:
        layers = {path.split(".")[1] for path in selected if is_fourier(path)}
        fourier = len(layers) * per_layer
        real = sum(_numel(shapes[path]) for path in selected if not is_fourier(path))
    return ParamCount(per_layer, ff, fourier, real, fourier + real)


def _numel(shape: Tuple[int, ...]) -> int:
    total = 1
    for extent in shape:
        total *= extent
    return total
