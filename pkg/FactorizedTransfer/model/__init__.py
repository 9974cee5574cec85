from __future__ import annotations

from typing import Tuple

from .config import (
    Activation as Activation,
    FfnoConfig as FfnoConfig,
    AXIS_NAMES as AXIS_NAMES,
)
from .params import (
    FfnoParams as FfnoParams,
    init_params as init_params,
    parameter_paths as parameter_paths,
    parameter_shapes as parameter_shapes,
    is_bias as is_bias,
    is_fourier as is_fourier,
)
from .operator import (
    factorized_spectral_conv as factorized_spectral_conv,
    ffno_layer as ffno_layer,
    forward as forward,
    pointwise as pointwise,
)
from .counting import (
    ParamCount as ParamCount,
    param_count as param_count,
)

__all__: Tuple[str, ...] = (
    "Activation",
    "FfnoConfig",
    "AXIS_NAMES",
    "FfnoParams",
    "init_params",
    "parameter_paths",
    "parameter_shapes",
    "is_bias",
    "is_fourier",
    "factorized_spectral_conv",
    "ffno_layer",
    "forward",
    "pointwise",
    "ParamCount",
    "param_count",
)
