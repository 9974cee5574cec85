from __future__ import annotations

from typing import Tuple

import torch

from ..interface import Stepper
from ..model import FfnoParams, forward
from ..spectral import Field


__all__: Tuple[str, ...] = ("OperatorStepper",)


class OperatorStepper(Stepper):
    __slots__: Tuple[str, ...] = ("params",)

    def __init__(self, params: FfnoParams) -> None:
        self.params: FfnoParams = params

    def __repr__(self) -> str:
        return f"<{type(self).__qualname__} config={self.params.config!r}>"

    def step(self, u: Field) -> Field:
        with torch.no_grad():
            return forward(self.params, u.to(self.params.dtype))
