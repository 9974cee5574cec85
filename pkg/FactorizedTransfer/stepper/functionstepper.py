from __future__ import annotations

from typing import Callable, Tuple

from ..interface import Stepper
from ..spectral import Field


__all__: Tuple[str, ...] = ("FunctionStepper",)


class FunctionStepper(Stepper):
    __slots__: Tuple[str, ...] = ("fn",)

    def __init__(self, function_pointer: Callable[[Field], Field]) -> None:
        self.fn: Callable[[Field], Field] = function_pointer
        super().__init__()

    def __repr__(self) -> str:
        return f"<{type(self).__qualname__} fn={self.fn!r}>"

    def step(self, u: Field) -> Field:
        return self.fn(u)
