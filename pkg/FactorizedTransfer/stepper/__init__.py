from __future__ import annotations

from typing import Tuple

from .functionstepper import (
    FunctionStepper as FunctionStepper,
)
from .operatorstepper import (
    OperatorStepper as OperatorStepper,
)

__all__: Tuple[str, ...] = ("FunctionStepper", "OperatorStepper")
