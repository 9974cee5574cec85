from __future__ import annotations

from typing import Tuple

from .solver import (
    Solver as Solver,
)
from .stepper import (
    Stepper as Stepper,
)

__all__: Tuple[str, ...] = ("Solver", "Stepper")
