from __future__ import annotations

from typing import Tuple

from .advection import (
    AdvectionSolver as AdvectionSolver,
    advect_exact as advect_exact,
)
from .diffusion import (
    DiffusionSolver as DiffusionSolver,
    angular_wavenumbers as angular_wavenumbers,
    diffusion_step as diffusion_step,
    diffusion_steps as diffusion_steps,
)

__all__: Tuple[str, ...] = (
    "AdvectionSolver",
    "DiffusionSolver",
    "advect_exact",
    "angular_wavenumbers",
    "diffusion_step",
    "diffusion_steps",
)
