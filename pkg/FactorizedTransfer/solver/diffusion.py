from __future__ import annotations

import math
from typing import TYPE_CHECKING, List, Optional, Tuple

import torch

from ..interface import Solver
from ..spectral import Field

if TYPE_CHECKING:
    from ..datagen.dataset import PdeSpec


__all__: Tuple[str, ...] = (
    "DiffusionSolver",
    "diffusion_step",
    "diffusion_steps",
    "angular_wavenumbers",
)


def angular_wavenumbers(shape: Tuple[int, ...]) -> List[torch.Tensor]:
    """
    Angular wavenumbers ``2 pi n`` of an ``rfftn`` spectrum over ``shape``, one
    broadcastable tensor per axis; the last axis holds only non-negative frequencies.
    """
    dims = len(shape)
    out: List[torch.Tensor] = []
    for axis, size in enumerate(shape):
        if axis == dims - 1:
            n = torch.fft.rfftfreq(size, d=1.0 / size, dtype=torch.float64)
        else:
            n = torch.fft.fftfreq(size, d=1.0 / size, dtype=torch.float64)
        view = [1] * dims
        view[axis] = n.numel()
        out.append((2.0 * math.pi * n).view(view))
    return out


def diffusion_steps(
    u: Field, nu: float, dt: float, steps: int, *, dims: Optional[int] = None
) -> Field:
    """
    ``steps`` implicit Euler steps of ``u_t = nu * laplace(u)`` on the periodic unit box.

    Each mode is divided by ``1 + nu * dt * |k|^2`` per step, with ``k`` in angular
    units; the mean is preserved exactly. The steps run in spectral space.

    Parameters
    ----------
    u: Field
        ``[..., S_1, ..., S_D]``.
    nu: float
        Diffusion coefficient.
    dt: float
        Solver step.
    steps: int
        Number of steps.
    dims: Optional[int]
        Trailing spatial axes; defaults to ``u.dim() - 1``.
    """
    dims = u.dim() - 1 if dims is None else dims
    axes = tuple(range(-dims, 0))
    shape = tuple(u.shape[-dims:])
    k2 = sum(k.square() for k in angular_wavenumbers(shape))
    factor = 1.0 / (1.0 + nu * dt * k2)
    coeffs = torch.fft.rfftn(u.to(torch.float64), dim=axes)
    for _ in range(steps):
        coeffs = coeffs * factor
    return torch.fft.irfftn(coeffs, s=shape, dim=axes).to(u.dtype)


def diffusion_step(u: Field, nu: float, dt: float, *, dims: Optional[int] = None) -> Field:
    """A single implicit Euler step; see `diffusion_steps`."""
    return diffusion_steps(u, nu, dt, 1, dims=dims)


class DiffusionSolver(Solver):
    """
    Spectral implicit Euler solver of the periodic heat equation.

    Every recorded interval is covered by ``record_dt / solve_dt`` solver steps.
    """

    ACCEPTED_NAMES: Tuple[str, ...] = ("diffusion", "heat")

    def snapshots(self, u0: Field, pde: PdeSpec) -> torch.Tensor:
        frames = [u0[0].to(torch.float64)]
        for _ in range(pde.n_snapshots - 1):
            frames.append(
                diffusion_steps(
                    frames[-1], pde.coefficient, pde.solve_dt, pde.steps_per_record, dims=pde.dims
                )
            )
        return torch.stack(frames)
