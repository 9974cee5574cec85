from __future__ import annotations

import math
from typing import NamedTuple, Tuple

import torch

from ..exceptions import UsageError
from ..spectral import Field
from ..utils import make_generator


__all__: Tuple[str, ...] = ("IcSpec", "sample_ic", "grid")


class IcSpec(NamedTuple):
    """
    Distribution of initial conditions ``u0(x) = sum_i A_i sin(2 pi n_i . x + phi_i)``.

    All draws are uniform and independent.

    Attributes
    ----------
    n_terms: int
        Number of sine terms ``J``.
    min_wavenumber: int
        Smallest integer wavenumber per axis component.
    max_wavenumber: int
        Largest integer wavenumber per axis component, inclusive.
    amplitude: Tuple[float, float]
        Range of ``A_i``.
    phase: Tuple[float, float]
        Range of ``phi_i``.
    """

    n_terms: int = 4
    min_wavenumber: int = 1
    max_wavenumber: int = 8
    amplitude: Tuple[float, float] = (-1.0, 1.0)
    phase: Tuple[float, float] = (0.0, 2.0 * math.pi)

    def validate(self) -> IcSpec:
        if self.n_terms < 1:
            raise UsageError(f"n_terms must be at least 1, got {self.n_terms}.")
        if not 0 <= self.min_wavenumber <= self.max_wavenumber:
            raise UsageError(
                f"Wavenumber range [{self.min_wavenumber}, {self.max_wavenumber}] is invalid."
            )
        if self.amplitude[0] > self.amplitude[1] or self.phase[0] > self.phase[1]:
            raise UsageError("Amplitude and phase ranges must be ordered (low, high).")
        return self

    def check_resolution(self, resolution: int) -> IcSpec:
        """
        Reject grids that cannot resolve ``max_wavenumber``.

        A wavenumber at or above ``resolution / 2`` aliases; at exactly Nyquist its
        sine part samples to zero and a spectral shift no longer reproduces it.
        """
        if resolution <= 2 * self.max_wavenumber:
            raise UsageError(
                f"Resolution {resolution} aliases wavenumber {self.max_wavenumber};"
                f" it must exceed {2 * self.max_wavenumber}."
            )
        return self


def grid(resolution: int, dims: int) -> torch.Tensor:
    """Cell-start coordinates of the periodic grid on ``[0, 1)^D``, shape ``[D, S, ..., S]``."""
    axis = torch.arange(resolution, dtype=torch.float64) / resolution
    return torch.stack(torch.meshgrid(*([axis] * dims), indexing="ij"))


def _uniform(generator: torch.Generator, bounds: Tuple[float, float], n: int) -> torch.Tensor:
    low, high = bounds
    return low + (high - low) * torch.rand(n, generator=generator, dtype=torch.float64)


def sample_ic(
    spec: IcSpec,
    resolution: int,
    dims: int,
    seed: int,
    *,
    dtype: torch.dtype = torch.float64,
) -> Field:
    """
    Draw one initial condition on a ``resolution^D`` periodic grid.

    For ``D = 2`` each ``n_i`` is an integer vector whose components are drawn
    independently, and ``n_i . x`` is the dot product.

    Parameters
    ----------
    spec: IcSpec
        The distribution.
    resolution: int
        Points per axis.
    dims: int
        1 or 2.
    seed: int
        Per-sample seed; equal seeds give identical fields.

    Returns
    -------
    Field
        ``[1, S, ..., S]``.
    """
    spec.validate().check_resolution(resolution)
    if dims not in (1, 2):
        raise UsageError(f"dims must be 1 or 2, got {dims}.")
    generator = make_generator(seed, "ic")
    amplitudes = _uniform(generator, spec.amplitude, spec.n_terms)
    wavenumbers = torch.randint(
        spec.min_wavenumber,
        spec.max_wavenumber + 1,
        (spec.n_terms, dims),
        generator=generator,
    ).to(torch.float64)
    phases = _uniform(generator, spec.phase, spec.n_terms)
    x = grid(resolution, dims)
    # [J, S, ..., S]
    dot = torch.tensordot(wavenumbers, x, dims=([1], [0]))
    shape = (spec.n_terms,) + (1,) * dims
    field = (amplitudes.view(shape) * torch.sin(2.0 * math.pi * dot + phases.view(shape))).sum(0)
    return field.unsqueeze(0).to(dtype)
