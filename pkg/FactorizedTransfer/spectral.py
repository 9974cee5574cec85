"""
Per-axis real Fourier transforms.

Forward transforms are unnormalized and inverses carry the 1/S factor, so the
grid size cancels through a spectral multiply. Only the non-negative half of
each spectrum is stored; negative frequencies are the implicit conjugates.
"""

from __future__ import annotations

import math
from typing import NamedTuple, Optional, Tuple

import torch
from typing_extensions import TypeAlias

from .exceptions import UsageError


__all__: Tuple[str, ...] = (
    "Field",
    "AxisSpectrum",
    "check_field",
    "rfft_axis",
    "irfft_axis",
    "truncate_modes",
    "dft_oracle",
    "idft_oracle",
)

Field: TypeAlias = torch.Tensor

IMAG_RESIDUE_TOL: float = 1e-5


class AxisSpectrum(NamedTuple):
    """
    Half spectrum of a field along one spatial axis.

    Attributes
    ----------
    coeffs: torch.Tensor
        Complex coefficients; the transformed axis holds frequencies ``0 .. S//2``.
    axis: int
        Index of the transformed spatial axis, counted from the first spatial axis.
    source_len: int
        Grid extent ``S`` of the transformed axis, needed for inversion.
    dims: int
        Number of trailing spatial axes of ``coeffs``.
    """

    coeffs: torch.Tensor
    axis: int
    source_len: int
    dims: int

    @property
    def dim(self) -> int:
        return self.axis - self.dims

    @property
    def n_freqs(self) -> int:
        return self.source_len // 2 + 1


def check_field(f: Field, dims: int, *, channels: Optional[int] = None) -> None:
    """
    Validate that ``f`` is a ``[C, S_1, ..., S_D]`` field, optionally batched.

    Raises
    ------
    UsageError
        The tensor is not a real floating field of the requested layout.
    """
    if dims not in (1, 2):
        raise UsageError(f"Only 1 or 2 spatial axes are supported, got {dims}.")
    if f.dim() not in (dims + 1, dims + 2):
        raise UsageError(
            f"Expected a field with {dims} spatial axes, got tensor of shape {tuple(f.shape)}."
        )
    if not f.is_floating_point():
        raise UsageError(f"Fields must hold real floating values, got {f.dtype}.")
    if channels is not None and f.shape[-dims - 1] != channels:
        raise UsageError(f"Expected {channels} channels, got {f.shape[-dims - 1]}.")


def _resolve(f: torch.Tensor, axis: int, dims: Optional[int]) -> Tuple[int, int]:
    dims = f.dim() - 1 if dims is None else dims
    if not 0 <= axis < dims:
        raise UsageError(f"Axis {axis} is out of range for a field with {dims} spatial axes.")
    dim = axis - dims
    if f.shape[dim] < 2:
        raise UsageError(f"Axis {axis} has extent {f.shape[dim]}; at least 2 points are needed.")
    return dims, dim


def rfft_axis(f: Field, axis: int, *, dims: Optional[int] = None) -> AxisSpectrum:
    """
    Forward real-to-complex transform along one spatial axis.

    ``coeffs[k] = sum_j f[j] * exp(-2*pi*i*j*k/S)`` for ``k = 0 .. S//2``.

    Parameters
    ----------
    f: Field
        Field of shape ``[..., C, S_1, ..., S_D]``.
    axis: int
        Spatial axis to transform.
    dims: Optional[int]
        Number of trailing spatial axes. Defaults to ``f.dim() - 1``, i.e. an unbatched field.

    Returns
    -------
    AxisSpectrum
        The half spectrum along ``axis``.

    Raises
    ------
    UsageError
        ``axis`` is out of range or its extent is below 2.
    """
    dims, dim = _resolve(f, axis, dims)
    size = f.shape[dim]
    coeffs = torch.fft.rfft(f, dim=dim, norm="backward")
    return AxisSpectrum(coeffs, axis, size, dims)


def _imag_residue(s: AxisSpectrum) -> torch.Tensor:
    dc = s.coeffs.narrow(s.dim, 0, 1).imag
    residue = dc.square().sum()
    if s.source_len % 2 == 0:
        nyquist = s.coeffs.narrow(s.dim, s.source_len // 2, 1).imag
        residue = residue + nyquist.square().sum()
    return residue.sqrt()


def irfft_axis(s: AxisSpectrum, *, check: bool = False) -> Field:
    """
    Inverse of `rfft_axis`, scaled by ``1/S``.

    The imaginary parts of the frequency-0 and Nyquist coefficients carry no
    information for a real output and are discarded.

    Parameters
    ----------
    s: AxisSpectrum
        The spectrum to invert.
    check: bool
        Verify that the discarded imaginary residue is below ``1e-5`` of the output norm.

    Raises
    ------
    UsageError
        The spectrum is malformed, or ``check`` is set and the residue is too large.
    """
    if s.coeffs.shape[s.dim] != s.n_freqs:
        raise UsageError(
            f"Spectrum holds {s.coeffs.shape[s.dim]} frequencies along axis {s.axis}; "
            f"{s.n_freqs} expected for source length {s.source_len}."
        )
    out = torch.fft.irfft(s.coeffs, n=s.source_len, dim=s.dim, norm="backward")
    if check:
        residue = float(_imag_residue(s)) / s.source_len
        scale = float(torch.linalg.vector_norm(out))
        if residue > IMAG_RESIDUE_TOL * max(scale, 1e-30):
            raise UsageError(
                f"Spectrum is not Hermitian: imaginary residue {residue:.3e} "
                f"against output norm {scale:.3e}."
            )
    return out


def truncate_modes(s: AxisSpectrum, modes: int) -> AxisSpectrum:
    """
    Zero every coefficient with frequency ``k >= modes``; the shape is unchanged.

    Raises
    ------
    UsageError
        ``modes`` is zero or exceeds ``S//2 + 1``.
    """
    if modes < 1:
        raise UsageError("At least one Fourier mode must be retained.")
    if modes > s.n_freqs:
        raise UsageError(
            f"Cannot keep {modes} modes of an axis with only {s.n_freqs} frequencies."
        )
    coeffs = s.coeffs.clone()
    coeffs.narrow(s.dim, modes, s.n_freqs - modes).zero_()
    return s._replace(coeffs=coeffs)


def _phase_matrix(size: int, sign: float) -> torch.Tensor:
    k = torch.arange(size // 2 + 1, dtype=torch.int64)
    j = torch.arange(size, dtype=torch.int64)
    # reduce k*j mod S before scaling so the angle stays accurate for large S
    angle = sign * 2.0 * math.pi * (torch.outer(k, j) % size).to(torch.float64) / size
    return torch.polar(torch.ones_like(angle), angle)


def dft_oracle(f: Field, axis: int, *, dims: Optional[int] = None) -> AxisSpectrum:
    """
    Same contract as `rfft_axis`, computed by explicit O(S^2) summation in float64.

    Only meant for testing.
    """
    dims, dim = _resolve(f, axis, dims)
    size = f.shape[dim]
    moved = f.to(torch.float64).movedim(dim, -1).to(torch.complex128)
    coeffs = moved @ _phase_matrix(size, -1.0).transpose(0, 1)
    return AxisSpectrum(coeffs.movedim(-1, dim), axis, size, dims)


def idft_oracle(s: AxisSpectrum) -> Field:
    """
    Dense float64 inverse of a half spectrum, the counterpart of `dft_oracle`.

    Each stored frequency ``0 < k < S/2`` stands for itself and its conjugate,
    hence the doubled weight.
    """
    size = s.source_len
    weights = torch.full((s.n_freqs,), 2.0, dtype=torch.float64)
    weights[0] = 1.0
    if size % 2 == 0:
        weights[-1] = 1.0
    moved = s.coeffs.to(torch.complex128).movedim(s.dim, -1) * weights
    basis = _phase_matrix(size, 1.0)
    out = (moved @ basis).real / size
    return out.movedim(-1, s.dim)
