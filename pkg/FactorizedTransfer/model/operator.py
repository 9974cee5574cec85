from __future__ import annotations

from typing import Callable, Dict, Optional, Sequence, Tuple

import torch
import torch.nn.functional as F

from ..exceptions import UsageError
from ..spectral import AxisSpectrum, Field, check_field, irfft_axis, rfft_axis
from .config import FfnoConfig
from .params import PROJ_IN, PROJ_OUT, FfnoParams


__all__: Tuple[str, ...] = ("factorized_spectral_conv", "ffno_layer", "forward", "pointwise")


ACTIVATIONS: Dict[str, Callable[[torch.Tensor], torch.Tensor]] = {
    "relu": F.relu,
    "gelu": F.gelu,
}


def pointwise(
    weight: torch.Tensor, bias: Optional[torch.Tensor], z: Field, dims: int
) -> Field:
    """Apply the affine map ``weight @ z + bias`` independently at every grid position."""
    channel = -dims - 1
    if z.shape[channel] != weight.shape[1]:
        raise UsageError(
            f"Affine map expects {weight.shape[1]} channels, got {z.shape[channel]}."
        )
    return F.linear(z.movedim(channel, -1), weight, bias).movedim(-1, channel)


def _mix_modes(spectrum: AxisSpectrum, weight: torch.Tensor, modes: int) -> AxisSpectrum:
    channel = -spectrum.dims - 1
    kept = spectrum.coeffs.narrow(spectrum.dim, 0, modes).movedim(spectrum.dim, -1)
    # [..., M, H_in] against [H_out, H_in, M]
    kept = kept.movedim(channel, -1)
    mixed = torch.einsum("...ki,oik->...ko", kept, weight)
    mixed = mixed.movedim(-1, channel).movedim(-1, spectrum.dim)
    shape = list(mixed.shape)
    shape[spectrum.dim] = spectrum.n_freqs - modes
    padding = torch.zeros(shape, dtype=mixed.dtype, device=mixed.device)
    return spectrum._replace(coeffs=torch.cat([mixed, padding], dim=spectrum.dim))


def factorized_spectral_conv(
    z: Field, weights: Sequence[torch.Tensor], modes: int
) -> Field:
    """
    Factorized kernel integral: ``sum_d IFFT_d(R_d . FFT_d(z))``.

    For every retained mode ``k < modes`` the complex ``H x H`` matrix ``R_d[:, :, k]``
    mixes channels; higher modes contribute nothing. There is no residual inside.

    Parameters
    ----------
    z: Field
        Latent field ``[..., H, S_1, ..., S_D]``.
    weights: Sequence[torch.Tensor]
        One complex ``[H, H, M]`` tensor per spatial axis; ``D = len(weights)``.
    modes: int
        Number of retained modes ``M``.

    Raises
    ------
    UsageError
        Channel count or spectral weight shape mismatch, or an extent below ``2 * modes``.
    """
    dims = len(weights)
    check_field(z, dims)
    width = z.shape[-dims - 1]
    out: Optional[Field] = None
    for axis, weight in enumerate(weights):
        if tuple(weight.shape) != (width, width, modes):
            raise UsageError(
                f"Fourier weight of axis {axis} has shape {tuple(weight.shape)}, "
                f"expected {(width, width, modes)} for {width} channels."
            )
        spectrum = rfft_axis(z, axis, dims=dims)
        if spectrum.source_len < 2 * modes:
            raise UsageError(
                f"Axis {axis} has {spectrum.source_len} points; {2 * modes} needed "
                f"for {modes} modes."
            )
        term = irfft_axis(_mix_modes(spectrum, weight, modes))
        out = term if out is None else out + term
    assert out is not None
    return out


def ffno_layer(z: Field, params: FfnoParams, layer: int) -> Field:
    """
    One operator layer: ``z + W2 . act(W1 . K(z) + b1) + b2``.

    The residual branch is the untouched input.
    """
    cfg = params.config
    kernel = factorized_spectral_conv(
        z, [params.fourier(layer, axis) for axis in cfg.axes], cfg.modes
    )
    prefix = f"layer.{layer}.ff"
    hidden = pointwise(params[f"{prefix}.w1"], params[f"{prefix}.b1"], kernel, cfg.dims)
    hidden = ACTIVATIONS[cfg.activation](hidden)
    return z + pointwise(params[f"{prefix}.w2"], params[f"{prefix}.b2"], hidden, cfg.dims)


def forward(params: FfnoParams, u: Field, cfg: Optional[FfnoConfig] = None) -> Field:
    """
    Evaluate ``Q(L_{L-1}(... L_0(P(u))))``.

    Parameters
    ----------
    params: FfnoParams
        Model parameters.
    u: Field
        Single-channel state, ``[1, S_1, ..., S_D]`` or batched ``[B, 1, S_1, ..., S_D]``.
    cfg: Optional[FfnoConfig]
        Defaults to ``params.config``; when passed it must equal it.

    Returns
    -------
    Field
        Prediction of the next state, same shape as ``u``.

    Raises
    ------
    UsageError
        ``u`` has the wrong layout or a spatial extent below ``2 * modes``.
    """
    if cfg is None:
        cfg = params.config
    elif cfg != params.config:
        raise UsageError(f"Config {cfg!r} does not match the parameters' {params.config!r}.")
    check_field(u, cfg.dims, channels=cfg.in_channels)
    for extent in u.shape[-cfg.dims :]:
        if extent < cfg.min_extent():
            raise UsageError(
                f"Spatial extent {extent} is below {cfg.min_extent()} for {cfg.modes} modes."
            )
    z = pointwise(params[f"{PROJ_IN}.w"], params[f"{PROJ_IN}.b"], u, cfg.dims)
    for layer in range(cfg.layers):
        z = ffno_layer(z, params, layer)
    return pointwise(params[f"{PROJ_OUT}.w"], params[f"{PROJ_OUT}.b"], z, cfg.dims)
