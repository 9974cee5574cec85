from __future__ import annotations

from typing import NamedTuple, Tuple

from typing_extensions import Literal

from ..exceptions import UsageError


__all__: Tuple[str, ...] = ("Activation", "FfnoConfig", "AXIS_NAMES")

Activation = Literal["relu", "gelu"]

AXIS_NAMES: Tuple[str, ...] = ("x", "y")


class FfnoConfig(NamedTuple):
    """
    Hyperparameters of a factorized Fourier neural operator.

    Attributes
    ----------
    dims: int
        Number of spatial axes, 1 or 2.
    layers: int
        Number of operator layers ``L``.
    width: int
        Latent dimension ``H``.
    modes: int
        Retained Fourier modes ``M``, identical on every axis.
    ff_expansion: int
        Hidden width of each feedforward block is ``ff_expansion * width``.
    activation: str
        ``"relu"`` or ``"gelu"``.
    in_channels: int
        Always 1, the state ``u_t``.
    out_channels: int
        Always 1.
    """

    dims: int = 1
    layers: int = 4
    width: int = 128
    modes: int = 16
    ff_expansion: int = 2
    activation: Activation = "relu"
    in_channels: int = 1
    out_channels: int = 1

    @property
    def hidden(self) -> int:
        return self.ff_expansion * self.width

    @property
    def axes(self) -> Tuple[str, ...]:
        return AXIS_NAMES[: self.dims]

    def validate(self) -> FfnoConfig:
        """
        Check every field and return ``self``.

        Raises
        ------
        UsageError
            A field is out of range; the message names it.
        """
        if self.dims not in (1, 2):
            raise UsageError(f"dims must be 1 or 2, got {self.dims}.")
        for name in ("layers", "width", "modes", "ff_expansion"):
            if getattr(self, name) < 1:
                raise UsageError(f"{name} must be at least 1, got {getattr(self, name)}.")
        if self.activation not in ("relu", "gelu"):
            raise UsageError(f"activation must be relu or gelu, got {self.activation!r}.")
        if (self.in_channels, self.out_channels) != (1, 1):
            raise UsageError("Only single-channel inputs and outputs are supported.")
        return self

    def min_extent(self) -> int:
        return 2 * self.modes
