from __future__ import annotations

from typing import TYPE_CHECKING, Protocol, Tuple

if TYPE_CHECKING:
    from ..spectral import Field


__all__: Tuple[str, ...] = ("Stepper",)


class _Stepper(Protocol):
    def __repr__(self) -> str: ...

    def step(self, u: Field) -> Field: ...


class Stepper(_Stepper):
    """
    The base class for one-step state maps ``u_t -> u_{t+1}``.

    Evaluation only talks to steppers, so a trained operator and an exact
    oracle are scored the same way. Implementations must subclass this.
    """

    def __repr__(self) -> str:
        return f"<{type(self).__qualname__} at {hex(id(self))}>"

    def __call__(self, u: Field) -> Field:
        return self.step(u)

    def step(self, u: Field) -> Field:
        """
        Predict the next state of a batch.

        Subclasses must implement this.

        Parameters
        ----------
        u: Field
            Batched states ``[B, 1, S_1, ..., S_D]``.

        Returns
        -------
        Field
            Predicted next states of the same shape.

        Raises
        ------
        NotImplementedError
            The subclass did not implement this required method.
        """
        raise NotImplementedError
