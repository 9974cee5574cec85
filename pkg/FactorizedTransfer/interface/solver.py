from __future__ import annotations

from typing import TYPE_CHECKING, Protocol, Tuple

import torch

if TYPE_CHECKING:
    from ..datagen.dataset import PdeSpec
    from ..spectral import Field


__all__: Tuple[str, ...] = ("Solver",)


class _Solver(Protocol):
    ACCEPTED_NAMES: Tuple[str, ...]

    def __repr__(self) -> str: ...

    @classmethod
    def will_accept(cls, pde: PdeSpec) -> bool: ...

    def snapshots(self, u0: Field, pde: PdeSpec) -> torch.Tensor: ...


class Solver(_Solver):
    """
    The base class for PDE trajectory solvers.

    Implementations must subclass this to add a PDE family to the generator.

    Attributes
    ----------
    ACCEPTED_NAMES: Tuple[str, ...]
        The PDE family names this solver handles. This ideally should be set as a class attribute.
    """

    ACCEPTED_NAMES: Tuple[str, ...] = ()

    def __repr__(self) -> str:
        return f"<{type(self).__qualname__} at {hex(id(self))}>"

    @classmethod
    def will_accept(cls, pde: PdeSpec) -> bool:
        """
        Describes whether the solver handles the given :class:`~FactorizedTransfer.PdeSpec`.

        Parameters
        ----------
        pde: PdeSpec
            The equation to solve.

        Returns
        -------
        bool
            Whether ``pde.family`` is one of ``ACCEPTED_NAMES``.
        """
        return pde.family.lower() in cls.ACCEPTED_NAMES

    def snapshots(self, u0: Field, pde: PdeSpec) -> torch.Tensor:
        """
        Solve from ``u0`` and return every recorded snapshot.

        Subclasses must implement this.

        Parameters
        ----------
        u0: Field
            Initial state ``[1, S_1, ..., S_D]``.
        pde: PdeSpec
            Equation, coefficient and time grid.

        Returns
        -------
        torch.Tensor
            ``[T, S_1, ..., S_D]`` with ``T = pde.n_snapshots`` and snapshot 0 equal to ``u0``.

        Raises
        ------
        NotImplementedError
            The subclass did not implement this required method.
        """
        raise NotImplementedError
