from __future__ import annotations

from typing import Final, NamedTuple, Tuple

from .datagen import (
    IcSpec as IcSpec,
    PdeSpec as PdeSpec,
    TrajectoryDataset as TrajectoryDataset,
    generate as generate,
    load_dataset as load_dataset,
    pairs as pairs,
    sample_ic as sample_ic,
    save_dataset as save_dataset,
    split as split,
    subset as subset,
)
from .exceptions import (
    FactorizedTransferError as FactorizedTransferError,
    UsageError as UsageError,
    MetricError as MetricError,
    GradientError as GradientError,
    DivergenceError as DivergenceError,
    SolverError as SolverError,
    PersistenceError as PersistenceError,
    DatasetFormatError as DatasetFormatError,
    CheckpointError as CheckpointError,
    CellError as CellError,
)
from .harness import (
    Checkpoint as Checkpoint,
    ExperimentSpec as ExperimentSpec,
    MetricsRecord as MetricsRecord,
    evaluate_next_step as evaluate_next_step,
    evaluate_rollout as evaluate_rollout,
    load_checkpoint as load_checkpoint,
    save_checkpoint as save_checkpoint,
)
from .interface import (
    Solver as Solver,
    Stepper as Stepper,
)
from .model import (
    FfnoConfig as FfnoConfig,
    FfnoParams as FfnoParams,
    ParamCount as ParamCount,
    factorized_spectral_conv as factorized_spectral_conv,
    ffno_layer as ffno_layer,
    forward as forward,
    init_params as init_params,
    param_count as param_count,
)
from .solver import (
    AdvectionSolver as AdvectionSolver,
    DiffusionSolver as DiffusionSolver,
    advect_exact as advect_exact,
    diffusion_step as diffusion_step,
    diffusion_steps as diffusion_steps,
)
from .spectral import (
    Field as Field,
    dft_oracle as dft_oracle,
    idft_oracle as idft_oracle,
    irfft_axis as irfft_axis,
    rfft_axis as rfft_axis,
    truncate_modes as truncate_modes,
)
from .stepper import (
    FunctionStepper as FunctionStepper,
    OperatorStepper as OperatorStepper,
)
from .training import (
    PairBatch as PairBatch,
    TrainConfig as TrainConfig,
    adamw_step as adamw_step,
    grad as grad,
    loss_and_grad as loss_and_grad,
    plateau_step as plateau_step,
    rl2 as rl2,
    train as train,
)
from .transfer import (
    FinetuneConfig as FinetuneConfig,
    lift_1d_to_2d as lift_1d_to_2d,
    prepare_downstream as prepare_downstream,
    trainable_mask as trainable_mask,
)


__all__: Tuple[str, ...] = (
    "IcSpec",
    "PdeSpec",
    "TrajectoryDataset",
    "generate",
    "load_dataset",
    "pairs",
    "sample_ic",
    "save_dataset",
    "split",
    "subset",
    "FactorizedTransferError",
    "UsageError",
    "MetricError",
    "GradientError",
    "DivergenceError",
    "SolverError",
    "PersistenceError",
    "DatasetFormatError",
    "CheckpointError",
    "CellError",
    "Checkpoint",
    "ExperimentSpec",
    "MetricsRecord",
    "evaluate_next_step",
    "evaluate_rollout",
    "load_checkpoint",
    "save_checkpoint",
    "Solver",
    "Stepper",
    "FfnoConfig",
    "FfnoParams",
    "ParamCount",
    "factorized_spectral_conv",
    "ffno_layer",
    "forward",
    "init_params",
    "param_count",
    "AdvectionSolver",
    "DiffusionSolver",
    "advect_exact",
    "diffusion_step",
    "diffusion_steps",
    "Field",
    "dft_oracle",
    "idft_oracle",
    "irfft_axis",
    "rfft_axis",
    "truncate_modes",
    "FunctionStepper",
    "OperatorStepper",
    "PairBatch",
    "TrainConfig",
    "adamw_step",
    "grad",
    "loss_and_grad",
    "plateau_step",
    "rl2",
    "train",
    "FinetuneConfig",
    "lift_1d_to_2d",
    "prepare_downstream",
    "trainable_mask",
    "__version__",
    "VersionInfo",
    "version_info",
)


__version__: Final[str] = "1.0.0"


class VersionNamedTuple(NamedTuple):
    major: int
    minor: int
    micro: int


class VersionInfo(VersionNamedTuple):
    """
    Version information.

    Attributes
    ----------
    major: int
        Major version number.
    minor: int
        Minor version number.
    micro: int
        Micro version number.
    """

    __slots__: Tuple[str, ...] = ()

    def __str__(self) -> str:
        return "{major}.{minor}.{micro}".format(**self._asdict())

    @classmethod
    def from_str(cls, version: str) -> VersionInfo:
        return cls(*map(int, version.split(".")))


version_info: VersionInfo = VersionInfo.from_str(__version__)
