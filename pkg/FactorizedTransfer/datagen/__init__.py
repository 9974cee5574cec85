from __future__ import annotations

from typing import Tuple

from .dataset import (
    DATASET_MAGIC as DATASET_MAGIC,
    DATASET_VERSION as DATASET_VERSION,
    SOLVERS as SOLVERS,
    PdeSpec as PdeSpec,
    TrajectoryDataset as TrajectoryDataset,
    generate as generate,
    load_dataset as load_dataset,
    pairs as pairs,
    save_dataset as save_dataset,
    sidecar_path as sidecar_path,
    solver_for as solver_for,
    split as split,
    subset as subset,
)
from .initial import (
    IcSpec as IcSpec,
    grid as grid,
    sample_ic as sample_ic,
)

__all__: Tuple[str, ...] = (
    "DATASET_MAGIC",
    "DATASET_VERSION",
    "SOLVERS",
    "IcSpec",
    "PdeSpec",
    "TrajectoryDataset",
    "generate",
    "grid",
    "load_dataset",
    "pairs",
    "sample_ic",
    "save_dataset",
    "sidecar_path",
    "solver_for",
    "split",
    "subset",
)
