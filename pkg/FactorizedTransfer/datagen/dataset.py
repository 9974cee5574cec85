from __future__ import annotations

import logging
import os
from pathlib import Path
from typing import Any, Dict, List, Literal, NamedTuple, Optional, Tuple, Type, Union

import numpy as np
import orjson
import torch

from ..exceptions import DatasetFormatError, SolverError, UsageError
from ..interface import Solver
from ..solver import AdvectionSolver, DiffusionSolver
from ..training.loss import PairBatch
from ..utils import atomic_write, derive_seed, make_generator
from .initial import IcSpec, sample_ic


__all__: Tuple[str, ...] = (
    "PdeSpec",
    "TrajectoryDataset",
    "SOLVERS",
    "generate",
    "pairs",
    "subset",
    "split",
    "save_dataset",
    "load_dataset",
    "sidecar_path",
    "DATASET_MAGIC",
    "DATASET_VERSION",
)

log: logging.Logger = logging.getLogger(__name__)

DATASET_MAGIC: bytes = b"PLWD"
DATASET_VERSION: int = 1

Split = Literal["train", "valid"]
PathLike = Union[str, "os.PathLike[str]"]

SOLVERS: Tuple[Type[Solver], ...] = (DiffusionSolver, AdvectionSolver)

_SCALARS: Dict[int, Tuple[str, torch.dtype]] = {
    4: ("<f4", torch.float32),
    8: ("<f8", torch.float64),
}


def _integral_ratio(numerator: float, denominator: float, what: str) -> int:
    ratio = numerator / denominator
    rounded = round(ratio)
    if rounded < 1 or abs(ratio - rounded) > 1e-9 * max(1.0, ratio):
        raise UsageError(f"{what} must be a positive integer, got {ratio!r}.")
    return rounded


class PdeSpec(NamedTuple):
    """
    A linear periodic PDE on ``[0, 1)^D`` and the time grid it is recorded on.

    Attributes
    ----------
    family: str
        ``"diffusion"`` or ``"advection"``.
    coefficient: float
        ``nu`` for diffusion, ``beta`` for advection.
    dims: int
        1 or 2.
    resolution: int
        Points per axis.
    record_dt: float
        Interval between recorded snapshots.
    horizon: float
        Final recorded time.
    solve_dt: float
        Implicit Euler step, used by diffusion only.
    """

    family: str
    coefficient: float
    dims: int
    resolution: int
    record_dt: float = 0.05
    horizon: float = 1.0
    solve_dt: float = 0.001

    @property
    def n_snapshots(self) -> int:
        return _integral_ratio(self.horizon, self.record_dt, "horizon / record_dt") + 1

    @property
    def steps_per_record(self) -> int:
        return _integral_ratio(self.record_dt, self.solve_dt, "record_dt / solve_dt")

    @property
    def spatial_shape(self) -> Tuple[int, ...]:
        return (self.resolution,) * self.dims

    def validate(self) -> PdeSpec:
        if self.dims not in (1, 2):
            raise UsageError(f"dims must be 1 or 2, got {self.dims}.")
        if self.resolution < 2:
            raise UsageError(f"resolution must be at least 2, got {self.resolution}.")
        _ = (self.n_snapshots, self.steps_per_record)
        solver_for(self)
        return self


def solver_for(pde: PdeSpec) -> Solver:
    """Instantiate the first registered solver that accepts ``pde.family``."""
    for cls in SOLVERS:
        if cls.will_accept(pde):
            return cls()
    names = sorted(name for cls in SOLVERS for name in cls.ACCEPTED_NAMES)
    raise UsageError(f"Unknown PDE family {pde.family!r}; expected one of {names}.")


class TrajectoryDataset:
    """
    A stack of recorded trajectories with the metadata needed to regenerate them.

    Attributes
    ----------
    data: torch.Tensor
        ``[n_samples, T, S_1, ..., S_D]``.
    pde: PdeSpec
    ic: IcSpec
    master_seed: int
    split: str
        ``"train"`` or ``"valid"``.
    """

    __slots__ = ("data", "pde", "ic", "master_seed", "split")

    def __init__(
        self,
        data: torch.Tensor,
        pde: PdeSpec,
        ic: IcSpec,
        master_seed: int,
        split: str = "train",
    ) -> None:
        expected = (pde.n_snapshots,) + pde.spatial_shape
        if data.dim() != pde.dims + 2 or tuple(data.shape[1:]) != expected:
            raise UsageError(
                f"Dataset tensor has shape {tuple(data.shape)}, expected (n, *{expected})."
            )
        self.data = data
        self.pde = pde
        self.ic = ic
        self.master_seed = master_seed
        self.split = split

    def __repr__(self) -> str:
        return (
            f"<TrajectoryDataset family={self.pde.family!r} coefficient={self.pde.coefficient}"
            f" dims={self.pde.dims} n_samples={self.n_samples} split={self.split!r}>"
        )

    def __len__(self) -> int:
        return self.n_samples

    @property
    def n_samples(self) -> int:
        return self.data.shape[0]

    @property
    def n_snapshots(self) -> int:
        return self.data.shape[1]

    def select(self, indices: torch.Tensor, split: Optional[str] = None) -> TrajectoryDataset:
        return TrajectoryDataset(
            self.data[indices], self.pde, self.ic, self.master_seed, split or self.split
        )

    def to(self, dtype: torch.dtype) -> TrajectoryDataset:
        return TrajectoryDataset(
            self.data.to(dtype), self.pde, self.ic, self.master_seed, self.split
        )

    def metadata(self) -> Dict[str, Any]:
        return {
            "family": self.pde.family,
            "coefficient": self.pde.coefficient,
            "pde": self.pde._asdict(),
            "ic": self.ic._asdict(),
            "master_seed": self.master_seed,
            "split": self.split,
        }


def generate(
    pde: PdeSpec,
    ic: IcSpec,
    n_samples: int,
    master_seed: int,
    *,
    split: Split = "train",
    dtype: torch.dtype = torch.float32,
) -> TrajectoryDataset:
    """
    Solve ``n_samples`` trajectories of ``pde`` from initial conditions drawn from ``ic``.

    Sample ``i`` is seeded with ``derive_seed(master_seed, i)`` so any sample can be
    regenerated on its own. States are solved in float64 and stored as ``dtype``.

    Raises
    ------
    SolverError
        A sample produced a non-finite state.
    """
    pde.validate()
    ic.validate().check_resolution(pde.resolution)
    if n_samples < 1:
        raise UsageError(f"n_samples must be at least 1, got {n_samples}.")
    solver = solver_for(pde)
    log.info(
        "Generating %d %s samples (coefficient=%s, dims=%d, resolution=%d) with %r",
        n_samples,
        pde.family,
        pde.coefficient,
        pde.dims,
        pde.resolution,
        solver,
    )
    trajectories: List[torch.Tensor] = []
    for index in range(n_samples):
        u0 = sample_ic(ic, pde.resolution, pde.dims, derive_seed(master_seed, index))
        states = solver.snapshots(u0, pde)
        if not torch.isfinite(states).all():
            raise SolverError(index)
        trajectories.append(states.to(dtype))
        log.debug("sample %d done", index)
    return TrajectoryDataset(torch.stack(trajectories), pde, ic, master_seed, split)


def pairs(dataset: TrajectoryDataset) -> PairBatch:
    """
    Consecutive ``(u_t, u_{t+1})`` pairs, sample-major then time-ordered.

    Pair ``s * (T - 1) + k`` holds snapshots ``k`` and ``k + 1`` of sample ``s``.
    """
    data = dataset.data
    spatial = tuple(data.shape[2:])
    inputs = data[:, :-1].reshape((-1, 1) + spatial)
    targets = data[:, 1:].reshape((-1, 1) + spatial)
    return PairBatch(inputs, targets)


def subset(dataset: TrajectoryDataset, m: int, seed: int) -> TrajectoryDataset:
    """
    ``m`` whole trajectories drawn uniformly without replacement under ``seed``.

    The selected trajectories keep their original relative order.
    """
    if not 1 <= m <= dataset.n_samples:
        raise UsageError(f"Cannot select {m} of {dataset.n_samples} trajectories.")
    order = torch.randperm(dataset.n_samples, generator=make_generator(seed, "subset"))
    indices, _ = torch.sort(order[:m])
    return dataset.select(indices)


def split(dataset: TrajectoryDataset, n_valid: int) -> Tuple[TrajectoryDataset, TrajectoryDataset]:
    """Hold out the last ``n_valid`` trajectories as the validation split."""
    if not 1 <= n_valid < dataset.n_samples:
        raise UsageError(
            f"n_valid must be in [1, {dataset.n_samples - 1}], got {n_valid}."
        )
    cut = dataset.n_samples - n_valid
    train = dataset.select(torch.arange(cut), "train")
    valid = dataset.select(torch.arange(cut, dataset.n_samples), "valid")
    return train, valid


def sidecar_path(path: PathLike) -> Path:
    return Path(path).with_suffix(".json")


def _header(dataset: TrajectoryDataset, width: int) -> np.ndarray:
    fields = [DATASET_VERSION, dataset.pde.dims, dataset.n_snapshots, dataset.n_samples]
    fields.extend(dataset.data.shape[2:])
    fields.append(width)
    return np.array(fields, dtype="<u4")


def save_dataset(dataset: TrajectoryDataset, path: PathLike) -> Path:
    """
    Write ``dataset`` as a little-endian binary plus a JSON sidecar with the same basename.

    Returns
    -------
    Path
        The binary file path.
    """
    path = Path(path)
    width = dataset.data.element_size()
    if width not in _SCALARS:
        raise DatasetFormatError(f"Unsupported scalar width {width} for {dataset.data.dtype}.")
    code, _ = _SCALARS[width]
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_name(path.name + ".tmp")
    with open(tmp, "wb") as fp:
        fp.write(DATASET_MAGIC)
        _header(dataset, width).tofile(fp)
        dataset.data.detach().cpu().contiguous().numpy().astype(code).tofile(fp)
    os.replace(tmp, path)
    atomic_write(
        sidecar_path(path),
        orjson.dumps(dataset.metadata(), option=orjson.OPT_INDENT_2 | orjson.OPT_SORT_KEYS),
    )
    log.info("Wrote %r to %s", dataset, path)
    return path


def _read_u32(buffer: bytes, offset: int, count: int, path: Path) -> List[int]:
    end = offset + 4 * count
    if len(buffer) < end:
        raise DatasetFormatError(f"{path}: truncated header.")
    return [int(v) for v in np.frombuffer(buffer, dtype="<u4", count=count, offset=offset)]


def _read_sidecar(path: Path) -> Dict[str, Any]:
    meta_path = sidecar_path(path)
    try:
        meta = orjson.loads(meta_path.read_bytes())
    except FileNotFoundError:
        raise DatasetFormatError(f"{path}: missing sidecar {meta_path.name}.") from None
    except orjson.JSONDecodeError as error:
        raise DatasetFormatError(f"{meta_path}: invalid JSON ({error}).") from error
    if not isinstance(meta, dict):
        raise DatasetFormatError(f"{meta_path}: expected a JSON object.")
    return meta


def load_dataset(path: PathLike, *, dtype: Optional[torch.dtype] = None) -> TrajectoryDataset:
    """
    Read a dataset written by `save_dataset`.

    The whole file is validated before a dataset is built, so a truncated or
    corrupted file never yields a partial dataset.

    Raises
    ------
    DatasetFormatError
        Bad magic, unknown version, truncated payload, trailing bytes, or a
        sidecar that disagrees with the header.
    """
    path = Path(path)
    try:
        buffer = path.read_bytes()
    except FileNotFoundError:
        raise UsageError(f"Dataset file {path} does not exist.") from None
    if buffer[:4] != DATASET_MAGIC:
        raise DatasetFormatError(f"{path}: bad magic {buffer[:4]!r}.")
    version, dims, n_snapshots, n_samples = _read_u32(buffer, 4, 4, path)
    if version != DATASET_VERSION:
        raise DatasetFormatError(f"{path}: format version {version}, expected {DATASET_VERSION}.")
    if dims not in (1, 2):
        raise DatasetFormatError(f"{path}: invalid dimension count {dims}.")
    *resolutions, width = _read_u32(buffer, 20, dims + 1, path)
    if width not in _SCALARS:
        raise DatasetFormatError(f"{path}: invalid scalar width {width}.")
    offset = 20 + 4 * (dims + 1)
    shape = (n_samples, n_snapshots, *resolutions)
    count = int(np.prod(shape))
    if len(buffer) != offset + count * width:
        raise DatasetFormatError(
            f"{path}: payload holds {len(buffer) - offset} bytes, expected {count * width}."
        )
    code, stored = _SCALARS[width]

    meta = _read_sidecar(path)
    try:
        pde = PdeSpec(**meta["pde"])
        ic_fields = dict(meta["ic"])
        ic_fields["amplitude"] = tuple(ic_fields["amplitude"])
        ic_fields["phase"] = tuple(ic_fields["phase"])
        ic = IcSpec(**ic_fields)
        master_seed = int(meta["master_seed"])
        split_tag = str(meta["split"])
    except (KeyError, TypeError, ValueError) as error:
        raise DatasetFormatError(f"{path}: malformed sidecar ({error}).") from error
    if pde.dims != dims or pde.spatial_shape != tuple(resolutions):
        raise DatasetFormatError(f"{path}: sidecar grid disagrees with the binary header.")
    if pde.n_snapshots != n_snapshots:
        raise DatasetFormatError(f"{path}: sidecar time grid disagrees with the binary header.")

    array = np.frombuffer(buffer, dtype=code, count=count, offset=offset).reshape(shape)
    data = torch.from_numpy(array.astype(array.dtype.newbyteorder("="))).to(stored)
    if dtype is not None:
        data = data.to(dtype)
    return TrajectoryDataset(data, pde, ic, master_seed, split_tag)
