"""
Resumable sweeps over fine-tuning tags, downstream sample counts and seeds.

Each cell is an independent job. Finished cells are appended to ``raw.csv`` as
soon as they complete, so an interrupted sweep picks up where it stopped.
"""

from __future__ import annotations

import functools
import logging
import multiprocessing
import os
import time
from concurrent.futures import Future, ProcessPoolExecutor, as_completed
from contextlib import contextmanager
from pathlib import Path
from typing import Dict, Iterator, List, NamedTuple, Optional, Set, Tuple, Union

import torch

from ..datagen import TrajectoryDataset, load_dataset
from ..exceptions import CellError, FactorizedTransferError, UsageError
from ..model import FfnoConfig, FfnoParams
from .checkpoint import load_checkpoint
from .experiment import Cell, ExperimentSpec, finetune, records_for, score
from .metrics import (
    AveragedRecord,
    MetricsRecord,
    average,
    read_metrics,
    sort_records,
    write_averaged,
    write_metrics,
)


__all__: Tuple[str, ...] = ("SweepPlan", "SweepResult", "run_cell", "run_sweep", "LOG_FORMAT")

log: logging.Logger = logging.getLogger(__name__)

PathLike = Union[str, "os.PathLike[str]"]

RAW_NAME: str = "raw.csv"
AVERAGED_NAME: str = "averaged.csv"

LOG_FORMAT: str = "%(asctime)s %(levelname)-8s %(name)s: %(message)s"


class SweepPlan(NamedTuple):
    """
    A sweep and the files it reads.

    Attributes
    ----------
    experiment: ExperimentSpec
    train_data: str
        2D training pool that downstream samples are drawn from.
    valid_data: str
        2D validation set.
    checkpoint: Optional[str]
        Pretrained 1D checkpoint; required unless every tag is C0.
    wall_time: bool
        Record measured wall time instead of ``0.0``.
    """

    experiment: ExperimentSpec
    train_data: str
    valid_data: str
    checkpoint: Optional[str] = None
    wall_time: bool = False


class SweepResult(NamedTuple):
    raw: List[MetricsRecord]
    averaged: List[AveragedRecord]
    ran: int
    skipped: int


@functools.lru_cache(maxsize=4)
def _dataset(path: str) -> TrajectoryDataset:
    return load_dataset(path)


@functools.lru_cache(maxsize=2)
def _pretrained(path: str, expected: FfnoConfig) -> FfnoParams:
    return load_checkpoint(path, expected).params


def _check_data(
    plan: SweepPlan, train_ds: TrajectoryDataset, valid_ds: TrajectoryDataset
) -> None:
    spec = plan.experiment
    expected = spec.profile.pde(spec.family, spec.coefficient, 2)
    for name, ds in (("training", train_ds), ("validation", valid_ds)):
        if ds.pde != expected:
            raise UsageError(
                f"The {name} dataset was generated for {ds.pde}, expected {expected}."
            )
    if max(spec.counts) > train_ds.n_samples:
        raise UsageError(
            f"Sample count {max(spec.counts)} exceeds the"
            f" {train_ds.n_samples} training trajectories."
        )


def run_cell(plan: SweepPlan, cell: Cell) -> List[MetricsRecord]:
    """Fine-tune and score one ``(tag, n_samples, seed)`` cell."""
    spec = plan.experiment
    train_ds, valid_ds = _dataset(plan.train_data), _dataset(plan.valid_data)
    _check_data(plan, train_ds, valid_ds)
    pretrained = None
    if cell.tag.pretrained:
        if plan.checkpoint is None:
            raise UsageError(f"{cell.tag} needs a pretrained checkpoint.")
        pretrained = _pretrained(plan.checkpoint, spec.profile.config(1))
    started = time.perf_counter()
    result = finetune(
        cell.tag,
        pretrained,
        train_ds,
        cell.n_samples,
        cell.seed,
        spec.profile.config(2),
        spec.train_config,
    )
    scores = score(result.params, valid_ds, spec.rollouts)
    elapsed = time.perf_counter() - started if plan.wall_time else 0.0
    log.info("Cell %s: %s", cell, ", ".join(f"r{d}={v:.4f}" for d, v in scores.items()))
    return records_for(cell, scores, len(result.trace), result.final_lr, elapsed)


def _guarded(plan: SweepPlan, cell: Cell) -> List[MetricsRecord]:
    try:
        return run_cell(plan, cell)
    except FactorizedTransferError:
        raise
    except Exception as error:
        raise CellError(tuple(cell), error) from error


@contextmanager
def _single_thread() -> Iterator[None]:
    previous = torch.get_num_threads()
    torch.set_num_threads(1)
    try:
        yield
    finally:
        torch.set_num_threads(previous)


def _init_worker(level: int) -> None:
    """Give a pool process the parent's log level and the same single torch thread."""
    logging.basicConfig(level=level, format=LOG_FORMAT)
    torch.set_num_threads(1)


def _completed(
    records: List[MetricsRecord], rollouts: Tuple[int, ...]
) -> Set[Tuple[str, int, int]]:
    depths: Dict[Tuple[str, int, int], Set[int]] = {}
    for record in records:
        depths.setdefault(record.cell, set()).add(record.rollout)
    return {cell for cell, seen in depths.items() if seen >= set(rollouts)}


def run_sweep(plan: SweepPlan, out_dir: PathLike, workers: int = 1) -> SweepResult:
    """
    Run every pending cell of ``plan`` and write ``raw.csv`` and ``averaged.csv``.

    Cells whose every rollout depth is already in ``out_dir/raw.csv`` are skipped.
    Rows are written sorted, so the output does not depend on completion order.

    Raises
    ------
    CellError
        A cell failed with an exception from outside this package.
    """
    spec = plan.experiment.validate()
    if spec.needs_pretrained and plan.checkpoint is None:
        raise UsageError("Tags other than C0 need --ckpt with a pretrained 1D checkpoint.")
    if workers < 1:
        raise UsageError(f"workers must be positive, got {workers}.")
    out = Path(out_dir)
    raw_path = out / RAW_NAME
    existing = read_metrics(raw_path) if raw_path.exists() else []
    done = _completed(existing, spec.rollouts)
    records = [r for r in existing if r.cell in done]
    cells = spec.cells()
    pending = [c for c in cells if (str(c.tag), c.n_samples, c.seed) not in done]
    skipped = len(cells) - len(pending)
    log.info("Sweep: %d cells, %d already done, %d to run", len(cells), skipped, len(pending))

    if workers == 1 or len(pending) <= 1:
        with _single_thread():
            for cell in pending:
                records.extend(_guarded(plan, cell))
                write_metrics(raw_path, records)
    else:
        context = multiprocessing.get_context("spawn")
        level = log.getEffectiveLevel()
        with ProcessPoolExecutor(
            workers, mp_context=context, initializer=_init_worker, initargs=(level,)
        ) as pool:
            futures: Dict[Future[List[MetricsRecord]], Cell] = {
                pool.submit(_guarded, plan, cell): cell for cell in pending
            }
            for future in as_completed(futures):
                records.extend(future.result())
                write_metrics(raw_path, records)
                log.debug("Cell %s finished", futures[future])

    write_metrics(raw_path, records)
    averaged = average(records)
    write_averaged(out / AVERAGED_NAME, averaged)
    return SweepResult(sort_records(records), averaged, len(pending), skipped)
