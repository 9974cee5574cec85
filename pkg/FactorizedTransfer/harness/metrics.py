from __future__ import annotations

import csv
import io
import logging
import math
import os
from collections import OrderedDict
from pathlib import Path
from typing import Dict, Iterable, List, NamedTuple, Optional, Sequence, Tuple, Union

from ..exceptions import UsageError
from ..transfer import FinetuneConfig
from ..utils import atomic_write


__all__: Tuple[str, ...] = (
    "MetricsRecord",
    "AveragedRecord",
    "METRICS_HEADER",
    "AVERAGED_HEADER",
    "sort_records",
    "average",
    "write_metrics",
    "read_metrics",
    "write_averaged",
)

log: logging.Logger = logging.getLogger(__name__)

PathLike = Union[str, "os.PathLike[str]"]

METRICS_HEADER: Tuple[str, ...] = (
    "tag",
    "n_samples",
    "seed",
    "rollout",
    "mean_rl2",
    "wall_time_s",
    "iterations",
    "final_lr",
)

AVERAGED_HEADER: Tuple[str, ...] = (
    "tag",
    "n_samples",
    "rollout",
    "n_seeds",
    "mean_rl2",
    "wall_time_s",
    "iterations",
    "final_lr",
    "rel_change_pct",
)

BASELINE: FinetuneConfig = FinetuneConfig.C0

TAG_ORDER: Dict[str, int] = {tag.value: index for index, tag in enumerate(FinetuneConfig)}


class MetricsRecord(NamedTuple):
    """One validation score of one fine-tuned model at one rollout depth."""

    tag: str
    n_samples: int
    seed: int
    rollout: int
    mean_rl2: float
    wall_time_s: float
    iterations: int
    final_lr: float

    @property
    def cell(self) -> Tuple[str, int, int]:
        return (self.tag, self.n_samples, self.seed)

    def sort_key(self) -> Tuple[int, int, int, int]:
        return (TAG_ORDER.get(self.tag, len(TAG_ORDER)), self.n_samples, self.seed, self.rollout)

    def row(self) -> Tuple[str, ...]:
        return (
            self.tag,
            str(self.n_samples),
            str(self.seed),
            str(self.rollout),
            repr(self.mean_rl2),
            repr(self.wall_time_s),
            str(self.iterations),
            repr(self.final_lr),
        )


class AveragedRecord(NamedTuple):
    """
    The seed average of one ``(tag, n_samples, rollout)`` cell.

    ``rel_change_pct`` is the percentage change of ``mean_rl2`` against the C0
    cell with the same sample count and rollout depth, ``None`` without one.
    """

    tag: str
    n_samples: int
    rollout: int
    n_seeds: int
    mean_rl2: float
    wall_time_s: float
    iterations: float
    final_lr: float
    rel_change_pct: Optional[float]

    def row(self) -> Tuple[str, ...]:
        return (
            self.tag,
            str(self.n_samples),
            str(self.rollout),
            str(self.n_seeds),
            repr(self.mean_rl2),
            repr(self.wall_time_s),
            repr(self.iterations),
            repr(self.final_lr),
            "" if self.rel_change_pct is None else repr(self.rel_change_pct),
        )


def sort_records(records: Iterable[MetricsRecord]) -> List[MetricsRecord]:
    return sorted(records, key=MetricsRecord.sort_key)


def _mean(values: Sequence[float]) -> float:
    return math.fsum(values) / len(values)


def average(records: Iterable[MetricsRecord]) -> List[AveragedRecord]:
    """
    Average raw records over seeds, then attach the relative change against C0.

    Returns
    -------
    List[AveragedRecord]
        One record per ``(tag, n_samples, rollout)``, in tag then count then depth order.
    """
    groups: Dict[Tuple[str, int, int], List[MetricsRecord]] = OrderedDict()
    for record in sort_records(records):
        groups.setdefault((record.tag, record.n_samples, record.rollout), []).append(record)

    baseline: Dict[Tuple[int, int], float] = {}
    means: Dict[Tuple[str, int, int], float] = {}
    for key, group in groups.items():
        means[key] = _mean([r.mean_rl2 for r in group])
        if key[0] == BASELINE.value:
            baseline[(key[1], key[2])] = means[key]

    averaged: List[AveragedRecord] = []
    for (tag, n_samples, rollout), group in groups.items():
        mean_rl2 = means[(tag, n_samples, rollout)]
        reference = baseline.get((n_samples, rollout))
        change = None
        if reference is not None and reference != 0:
            change = 100.0 * (mean_rl2 - reference) / reference
        averaged.append(
            AveragedRecord(
                tag,
                n_samples,
                rollout,
                len(group),
                mean_rl2,
                _mean([r.wall_time_s for r in group]),
                _mean([float(r.iterations) for r in group]),
                _mean([r.final_lr for r in group]),
                change,
            )
        )
    return averaged


def _render(header: Sequence[str], rows: Iterable[Sequence[str]]) -> bytes:
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    return buffer.getvalue().encode()


def write_metrics(path: PathLike, records: Iterable[MetricsRecord]) -> Path:
    """Write raw records, sorted, with the ``METRICS_HEADER`` header."""
    rows = [r.row() for r in sort_records(records)]
    return atomic_write(path, _render(METRICS_HEADER, rows))


def write_averaged(path: PathLike, records: Iterable[AveragedRecord]) -> Path:
    return atomic_write(path, _render(AVERAGED_HEADER, [r.row() for r in records]))


def read_metrics(path: PathLike) -> List[MetricsRecord]:
    """
    Read a raw metrics CSV.

    Raises
    ------
    UsageError
        The file is missing or its header or rows do not match ``METRICS_HEADER``.
    """
    path = Path(path)
    try:
        text = path.read_text()
    except FileNotFoundError:
        raise UsageError(f"Metrics file {path} does not exist.") from None
    reader = csv.reader(io.StringIO(text))
    header = next(reader, None)
    if header is None or tuple(header) != METRICS_HEADER:
        raise UsageError(f"{path}: expected header {','.join(METRICS_HEADER)}.")
    records: List[MetricsRecord] = []
    for line, row in enumerate(reader, start=2):
        if not row:
            continue
        try:
            tag, n_samples, seed, rollout, mean_rl2, wall, iterations, final_lr = row
            records.append(
                MetricsRecord(
                    str(FinetuneConfig.parse(tag)),
                    int(n_samples),
                    int(seed),
                    int(rollout),
                    float(mean_rl2),
                    float(wall),
                    int(iterations),
                    float(final_lr),
                )
            )
        except ValueError as error:
            raise UsageError(f"{path}:{line}: malformed row ({error}).") from error
    log.debug("Read %d records from %s", len(records), path)
    return records
