from __future__ import annotations

import argparse
import logging
from pathlib import Path
from typing import Any, Callable, Mapping, Optional, Sequence, Tuple

from ..datagen import PdeSpec, generate, load_dataset, save_dataset, split
from ..exceptions import FactorizedTransferError, UsageError
from ..training import TrainConfig, write_trace
from ..transfer import FinetuneConfig
from ..utils import file_id
from .checkpoint import load_checkpoint, save_checkpoint
from .experiment import (
    Cell,
    ExperimentSpec,
    finetune,
    pretrain,
    records_for,
    score,
    training_summary,
)
from .grid import parse_ints, parse_tags
from .metrics import average, read_metrics, write_averaged, write_metrics
from .profiles import PROFILES, Profile, get_profile
from .sweep import LOG_FORMAT, SweepPlan, run_sweep


__all__: Tuple[str, ...] = (
    "build_parser",
    "main",
    "cmd_generate",
    "cmd_pretrain",
    "cmd_finetune",
    "cmd_evaluate",
    "cmd_sweep",
    "cmd_report",
    "valid_path",
    "trace_path",
)

log: logging.Logger = logging.getLogger(__name__)


def valid_path(path: Path) -> Path:
    """Where `cmd_generate` puts the held-out trajectories of ``path``."""
    return path.with_name(f"{path.stem}-valid{path.suffix}")


def trace_path(path: Path) -> Path:
    return path.with_suffix(".trace.csv")


def _train_config(args: argparse.Namespace, profile: Profile) -> TrainConfig:
    overrides = {
        "iterations": args.iterations,
        "batch_size": args.batch_size,
        "lr": args.lr,
        "plateau_warmup": args.plateau_warmup,
    }
    return profile.train._replace(**{k: v for k, v in overrides.items() if v is not None})


def _require(path: Optional[Path], flag: str) -> Path:
    if path is None:
        raise UsageError(f"{flag} is required.")
    if not path.exists():
        raise UsageError(f"{flag} {path} does not exist.")
    return path


def _check_request(args: argparse.Namespace, pde: PdeSpec, source: Path) -> None:
    """Raise when ``--pde``, ``--coeff`` or ``--dim`` disagree with the data at ``source``."""
    requested = (
        ("--pde", "family", args.pde),
        ("--coeff", "coefficient", args.coeff),
        ("--dim", "dims", args.dim),
    )
    for flag, field, value in requested:
        if value is not None and value != getattr(pde, field):
            raise UsageError(
                f"{flag} {value} does not match the {field} {getattr(pde, field)} of {source}."
            )


def _check_provenance(
    args: argparse.Namespace, provenance: Mapping[str, Any], source: Path
) -> None:
    requested = (("--pde", "family", args.pde), ("--coeff", "coefficient", args.coeff))
    for flag, field, value in requested:
        recorded = provenance.get(field)
        if value is not None and recorded is not None and value != recorded:
            raise UsageError(
                f"{flag} {value} does not match the {field} {recorded} {source} was trained on."
            )


def cmd_generate(args: argparse.Namespace) -> int:
    profile = get_profile(args.profile)
    pde = profile.pde(args.pde, args.coeff, args.dim)
    total = profile.samples_1d if args.dim == 1 else profile.samples_2d
    if args.samples is not None:
        total = args.samples
    n_valid = args.valid if args.valid is not None else profile.valid_samples
    dataset = generate(pde, profile.ic, total, args.seed)
    train_ds, valid_ds = split(dataset, n_valid)
    save_dataset(train_ds, args.out)
    save_dataset(valid_ds, valid_path(args.out))
    return 0


def cmd_pretrain(args: argparse.Namespace) -> int:
    profile = get_profile(args.profile)
    data = _require(args.data, "--data")
    dataset = load_dataset(data)
    _check_request(args, dataset.pde, data)
    config = _train_config(args, profile)
    result = pretrain(dataset, profile.config(1), config, args.seed)
    provenance = {
        "stage": "pretrain",
        "profile": profile.name,
        "seed": args.seed,
        "family": dataset.pde.family,
        "coefficient": dataset.pde.coefficient,
        "dataset": str(data),
        "dataset_id": file_id(data),
    }
    save_checkpoint(
        args.out, result.params, provenance=provenance, training=training_summary(result)
    )
    write_trace(trace_path(args.out), result.trace)
    return 0


def cmd_finetune(args: argparse.Namespace) -> int:
    profile = get_profile(args.profile)
    tag = FinetuneConfig.parse(args.config)
    if not tag.pretrained and args.ckpt is not None:
        raise UsageError("C0 is trained from random initialization; drop --ckpt.")
    pretrained = None
    pretrained_id = None
    if tag.pretrained:
        ckpt = _require(args.ckpt, "--ckpt")
        checkpoint = load_checkpoint(ckpt, profile.config(1))
        _check_provenance(args, checkpoint.provenance, ckpt)
        pretrained, pretrained_id = checkpoint.params, checkpoint.blob_id
    data = _require(args.data, "--data")
    dataset = load_dataset(data)
    _check_request(args, dataset.pde, data)
    n_samples = args.samples if args.samples is not None else profile.counts[0]
    config = _train_config(args, profile)
    result = finetune(tag, pretrained, dataset, n_samples, args.seed, profile.config(2), config)
    provenance = {
        "stage": "finetune",
        "profile": profile.name,
        "tag": str(tag),
        "n_samples": n_samples,
        "seed": args.seed,
        "family": dataset.pde.family,
        "coefficient": dataset.pde.coefficient,
        "dataset": str(data),
        "dataset_id": file_id(data),
        "pretrained_id": pretrained_id,
    }
    save_checkpoint(
        args.out, result.params, provenance=provenance, training=training_summary(result)
    )
    write_trace(trace_path(args.out), result.trace)
    return 0


def cmd_evaluate(args: argparse.Namespace) -> int:
    profile = get_profile(args.profile)
    ckpt = _require(args.ckpt, "--ckpt")
    checkpoint = load_checkpoint(ckpt)
    data = _require(args.data, "--data")
    dataset = load_dataset(data)
    _check_request(args, dataset.pde, data)
    _check_provenance(args, checkpoint.provenance, ckpt)
    if dataset.pde.dims != checkpoint.config.dims:
        raise UsageError(
            f"A {checkpoint.config.dims}D model cannot be evaluated on {dataset.pde.dims}D data."
        )
    provenance = checkpoint.provenance
    training = checkpoint.training or {}
    cell = Cell(
        FinetuneConfig.parse(args.config or provenance.get("tag", "C0")),
        args.samples if args.samples is not None else int(provenance.get("n_samples", 0)),
        args.seed if args.seed is not None else int(provenance.get("seed", 0)),
    )
    scores = score(checkpoint.params, dataset, profile.rollouts)
    records = records_for(
        cell, scores, int(training.get("iterations", 0)), float(training.get("final_lr", 0.0))
    )
    write_metrics(args.out, records)
    for record in records:
        log.info("%s rollout %d: mean rl2 %.6f", cell, record.rollout, record.mean_rl2)
    return 0


def cmd_sweep(args: argparse.Namespace) -> int:
    profile = get_profile(args.profile)
    if args.dim not in (None, 2):
        raise UsageError(f"--dim {args.dim} is not supported; sweeps fine-tune 2D models.")
    data = _require(args.data, "--data")
    valid = _require(args.valid or valid_path(data), "--valid")
    experiment = ExperimentSpec(
        family=args.pde,
        coefficient=args.coeff,
        profile=profile,
        tags=parse_tags(args.configs),
        counts=parse_ints(args.counts) if args.counts else profile.counts,
        seeds=parse_ints(args.seeds) if args.seeds else profile.seeds,
        train=_train_config(args, profile),
    )
    ckpt = str(_require(args.ckpt, "--ckpt")) if args.ckpt is not None else None
    plan = SweepPlan(experiment, str(data), str(valid), ckpt, args.wall_time)
    result = run_sweep(plan, args.out, workers=args.workers)
    log.info(
        "Sweep finished: %d cells run, %d skipped, %d rows",
        result.ran,
        result.skipped,
        len(result.raw),
    )
    return 0


def cmd_report(args: argparse.Namespace) -> int:
    records = read_metrics(args.metrics)
    out = args.out or args.metrics.with_name("averaged.csv")
    write_averaged(out, average(records))
    return 0


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("-v", "--verbose", action="store_true", help="log at DEBUG level")
    parser.add_argument("--profile", default="desk", choices=sorted(PROFILES))


def _add_pde(parser: argparse.ArgumentParser, *required: str) -> None:
    """Shared ``--pde``, ``--coeff`` and ``--dim``; flags named in ``required`` are mandatory."""
    parser.add_argument("--pde", required="pde" in required, choices=("diffusion", "advection"))
    parser.add_argument("--coeff", required="coeff" in required, type=float, help="nu or beta")
    parser.add_argument("--dim", required="dim" in required, type=int, choices=(1, 2))


def _add_training(parser: argparse.ArgumentParser) -> None:
    group = parser.add_argument_group("training overrides")
    group.add_argument("--iterations", type=int)
    group.add_argument("--batch-size", type=int)
    group.add_argument("--lr", type=float)
    group.add_argument("--plateau-warmup", type=int, help="iterations before the plateau rule")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="factorized-transfer",
        description="Pretrain factorized Fourier neural operators in 1D and transfer them to 2D.",
    )
    commands = parser.add_subparsers(dest="command", required=True)

    p = commands.add_parser("generate", help="solve and store a trajectory dataset")
    _add_common(p)
    _add_pde(p, "pde", "coeff", "dim")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--samples", type=int, help="trajectories including the validation split")
    p.add_argument("--valid", type=int, help="trajectories held out for validation")
    p.add_argument("--out", type=Path, required=True)
    p.set_defaults(func=cmd_generate)

    p = commands.add_parser("pretrain", help="train a 1D model on a full training split")
    _add_common(p)
    _add_pde(p)
    _add_training(p)
    p.add_argument("--data", type=Path)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", type=Path, required=True)
    p.set_defaults(func=cmd_pretrain)

    p = commands.add_parser("finetune", help="fine-tune one 2D model under a configuration")
    _add_common(p)
    _add_pde(p)
    _add_training(p)
    p.add_argument("--config", required=True, choices=[t.value for t in FinetuneConfig])
    p.add_argument("--ckpt", type=Path, help="pretrained 1D checkpoint; not allowed with C0")
    p.add_argument("--data", type=Path)
    p.add_argument("--samples", type=int)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", type=Path, required=True)
    p.set_defaults(func=cmd_finetune)

    p = commands.add_parser("evaluate", help="score a checkpoint on a validation set")
    _add_common(p)
    _add_pde(p)
    p.add_argument("--ckpt", type=Path)
    p.add_argument("--data", type=Path)
    p.add_argument("--config", choices=[t.value for t in FinetuneConfig])
    p.add_argument("--samples", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--out", type=Path, required=True)
    p.set_defaults(func=cmd_evaluate)

    p = commands.add_parser("sweep", help="fine-tune and score every tag, count and seed")
    _add_common(p)
    _add_pde(p, "pde", "coeff")
    _add_training(p)
    p.add_argument("--configs", default="C0..C8", help='e.g. "C0..C8" or "C0,C1"')
    p.add_argument("--counts", help='e.g. "1..1024*2" or "4,8"')
    p.add_argument("--seeds", help='e.g. "0..2"')
    p.add_argument("--ckpt", type=Path)
    p.add_argument("--data", type=Path, help="2D training pool")
    p.add_argument("--valid", type=Path, help="2D validation set")
    p.add_argument("--out", type=Path, required=True, help="output directory")
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--wall-time", action="store_true", help="record measured wall time")
    p.set_defaults(func=cmd_sweep)

    p = commands.add_parser("report", help="average a raw metrics CSV over seeds")
    _add_common(p)
    p.add_argument("metrics", type=Path)
    p.add_argument("--out", type=Path)
    p.set_defaults(func=cmd_report)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.INFO, format=LOG_FORMAT)
    command: Callable[[argparse.Namespace], int] = args.func
    try:
        return command(args)
    except UsageError as error:
        log.error("%s", error)
        return 2
    except FactorizedTransferError as error:
        log.error("%s: %s", type(error).__name__, error)
        return 1
