from __future__ import annotations

from typing import Tuple

from .checkpoint import (
    Checkpoint as Checkpoint,
    load_checkpoint as load_checkpoint,
    save_checkpoint as save_checkpoint,
)
from .evaluation import (
    as_stepper as as_stepper,
    evaluate_next_step as evaluate_next_step,
    evaluate_rollout as evaluate_rollout,
)
from .experiment import (
    Cell as Cell,
    ExperimentSpec as ExperimentSpec,
    finetune as finetune,
    pretrain as pretrain,
    score as score,
)
from .grid import (
    GridParser as GridParser,
    parse_ints as parse_ints,
    parse_tags as parse_tags,
)
from .metrics import (
    AveragedRecord as AveragedRecord,
    MetricsRecord as MetricsRecord,
    average as average,
    read_metrics as read_metrics,
    write_averaged as write_averaged,
    write_metrics as write_metrics,
)
from .profiles import (
    PROFILES as PROFILES,
    Profile as Profile,
    get_profile as get_profile,
)
from .sweep import (
    SweepPlan as SweepPlan,
    SweepResult as SweepResult,
    run_cell as run_cell,
    run_sweep as run_sweep,
)

__all__: Tuple[str, ...] = (
    "AveragedRecord",
    "Cell",
    "Checkpoint",
    "ExperimentSpec",
    "GridParser",
    "MetricsRecord",
    "PROFILES",
    "Profile",
    "SweepPlan",
    "SweepResult",
    "as_stepper",
    "average",
    "evaluate_next_step",
    "evaluate_rollout",
    "finetune",
    "get_profile",
    "load_checkpoint",
    "parse_ints",
    "parse_tags",
    "pretrain",
    "read_metrics",
    "run_cell",
    "run_sweep",
    "save_checkpoint",
    "score",
    "write_averaged",
    "write_metrics",
)
