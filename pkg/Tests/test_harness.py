import logging
import math
import tempfile
import unittest
from pathlib import Path
from unittest import mock

import torch

from FactorizedTransfer import (
    CheckpointError,
    FfnoConfig,
    IcSpec,
    PdeSpec,
    TrainConfig,
    TrajectoryDataset,
    UsageError,
    advect_exact,
    evaluate_next_step,
    evaluate_rollout,
    generate,
    init_params,
    load_checkpoint,
    save_checkpoint,
    split,
)
from FactorizedTransfer.datagen import save_dataset
from FactorizedTransfer.harness import (
    AveragedRecord,
    ExperimentSpec,
    MetricsRecord,
    Profile,
    SweepPlan,
    average,
    read_metrics,
    run_sweep,
    write_metrics,
)
from FactorizedTransfer.harness import cli as cli_module
from FactorizedTransfer.harness import sweep as sweep_module
from FactorizedTransfer.harness.checkpoint import blob_path
from FactorizedTransfer.harness.cli import build_parser, main, valid_path
from FactorizedTransfer.harness.metrics import METRICS_HEADER
from FactorizedTransfer.harness.profiles import DESK, PAPER, get_profile
from FactorizedTransfer.harness.sweep import LOG_FORMAT
from FactorizedTransfer.stepper import FunctionStepper
from FactorizedTransfer.transfer import FinetuneConfig

TINY: Profile = Profile(
    name="tiny",
    model=FfnoConfig(width=4, layers=2, modes=2),
    train=TrainConfig(iterations=3, batch_size=4),
    ic=IcSpec(max_wavenumber=3),
    resolution_1d=16,
    resolution_2d=8,
    samples_1d=6,
    samples_2d=12,
    valid_samples=2,
    counts=(4,),
)


def geometric_dataset(ratio: float, n_samples: int = 2, horizon: float = 1.0) -> TrajectoryDataset:
    pde = PdeSpec("advection", 0.1, 1, 8, horizon=horizon)
    base = torch.randn(n_samples, 1, 8, generator=torch.Generator().manual_seed(0))
    base = base.to(torch.float64)
    powers = ratio ** torch.arange(pde.n_snapshots, dtype=torch.float64)
    return TrajectoryDataset(base * powers.view(1, -1, 1), pde, IcSpec(), 0)


class TestEvaluation(unittest.TestCase):
    def test_exact_shift_oracle(self):
        ds = generate(PdeSpec("advection", 0.4, 2, 32), IcSpec(), 3, 0)
        oracle = FunctionStepper(lambda u: advect_exact(u, 0.4, 0.05, dims=2))
        self.assertLess(evaluate_next_step(oracle, ds), 1e-5)
        self.assertLess(evaluate_rollout(oracle, ds, 5), 1e-5)

    def test_zero_model(self):
        ds = generate(PdeSpec("diffusion", 0.004, 1, 16), TINY.ic, 2, 1)
        zeros = FunctionStepper(torch.zeros_like)
        self.assertAlmostEqual(evaluate_next_step(zeros, ds), 1.0, places=12)
        self.assertAlmostEqual(evaluate_rollout(zeros, ds, 5), 1.0, places=12)

    def test_hand_computed(self):
        # u_k = 2^k v, scored against the identity map
        ds = geometric_dataset(2.0)
        identity = FunctionStepper(lambda u: u)
        self.assertAlmostEqual(evaluate_next_step(identity, ds), 0.5, places=12)
        self.assertAlmostEqual(evaluate_rollout(identity, ds, 5), 129 / 160, places=12)
        self.assertAlmostEqual(evaluate_rollout(identity, ds, 1), 0.5, places=12)

    def test_linear_rollout_recursion(self):
        ds = generate(PdeSpec("diffusion", 0.002, 1, 16), TINY.ic, 3, 2, dtype=torch.float64)
        scale = 0.9
        stepper = FunctionStepper(lambda u: scale * u)
        expected = []
        for sample in ds.data:
            errors = []
            for k in range(1, 6):
                diff = torch.linalg.vector_norm(scale**k * sample[0] - sample[k])
                errors.append(float(diff / torch.linalg.vector_norm(sample[k])))
            expected.append(math.fsum(errors) / 5)
        self.assertAlmostEqual(evaluate_rollout(stepper, ds, 5), sum(expected) / 3, places=10)

    def test_depth_one_matches_next_step(self):
        pde = PdeSpec("advection", 0.4, 1, 8, horizon=0.05)
        ds = generate(pde, TINY.ic, 4, 3)
        self.assertEqual(ds.n_snapshots, 2)
        params = init_params(FfnoConfig(width=4, layers=2, modes=2), 0)
        self.assertAlmostEqual(
            evaluate_rollout(params, ds, 1), evaluate_next_step(params, ds), places=6
        )

    def test_depth_bounds(self):
        ds = geometric_dataset(1.5)
        identity = FunctionStepper(lambda u: u)
        with self.assertRaises(UsageError):
            evaluate_rollout(identity, ds, 21)
        with self.assertRaises(UsageError):
            evaluate_rollout(identity, ds, 0)
        evaluate_rollout(identity, ds, 20)

    def test_rejects_other_models(self):
        ds = geometric_dataset(1.5)
        with self.assertRaises(UsageError):
            evaluate_next_step(object(), ds)


class TestCheckpoint(unittest.TestCase):
    def setUp(self):
        self.tmp = tempfile.TemporaryDirectory()
        self.path = Path(self.tmp.name) / "model.json"
        self.params = init_params(FfnoConfig(dims=2, width=4, layers=3, modes=2), 5)

    def tearDown(self):
        self.tmp.cleanup()

    def test_round_trip(self):
        save_checkpoint(self.path, self.params, provenance={"seed": 5}, training={"iterations": 7})
        loaded = load_checkpoint(self.path, self.params.config)
        self.assertEqual(loaded.config, self.params.config)
        self.assertEqual(list(loaded.params), list(self.params))
        for path, tensor in self.params.items():
            self.assertTrue(torch.equal(loaded.params[path], tensor), path)
        self.assertEqual(loaded.provenance, {"seed": 5})
        self.assertEqual(loaded.training, {"iterations": 7})

    def test_round_trip_double(self):
        wide = self.params.to(torch.float64)
        save_checkpoint(self.path, wide)
        loaded = load_checkpoint(self.path)
        self.assertEqual(loaded.params.dtype, torch.float64)
        self.assertTrue(all(torch.equal(loaded.params[p], t) for p, t in wide.items()))
        self.assertIsNone(loaded.training)

    def test_truncated_blob(self):
        save_checkpoint(self.path, self.params)
        blob = blob_path(self.path)
        blob.write_bytes(blob.read_bytes()[:-4])
        with self.assertRaises(CheckpointError):
            load_checkpoint(self.path)

    def test_content_id_mismatch(self):
        save_checkpoint(self.path, self.params)
        blob = blob_path(self.path)
        raw = bytearray(blob.read_bytes())
        raw[10] ^= 0xFF
        blob.write_bytes(bytes(raw))
        with self.assertRaises(CheckpointError):
            load_checkpoint(self.path)

    def test_missing_files(self):
        with self.assertRaises(UsageError):
            load_checkpoint(self.path)
        save_checkpoint(self.path, self.params)
        blob_path(self.path).unlink()
        with self.assertRaises(CheckpointError):
            load_checkpoint(self.path)

    def test_malformed_manifest(self):
        self.path.write_text("[1, 2")
        with self.assertRaises(CheckpointError):
            load_checkpoint(self.path)
        self.path.write_text('{"format": "something-else"}')
        with self.assertRaises(CheckpointError):
            load_checkpoint(self.path)

    def test_config_mismatch(self):
        save_checkpoint(self.path, self.params)
        with self.assertRaises(UsageError) as ctx:
            load_checkpoint(self.path, self.params.config._replace(modes=3))
        self.assertIn("modes", str(ctx.exception))


class TestMetrics(unittest.TestCase):
    def records(self):
        rows = []
        for tag, base in (("C0", 0.2), ("C1", 0.1)):
            for seed, offset in enumerate((0.0, 0.03, 0.06)):
                rows.append(MetricsRecord(tag, 8, seed, 1, base + offset, 0.0, 10, 1e-3))
                rows.append(MetricsRecord(tag, 8, seed, 5, 2 * (base + offset), 0.0, 10, 1e-3))
        return rows

    def test_average(self):
        averaged = {(r.tag, r.rollout): r for r in average(self.records())}
        self.assertEqual(len(averaged), 4)
        c0, c1 = averaged[("C0", 1)], averaged[("C1", 1)]
        self.assertIsInstance(c0, AveragedRecord)
        self.assertEqual(c0.n_seeds, 3)
        self.assertLess(abs(c0.mean_rl2 - 0.23), 1e-9)
        self.assertLess(abs(c1.mean_rl2 - 0.13), 1e-9)
        self.assertLess(abs(averaged[("C1", 5)].mean_rl2 - 0.26), 1e-9)
        self.assertLess(abs(c0.rel_change_pct), 1e-9)
        self.assertLess(abs(c1.rel_change_pct - 100 * (0.13 - 0.23) / 0.23), 1e-9)

    def test_no_baseline(self):
        rows = [r for r in self.records() if r.tag == "C1"]
        self.assertTrue(all(r.rel_change_pct is None for r in average(rows)))

    def test_file_round_trip(self):
        with tempfile.TemporaryDirectory() as tmp:
            path = Path(tmp) / "raw.csv"
            records = list(reversed(self.records()))
            write_metrics(path, records)
            loaded = read_metrics(path)
            self.assertEqual(sorted(loaded), sorted(records))
            self.assertEqual(loaded[0].cell, ("C0", 8, 0))
            self.assertEqual(path.read_text().splitlines()[0], ",".join(METRICS_HEADER))

    def test_bad_files(self):
        with tempfile.TemporaryDirectory() as tmp:
            path = Path(tmp) / "raw.csv"
            with self.assertRaises(UsageError):
                read_metrics(path)
            path.write_text("a,b,c\n")
            with self.assertRaises(UsageError):
                read_metrics(path)
            write_metrics(path, self.records())
            path.write_text(path.read_text() + "C1,8,0,1,oops,0.0,10,0.001\n")
            with self.assertRaises(UsageError):
                read_metrics(path)


class TestSweep(unittest.TestCase):
    def setUp(self):
        sweep_module._dataset.cache_clear()
        sweep_module._pretrained.cache_clear()
        self.tmp = tempfile.TemporaryDirectory()
        root = Path(self.tmp.name)
        pool = generate(TINY.pde("advection", 0.4, 2), TINY.ic, TINY.samples_2d, 1)
        train_ds, valid_ds = split(pool, TINY.valid_samples)
        self.train_path = save_dataset(train_ds, root / "adv2d.plwd")
        self.valid_path = save_dataset(valid_ds, valid_path(self.train_path))
        self.ckpt = save_checkpoint(root / "pre.json", init_params(TINY.config(1), 0))
        self.root = root

    def tearDown(self):
        self.tmp.cleanup()

    def plan(self, tags, counts, seeds):
        spec = ExperimentSpec("advection", 0.4, TINY, tags, counts, seeds)
        return SweepPlan(spec, str(self.train_path), str(self.valid_path), str(self.ckpt))

    def test_grid(self):
        tags = (FinetuneConfig.C0, FinetuneConfig.C1)
        result = run_sweep(self.plan(tags, (4, 8), (0, 1, 2)), self.root / "out")
        self.assertEqual((result.ran, result.skipped), (12, 0))
        self.assertEqual(len(result.raw), 24)
        self.assertEqual(len(result.averaged), 8)
        self.assertTrue(all(math.isfinite(r.mean_rl2) for r in result.raw))
        self.assertTrue(all(r.wall_time_s == 0.0 and r.iterations == 3 for r in result.raw))
        self.assertTrue((self.root / "out" / "averaged.csv").exists())

    def test_resume_and_determinism(self):
        tags = (FinetuneConfig.C0, FinetuneConfig.C1)
        partial = run_sweep(self.plan((FinetuneConfig.C0,), (4,), (0, 1)), self.root / "a")
        self.assertEqual(partial.ran, 2)
        resumed = run_sweep(self.plan(tags, (4, 8), (0, 1, 2)), self.root / "a")
        self.assertEqual((resumed.ran, resumed.skipped), (10, 2))
        fresh = run_sweep(self.plan(tags, (4, 8), (0, 1, 2)), self.root / "b")
        self.assertEqual(fresh.ran, 12)
        for name in ("raw.csv", "averaged.csv"):
            self.assertEqual(
                (self.root / "a" / name).read_bytes(), (self.root / "b" / name).read_bytes()
            )
        again = run_sweep(self.plan(tags, (4, 8), (0, 1, 2)), self.root / "b")
        self.assertEqual((again.ran, again.skipped), (0, 12))

    def test_worker_count_does_not_change_rows(self):
        tags = (FinetuneConfig.C0, FinetuneConfig.C1)
        threads = torch.get_num_threads()
        run_sweep(self.plan(tags, (4,), (0, 1)), self.root / "one")
        self.assertEqual(torch.get_num_threads(), threads)
        run_sweep(self.plan(tags, (4,), (0, 1)), self.root / "two", workers=2)
        self.assertEqual(
            (self.root / "one" / "raw.csv").read_bytes(),
            (self.root / "two" / "raw.csv").read_bytes(),
        )

    def test_worker_setup(self):
        with mock.patch.object(sweep_module.logging, "basicConfig") as basic:
            with mock.patch.object(sweep_module.torch, "set_num_threads") as threads:
                sweep_module._init_worker(logging.DEBUG)
        basic.assert_called_once_with(level=logging.DEBUG, format=LOG_FORMAT)
        threads.assert_called_once_with(1)

    def test_requires_checkpoint(self):
        spec = ExperimentSpec("advection", 0.4, TINY, (FinetuneConfig.C1,), (4,), (0,))
        plan = SweepPlan(spec, str(self.train_path), str(self.valid_path))
        with self.assertRaises(UsageError):
            run_sweep(plan, self.root / "out")

    def test_count_exceeds_pool(self):
        with self.assertRaises(UsageError):
            run_sweep(self.plan((FinetuneConfig.C0,), (11,), (0,)), self.root / "out")

    def test_wrong_dataset(self):
        spec = ExperimentSpec("advection", 0.5, TINY, (FinetuneConfig.C0,), (4,), (0,))
        plan = SweepPlan(spec, str(self.train_path), str(self.valid_path))
        with self.assertRaises(UsageError):
            run_sweep(plan, self.root / "out")


class TestCommandLine(unittest.TestCase):
    def setUp(self):
        sweep_module._dataset.cache_clear()
        sweep_module._pretrained.cache_clear()
        self.tmp = tempfile.TemporaryDirectory()
        self.root = Path(self.tmp.name)

    def tearDown(self):
        self.tmp.cleanup()

    def run_main(self, *argv):
        return main([str(a) for a in argv])

    def test_pipeline(self):
        d1, d2 = self.root / "adv1d.plwd", self.root / "adv2d.plwd"
        pre, tuned = self.root / "pre.json", self.root / "tuned.json"
        common = ("--pde", "advection", "--coeff", "0.4")
        fast = ("--iterations", 2, "--batch-size", 4)
        sizes = ("--samples", 6, "--valid", 2)
        self.assertEqual(self.run_main("generate", *common, "--dim", 1, *sizes, "--out", d1), 0)
        self.assertTrue(valid_path(d1).exists())
        sizes = ("--samples", 12, "--valid", 4)
        self.assertEqual(self.run_main("generate", *common, "--dim", 2, *sizes, "--out", d2), 0)
        self.assertEqual(self.run_main("pretrain", "--data", d1, *fast, "--out", pre), 0)
        self.assertTrue(pre.with_suffix(".trace.csv").exists())
        self.assertEqual(load_checkpoint(pre).provenance["stage"], "pretrain")

        self.assertEqual(
            self.run_main(
                "finetune", "--config", "C1", "--ckpt", pre, "--data", d2, "--samples", 4, *fast,
                "--out", tuned,
            ),
            0,
        )
        provenance = load_checkpoint(tuned).provenance
        self.assertEqual((provenance["tag"], provenance["n_samples"]), ("C1", 4))
        self.assertEqual(provenance["pretrained_id"], load_checkpoint(pre).blob_id)

        scores = self.root / "scores.csv"
        self.assertEqual(
            self.run_main("evaluate", "--ckpt", tuned, "--data", valid_path(d2), "--out", scores),
            0,
        )
        records = read_metrics(scores)
        self.assertEqual([r.rollout for r in records], [1, 5])
        self.assertEqual({r.cell for r in records}, {("C1", 4, 0)})

        out = self.root / "sweep"
        self.assertEqual(
            self.run_main(
                "sweep", *common, "--configs", "C0,C1", "--counts", "4", "--seeds", "0..1",
                "--ckpt", pre, "--data", d2, *fast, "--out", out,
            ),
            0,
        )
        self.assertEqual(len(read_metrics(out / "raw.csv")), 8)
        report = self.root / "report.csv"
        self.assertEqual(self.run_main("report", out / "raw.csv", "--out", report), 0)
        self.assertEqual(report.read_bytes(), (out / "averaged.csv").read_bytes())

    def test_request_must_match_data(self):
        diff1d, adv1d = self.root / "diff1d.plwd", self.root / "adv1d.plwd"
        pre = self.root / "pre.json"
        sizes = ("--samples", 4, "--valid", 2)
        for path, pde in ((diff1d, ("diffusion", 0.004)), (adv1d, ("advection", 0.4))):
            argv = ("--pde", pde[0], "--coeff", pde[1], "--dim", 1, *sizes, "--out", path)
            self.assertEqual(self.run_main("generate", *argv), 0)
        fast = ("--iterations", 1, "--batch-size", 2)
        for request in (("--pde", "advection"), ("--coeff", 0.002), ("--dim", 2)):
            with self.subTest(request=request):
                argv = ("--data", diff1d, *request, *fast, "--out", pre)
                self.assertEqual(self.run_main("pretrain", *argv), 2)
                self.assertFalse(pre.exists())
        request = ("--pde", "diffusion", "--coeff", 0.004, "--dim", 1)
        self.assertEqual(
            self.run_main("pretrain", "--data", diff1d, *request, *fast, "--out", pre), 0
        )

        scores = self.root / "scores.csv"
        evaluate = ("evaluate", "--ckpt", pre, "--out", scores)
        self.assertEqual(self.run_main(*evaluate, "--data", valid_path(adv1d)), 0)
        self.assertEqual(
            self.run_main(*evaluate, "--data", valid_path(adv1d), "--pde", "advection"), 2
        )
        self.assertEqual(
            self.run_main(*evaluate, "--data", valid_path(diff1d), "--coeff", 0.001), 2
        )
        self.assertEqual(
            self.run_main(*evaluate, "--data", valid_path(diff1d), *request), 0
        )

    def test_profile_names(self):
        self.assertIs(get_profile("paper"), PAPER)
        self.assertIs(get_profile("full"), PAPER)
        self.assertIs(get_profile("Desk"), DESK)
        self.assertEqual((PAPER.resolution_1d, PAPER.resolution_2d), (1024, 64))
        args = build_parser().parse_args(["report", "raw.csv", "--profile", "paper"])
        self.assertEqual(args.profile, "paper")
        self.assertEqual(DESK.train.plateau_warmup, 200)
        args = build_parser().parse_args(["pretrain", "--out", "p.json", "--plateau-warmup", "5"])
        self.assertEqual(cli_module._train_config(args, DESK).plateau_warmup, 5)
        with self.assertRaises(UsageError):
            get_profile("huge")

    def test_usage_errors(self):
        self.assertEqual(self.run_main("pretrain", "--out", self.root / "x.json"), 2)
        self.assertEqual(
            self.run_main(
                "finetune", "--config", "C0", "--ckpt", self.root / "x.json",
                "--out", self.root / "y.json",
            ),
            2,
        )
        self.assertEqual(self.run_main("report", self.root / "missing.csv"), 2)


if __name__ == "__main__":
    unittest.main()
