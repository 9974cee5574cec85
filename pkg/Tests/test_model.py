import math
import unittest
from typing import List

import torch

from FactorizedTransfer import (
    FfnoConfig,
    FfnoParams,
    UsageError,
    factorized_spectral_conv,
    forward,
    init_params,
    param_count,
)
from FactorizedTransfer.model import ffno_layer, parameter_paths, parameter_shapes
from FactorizedTransfer.spectral import AxisSpectrum, dft_oracle, idft_oracle
from FactorizedTransfer.transfer import FinetuneConfig, trainable_mask


def dense_spectral_conv(z: torch.Tensor, weights: List[torch.Tensor], modes: int) -> torch.Tensor:
    # z is unbatched [H, S_1, ..., S_D]; every product is spelled out per mode
    dims = len(weights)
    total = torch.zeros(z.shape, dtype=torch.float64)
    for axis, weight in enumerate(weights):
        spectrum = dft_oracle(z, axis)
        mixed = torch.zeros_like(spectrum.coeffs)
        for k in range(modes):
            column = spectrum.coeffs.select(1 + axis, k)
            flat = column.reshape(column.shape[0], -1)
            out = weight[:, :, k].to(torch.complex128) @ flat
            mixed.select(1 + axis, k).copy_(out.reshape(column.shape))
        total += idft_oracle(AxisSpectrum(mixed, axis, z.shape[1 + axis], dims))
    return total


def dense_forward(params: FfnoParams, u: torch.Tensor) -> torch.Tensor:
    # unbatched straight-line evaluation in float64
    cfg = params.config
    p = {k: v.to(torch.float64) for k, v in params.items()}
    spatial = u.shape[1:]
    flat = u.reshape(1, -1)
    z = p["proj.in.w"] @ flat + p["proj.in.b"][:, None]
    act = torch.relu if cfg.activation == "relu" else torch.nn.functional.gelu
    for layer in range(cfg.layers):
        weights = [torch.view_as_complex(p[f"layer.{layer}.fourier.{a}"]) for a in cfg.axes]
        kernel = dense_spectral_conv(z.reshape(-1, *spatial), weights, cfg.modes).reshape(
            cfg.width, -1
        )
        hidden = act(p[f"layer.{layer}.ff.w1"] @ kernel + p[f"layer.{layer}.ff.b1"][:, None])
        z = z + p[f"layer.{layer}.ff.w2"] @ hidden + p[f"layer.{layer}.ff.b2"][:, None]
    out = p["proj.out.w"] @ z + p["proj.out.b"][:, None]
    return out.reshape(1, *spatial)


def randomize_biases(params: FfnoParams, seed: int) -> None:
    generator = torch.Generator().manual_seed(seed)
    for path, tensor in params.items():
        if path.endswith((".b", ".b1", ".b2")):
            tensor.copy_(torch.randn(tensor.shape, generator=generator, dtype=tensor.dtype) * 0.1)


class TestSpectralConv(unittest.TestCase):
    def test_matches_dense_oracle(self):
        generator = torch.Generator().manual_seed(0)
        width, modes, size = 4, 3, 16
        for dims in (1, 2):
            for _ in range(20):
                z = torch.randn(width, *([size] * dims), generator=generator, dtype=torch.float64)
                weights = [
                    torch.randn(width, width, modes, generator=generator, dtype=torch.complex128)
                    for _ in range(dims)
                ]
                fast = factorized_spectral_conv(z, weights, modes)
                slow = dense_spectral_conv(z, weights, modes)
                error = torch.linalg.vector_norm(fast - slow) / torch.linalg.vector_norm(slow)
                self.assertLess(float(error), 1e-5)

    def test_batched_equals_unbatched(self):
        generator = torch.Generator().manual_seed(1)
        z = torch.randn(3, 4, 16, 16, generator=generator, dtype=torch.float64)
        weights = [
            torch.randn(4, 4, 3, generator=generator, dtype=torch.complex128) for _ in range(2)
        ]
        batched = factorized_spectral_conv(z, weights, 3)
        for b in range(3):
            single = factorized_spectral_conv(z[b], weights, 3)
            self.assertTrue(torch.allclose(batched[b], single, atol=1e-12))

    def test_high_frequencies_removed(self):
        x = torch.arange(16, dtype=torch.float64) / 16
        z = torch.sin(2 * math.pi * 5 * x).expand(2, 16).clone()
        weights = [torch.ones(2, 2, 3, dtype=torch.complex128)]
        out = factorized_spectral_conv(z, weights, 3)
        self.assertLess(float(out.abs().max()), 1e-12)

    def test_identity_kernel(self):
        x = torch.arange(16, dtype=torch.float64) / 16
        z = torch.stack([torch.sin(2 * math.pi * x), torch.cos(2 * math.pi * 7 * x) + 0.5])
        identity = torch.eye(2, dtype=torch.complex128).unsqueeze(-1).expand(2, 2, 8)
        out = factorized_spectral_conv(z, [identity.clone()], 8)
        self.assertTrue(torch.allclose(out, z, atol=1e-12))
        zero = factorized_spectral_conv(z, [torch.zeros(2, 2, 8, dtype=torch.complex128)], 8)
        self.assertEqual(float(zero.abs().max()), 0.0)

    def test_linear_and_shift_equivariant(self):
        generator = torch.Generator().manual_seed(2)
        z1, z2 = torch.randn(2, 4, 16, 16, generator=generator, dtype=torch.float64)
        weights = [
            torch.randn(4, 4, 3, generator=generator, dtype=torch.complex128) for _ in range(2)
        ]
        combined = factorized_spectral_conv(2.0 * z1 - 3.0 * z2, weights, 3)
        separate = 2.0 * factorized_spectral_conv(z1, weights, 3) - 3.0 * factorized_spectral_conv(
            z2, weights, 3
        )
        self.assertTrue(torch.allclose(combined, separate, atol=1e-10))
        for dim in (1, 2):
            shifted = factorized_spectral_conv(torch.roll(z1, 5, dims=dim), weights, 3)
            expected = torch.roll(factorized_spectral_conv(z1, weights, 3), 5, dims=dim)
            self.assertTrue(torch.allclose(shifted, expected, atol=1e-10))

    def test_shape_errors(self):
        z = torch.zeros(4, 16, dtype=torch.float64)
        with self.assertRaises(UsageError):
            factorized_spectral_conv(z, [torch.zeros(4, 4, 2, dtype=torch.complex128)], 3)
        with self.assertRaises(UsageError):
            factorized_spectral_conv(z, [torch.zeros(3, 3, 3, dtype=torch.complex128)], 3)
        with self.assertRaises(UsageError):
            factorized_spectral_conv(
                torch.zeros(4, 5, dtype=torch.float64),
                [torch.zeros(4, 4, 3, dtype=torch.complex128)],
                3,
            )


class TestForward(unittest.TestCase):
    def setUp(self):
        self.cfg1 = FfnoConfig(dims=1, layers=2, width=4, modes=3)
        self.cfg2 = FfnoConfig(dims=2, layers=2, width=4, modes=3, activation="gelu")

    def test_matches_straight_line_oracle(self):
        generator = torch.Generator().manual_seed(3)
        for cfg in (self.cfg1, self.cfg2):
            params = init_params(cfg, 11, dtype=torch.float64)
            randomize_biases(params, 5)
            u = torch.randn(1, *([16] * cfg.dims), generator=generator, dtype=torch.float64)
            expected = dense_forward(params, u)
            self.assertTrue(torch.allclose(forward(params, u), expected, atol=1e-10))

    def test_zero_layer_is_residual(self):
        params = init_params(self.cfg2, 1, dtype=torch.float64)
        for path, tensor in params.items():
            if path.startswith("layer.0."):
                tensor.zero_()
        z = torch.randn(4, 8, 8, dtype=torch.float64)
        self.assertTrue(torch.equal(ffno_layer(z, params, 0), z))

    def test_homogeneous(self):
        params = init_params(self.cfg2, 1)
        out = forward(params, torch.zeros(1, 64, 64))
        self.assertEqual(out.shape, (1, 64, 64))
        self.assertEqual(float(out.abs().max()), 0.0)

    def test_batched_and_shapes(self):
        params = init_params(self.cfg2, 0, dtype=torch.float64)
        u = torch.randn(5, 1, 8, 12, dtype=torch.float64)
        out = forward(params, u)
        self.assertEqual(out.shape, u.shape)
        self.assertTrue(torch.allclose(out[2], forward(params, u[2]), atol=1e-12))

    def test_layout_errors(self):
        params = init_params(self.cfg1, 0)
        with self.assertRaises(UsageError):
            forward(params, torch.zeros(1, 5))
        with self.assertRaises(UsageError):
            forward(params, torch.zeros(2, 16))
        with self.assertRaises(UsageError):
            forward(params, torch.zeros(1, 16, 16))
        with self.assertRaises(UsageError):
            forward(params, torch.zeros(1, 16), self.cfg2)

    def test_discretization_invariance(self):
        cfg = FfnoConfig(dims=1, layers=1, width=8, modes=6)
        params = init_params(cfg, 2, dtype=torch.float64)
        randomize_biases(params, 4)

        def band_limited(size):
            x = torch.arange(size, dtype=torch.float64) / size
            u = torch.sin(2 * math.pi * x) + 0.5 * torch.cos(2 * math.pi * 3 * x + 0.3)
            return u.unsqueeze(0)

        coarse = forward(params, band_limited(32))
        fine = forward(params, band_limited(64))
        self.assertLess(float((fine[..., ::2] - coarse).abs().max()), 1e-4)

    def test_layer_invariance_in_depth(self):
        cfg = FfnoConfig(dims=1, layers=3, width=4, modes=4)
        params = init_params(cfg, 9, dtype=torch.float64)
        x32 = torch.arange(32, dtype=torch.float64) / 32
        x64 = torch.arange(64, dtype=torch.float64) / 64
        z32 = torch.stack([torch.sin(2 * math.pi * (c + 1) * x32) for c in range(4)])
        z64 = torch.stack([torch.sin(2 * math.pi * (c + 1) * x64) for c in range(4)])
        for layer in range(3):
            a = ffno_layer(z32, params, layer)
            b = ffno_layer(z64, params, layer)
            self.assertLess(float((b[..., ::2] - a).abs().max()), 1e-10)


class TestParams(unittest.TestCase):
    def test_canonical_paths(self):
        cfg = FfnoConfig(dims=2, layers=2, width=4, modes=3)
        paths = parameter_paths(cfg)
        self.assertEqual(paths[:2], ("proj.in.w", "proj.in.b"))
        self.assertEqual(paths[-2:], ("proj.out.w", "proj.out.b"))
        self.assertIn("layer.1.fourier.y", paths)
        self.assertEqual(parameter_shapes(cfg)["layer.0.fourier.x"], (4, 4, 3, 2))
        self.assertEqual(parameter_shapes(cfg)["layer.0.ff.w1"], (8, 4))

    def test_init_is_deterministic(self):
        cfg = FfnoConfig(width=8, modes=4, layers=2)
        a, b = init_params(cfg, 3), init_params(cfg, 3)
        for path in a:
            self.assertTrue(torch.equal(a[path], b[path]))
        c = init_params(cfg, 4)
        self.assertFalse(torch.equal(a["layer.0.ff.w1"], c["layer.0.ff.w1"]))
        self.assertEqual(float(a["layer.1.ff.b2"].abs().max()), 0.0)
        self.assertLessEqual(float(a["layer.0.fourier.x"].abs().max()), 1 / 8)

    def test_init_draws_from_one_generator(self):
        cfg = FfnoConfig(width=4, modes=2, layers=1)
        params = init_params(cfg, 7, dtype=torch.float64)
        generator = torch.Generator().manual_seed(7)
        for path, shape in parameter_shapes(cfg).items():
            if path.endswith((".b", ".b1", ".b2")):
                continue
            bound = 1 / cfg.width if ".fourier." in path else math.sqrt(1 / shape[1])
            draw = torch.rand(shape, generator=generator, dtype=torch.float64)
            self.assertTrue(torch.equal(params[path], (draw * 2 - 1) * bound), msg=path)

    def test_rejects_bad_tensors(self):
        cfg = FfnoConfig(width=4, modes=3, layers=1)
        params = init_params(cfg, 0)
        tensors = dict(params.tensors)
        tensors["proj.in.w"] = torch.zeros(3, 1)
        with self.assertRaises(UsageError):
            FfnoParams(cfg, tensors)
        tensors = dict(params.tensors)
        del tensors["proj.out.b"]
        with self.assertRaises(UsageError):
            FfnoParams(cfg, tensors)

    def test_clone_is_independent(self):
        params = init_params(FfnoConfig(width=4, modes=3, layers=1), 0)
        copy = params.clone()
        copy["proj.in.w"].add_(1.0)
        self.assertFalse(torch.equal(copy["proj.in.w"], params["proj.in.w"]))

    def test_config_validation(self):
        for bad in (
            FfnoConfig(dims=3),
            FfnoConfig(modes=0),
            FfnoConfig(activation="tanh"),  # type: ignore
            FfnoConfig(in_channels=2),
        ):
            with self.assertRaises(UsageError):
                bad.validate()


class TestParameterCounts(unittest.TestCase):
    def setUp(self):
        self.cfg = FfnoConfig(dims=2, layers=4, width=128, modes=16)

    def test_fourier_per_layer(self):
        self.assertEqual(param_count(self.cfg).fourier_complex_per_layer, 524_288)

    def test_non_factorized_per_layer(self):
        self.assertEqual(
            param_count(self.cfg, factorized=False).fourier_complex_per_layer, 4_194_304
        )
        small = FfnoConfig(dims=2, width=2, modes=3)
        self.assertEqual(param_count(small, factorized=False).fourier_complex_per_layer, 36)
        self.assertEqual(param_count(small).fourier_complex_per_layer, 24)

    def test_fourier_only_mask(self):
        mask = trainable_mask(FinetuneConfig.C2, 4)
        self.assertEqual(param_count(self.cfg, mask=mask).fourier_trainable, 2_097_152)

    def test_last_layer_mask(self):
        count = param_count(self.cfg, mask=trainable_mask(FinetuneConfig.C8, 4))
        self.assertEqual(count.ff_real_per_layer, 65_920)
        self.assertEqual(count.fourier_trainable, 524_288)
        self.assertEqual(count.real_trainable, 65_920 + 385)
        self.assertEqual(count.total_trainable, 590_593)
        self.assertLess(count.total_trainable, 600_000)

    def test_matches_tensor_sizes(self):
        cfg = FfnoConfig(dims=2, layers=2, width=4, modes=3)
        params = init_params(cfg, 0)
        count = param_count(cfg)
        real = sum(t.numel() for p, t in params.items() if ".fourier." not in p)
        complex_ = sum(t.numel() // 2 for p, t in params.items() if ".fourier." in p)
        self.assertEqual(count.real_trainable, real)
        self.assertEqual(count.fourier_trainable, complex_)


if __name__ == "__main__":
    unittest.main()
