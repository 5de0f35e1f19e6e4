"""Model structure: neighborhood extraction, weight sharing, locality,
the fused architecture's reduction to the local one, and gradients."""

import numpy as np
import pytest
import torch

from subfull import FullSubNet, ModelConfig, SubNet, band_neighborhoods, build_model
from subfull.model import enhance_features

from conftest import max_grad_rel_err, tiny_config, toy_features


def small_config(arch: str = "subnet", radius: int = 2) -> ModelConfig:
    return ModelConfig(
        arch=arch,
        neighbor_radius=radius,
        subband_hidden=8,
        fullband_hidden=8,
        n_bands=16,
    )


class TestConfig:
    def test_defaults(self):
        config = ModelConfig()
        assert config.arch == "subnet"
        assert config.neighbor_radius == 4
        assert config.subband_hidden == 256
        assert config.fullband_hidden == 384
        assert config.bidirectional
        assert config.n_bands == 257

    def test_toy_preset(self):
        config = ModelConfig.toy("fullsubnet", neighbor_radius=1)
        assert config.arch == "fullsubnet"
        assert config.subband_hidden == 64
        assert config.fullband_hidden == 96
        assert config.neighbor_radius == 1

    def test_rejects_unknown_arch(self):
        with pytest.raises(ValueError, match="arch"):
            ModelConfig(arch="transformer")

    def test_rejects_negative_radius(self):
        with pytest.raises(ValueError, match="neighbor_radius"):
            ModelConfig(neighbor_radius=-1)

    def test_rejects_nonpositive_hidden(self):
        with pytest.raises(ValueError, match="hidden"):
            ModelConfig(subband_hidden=0)

    def test_rejects_too_few_bands(self):
        with pytest.raises(ValueError, match="n_bands"):
            ModelConfig(neighbor_radius=4, n_bands=8)


class TestBandNeighborhoods:
    def test_interior_rows(self):
        features = torch.arange(8 * 3, dtype=torch.float32).reshape(8, 3)
        hoods = band_neighborhoods(features, radius=2)
        assert hoods.shape == (8, 3, 5)
        for k in range(2, 6):
            for j in range(5):
                assert torch.equal(hoods[k, :, j], features[k - 2 + j])

    def test_edges_replicate(self):
        features = torch.arange(6 * 2, dtype=torch.float32).reshape(6, 2)
        hoods = band_neighborhoods(features, radius=2)
        # band 0 sees rows [0, 0, 0, 1, 2]; the top band mirrors that
        for j, row in enumerate([0, 0, 0, 1, 2]):
            assert torch.equal(hoods[0, :, j], features[row])
        for j, row in enumerate([3, 4, 5, 5, 5]):
            assert torch.equal(hoods[5, :, j], features[row])

    def test_radius_zero(self):
        features = torch.randn(4, 3)
        hoods = band_neighborhoods(features, radius=0)
        assert torch.equal(hoods, features.unsqueeze(-1))

    def test_too_few_bands(self):
        with pytest.raises(ValueError, match="bands"):
            band_neighborhoods(torch.zeros(3, 4), radius=2)

    def test_rejects_1d(self):
        with pytest.raises(ValueError, match="2-D"):
            band_neighborhoods(torch.zeros(8), radius=1)


class TestSubNet:
    def test_output_shape(self):
        model = build_model(small_config(), seed=0)
        out = model(torch.randn(16, 9))
        assert out.shape == (16, 9)

    def test_any_band_count(self):
        # the band axis is a batch axis, so the same weights serve
        # spectra of any height that fits one neighborhood
        model = build_model(small_config(), seed=0)
        assert model(torch.randn(5, 4)).shape == (5, 4)
        assert model(torch.randn(40, 4)).shape == (40, 4)

    def test_weight_sharing_permutation(self):
        # identical parameters per band: permuting stacked band inputs
        # permutes the outputs and changes nothing else
        torch.manual_seed(1)
        model = build_model(small_config(), seed=1)
        bands = torch.randn(16, 7, 5)
        out = model.forward_bands(bands)
        perm = torch.randperm(16, generator=torch.Generator().manual_seed(3))
        out_perm = model.forward_bands(bands[perm].contiguous())
        assert torch.equal(out_perm, out[perm])

    def test_weight_sharing_single_vs_batch(self):
        # float64: one band alone or inside the stack, same numbers to
        # well below accumulation noise
        torch.manual_seed(2)
        model = build_model(small_config(), seed=2).double()
        bands = torch.randn(16, 7, 5, dtype=torch.float64)
        out = model.forward_bands(bands)
        for k in (0, 7, 15):
            alone = model.forward_bands(bands[k : k + 1])
            assert torch.allclose(alone[0], out[k], atol=1e-12, rtol=1e-12)

    def test_locality_radius(self):
        # bumping band k0 leaves every output row outside [k0-r, k0+r]
        # bit-identical and moves the row at k0
        radius = 2
        model = build_model(small_config(radius=radius), seed=3)
        torch.manual_seed(4)
        x = torch.randn(16, 9)
        k0 = 8
        x_bumped = x.clone()
        x_bumped[k0] += 1.0
        with torch.no_grad():
            base = model(x)
            bumped = model(x_bumped)
        assert torch.equal(bumped[: k0 - radius], base[: k0 - radius])
        assert torch.equal(bumped[k0 + radius + 1 :], base[k0 + radius + 1 :])
        assert not torch.equal(bumped[k0], base[k0])

    def test_zeroed_head_gives_zeros(self):
        model = build_model(small_config(), seed=5)
        with torch.no_grad():
            model.head.weight.zero_()
            model.head.bias.zero_()
            out = model(torch.randn(16, 6))
        assert torch.equal(out, torch.zeros(16, 6))

    def test_unidirectional_halves_head_width(self):
        config = ModelConfig(
            arch="subnet", neighbor_radius=1, subband_hidden=8, fullband_hidden=8,
            bidirectional=False, n_bands=16,
        )
        model = SubNet(config)
        assert model.head.in_features == 8
        assert model(torch.randn(16, 5)).shape == (16, 5)


class TestFullSubNet:
    def test_output_shape(self):
        model = build_model(small_config("fullsubnet"), seed=0)
        assert isinstance(model, FullSubNet)
        out = model(torch.randn(16, 9))
        assert out.shape == (16, 9)

    def test_rejects_wrong_band_count(self):
        model = build_model(small_config("fullsubnet"), seed=0)
        with pytest.raises(ValueError, match="bands"):
            model(torch.randn(12, 9))

    def test_not_band_local(self):
        # the full-band summary feeds every band, so a distant bump must
        # leak into rows the local model would leave untouched
        radius = 2
        model = build_model(small_config("fullsubnet", radius=radius), seed=1)
        torch.manual_seed(6)
        x = torch.randn(16, 9)
        x_bumped = x.clone()
        x_bumped[12] += 1.0
        with torch.no_grad():
            base = model(x)
            bumped = model(x_bumped)
        assert not torch.equal(bumped[:4], base[:4])

    def test_reduces_to_subband_path_with_zeroed_summary(self):
        # killing the full-band head must reproduce the subband module
        # on zero-padded neighborhoods exactly: the fusion is purely
        # additive input width, not a different computation
        config = small_config("fullsubnet")
        model = build_model(config, seed=2)
        torch.manual_seed(7)
        x = torch.randn(16, 9)
        with torch.no_grad():
            model.fullband_head.weight.zero_()
            model.fullband_head.bias.zero_()
            fused = model(x)
            hoods = band_neighborhoods(x, config.neighbor_radius)
            padded = torch.cat([hoods, torch.zeros(16, 9, 1)], dim=-1)
            direct = model.subband.forward_bands(padded.contiguous())
        assert torch.equal(fused, direct)


class TestBuildAndEnhance:
    def test_build_is_seeded(self):
        a = build_model(small_config(), seed=9)
        b = build_model(small_config(), seed=9)
        c = build_model(small_config(), seed=10)
        for pa, pb in zip(a.parameters(), b.parameters()):
            assert torch.equal(pa, pb)
        assert any(
            not torch.equal(pa, pc) for pa, pc in zip(a.parameters(), c.parameters())
        )

    def test_enhance_features_nonnegative_f32(self):
        model = build_model(small_config(), seed=0)
        values = toy_features(16, 12, seed=8)
        out = enhance_features(model, values)
        assert out.dtype == np.float32
        assert out.shape == (16, 12)
        assert np.all(out >= 0.0)


class TestGradients:
    @pytest.mark.parametrize("arch", ["subnet", "fullsubnet"])
    def test_finite_difference_agreement(self, arch):
        worst = max_grad_rel_err(arch)
        assert worst < 1e-4, f"{arch}: worst relative gradient error {worst:.3e}"

    @pytest.mark.parametrize("arch", ["subnet", "fullsubnet"])
    def test_loss_backward_populates_all_parameters(self, arch):
        model = build_model(tiny_config(arch), seed=0)
        x = torch.randn(2, 5)
        y = torch.randn(2, 5)
        loss = torch.mean((model(x) - y) ** 2)
        loss.backward()
        for name, p in model.named_parameters():
            assert p.grad is not None, name
            assert float(p.grad.abs().sum()) > 0.0, name
