import numpy as np
import pytest

from tilesr import metrics, models
from tilesr.tensor import ShapeError, Tensor, no_grad


def fwd(model, x, train=False):
    with no_grad():
        return model.forward(Tensor(x.astype(np.float32)), train=train)


class TestGeneratorBuild:
    @pytest.mark.parametrize("upsampler", models.UPSAMPLERS)
    def test_output_shape_times_scale(self, upsampler):
        spec = models.GeneratorSpec(
            scale=4, base_channels=8, n_res_blocks=1, upsampler=upsampler,
            head_kernel=3, tail_kernel=3,
        )
        gen = models.build_generator(spec, 0)
        out = fwd(gen, np.zeros((1, 3, 12, 10)))
        assert out.shape == (1, 3, 48, 40)

    def test_64_to_256(self):
        gen = models.build_generator(models.desk_generator_spec(), 0)
        out = fwd(gen, np.zeros((1, 3, 64, 64)))
        assert out.shape == (1, 3, 256, 256)

    def test_baseline_srgan_shape_compatible(self):
        spec = models.GeneratorSpec(
            scale=4, base_channels=8, n_res_blocks=1,
            upsampler="subpixel_conv", use_bn=True,
            head_kernel=3, tail_kernel=3,
        )
        gen = models.build_generator(spec, 0)
        out = fwd(gen, np.random.default_rng(0).normal(size=(1, 3, 16, 16)))
        assert out.shape == (1, 3, 64, 64)

    def test_output_in_tanh_range(self):
        gen = models.build_generator(models.desk_generator_spec(), 1)
        x = np.random.default_rng(2).normal(size=(1, 3, 16, 16)) * 50
        out = fwd(gen, x)
        assert out.data.min() >= -1.0 and out.data.max() <= 1.0
        assert np.all(np.isfinite(out.data))

    def test_same_seed_bit_identical(self):
        spec = models.desk_generator_spec()
        a = models.build_generator(spec, 42)
        b = models.build_generator(spec, 42)
        assert list(a.params) == list(b.params)
        for n in a.params:
            np.testing.assert_array_equal(a.params[n].data, b.params[n].data)

    def test_different_seed_differs(self):
        spec = models.desk_generator_spec()
        a = models.build_generator(spec, 1)
        b = models.build_generator(spec, 2)
        assert any(
            not np.array_equal(a.params[n].data, b.params[n].data) for n in a.params
        )

    def test_forward_deterministic(self):
        gen = models.build_generator(models.desk_generator_spec(), 3)
        x = np.random.default_rng(4).normal(size=(1, 3, 8, 8))
        np.testing.assert_array_equal(fwd(gen, x).data, fwd(gen, x).data)

    def test_invalid_scale(self):
        with pytest.raises(models.ModelError, match="power of 2"):
            models.build_generator(models.GeneratorSpec(scale=3), 0)

    def test_no_bn_means_no_norm_state(self):
        gen = models.build_generator(models.desk_generator_spec(use_bn=False), 0)
        assert gen.buffers == {}
        assert not any("gamma" in n or "beta" in n for n in gen.params)

    def test_bn_adds_running_stats(self):
        gen = models.build_generator(
            models.desk_generator_spec(use_bn=True), 0
        )
        assert any("running_mean" in n for n in gen.buffers)


class TestParameterCount:
    def test_bn_delta_is_2c_per_layer(self):
        base = dict(base_channels=16, n_res_blocks=4, head_kernel=3, tail_kernel=3)
        no_bn = models.build_generator(models.GeneratorSpec(use_bn=False, **base), 0)
        with_bn = models.build_generator(models.GeneratorSpec(use_bn=True, **base), 0)
        # 2 BN layers per residual block + 1 post-residual BN
        n_bn_layers = 2 * 4 + 1
        expected = 2 * 16 * n_bn_layers
        assert models.parameter_count(with_bn) - models.parameter_count(no_bn) == expected

    def test_gap_head_smaller_than_flatten(self):
        gap = models.build_discriminator(models.DiscriminatorSpec(head="gap"), 0)
        flat = models.build_discriminator(
            models.DiscriminatorSpec(head="flatten", input_size=256), 0
        )
        assert models.parameter_count(gap) < models.parameter_count(flat)

    def test_empty_model_zero(self):
        assert models.parameter_count(models.Model("empty")) == 0

    def test_matches_manual_sum(self):
        gen = models.build_generator(models.desk_generator_spec(), 0)
        manual = sum(int(np.prod(p.data.shape)) for p in gen.params.values())
        assert models.parameter_count(gen) == manual


class TestDiscriminator:
    def test_gap_scalar_output_in_unit_interval(self):
        d = models.build_discriminator(models.desk_discriminator_spec(), 0)
        out = fwd(d, np.random.default_rng(0).normal(size=(1, 3, 64, 64)))
        assert out.shape == (1, 1)
        assert 0.0 < out.data[0, 0] < 1.0

    def test_gap_any_size_above_minimum(self):
        d = models.build_discriminator(models.desk_discriminator_spec(), 0)
        for size in (16, 48, 128):
            out = fwd(d, np.zeros((1, 3, size, size)))
            assert out.shape == (1, 1)

    def test_gap_below_receptive_floor_rejected(self):
        d = models.build_discriminator(models.desk_discriminator_spec(), 0)
        with pytest.raises(ShapeError, match="receptive"):
            fwd(d, np.zeros((1, 3, 8, 8)))

    def test_flatten_fixed_size(self):
        spec = models.DiscriminatorSpec(
            conv_block_channels=[8, 8], head="flatten", input_size=32
        )
        d = models.build_discriminator(spec, 0)
        out = fwd(d, np.zeros((2, 3, 32, 32)))
        assert out.shape == (2, 1)

    def test_flatten_wrong_size_rejected(self):
        spec = models.DiscriminatorSpec(
            conv_block_channels=[8, 8], head="flatten", input_size=32
        )
        d = models.build_discriminator(spec, 0)
        with pytest.raises(ShapeError, match="flatten"):
            fwd(d, np.zeros((1, 3, 64, 64)))

    def test_srgan_default_ladder(self):
        spec = models.DiscriminatorSpec()
        assert spec.conv_block_channels == [64, 64, 128, 128, 256, 256, 512, 512]
        assert spec.strides() == [1, 2, 1, 2, 1, 2, 1, 2]

    def test_build_deterministic(self):
        spec = models.desk_discriminator_spec()
        a = models.build_discriminator(spec, 5)
        b = models.build_discriminator(spec, 5)
        for n in a.params:
            np.testing.assert_array_equal(a.params[n].data, b.params[n].data)


class TestArtifactOrdering:
    def test_nearest_lower_checkerboard_than_transposed_smoke(self):
        # 3-seed smoke version of the 20-seed acceptance experiment
        scores = {"nearest_then_conv": [], "transposed_conv": []}
        const = np.full((1, 3, 16, 16), 0.25, dtype=np.float32)
        for kind in scores:
            for seed in range(3):
                spec = models.desk_generator_spec(upsampler=kind)
                gen = models.build_generator(spec, seed)
                out = fwd(gen, const)
                img = np.transpose(out.data[0], (1, 2, 0))
                scores[kind].append(metrics.checkerboard_index(img, 4))
        assert np.mean(scores["nearest_then_conv"]) < np.mean(scores["transposed_conv"])
