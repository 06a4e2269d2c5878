import math

import numpy as np
import pytest

from tilesr import models, ops, training
from tilesr.tensor import Tensor


def small_gen(seed=0, upsampler="nearest_then_conv"):
    spec = models.GeneratorSpec(
        scale=2, base_channels=6, n_res_blocks=1, upsampler=upsampler,
        head_kernel=3, tail_kernel=3,
    )
    return models.build_generator(spec, seed)


def small_disc(seed=1):
    spec = models.DiscriminatorSpec(conv_block_channels=[6, 8], conv_strides=[2, 2])
    return models.build_discriminator(spec, seed)


def tiny_dataset(n=6, lr_size=8, scale=2, seed=0):
    rng = np.random.default_rng(seed)
    pairs = []
    for _ in range(n):
        hr = rng.uniform(size=(lr_size * scale, lr_size * scale, 3)).astype(np.float32)
        lr = hr[::scale, ::scale]
        pairs.append((lr, hr))
    return pairs


class TestSmoothLabels:
    def test_real_range(self):
        plan = training.TrainPlan()
        vals = training.smooth_labels(4, "real", plan, np.random.default_rng(0))
        assert vals.shape == (4,)
        assert np.all((vals >= 0.8) & (vals <= 1.2))

    def test_fake_range(self):
        plan = training.TrainPlan()
        vals = training.smooth_labels(4, "fake", plan, np.random.default_rng(0))
        assert np.all((vals >= 0.0) & (vals <= 0.2))

    def test_disabled_gives_hard_labels(self):
        plan = training.TrainPlan(label_smoothing=False)
        rng = np.random.default_rng(0)
        np.testing.assert_array_equal(training.smooth_labels(4, "real", plan, rng), np.ones(4))
        np.testing.assert_array_equal(training.smooth_labels(4, "fake", plan, rng), np.zeros(4))

    def test_means_near_midpoints(self):
        plan = training.TrainPlan()
        rng = np.random.default_rng(1)
        real = training.smooth_labels(10_000, "real", plan, rng)
        fake = training.smooth_labels(10_000, "fake", plan, rng)
        assert abs(real.mean() - 1.0) <= 0.02
        assert abs(fake.mean() - 0.1) <= 0.02

    def test_bad_args(self):
        plan = training.TrainPlan()
        with pytest.raises(ValueError):
            training.smooth_labels(0, "real", plan, np.random.default_rng(0))
        with pytest.raises(ValueError):
            training.smooth_labels(1, "half", plan, np.random.default_rng(0))


class TestLosses:
    def test_pixel_identical_zero(self):
        x = Tensor(np.ones((2, 3)))
        assert training.pixel_loss(x, Tensor(np.ones((2, 3)))).item() == 0.0

    def test_pixel_zero_vs_one(self):
        sr = Tensor(np.zeros((2, 2)))
        hr = Tensor(np.ones((2, 2)))
        assert training.pixel_loss(sr, hr).item() == pytest.approx(1.0)

    def test_pixel_half(self):
        sr = Tensor(np.array([0.0, 1.0]))
        hr = Tensor(np.array([1.0, 1.0]))
        assert training.pixel_loss(sr, hr).item() == pytest.approx(0.5)

    def test_content_identical_zero(self):
        fx = training.FeatureExtractor(in_channels=3, seed=5)
        x = Tensor(np.random.default_rng(0).normal(size=(1, 3, 16, 16)).astype(np.float32))
        assert training.content_loss(x, Tensor(x.data.copy()), fx).item() == pytest.approx(0.0, abs=1e-10)

    def test_content_nonnegative(self):
        fx = training.FeatureExtractor(in_channels=3, seed=5)
        rng = np.random.default_rng(1)
        for _ in range(3):
            a = Tensor(rng.normal(size=(1, 3, 16, 16)).astype(np.float32))
            b = Tensor(rng.normal(size=(1, 3, 16, 16)).astype(np.float32))
            assert training.content_loss(a, b, fx).item() >= 0.0

    def test_content_gradient_matches_fd(self):
        fx = training.FeatureExtractor(in_channels=2, seed=6)
        rng = np.random.default_rng(2)
        hr = Tensor(rng.normal(size=(1, 2, 8, 8)))
        err = ops.grad_check(
            lambda sr: training.content_loss(sr, hr, fx),
            [Tensor(rng.normal(size=(1, 2, 8, 8)), dtype=np.float64)],
        )
        assert err < 1e-5

    def test_every_loss_gradient_matches_fd(self):
        rng = np.random.default_rng(9)
        hr = Tensor(rng.normal(size=(2, 3, 4, 4)))
        err = ops.grad_check(
            lambda sr: training.pixel_loss(sr, hr),
            [Tensor(rng.normal(size=(2, 3, 4, 4)), dtype=np.float64)],
        )
        assert err < 1e-5
        # adversarial and BCE losses, perturbed inside the clamp interior
        probs = Tensor(rng.uniform(0.1, 0.9, size=6), dtype=np.float64)
        err = ops.grad_check(training.generator_adversarial_loss, [probs])
        assert err < 1e-5
        real = rng.uniform(0.8, 1.2, size=6).astype(np.float32)
        fake = rng.uniform(0.0, 0.2, size=6).astype(np.float32)
        err = ops.grad_check(
            lambda p, q: training.discriminator_loss(p, q, real, fake),
            [
                Tensor(rng.uniform(0.1, 0.9, size=6), dtype=np.float64),
                Tensor(rng.uniform(0.1, 0.9, size=6), dtype=np.float64),
            ],
        )
        assert err < 1e-5

    def test_gen_adv_at_half(self):
        d = Tensor(np.full(4, 0.5))
        assert training.generator_adversarial_loss(d).item() == pytest.approx(math.log(2.0), rel=1e-6)

    def test_gen_adv_perfect_fooling(self):
        d = Tensor(np.full(4, 1.0 - 1e-9))
        assert training.generator_adversarial_loss(d).item() == pytest.approx(0.0, abs=1e-5)

    def test_gen_adv_monotone(self):
        losses = [
            training.generator_adversarial_loss(Tensor(np.array([p]))).item()
            for p in (0.1, 0.3, 0.5, 0.7, 0.9)
        ]
        assert all(a > b for a, b in zip(losses, losses[1:]))

    def test_disc_loss_perfect(self):
        real = np.ones(4, dtype=np.float32)
        fake = np.zeros(4, dtype=np.float32)
        loss = training.discriminator_loss(
            Tensor(np.full(4, 1.0 - 1e-9)), Tensor(np.full(4, 1e-9)), real, fake
        )
        assert loss.item() == pytest.approx(0.0, abs=1e-5)

    def test_disc_loss_uninformative_is_ln2(self):
        # mean convention: (BCE_real + BCE_fake) / 2 at p = 0.5 -> ln 2
        real = np.ones(4, dtype=np.float32)
        fake = np.zeros(4, dtype=np.float32)
        loss = training.discriminator_loss(
            Tensor(np.full(4, 0.5)), Tensor(np.full(4, 0.5)), real, fake
        )
        assert loss.item() == pytest.approx(math.log(2.0), rel=1e-6)

    def test_disc_loss_with_smoothing_positive_at_confident_real(self):
        real = np.full(4, 0.9, dtype=np.float32)
        fake = np.zeros(4, dtype=np.float32)
        loss = training.discriminator_loss(
            Tensor(np.full(4, 1.0 - 1e-7)), Tensor(np.full(4, 1e-7)), real, fake
        )
        assert loss.item() > 0.1

    def test_losses_nonnegative_random(self):
        rng = np.random.default_rng(3)
        for _ in range(5):
            p = Tensor(rng.uniform(0.01, 0.99, size=6))
            q = Tensor(rng.uniform(0.01, 0.99, size=6))
            real = rng.uniform(0.8, 1.2, size=6).astype(np.float32)
            fake = rng.uniform(0.0, 0.2, size=6).astype(np.float32)
            assert training.discriminator_loss(p, q, real, fake).item() >= 0.0
            assert training.generator_adversarial_loss(p).item() >= 0.0


class TestSchedule:
    def test_paper_scale_boundaries(self):
        plan = training.TrainPlan(total_iterations=200_000)
        assert training.learning_rate(0, plan) == 1e-4
        assert training.learning_rate(100_000 - 1, plan) == 1e-4
        assert training.learning_rate(100_000, plan) == 1e-5
        assert training.learning_rate(200_000 - 1, plan) == 1e-5

    def test_two_valued(self):
        plan = training.TrainPlan(total_iterations=1000)
        vals = {training.learning_rate(i, plan) for i in range(0, 1000, 37)}
        assert vals == {1e-4, 1e-5}

    def test_out_of_range(self):
        plan = training.TrainPlan(total_iterations=10)
        with pytest.raises(ValueError):
            training.learning_rate(10, plan)


class TestAdam:
    def test_zero_grad_keeps_params(self):
        gen = small_gen()
        state = training.AdamState.for_model(gen)
        before = {n: p.data.copy() for n, p in gen.params.items()}
        training.adam_update(gen.params, state, 1e-3, training.TrainPlan())
        assert state.step == 1
        for n, p in gen.params.items():
            np.testing.assert_array_equal(p.data, before[n])

    def test_first_step_magnitude_near_lr(self):
        # bias correction makes the first update lr * g/|g| regardless of g scale
        p = Tensor(np.array([1.0], dtype=np.float32), requires_grad=True)
        p.grad = np.array([0.37], dtype=np.float32)
        params = {"w": p}
        state = training.AdamState(m={"w": np.zeros(1, dtype=np.float32)},
                                   v={"w": np.zeros(1, dtype=np.float32)})
        training.adam_update(params, state, 1e-2, training.TrainPlan())
        assert p.data[0] == pytest.approx(1.0 - 1e-2, rel=1e-4)

    def test_deterministic_trajectories(self):
        runs = []
        for _ in range(2):
            gen = small_gen(seed=3)
            state = training.AdamState.for_model(gen)
            plan = training.TrainPlan()
            rng = np.random.default_rng(0)
            for _ in range(3):
                x = Tensor(rng.normal(size=(2, 3, 8, 8)).astype(np.float32))
                out = gen.forward(x, train=True)
                gen.zero_grad()
                (out * out).mean().backward()
                training.adam_update(gen.params, state, 1e-3, plan)
            runs.append({n: p.data.copy() for n, p in gen.params.items()})
        for n in runs[0]:
            np.testing.assert_array_equal(runs[0][n], runs[1][n])


class TestRunTraining:
    def test_pretrain_only_leaves_disc_untouched(self):
        gen, disc = small_gen(), small_disc()
        before = {n: p.data.copy() for n, p in disc.params.items()}
        plan = training.TrainPlan(
            total_iterations=4, iterations_per_epoch=2, pretrain_iterations=4,
            batch_size=2, seed=0,
        )
        result = training.run_training(gen, disc, plan, tiny_dataset())
        assert len(result.log) == 4
        for n, p in disc.params.items():
            np.testing.assert_array_equal(p.data, before[n])

    def test_adversarial_phase_updates_disc(self):
        gen, disc = small_gen(), small_disc()
        before = {n: p.data.copy() for n, p in disc.params.items()}
        plan = training.TrainPlan(
            total_iterations=3, iterations_per_epoch=3, pretrain_iterations=1,
            batch_size=2, seed=0,
        )
        result = training.run_training(gen, disc, plan, tiny_dataset())
        assert any(r["d_loss"] != 0.0 for r in result.log)
        changed = any(
            not np.array_equal(p.data, before[n]) for n, p in disc.params.items()
        )
        assert changed

    def test_identical_seeds_identical_logs(self):
        logs = []
        for _ in range(2):
            gen, disc = small_gen(seed=7), small_disc(seed=8)
            plan = training.TrainPlan(
                total_iterations=4, iterations_per_epoch=4, pretrain_iterations=2,
                batch_size=2, seed=11,
            )
            result = training.run_training(gen, disc, plan, tiny_dataset(seed=5))
            logs.append([{k: r[k] for k in ("d_loss", "g_adv", "g_content", "g_pixel")} for r in result.log])
        assert logs[0] == logs[1]

    def test_nan_aborts_with_iteration(self):
        gen, disc = small_gen(), small_disc()
        gen.params["head.kernel"].data[:] = np.nan
        plan = training.TrainPlan(
            total_iterations=2, iterations_per_epoch=2, pretrain_iterations=2,
            batch_size=2, seed=0,
        )
        with pytest.raises(training.TrainingDiverged, match="iteration 0"):
            training.run_training(gen, disc, plan, tiny_dataset())

    def test_checkpoints_and_log_files(self, tmp_path):
        gen, disc = small_gen(), small_disc()
        plan = training.TrainPlan(
            total_iterations=4, iterations_per_epoch=2, pretrain_iterations=4,
            batch_size=2, seed=0,
        )
        ds = tiny_dataset()
        result = training.run_training(
            gen, disc, plan, ds, val_pairs=ds[:2],
            checkpoint_dir=tmp_path / "ckpt", log_path=tmp_path / "log.jsonl",
        )
        assert len(result.checkpoints) == 2
        assert len(result.validation) == 2
        lines = (tmp_path / "log.jsonl").read_text().strip().splitlines()
        assert len(lines) == 4 + 2
        assert all(set(("psnr", "ssim")) <= set(v) for v in result.validation)

    def test_pixel_loss_decreases_over_short_run(self):
        gen, disc = small_gen(seed=2), small_disc(seed=3)
        plan = training.TrainPlan(
            total_iterations=40, iterations_per_epoch=40, pretrain_iterations=40,
            batch_size=4, seed=1, lr_first_half=2e-3, lr_second_half=2e-4,
        )
        result = training.run_training(gen, disc, plan, tiny_dataset(n=4))
        first = np.mean([r["g_pixel"] for r in result.log[:8]])
        last = np.mean([r["g_pixel"] for r in result.log[-8:]])
        assert last < first


def test_plan_validation():
    with pytest.raises(ValueError):
        training.TrainPlan(real_range=(1.2, 0.8)).validate()
    with pytest.raises(ValueError):
        training.TrainPlan(pixel_weight=0, content_weight=0, adversarial_weight=0).validate()
    with pytest.raises(ValueError):
        training.TrainPlan(pixel_weight=-1).validate()
    plan = training.TrainPlan(total_iterations=100, pretrain_iterations=None)
    assert plan.warmup == 20
