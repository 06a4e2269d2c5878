"""GAN training: perceptual losses, one-sided label smoothing, Adam schedule.

The loop has two phases.  A warm-up phase fits the generator with pixel and
content losses only; the adversarial phase then alternates one discriminator
step and one generator step per iteration.  The discriminator's targets are
smoothed to uniform draws in [0.8, 1.2] for real and [0, 0.2] for fake; the
generator keeps hard targets.  The learning rate is a two-valued step
function over the iteration budget and the optimizer is Adam with
beta1 = 0.9, beta2 = 0.99.
"""

from __future__ import annotations

import json
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import metrics, models, ops, weights
from .tensor import Tensor, no_grad

PROB_EPS = 1e-7


class TrainingDiverged(RuntimeError):
    """A loss became non-finite; the message names the iteration."""


@dataclass
class TrainPlan:
    total_iterations: int = 200_000
    iterations_per_epoch: int = 1000
    lr_first_half: float = 1e-4
    lr_second_half: float = 1e-5
    adam_beta1: float = 0.9
    adam_beta2: float = 0.99
    adam_eps: float = 1e-8
    batch_size: int = 8
    label_smoothing: bool = True
    real_range: tuple = (0.8, 1.2)
    fake_range: tuple = (0.0, 0.2)
    pixel_weight: float = 1.0
    content_weight: float = 0.006
    adversarial_weight: float = 1e-3
    pretrain_iterations: int | None = None  # None -> 20% of total
    seed: int = 0

    def validate(self):
        if self.total_iterations < 1 or self.iterations_per_epoch < 1:
            raise ValueError("iteration counts must be positive")
        if self.batch_size < 1:
            raise ValueError("batch_size must be positive")
        for lo, hi in (self.real_range, self.fake_range):
            if lo > hi:
                raise ValueError(f"label range ({lo}, {hi}) not well-ordered")
        wts = (self.pixel_weight, self.content_weight, self.adversarial_weight)
        if any(w < 0 for w in wts):
            raise ValueError("loss weights must be >= 0")
        if not any(w > 0 for w in wts):
            raise ValueError("at least one loss weight must be positive")

    @property
    def warmup(self) -> int:
        if self.pretrain_iterations is None:
            return self.total_iterations // 5
        return self.pretrain_iterations


def desk_plan(**overrides) -> TrainPlan:
    """Desk-scale schedule: 500 warm-up + 1500 adversarial iterations.

    Keeps the paper-scale schedule shape (constant rate for the first half,
    ten-fold drop for the second) but at 3e-4: Adam's step size must stay
    well below the weight scale of the small desk models.
    """
    cfg = dict(
        total_iterations=2000,
        iterations_per_epoch=500,
        pretrain_iterations=500,
        batch_size=8,
        lr_first_half=4e-4,
        lr_second_half=4e-5,
    )
    cfg.update(overrides)
    return TrainPlan(**cfg)


def smooth_labels(n: int, kind: str, plan: TrainPlan, rng) -> np.ndarray:
    """Discriminator targets: uniform in the configured range, or hard 1/0."""
    if n < 1:
        raise ValueError(f"need n >= 1 labels, got {n}")
    if kind not in ("real", "fake"):
        raise ValueError(f"label kind must be real|fake, got {kind!r}")
    if not plan.label_smoothing:
        value = 1.0 if kind == "real" else 0.0
        return np.full(n, value, dtype=np.float32)
    lo, hi = plan.real_range if kind == "real" else plan.fake_range
    return rng.uniform(lo, hi, size=n).astype(np.float32)


def learning_rate(iteration: int, plan: TrainPlan) -> float:
    """Step schedule: first-half rate, then second-half rate."""
    if iteration < 0 or iteration >= plan.total_iterations:
        raise ValueError(
            f"iteration {iteration} outside [0, {plan.total_iterations})"
        )
    if iteration < plan.total_iterations / 2:
        return plan.lr_first_half
    return plan.lr_second_half


# -- losses ------------------------------------------------------------------------


def pixel_loss(sr: Tensor, hr: Tensor) -> Tensor:
    if sr.shape != hr.shape:
        raise ValueError(f"shape mismatch: {sr.shape} vs {hr.shape}")
    diff = sr - hr
    return (diff * diff).mean()


class FeatureExtractor:
    """Fixed random conv stack standing in for a pretrained feature network.

    Four stride-2 convolutions (channels 16, 32, 64, 64) with leaky-ReLU;
    weights are seeded and never trained.  The final feature map is the
    comparison layer.  Weights can be replaced via the weight-file format
    if a pretrained extractor is available.
    """

    CHANNELS = (16, 32, 64, 64)

    def __init__(self, in_channels: int = 3, seed: int = 2024):
        rng = np.random.default_rng(seed)
        self.convs = []
        c_in = in_channels
        for c_out in self.CHANNELS:
            fan_in = c_in * 9
            k = rng.normal(0.0, np.sqrt(2.0 / fan_in), size=(c_out, c_in, 3, 3))
            self.convs.append(
                ops.ConvParams(
                    Tensor(k.astype(np.float32)),
                    Tensor(np.zeros(c_out, dtype=np.float32)),
                    stride=2,
                    padding=1,
                )
            )
            c_in = c_out

    def features(self, x: Tensor) -> Tensor:
        y = x
        for p in self.convs:
            y = ops.leaky_relu(ops.conv2d(y, p), 0.2)
        return y


def content_loss(sr: Tensor, hr: Tensor, fx: FeatureExtractor) -> Tensor:
    """MSE between feature maps of SR and HR."""
    if sr.shape != hr.shape:
        raise ValueError(f"shape mismatch: {sr.shape} vs {hr.shape}")
    return pixel_loss(fx.features(sr), fx.features(hr.detach()))


def generator_adversarial_loss(d_out_on_sr: Tensor) -> Tensor:
    """-mean(log D(G(lr))): minimized when the discriminator is fooled."""
    return -(d_out_on_sr.clamp(PROB_EPS, 1.0 - PROB_EPS).log().mean())


def _bce(probs: Tensor, targets: np.ndarray) -> Tensor:
    p = probs.clamp(PROB_EPS, 1.0 - PROB_EPS)
    t = Tensor(targets.reshape(probs.shape))
    one = Tensor(np.float32(1.0))
    return -((t * p.log() + (one - t) * (one - p).log()).mean())


def discriminator_loss(
    d_real: Tensor, d_fake: Tensor, real_labels: np.ndarray, fake_labels: np.ndarray
) -> Tensor:
    """Mean of the real-batch BCE and the fake-batch BCE."""
    half = Tensor(np.float32(0.5))
    return half * _bce(d_real, real_labels) + half * _bce(d_fake, fake_labels)


# -- optimizer ---------------------------------------------------------------------


@dataclass
class AdamState:
    m: dict = field(default_factory=dict)
    v: dict = field(default_factory=dict)
    step: int = 0

    @staticmethod
    def for_model(model: models.Model) -> "AdamState":
        state = AdamState()
        for name, p in model.params.items():
            state.m[name] = np.zeros_like(p.data)
            state.v[name] = np.zeros_like(p.data)
        return state


def adam_update(params: dict, state: AdamState, lr: float, plan: TrainPlan) -> None:
    """Bias-corrected Adam step over every parameter with a gradient."""
    state.step += 1
    b1, b2 = plan.adam_beta1, plan.adam_beta2
    bc1 = 1.0 - b1**state.step
    bc2 = 1.0 - b2**state.step
    for name, p in params.items():
        g = p.grad
        if g is None:
            g = np.zeros_like(p.data)
        g = g.astype(p.data.dtype, copy=False)
        m = state.m[name]
        v = state.v[name]
        m *= b1
        m += (1.0 - b1) * g
        v *= b2
        v += (1.0 - b2) * (g * g)
        p.data -= lr * (m / bc1) / (np.sqrt(v / bc2) + plan.adam_eps)


# -- the loop -----------------------------------------------------------------------


def to_model_domain(img01: np.ndarray) -> np.ndarray:
    """[0,1] HWC -> [-1,1] CHW float32."""
    return (np.transpose(img01, (2, 0, 1)) * 2.0 - 1.0).astype(np.float32)


def from_model_domain(chw: np.ndarray) -> np.ndarray:
    """[-1,1] CHW -> clamped [0,1] HWC float32."""
    return np.clip((np.transpose(chw, (1, 2, 0)) + 1.0) * 0.5, 0.0, 1.0).astype(
        np.float32
    )


@dataclass
class TrainingResult:
    log: list
    checkpoints: list
    validation: list


def _check_finite(value: float, label: str, iteration: int):
    if not np.isfinite(value):
        raise TrainingDiverged(
            f"{label} became non-finite at iteration {iteration}: {value}"
        )


def _validate(gen, val_pairs, period=4):
    psnrs, ssims, cbs = [], [], []
    with no_grad():
        for lr01, hr01 in val_pairs:
            x = Tensor(to_model_domain(lr01)[None])
            sr01 = from_model_domain(gen.forward(x).data[0])
            psnrs.append(metrics.psnr(sr01, hr01))
            ssims.append(metrics.ssim(sr01, hr01))
            cbs.append(metrics.checkerboard_index(sr01, period))
    return {
        "psnr": float(np.mean(psnrs)),
        "ssim": float(np.mean(ssims)),
        "checkerboard_index": float(np.mean(cbs)),
    }


def run_training(
    gen: models.Model,
    disc: models.Model,
    plan: TrainPlan,
    dataset,
    val_pairs=None,
    checkpoint_dir=None,
    log_path=None,
    fx: FeatureExtractor | None = None,
) -> TrainingResult:
    """Train per the plan; returns per-iteration log and per-epoch validation.

    ``dataset`` is a sequence of (lr, hr) pairs as [0,1] HWC arrays (or
    ImageBuffers).  Batching order, label draws and every weight update are
    deterministic given plan.seed.
    """
    plan.validate()
    rng = np.random.default_rng(plan.seed)
    pairs = [
        (np.asarray(getattr(lr, "values", lr)), np.asarray(getattr(hr, "values", hr)))
        for lr, hr in dataset
    ]
    if not pairs:
        raise ValueError("dataset is empty")
    lr_stack = np.stack([to_model_domain(p[0]) for p in pairs])
    hr_stack = np.stack([to_model_domain(p[1]) for p in pairs])
    if fx is None:
        fx = FeatureExtractor(in_channels=hr_stack.shape[1])
    gen_state = AdamState.for_model(gen)
    disc_state = AdamState.for_model(disc)
    log_records = []
    checkpoints = []
    validation = []
    log_fh = open(log_path, "w") if log_path else None
    ckpt_dir = Path(checkpoint_dir) if checkpoint_dir else None
    if ckpt_dir:
        ckpt_dir.mkdir(parents=True, exist_ok=True)
    try:
        for it in range(plan.total_iterations):
            t_start = time.perf_counter()
            lr_now = learning_rate(it, plan)
            idx = rng.integers(0, len(pairs), size=plan.batch_size)
            lr_batch = Tensor(lr_stack[idx])
            hr_batch = Tensor(hr_stack[idx])

            d_loss_val = 0.0
            g_adv_val = 0.0
            adversarial = it >= plan.warmup

            sr = gen.forward(lr_batch, train=True)

            if adversarial:
                # 1 discriminator step on detached SR, then 1 generator step
                disc.zero_grad()
                d_real = disc.forward(hr_batch, train=True)
                d_fake = disc.forward(sr.detach(), train=True)
                real_t = smooth_labels(plan.batch_size, "real", plan, rng)
                fake_t = smooth_labels(plan.batch_size, "fake", plan, rng)
                d_loss = discriminator_loss(d_real, d_fake, real_t, fake_t)
                d_loss.backward()
                d_loss_val = d_loss.item()
                _check_finite(d_loss_val, "discriminator loss", it)
                adam_update(disc.params, disc_state, lr_now, plan)

            gen.zero_grad()
            g_pixel = pixel_loss(sr, hr_batch)
            g_content = content_loss(sr, hr_batch, fx)
            total = (
                Tensor(np.float32(plan.pixel_weight)) * g_pixel
                + Tensor(np.float32(plan.content_weight)) * g_content
            )
            if adversarial and plan.adversarial_weight > 0:
                d_on_sr = disc.forward(sr, train=True)
                g_adv = generator_adversarial_loss(d_on_sr)
                g_adv_val = g_adv.item()
                total = total + Tensor(np.float32(plan.adversarial_weight)) * g_adv
            total.backward()
            g_pixel_val = g_pixel.item()
            g_content_val = g_content.item()
            _check_finite(g_pixel_val + g_content_val + g_adv_val, "generator loss", it)
            adam_update(gen.params, gen_state, lr_now, plan)

            record = {
                "iteration": it,
                "lr": lr_now,
                "d_loss": round(d_loss_val, 6),
                "g_adv": round(g_adv_val, 6),
                "g_content": round(g_content_val, 6),
                "g_pixel": round(g_pixel_val, 6),
                "wall_ms": round((time.perf_counter() - t_start) * 1000.0, 3),
            }
            log_records.append(record)
            if log_fh:
                log_fh.write(json.dumps(record) + "\n")

            if (it + 1) % plan.iterations_per_epoch == 0:
                epoch = (it + 1) // plan.iterations_per_epoch
                if ckpt_dir:
                    path = ckpt_dir / f"generator_epoch{epoch:04d}.tsrw"
                    weights.save_weights(gen, path)
                    checkpoints.append(str(path))
                if val_pairs:
                    stats = dict(epoch=epoch, iteration=it, **_validate(gen, val_pairs))
                    validation.append(stats)
                    if log_fh:
                        log_fh.write(json.dumps({"validation": stats}) + "\n")
    finally:
        if log_fh:
            log_fh.close()
    return TrainingResult(log=log_records, checkpoints=checkpoints, validation=validation)
