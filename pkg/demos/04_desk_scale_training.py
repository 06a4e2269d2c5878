#!/usr/bin/env python3
"""Train the modified generator at desk scale and plot the loss curves.

Small edition of the full protocol so it finishes in a few minutes: 64
synthetic 128x128 images, 32x32 inputs, a short warm-up followed by a
short adversarial phase.  For the full desk-scale run (256 images,
500 + 1500 iterations) use the acceptance suite or the `tilesr train` CLI.

Run:  python demos/04_desk_scale_training.py [outdir]
"""

import sys
from pathlib import Path

import numpy as np

from tilesr import (
    Tensor,
    bicubic_downsample,
    build_discriminator,
    build_generator,
    desk_discriminator_spec,
    desk_generator_spec,
    metrics,
    no_grad,
    run_training,
    synthesize_sample,
)
from tilesr.data import ImageBuffer, nearest_upsample, save_png
from tilesr.training import TrainPlan, from_model_domain, to_model_domain


def main():
    out = Path(sys.argv[1] if len(sys.argv) > 1 else "demo_output/training")
    out.mkdir(parents=True, exist_ok=True)

    rng = np.random.default_rng(11)
    pairs = []
    for _ in range(64):
        hr = synthesize_sample(rng, 128)
        pairs.append((bicubic_downsample(hr, 4).values, hr.values))
    val = pairs[:4]

    gen = build_generator(desk_generator_spec(), seed=0)
    disc = build_discriminator(desk_discriminator_spec(), seed=1)
    plan = TrainPlan(
        total_iterations=300,
        iterations_per_epoch=100,
        pretrain_iterations=150,
        batch_size=8,
        lr_first_half=4e-4,
        lr_second_half=4e-5,
        seed=3,
    )

    result = run_training(
        gen, disc, plan, pairs[4:], val_pairs=val, log_path=out / "log.jsonl"
    )
    for v in result.validation:
        print(f"epoch {v['epoch']}: PSNR {v['psnr']:.2f} dB, SSIM {v['ssim']:.4f}, "
              f"checkerboard {v['checkerboard_index']:.2e}")

    # side-by-side panels for the first validation image
    lr01, hr01 = val[0]
    with no_grad():
        sr01 = from_model_domain(gen.forward(Tensor(to_model_domain(lr01)[None])).data[0])
    nn = nearest_upsample(ImageBuffer(lr01), 4)
    save_png(ImageBuffer(lr01), out / "panel_lr.png")
    save_png(nn, out / "panel_nearest.png")
    save_png(ImageBuffer(sr01), out / "panel_sr.png")
    save_png(ImageBuffer(hr01), out / "panel_hr.png")
    print(f"\nnearest-neighbour PSNR: {metrics.psnr(nn.values, hr01):.2f} dB")
    print(f"trained generator PSNR: {metrics.psnr(sr01, hr01):.2f} dB")
    print(f"panels written to {out}/")


if __name__ == "__main__":
    main()
