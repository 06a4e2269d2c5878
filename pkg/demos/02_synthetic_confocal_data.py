#!/usr/bin/env python3
"""Synthesize confocal-style training images and build LR/HR pairs.

Each image draws k in 1..4 and renders the cumulative stain subset:
red microtubule filaments, blue nuclei, green protein puncta, yellow ER
texture.  HR images are bicubic-downsampled 4x to produce the noisy LR
inputs the generator trains on.

Run:  python demos/02_synthetic_confocal_data.py [outdir]
"""

import sys
from pathlib import Path

import numpy as np

from tilesr import bicubic_downsample, make_training_pair, synthesize_sample
from tilesr.data import save_png


def main():
    out = Path(sys.argv[1] if len(sys.argv) > 1 else "demo_output/synth")
    out.mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(7)

    for i in range(6):
        hr = synthesize_sample(rng, 256)
        lr = bicubic_downsample(hr, 4)
        save_png(hr, out / f"sample_{i}_hr.png")
        save_png(lr, out / f"sample_{i}_lr.png")
        occupancy = float((hr.values.max(axis=2) > 0.05).mean())
        print(
            f"sample {i}: HR {hr.height}x{hr.width} -> LR {lr.height}x{lr.width}, "
            f"foreground {occupancy:.1%}"
        )

    # tile one 512 image into four 256x256 training pairs, like the corpus
    big = synthesize_sample(rng, 512)
    pairs = list(make_training_pair(big, hr_tile=256, scale=4))
    print(f"\n512x512 image -> {len(pairs)} training pairs "
          f"({pairs[0][0].height}x{pairs[0][0].width} LR, "
          f"{pairs[0][1].height}x{pairs[0][1].width} HR)")
    print(f"images written to {out}/")


if __name__ == "__main__":
    main()
