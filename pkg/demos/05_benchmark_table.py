#!/usr/bin/env python3
"""Reproduce the runtime-comparison table on local hardware.

Measures single-patch latency, whole-image tile/stitch latency, and the
video-ROI frame rate for each architecture variant plus the interpolation
baselines.  Absolute numbers depend on the machine; the orderings (no-BN
faster than BN, interpolation faster than any network) are the result.

Run:  python demos/05_benchmark_table.py [--runs N]
"""

import argparse

import numpy as np

from tilesr import bench, build_generator, desk_generator_spec
from tilesr.data import ImageBuffer
from tilesr.inference import BicubicBaseline, NearestBaseline, Roi


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--runs", type=int, default=10)
    ap.add_argument("--frames", type=int, default=30)
    args = ap.parse_args()

    rng = np.random.default_rng(0)
    patch = ImageBuffer(rng.uniform(size=(64, 64, 3)).astype(np.float32))
    image = ImageBuffer(rng.uniform(size=(128, 128, 3)).astype(np.float32))
    frames = [
        ImageBuffer(rng.uniform(size=(128, 128, 3)).astype(np.float32))
        for _ in range(args.frames)
    ]
    roi = Roi(32, 32, 64, 64)

    variants = {
        "subpixel (SRGAN baseline)": build_generator(
            desk_generator_spec(upsampler="subpixel_conv", use_bn=True), 0
        ),
        "transposed conv": build_generator(
            desk_generator_spec(upsampler="transposed_conv"), 0
        ),
        "nearest+conv, BN": build_generator(
            desk_generator_spec(upsampler="nearest_then_conv", use_bn=True), 0
        ),
        "nearest+conv, no BN": build_generator(
            desk_generator_spec(upsampler="nearest_then_conv"), 0
        ),
        "Nearest Neighbor": NearestBaseline(4),
        "Bicubic Interpolation": BicubicBaseline(4),
    }

    rows = {}
    for label, model in variants.items():
        rows[label] = {
            "patch": bench.time_patch(model, patch, n_runs=args.runs, label=label),
            "image": bench.time_whole_image(model, image, tile=64, n_runs=args.runs, label=label),
            "video": bench.video_fps(model, frames, roi, label=label),
        }
        print(f"measured {label}")

    print()
    print(bench.format_table(rows))


if __name__ == "__main__":
    main()
