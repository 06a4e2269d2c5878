"""Command-line entry points for the full pipeline.

Subcommands: synth-data, train, sr, video-roi, bench, serve, eval.
Flags override values from an optional JSON config file (--config).
Exit codes: 0 success, 2 usage error, 3 data error, 4 model/weight error.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import bench, data, inference, metrics, models, service, training, weights

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_DATA = 3
EXIT_MODEL = 4


def _apply_config(args: argparse.Namespace, parser: argparse.ArgumentParser):
    """Config file supplies defaults; explicit flags win."""
    if not getattr(args, "config", None):
        return args
    try:
        cfg = json.loads(Path(args.config).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        parser.error(f"cannot read config {args.config}: {exc}")
    defaults = {k: v for k, v in cfg.items() if hasattr(args, k)}
    supplied = {
        a.lstrip("-").replace("-", "_").split("=")[0] for a in sys.argv if a.startswith("--")
    }
    for key, value in defaults.items():
        if key not in supplied:
            setattr(args, key, value)
    return args


def _load_model(path):
    try:
        return weights.load_weights(path)
    except (OSError, weights.WeightFormatError) as exc:
        raise weights.WeightFormatError(f"{path}: {exc}")


def _upscaler(spec_text, scale=4):
    if spec_text == "nearest":
        return inference.NearestBaseline(scale)
    if spec_text == "bicubic":
        return inference.BicubicBaseline(scale)
    return _load_model(spec_text)


def cmd_synth_data(args):
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(args.seed)
    records = []
    for i in range(args.count):
        img = data.synthesize_sample(rng, args.size)
        path = out / f"sample_{i:05d}.png"
        data.save_png(img, path)
        records.append({"id": path.stem, "channels": [str(path)]})
    data.write_manifest(records, out / "manifest.jsonl")
    print(f"wrote {args.count} images to {out}")
    return EXIT_OK


def _load_training_pairs(images_dir, hr_tile, scale):
    paths = sorted(Path(images_dir).glob("*.png"))
    if not paths:
        raise data.DataError(f"no .png files in {images_dir}")
    pairs = []
    for path in paths:
        img = data.ImageBuffer(np.atleast_3d(data.load_png(path)))
        if img.channels == 1:
            img = data.ImageBuffer(np.repeat(img.values, 3, axis=2))
        for lr, hr in data.make_training_pair(img, hr_tile, scale):
            pairs.append((lr.values, hr.values))
    return pairs


def cmd_train(args):
    pairs = _load_training_pairs(args.data, args.hr_tile, args.scale)
    n_val = max(1, min(args.val_count, len(pairs) // 10))
    val_pairs, train_pairs = pairs[:n_val], pairs[n_val:]
    gen_spec = models.GeneratorSpec(
        scale=args.scale,
        base_channels=args.base_channels,
        n_res_blocks=args.res_blocks,
        use_bn=args.bn,
        upsampler=args.upsampler,
        tail_kernel=args.tail_kernel,
    )
    gen = models.build_generator(gen_spec, args.seed)
    disc = models.build_discriminator(models.desk_discriminator_spec(), args.seed + 1)
    plan = training.TrainPlan(
        total_iterations=args.iterations,
        iterations_per_epoch=args.iterations_per_epoch,
        lr_first_half=args.lr,
        lr_second_half=args.lr * 0.1,
        batch_size=args.batch,
        pretrain_iterations=args.pretrain,
        seed=args.seed,
    )
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    result = training.run_training(
        gen, disc, plan, train_pairs,
        val_pairs=val_pairs,
        checkpoint_dir=out / "checkpoints",
        log_path=out / "log.jsonl",
    )
    weights.save_weights(gen, out / "generator.tsrw")
    weights.save_weights(disc, out / "discriminator.tsrw")
    if result.validation:
        print("final validation:", json.dumps(result.validation[-1]))
    print(f"saved generator to {out / 'generator.tsrw'}")
    return EXIT_OK


def cmd_sr(args):
    model = _upscaler(args.model)
    img = data.ImageBuffer(np.atleast_3d(data.load_png(args.input)))
    if img.channels == 1:
        img = data.ImageBuffer(np.repeat(img.values, 3, axis=2))
    if isinstance(model, models.Model):
        sr = inference.sr_image(model, img, tile=args.tile)
    else:
        sr = model.sr_patch(img)
    data.save_png(sr, args.output)
    print(f"{args.input} ({img.height}x{img.width}) -> {args.output} ({sr.height}x{sr.width})")
    return EXIT_OK


def cmd_video_roi(args):
    model = _upscaler(args.model)
    frame_paths = sorted(Path(args.frames).glob("*.png"))
    if not frame_paths:
        raise data.DataError(f"no frames in {args.frames}")
    frames = []
    for p in frame_paths:
        img = data.ImageBuffer(np.atleast_3d(data.load_png(p)))
        if img.channels == 1:
            img = data.ImageBuffer(np.repeat(img.values, 3, axis=2))
        frames.append(img)
    roi = inference.Roi.parse(args.roi)
    if isinstance(model, models.Model):
        results = inference.sr_video_roi(model, frames, roi)
    else:
        for f in frames:
            roi.validate(f.height, f.width)
        results = [(f, model.sr_patch(inference.crop(f, roi))) for f in frames]
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    for i, (_, sr) in enumerate(results):
        data.save_png(sr, out / f"roi_{i:05d}.png")
    print(f"wrote {len(results)} SR crops to {out}")
    return EXIT_OK


def cmd_bench(args):
    model = _upscaler(args.model)
    rng = np.random.default_rng(0)
    label = Path(args.model).stem if Path(args.model).exists() else args.model
    if args.mode == "patch":
        patch = data.ImageBuffer(rng.uniform(size=(64, 64, 3)).astype(np.float32))
        result = bench.time_patch(model, patch, n_runs=args.runs, label=label)
    elif args.mode == "image":
        image = data.ImageBuffer(rng.uniform(size=(128, 128, 3)).astype(np.float32))
        result = bench.time_whole_image(model, image, tile=args.tile, n_runs=args.runs, label=label)
    else:
        frames = [
            data.ImageBuffer(rng.uniform(size=(128, 128, 3)).astype(np.float32))
            for _ in range(args.frames)
        ]
        result = bench.video_fps(model, frames, inference.Roi.parse(args.roi), label=label)
    print(result.to_json())
    print(bench.format_table({label: {args.mode if args.mode != "video" else "video": result}}))
    return EXIT_OK


def cmd_serve(args):
    service.serve(args.models, host=args.host, port=args.port)
    return EXIT_OK


def cmd_eval(args):
    directory = Path(args.dir)
    sr_paths = sorted(directory.glob("*.sr.png"))
    if not sr_paths:
        raise data.DataError(f"no '<name>.sr.png' files in {directory}")
    for sr_path in sr_paths:
        hr_path = directory / sr_path.name.replace(".sr.png", ".hr.png")
        if not hr_path.exists():
            raise data.DataError(f"missing reference {hr_path}")
        sr = data.ImageBuffer(np.atleast_3d(data.load_png(sr_path)))
        hr = data.ImageBuffer(np.atleast_3d(data.load_png(hr_path)))
        report = metrics.quality_report(sr, hr)
        print(f"{sr_path.stem.replace('.sr', '')}\t{report.to_json()}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="tilesr", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth-data", help="generate synthetic confocal-style images")
    p.add_argument("--count", type=int, default=64)
    p.add_argument("--size", type=int, default=128)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.add_argument("--config")
    p.set_defaults(fn=cmd_synth_data)

    p = sub.add_parser("train", help="train a generator/discriminator pair")
    p.add_argument("--data", required=True, help="directory of HR .png images")
    p.add_argument("--out", required=True)
    p.add_argument("--scale", type=int, default=4)
    p.add_argument("--hr-tile", type=int, default=128)
    p.add_argument("--iterations", type=int, default=2000)
    p.add_argument("--iterations-per-epoch", type=int, default=500)
    p.add_argument("--pretrain", type=int, default=500)
    p.add_argument("--batch", type=int, default=8)
    p.add_argument("--lr", type=float, default=4e-4)
    p.add_argument("--base-channels", type=int, default=12)
    p.add_argument("--res-blocks", type=int, default=4)
    p.add_argument("--tail-kernel", type=int, default=5)
    p.add_argument("--upsampler", choices=models.UPSAMPLERS, default="nearest_then_conv")
    p.add_argument("--bn", action="store_true", help="keep batch normalization")
    p.add_argument("--val-count", type=int, default=8)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--config")
    p.set_defaults(fn=cmd_train)

    p = sub.add_parser("sr", help="super-resolve one image file")
    p.add_argument("--model", required=True, help=".tsrw path, 'nearest' or 'bicubic'")
    p.add_argument("--input", required=True)
    p.add_argument("--output", required=True)
    p.add_argument("--tile", type=int, default=64)
    p.add_argument("--config")
    p.set_defaults(fn=cmd_sr)

    p = sub.add_parser("video-roi", help="super-resolve a ROI across frame PNGs")
    p.add_argument("--model", required=True)
    p.add_argument("--frames", required=True, help="directory of numbered frames")
    p.add_argument("--roi", required=True, help="x,y,w,h")
    p.add_argument("--out", required=True)
    p.add_argument("--config")
    p.set_defaults(fn=cmd_video_roi)

    p = sub.add_parser("bench", help="latency / FPS measurement")
    p.add_argument("mode", choices=["patch", "image", "video"])
    p.add_argument("--model", required=True)
    p.add_argument("--runs", type=int, default=10)
    p.add_argument("--tile", type=int, default=64)
    p.add_argument("--roi", default="32,32,64,64")
    p.add_argument("--frames", type=int, default=30)
    p.add_argument("--config")
    p.set_defaults(fn=cmd_bench)

    p = sub.add_parser("serve", help="run the HTTP inference service")
    p.add_argument("--models", required=True, help="directory of .tsrw files")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8008)
    p.add_argument("--config")
    p.set_defaults(fn=cmd_serve)

    p = sub.add_parser("eval", help="QualityReport over a paired directory")
    p.add_argument("--dir", required=True, help="directory of <name>.sr.png / <name>.hr.png pairs")
    p.add_argument("--config")
    p.set_defaults(fn=cmd_eval)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    args = _apply_config(args, parser)
    try:
        return args.fn(args)
    except data.DataError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except (weights.WeightFormatError, models.ModelError) as exc:
        print(f"model error: {exc}", file=sys.stderr)
        return EXIT_MODEL


if __name__ == "__main__":
    sys.exit(main())
