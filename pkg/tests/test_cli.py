import json

import numpy as np
import pytest

from tilesr import cli, data, models, weights


@pytest.fixture(scope="module")
def model_path(tmp_path_factory):
    path = tmp_path_factory.mktemp("weights") / "desk.tsrw"
    gen = models.build_generator(models.desk_generator_spec(n_res_blocks=1), 0)
    weights.save_weights(gen, path)
    return path


def test_synth_data(tmp_path, capsys):
    out = tmp_path / "synth"
    code = cli.main(["synth-data", "--count", "3", "--size", "64", "--out", str(out)])
    assert code == 0
    assert len(list(out.glob("*.png"))) == 3
    assert (out / "manifest.jsonl").exists()
    records = data.read_manifest(out / "manifest.jsonl")
    assert len(records) == 3 and "channels" in records[0]


def test_sr_file_roundtrip(tmp_path, model_path):
    src = tmp_path / "in.png"
    data.save_png(np.random.default_rng(0).uniform(size=(48, 48, 3)).astype(np.float32), src)
    dst = tmp_path / "out.png"
    code = cli.main(["sr", "--model", str(model_path), "--input", str(src),
                     "--output", str(dst), "--tile", "32"])
    assert code == 0
    out = data.load_png(dst)
    assert out.shape == (192, 192, 3)


def test_sr_with_interpolation_baseline(tmp_path):
    src = tmp_path / "in.png"
    data.save_png(np.random.default_rng(1).uniform(size=(16, 16, 3)).astype(np.float32), src)
    dst = tmp_path / "out.png"
    assert cli.main(["sr", "--model", "bicubic", "--input", str(src), "--output", str(dst)]) == 0
    assert data.load_png(dst).shape == (64, 64, 3)


def test_sr_missing_input_is_data_error(tmp_path, model_path, capsys):
    code = cli.main(["sr", "--model", str(model_path), "--input",
                     str(tmp_path / "missing.png"), "--output", str(tmp_path / "o.png")])
    assert code == cli.EXIT_DATA


def test_sr_corrupt_model_is_model_error(tmp_path):
    bad = tmp_path / "bad.tsrw"
    bad.write_bytes(b"junk")
    src = tmp_path / "in.png"
    data.save_png(np.zeros((16, 16, 3), dtype=np.float32), src)
    code = cli.main(["sr", "--model", str(bad), "--input", str(src),
                     "--output", str(tmp_path / "o.png")])
    assert code == cli.EXIT_MODEL


def test_usage_error_exit_code():
    with pytest.raises(SystemExit) as exc:
        cli.main(["sr", "--model"])  # missing value
    assert exc.value.code == cli.EXIT_USAGE


def test_video_roi(tmp_path, model_path):
    frames = tmp_path / "frames"
    frames.mkdir()
    rng = np.random.default_rng(2)
    for i in range(3):
        data.save_png(rng.uniform(size=(48, 48, 3)).astype(np.float32), frames / f"f_{i:03d}.png")
    out = tmp_path / "roi_out"
    code = cli.main(["video-roi", "--model", str(model_path), "--frames", str(frames),
                     "--roi", "8,8,16,16", "--out", str(out)])
    assert code == 0
    outs = sorted(out.glob("*.png"))
    assert len(outs) == 3
    assert data.load_png(outs[0]).shape == (64, 64, 3)


def test_video_roi_out_of_bounds(tmp_path, model_path):
    frames = tmp_path / "frames"
    frames.mkdir()
    data.save_png(np.zeros((32, 32, 3), dtype=np.float32), frames / "f0.png")
    code = cli.main(["video-roi", "--model", str(model_path), "--frames", str(frames),
                     "--roi", "30,30,16,16", "--out", str(tmp_path / "o")])
    assert code == cli.EXIT_DATA


def test_bench_patch_baseline(capsys):
    code = cli.main(["bench", "patch", "--model", "nearest", "--runs", "10"])
    assert code == 0
    out = capsys.readouterr().out
    first = json.loads(out.splitlines()[0])
    assert first["n_runs"] == 10
    assert "Single Patch" in out


def test_eval_paired_dir(tmp_path, capsys):
    rng = np.random.default_rng(3)
    img = rng.uniform(size=(32, 32, 3)).astype(np.float32)
    data.save_png(img, tmp_path / "a.sr.png")
    data.save_png(img, tmp_path / "a.hr.png")
    code = cli.main(["eval", "--dir", str(tmp_path)])
    assert code == 0
    line = capsys.readouterr().out.strip()
    name, payload = line.split("\t")
    assert name == "a"
    assert json.loads(payload)["psnr"] == "inf"


def test_eval_missing_reference(tmp_path):
    data.save_png(np.zeros((16, 16, 3), dtype=np.float32), tmp_path / "a.sr.png")
    assert cli.main(["eval", "--dir", str(tmp_path)]) == cli.EXIT_DATA


def test_config_file_defaults(tmp_path, capsys, monkeypatch):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"count": 2, "size": 64}))
    out = tmp_path / "synth"
    monkeypatch.setattr("sys.argv", ["tilesr", "synth-data", "--out", str(out), "--config", str(cfg)])
    code = cli.main(["synth-data", "--out", str(out), "--config", str(cfg)])
    assert code == 0
    assert len(list(out.glob("*.png"))) == 2


def test_train_tiny_end_to_end(tmp_path):
    images = tmp_path / "imgs"
    images.mkdir()
    rng = np.random.default_rng(4)
    for i in range(2):
        data.save_png(rng.uniform(size=(32, 32, 3)).astype(np.float32), images / f"i{i}.png")
    out = tmp_path / "run"
    code = cli.main([
        "train", "--data", str(images), "--out", str(out),
        "--scale", "2", "--hr-tile", "16", "--iterations", "4",
        "--iterations-per-epoch", "2", "--pretrain", "4", "--batch", "2",
        "--base-channels", "6", "--res-blocks", "1", "--tail-kernel", "3",
        "--val-count", "1",
    ])
    assert code == 0
    assert (out / "generator.tsrw").exists()
    assert (out / "log.jsonl").exists()
    loaded = weights.load_weights(out / "generator.tsrw")
    assert loaded.spec.scale == 2
