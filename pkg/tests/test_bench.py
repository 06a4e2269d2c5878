import numpy as np
import pytest

from tilesr import bench, data, inference, models


@pytest.fixture(scope="module")
def gen():
    return models.build_generator(
        models.desk_generator_spec(n_res_blocks=1, base_channels=8), 0
    )


def rand_image(seed, h=64, w=64):
    return data.ImageBuffer(
        np.random.default_rng(seed).uniform(size=(h, w, 3)).astype(np.float32)
    )


class TestTimePatch:
    def test_bookkeeping(self, gen):
        res = bench.time_patch(gen, rand_image(0, 32, 32), n_runs=10)
        assert res.n_runs == 10
        assert res.warmup_runs == 3
        assert res.p50_s <= res.p95_s
        assert res.fps == pytest.approx(1.0 / res.mean_s, rel=1e-9)

    def test_requires_min_runs(self, gen):
        with pytest.raises(ValueError):
            bench.time_patch(gen, rand_image(1, 32, 32), n_runs=5)

    def test_baseline_much_faster_than_model(self, gen):
        patch = rand_image(2, 32, 32)
        model_res = bench.time_patch(gen, patch, n_runs=10)
        base_res = bench.time_patch(inference.NearestBaseline(4), patch, n_runs=10)
        assert base_res.mean_s < model_res.mean_s

    def test_consecutive_runs_stable(self, gen):
        patch = rand_image(3, 32, 32)
        a = bench.time_patch(gen, patch, n_runs=12)
        b = bench.time_patch(gen, patch, n_runs=12)
        assert abs(a.mean_s - b.mean_s) <= 0.25 * max(a.mean_s, b.mean_s)


class TestWholeImage:
    def test_tile_count_recorded(self, gen):
        res = bench.time_whole_image(gen, rand_image(4, 128, 128), tile=64, n_runs=10)
        assert res.tiles == 4

    def test_whole_image_slower_than_patch(self, gen):
        patch = rand_image(5, 64, 64)
        image = rand_image(6, 128, 128)
        pr = bench.time_patch(gen, patch, n_runs=10)
        ir = bench.time_whole_image(gen, image, tile=64, n_runs=10)
        assert ir.mean_s > pr.mean_s

    def test_timed_path_is_sr_image(self, gen):
        image = rand_image(7, 128, 128)
        timed = inference.sr_image(gen, image, tile=64)
        again = inference.sr_image(gen, image, tile=64)
        assert np.array_equal(timed.values, again.values)


class TestVideoFps:
    def test_thirty_frames(self, gen):
        frames = [rand_image(10 + i, 96, 96) for i in range(30)]
        res = bench.video_fps(gen, frames, inference.Roi(16, 16, 32, 32))
        assert res.n_runs == 30
        assert res.fps == pytest.approx(1.0 / res.mean_s, rel=1e-9)

    def test_interpolation_fps_much_higher(self, gen):
        frames = [rand_image(50 + i, 96, 96) for i in range(30)]
        roi = inference.Roi(0, 0, 32, 32)
        model_res = bench.video_fps(gen, frames, roi)
        base_res = bench.video_fps(inference.NearestBaseline(4), frames, roi)
        assert base_res.fps > model_res.fps

    def test_too_few_frames(self, gen):
        with pytest.raises(ValueError):
            bench.video_fps(gen, [rand_image(0, 64, 64)] * 10, inference.Roi(0, 0, 16, 16))


class TestSerialization:
    def test_roundtrip_lossless(self):
        res = bench.BenchResult(
            label="srgan-no-bn", n_runs=10, mean_s=0.0512, p50_s=0.05,
            p95_s=0.06, fps=19.53, warmup_runs=3, tiles=4,
        )
        back = bench.BenchResult.from_json(res.to_json())
        assert back == res

    def test_format_table(self):
        res = bench.BenchResult("m", 10, 0.05, 0.05, 0.06, 20.0)
        text = bench.format_table({"m": {"patch": res, "video": res}})
        assert "Single Patch" in text and "0.05000" in text and "20.0" in text
