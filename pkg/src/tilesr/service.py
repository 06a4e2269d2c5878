"""HTTP inference service: PNG in, PNG out, bit-exact with the local pipeline.

Endpoints:
    GET  /v1/health            liveness + loaded model ids
    GET  /v1/models            id, kind, scale and spec summary per model
    POST /v1/sr                PNG body (+ ?model=id&roi=x,y,w,h) -> PNG,
                               timing in X-Infer-Ms / X-Total-Ms headers
    POST /v1/eval              length-prefixed pair of PNGs -> QualityReport
    WS   /v1/stream            binary frames: 16-byte ROI header + PNG in,
                               8-byte infer_ms + PNG out

Models are loaded once at startup and never mutated, so request handling is
freely concurrent.  PNG is the only wire format: the domain is microscopy,
where lossy re-encoding would corrupt evaluation.
"""

from __future__ import annotations

import io
import struct
import time
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from fastapi import FastAPI, Query, Request, Response, WebSocket, WebSocketDisconnect
from fastapi.responses import JSONResponse
from PIL import Image

from . import data, inference, metrics, models, weights

DEFAULT_MAX_BODY = 32 * 1024 * 1024
STREAM_HEADER = struct.Struct("<4I")  # roi x, y, w, h


class ServiceError(Exception):
    def __init__(self, status: int, message: str):
        super().__init__(message)
        self.status = status
        self.message = message


@dataclass
class LoadedModel:
    model_id: str
    model: models.Model

    @property
    def scale(self) -> int:
        return getattr(self.model.spec, "scale", 1)

    def summary(self) -> dict:
        spec = self.model.spec
        return {
            "id": self.model_id,
            "kind": self.model.kind,
            "scale": self.scale,
            "spec": {k: v for k, v in vars(spec).items()},
        }


class ModelRegistry:
    def __init__(self):
        self._models: dict[str, LoadedModel] = {}

    def add(self, model_id: str, model: models.Model):
        self._models[model_id] = LoadedModel(model_id, model)

    @staticmethod
    def from_dir(directory) -> "ModelRegistry":
        reg = ModelRegistry()
        for path in sorted(Path(directory).glob("*.tsrw")):
            reg.add(path.stem, weights.load_weights(path))
        return reg

    def ids(self):
        return list(self._models)

    def get(self, model_id: str | None) -> LoadedModel:
        if model_id is None:
            if len(self._models) == 1:
                return next(iter(self._models.values()))
            raise ServiceError(404, "model id required when multiple models are loaded")
        if model_id not in self._models:
            raise ServiceError(404, f"unknown model id {model_id!r}")
        return self._models[model_id]

    def __len__(self):
        return len(self._models)


def decode_png(blob: bytes) -> data.ImageBuffer:
    try:
        with Image.open(io.BytesIO(blob)) as im:
            im.load()
            if im.mode not in ("RGB", "L"):
                im = im.convert("RGB")
            arr = np.asarray(im)
    except Exception as exc:
        raise ServiceError(400, f"malformed PNG payload: {exc}")
    values = (arr.astype(np.float64) / 255.0).astype(np.float32)
    if values.ndim == 2:
        values = np.repeat(values[:, :, None], 3, axis=2)
    return data.ImageBuffer(values)


def encode_png(image: data.ImageBuffer) -> bytes:
    arr = np.round(np.clip(image.values, 0, 1) * 255.0).astype(np.uint8)
    buf = io.BytesIO()
    Image.fromarray(arr).save(buf, format="PNG")
    return buf.getvalue()


def _run_sr(entry: LoadedModel, image: data.ImageBuffer, roi_text: str | None):
    if roi_text:
        try:
            roi = inference.Roi.parse(roi_text)
            image = inference.crop(image, roi)
        except data.DataError as exc:
            raise ServiceError(400, str(exc))
    t0 = time.perf_counter()
    sr = inference.sr_patch(entry.model, image)
    infer_ms = (time.perf_counter() - t0) * 1000.0
    return sr, infer_ms


def build_app(registry: ModelRegistry, max_body_bytes: int = DEFAULT_MAX_BODY) -> FastAPI:
    app = FastAPI(title="tilesr inference service")

    @app.exception_handler(ServiceError)
    async def _service_error(_request, exc: ServiceError):
        return JSONResponse(status_code=exc.status, content={"error": exc.message})

    @app.get("/v1/health")
    def health():
        return {"status": "ok", "models": registry.ids()}

    @app.get("/v1/models")
    def list_models():
        return [registry.get(mid).summary() for mid in registry.ids()]

    @app.post("/v1/sr")
    async def super_resolve(
        request: Request,
        model: str | None = Query(default=None),
        roi: str | None = Query(default=None),
    ):
        t_total = time.perf_counter()
        declared = request.headers.get("content-length")
        if declared and int(declared) > max_body_bytes:
            raise ServiceError(413, f"payload exceeds {max_body_bytes} bytes")
        body = await request.body()
        if len(body) > max_body_bytes:
            raise ServiceError(413, f"payload exceeds {max_body_bytes} bytes")
        entry = registry.get(model)
        image = decode_png(body)
        sr, infer_ms = _run_sr(entry, image, roi)
        payload = encode_png(sr)
        total_ms = (time.perf_counter() - t_total) * 1000.0
        return Response(
            content=payload,
            media_type="image/png",
            headers={
                "X-Infer-Ms": f"{infer_ms:.3f}",
                "X-Total-Ms": f"{total_ms:.3f}",
                "X-Model-Id": entry.model_id,
            },
        )

    @app.post("/v1/eval")
    async def evaluate(request: Request):
        body = await request.body()
        if len(body) > 2 * max_body_bytes:
            raise ServiceError(413, f"payload exceeds {2 * max_body_bytes} bytes")
        if len(body) < 4:
            raise ServiceError(400, "expected u32 length prefix + two PNG payloads")
        (first_len,) = struct.unpack("<I", body[:4])
        if 4 + first_len > len(body):
            raise ServiceError(400, "first PNG length exceeds payload")
        img_a = decode_png(body[4 : 4 + first_len])
        img_b = decode_png(body[4 + first_len :])
        if img_a.values.shape != img_b.values.shape:
            raise ServiceError(400, "images must share dimensions")
        report = metrics.quality_report(img_a, img_b)
        return JSONResponse(
            content={
                "psnr": "inf" if report.psnr == float("inf") else report.psnr,
                "ssim": report.ssim,
                "checkerboard_index": report.checkerboard_index,
            }
        )

    @app.websocket("/v1/stream")
    async def stream(ws: WebSocket):
        await ws.accept()
        try:
            while True:
                frame = await ws.receive_bytes()
                if len(frame) < STREAM_HEADER.size:
                    await ws.close(code=1003)
                    return
                x, y, w, h = STREAM_HEADER.unpack(frame[: STREAM_HEADER.size])
                blob = frame[STREAM_HEADER.size :]
                if len(blob) > max_body_bytes:
                    await ws.close(code=1009)
                    return
                try:
                    image = decode_png(blob)
                    entry = registry.get(ws.query_params.get("model"))
                    roi_text = f"{x},{y},{w},{h}" if (w and h) else None
                    sr, infer_ms = _run_sr(entry, image, roi_text)
                except ServiceError as exc:
                    await ws.send_bytes(struct.pack("<d", -float(exc.status)))
                    continue
                await ws.send_bytes(struct.pack("<d", infer_ms) + encode_png(sr))
        except WebSocketDisconnect:
            return

    return app


def serve(models_dir, host: str = "127.0.0.1", port: int = 8008,
          max_body_bytes: int = DEFAULT_MAX_BODY):
    """Load every weight file in models_dir and serve until interrupted."""
    import uvicorn

    registry = ModelRegistry.from_dir(models_dir)
    if len(registry) == 0:
        raise models.ModelError(f"no .tsrw weight files found in {models_dir}")
    app = build_app(registry, max_body_bytes)
    uvicorn.run(app, host=host, port=port, log_level="info")
