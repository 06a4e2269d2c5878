"""Patch, whole-image, and video-ROI super-resolution pipelines.

Images cross the module boundary as [0,1] ImageBuffers; the generator sees
[-1,1] tensors and its tanh output maps back to clamped [0,1].  Whole-image
inference tiles the input, upscales each tile, and stitches with all grid
metadata scaled by the model's factor, so non-divisible inputs round-trip
through reflect padding and an exact crop.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import data, models
from .tensor import Tensor, no_grad
from .training import from_model_domain, to_model_domain


@dataclass
class Roi:
    x: int
    y: int
    w: int
    h: int

    def validate(self, height: int, width: int):
        if self.w < 1 or self.h < 1:
            raise data.DataError(f"roi extent must be positive, got {self.w}x{self.h}")
        if self.x < 0 or self.y < 0 or self.x + self.w > width or self.y + self.h > height:
            raise data.DataError(
                f"roi ({self.x},{self.y},{self.w},{self.h}) exceeds frame {width}x{height}"
            )

    @staticmethod
    def parse(text: str) -> "Roi":
        try:
            x, y, w, h = (int(v) for v in text.split(","))
        except ValueError:
            raise data.DataError(f"roi must be 'x,y,w,h' integers, got {text!r}")
        return Roi(x, y, w, h)


def crop(image: data.ImageBuffer, roi: Roi) -> data.ImageBuffer:
    roi.validate(image.height, image.width)
    return data.ImageBuffer(
        image.values[roi.y : roi.y + roi.h, roi.x : roi.x + roi.w].copy(), image.roles
    )


def sr_patch(model: models.Model, lr_patch: data.ImageBuffer) -> data.ImageBuffer:
    """Upscale one patch by the model's factor; output clamped to [0,1]."""
    x = Tensor(to_model_domain(lr_patch.values)[None])
    with no_grad():
        out = model.forward(x)
    return data.ImageBuffer(from_model_domain(out.data[0]), lr_patch.roles)


def sr_image(model: models.Model, lr_image: data.ImageBuffer, tile: int = 64) -> data.ImageBuffer:
    """Tile, upscale each tile, stitch; output dims = input dims x scale."""
    scale = model.spec.scale
    grid = data.tile(lr_image, tile)
    sr_tiles = [
        sr_patch(model, data.ImageBuffer(t, lr_image.roles)).values for t in grid.tiles
    ]
    sr_grid = data.TileGrid(
        tiles=sr_tiles,
        rows=grid.rows,
        cols=grid.cols,
        tile_size=grid.tile_size * scale,
        original_size=(grid.original_size[0] * scale, grid.original_size[1] * scale),
        pad=(grid.pad[0] * scale, grid.pad[1] * scale),
        roles=lr_image.roles,
    )
    return data.stitch(sr_grid)


def sr_video_roi(model: models.Model, frames, roi: Roi):
    """Crop the ROI from each frame and upscale it; frame order preserved.

    Returns a list of (original frame, SR crop) pairs.  The ROI is checked
    against every frame before any inference runs.
    """
    frames = list(frames)
    for frame in frames:
        roi.validate(frame.height, frame.width)
    out = []
    for frame in frames:
        out.append((frame, sr_patch(model, crop(frame, roi))))
    return out


class NearestBaseline:
    """Interpolation stand-in with the sr_patch interface (Table-3 baseline)."""

    kind = "nearest"

    def __init__(self, scale: int = 4):
        self.scale = scale

    def sr_patch(self, lr_patch: data.ImageBuffer) -> data.ImageBuffer:
        return data.nearest_upsample(lr_patch, self.scale)


class BicubicBaseline:
    kind = "bicubic"

    def __init__(self, scale: int = 4):
        self.scale = scale

    def sr_patch(self, lr_patch: data.ImageBuffer) -> data.ImageBuffer:
        return data.bicubic_upsample(lr_patch, self.scale)


def patch_fn(model):
    """Adapter: Model or baseline object -> callable(ImageBuffer) -> ImageBuffer."""
    if isinstance(model, models.Model):
        return lambda img: sr_patch(model, img)
    if hasattr(model, "sr_patch"):
        return model.sr_patch
    raise TypeError(f"cannot upscale with {type(model).__name__}")
