"""Confocal-style image synthesis, PNG ingestion, bicubic scaling, tiling.

Training images follow the four-stain channel scheme used by the Human
Protein Atlas corpus: red microtubule filaments, blue nucleus blobs, green
protein puncta, yellow endoplasmic-reticulum texture.  A per-image draw of
k in 1..4 selects the cumulative channel subset; channels compose to RGB
with yellow split additively onto red and green.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np
from PIL import Image
from scipy.ndimage import gaussian_filter


class DataError(ValueError):
    """Invalid image data, file content, or grid metadata."""


STAIN_ROLES = ("microtubules-red", "nucleus-blue", "protein-green", "er-yellow")
RGB_ROLES = ("r", "g", "b")


@dataclass
class ImageBuffer:
    """H x W x C float image in [0,1] with channel-role metadata."""

    values: np.ndarray
    roles: tuple = RGB_ROLES

    def __post_init__(self):
        v = np.asarray(self.values, dtype=np.float32)
        if v.ndim == 2:
            v = v[:, :, None]
        if v.ndim != 3:
            raise DataError(f"image must be HxWxC, got shape {v.shape}")
        if v.shape[2] not in (1, 3, 4):
            raise DataError(f"channel count must be 1, 3 or 4, got {v.shape[2]}")
        if v.size and (v.min() < 0.0 or v.max() > 1.0):
            raise DataError(
                f"values outside [0,1]: min {v.min():.4g}, max {v.max():.4g}"
            )
        self.values = v

    @property
    def height(self):
        return self.values.shape[0]

    @property
    def width(self):
        return self.values.shape[1]

    @property
    def channels(self):
        return self.values.shape[2]


@dataclass
class ChannelScheme:
    """Cumulative stain subset: k=1 -> {r}, 2 -> {r,b}, 3 -> {r,b,g}, 4 -> all."""

    k: int

    def __post_init__(self):
        if not 1 <= self.k <= 4:
            raise DataError(f"channel scheme k must be in 1..4, got {self.k}")

    @property
    def roles(self):
        return STAIN_ROLES[: self.k]


def draw_channel_count(rng) -> int:
    """Uniform draw of the per-image channel count (1..4)."""
    return int(rng.integers(1, 5))


# -- procedural stain renderers ----------------------------------------------------


def _splat_path(canvas, ys, xs, amount):
    size = canvas.shape[0]
    yi = np.clip(np.round(ys).astype(int), 0, size - 1)
    xi = np.clip(np.round(xs).astype(int), 0, size - 1)
    np.add.at(canvas, (yi, xi), amount)


def _render_microtubules(rng, size):
    """Curved filaments: random walks with heading momentum, then a PSF blur."""
    canvas = np.zeros((size, size), dtype=np.float64)
    n_curves = int(rng.integers(6, 14))
    for _ in range(n_curves):
        y, x = rng.uniform(0, size, size=2)
        heading = rng.uniform(0, 2 * np.pi)
        steps = int(rng.uniform(0.8, 1.8) * size)
        turns = rng.normal(0.0, 0.10, size=steps)
        headings = heading + np.cumsum(turns)
        ys = y + np.cumsum(np.sin(headings))
        xs = x + np.cumsum(np.cos(headings))
        keep = (ys >= 0) & (ys < size) & (xs >= 0) & (xs < size)
        _splat_path(canvas, ys[keep], xs[keep], 1.0)
    # wide point-spread: confocal filaments image several pixels thick
    canvas = gaussian_filter(canvas, sigma=1.8 * size / 128.0 + 0.6)
    peak = canvas.max()
    if peak > 0:
        canvas *= rng.uniform(0.8, 1.0) / peak
    return canvas


def _render_nuclei(rng, size):
    """Soft elliptical blobs."""
    yy, xx = np.mgrid[0:size, 0:size].astype(np.float64)
    canvas = np.zeros((size, size), dtype=np.float64)
    for _ in range(int(rng.integers(3, 8))):
        cy, cx = rng.uniform(size * 0.1, size * 0.9, size=2)
        ry = rng.uniform(0.08, 0.22) * size
        rx = rng.uniform(0.08, 0.22) * size
        theta = rng.uniform(0, np.pi)
        amp = rng.uniform(0.55, 1.0)
        dy, dx = yy - cy, xx - cx
        u = dy * np.cos(theta) + dx * np.sin(theta)
        v = -dy * np.sin(theta) + dx * np.cos(theta)
        q = (u / ry) ** 2 + (v / rx) ** 2
        canvas += amp * np.exp(-(q**1.2))
    return np.clip(canvas, 0.0, 1.0)


def _render_puncta(rng, size):
    """Bright spots (protein localizations) with a soft point-spread."""
    canvas = np.zeros((size, size), dtype=np.float64)
    n = max(6, int(rng.integers(25, 80) * (size / 128.0) ** 2))
    ys = rng.uniform(0, size, size=n)
    xs = rng.uniform(0, size, size=n)
    amps = rng.uniform(0.4, 1.0, size=n)
    _splat_path(canvas, ys, xs, amps)
    canvas = gaussian_filter(canvas, sigma=2.0 * size / 128.0 + 0.5)
    peak = canvas.max()
    if peak > 0:
        canvas *= rng.uniform(0.75, 1.0) / peak
    return canvas


def _render_er(rng, size):
    """Reticular web: band around a level set of smoothed noise."""
    noise = rng.normal(size=(size, size))
    f = gaussian_filter(noise, sigma=max(2.0, size / 20.0))
    spread = f.std() + 1e-12
    web = np.exp(-(((f - f.mean()) / (0.8 * spread)) ** 2))
    web = gaussian_filter(web, sigma=1.0)
    return np.clip(web, 0.0, 1.0) * rng.uniform(0.5, 0.9)


_RENDERERS = (_render_microtubules, _render_nuclei, _render_puncta, _render_er)


def compose_rgb(stains: np.ndarray) -> ImageBuffer:
    """Map 4 stain planes (r, b, g, y order) to RGB; yellow splits onto R and G."""
    r, b, g, y = stains
    rgb = np.stack([r + 0.5 * y, g + 0.5 * y, b], axis=-1)
    return ImageBuffer(np.clip(rgb, 0.0, 1.0).astype(np.float32))


# Optical point-spread applied to every stain plane, scaled to image size;
# benchtop confocal acquisitions are blur-limited well above one pixel.
PSF_SIGMA = 1.2


def synthesize_stains(rng, size: int):
    """Draw k and render the cumulative stain planes; returns (k, 4xHxW)."""
    if size < 64:
        raise DataError(f"synthesis size must be >= 64, got {size}")
    k = draw_channel_count(rng)
    stains = np.zeros((4, size, size), dtype=np.float64)
    for i in range(k):
        plane = _RENDERERS[i](rng, size)
        stains[i] = gaussian_filter(plane, sigma=PSF_SIGMA * size / 128.0)
    return k, stains


def synthesize_sample(rng, size: int = 128) -> ImageBuffer:
    """One synthetic confocal-style RGB image; deterministic given the rng."""
    _, stains = synthesize_stains(rng, size)
    return compose_rgb(stains)


# -- PNG ingestion -------------------------------------------------------------------


def load_png(path) -> np.ndarray:
    """8/16-bit grayscale or RGB PNG -> float array in [0,1]."""
    try:
        with Image.open(path) as im:
            im.load()
            mode = im.mode
            arr = np.asarray(im)
    except FileNotFoundError:
        raise DataError(f"cannot read image file: {path}")
    except OSError as exc:
        raise DataError(f"cannot decode image {path}: {exc}")
    if mode in ("I;16", "I;16B", "I"):
        return (arr.astype(np.float64) / 65535.0).astype(np.float32)
    if mode == "L":
        return (arr.astype(np.float64) / 255.0).astype(np.float32)
    if mode == "RGB":
        return (arr.astype(np.float64) / 255.0).astype(np.float32)
    if mode == "RGBA":
        return (arr[:, :, :3].astype(np.float64) / 255.0).astype(np.float32)
    raise DataError(f"unsupported PNG mode {mode!r} in {path}")


def save_png(image, path, bits: int = 8):
    values = image.values if isinstance(image, ImageBuffer) else np.asarray(image)
    if values.ndim == 3 and values.shape[2] == 1:
        values = values[:, :, 0]
    if bits == 16:
        if values.ndim != 2:
            raise DataError("16-bit PNG output supports grayscale only")
        arr = np.round(np.clip(values, 0, 1) * 65535.0).astype(np.uint16)
    else:
        arr = np.round(np.clip(values, 0, 1) * 255.0).astype(np.uint8)
    Image.fromarray(arr).save(path, format="PNG")


def load_atlas_sample(channel_paths, k: int) -> ImageBuffer:
    """Compose the first k stain channels (Table-scheme order) into RGB."""
    if k < 1 or k > 4:
        raise DataError(f"k must be in 1..4, got {k}")
    if k > len(channel_paths):
        raise DataError(f"need {k} channel files, got {len(channel_paths)}")
    planes = []
    shape = None
    for path in list(channel_paths)[:k]:
        plane = load_png(path)
        if plane.ndim == 3:
            plane = plane.mean(axis=2)
        if shape is None:
            shape = plane.shape
        elif plane.shape != shape:
            raise DataError(
                f"channel size mismatch: {path} is {plane.shape}, expected {shape}"
            )
        planes.append(plane.astype(np.float64))
    stack = np.zeros((4,) + shape, dtype=np.float64)
    for i, plane in enumerate(planes):
        stack[i] = plane
    return compose_rgb(stack)


def write_manifest(records, path):
    """Line-delimited dataset manifest: {"id": ..., "channels": [paths]}."""
    with open(path, "w") as fh:
        for rec in records:
            fh.write(json.dumps(rec) + "\n")


def read_manifest(path):
    records = []
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if line:
                records.append(json.loads(line))
    return records


# -- bicubic resampling ---------------------------------------------------------------

KEYS_A = -0.5


def _keys(t, a=KEYS_A):
    t = np.abs(t)
    out = np.zeros_like(t)
    near = t <= 1.0
    far = (t > 1.0) & (t < 2.0)
    out[near] = (a + 2.0) * t[near] ** 3 - (a + 3.0) * t[near] ** 2 + 1.0
    out[far] = a * t[far] ** 3 - 5.0 * a * t[far] ** 2 + 8.0 * a * t[far] - 4.0 * a
    return out


def _bicubic_down_matrix(n, factor):
    """Antialiased Keys-kernel resampling matrix (n/factor, n), edge-clamped."""
    m = n // factor
    mat = np.zeros((m, n), dtype=np.float64)
    for i in range(m):
        center = (i + 0.5) * factor - 0.5
        lo = int(np.floor(center)) - 2 * factor + 1
        taps = np.arange(lo, int(np.floor(center)) + 2 * factor + 1)
        weights = _keys((taps - center) / factor)
        weights /= weights.sum()
        np.add.at(mat[i], np.clip(taps, 0, n - 1), weights)
    return mat


def _bicubic_up_matrix(n, factor):
    """Unit-scale Keys-kernel interpolation matrix (n*factor, n), edge-clamped."""
    m = n * factor
    mat = np.zeros((m, n), dtype=np.float64)
    for i in range(m):
        center = (i + 0.5) / factor - 0.5
        lo = int(np.floor(center)) - 1
        taps = np.arange(lo, lo + 4)
        weights = _keys(taps - center)
        weights /= weights.sum()
        np.add.at(mat[i], np.clip(taps, 0, n - 1), weights)
    return mat


def _apply_separable(values, mh, mw):
    out = np.tensordot(mh, values.astype(np.float64), axes=(1, 0))
    out = np.tensordot(out, mw.T, axes=(1, 0))
    return np.transpose(out, (0, 2, 1))


def bicubic_downsample(image: ImageBuffer, factor: int) -> ImageBuffer:
    """Separable Keys (a = -0.5) downsampling; dimensions must divide evenly."""
    if factor < 1:
        raise DataError(f"factor must be >= 1, got {factor}")
    if factor == 1:
        return ImageBuffer(image.values.copy(), image.roles)
    h, w = image.height, image.width
    if h % factor or w % factor:
        raise DataError(
            f"dimensions {h}x{w} not divisible by factor {factor}; pad first"
        )
    mh = _bicubic_down_matrix(h, factor)
    mw = _bicubic_down_matrix(w, factor)
    out = _apply_separable(image.values, mh, mw)
    return ImageBuffer(np.clip(out, 0.0, 1.0).astype(np.float32), image.roles)


def bicubic_upsample(image: ImageBuffer, factor: int) -> ImageBuffer:
    """Keys-kernel interpolation to factor-times larger (baseline upscaler)."""
    if factor < 1:
        raise DataError(f"factor must be >= 1, got {factor}")
    if factor == 1:
        return ImageBuffer(image.values.copy(), image.roles)
    mh = _bicubic_up_matrix(image.height, factor)
    mw = _bicubic_up_matrix(image.width, factor)
    out = _apply_separable(image.values, mh, mw)
    return ImageBuffer(np.clip(out, 0.0, 1.0).astype(np.float32), image.roles)


def nearest_upsample(image: ImageBuffer, factor: int) -> ImageBuffer:
    values = np.repeat(np.repeat(image.values, factor, axis=0), factor, axis=1)
    return ImageBuffer(values, image.roles)


# -- tiling ------------------------------------------------------------------------


@dataclass
class TileGrid:
    tiles: list
    rows: int
    cols: int
    tile_size: int
    original_size: tuple
    pad: tuple = (0, 0)  # (bottom, right)
    roles: tuple = field(default=RGB_ROLES)

    def validate(self):
        if self.rows * self.cols != len(self.tiles):
            raise DataError(
                f"grid claims {self.rows}x{self.cols} tiles but holds {len(self.tiles)}"
            )
        for t in self.tiles:
            if t.shape[0] != self.tile_size or t.shape[1] != self.tile_size:
                raise DataError(
                    f"tile shape {t.shape[:2]} != tile_size {self.tile_size}"
                )


def tile(image: ImageBuffer, tile_size: int) -> TileGrid:
    """Partition row-major after reflect-padding right/bottom to a multiple."""
    if tile_size < 8:
        raise DataError(f"tile_size must be >= 8, got {tile_size}")
    h, w = image.height, image.width
    pad_b = (-h) % tile_size
    pad_r = (-w) % tile_size
    values = image.values
    if pad_b or pad_r:
        values = np.pad(values, ((0, pad_b), (0, pad_r), (0, 0)), mode="reflect")
    rows = values.shape[0] // tile_size
    cols = values.shape[1] // tile_size
    tiles = []
    for r in range(rows):
        for c in range(cols):
            tiles.append(
                values[
                    r * tile_size : (r + 1) * tile_size,
                    c * tile_size : (c + 1) * tile_size,
                ].copy()
            )
    return TileGrid(
        tiles=tiles,
        rows=rows,
        cols=cols,
        tile_size=tile_size,
        original_size=(h, w),
        pad=(pad_b, pad_r),
        roles=image.roles,
    )


def stitch(grid: TileGrid) -> ImageBuffer:
    """Row-major reassembly, then crop of the recorded padding; exact inverse."""
    grid.validate()
    rows = [
        np.concatenate(grid.tiles[r * grid.cols : (r + 1) * grid.cols], axis=1)
        for r in range(grid.rows)
    ]
    full = np.concatenate(rows, axis=0)
    h, w = grid.original_size
    return ImageBuffer(full[:h, :w], grid.roles)


def make_training_pair(image: ImageBuffer, hr_tile: int, scale: int):
    """Yield (LR tile, HR tile) pairs from one HR image."""
    if hr_tile % scale:
        raise DataError(f"hr_tile {hr_tile} not divisible by scale {scale}")
    grid = tile(image, hr_tile)
    for values in grid.tiles:
        hr = ImageBuffer(values, image.roles)
        lr = bicubic_downsample(hr, scale)
        yield lr, hr
