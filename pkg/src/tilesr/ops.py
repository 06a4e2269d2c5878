"""Layer primitives for the super-resolution networks.

Everything here is differentiable through :mod:`tilesr.tensor`.  The
convolution family is implemented as im2col + BLAS matmul, with the batch
processed in bounded-memory chunks so large feature maps never materialize
multi-hundred-megabyte column matrices.

Transposed convolution is the adjoint of ``conv2d``: its forward pass is a
scatter-add of kernel-scaled input values, which is where uneven-overlap
checkerboard patterns come from when the kernel extent is not divisible by
the stride.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .tensor import ShapeError, Tensor, make_node, no_grad

# im2col chunking threshold; keeps peak temp memory modest on desk hardware.
_COLS_BYTE_LIMIT = 64 * 1024 * 1024


@dataclass
class ConvParams:
    """Convolution weights: kernel (outC,inC,kH,kW) for conv2d, (inC,outC,kH,kW)
    for conv_transpose2d; bias per output channel."""

    kernel: Tensor
    bias: Tensor
    stride: int = 1
    padding: int = 0

    def __post_init__(self):
        if self.kernel.ndim != 4:
            raise ShapeError(f"kernel must be 4-D, got shape {self.kernel.shape}")
        kh, kw = self.kernel.shape[2], self.kernel.shape[3]
        if kh < 1 or kw < 1:
            raise ShapeError(f"kernel extents must be >= 1, got {kh}x{kw}")
        if self.stride < 1:
            raise ShapeError(f"stride must be >= 1, got {self.stride}")
        if self.padding < 0:
            raise ShapeError(f"padding must be >= 0, got {self.padding}")


# -- raw numpy conv machinery -------------------------------------------------


def _pad2d(x, p):
    ph, pw = p if isinstance(p, tuple) else (p, p)
    if ph == 0 and pw == 0:
        return x
    return np.pad(x, ((0, 0), (0, 0), (ph, ph), (pw, pw)))


def _dilate(x, s):
    """Insert s-1 zeros between neighbouring pixels."""
    if s == 1:
        return x
    n, c, h, w = x.shape
    out = np.zeros((n, c, (h - 1) * s + 1, (w - 1) * s + 1), dtype=x.dtype)
    out[:, :, ::s, ::s] = x
    return out


def _cols(xp, kh, kw, stride):
    """im2col on an already-padded input: (N,C,Hp,Wp) -> (N, C*kh*kw, L)."""
    v = sliding_window_view(xp, (kh, kw), axis=(2, 3))
    v = v[:, :, ::stride, ::stride]
    n, c, ho, wo = v.shape[:4]
    cols = v.transpose(0, 1, 4, 5, 2, 3).reshape(n, c * kh * kw, ho * wo)
    return cols, ho, wo


def _chunks(n, c, kh, kw, l, itemsize):
    per_sample = c * kh * kw * l * itemsize
    step = max(1, _COLS_BYTE_LIMIT // max(per_sample, 1))
    return range(0, n, step), step


def _corr2d_s1(xp, w, out_dtype):
    """Stride-1 correlation on pre-padded input.

    Two GEMM schemes with the same FLOP count but different intermediate
    sizes: kn2row materializes (kh*kw*O, Hp*Wp) per sample, shift-im2col
    materializes (C*kh*kw, Ho*Wo).  Pick whichever is smaller; both avoid
    the cache-hostile strided im2col gather.
    """
    n, c, hp, wp = xp.shape
    o, _, kh, kw = w.shape
    ho, wo = hp - kh + 1, wp - kw + 1
    if o <= c:
        # kn2row: GEMM first, then kh*kw shifted accumulations
        wk = np.ascontiguousarray(w.transpose(2, 3, 0, 1)).reshape(kh * kw * o, c)
        out = np.zeros((n, o, ho, wo), dtype=out_dtype)
        per_sample = kh * kw * o * hp * wp * xp.itemsize
        step = max(1, _COLS_BYTE_LIMIT // max(per_sample, 1))
        xf = xp.reshape(n, c, hp * wp)
        for s0 in range(0, n, step):
            u = np.matmul(wk, xf[s0 : s0 + step])
            u = u.reshape(-1, kh, kw, o, hp, wp)
            acc = out[s0 : s0 + step]
            for dy in range(kh):
                for dx in range(kw):
                    acc += u[:, dy, dx, :, dy : dy + ho, dx : dx + wo]
        return out
    # shift-im2col: kh*kw contiguous block copies, then one GEMM
    wmat = np.ascontiguousarray(w.reshape(o, -1))
    out = np.empty((n, o, ho * wo), dtype=out_dtype)
    per_sample = c * kh * kw * ho * wo * xp.itemsize
    step = max(1, _COLS_BYTE_LIMIT // max(per_sample, 1))
    for s0 in range(0, n, step):
        nn = min(step, n - s0)
        buf = np.empty((nn, c, kh, kw, ho, wo), dtype=xp.dtype)
        for dy in range(kh):
            for dx in range(kw):
                buf[:, :, dy, dx] = xp[s0 : s0 + nn, :, dy : dy + ho, dx : dx + wo]
        np.matmul(
            wmat,
            buf.reshape(nn, c * kh * kw, ho * wo),
            out=out[s0 : s0 + nn],
        )
    return out.reshape(n, o, ho, wo)


def _corr2d_raw(x, w, stride, padding):
    """Plain strided cross-correlation; w is (O, C, kh, kw)."""
    n, c, h, ww = x.shape
    o, _, kh, kw = w.shape
    ph, pw = padding if isinstance(padding, tuple) else (padding, padding)
    xp = _pad2d(x, (ph, pw))
    dtype = np.result_type(x, w)
    if stride == 1:
        return _corr2d_s1(xp, w, dtype)
    ho = (h + 2 * ph - kh) // stride + 1
    wo = (ww + 2 * pw - kw) // stride + 1
    wmat = np.ascontiguousarray(w.reshape(o, -1))
    out = np.empty((n, o, ho * wo), dtype=dtype)
    starts, step = _chunks(n, c, kh, kw, ho * wo, x.itemsize)
    for s0 in starts:
        cols, _, _ = _cols(xp[s0 : s0 + step], kh, kw, stride)
        np.matmul(wmat, cols, out=out[s0 : s0 + step])
    return out.reshape(n, o, ho, wo)


def _corr2d_dw(x, gout, kh, kw, stride, padding):
    """Kernel gradient of _corr2d_raw: (O, C, kh, kw)."""
    n, c = x.shape[:2]
    o = gout.shape[1]
    ho, wo = gout.shape[2], gout.shape[3]
    l = ho * wo
    xp = _pad2d(x, padding)
    if stride == 1:
        dw = np.empty((o, c, kh, kw), dtype=np.result_type(x, gout))
        for dy in range(kh):
            for dx in range(kw):
                patch = xp[:, :, dy : dy + ho, dx : dx + wo]
                dw[:, :, dy, dx] = np.tensordot(gout, patch, axes=([0, 2, 3], [0, 2, 3]))
        return dw
    gmat = gout.reshape(n, o, l)
    dw = np.zeros((o, c * kh * kw), dtype=np.result_type(x, gout))
    starts, step = _chunks(n, c, kh, kw, l, x.itemsize)
    for s0 in starts:
        cols, _, _ = _cols(xp[s0 : s0 + step], kh, kw, stride)
        g2 = np.ascontiguousarray(gmat[s0 : s0 + step].transpose(1, 0, 2)).reshape(o, -1)
        c2 = cols.transpose(1, 0, 2).reshape(c * kh * kw, -1)
        dw += g2 @ c2.T
    return dw.reshape(o, c, kh, kw)


def _scatter_full(x, w_ct, stride):
    """Full scatter-add extent of a transposed conv, before output cropping.

    w_ct is (C_in, C_out, kh, kw); result spatial size (H-1)*stride + kh.
    """
    kh, kw = w_ct.shape[2], w_ct.shape[3]
    wf = w_ct.transpose(1, 0, 2, 3)[:, :, ::-1, ::-1]
    return _corr2d_raw(_dilate(x, stride), wf, 1, (kh - 1, kw - 1))


# -- differentiable ops --------------------------------------------------------


def conv2d(x: Tensor, p: ConvParams) -> Tensor:
    """Strided 2-D cross-correlation with bias."""
    if x.ndim != 4:
        raise ShapeError(f"conv2d input must be (N,C,H,W), got {x.shape}")
    n, c, h, w = x.shape
    o, kin, kh, kw = p.kernel.shape
    if c != kin:
        raise ShapeError(
            f"conv2d channel axis mismatch: input has {c} channels, kernel expects {kin}"
        )
    if h + 2 * p.padding < kh or w + 2 * p.padding < kw:
        raise ShapeError(
            f"conv2d spatial axes too small: {h}x{w} with padding {p.padding} "
            f"cannot fit {kh}x{kw} kernel"
        )
    stride, padding = p.stride, p.padding
    kernel, bias = p.kernel, p.bias
    out = _corr2d_raw(x.data, kernel.data, stride, padding)
    out += bias.data.reshape(1, -1, 1, 1)

    def backward(g):
        gx = gk = gb = None
        if x.requires_grad:
            full = _scatter_full(g, kernel.data, stride)
            canvas = np.zeros(
                (n, c, h + 2 * padding, w + 2 * padding), dtype=full.dtype
            )
            canvas[:, :, : full.shape[2], : full.shape[3]] = full
            gx = canvas[:, :, padding : padding + h, padding : padding + w]
        if kernel.requires_grad:
            gk = _corr2d_dw(x.data, g, kh, kw, stride, padding)
        if bias.requires_grad:
            gb = g.sum(axis=(0, 2, 3))
        return gx, gk, gb

    return make_node(out, (x, kernel, bias), backward)


def conv_transpose2d(x: Tensor, p: ConvParams) -> Tensor:
    """Transposed (fractionally strided) convolution; adjoint of conv2d.

    Kernel layout is (inC, outC, kH, kW).  Output values are scatter-adds of
    kernel-scaled input pixels; when kH is not divisible by the stride the
    per-pixel overlap count varies periodically (uneven coverage).
    """
    if x.ndim != 4:
        raise ShapeError(f"conv_transpose2d input must be (N,C,H,W), got {x.shape}")
    n, c, h, w = x.shape
    kin, o, kh, kw = p.kernel.shape
    if c != kin:
        raise ShapeError(
            f"conv_transpose2d channel axis mismatch: input has {c} channels, "
            f"kernel expects {kin}"
        )
    if p.padding >= kh or p.padding >= kw:
        raise ShapeError(
            f"conv_transpose2d padding {p.padding} must be smaller than "
            f"kernel extent {kh}x{kw}"
        )
    stride, padding = p.stride, p.padding
    kernel, bias = p.kernel, p.bias
    full = _scatter_full(x.data, kernel.data, stride)
    ho = (h - 1) * stride + kh - 2 * padding
    wo = (w - 1) * stride + kw - 2 * padding
    out = full[:, :, padding : padding + ho, padding : padding + wo]
    out = out + bias.data.reshape(1, -1, 1, 1)

    def backward(g):
        gx = gk = gb = None
        if x.requires_grad:
            gx = _corr2d_raw(g, kernel.data, stride, padding)
        if kernel.requires_grad:
            gk = _corr2d_dw(g, x.data, kh, kw, stride, padding)
        if bias.requires_grad:
            gb = g.sum(axis=(0, 2, 3))
        return gx, gk, gb

    return make_node(out, (x, kernel, bias), backward)


def pixel_shuffle(x: Tensor, r: int) -> Tensor:
    """Rearrange (N, C*r^2, H, W) -> (N, C, rH, rW); subpixel upsampling."""
    if x.ndim != 4:
        raise ShapeError(f"pixel_shuffle input must be (N,C,H,W), got {x.shape}")
    n, c, h, w = x.shape
    if r < 1:
        raise ShapeError(f"pixel_shuffle factor must be >= 1, got {r}")
    if c % (r * r) != 0:
        raise ShapeError(
            f"pixel_shuffle channel axis {c} not divisible by r^2 = {r * r}"
        )
    co = c // (r * r)
    out = (
        x.data.reshape(n, co, r, r, h, w)
        .transpose(0, 1, 4, 2, 5, 3)
        .reshape(n, co, h * r, w * r)
    )

    def backward(g):
        gi = (
            g.reshape(n, co, h, r, w, r)
            .transpose(0, 1, 3, 5, 2, 4)
            .reshape(n, c, h, w)
        )
        return (gi,)

    return make_node(out, (x,), backward)


def pixel_unshuffle(x: np.ndarray, r: int) -> np.ndarray:
    """Inverse of pixel_shuffle on raw arrays (used for round-trip checks)."""
    n, c, h, w = x.shape
    return (
        x.reshape(n, c, h // r, r, w // r, r)
        .transpose(0, 1, 3, 5, 2, 4)
        .reshape(n, c * r * r, h // r, w // r)
    )


def resize_nearest(x: Tensor, r: int) -> Tensor:
    """Nearest-neighbour upsampling by an integer factor."""
    if r < 1:
        raise ShapeError(f"resize factor must be >= 1, got {r}")
    if r == 1:
        return make_node(x.data.copy(), (x,), lambda g: (g,))
    n, c, h, w = x.shape
    out = np.repeat(np.repeat(x.data, r, axis=2), r, axis=3)

    def backward(g):
        return (g.reshape(n, c, h, r, w, r).sum(axis=(3, 5)),)

    return make_node(out, (x,), backward)


def _bilinear_matrix(size_in, r, dtype):
    """Row-stochastic (r*size_in, size_in) sampling matrix, align-corners false."""
    size_out = size_in * r
    m = np.zeros((size_out, size_in), dtype=dtype)
    for i in range(size_out):
        src = (i + 0.5) / r - 0.5
        lo = int(np.floor(src))
        frac = src - lo
        lo_c = min(max(lo, 0), size_in - 1)
        hi_c = min(max(lo + 1, 0), size_in - 1)
        m[i, lo_c] += 1.0 - frac
        m[i, hi_c] += frac
    return m


def resize_bilinear(x: Tensor, r: int) -> Tensor:
    """Bilinear upsampling by an integer factor, align-corners-false sampling."""
    if r < 1:
        raise ShapeError(f"resize factor must be >= 1, got {r}")
    if r == 1:
        return make_node(x.data.copy(), (x,), lambda g: (g,))
    n, c, h, w = x.shape
    mh = _bilinear_matrix(h, r, x.data.dtype)
    mw = _bilinear_matrix(w, r, x.data.dtype)
    out = np.matmul(np.matmul(mh, x.data), mw.T)

    def backward(g):
        return (np.matmul(np.matmul(mh.T, g), mw),)

    return make_node(out, (x,), backward)


def crop2d(x: Tensor, h: int, w: int) -> Tensor:
    """Keep the top-left h x w window of the spatial axes."""
    n, c, hin, win = x.shape
    if h > hin or w > win:
        raise ShapeError(f"crop {h}x{w} exceeds input {hin}x{win}")
    out = x.data[:, :, :h, :w]

    def backward(g):
        gi = np.zeros((n, c, hin, win), dtype=g.dtype)
        gi[:, :, :h, :w] = g
        return (gi,)

    return make_node(out, (x,), backward)


@dataclass
class BatchNormState:
    """Running statistics for eval-mode normalization."""

    running_mean: np.ndarray
    running_var: np.ndarray
    momentum: float = 0.1
    eps: float = 1e-5

    @staticmethod
    def create(channels, dtype=np.float32):
        return BatchNormState(
            running_mean=np.zeros(channels, dtype=dtype),
            running_var=np.ones(channels, dtype=dtype),
        )


def batch_norm(
    x: Tensor, gamma: Tensor, beta: Tensor, state: BatchNormState, train: bool
) -> Tensor:
    """Per-channel batch normalization with affine parameters.

    Train mode normalizes by batch statistics and updates ``state`` by EMA;
    eval mode applies the stored running statistics.
    """
    if x.ndim != 4:
        raise ShapeError(f"batch_norm input must be (N,C,H,W), got {x.shape}")
    n, c, h, w = x.shape
    g4 = gamma.reshape(1, c, 1, 1)
    b4 = beta.reshape(1, c, 1, 1)
    if train:
        count = n * h * w
        if count < 2:
            raise ShapeError(
                f"batch_norm train mode needs N*H*W >= 2, got {count}"
            )
        mu = x.mean(axis=(0, 2, 3), keepdims=True)
        xc = x - mu
        var = (xc * xc).mean(axis=(0, 2, 3), keepdims=True)
        xhat = xc / (var + state.eps).sqrt()
        mom = state.momentum
        unbiased = var.data.reshape(c) * count / max(count - 1, 1)
        state.running_mean *= 1.0 - mom
        state.running_mean += mom * mu.data.reshape(c).astype(state.running_mean.dtype)
        state.running_var *= 1.0 - mom
        state.running_var += mom * unbiased.astype(state.running_var.dtype)
        return g4 * xhat + b4
    inv = (1.0 / np.sqrt(state.running_var + state.eps)).reshape(1, c, 1, 1)
    rm = state.running_mean.reshape(1, c, 1, 1)
    xhat = (x - Tensor(rm)) * Tensor(inv)
    return g4 * xhat + b4


def leaky_relu(x: Tensor, slope: float = 0.2) -> Tensor:
    out = np.where(x.data >= 0, x.data, slope * x.data)

    def backward(g):
        return (g * np.where(x.data >= 0, 1.0, slope).astype(g.dtype),)

    return make_node(out, (x,), backward)


def prelu(x: Tensor, slope: Tensor) -> Tensor:
    """Parametric ReLU with a learnable scalar slope (shape (1,))."""
    a = slope.data.reshape(-1)[0]
    neg = x.data < 0
    out = np.where(neg, a * x.data, x.data)

    def backward(g):
        gx = g * np.where(neg, a, 1.0).astype(g.dtype)
        ga = np.array([(g * np.where(neg, x.data, 0.0)).sum()], dtype=slope.dtype)
        return gx, ga

    return make_node(out, (x, slope), backward)


def sigmoid(x: Tensor) -> Tensor:
    d = x.data
    out = np.empty_like(d)
    pos = d >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-d[pos]))
    ez = np.exp(d[~pos])
    out[~pos] = ez / (1.0 + ez)

    def backward(g):
        return (g * out * (1.0 - out),)

    return make_node(out, (x,), backward)


def tanh(x: Tensor) -> Tensor:
    out = np.tanh(x.data)

    def backward(g):
        return (g * (1.0 - out * out),)

    return make_node(out, (x,), backward)


_ACTIVATIONS = {
    "leaky_relu": leaky_relu,
    "prelu": prelu,
    "sigmoid": lambda x: sigmoid(x),
    "tanh": lambda x: tanh(x),
}


def activation(x: Tensor, kind: str, a=None) -> Tensor:
    """Dispatch by name: prelu(a) | leaky_relu(a) | sigmoid | tanh."""
    if kind == "prelu":
        return prelu(x, a)
    if kind == "leaky_relu":
        return leaky_relu(x, 0.2 if a is None else float(a))
    if kind in ("sigmoid", "tanh"):
        return _ACTIVATIONS[kind](x)
    raise ValueError(f"unknown activation kind: {kind!r}")


def global_avg_pool(x: Tensor) -> Tensor:
    """Spatial mean per feature channel: (N,C,H,W) -> (N,C)."""
    if x.ndim != 4:
        raise ShapeError(f"global_avg_pool input must be (N,C,H,W), got {x.shape}")
    return x.mean(axis=(2, 3))


def flatten(x: Tensor) -> Tensor:
    n = x.shape[0]
    return x.reshape(n, int(np.prod(x.shape[1:])))


def dense(x: Tensor, weights: Tensor, bias: Tensor) -> Tensor:
    """Affine map: (N,F) @ (F,G) + (G,)."""
    if x.ndim != 2 or weights.ndim != 2:
        raise ShapeError(
            f"dense expects 2-D input and weights, got {x.shape} and {weights.shape}"
        )
    if x.shape[1] != weights.shape[0]:
        raise ShapeError(
            f"dense inner axes disagree: input features {x.shape[1]} vs "
            f"weight rows {weights.shape[0]}"
        )
    return x @ weights + bias


# -- verification harness -------------------------------------------------------


def grad_check(fn, inputs, step=1e-5):
    """Compare analytic gradients of a scalar-valued fn against central differences.

    ``fn(*inputs)`` must return a scalar Tensor; every input is perturbed
    element-wise.  Returns the max relative error over all elements, where
    relative error is |analytic - numeric| / max(|analytic|, |numeric|, 1e-8).
    """
    inputs = [t if isinstance(t, Tensor) else Tensor(t, dtype=np.float64) for t in inputs]
    for t in inputs:
        t.requires_grad = True
        t.grad = None
    out = fn(*inputs)
    out.backward()
    worst = 0.0
    for t in inputs:
        analytic = t.grad if t.grad is not None else np.zeros_like(t.data)
        flat = t.data.reshape(-1)
        for i in range(flat.size):
            orig = flat[i]
            flat[i] = orig + step
            with no_grad():
                up = fn(*inputs).item()
            flat[i] = orig - step
            with no_grad():
                down = fn(*inputs).item()
            flat[i] = orig
            numeric = (up - down) / (2.0 * step)
            a = analytic.reshape(-1)[i]
            err = abs(a - numeric) / max(abs(a), abs(numeric), 1e-8)
            worst = max(worst, err)
    return worst
