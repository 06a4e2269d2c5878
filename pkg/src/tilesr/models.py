"""SRGAN-family generator and discriminator construction.

Every architecture variant compared in this project is built from a
configuration record: the upsampler kind (transposed conv, subpixel conv,
or interpolate-then-conv), batch normalization on or off, and the
discriminator head (global average pooling vs flatten).  Builds are
deterministic given a seed.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import ops
from .tensor import ShapeError, Tensor

UPSAMPLERS = ("transposed_conv", "subpixel_conv", "nearest_then_conv", "bilinear_then_conv")

# SRGAN-lineage kernel sizes: large head/tail kernels, 3x3 elsewhere.
HEAD_KERNEL = 9
BODY_KERNEL = 3


class ModelError(ValueError):
    """Invalid model configuration or incompatible input."""


@dataclass
class GeneratorSpec:
    scale: int = 4
    base_channels: int = 64
    n_res_blocks: int = 16
    use_bn: bool = False
    upsampler: str = "nearest_then_conv"
    in_channels: int = 3
    out_channels: int = 3
    # SRGAN uses 9x9 head/tail convs; the desk profile shrinks the tail to
    # keep full-resolution compute within CPU budgets.
    head_kernel: int = HEAD_KERNEL
    tail_kernel: int = HEAD_KERNEL

    def validate(self):
        if self.scale < 1 or (self.scale & (self.scale - 1)) != 0:
            raise ModelError(f"scale must be a power of 2, got {self.scale}")
        if self.n_res_blocks < 1:
            raise ModelError(f"n_res_blocks must be >= 1, got {self.n_res_blocks}")
        if self.upsampler not in UPSAMPLERS:
            raise ModelError(f"unknown upsampler {self.upsampler!r}")
        if self.base_channels < 1 or self.in_channels < 1 or self.out_channels < 1:
            raise ModelError("channel counts must be positive")
        if self.head_kernel % 2 == 0 or self.tail_kernel % 2 == 0:
            raise ModelError("head/tail kernels must be odd")

    @property
    def n_stages(self):
        return int(np.log2(self.scale))


@dataclass
class DiscriminatorSpec:
    conv_block_channels: list = field(
        default_factory=lambda: [64, 64, 128, 128, 256, 256, 512, 512]
    )
    head: str = "gap"
    leaky_slope: float = 0.2
    in_channels: int = 3
    # Only the flatten head needs a fixed input size to dimension its dense layer.
    input_size: int = 256
    # None -> SRGAN's alternating 1,2,1,2,... strides
    conv_strides: list | None = None

    def validate(self):
        if not self.conv_block_channels:
            raise ModelError("conv_block_channels must be non-empty")
        if self.head not in ("gap", "flatten"):
            raise ModelError(f"unknown discriminator head {self.head!r}")
        if self.conv_strides is not None and len(self.conv_strides) != len(
            self.conv_block_channels
        ):
            raise ModelError("conv_strides length must match conv_block_channels")
        if self.head == "flatten" and self.input_size < self.min_input_size():
            raise ModelError(
                f"input_size {self.input_size} below minimum {self.min_input_size()}"
            )

    def strides(self):
        if self.conv_strides is not None:
            return list(self.conv_strides)
        return [1 if i % 2 == 0 else 2 for i in range(len(self.conv_block_channels))]

    def min_input_size(self):
        return int(np.prod([s for s in self.strides() if s > 1])) or 1


def desk_generator_spec(**overrides) -> GeneratorSpec:
    """Small-profile generator sized for CPU desk-scale experiments."""
    cfg = dict(base_channels=16, n_res_blocks=4, tail_kernel=5)
    cfg.update(overrides)
    return GeneratorSpec(**cfg)


def desk_discriminator_spec(**overrides) -> DiscriminatorSpec:
    cfg = dict(conv_block_channels=[16, 32, 64, 64], conv_strides=[2, 2, 2, 2])
    cfg.update(overrides)
    return DiscriminatorSpec(**cfg)


# -- parameter registry -----------------------------------------------------------


class Model:
    """A named, ordered collection of parameters plus the spec that built it.

    ``params`` holds trainable tensors; ``buffers`` holds non-trainable
    state (batch-norm running statistics).  Iteration order is the
    construction order and is deterministic.
    """

    def __init__(self, kind: str, spec=None):
        self.kind = kind
        self.spec = spec
        self.params: dict[str, Tensor] = {}
        self.buffers: dict[str, np.ndarray] = {}

    def add_param(self, name, value):
        if name in self.params:
            raise ModelError(f"duplicate parameter name {name!r}")
        t = Tensor(np.asarray(value, dtype=np.float32), requires_grad=True)
        self.params[name] = t
        return t

    def add_buffer(self, name, value):
        if name in self.buffers:
            raise ModelError(f"duplicate buffer name {name!r}")
        self.buffers[name] = np.asarray(value, dtype=np.float32)
        return self.buffers[name]

    def named_parameters(self):
        return dict(self.params)

    def zero_grad(self):
        for p in self.params.values():
            p.grad = None

    def forward(self, x: Tensor, train: bool = False) -> Tensor:
        raise NotImplementedError


def parameter_count(model: Model) -> int:
    """Total number of trainable parameter values."""
    return int(sum(p.data.size for p in model.params.values()))


def _init_conv(rng, out_c, in_c, k, gain=1.0):
    fan_in = in_c * k * k
    std = gain * np.sqrt(2.0 / fan_in)
    return rng.normal(0.0, std, size=(out_c, in_c, k, k)).astype(np.float32)


# Residual-branch outputs, the post-residual conv and the tail start at a
# tenth of the He std: without batch normalization the full-gain branches
# compound through the skip chain and saturate the output tanh at init.
RESIDUAL_GAIN = 0.1


def _init_dense(rng, in_f, out_f):
    std = np.sqrt(2.0 / in_f)
    return rng.normal(0.0, std, size=(in_f, out_f)).astype(np.float32)


class _Conv:
    """conv2d with registered kernel/bias; ct=True switches to transposed conv."""

    def __init__(self, model, name, rng, in_c, out_c, k, stride=1, padding=0, ct=False,
                 gain=1.0):
        shape_init = _init_conv(rng, out_c, in_c, k, gain)
        if ct:
            # transposed-conv layout is (inC, outC, kH, kW)
            shape_init = np.ascontiguousarray(shape_init.transpose(1, 0, 2, 3))
        self.kernel = model.add_param(f"{name}.kernel", shape_init)
        self.bias = model.add_param(f"{name}.bias", np.zeros(out_c, dtype=np.float32))
        self.stride = stride
        self.padding = padding
        self.ct = ct

    def __call__(self, x):
        p = ops.ConvParams(self.kernel, self.bias, self.stride, self.padding)
        if self.ct:
            return ops.conv_transpose2d(x, p)
        return ops.conv2d(x, p)


class _BatchNorm:
    def __init__(self, model, name, channels):
        self.gamma = model.add_param(f"{name}.gamma", np.ones(channels, dtype=np.float32))
        self.beta = model.add_param(f"{name}.beta", np.zeros(channels, dtype=np.float32))
        rm = model.add_buffer(f"{name}.running_mean", np.zeros(channels, dtype=np.float32))
        rv = model.add_buffer(f"{name}.running_var", np.ones(channels, dtype=np.float32))
        self.state = ops.BatchNormState(running_mean=rm, running_var=rv)

    def __call__(self, x, train):
        return ops.batch_norm(x, self.gamma, self.beta, self.state, train)


class _PReLU:
    def __init__(self, model, name):
        self.slope = model.add_param(f"{name}.slope", np.array([0.25], dtype=np.float32))

    def __call__(self, x):
        return ops.prelu(x, self.slope)


class _Upsample2x:
    """One x2 upsampling stage in the configured style."""

    def __init__(self, model, name, rng, channels, kind):
        self.kind = kind
        if kind == "subpixel_conv":
            self.conv = _Conv(model, f"{name}.conv", rng, channels, channels * 4, BODY_KERNEL, 1, 1)
        elif kind == "transposed_conv":
            # kernel 3 with stride 2: extent not divisible by stride, the
            # uneven-overlap configuration; output cropped to exactly 2H x 2W
            self.conv = _Conv(model, f"{name}.conv", rng, channels, channels, 3, 2, 0, ct=True)
        else:
            self.conv = _Conv(model, f"{name}.conv", rng, channels, channels, BODY_KERNEL, 1, 1)
        self.act = _PReLU(model, f"{name}.act")

    def __call__(self, x):
        h, w = x.shape[2], x.shape[3]
        if self.kind == "subpixel_conv":
            y = ops.pixel_shuffle(self.conv(x), 2)
        elif self.kind == "transposed_conv":
            y = ops.crop2d(self.conv(x), 2 * h, 2 * w)
        elif self.kind == "nearest_then_conv":
            y = self.conv(ops.resize_nearest(x, 2))
        else:
            y = self.conv(ops.resize_bilinear(x, 2))
        return self.act(y)


class Generator(Model):
    def __init__(self, spec: GeneratorSpec, seed: int):
        spec.validate()
        super().__init__("generator", spec)
        rng = np.random.default_rng(seed)
        c = spec.base_channels
        hk = spec.head_kernel
        self.head = _Conv(self, "head", rng, spec.in_channels, c, hk, 1, hk // 2)
        self.head_act = _PReLU(self, "head.act")
        branch_gain = 1.0 if spec.use_bn else RESIDUAL_GAIN
        self.blocks = []
        for i in range(spec.n_res_blocks):
            name = f"res{i}"
            conv1 = _Conv(self, f"{name}.conv1", rng, c, c, BODY_KERNEL, 1, 1)
            bn1 = _BatchNorm(self, f"{name}.bn1", c) if spec.use_bn else None
            act = _PReLU(self, f"{name}.act")
            conv2 = _Conv(self, f"{name}.conv2", rng, c, c, BODY_KERNEL, 1, 1,
                          gain=branch_gain)
            bn2 = _BatchNorm(self, f"{name}.bn2", c) if spec.use_bn else None
            self.blocks.append((conv1, bn1, act, conv2, bn2))
        self.post = _Conv(self, "post", rng, c, c, BODY_KERNEL, 1, 1, gain=branch_gain)
        self.post_bn = _BatchNorm(self, "post.bn", c) if spec.use_bn else None
        self.ups = [
            _Upsample2x(self, f"up{i}", rng, c, spec.upsampler)
            for i in range(spec.n_stages)
        ]
        tk = spec.tail_kernel
        self.tail = _Conv(self, "tail", rng, c, spec.out_channels, tk, 1, tk // 2,
                          gain=RESIDUAL_GAIN)

    def forward(self, x: Tensor, train: bool = False) -> Tensor:
        if x.ndim != 4 or x.shape[1] != self.spec.in_channels:
            raise ShapeError(
                f"generator expects (N,{self.spec.in_channels},H,W), got {x.shape}"
            )
        feat = self.head_act(self.head(x))
        y = feat
        for conv1, bn1, act, conv2, bn2 in self.blocks:
            r = conv1(y)
            if bn1 is not None:
                r = bn1(r, train)
            r = act(r)
            r = conv2(r)
            if bn2 is not None:
                r = bn2(r, train)
            y = y + r
        y = self.post(y)
        if self.post_bn is not None:
            y = self.post_bn(y, train)
        y = y + feat
        for up in self.ups:
            y = up(y)
        return ops.tanh(self.tail(y))


class Discriminator(Model):
    def __init__(self, spec: DiscriminatorSpec, seed: int):
        spec.validate()
        super().__init__("discriminator", spec)
        rng = np.random.default_rng(seed)
        self.convs = []
        in_c = spec.in_channels
        for i, (out_c, stride) in enumerate(zip(spec.conv_block_channels, spec.strides())):
            self.convs.append(_Conv(self, f"block{i}", rng, in_c, out_c, 3, stride, 1))
            in_c = out_c
        self.leaky = spec.leaky_slope
        if spec.head == "gap":
            self.fc1 = None
            self.fc_w = self.add_param("head.dense.weights", _init_dense(rng, in_c, 1))
            self.fc_b = self.add_param("head.dense.bias", np.zeros(1, dtype=np.float32))
        else:
            feat = spec.input_size
            for s in spec.strides():
                feat = (feat + 2 - 3) // s + 1
            self.flat_features = in_c * feat * feat
            self.fc1_w = self.add_param(
                "head.dense1.weights", _init_dense(rng, self.flat_features, 1024)
            )
            self.fc1_b = self.add_param("head.dense1.bias", np.zeros(1024, dtype=np.float32))
            self.fc1 = (self.fc1_w, self.fc1_b)
            self.fc_w = self.add_param("head.dense2.weights", _init_dense(rng, 1024, 1))
            self.fc_b = self.add_param("head.dense2.bias", np.zeros(1, dtype=np.float32))

    def forward(self, x: Tensor, train: bool = False) -> Tensor:
        spec = self.spec
        if x.ndim != 4 or x.shape[1] != spec.in_channels:
            raise ShapeError(
                f"discriminator expects (N,{spec.in_channels},H,W), got {x.shape}"
            )
        if min(x.shape[2], x.shape[3]) < spec.min_input_size():
            raise ShapeError(
                f"input {x.shape[2]}x{x.shape[3]} below receptive-field minimum "
                f"{spec.min_input_size()}"
            )
        y = x
        for conv in self.convs:
            y = ops.leaky_relu(conv(y), self.leaky)
        if spec.head == "gap":
            y = ops.global_avg_pool(y)
        else:
            y = ops.flatten(y)
            if y.shape[1] != self.flat_features:
                raise ShapeError(
                    f"flatten head built for {spec.input_size}x{spec.input_size} inputs "
                    f"({self.flat_features} features), got {y.shape[1]}"
                )
            y = ops.leaky_relu(ops.dense(y, self.fc1[0], self.fc1[1]), self.leaky)
        return ops.sigmoid(ops.dense(y, self.fc_w, self.fc_b))


def build_generator(spec: GeneratorSpec, seed: int) -> Generator:
    return Generator(spec, seed)


def build_discriminator(spec: DiscriminatorSpec, seed: int) -> Discriminator:
    return Discriminator(spec, seed)


def forward(model: Model, x: Tensor, train: bool = False) -> Tensor:
    return model.forward(x, train=train)
