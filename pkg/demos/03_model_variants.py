#!/usr/bin/env python3
"""Build every generator/discriminator variant and compare footprints.

The variants mirror the runtime-comparison rows: the subpixel baseline,
the transposed-conv upsampler, interpolate-then-conv in both flavours,
batch normalization on or off, and GAP vs flatten discriminator heads.

Run:  python demos/03_model_variants.py
"""

import numpy as np

from tilesr import (
    DiscriminatorSpec,
    Tensor,
    build_discriminator,
    build_generator,
    desk_generator_spec,
    no_grad,
    parameter_count,
)
from tilesr.models import UPSAMPLERS


def main():
    x = Tensor(np.random.default_rng(0).uniform(-1, 1, size=(1, 3, 32, 32)).astype(np.float32))
    print(f"{'generator variant':<38} {'params':>9}  output")
    for upsampler in UPSAMPLERS:
        for use_bn in (False, True):
            spec = desk_generator_spec(upsampler=upsampler, use_bn=use_bn)
            gen = build_generator(spec, seed=0)
            with no_grad():
                out = gen.forward(x)
            label = f"{upsampler} {'with BN' if use_bn else 'no BN'}"
            print(f"{label:<38} {parameter_count(gen):>9,}  {tuple(out.shape)}")

    print()
    print(f"{'discriminator head':<38} {'params':>9}  notes")
    gap = build_discriminator(DiscriminatorSpec(head="gap"), seed=1)
    flat = build_discriminator(DiscriminatorSpec(head="flatten", input_size=256), seed=1)
    print(f"{'GAP (any input size)':<38} {parameter_count(gap):>9,}  size-independent")
    print(f"{'flatten (fixed 256x256)':<38} {parameter_count(flat):>9,}  "
          f"{parameter_count(flat) / parameter_count(gap):.1f}x larger")

    # the GAP head accepts any input size; the dense layer never changes
    print()
    for size in (64, 128, 192):
        x = Tensor(np.zeros((1, 3, size, size), dtype=np.float32))
        with no_grad():
            out = gap.forward(x)
        print(f"GAP discriminator on {size}x{size}: output {tuple(out.shape)}, "
              f"p = {float(out.data[0, 0]):.3f}")


if __name__ == "__main__":
    main()
