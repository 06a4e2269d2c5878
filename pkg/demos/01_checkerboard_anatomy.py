#!/usr/bin/env python3
"""Why strided transposed convolutions produce checkerboard patterns.

A transposed convolution scatters one kernel copy per input pixel, stepping
by the stride.  When the kernel extent is not divisible by the stride, the
copies overlap unevenly: some output pixels receive more kernel taps than
their neighbours, in a pattern that repeats with the stride.  This script
makes the overlap counts visible directly (all-ones input, all-ones kernel)
and quantifies them with the checkerboard index.

Run:  python demos/01_checkerboard_anatomy.py
"""

import numpy as np

from tilesr import ConvParams, Tensor, checkerboard_index
from tilesr.ops import conv_transpose2d, conv2d, resize_nearest


def coverage(kernel_size, stride, n=6):
    """Scatter-add coverage counts for an all-ones input and kernel."""
    x = Tensor(np.ones((1, 1, n, n)))
    p = ConvParams(
        Tensor(np.ones((1, 1, kernel_size, kernel_size))),
        Tensor(np.zeros(1)),
        stride=stride,
    )
    return conv_transpose2d(x, p).data[0, 0]


def show(title, grid):
    print(f"\n{title}")
    for row in grid.astype(int):
        print("  " + " ".join(f"{v:2d}" for v in row))


def main():
    # kernel 3, stride 2: 3 is not divisible by 2 -> uneven overlaps
    cov_uneven = coverage(3, 2)
    show("kernel 3 / stride 2 coverage counts (uneven overlap)", cov_uneven[:9, :9])
    interior = cov_uneven[3:-3, 3:-3]
    interior = interior[: interior.shape[0] // 2 * 2, : interior.shape[1] // 2 * 2]
    print(f"  checkerboard index (period 2, interior): {checkerboard_index(interior, 2):.4f}")

    # kernel 4, stride 2: divisible -> uniform interior coverage
    cov_even = coverage(4, 2)
    show("kernel 4 / stride 2 coverage counts (uniform interior)", cov_even[:10, :10])
    interior = cov_even[4:-4, 4:-4]
    interior = interior[: interior.shape[0] // 2 * 2, : interior.shape[1] // 2 * 2]
    print(f"  checkerboard index (period 2, interior): {checkerboard_index(interior, 2):.4f}")

    # the fix studied here: upscale first (nearest neighbour), then convolve.
    # a constant region stays constant for ANY kernel weights.
    rng = np.random.default_rng(0)
    x = Tensor(np.full((1, 1, 8, 8), 0.5))
    p = ConvParams(Tensor(rng.normal(size=(1, 1, 3, 3))), Tensor(rng.normal(size=1)))
    out = conv2d(resize_nearest(x, 2), p).data[0, 0]
    interior = out[3:-3, 3:-3][:10, :10]
    interior = interior[: interior.shape[0] // 2 * 2, : interior.shape[1] // 2 * 2]
    print("\nnearest-neighbour upscale followed by a random conv:")
    print(f"  checkerboard index (period 2, interior): {checkerboard_index(interior, 2):.4f}")
    print("  (zero: every output phase sees identical interior geometry)")


if __name__ == "__main__":
    main()
