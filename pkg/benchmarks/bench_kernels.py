"""Compare the compiled and numpy kernel backends.

    python3 benchmarks/bench_kernels.py [--repeat 5] [--size 1024]

Each row reports the best wall time over ``--repeat`` runs and checks that
both backends produce the same values.
"""
import argparse
import time

import numpy as np

from spheremetric import kernels, synthetic
from spheremetric.corruption import gaussian_kernel
from spheremetric.projection import (
    FACES,
    equirect_to_cubemap,
    face_pixel_vectors,
    vectors_to_equirect_pixels,
)


def best_of(fn, repeat):
    best = float("inf")
    out = None
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t0)
    return best, out


def cases(size):
    img = synthetic.pole_textured_panorama(size, size // 2, seed=0)
    face = size // 4
    vec = np.concatenate([face_pixel_vectors(f, face).reshape(-1, 3) for f in FACES])
    xs, ys = vectors_to_equirect_pixels(vec, size, size // 2)
    taps = gaussian_kernel(4.0)
    return {
        "remap bilinear": lambda: kernels.remap(img, xs, ys, wrap_x=True, sampling="bilinear"),
        "remap nearest": lambda: kernels.remap(img, xs, ys, wrap_x=True, sampling="nearest"),
        "blur rows (sigma 4)": lambda: kernels.convolve_axis(img, taps, 1, wrap=True),
        "blur cols (sigma 4)": lambda: kernels.convolve_axis(img, taps, 0, wrap=False),
        "equirect_to_cubemap": lambda: np.stack([c for c in equirect_to_cubemap(img, face).faces.values()]),
    }


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeat", type=int, default=5)
    parser.add_argument("--size", type=int, default=1024, help="equirect width")
    args = parser.parse_args(argv)

    backends = kernels.available_backends()
    if "cython" not in backends:
        print("compiled kernels are not built; only the numpy backend is available")
    print(f"{'case':24s}" + "".join(f"{b:>12s}" for b in backends) + "   speedup  max|diff|")
    for name, fn in cases(args.size).items():
        times, outs = [], []
        for b in backends:
            saved = kernels._impl
            kernels._impl = kernels.get_backend(b)
            try:
                t, out = best_of(fn, args.repeat)
            finally:
                kernels._impl = saved
            times.append(t)
            outs.append(out)
        line = f"{name:24s}" + "".join(f"{t * 1e3:10.1f}ms" for t in times)
        if len(times) == 2:
            diff = float(np.max(np.abs(outs[0] - outs[1])))
            line += f"   {times[0] / times[1]:6.1f}x  {diff:.1e}"
        print(line)


if __name__ == "__main__":
    main()
