"""Compare the compiled and numpy kernel backends.

Times the four-rate DDL focus volume on a grayscale 5x256x256 stack (and
a single 3x3 Laplacian convolution) with each backend, and checks that
both backends return bit-identical arrays.

    python benchmarks/bench_backends.py [--repeat 20] [--threads N] [--size 256]
"""

import argparse
import statistics
import time

import numpy as np

from ddlsff import _backend
from ddlsff._parallel import set_threads
from ddlsff.convolve import conv2d
from ddlsff.focusvol import multiscale_volumes
from ddlsff.kernels import standard_laplacian
from ddlsff.stackio import FocalStack


def _time(fn, repeat):
    fn()  # warm-up
    out = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        out.append(time.perf_counter() - t0)
    return out


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=20)
    ap.add_argument("--threads", type=int, default=None)
    ap.add_argument("--size", type=int, default=256)
    ap.add_argument("--slices", type=int, default=5)
    args = ap.parse_args(argv)
    if args.threads:
        set_threads(args.threads)

    rng = np.random.default_rng(0)
    stack = FocalStack(rng.random((args.slices, args.size, args.size, 1)), list(range(args.slices)))
    img = stack.data[0, :, :, 0]
    backends = ["python"] + (["cython"] if _backend.compiled_kernels is not None else [])
    if len(backends) == 1:
        print("compiled extension not built; timing the numpy backend only")

    results = {}
    print(f"{'case':<28}{'backend':<9}{'median ms':>10}{'min ms':>9}{'stdev':>8}")
    for case, make in (
        (f"ddl r=1..4 {args.slices}x{args.size}^2", lambda b: lambda: multiscale_volumes(stack, 4, backend=b)),
        (f"laplacian 3x3 {args.size}^2", lambda b: lambda: conv2d(img, standard_laplacian(), backend=b)),
    ):
        for b in backends:
            ts = _time(make(b), args.repeat)
            results[case, b] = make(b)()
            print(f"{case:<28}{b:<9}{1000 * statistics.median(ts):>10.2f}{1000 * min(ts):>9.2f}"
                  f"{1000 * statistics.pstdev(ts):>8.2f}")

    if len(backends) == 2:
        for case in {c for c, _ in results}:
            a, b = results[case, "python"], results[case, "cython"]
            if isinstance(a, list):
                same = all(np.array_equal(x.values, y.values) for x, y in zip(a, b))
            else:
                same = np.array_equal(a, b)
            print(f"{case}: backends bit-identical = {same}")


if __name__ == "__main__":
    main()
