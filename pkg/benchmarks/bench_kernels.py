"""Compare the compiled and numpy tensor kernels on random batches.

    python benchmarks/bench_kernels.py --dims 4 5 6 --points 200 --repeat 5

Prints one line per (kernel, dimension) with the best wall time of each
backend, the speedup and the largest difference between the two outputs.
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from ecskit import kernels


def random_inputs(rng, N, n):
    A = rng.normal(size=(N, n, n))
    g = A @ A.transpose(0, 2, 1) + n * np.eye(n)
    ginv = np.linalg.inv(g)
    dg = rng.normal(size=(N, n, n, n))
    dg = 0.5 * (dg + dg.transpose(0, 2, 1, 3))
    ddg = rng.normal(size=(N, n, n, n, n))
    ddg = 0.5 * (ddg + ddg.transpose(0, 2, 1, 3, 4))
    ddg = 0.5 * (ddg + ddg.transpose(0, 1, 2, 4, 3))
    return g, ginv, dg, ddg


def cases(mod, rng, N, n):
    g, ginv, dg, ddg = random_inputs(rng, N, n)
    gamma = mod.christoffel(ginv, dg)
    dgamma = mod.christoffel_derivative(ginv, dg, ddg)
    rup = mod.riemann(gamma, dgamma)
    rdown = mod.lower_first(g, rup)
    ricci = np.einsum("nilij->nlj", rup)
    scalar = np.einsum("nlj,nlj->n", ginv, ricci)
    dT = rng.normal(size=(N, n) + rdown.shape[1:])
    dr = rng.normal(size=(N, n, n, n))
    return {
        "christoffel": (ginv, dg),
        "christoffel_derivative": (ginv, dg, ddg),
        "riemann": (gamma, dgamma),
        "lower_first": (g, rup),
        "weyl": (g, rdown, ricci, scalar),
        "covariant_derivative4": (rdown, dT, gamma),
        "covariant_derivative2": (ricci, dr, gamma),
        "semisymmetry_max": (rup, rdown),
    }


def best_time(fn, args, repeat):
    best = np.inf
    out = None
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best, out


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--dims", type=int, nargs="+", default=[4, 5, 6])
    parser.add_argument("--points", type=int, default=200)
    parser.add_argument("--repeat", type=int, default=3)
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args(argv)

    backends = kernels.available_backends()
    if "cython" not in backends:
        print("compiled kernels are not built; only the numpy backend is available")
    py = kernels.backend_module("python")
    cy = kernels.backend_module("cython") if "cython" in backends else None

    print(f"{'kernel':<24}{'n':>3}{'numpy [ms]':>12}{'cython [ms]':>13}{'speedup':>9}{'max diff':>11}")
    for n in args.dims:
        rng = np.random.default_rng(args.seed)
        inputs = cases(py, rng, args.points, n)
        for name in kernels.NAMES:
            tp, outp = best_time(getattr(py, name), inputs[name], args.repeat)
            if cy is None:
                print(f"{name:<24}{n:>3}{1e3 * tp:>12.2f}{'-':>13}{'-':>9}{'-':>11}")
                continue
            tc, outc = best_time(getattr(cy, name), inputs[name], args.repeat)
            diff = float(np.abs(outp - outc).max())
            print(f"{name:<24}{n:>3}{1e3 * tp:>12.2f}{1e3 * tc:>13.2f}{tp / tc:>9.1f}{diff:>11.1e}")


if __name__ == "__main__":
    main()
