#!/usr/bin/env python3
"""Benchmark the compiled kernels against the numpy fallback.

Times P1 stiffness-triplet assembly and masked energy-Gram accumulation on a
representative disk mesh.  Run after building the extension:

    python3 benchmarks/bench_kernels.py [--h 0.02] [--repeats 5]
"""

import argparse
import time

import numpy as np

from ellipdim import _kernels, fields, pde


def bench(fn, repeats):
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("--h", type=float, default=0.02)
    parser.add_argument("--radius", type=float, default=2.0)
    parser.add_argument("--repeats", type=int, default=5)
    parser.add_argument("--columns", type=int, default=8)
    args = parser.parse_args()

    mesh = pde.mesh_disk(args.radius, args.h, snap_radii=(args.radius / 2,))
    field = fields.CheckerboardField()
    area, bx, by = mesh.p1_data()
    a11, a12, a22 = mesh.coefficients(field)
    rng = np.random.default_rng(0)
    u = rng.standard_normal((len(mesh.vertices), args.columns))
    elems = mesh.elements_inside(args.radius / 2)

    print(f"mesh: {len(mesh.vertices)} vertices, {len(mesh.triangles)} triangles, "
          f"gram over {len(elems)} elements x {args.columns} functions")
    print(f"active backend: {_kernels.BACKEND}")

    impls = {"numpy": _kernels._ref}
    if _kernels.BACKEND == "cython":
        from ellipdim._kernels import _speedups
        impls["cython"] = _speedups

    results = {}
    for name, mod in impls.items():
        t_stiff = bench(lambda: mod.stiffness_triplets(mesh.triangles, bx, by, area, a11, a12, a22),
                        args.repeats)
        t_gram = bench(lambda: mod.energy_gram(mesh.triangles, bx, by, area, a11, a12, a22, u, elems),
                       args.repeats)
        results[name] = (t_stiff, t_gram)
        print(f"{name:>7}: stiffness {t_stiff * 1e3:8.2f} ms   gram {t_gram * 1e3:8.2f} ms")

    if len(results) == 2:
        s = results["numpy"][0] / results["cython"][0]
        g = results["numpy"][1] / results["cython"][1]
        print(f"speedup: stiffness x{s:.2f}, gram x{g:.2f}")
        # agreement check on the gram path
        g1 = impls["cython"].energy_gram(mesh.triangles, bx, by, area, a11, a12, a22, u, elems)
        g2 = impls["numpy"].energy_gram(mesh.triangles, bx, by, area, a11, a12, a22, u, elems)
        print(f"max deviation: {np.abs(g1 - g2).max():.3e}")


if __name__ == "__main__":
    main()
