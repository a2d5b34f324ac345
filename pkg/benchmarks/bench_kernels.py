"""Time the compiled kernels against the pure-Python fallback.

Usage: python3 benchmarks/bench_kernels.py [--side 20] [--repeat 3]
"""
import argparse
import time

import numpy as np

from markedph._backend import available_backends
from markedph.complex import build_filtered_complex
from markedph.kappa import FiltrationFunction
from markedph.processes import IIDRadius, ProcessSpec, UniformDist, sample_marked_process
from markedph.windows import Cube


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--side", type=float, default=20.0, help="side of the sampled square")
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args(argv)

    spec = ProcessSpec(1.0, IIDRadius(UniformDist(0.0, 0.5)), seed=1)
    phi = sample_marked_process(spec, Cube(args.side, 2)).points
    kappa = FiltrationFunction("cech_radii", radius_cap=0.5)
    cx = build_filtered_complex(phi, kappa, 2, 0.65)
    indptr, indices = cx.boundary_csr()
    tri = np.array([s.vertices for s in cx if s.dim == 2], dtype=np.int64)
    print(f"{len(phi)} points, {len(cx)} simplices, {len(tri)} triangles")

    results = {}
    for name, mod in available_backends().items():
        t_ball = best_of(lambda: mod.smallest_intersecting_ball_batch(phi.positions, phi.marks, tri), args.repeat)
        t_red = best_of(lambda: mod.reduce_boundary(indptr, indices, len(cx)), args.repeat)
        results[name] = (t_ball, t_red)
        print(f"{name:>7}: intersecting balls {t_ball * 1e3:9.2f} ms   reduction {t_red * 1e3:9.2f} ms")
    if "cython" in results:
        py, cy = results["python"], results["cython"]
        print(f"speedup: balls x{py[0] / cy[0]:.1f}, reduction x{py[1] / cy[1]:.1f}")


if __name__ == "__main__":
    main()
