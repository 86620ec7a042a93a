"""Compare the compiled and NumPy stepping kernels on 1-D and 2-D Barenblatt runs.

    python benchmarks/bench_kernels.py [--quick] [--repeat 3]
"""
from __future__ import annotations

import argparse
import time

import numpy as np

from pmelab import kernels
from pmelab.exact import BarenblattParams, barenblatt_cell_averages
from pmelab.field import Grid
from pmelab.solver import PMEProblem, solve


def cases(quick: bool):
    n1, n2 = (256, 48) if quick else (1024, 160)
    T1, T2 = (1.2, 1.05) if quick else (2.0, 1.3)
    p1, p2 = BarenblattParams(m=2.0, d=1), BarenblattParams(m=2.0, d=2)
    g1 = Grid.box(1, n1, -5.0, 5.0, t0=1.0, T=T1)
    g2 = Grid.box(2, n2, -6.0, 6.0, t0=1.0, T=T2)
    yield "1d", g1, PMEProblem(2.0, barenblatt_cell_averages(p1, g1, 1.0, sub=8))
    yield "2d", g2, PMEProblem(2.0, barenblatt_cell_averages(p2, g2, 1.0, sub=8))


def run(quick=False, repeat=3):
    rows = []
    for name, grid, prob in cases(quick):
        results, timings = {}, {}
        for backend in sorted(kernels.BACKENDS):
            best = np.inf
            for _ in range(repeat):
                t0 = time.perf_counter()
                u = solve(prob, grid, frames=3, backend=backend)
                best = min(best, time.perf_counter() - t0)
            results[backend], timings[backend] = u, best
        steps = results["numpy"].dt_schedule.size
        diff = 0.0
        if "cython" in results:
            diff = float(np.max(np.abs(results["cython"].values - results["numpy"].values)))
        rows.append((name, grid.n, steps, timings.get("cython", np.nan), timings["numpy"], diff))
    return rows


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--quick", action="store_true")
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args(argv)
    print(f"{'case':5s} {'n':>5s} {'steps':>7s} {'cython[s]':>10s} {'numpy[s]':>10s} "
          f"{'speedup':>8s} {'max|diff|':>10s}")
    for name, n, steps, tc, tn, diff in run(args.quick, args.repeat):
        print(f"{name:5s} {n:5d} {steps:7d} {tc:10.3f} {tn:10.3f} {tn / tc:8.2f} {diff:10.1e}")


if __name__ == "__main__":
    main()
