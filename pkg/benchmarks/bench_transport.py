"""Benchmark the compiled transportation kernel against the pure-Python fallback.

Usage: python benchmarks/bench_transport.py [--repeats 3]

Instances mirror the shapes the metric layer actually produces: random dense
cost matrices plus the worst realistic case, a footprint-supported ground
truth against a uniform-fallback explanation (small supply side, one demand
bin per coarse cell).
"""

import argparse
import time

import numpy as np

from salbench._transport import _solver_py

try:
    from salbench._transport import _solver_cy
except ImportError:
    _solver_cy = None


def random_instance(rng, m, n):
    a = rng.random(m) + 1e-3
    b = rng.random(n) + 1e-3
    a /= a.sum()
    b /= b.sum()
    return a, b, rng.random((m, n))


def geometric_instance(rng, m, grid):
    """Supply points scattered on the image vs a uniform grid of demands."""
    a = rng.random(m)
    a /= a.sum()
    n = grid * grid
    b = np.full(n, 1.0 / n)
    supply_pts = rng.random((m, 2)) * 127
    step = 128 // grid
    cells = np.stack(np.meshgrid(np.arange(grid), np.arange(grid)), -1)
    demand_pts = cells.reshape(-1, 2) * step + (step - 1) / 2
    costs = np.sqrt(((supply_pts[:, None] - demand_pts[None]) ** 2).sum(-1))
    return a, b, costs / np.sqrt(2 * 127 ** 2)


def time_solver(solver, instances, repeats):
    best = np.inf
    for _ in range(repeats):
        start = time.perf_counter()
        costs = [solver(a, b, c)[0] for a, b, c in instances]
        best = min(best, time.perf_counter() - start)
    return best, costs


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("--repeats", type=int, default=3)
    args = parser.parse_args()

    rng = np.random.default_rng(0)
    suites = {
        "random 10x10 (x50)": [random_instance(rng, 10, 10) for _ in range(50)],
        "random 50x50 (x20)": [random_instance(rng, 50, 50) for _ in range(20)],
        "random 200x200 (x5)": [random_instance(rng, 200, 200) for _ in range(5)],
        "geometric 60 vs 16x16 (x10)": [geometric_instance(rng, 60, 16) for _ in range(10)],
        "geometric 100 vs 32x32 (x3)": [geometric_instance(rng, 100, 32) for _ in range(3)],
    }

    print(f"{'suite':32s} {'python':>10s} {'cython':>10s} {'speedup':>8s}")
    for name, instances in suites.items():
        py_time, py_costs = time_solver(
            _solver_py.solve_transportation, instances, args.repeats
        )
        if _solver_cy is None:
            print(f"{name:32s} {py_time:9.3f}s {'n/a':>10s} {'n/a':>8s}")
            continue
        cy_time, cy_costs = time_solver(
            _solver_cy.solve_transportation, instances, args.repeats
        )
        mismatch = max(abs(p - c) for p, c in zip(py_costs, cy_costs))
        assert mismatch == 0.0, f"backends disagree by {mismatch}"
        print(f"{name:32s} {py_time:9.3f}s {cy_time:9.3f}s {py_time / cy_time:7.1f}x")
    if _solver_cy is None:
        print("\ncompiled backend unavailable; build it with: pip install -e .")


if __name__ == "__main__":
    main()
