#!/usr/bin/env python3
"""Benchmark the compiled sweep kernels against the pure-Python fallback.

Times raw projected Gauss-Seidel sweeps (the hot inner loop of every
phase step) and one full phase step on a production-sized grid, then
verifies both backends produce bitwise-identical iterates.

Run:  python benchmarks/bench_kernels.py
"""

import time

import numpy as np

from cryophase import _kernels_py
from cryophase.constitutive import ModelParams
from cryophase.grid import Field, Grid
from cryophase.phase import assemble_diagonal

try:
    from cryophase import _kernels
except ImportError:
    _kernels = None


def sweep_workload(grid, dt=0.002, seed=0):
    rng = np.random.default_rng(seed)
    vol = grid.node_volumes()
    base = vol / dt
    diag, coeffs = assemble_diagonal(grid, base)
    beta = np.ascontiguousarray(rng.uniform(size=grid.shape))
    rhs = np.ascontiguousarray(base * rng.uniform(size=grid.shape))
    return beta, rhs, np.ascontiguousarray(diag), coeffs


def time_sweeps(module, grid, n_sweeps):
    beta, rhs, diag, coeffs = sweep_workload(grid)
    if grid.dim == 1:
        c = float(coeffs[0][0])
        started = time.perf_counter()
        for _ in range(n_sweeps):
            module.pgs_sweep_1d(beta, rhs, diag, c)
    else:
        cx = np.ascontiguousarray(coeffs[0])
        cy = np.ascontiguousarray(coeffs[1])
        started = time.perf_counter()
        for _ in range(n_sweeps):
            module.pgs_sweep_2d(beta, rhs, diag, cx, cy)
    return (time.perf_counter() - started) / n_sweeps, beta


def bench_raw_sweeps():
    cases = [
        ("1D 129 nodes", Grid(1, (1.0,), (129,)), 4000, 50),
        ("1D 1025 nodes", Grid(1, (1.0,), (1025,)), 1000, 10),
        ("2D 65 x 65", Grid(2, (1.0, 1.0), (65, 65)), 300, 3),
    ]
    print(f"{'workload':<16} {'compiled':>12} {'python':>12} {'speedup':>9}")
    for label, grid, n_fast, n_slow in cases:
        t_py, beta_py = time_sweeps(_kernels_py, grid, n_slow)
        if _kernels is None:
            print(f"{label:<16} {'n/a':>12} {t_py * 1e6:>10.1f}us {'':>9}")
            continue
        t_c, beta_c = time_sweeps(_kernels, grid, n_fast)
        # identical sweep counts start from identical states
        _, beta_ref = time_sweeps(_kernels, grid, n_slow)
        match = np.array_equal(beta_ref, beta_py)
        print(f"{label:<16} {t_c * 1e6:>10.1f}us {t_py * 1e6:>10.1f}us "
              f"{t_py / t_c:>8.1f}x  bitwise={'ok' if match else 'MISMATCH'}")


def bench_phase_step():
    from cryophase.phase import phase_step_projected
    import cryophase.kernels as kernels_mod

    grid = Grid(1, (1.0,), (129,))
    params = ModelParams()
    rng = np.random.default_rng(1)
    beta_old = Field(grid, rng.uniform(size=grid.shape))
    theta = Field(grid, params.theta_c * (1.0 + rng.uniform(-1, 1, grid.shape)))

    def run_with(module):
        kernels_mod.pgs_sweep_1d = module.pgs_sweep_1d
        kernels_mod.pgs_sweep_2d = module.pgs_sweep_2d
        started = time.perf_counter()
        res = phase_step_projected(beta_old, theta, 0.01, params, tol=1e-10)
        return time.perf_counter() - started, res

    t_py, res_py = run_with(_kernels_py)
    print(f"\nfull phase step (129 nodes, dt=0.01, {res_py.iterations} sweeps)")
    print(f"  python   {t_py * 1e3:9.2f} ms")
    if _kernels is not None:
        t_c, res_c = run_with(_kernels)
        same = np.array_equal(res_c.beta_new.values, res_py.beta_new.values)
        print(f"  compiled {t_c * 1e3:9.2f} ms   speedup {t_py / t_c:.1f}x"
              f"   bitwise={'ok' if same else 'MISMATCH'}")
        kernels_mod.pgs_sweep_1d = _kernels.pgs_sweep_1d
        kernels_mod.pgs_sweep_2d = _kernels.pgs_sweep_2d


if __name__ == "__main__":
    if _kernels is None:
        print("compiled kernels not available; timing the fallback only\n")
    bench_raw_sweeps()
    bench_phase_step()
