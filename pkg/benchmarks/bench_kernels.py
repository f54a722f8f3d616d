"""Compare the compiled and pure-Python kernels.

    python benchmarks/bench_kernels.py [--repeat 5]

Times the two hot loops (RK4 propagation of the vectorised Lindblad
equation and batched Jacobi eigenvalues) on workloads taken from the
revival-curve runs, and checks that both backends agree.
"""

import argparse
import time

import numpy as np

from temporal_steering import _pykernels, dynamics, steering
from temporal_steering.dynamics import TimeGrid

try:
    from temporal_steering import _kernels
except ImportError:
    _kernels = None


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        result = fn()
        times.append(time.perf_counter() - t0)
    return min(times), result


def rk4_workload(name):
    if name == "rabi":
        model, rho0 = dynamics.rabi_model(9.0, 1.0), np.eye(2) / 2
    else:
        model, rho0 = dynamics.ancilla_model(9.0, 1.0), dynamics.ancilla_initial_state()
    grid = TimeGrid(0.0, 6.0, 1200)
    _, branches = steering.measured_branches(rho0, steering.BASES)
    d = model.dim
    v0 = branches.reshape(len(branches), d * d).T.copy()
    trace_idx = np.arange(d) * (d + 1)
    sub = dynamics.default_substeps(model, grid)
    h = grid.h / sub
    L = model.liouvillian()
    return lambda k: k.rk4_propagate(L, v0, h, grid.steps, sub, trace_idx, 1e-6)


def eig_workload(n):
    rng = np.random.default_rng(0)
    A = rng.normal(size=(n, 4, 4)) + 1j * rng.normal(size=(n, 4, 4))
    mats = A + np.conj(np.swapaxes(A, 1, 2))
    return lambda k: k.jacobi_eigvalsh(mats)


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeat", type=int, default=3)
    args = parser.parse_args(argv)

    backends = [_pykernels] + ([_kernels] if _kernels is not None else [])
    if _kernels is None:
        print("compiled extension not built; timing the Python kernels only")

    cases = [
        ("rk4 rabi (6 states, 4x4 L)", rk4_workload("rabi")),
        ("rk4 ancilla (6 states, 16x16 L)", rk4_workload("ancilla")),
        ("jacobi 7200 x 4x4", eig_workload(7200)),
    ]
    print(f"{'workload':34s} " + " ".join(f"{k.BACKEND:>10s}" for k in backends) + "   speedup")
    for label, work in cases:
        timings, results = [], []
        for k in backends:
            t, r = best_of(lambda: work(k), args.repeat)
            timings.append(t)
            results.append(r[0] if isinstance(r, tuple) else r)
        row = f"{label:34s} " + " ".join(f"{t:9.4f}s" for t in timings)
        if len(timings) == 2:
            diff = np.max(np.abs(results[0] - results[1]))
            row += f"   {timings[0] / timings[1]:6.1f}x  (max diff {diff:.1e})"
        print(row)


if __name__ == "__main__":
    main()
