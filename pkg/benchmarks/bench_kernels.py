#!/usr/bin/env python3
"""Compare the compiled and NumPy ML grid-scan kernels.

Runs the raw grid scan on random inputs and a short end-to-end experiment
under each backend (the latter in subprocesses, since the backend is fixed
at import time).

    python benchmarks/bench_kernels.py [--trials 200] [--repeat 2000]
"""
import argparse
import json
import os
import subprocess
import sys
import timeit

import numpy as np

from nspradar import _pykernels
from nspradar.estimator import MLGrid
from nspradar.geometry import ArrayGeometry, steering_table

try:
    from nspradar import _ckernels
except ImportError:
    _ckernels = None

_E2E = """
import json, time
from nspradar import kernels
from nspradar.montecarlo import ExperimentConfig, run_experiment
cfg = ExperimentConfig(num_trials={trials})
run_experiment(ExperimentConfig(num_trials=2))
t0 = time.perf_counter()
res = run_experiment(cfg)
dt = time.perf_counter() - t0
print(json.dumps({{"backend": kernels.BACKEND, "seconds": dt,
                  "rmse": [r.rmse_deg for r in res.summary.rows]}}))
"""


def scan_inputs(m_t=4, m_r=4, step=0.5, seed=0):
    rng = np.random.default_rng(seed)
    e = rng.standard_normal((m_r, m_t)) + 1j * rng.standard_normal((m_r, m_t))
    b = rng.standard_normal((m_t, m_t)) + 1j * rng.standard_normal((m_t, m_t))
    a_t, a_r = steering_table(ArrayGeometry(m_t, m_r), MLGrid(step).angles)
    return e, b @ b.conj().T, a_t, a_r


def bench_scan(repeat):
    args = scan_inputs()
    rows = []
    for name, mod in (("python", _pykernels), ("compiled", _ckernels)):
        if mod is None:
            continue
        t = min(timeit.repeat(lambda: mod.ml_argmax(*args, 0.0), number=repeat, repeat=3)) / repeat
        rows.append((name, t))
    return rows


def bench_e2e(trials):
    out = []
    for backend in ("python", "compiled"):
        if backend == "compiled" and _ckernels is None:
            continue
        env = dict(os.environ, NSPRADAR_BACKEND=backend)
        proc = subprocess.run([sys.executable, "-c", _E2E.format(trials=trials)], env=env,
                              capture_output=True, text=True, check=True)
        out.append(json.loads(proc.stdout))
    return out


def main():
    parser = argparse.ArgumentParser(description=__doc__.split("\n\n")[0])
    parser.add_argument("--trials", type=int, default=200)
    parser.add_argument("--repeat", type=int, default=2000)
    args = parser.parse_args()

    print("grid scan, 361 angles, M_T = M_R = 4")
    scan = bench_scan(args.repeat)
    for name, t in scan:
        print(f"  {name:>9s}: {t * 1e6:8.2f} us/scan")
    if len(scan) == 2:
        print(f"  speedup: {scan[0][1] / scan[1][1]:.1f}x")

    print(f"end-to-end experiment, {args.trials} trials")
    e2e = bench_e2e(args.trials)
    for r in e2e:
        print(f"  {r['backend']:>9s}: {r['seconds']:8.3f} s")
    if len(e2e) == 2:
        print(f"  speedup: {e2e[0]['seconds'] / e2e[1]['seconds']:.2f}x")
        print(f"  identical summaries: {e2e[0]['rmse'] == e2e[1]['rmse']}")


if __name__ == "__main__":
    main()
