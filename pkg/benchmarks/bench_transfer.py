"""Compare the compiled and NumPy transfer-matrix kernels.

Runs the same six-mode resonant integration through both kernels, checks
that they agree, and prints the wall time per step.

    python3 benchmarks/bench_transfer.py [--steps N] [--repeat R]
"""
import argparse
import math
import time

import numpy as np

from leakycavity import kernels, oracle
from leakycavity.coupling import DriveSpec
from leakycavity.design import geometry_for_eta, resonant_pair
from leakycavity.spectral import spectrum


def setup(n_modes=6):
    geom = geometry_for_eta(1.0, math.pi, 1e-3)
    mode_l, mode_r = resonant_pair(geom)
    spec = spectrum(geom, 4.0 * mode_r.omega_x)
    modes = oracle.select_modes(spec, mode_l, mode_r, n_modes)
    drive = DriveSpec(1e-3, 2.0 * mode_l.omega0)
    return oracle.assemble_time_dependent_hamiltonian(geom, drive, modes)


def timed(kernel, coeffs, duration, repeat):
    best = math.inf
    for _ in range(repeat):
        t0 = time.perf_counter()
        ts = oracle.integrate_transfer(coeffs, duration, backend=kernel)
        best = min(best, time.perf_counter() - t0)
    return best, ts


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--steps", type=int, default=20000)
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--modes", type=int, default=6)
    args = ap.parse_args(argv)
    coeffs = setup(args.modes)
    duration = args.steps * oracle.default_step(coeffs)
    t_py, ts_py = timed(kernels.python_magnus4, coeffs, duration, args.repeat)
    print(f"python  {t_py:8.3f} s  {1e6 * t_py / args.steps:8.2f} us/step")
    if kernels.compiled_magnus4 is None:
        print("cython  not built (pip install --no-build-isolation -e .)")
        return 0
    t_cy, ts_cy = timed(kernels.compiled_magnus4, coeffs, duration, args.repeat)
    diff = float(np.max(np.abs(ts_py.transfer - ts_cy.transfer)))
    print(f"cython  {t_cy:8.3f} s  {1e6 * t_cy / args.steps:8.2f} us/step")
    print(f"speedup {t_py / t_cy:8.1f}x   max |difference| {diff:.2e}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
