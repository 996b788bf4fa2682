"""Compare the compiled and numpy fallback kernels on representative workloads.

Usage: python benchmarks/bench_backends.py [--repeat N]
"""
import argparse
import timeit

import numpy as np

from coherent_kernel import _purepy
from coherent_kernel.axial import axial_coeffs
from coherent_kernel.core import PhysParams

try:
    from coherent_kernel import _native
except ImportError:
    _native = None


def workloads():
    p = PhysParams(mass=1.0, omega=1.0, volume=2 * np.pi, g0=0.5)
    z = np.linspace(-12, 12, 1201)
    psi0 = (2 * np.pi) ** -0.25 * np.exp(-z ** 2 / 4)
    dt = 1e-4
    mids = (np.arange(2000) + 0.5) * dt
    coeffs = axial_coeffs(p, mids).as_array()
    yield ("cayley_axial_steps (1201 pts x 2000 steps)",
           lambda mod: mod.cayley_axial_steps(psi0, z, z[1] - z[0], 1.0, coeffs, dt))
    s = np.linspace(0, 10, 2 * 20000 + 1)
    pcoef = 4 * axial_coeffs(p, s).psi
    qcoef = axial_coeffs(p, s).omega2
    yield ("rk4_linear2 (20000 steps, 2 solutions)",
           lambda mod: mod.rk4_linear2(pcoef, qcoef, 10 / 20000, np.eye(2)))


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()
    print(f"{'workload':48s} {'python [s]':>11s} {'native [s]':>11s} {'speedup':>8s}  max|diff|")
    for name, fn in workloads():
        t_py = min(timeit.repeat(lambda: fn(_purepy), number=1, repeat=args.repeat))
        if _native is None:
            print(f"{name:48s} {t_py:11.4f} {'n/a':>11s}")
            continue
        t_nat = min(timeit.repeat(lambda: fn(_native), number=1, repeat=args.repeat))
        diff = np.abs(np.asarray(fn(_purepy)) - np.asarray(fn(_native))).max()
        print(f"{name:48s} {t_py:11.4f} {t_nat:11.4f} {t_py / t_nat:8.1f}  {diff:.2e}")


if __name__ == "__main__":
    main()
