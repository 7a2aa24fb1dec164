"""Benchmark the numba kernels against the pure-numpy fallback.

Builds a synthetic binary-noise batch shaped like the fast-sampling sweep
(per-sample steps, many segments per slot) and times each backend on the
three protocol kernels.  Run from the repository root:

    python benchmarks/bench_kernels.py --realizations 200 --slots 20 --samples-per-slot 250
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from ifmsim import kernels
from ifmsim.core import basis_state, pure_density


def time_call(fn, *args, repeats=3):
    best = np.inf
    out = None
    for _ in range(repeats):
        t0 = time.perf_counter()
        out = fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best, out


def main() -> None:
    parser = argparse.ArgumentParser(description="Compare protocol-kernel backends")
    parser.add_argument("--realizations", type=int, default=200)
    parser.add_argument("--slots", type=int, default=20)
    parser.add_argument("--samples-per-slot", type=int, default=250)
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args()

    rng = np.random.default_rng(args.seed)
    n_seg = args.slots * args.samples_per_slot
    signs = np.where(rng.random((args.realizations, args.slots)) < 0.5, -1.0, 1.0)
    dtheta = np.repeat(signs, args.samples_per_slot, axis=1) * (np.pi / 250.0)
    chi = np.full_like(dtheta, -np.pi / 2.0)
    offsets = np.arange(args.slots + 1, dtype=np.int64) * args.samples_per_slot
    phi = np.pi / (args.slots + 1)
    psi2 = basis_state(2, 0)
    psi3 = basis_state(3, 0)
    rho3 = pure_density(psi3)

    print(f"batch: {args.realizations} realizations x {n_seg} segments "
          f"({args.slots} slots); numba available: {kernels.HAVE_NUMBA}")

    def qubit_jit():
        out = np.empty((args.realizations, 2))
        kernels._qubit_populations_jit(dtheta, chi, psi2, out)
        return out

    def cifm_jit():
        out = np.empty((args.realizations, 3))
        kernels._cifm_populations_jit(dtheta, chi, offsets, phi, psi3, out)
        return out

    def pifm_jit():
        out = np.empty((args.realizations, 3))
        kernels._pifm_populations_jit(dtheta, chi, offsets, phi, rho3, out)
        return out

    cases = [
        ("qubit", lambda: kernels._qubit_populations_np(dtheta, chi, psi2), qubit_jit),
        ("cifm", lambda: kernels._cifm_populations_np(dtheta, chi, offsets, phi, psi3), cifm_jit),
        ("pifm", lambda: kernels._pifm_populations_np(dtheta, chi, offsets, phi, rho3), pifm_jit),
    ]
    for name, np_fn, jit_fn in cases:
        t_np, ref = time_call(np_fn)
        line = f"{name:>5}: numpy {t_np * 1e3:8.1f} ms"
        if kernels.HAVE_NUMBA:
            jit_fn()  # warm up / compile
            t_jit, out = time_call(jit_fn)
            diff = float(np.max(np.abs(out - ref)))
            line += f" | numba {t_jit * 1e3:8.1f} ms | speedup {t_np / t_jit:5.1f}x | max diff {diff:.2e}"
        print(line)


if __name__ == "__main__":
    main()
