"""Time the compiled kernels against the numpy fallback.

    python3 benchmarks/bench_kernels.py [--steps N] [--repeat R]

The Lindblad case is one emitter segment of the five-mode transfer (128-dim
register); the eigensolver case is a random 64x64 Hermitian matrix.
"""
import argparse
import time

import numpy as np

from triqnet import device, kernels
from triqnet.params import DeviceParams


def _lindblad_case(steps):
    q_e, q_r, ch = DeviceParams().endpoints("a2c1")
    n = 2 + ch.M
    h = device._hamiltonian_sparse(ch, True, False)
    g_down, g_phi = device._rates(q_e, q_r, ch, ideal=False)
    decay = device._decay_matrix(n, g_down, g_phi)
    masks = np.array([1 << (n - 1 - k) for k in range(n)], dtype=np.int_)
    rho = np.zeros((2 ** n, 2 ** n), dtype=complex)
    rho[1 << (n - 1), 1 << (n - 1)] = 1.0
    args = (rho, h.data, h.indices.astype(np.intc), h.indptr.astype(np.intc), decay, g_down, masks,
            device.DEFAULT_DT, steps)
    return lambda mod: mod.lindblad_rk4(*args)


def _jacobi_case():
    rng = np.random.default_rng(0)
    a = rng.normal(size=(64, 64)) + 1j * rng.normal(size=(64, 64))
    a = a + a.conj().T
    return lambda mod: mod.jacobi_eigh(a, 1e-12 * np.abs(a).max(), 50)


def _best(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--steps", type=int, default=200, help="RK4 steps per timing")
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args(argv)
    backends = kernels.available_backends()
    if "cython" not in backends:
        print("compiled kernels not built; only the numpy fallback is timed")
    cases = {f"lindblad_rk4 (128-dim, {args.steps} steps)": _lindblad_case(args.steps),
             "jacobi_eigh (64x64)": _jacobi_case()}
    print(f"{'kernel':<36}" + "".join(f"{b:>12}" for b in sorted(backends)) + f"{'speedup':>10}")
    for name, case in cases.items():
        t = {b: _best(lambda: case(mod), args.repeat) for b, mod in backends.items()}
        line = f"{name:<36}" + "".join(f"{t[b]:>11.4f}s" for b in sorted(backends))
        if "cython" in t:
            line += f"{t['python'] / t['cython']:>9.1f}x"
        print(line)


if __name__ == "__main__":
    main()
