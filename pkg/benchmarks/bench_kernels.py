"""Time the numba kernels against their numpy counterparts.

    python3 benchmarks/bench_kernels.py [N]

Both families are called directly, so MASLOVCW_BACKEND does not matter here.
"""

import sys
import time

import numpy as np

from maslovcw import kernels


def best_of(fn, *args, repeat=5):
    fn(*args)  # warmup (numba compiles on the first call)
    best = np.inf
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best


def main(N=200_000):
    rng = np.random.default_rng(0)
    rows = []
    for n, k in ((1, 1), (2, 2), (3, 2), (3, 3)):
        frames = rng.standard_normal((N, n, k)) + 1j * rng.standard_normal((N, n, k))
        derivs = rng.standard_normal((N, n, k)) + 1j * rng.standard_normal((N, n, k))
        a = rng.standard_normal((N, n, n)) + 1j * rng.standard_normal((N, n, n))
        metric = np.einsum("nji,njk->nik", a.conj(), a) + np.eye(n)
        cases = [
            ("gram", (frames, metric)),
            ("wedge_norm_sq", (frames, metric)),
            ("wedge_pair_derivative", (frames, derivs, metric)),
        ]
        for name, args in cases:
            t_np = best_of(getattr(kernels, name + "_numpy"), *args)
            t_nb = np.nan
            if kernels.NUMBA_AVAILABLE:
                t_nb = best_of(getattr(kernels, name + "_numba"), *args)
            rows.append((f"{name} n={n} k={k}", t_np, t_nb))
    z = np.exp(1j * np.linspace(0, 40 * np.pi, N, endpoint=False))
    t_nb = best_of(kernels.phase_steps_numba, z) if kernels.NUMBA_AVAILABLE else np.nan
    rows.append(("phase_steps", best_of(kernels.phase_steps_numpy, z), t_nb))

    print(f"N = {N}, numba available: {kernels.NUMBA_AVAILABLE}")
    print(f"{'kernel':<32} {'numpy ms':>10} {'numba ms':>10} {'speedup':>8}")
    for name, t_np, t_nb in rows:
        print(f"{name:<32} {1e3 * t_np:>10.2f} {1e3 * t_nb:>10.2f} {t_np / t_nb:>8.2f}")


if __name__ == "__main__":
    main(int(sys.argv[1]) if len(sys.argv) > 1 else 200_000)
