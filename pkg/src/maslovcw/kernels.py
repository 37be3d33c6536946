"""Batched hot kernels for frame algebra and phase tracking.

Two interchangeable implementations live here: numba ``@njit`` loops and a
pure-numpy path.  ``MASLOVCW_BACKEND=numpy`` forces the numpy path; the
numba path is the default whenever numba imports.  Both backends are always
importable under their explicit names (``*_numba`` / ``*_numpy``) so tests
and the benchmark can compare them directly.

Array conventions
-----------------
frames : (N, n, k) complex, column ``i`` is the vector sigma_i
metric : (N, n, n) complex Hermitian, h(u, v) = v^H @ metric @ u
"""

import os

import numpy as np

try:
    from numba import njit
    NUMBA_AVAILABLE = True
except ImportError:  # pragma: no cover - exercised only without numba
    NUMBA_AVAILABLE = False

    def njit(*args, **kw):
        if args and callable(args[0]):
            return args[0]
        return lambda f: f


def _select_backend():
    requested = os.environ.get("MASLOVCW_BACKEND", "").strip().lower()
    if requested == "numpy":
        return "numpy"
    if requested not in ("", "numba"):
        raise ValueError(f"MASLOVCW_BACKEND must be 'numba' or 'numpy', got {requested!r}")
    return "numba" if NUMBA_AVAILABLE else "numpy"


BACKEND = _select_backend()


# --------------------------------------------------------------------------
# numpy path
# --------------------------------------------------------------------------

def gram_numpy(frames, metric):
    # G[i, j] = sigma_j^H H sigma_i
    hf = metric @ frames
    return np.einsum("naj,nai->nij", frames.conj(), hf)


def det_numpy(mats):
    return np.linalg.det(mats)


def wedge_norm_sq_numpy(frames, metric):
    return det_numpy(gram_numpy(frames, metric)).real


def wedge_pair_derivative_numpy(frames, derivs, metric):
    g = gram_numpy(frames, metric)
    # P[i, j] = h(derivs_i, sigma_j)
    p = np.einsum("naj,nai->nij", frames.conj(), metric @ derivs)
    k = g.shape[1]
    total = np.zeros(g.shape[0], dtype=complex)
    for i in range(k):
        m = g.copy()
        m[:, i, :] = p[:, i, :]
        total += np.linalg.det(m)
    return total


def phase_steps_numpy(samples):
    return np.angle(np.roll(samples, -1) * np.conj(samples))


# --------------------------------------------------------------------------
# numba path
# --------------------------------------------------------------------------

@njit(cache=True)
def _det_small(m):
    # Gaussian elimination with partial pivoting on a copy.
    a = m.copy()
    k = a.shape[0]
    det = 1.0 + 0.0j
    for c in range(k):
        piv = c
        best = abs(a[c, c])
        for r in range(c + 1, k):
            if abs(a[r, c]) > best:
                best = abs(a[r, c])
                piv = r
        if best == 0.0:
            return 0.0 + 0.0j
        if piv != c:
            for j in range(k):
                tmp = a[c, j]
                a[c, j] = a[piv, j]
                a[piv, j] = tmp
            det = -det
        det *= a[c, c]
        for r in range(c + 1, k):
            f = a[r, c] / a[c, c]
            for j in range(c, k):
                a[r, j] -= f * a[c, j]
    return det


@njit(cache=True)
def _pair_matrix(frames, metric, other, out):
    # out[i, j] = sigma_j^H H other_i  for a single sample
    n = frames.shape[0]
    k = frames.shape[1]
    for i in range(k):
        for j in range(k):
            acc = 0.0 + 0.0j
            for a in range(n):
                hv = 0.0 + 0.0j
                for b in range(n):
                    hv += metric[a, b] * other[b, i]
                acc += np.conj(frames[a, j]) * hv
            out[i, j] = acc


@njit(cache=True)
def gram_numba(frames, metric):
    N, n, k = frames.shape
    out = np.empty((N, k, k), dtype=np.complex128)
    for s in range(N):
        _pair_matrix(frames[s], metric[s], frames[s], out[s])
    return out


@njit(cache=True)
def det_numba(mats):
    N = mats.shape[0]
    out = np.empty(N, dtype=np.complex128)
    for s in range(N):
        out[s] = _det_small(mats[s])
    return out


@njit(cache=True)
def wedge_norm_sq_numba(frames, metric):
    N, n, k = frames.shape
    out = np.empty(N)
    g = np.empty((k, k), dtype=np.complex128)
    for s in range(N):
        _pair_matrix(frames[s], metric[s], frames[s], g)
        out[s] = _det_small(g).real
    return out


@njit(cache=True)
def wedge_pair_derivative_numba(frames, derivs, metric):
    N, n, k = frames.shape
    out = np.empty(N, dtype=np.complex128)
    g = np.empty((k, k), dtype=np.complex128)
    p = np.empty((k, k), dtype=np.complex128)
    m = np.empty((k, k), dtype=np.complex128)
    for s in range(N):
        _pair_matrix(frames[s], metric[s], frames[s], g)
        _pair_matrix(frames[s], metric[s], derivs[s], p)
        acc = 0.0 + 0.0j
        for i in range(k):
            for r in range(k):
                for c in range(k):
                    m[r, c] = p[r, c] if r == i else g[r, c]
            acc += _det_small(m)
        out[s] = acc
    return out


@njit(cache=True)
def phase_steps_numba(samples):
    N = samples.shape[0]
    out = np.empty(N)
    for j in range(N):
        z = samples[(j + 1) % N] * np.conj(samples[j])
        out[j] = np.arctan2(z.imag, z.real)
    return out


# --------------------------------------------------------------------------
# dispatch
# --------------------------------------------------------------------------

def _c128(a):
    return np.ascontiguousarray(a, dtype=np.complex128)


if BACKEND == "numba":
    def gram(frames, metric):
        return gram_numba(_c128(frames), _c128(metric))

    def det(mats):
        return det_numba(_c128(mats))

    def wedge_norm_sq(frames, metric):
        return wedge_norm_sq_numba(_c128(frames), _c128(metric))

    def wedge_pair_derivative(frames, derivs, metric):
        return wedge_pair_derivative_numba(_c128(frames), _c128(derivs), _c128(metric))

    def phase_steps(samples):
        return phase_steps_numba(_c128(samples))
else:
    gram = gram_numpy
    det = det_numpy
    wedge_norm_sq = wedge_norm_sq_numpy
    wedge_pair_derivative = wedge_pair_derivative_numpy
    phase_steps = phase_steps_numpy
