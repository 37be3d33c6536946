"""Complex frame algebra, wedge products and phase tracking.

Hermitian convention: ``h(u, v) = v^H H u`` (linear in the first slot,
conjugate-linear in the second).  With this convention the squared norm of
``sigma_1 ^ ... ^ sigma_k`` is the determinant of the Gram matrix
``G[i, j] = h(sigma_i, sigma_j)``.
"""

from dataclasses import dataclass, field
from itertools import combinations

import numpy as np

from . import kernels
from .errors import (
    DegenerateFrame,
    DimensionMismatch,
    NeedRefinement,
    ProjectionDegenerate,
    ZeroSample,
)

DEGENERACY_RTOL = 1e-12
PHASE_JUMP_LIMIT = np.pi / 2
ZERO_SAMPLE_RTOL = 1e-13


@dataclass(frozen=True)
class Frame:
    """Ordered complex frame; ``vectors[:, i]`` is sigma_i."""

    vectors: np.ndarray
    orientation: int = 1

    def __post_init__(self):
        v = np.array(self.vectors, dtype=complex)
        if v.ndim != 2 or v.shape[1] > v.shape[0]:
            raise DimensionMismatch(f"frame must be n x k with k <= n, got shape {v.shape}")
        if self.orientation not in (1, -1):
            raise ValueError("orientation must be +1 or -1")
        v.setflags(write=False)
        object.__setattr__(self, "vectors", v)

    @classmethod
    def from_vectors(cls, vectors, orientation=1):
        return cls(np.column_stack([np.asarray(x, dtype=complex) for x in vectors]), orientation)

    @property
    def n(self):
        return self.vectors.shape[0]

    @property
    def k(self):
        return self.vectors.shape[1]

    def flipped(self):
        return Frame(self.vectors, -self.orientation)


@dataclass(frozen=True)
class HermitianForm:
    matrix: np.ndarray

    def __post_init__(self):
        m = np.array(self.matrix, dtype=complex)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise DimensionMismatch(f"Hermitian form must be square, got {m.shape}")
        scale = max(np.abs(m).max(), 1e-300)
        if np.abs(m - m.conj().T).max() > 1e-12 * scale:
            raise ValueError("matrix is not conjugate-symmetric")
        try:
            np.linalg.cholesky(m)
        except np.linalg.LinAlgError:
            raise ValueError("Hermitian form is not positive definite") from None
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)

    @classmethod
    def identity(cls, n):
        return cls(np.eye(n, dtype=complex))

    @property
    def n(self):
        return self.matrix.shape[0]

    def __call__(self, u, v):
        return np.conj(v) @ self.matrix @ u


@dataclass(frozen=True)
class PhaseTrack:
    """Samples around a closed loop plus their cumulative argument.

    ``unwrapped_angles`` has one more entry than ``samples``: the last entry
    is the angle after wrapping back onto the first sample.
    """

    samples: np.ndarray
    unwrapped_angles: np.ndarray = field(default=None)

    def __post_init__(self):
        s = np.asarray(self.samples, dtype=complex).ravel()
        if s.size < 2:
            raise ValueError("a phase track needs at least two samples")
        object.__setattr__(self, "samples", s)
        if self.unwrapped_angles is None:
            steps = kernels.phase_steps(s)
            ang = np.angle(s[0]) + np.concatenate(([0.0], np.cumsum(steps)))
            object.__setattr__(self, "unwrapped_angles", ang)

    @property
    def steps(self):
        return np.diff(self.unwrapped_angles)


def _check_dims(frame, h):
    if frame.n != h.n:
        raise DimensionMismatch(f"frame vectors have length {frame.n}, metric is {h.n}x{h.n}")


def gram_matrix(frame, h):
    _check_dims(frame, h)
    return kernels.gram(frame.vectors[None], h.matrix[None])[0]


def _degeneracy_floor(gram_diag):
    return DEGENERACY_RTOL * np.prod(np.abs(gram_diag), axis=-1)


def wedge_norm_sq(frame, h):
    """|sigma_1 ^ ... ^ sigma_k|_h^2 as the Gram determinant."""
    g = gram_matrix(frame, h)
    value = float(np.linalg.det(g).real)
    if value <= _degeneracy_floor(np.diagonal(g).real):
        raise DegenerateFrame(f"Gram determinant {value:.3e} is degenerate")
    return value


def wedge_pair_derivative(frame, derivs, h):
    """<nabla(sigma_1 ^ ... ^ sigma_k), sigma_1 ^ ... ^ sigma_k>_h via the Leibniz rule.

    ``derivs`` holds the k covariant derivatives (as columns or a list of
    n-vectors) along one fixed velocity.
    """
    _check_dims(frame, h)
    d = _as_columns(derivs, frame)
    return complex(kernels.wedge_pair_derivative(frame.vectors[None], d[None], h.matrix[None])[0])


def theta_of_velocity(frame, derivs, h):
    """Value of the connection 1-form of sigma_J on one velocity.

    For an h-unitary connection Re<nabla s, s> = d|s|^2 / 2, so the
    normalised section contributes only the imaginary part.
    """
    norm_sq = wedge_norm_sq(frame, h)
    return 1j * wedge_pair_derivative(frame, derivs, h).imag / norm_sq


def _as_columns(derivs, frame):
    d = np.asarray(derivs, dtype=complex)
    if d.shape == frame.vectors.shape:
        return d
    if d.shape == frame.vectors.T.shape:
        return d.T
    raise DimensionMismatch(f"derivatives of shape {d.shape} do not match frame {frame.vectors.shape}")


def theta_batch(frames, derivs, metric):
    """Vectorised :func:`theta_of_velocity` over N samples.

    frames, derivs : (N, n, k); metric : (N, n, n).  Returns (N,) complex.
    """
    frames = np.asarray(frames, dtype=complex)
    derivs = np.asarray(derivs, dtype=complex)
    metric = np.asarray(metric, dtype=complex)
    if frames.shape != derivs.shape or metric.shape[1:] != (frames.shape[1],) * 2:
        raise DimensionMismatch(
            f"inconsistent shapes frames={frames.shape} derivs={derivs.shape} metric={metric.shape}")
    norm_sq = kernels.wedge_norm_sq(frames, metric)
    diag = np.einsum("nai,nab,nbi->ni", frames.conj(), metric, frames).real
    bad = norm_sq <= _degeneracy_floor(diag)
    if np.any(bad):
        raise DegenerateFrame(f"{int(bad.sum())} of {len(bad)} boundary frames are degenerate")
    pair = kernels.wedge_pair_derivative(frames, derivs, metric)
    return 1j * pair.imag / norm_sq


def winding_number(track):
    """Total change of argument / 2 pi around the closed loop."""
    samples = track.samples if isinstance(track, PhaseTrack) else np.asarray(track, dtype=complex).ravel()
    mod = np.abs(samples)
    if mod.max() == 0.0 or np.any(mod < ZERO_SAMPLE_RTOL * mod.max()):
        raise ZeroSample("phase track passes through zero")
    if not isinstance(track, PhaseTrack):
        track = PhaseTrack(samples)
    steps = track.steps
    worst = np.abs(steps).max()
    if worst >= PHASE_JUMP_LIMIT:
        raise NeedRefinement(f"phase jump {worst:.3f} rad exceeds pi/2; refine the loop sampling")
    turns = (track.unwrapped_angles[-1] - track.unwrapped_angles[0]) / (2 * np.pi)
    w = int(np.rint(turns))
    if abs(turns - w) > 1e-9:
        raise NeedRefinement(f"loop is not closed in phase (turns={turns!r})")
    return w


def determinant_track(frames, rel_drop=0.1):
    """Complex determinants of a sampled frame loop, continuous in phase.

    frames : (N, n, k).  For k == n this is the plain determinant.  For k < n
    the determinant of a k x k coordinate minor is used: the minor with the
    largest modulus at the first sample is kept until its modulus falls
    below ``rel_drop`` times its running maximum, at which point a new minor
    is chosen and its phase is stitched onto the previous one.
    """
    frames = np.asarray(frames, dtype=complex)
    N, n, k = frames.shape
    if k == n:
        return kernels.det(frames)
    subsets = list(combinations(range(n), k))
    minors = np.stack([kernels.det(frames[:, list(s), :]) for s in subsets], axis=1)
    mods = np.abs(minors)
    out = np.empty(N, dtype=complex)
    cur = int(np.argmax(mods[0]))
    running = mods[0, cur]
    if running == 0.0:
        raise ProjectionDegenerate("no coordinate minor is nonzero at the anchor sample")
    rot = 1.0 + 0j
    for j in range(N):
        if mods[j, cur] < rel_drop * running:
            new = int(np.argmax(mods[j]))
            if mods[j, new] <= 0.0 or mods[j, new] < rel_drop * running:
                raise ProjectionDegenerate(f"every coordinate minor collapses at sample {j}")
            # keep the stitched phase continuous across the switch
            prev = out[j - 1] if j > 0 else minors[j, cur] * rot
            rot = np.exp(1j * np.angle(prev)) / np.exp(1j * np.angle(minors[j, new]))
            cur = new
            running = mods[j, cur]
        running = max(running, mods[j, cur])
        out[j] = minors[j, cur] * rot
    return out
