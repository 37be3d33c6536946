"""Abstract bundle pairs (E, F) in a fixed trivialisation.

E is presented as the trivial bundle C^k over a reference surface with a
connection ``d + A`` (A a gl(k, C)-valued 1-form) and a Hermitian metric
field H.  Along each boundary loop F is given by a frame-valued map of the
loop parameter.  The Maslov index is computed two ways:

* ``maslov_chern_weil``: (i / pi) (int tr R - oint theta), with tr R = d tr A
  by finite differences and theta the connection form of the normalised
  determinant section sigma_J.
* ``maslov_topological``: winding of det(sigma)^2 / |det(sigma)|^2 around
  each boundary loop (or of the clutching determinant for closed surfaces).
"""

from dataclasses import dataclass, field, replace
from typing import Callable, Optional

import numpy as np

from .domain import DEFAULT_RULE, build_surface, integrate_2form, loop_quadrature
from .errors import (
    DimensionMismatch,
    NeedRefinement,
    NotUnitary,
    RouteDisagreement,
    StepUnderflow,
    UnsupportedInput,
)
from .numerics import PhaseTrack, determinant_track, theta_batch, winding_number
from .polyfield import PolyField

FD_STEP = 1e-4
FRAME_STEP = 1e-3
UNITARY_RTOL = 1e-10


def _charts(chart_of, points):
    return None if chart_of is None else np.asarray(chart_of(points))


@dataclass(frozen=True)
class ConnectionField:
    """Connection coefficients A = sum_c A_c dx^c in reference coordinates.

    ``coeffs(points, charts)`` returns an (N, d, k, k) array.  ``charts`` is
    None for single-chart fields; multi-chart fields (closed surfaces) pick
    the chart from the base point via ``chart_of`` and receive the chart ids.
    """

    k: int
    coeffs: Callable
    unitary: bool = True
    chart_of: Optional[Callable] = None

    @classmethod
    def flat(cls, k, dim=2):
        return cls(k, lambda p, c=None: np.zeros((len(p), dim, k, k), dtype=complex))

    def evaluate(self, points, charts=None):
        points = np.asarray(points, dtype=float)
        if charts is None:
            charts = _charts(self.chart_of, points)
        a = np.asarray(self.coeffs(points, charts), dtype=complex)
        if a.shape != (len(points), points.shape[1], self.k, self.k):
            raise DimensionMismatch(f"connection coefficients have shape {a.shape}")
        return a

    def along(self, points, velocities, charts=None):
        """A(velocity) as (N, k, k)."""
        return np.einsum("nc,ncij->nij", np.asarray(velocities, float), self.evaluate(points, charts))


@dataclass(frozen=True)
class MetricField:
    """Hermitian metric H(p), h(u, v) = v^H H u.

    ``grad(points, charts)`` returns the reference-coordinate derivatives as
    (N, d, k, k); without it, central differences are used and the unitarity
    tolerance is relaxed accordingly.
    """

    k: int
    value: Callable
    grad: Optional[Callable] = None
    chart_of: Optional[Callable] = None

    @classmethod
    def constant(cls, matrix):
        m = np.asarray(matrix, dtype=complex)
        k = m.shape[0]
        return cls(k, lambda p, c=None: np.broadcast_to(m, (len(p), k, k)).copy(),
                   lambda p, c=None: np.zeros((len(p), np.shape(p)[1], k, k), dtype=complex))

    @classmethod
    def identity(cls, k):
        return cls.constant(np.eye(k))

    def at(self, points, charts=None):
        points = np.asarray(points, dtype=float)
        if charts is None:
            charts = _charts(self.chart_of, points)
        return np.asarray(self.value(points, charts), dtype=complex)

    def gradient(self, points, charts=None):
        points = np.asarray(points, dtype=float)
        if charts is None:
            charts = _charts(self.chart_of, points)
        if self.grad is not None:
            return np.asarray(self.grad(points, charts), dtype=complex)
        out = []
        for c in range(points.shape[1]):
            e = np.zeros(points.shape[1])
            e[c] = FD_STEP
            out.append((self.value(points + e, charts) - self.value(points - e, charts)) / (2 * FD_STEP))
        return np.stack(out, axis=1)

    @property
    def rtol(self):
        return UNITARY_RTOL if self.grad is not None else 1e-6


@dataclass(frozen=True)
class TotallyRealBoundaryData:
    """Per boundary loop a frame map t -> (N, n, k) and an orientation sign.

    ``derivatives`` optionally holds the exact t-derivatives of the frame
    maps; without them a finite difference is used.
    """

    frames: tuple
    orientations: tuple = ()
    derivatives: tuple = ()

    def __post_init__(self):
        if not self.orientations:
            object.__setattr__(self, "orientations", (1,) * len(self.frames))
        if len(self.orientations) != len(self.frames):
            raise ValueError("one orientation per boundary loop is required")
        if self.derivatives and len(self.derivatives) != len(self.frames):
            raise ValueError("one derivative per boundary loop is required")

    def frame(self, index, t):
        f = np.asarray(self.frames[index](np.asarray(t, dtype=float)), dtype=complex)
        if self.orientations[index] == -1:
            f = f.copy()
            f[:, :, 0] *= -1
        return f

    def frame_derivative(self, index, t, step=FRAME_STEP):
        """Exact derivative if supplied, else a fourth-order central difference."""
        t = np.asarray(t, dtype=float)
        if self.derivatives:
            d = np.asarray(self.derivatives[index](t), dtype=complex)
            if self.orientations[index] == -1:
                d = d.copy()
                d[:, :, 0] *= -1
            return d
        f = lambda s: self.frame(index, s)
        return (-f(t + 2 * step) + 8 * f(t + step) - 8 * f(t - step) + f(t - 2 * step)) / (12 * step)

    def flipped_orientation(self):
        return TotallyRealBoundaryData(self.frames, tuple(-o for o in self.orientations), self.derivatives)


def _real_span_projector(frame):
    # frame (n, k) complex -> orthogonal projector onto its real span in R^{2n}
    r = np.concatenate([frame.real, frame.imag], axis=0)
    q, _ = np.linalg.qr(r)
    return q @ q.T


def check_periodic(boundary, index, tol=1e-9):
    """Raise unless the frame loop closes up on an oriented span."""
    f0 = boundary.frame(index, np.array([0.0]))[0]
    f1 = boundary.frame(index, np.array([1.0]))[0]
    if np.abs(_real_span_projector(f0) - _real_span_projector(f1)).max() > tol:
        raise ValueError(f"boundary frame {index} is not periodic")
    # f1 = f0 @ G with G real; a negative det G means F is not orientable
    r0 = np.concatenate([f0.real, f0.imag])
    r1 = np.concatenate([f1.real, f1.imag])
    g = np.linalg.lstsq(r0, r1, rcond=None)[0]
    if np.linalg.det(g) < 0:
        raise UnsupportedInput(f"boundary frame {index} reverses orientation: F is not orientable")


@dataclass(frozen=True)
class BundlePair:
    surface: object
    k: int
    connection: ConnectionField
    metric: MetricField = None
    boundary: TotallyRealBoundaryData = field(default_factory=lambda: TotallyRealBoundaryData(()))
    clutching: Optional[Callable] = None  # closed sphere: phi -> (N, k, k), south -> north
    name: str = "pair"

    def __post_init__(self):
        if self.metric is None:
            object.__setattr__(self, "metric", MetricField.identity(self.k))
        if self.connection.k != self.k or self.metric.k != self.k:
            raise DimensionMismatch("connection, metric and rank disagree")
        if len(self.boundary.frames) != len(self.surface.loops):
            raise DimensionMismatch(
                f"{len(self.boundary.frames)} boundary frames for {len(self.surface.loops)} loops")

    def check(self):
        for i in range(len(self.boundary.frames)):
            check_periodic(self.boundary, i)
        return self


# ---------------------------------------------------------------------------
# curvature and boundary connection form
# ---------------------------------------------------------------------------

def curvature_trace(pair, points, u=None, v=None, step=FD_STEP):
    """tr R = d(tr A) evaluated on the tangent pair (u, v); defaults to (e_x, e_y).

    d(alpha)(u, v) = D_u alpha(v) - D_v alpha(u) for constant vector fields,
    with directional central differences of physical length ``step``.
    """
    if step < 1e-9:
        raise StepUnderflow(f"finite-difference step {step} below 1e-9")
    points = np.asarray(points, dtype=float)
    if points.ndim == 1:
        points = points[None]
    n, d = points.shape
    if u is None:
        u = np.broadcast_to(np.eye(d)[0], (n, d))
        v = np.broadcast_to(np.eye(d)[1], (n, d))
    u = np.asarray(u, float)
    v = np.asarray(v, float)
    charts = _charts(pair.connection.chart_of, points)
    conn = pair.connection

    def tr_along(p, vel):
        return np.trace(conn.along(p, vel, charts), axis1=1, axis2=2)

    def directional(w, other):
        nw = np.linalg.norm(w, axis=1, keepdims=True)
        safe = np.where(nw > 0, nw, 1.0)
        off = step * w / safe
        diff = tr_along(points + off, other) - tr_along(points - off, other)
        return diff / (2 * step) * nw[:, 0]

    return directional(u, v) - directional(v, u)


def wedge_trace_residual(pair, points):
    """max |tr(A_x A_y - A_y A_x)| over the probe points (identically zero)."""
    a = pair.connection.evaluate(points)
    if a.shape[1] < 2:
        return 0.0
    comm = a[:, 0] @ a[:, 1] - a[:, 1] @ a[:, 0]
    return float(np.abs(np.trace(comm, axis1=1, axis2=2)).max())


def unitarity_residual(pair, points):
    """Relative residual of dH = H A + A^H H at the probe points."""
    points = np.asarray(points, dtype=float)
    a = pair.connection.evaluate(points)
    h = pair.metric.at(points)
    dh = pair.metric.gradient(points)
    res = dh - (h[:, None] @ a + np.conj(np.swapaxes(a, -1, -2)) @ h[:, None])
    scale = max(1.0, np.abs(h).max() * np.abs(a).max(), np.abs(dh).max())
    return float(np.abs(res).max() / scale)


def check_unitary(pair, points):
    if not pair.connection.unitary:
        raise NotUnitary("connection is not flagged h-unitary")
    res = unitarity_residual(pair, points)
    if res > pair.metric.rtol:
        raise NotUnitary(f"skew-Hermitian residual {res:.2e} exceeds {pair.metric.rtol:.0e}")
    return res


def boundary_theta(pair, index, t, check=True):
    """theta(gamma'(t)) (purely imaginary) at parameters t of boundary loop ``index``."""
    loop = pair.surface.loops[index]
    t = np.asarray(t, dtype=float)
    pos, vel = loop.position(t), loop.velocity(t)
    if check:
        check_unitary(pair, pos[:: max(1, len(pos) // 32)])
    frames = pair.boundary.frame(index, t)
    derivs = pair.boundary.frame_derivative(index, t) + pair.connection.along(pos, vel) @ frames
    return theta_batch(frames, derivs, pair.metric.at(pos))


# ---------------------------------------------------------------------------
# routes
# ---------------------------------------------------------------------------

@dataclass
class RouteResult:
    route: str
    value: float
    components: dict = field(default_factory=dict)


def default_segments(level):
    return 16 * 2 ** int(level)


def maslov_chern_weil(pair, rule=DEFAULT_RULE, segments=None):
    """mu = (i / pi) (int_Sigma tr R - oint theta)."""
    if segments is None:
        segments = default_segments(pair.surface.refinement_level)

    def form(p, u, v):
        return curvature_trace(pair, p, u, v)

    int_curv = complex(integrate_2form(pair.surface, form, rule))
    int_theta = 0j
    t, w = loop_quadrature(segments, rule)
    per_loop = []
    for i in range(len(pair.surface.loops)):
        val = complex(np.sum(w * boundary_theta(pair, i, t)))
        per_loop.append(val)
        int_theta += val
    mu = 1j / np.pi * (int_curv - int_theta)
    return RouteResult("cw", float(mu.real), {
        "int_trR": int_curv,
        "int_theta": int_theta,
        "int_theta_per_loop": per_loop,
        "curvature_term": float((1j / np.pi * int_curv).real),
        "boundary_term": float((-1j / np.pi * int_theta).real),
        "imag_residual": float(abs(mu.imag)),
    })


def stokes_residual(pair, rule=DEFAULT_RULE, segments=None):
    """int_Sigma d(tr A) - sum oint tr A; zero up to discretisation error.

    Uses the curvature trace (tr(A ^ A) vanishes identically), so this also
    exercises the curvature finite differences.
    """
    if segments is None:
        segments = default_segments(pair.surface.refinement_level)
    interior = complex(integrate_2form(pair.surface, lambda p, u, v: curvature_trace(pair, p, u, v), rule))
    t, w = loop_quadrature(segments, rule)
    boundary = 0j
    for loop in pair.surface.loops:
        pos, vel = loop.position(t), loop.velocity(t)
        boundary += complex(np.sum(w * np.trace(pair.connection.along(pos, vel), axis1=1, axis2=2)))
    return interior - boundary


def boundary_windings(pair, samples=512):
    """Winding of det(sigma)^2 / |det|^2 per boundary loop."""
    out = []
    t = np.arange(samples) / samples
    for i in range(len(pair.surface.loops)):
        det = determinant_track(pair.boundary.frame(i, t))
        out.append(winding_number(PhaseTrack((det / np.abs(det)) ** 2)))
    return out


def clutching_winding(pair, samples=512):
    phi = 2 * np.pi * np.arange(samples) / samples
    g = np.asarray(pair.clutching(phi), dtype=complex)
    det = np.linalg.det(g)
    return winding_number(PhaseTrack(det / np.abs(det)))


def maslov_topological(pair, samples=512):
    """Connection-free integer index.

    With boundary: sum over loops of the winding of det(sigma)^2 / |det|^2.
    Closed sphere: twice the winding of det of the clutching function, which
    maps south-chart coefficients to north-chart coefficients along the
    equator parametrised by the azimuth.
    """
    if pair.surface.loops:
        return int(sum(boundary_windings(pair, samples)))
    if pair.clutching is None:
        raise UnsupportedInput("closed surface without a clutching function")
    return 2 * clutching_winding(pair, samples)


def topological_with_refinement(pair, samples=512, max_samples=16384):
    while True:
        try:
            return maslov_topological(pair, samples), samples
        except NeedRefinement:
            if samples >= max_samples:
                raise
            samples *= 2


@dataclass
class MaslovReport:
    mu_by_route: dict
    mu_rounded: int
    residual: float
    components: dict
    tolerance: float
    consistent: bool

    @classmethod
    def assemble(cls, results, tolerance=1e-3, components=None):
        mu = {r.route: float(r.value) for r in results}
        comps = dict(components or {})
        for r in results:
            comps[r.route] = r.components
        values = np.array(list(mu.values()))
        rounded = [int(np.rint(x)) for x in values]
        spread = float(values.max() - values.min()) if len(values) else 0.0
        residual = float(np.abs(values - np.rint(values)).max()) if len(values) else 0.0
        consistent = len(set(rounded)) <= 1 and spread < 2 * tolerance
        return cls(mu, rounded[0] if rounded else 0, residual, comps, tolerance, consistent)

    def require_consistent(self):
        if not self.consistent:
            raise RouteDisagreement(f"routes disagree: {self.mu_by_route}")
        return self


def maslov_report(pair, routes=("cw", "top"), rule=DEFAULT_RULE, segments=None,
                  tolerance=1e-3, samples=512):
    results = []
    if "cw" in routes:
        results.append(maslov_chern_weil(pair, rule, segments))
    if "top" in routes:
        value, used = topological_with_refinement(pair, samples)
        comps = {"samples": used}
        if pair.surface.loops:
            comps["windings"] = boundary_windings(pair, used)
        results.append(RouteResult("top", float(value), comps))
    return MaslovReport.assemble(results, tolerance)


# ---------------------------------------------------------------------------
# derived pairs
# ---------------------------------------------------------------------------

def conjugate_pair(pair):
    """(E-bar, F): conjugate A, H and the frames."""
    conn, met, bd = pair.connection, pair.metric, pair.boundary
    grad = met.grad
    new_conn = ConnectionField(conn.k, lambda p, c=None: np.conj(conn.coeffs(p, c)), conn.unitary, conn.chart_of)
    new_met = MetricField(met.k, lambda p, c=None: np.conj(met.value(p, c)),
                          None if grad is None else (lambda p, c=None: np.conj(grad(p, c))), met.chart_of)
    frames = tuple((lambda f: (lambda t: np.conj(f(t))))(f) for f in bd.frames)
    derivs = tuple((lambda f: (lambda t: np.conj(f(t))))(f) for f in bd.derivatives)
    clutch = pair.clutching
    new_clutch = None if clutch is None else (lambda phi: np.conj(clutch(phi)))
    return replace(pair, connection=new_conn, metric=new_met,
                   boundary=TotallyRealBoundaryData(frames, bd.orientations, derivs),
                   clutching=new_clutch, name=pair.name + "-conj")


def det_pair(pair):
    """(Lambda^k E, Lambda^k F): tr A, det H and the normalised wedge frame."""
    if pair.k == 1:
        return pair
    conn, met, bd = pair.connection, pair.metric, pair.boundary

    def coeffs(p, c=None):
        return np.trace(conn.coeffs(p, c), axis1=2, axis2=3)[..., None, None]

    def hval(p, c=None):
        return np.linalg.det(met.value(p, c))[:, None, None]

    def hgrad(p, c=None):
        h = met.value(p, c)
        dh = met.gradient(p, c)
        # d det H = det H * tr(H^{-1} dH)
        tr = np.einsum("nij,ncji->nc", np.linalg.inv(h), dh)
        return (np.linalg.det(h)[:, None] * tr)[..., None, None]

    def wedge(f):
        def frame(t):
            d = np.linalg.det(f(t))
            return (d / np.abs(d))[:, None, None]
        return frame

    sign = int(np.prod(bd.orientations)) if bd.orientations else 1
    frames = tuple(wedge(f) for f in bd.frames)
    orient = tuple(sign if i == 0 else 1 for i in range(len(frames)))
    clutch = pair.clutching
    return BundlePair(pair.surface, 1, ConnectionField(1, coeffs, conn.unitary, conn.chart_of),
                      MetricField(1, hval, hgrad, met.chart_of),
                      TotallyRealBoundaryData(frames, orient),
                      None if clutch is None else (lambda phi: np.linalg.det(clutch(phi))[:, None, None]),
                      pair.name + "-det")


def flip_orientation(pair):
    """Same bundle pair over the oppositely oriented surface."""
    bd = pair.boundary
    frames = tuple((lambda f: (lambda t: f(1.0 - np.asarray(t, float))))(f) for f in bd.frames)
    derivs = tuple((lambda f: (lambda t: -f(1.0 - np.asarray(t, float))))(f) for f in bd.derivatives)
    clutch = pair.clutching
    return replace(pair, surface=pair.surface.flipped(),
                   boundary=TotallyRealBoundaryData(frames, bd.orientations, derivs),
                   clutching=None if clutch is None else (lambda phi: clutch(-np.asarray(phi))),
                   name=pair.name + "-flip")


def flip_frame_orientation(pair):
    return replace(pair, boundary=pair.boundary.flipped_orientation(), name=pair.name + "-oflip")


def add_connection(pair, extra):
    """Replace A by A + B (B must keep the connection unitary)."""
    conn = pair.connection
    return replace(pair, connection=ConnectionField(
        conn.k, lambda p, c=None: conn.coeffs(p, c) + extra.coeffs(p, c), conn.unitary and extra.unitary,
        conn.chart_of), name=pair.name + "+B")


def change_metric(pair, log_scale, congruence):
    """New metric h'(u, v) = h(Qu, Qv) with Q = exp(f) C, and the h'-unitary
    connection A' = Q^{-1} A Q + Q^{-1} dQ.  Frames and trivialisation are kept.

    log_scale : PolyField (scalar, real), congruence : PolyField (k x k).
    """
    conn, met = pair.connection, pair.metric

    def q_and_dq(p):
        f = np.real(log_scale.value(p))
        e = np.exp(f)[:, None, None]
        cmat = congruence.value(p)
        q = e * cmat
        dq = np.stack([e * (np.real(log_scale.dx(p))[:, None, None] * cmat + congruence.dx(p)),
                       e * (np.real(log_scale.dy(p))[:, None, None] * cmat + congruence.dy(p))], axis=1)
        return q, dq

    def coeffs(p, c=None):
        q, dq = q_and_dq(p)
        qi = np.linalg.inv(q)
        a = conn.coeffs(p, c)
        return qi[:, None] @ a @ q[:, None] + qi[:, None] @ dq

    def hval(p, c=None):
        q, _ = q_and_dq(p)
        return np.conj(np.swapaxes(q, -1, -2)) @ met.value(p, c) @ q

    def hgrad(p, c=None):
        q, dq = q_and_dq(p)
        h = met.value(p, c)[:, None]
        dh = met.gradient(p, c)
        qh = np.conj(np.swapaxes(q, -1, -2))[:, None]
        dqh = np.conj(np.swapaxes(dq, -1, -2))
        return dqh @ h @ q[:, None] + qh @ dh @ q[:, None] + qh @ h @ dq

    grad = hgrad if met.grad is not None else None
    return replace(pair, connection=ConnectionField(conn.k, coeffs, conn.unitary, conn.chart_of),
                   metric=MetricField(met.k, hval, grad, met.chart_of), name=pair.name + "-h")


# ---------------------------------------------------------------------------
# built-in and random pairs
# ---------------------------------------------------------------------------

def _phase(t):
    return np.exp(2j * np.pi * np.asarray(t, float))


def disk_example_pair(level=4):
    """Trivial line bundle over the unit disk, F = tangent line of the circle."""
    surf = build_surface("disk", level)
    frame = lambda t: (1j * _phase(t))[:, None, None]
    deriv = lambda t: (-2 * np.pi * _phase(t))[:, None, None]
    return BundlePair(surf, 1, ConnectionField.flat(1), MetricField.identity(1),
                      TotallyRealBoundaryData((frame,), (), (deriv,)), name="disk_example")


def winding_pair(level=4, k=1, m=1, kind="disk"):
    """Frames e^{i m psi} (e_1, ..., e_k) on every boundary loop, flat connection."""
    surf = build_surface(kind, level)
    eye = np.eye(k)
    frame = lambda t: _phase(t)[:, None, None] ** m * eye
    deriv = lambda t: 2j * np.pi * m * frame(t)
    n = len(surf.loops)
    return BundlePair(surf, k, ConnectionField.flat(k), MetricField.identity(k),
                      TotallyRealBoundaryData((frame,) * n, (), (deriv,) * n), name=f"winding_k{k}_m{m}")


def constant_frame_pair(level=4, k=1):
    return winding_pair(level, k, 0)


def _azimuth_form(p):
    x, y = p[:, 0], p[:, 1]
    rho2 = x * x + y * y
    comp = np.stack([-y / rho2, x / rho2, np.zeros_like(x)], axis=1)
    return comp


def monopole_pair(level=3, degree=1):
    """Degree-d line bundle over the sphere in two charts.

    North chart (z >= 0): A = -(i d / 2)(1 - z/r) dphi; south chart:
    A = (i d / 2)(1 + z/r) dphi.  Total curvature -2 pi i d.
    """
    surf = build_surface("closed_sphere", level)

    def coeffs(p, charts):
        r = np.linalg.norm(p, axis=1)
        cos = p[:, 2] / r
        north = np.asarray(charts) == 0
        fac = np.where(north, -0.5j * degree * (1 - cos), 0.5j * degree * (1 + cos))
        return (fac[:, None] * _azimuth_form(p))[..., None, None]

    chart_of = lambda p: np.where(np.asarray(p)[:, 2] >= 0, 0, 1)
    conn = ConnectionField(1, coeffs, True, chart_of)
    clutch = lambda phi: np.exp(1j * degree * np.asarray(phi))[:, None, None]
    return BundlePair(surf, 1, conn, MetricField.identity(1), TotallyRealBoundaryData(()),
                      clutch, name=f"monopole_d{degree}")


def random_unitary_connection(rng, k, degree=3, scale=0.3):
    """A_c = i * (Hermitian polynomial matrices), skew-Hermitian for h = identity."""
    fx = PolyField.random(rng, (k, k), degree, scale, hermitian=True)
    fy = PolyField.random(rng, (k, k), degree, scale, hermitian=True)
    return ConnectionField(k, lambda p, c=None: 1j * np.stack([fx.value(p), fy.value(p)], axis=1))


def _expm_hermitian(s, eps):
    w, v = np.linalg.eigh(s)
    return (v * np.exp(1j * eps * w)[:, None, :]) @ np.conj(np.swapaxes(v, -1, -2))


def random_frame_loop(rng, k, windings, eps=0.3, real_pert=0.1):
    """Smooth periodic totally real frame loop with det-winding sum(windings).

    frame(t) = diag(e^{i m_j psi}) exp(i eps S(psi)) R(psi), with S Hermitian
    trigonometric and R real with positive determinant.
    """
    windings = np.asarray(windings, dtype=int)
    s = [PolyField.random(rng, (k, k), 0, 1.0, hermitian=True).coeffs[0] for _ in range(3)]
    while True:
        r0 = np.eye(k) + 0.2 * rng.standard_normal((k, k))
        r1, r2 = real_pert * rng.standard_normal((2, k, k))
        psi = 2 * np.pi * np.arange(256) / 256
        rr = r0 + np.cos(psi)[:, None, None] * r1 + np.sin(psi)[:, None, None] * r2
        if np.linalg.det(rr).min() > 0.05:
            break

    def frame(t):
        psi = 2 * np.pi * np.asarray(t, float)
        c, sn = np.cos(psi)[:, None, None], np.sin(psi)[:, None, None]
        herm = s[0] + c * s[1] + sn * s[2]
        u = _expm_hermitian(herm, eps)
        d = np.exp(1j * psi[:, None] * windings[None, :])
        real = r0 + c * r1 + sn * r2
        return d[:, :, None] * (u @ real)

    return frame


def random_pair(rng, level=4, kind="disk", k=None, max_winding=3, max_rank=3):
    """Random unitary polynomial connection and random frame loops.

    Returns (pair, expected) with expected = 2 * total det-winding.
    """
    if k is None:
        k = int(rng.integers(1, max_rank + 1))
    surf = build_surface(kind, level)
    frames, expected = [], 0
    for _ in surf.loops:
        total = int(rng.integers(-max_winding, max_winding + 1))
        parts = np.zeros(k, dtype=int)
        parts[0] = total
        if k > 1:
            shift = rng.integers(-1, 2, size=k - 1)
            parts[1:] += shift
            parts[0] -= shift.sum()
        frames.append(random_frame_loop(rng, k, parts))
        expected += 2 * total
    pair = BundlePair(surf, k, random_unitary_connection(rng, k), MetricField.identity(k),
                      TotallyRealBoundaryData(tuple(frames)), name=f"random_k{k}")
    return pair, expected
