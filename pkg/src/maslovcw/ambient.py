"""Kahler model geometries and immersed surfaces with totally real boundary.

Chart conventions.  A point of M is a complex n-vector z; a real tangent
vector is a complex n-vector X (J is multiplication by i).  ``metric(z)``
returns the Hermitian matrix H with h(X, Y) = Y^H H X and

    g(X, Y) = Re h(X, Y),   omega(X, Y) = g(JX, Y) = -Im h(X, Y),

so flat C^n has H = identity and omega = sum dx ^ dy.  When a Kahler
potential K is given, H = 2 d d-bar K.  The Ricci form is
rho = -i d d-bar log det H, and the Chern connection is
Gamma(X) = H^{-1} (dH/dz)(X).
"""

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .bundlepair import (
    BundlePair,
    ConnectionField,
    MetricField,
    RouteResult,
    TotallyRealBoundaryData,
    maslov_chern_weil,
    topological_with_refinement,
)
from .domain import DEFAULT_RULE, build_surface, integrate_2form, loop_quadrature
from .errors import (
    BoundaryOffConstraint,
    DimensionMismatch,
    MissingAnalyticH,
    RouteDisagreement,
    SingularMetric,
    StepUnderflow,
    UnsupportedInput,
)
from .numerics import theta_batch

FD_STEP = 1e-4
HESS_STEP = 1e-3
JAC_STEP = 1e-3
BOUNDARY_TOL = 1e-8


def _cplx(z):
    z = np.asarray(z, dtype=complex)
    return z[:, None] if z.ndim == 1 else z


def omega(H, X, Y):
    """Kahler form on chart vectors: -Im(Y^H H X).  H (N,n,n), X, Y (N,n)."""
    return -np.einsum("ni,nij,nj->n", np.conj(Y), H, X).imag


# ---------------------------------------------------------------------------
# models
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class KahlerModel:
    name: str
    n: int
    metric: Callable  # z (N, n) -> H (N, n, n)
    metric_dz: Optional[Callable] = None  # z -> (N, n, n, n): [:, l] = dH/dz_l
    potential: Optional[Callable] = None  # z -> K (N,)
    ricci: Optional[Callable] = None  # analytic rho(z, X, Y) -> (N,)
    einstein_constant: Optional[float] = None
    ricci_sign: int = 0  # +1 / -1 when rho is definite, 0 otherwise
    params: dict = field(default_factory=dict)

    def metric_at(self, z):
        return np.asarray(self.metric(_cplx(z)), dtype=complex)

    def dmetric(self, z):
        """dH/dz_l as (N, n, n, n); central differences when not analytic."""
        z = _cplx(z)
        if self.metric_dz is not None:
            return np.asarray(self.metric_dz(z), dtype=complex)
        out = []
        for l in range(self.n):
            e = np.zeros(self.n, dtype=complex)
            e[l] = FD_STEP
            dx = (self.metric(z + e) - self.metric(z - e)) / (2 * FD_STEP)
            dy = (self.metric(z + 1j * e) - self.metric(z - 1j * e)) / (2 * FD_STEP)
            out.append(0.5 * (dx - 1j * dy))
        return np.stack(out, axis=1)


def flat_cn(n=1):
    eye = np.eye(n, dtype=complex)
    return KahlerModel(
        f"flat_C{n}", n,
        metric=lambda z: np.broadcast_to(eye, (len(z), n, n)).copy(),
        metric_dz=lambda z: np.zeros((len(z), n, n, n), dtype=complex),
        potential=lambda z: 0.5 * np.sum(np.abs(z) ** 2, axis=1),
        ricci=lambda z, X, Y: np.zeros(len(z)),
        params={"n": n})


def fubini_study(n=1):
    """Fubini-Study metric on CP^n in the affine chart, potential log(1 + |z|^2)."""
    eye = np.eye(n)

    def metric(z):
        s = 1.0 + np.sum(np.abs(z) ** 2, axis=1)[:, None, None]
        outer = z[:, :, None] * np.conj(z)[:, None, :]
        return 2.0 * (eye / s - outer / s ** 2)

    def metric_dz(z):
        s = 1.0 + np.sum(np.abs(z) ** 2, axis=1)[:, None, None]
        outer = z[:, :, None] * np.conj(z)[:, None, :]
        out = []
        for l in range(n):
            zb = np.conj(z[:, l])[:, None, None]
            el_zh = np.zeros_like(outer)
            el_zh[:, l, :] = np.conj(z)
            out.append(2.0 * (-zb * eye / s ** 2 - el_zh / s ** 2 + 2 * zb * outer / s ** 3))
        return np.stack(out, axis=1)

    c = float(n + 1)
    return KahlerModel(
        f"fubini_study_CP{n}", n, metric, metric_dz,
        potential=lambda z: np.log1p(np.sum(np.abs(z) ** 2, axis=1)),
        ricci=lambda z, X, Y: c * omega(metric(z), X, Y),
        einstein_constant=c, ricci_sign=1, params={"n": n})


def round_sphere(radius=1.0):
    """Round 2-sphere of the given radius in the stereographic chart."""
    a2 = float(radius) ** 2

    def metric(z):
        s = 1.0 + np.abs(z[:, 0]) ** 2
        return (4 * a2 / s ** 2)[:, None, None].astype(complex)

    def metric_dz(z):
        s = 1.0 + np.abs(z[:, 0]) ** 2
        return (-8 * a2 * np.conj(z[:, 0]) / s ** 3)[:, None, None, None]

    c = 1.0 / a2
    return KahlerModel(
        "round_sphere", 1, metric, metric_dz,
        potential=lambda z: 2 * a2 * np.log1p(np.abs(z[:, 0]) ** 2),
        ricci=lambda z, X, Y: c * omega(metric(z), X, Y),
        einstein_constant=c, ricci_sign=1, params={"radius": float(radius)})


def custom_potential(potential, n=1, name="custom_potential", einstein_constant=None):
    """Model defined only by a Kahler potential; everything else by differences."""
    def metric(z):
        return 2.0 * _ddbar(potential, _cplx(z), n)
    return KahlerModel(name, n, metric, None, potential, None, einstein_constant)


def _real_hessian(f, z, dirs, step):
    m = len(dirs)
    hess = np.empty((len(z), m, m))
    f0 = f(z)
    for a in range(m):
        for b in range(a, m):
            if a == b:
                val = (f(z + step * dirs[a]) - 2 * f0 + f(z - step * dirs[a])) / step ** 2
            else:
                val = (f(z + step * (dirs[a] + dirs[b])) - f(z + step * (dirs[a] - dirs[b]))
                       - f(z - step * (dirs[a] - dirs[b])) + f(z - step * (dirs[a] + dirs[b]))) / (4 * step ** 2)
            hess[:, a, b] = hess[:, b, a] = val
    return hess


def _ddbar(f, z, n, step=HESS_STEP):
    """Matrix M[k, j] = d_j d_kbar f by nested central differences.

    The real Hessian is Richardson-extrapolated from steps h and 2h, which
    removes the O(h^2) term.  With this index placement
    h(u, v) = v^H (2M) u for a potential f.
    """
    if step < 1e-9:
        raise StepUnderflow(f"finite-difference step {step} below 1e-9")
    dirs = []
    for l in range(n):
        e = np.zeros(n, dtype=complex)
        e[l] = 1.0
        dirs += [e, 1j * e]
    hess = (4 * _real_hessian(f, z, dirs, step) - _real_hessian(f, z, dirs, 2 * step)) / 3
    xx = hess[:, 0::2, 0::2]
    yy = hess[:, 1::2, 1::2]
    xy = hess[:, 0::2, 1::2]  # [j, k] = d_xj d_yk
    # d_j d_kbar f = 1/4 (f_xjxk + f_yjyk + i (f_xjyk - f_yjxk))
    dd = 0.25 * (xx + yy + 1j * (xy - np.swapaxes(xy, 1, 2)))  # [j, k]
    return np.swapaxes(dd, 1, 2)  # [k, j]


def chern_connection(model, z):
    """Gamma_l = H^{-1} dH/dz_l as (N, n, n, n); Gamma(X) = sum_l X^l Gamma_l."""
    z = _cplx(z)
    H = model.metric_at(z)
    if np.any(np.abs(np.linalg.det(H)) < 1e-300):
        raise SingularMetric(f"{model.name}: metric is singular")
    return np.linalg.solve(H[:, None], model.dmetric(z))


def connection_compatibility_residual(model, z, X):
    """|dH(X) - (H Gamma(X) + Gamma(X)^H H)| with dH(X) from the metric derivative."""
    z, X = _cplx(z), _cplx(X)
    dz = model.dmetric(z)
    dHX = np.einsum("nl,nlij->nij", X, dz)
    dH = dHX + np.conj(np.swapaxes(dHX, 1, 2))
    gam = np.einsum("nl,nlij->nij", X, chern_connection(model, z))
    H = model.metric_at(z)
    return float(np.abs(dH - (H @ gam + np.conj(np.swapaxes(gam, 1, 2)) @ H)).max())


def ricci_form(model, z, X, Y, method="auto"):
    """rho(X, Y) = -i d d-bar log det H evaluated on chart vectors.

    ``method``: "analytic" (model-provided), "fd" (nested central
    differences), or "auto" (analytic when available).
    """
    z, X, Y = _cplx(z), _cplx(X), _cplx(Y)
    if method == "analytic" or (method == "auto" and model.ricci is not None):
        if model.ricci is None:
            raise UnsupportedInput(f"{model.name} has no analytic Ricci form")
        return np.asarray(model.ricci(z, X, Y), dtype=float)
    logdet = lambda w: np.log(np.linalg.det(model.metric_at(w)).real)
    m = _ddbar(logdet, z, model.n)  # m[k, j] = d_j d_kbar log det H
    # rho(X, Y) = -i sum F_jk (X^j conj(Y^k) - Y^j conj(X^k)),  F_jk = m[k, j]
    a = np.einsum("nkj,nj,nk->n", m, X, np.conj(Y))
    b = np.einsum("nkj,nj,nk->n", m, Y, np.conj(X))
    return (-1j * (a - b)).real


def gaussian_curvature(model, z, step=HESS_STEP):
    """Gauss curvature of a conformal metric g = H |dz|^2 (n = 1): -Lap(log H) / (2H)."""
    if model.n != 1:
        raise DimensionMismatch("gaussian_curvature needs complex dimension 1")
    z = _cplx(z)
    logh = lambda w: np.log(model.metric_at(w)[:, 0, 0].real)
    lap = (logh(z + step) + logh(z - step) + logh(z + 1j * step) + logh(z - 1j * step)
           - 4 * logh(z)) / step ** 2
    return -lap / (2 * model.metric_at(z)[:, 0, 0].real)


def check_model(model, probes, rtol=1e-6):
    """Return named residuals of the model invariants on chart probe points."""
    z = _cplx(probes)
    out = {}
    H = model.metric_at(z)
    out["min_eigenvalue"] = float(np.linalg.eigvalsh(H).min())
    if model.potential is not None:
        ref = 2.0 * _ddbar(model.potential, z, model.n)
        out["potential_residual"] = float(np.abs(ref - H).max() / np.abs(H).max())
    if model.einstein_constant is not None:
        rng = np.random.default_rng(7)
        X = rng.standard_normal((len(z), model.n)) + 1j * rng.standard_normal((len(z), model.n))
        Y = rng.standard_normal((len(z), model.n)) + 1j * rng.standard_normal((len(z), model.n))
        rho = ricci_form(model, z, X, Y, method="fd")
        om = omega(H, X, Y)
        out["einstein_residual"] = float(np.abs(rho - model.einstein_constant * om).max()
                                         / max(1.0, np.abs(om).max()))
    return out


# ---------------------------------------------------------------------------
# immersions and constraints
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ChartCurve:
    """Closed curve t in [0, 1) -> chart coordinates (the image of a boundary loop)."""

    position: Callable
    velocity: Callable

    def acceleration(self, t, step=JAC_STEP):
        t = np.asarray(t, float)
        v = self.velocity
        return (-v(t + 2 * step) + 8 * v(t + step) - 8 * v(t - step) + v(t - 2 * step)) / (12 * step)


@dataclass(frozen=True)
class ImmersedSurface:
    """Map iota from a reference surface into chart coordinates.

    ``map(points, charts)`` -> (N, n) complex; ``jacobian(points, charts)``
    -> (N, n, d) complex with column c = d iota / dx^c.
    """

    surface: object
    n: int
    map: Callable
    jacobian: Optional[Callable] = None
    chart_of: Optional[Callable] = None
    clutching: Optional[Callable] = None
    name: str = "immersion"

    def charts(self, points):
        return None if self.chart_of is None else np.asarray(self.chart_of(points))

    def at(self, points, charts=None):
        points = np.asarray(points, float)
        if charts is None:
            charts = self.charts(points)
        return _cplx(self.map(points, charts))

    def jac(self, points, charts=None):
        points = np.asarray(points, float)
        if charts is None:
            charts = self.charts(points)
        if self.jacobian is not None:
            return np.asarray(self.jacobian(points, charts), dtype=complex)
        cols = []
        h = JAC_STEP
        for c in range(points.shape[1]):
            e = np.zeros(points.shape[1])
            e[c] = h
            f = lambda s: self.at(points + s * e / h, charts)
            cols.append((-f(2 * h) + 8 * f(h) - 8 * f(-h) + f(-2 * h)) / (12 * h))
        return np.stack(cols, axis=2)

    def push(self, points, vectors, charts=None):
        return np.einsum("nic,nc->ni", self.jac(points, charts), np.asarray(vectors, float))

    def boundary_curve(self, index):
        loop = self.surface.loops[index]
        return ChartCurve(lambda t: self.at(loop.position(np.asarray(t, float))),
                          lambda t: self.push(loop.position(np.asarray(t, float)),
                                              loop.velocity(np.asarray(t, float))))

    def immersion_rank_ok(self, points, tol=1e-8):
        j = self.jac(points)
        real = np.concatenate([j.real, j.imag], axis=1)
        sv = np.linalg.svd(real, compute_uv=False)
        return bool(np.all(sv[:, 1] > tol * np.maximum(1.0, sv[:, 0])))


def planar_immersion(surface, scale=1.0, name="planar"):
    """z = scale * (x + i y) into a one-dimensional chart."""
    s = complex(scale)
    return ImmersedSurface(
        surface, 1,
        lambda p, c=None: s * (p[:, 0] + 1j * p[:, 1])[:, None],
        lambda p, c=None: np.broadcast_to(np.array([[s, 1j * s]]), (len(p), 1, 2)).copy(),
        name=name)


def torus_disk_immersion(surface, radii=(1.0, 1.0), scale=1.0, second_winding=0,
                         wobble=0.0, name="torus_disk"):
    """Disk into C^2 with boundary on the product torus {|z_j| = scale * r_j}.

    z_1 = scale r_1 (x + i y); z_2 = scale r_2 (x + i y)^w e^{i wobble y}
    (w = second_winding, 0 gives a constant second factor on the boundary
    circle).  For w = 0 and wobble = 0 the image is a flat disk.
    """
    r1, r2 = scale * radii[0], scale * radii[1]
    w = int(second_winding)

    def m(p, c=None):
        q = p[:, 0] + 1j * p[:, 1]
        z2 = r2 * q ** w * np.exp(1j * wobble * p[:, 1])
        return np.stack([r1 * q, z2], axis=1)

    def jac(p, c=None):
        q = p[:, 0] + 1j * p[:, 1]
        ew = np.exp(1j * wobble * p[:, 1])
        dq = w * q ** (w - 1) if w > 0 else np.zeros_like(q)
        d2x = r2 * dq * ew
        d2y = r2 * (1j * dq * ew + q ** w * 1j * wobble * ew)
        one = np.ones_like(q)
        return np.stack([np.stack([r1 * one, 1j * r1 * one], axis=1),
                         np.stack([d2x, d2y], axis=1)], axis=1)

    return ImmersedSurface(surface, 2, m, jac, name=name)


def bumped(immersed, rng, amplitude=0.1, degree=2, name=None):
    """Interior perturbation iota + amplitude (1 - |p|^2)^2 q(p) V; boundary data fixed.

    Only for reference disks of radius 1 (the bump vanishes to second order
    on the unit circle).
    """
    coeffs = rng.standard_normal((degree + 1, degree + 1))
    vec = rng.standard_normal(immersed.n) + 1j * rng.standard_normal(immersed.n)
    vec = amplitude * vec / np.abs(vec).max()
    base = immersed.map
    coeffs = coeffs / np.abs(coeffs).sum()

    def m(p, c=None):
        r2 = p[:, 0] ** 2 + p[:, 1] ** 2
        q = np.polynomial.polynomial.polyval2d(p[:, 0], p[:, 1], coeffs)
        return base(p, c) + ((1 - r2) ** 2 * q)[:, None] * vec

    return ImmersedSurface(immersed.surface, immersed.n, m, None, immersed.chart_of,
                           immersed.clutching, name or immersed.name + "-bumped")


def cp1_sphere_immersion(level=3):
    """Identity S^2 -> CP^1 in two orientation-preserving stereographic charts.

    chart 0 (z3 >= 0): w = (x + i y) / (1 + z3); chart 1: u = (x - i y) / (1 - z3).
    On the overlap w = 1/u, so tangent coefficients transform by dw/du = -u^-2;
    on the equator u = e^{-i phi}, giving the clutching -e^{2 i phi}.
    """
    surf = build_surface("closed_sphere", level)

    def m(p, charts):
        q = p / np.linalg.norm(p, axis=1, keepdims=True)
        north = np.asarray(charts) == 0
        w = np.where(north, (q[:, 0] + 1j * q[:, 1]) / (1 + q[:, 2]),
                     (q[:, 0] - 1j * q[:, 1]) / (1 - q[:, 2]))
        return w[:, None]

    chart_of = lambda p: np.where(np.asarray(p)[:, 2] >= 0, 0, 1)
    clutch = lambda phi: (-np.exp(2j * np.asarray(phi)))[:, None, None]
    return ImmersedSurface(surf, 1, m, None, chart_of, clutch, name="cp1_sphere")


@dataclass(frozen=True)
class TotallyRealConstraint:
    name: str
    n: int
    tangent_frame: Callable  # z (N, n) -> (N, n, n)
    distance: Callable  # z -> (N,) chart distance to L
    is_lagrangian: bool = True
    mean_curvature: Optional[Callable] = None  # z -> (N, n) chart vector
    soliton_constant: Optional[float] = None
    rho_lagrangian: bool = False
    params: dict = field(default_factory=dict)
    frame_differential: Optional[Callable] = None  # (z, zdot) -> d(frame) along zdot

    def frame_along(self, curve, t):
        """Frames on the curve and their t-derivatives."""
        t = np.asarray(t, float)
        z = _cplx(curve.position(t))
        frames = self.tangent_frame(z)
        if self.frame_differential is not None:
            return frames, self.frame_differential(z, _cplx(curve.velocity(t)))
        F = lambda s: self.tangent_frame(_cplx(curve.position(s)))
        h = JAC_STEP
        return frames, (-F(t + 2 * h) + 8 * F(t + h) - 8 * F(t - h) + F(t - 2 * h)) / (12 * h)


def flat_circle(radius=1.0):
    """Circle |z| = r in flat C: a self-shrinker with H = -z / r^2."""
    r = float(radius)
    return TotallyRealConstraint(
        "circle", 1,
        lambda z: (1j * z)[:, :, None],
        lambda z: np.abs(np.abs(z[:, 0]) - r),
        True, lambda z: -z / r ** 2, -1.0 / r ** 2, True, {"radius": r},
        lambda z, v: (1j * v)[:, :, None])


def flat_torus(radii=(1.0, 1.0)):
    """Product torus {|z_j| = r_j} in flat C^n; H = -(z_j / r_j^2)_j."""
    radii = np.asarray(radii, float)
    equal = np.allclose(radii, radii[0])
    return TotallyRealConstraint(
        "torus", len(radii),
        lambda z: np.einsum("nj,jk->njk", 1j * z, np.eye(len(radii))),
        lambda z: np.abs(np.abs(z) - radii).max(axis=1),
        True, lambda z: -z / radii ** 2,
        -1.0 / radii[0] ** 2 if equal else None, False, {"radii": radii.tolist()},
        lambda z, v: np.einsum("nj,jk->njk", 1j * v, np.eye(len(radii))))


def real_plane(n=1):
    """R^n inside C^n: constant frame, so Omega_J is parallel and xi_J = 0."""
    eye = np.eye(n, dtype=complex)
    return TotallyRealConstraint(
        "real_plane", n,
        lambda z: np.broadcast_to(eye, (len(z), n, n)).copy(),
        lambda z: np.abs(z.imag).max(axis=1),
        True, lambda z: np.zeros_like(z), None, False, {"n": n},
        lambda z, v: np.zeros((len(z), n, n), dtype=complex))


def sphere_latitude(colatitude=np.pi / 2, radius=1.0):
    """Latitude circle of the round sphere: |z| = tan(colatitude / 2) in the chart.

    H = -(cot(colatitude) / radius) nu with nu the unit normal pointing away
    from the chart origin.
    """
    R = float(np.tan(colatitude / 2))
    a = float(radius)
    kappa = np.cos(colatitude) / np.sin(colatitude) / a

    def H(z):
        s = 1.0 + np.abs(z[:, 0]) ** 2
        lam = 2 * a / s  # |dz| -> length
        nu = z[:, 0] / np.abs(z[:, 0]) / lam
        return (-kappa * nu)[:, None]

    return TotallyRealConstraint(
        "latitude", 1,
        lambda z: (1j * z)[:, :, None],
        lambda z: np.abs(np.abs(z[:, 0]) - R),
        True, H, None, True, {"colatitude": float(colatitude), "chart_radius": R},
        lambda z, v: (1j * v)[:, :, None])


def check_constraint(model, constraint, z, tol=1e-9):
    """Named residuals of the constraint invariants at chart points on L."""
    z = _cplx(z)
    out = {}
    F = constraint.tangent_frame(z)
    H = model.metric_at(z)
    gram = np.conj(np.swapaxes(F, 1, 2)) @ H @ F
    out["min_wedge_norm_sq"] = float(np.abs(np.linalg.det(gram)).min())
    lag = 0.0
    for i in range(constraint.n):
        for j in range(constraint.n):
            lag = max(lag, float(np.abs(omega(H, F[:, :, i], F[:, :, j])).max()))
    out["lagrangian_residual"] = lag
    if constraint.soliton_constant is not None and constraint.mean_curvature is not None:
        c = constraint.soliton_constant
        Hv = constraint.mean_curvature(z)
        res = 0.0
        for i in range(constraint.n):
            X = F[:, :, i]
            lam = 0.5 * np.sum(np.conj(z) * X, axis=1).imag  # (1/2)(x dy - y dx)
            res = max(res, float(np.abs(omega(H, Hv, X) - 2 * c * lam).max()))
        out["soliton_residual"] = res
    return out


# ---------------------------------------------------------------------------
# pullback pair and geometric quantities
# ---------------------------------------------------------------------------

def pullback_pair(model, immersed, constraint, samples=256, boundary_tol=BOUNDARY_TOL):
    """E = iota^* TM with the Chern connection, F = TL along the boundary."""
    surf = immersed.surface
    if constraint is None:
        if surf.loops:
            raise UnsupportedInput("a surface with boundary needs a totally real constraint")
        constraint = TotallyRealConstraint("none", model.n, None, None)
    if immersed.n != model.n or constraint.n != model.n:
        raise DimensionMismatch("model, immersion and constraint dimensions disagree")
    t = np.arange(samples) / samples
    for i, loop in enumerate(surf.loops):
        off = constraint.distance(immersed.at(loop.position(t)))
        if np.max(off) > boundary_tol:
            raise BoundaryOffConstraint(
                f"boundary loop {i} leaves {constraint.name} by {np.max(off):.2e}")

    def coeffs(p, charts):
        z = immersed.at(p, charts)
        gam = chern_connection(model, z)
        return np.einsum("nlc,nlij->ncij", immersed.jac(p, charts), gam)

    def hval(p, charts):
        return model.metric_at(immersed.at(p, charts))

    def hgrad(p, charts):
        dz = model.dmetric(immersed.at(p, charts))
        dHc = np.einsum("nlc,nlij->ncij", immersed.jac(p, charts), dz)
        return dHc + np.conj(np.swapaxes(dHc, -1, -2))

    def frame_of(loop):
        return lambda s: constraint.tangent_frame(immersed.at(loop.position(np.asarray(s, float))))

    def deriv_of(i):
        return lambda s: constraint.frame_along(immersed.boundary_curve(i), s)[1]

    frames = tuple(frame_of(lp) for lp in surf.loops)
    derivs = ()
    if constraint.frame_differential is not None:
        derivs = tuple(deriv_of(i) for i in range(len(surf.loops)))
    return BundlePair(surf, model.n, ConnectionField(model.n, coeffs, True, immersed.chart_of),
                      MetricField(model.n, hval, hgrad, immersed.chart_of),
                      TotallyRealBoundaryData(frames, (), derivs), immersed.clutching,
                      name=f"{model.name}:{immersed.name}:{constraint.name}")


def xi_J(model, constraint, curve, t):
    """Maslov 1-form on the curve velocity; i xi_J = -theta, i.e. xi_J = -Im theta."""
    t = np.asarray(t, float)
    z, v = _cplx(curve.position(t)), _cplx(curve.velocity(t))
    frames, dF = constraint.frame_along(curve, t)
    gam = np.einsum("nl,nlij->nij", v, chern_connection(model, z))
    theta = theta_batch(frames, dF + gam @ frames, model.metric_at(z))
    return -theta.imag


def lagrangian_boundary_term(model, constraint, curve, segments=256, rule=DEFAULT_RULE):
    """oint omega(H, .) along the curve from the analytic mean curvature."""
    if not constraint.is_lagrangian or constraint.mean_curvature is None:
        raise MissingAnalyticH(f"{constraint.name} has no analytic mean curvature")
    t, w = loop_quadrature(segments, rule)
    z, v = _cplx(curve.position(t)), _cplx(curve.velocity(t))
    return float(np.sum(w * omega(model.metric_at(z), constraint.mean_curvature(z), v)))


def geodesic_curvature_term(model, curve, segments=256, rule=DEFAULT_RULE):
    """oint k ds for a boundary curve in a Kahler curve (n = 1).

    With D = nabla_X X for the velocity X: k ds = Im h(D, X) / h(X, X) dt.
    """
    if model.n != 1:
        raise DimensionMismatch("geodesic curvature needs complex dimension 1")
    t, w = loop_quadrature(segments, rule)
    z, X = _cplx(curve.position(t)), _cplx(curve.velocity(t))
    acc = _cplx(curve.acceleration(t))
    gam = np.einsum("nl,nlij->nij", X, chern_connection(model, z))
    D = acc + np.einsum("nij,nj->ni", gam, X)
    H = model.metric_at(z)
    hDX = np.einsum("ni,nij,nj->n", np.conj(X), H, D)
    hXX = np.einsum("ni,nij,nj->n", np.conj(X), H, X).real
    return float(np.sum(w * hDX.imag / hXX))


def _pulled_form(immersed, fn):
    def form(p, u, v):
        charts = immersed.charts(p)
        z = immersed.at(p, charts)
        return fn(z, immersed.push(p, u, charts), immersed.push(p, v, charts))
    return form


def rho_integral(model, immersed, rule=DEFAULT_RULE, method="auto"):
    return float(integrate_2form(immersed.surface,
                                 _pulled_form(immersed, lambda z, X, Y: ricci_form(model, z, X, Y, method)),
                                 rule))


def symplectic_area(model, immersed, rule=DEFAULT_RULE):
    return float(integrate_2form(immersed.surface,
                                 _pulled_form(immersed, lambda z, X, Y: omega(model.metric_at(z), X, Y)),
                                 rule))


def gauss_curvature_integral(model, immersed, rule=DEFAULT_RULE):
    """int K dA via the conformal-factor formula (n = 1)."""
    def form(z, X, Y):
        return gaussian_curvature(model, z) * omega(model.metric_at(z), X, Y)
    return float(integrate_2form(immersed.surface, _pulled_form(immersed, form), rule))


@dataclass
class GeometricMaslovReport:
    mu_geometric: float
    mu_pullback_cw: float
    mu_topological: int
    mu_rounded: int
    residual: float
    consistent: bool
    integrals: dict

    @property
    def mu_by_route(self):
        return {"geom": self.mu_geometric, "cw": self.mu_pullback_cw, "top": float(self.mu_topological)}


def maslov_geometric(model, immersed, constraint, rule=DEFAULT_RULE, segments=None,
                     tolerance=1e-3, strict=True, ricci_method="auto"):
    """mu_L = (1/pi) int rho - (1/pi) oint xi_J, next to the pullback Chern-Weil and
    topological routes on the same pair."""
    surf = immersed.surface
    if segments is None:
        segments = 16 * 2 ** surf.refinement_level
    pair = pullback_pair(model, immersed, constraint)
    int_rho = rho_integral(model, immersed, rule, ricci_method)
    t, w = loop_quadrature(segments, rule)
    xi = [float(np.sum(w * xi_J(model, constraint, immersed.boundary_curve(i), t)))
          for i in range(len(surf.loops))]
    mu_geom = (int_rho - sum(xi)) / np.pi
    cw = maslov_chern_weil(pair, rule, segments)
    top, _ = topological_with_refinement(pair)
    integrals = {
        "rho_area": int_rho,
        "rho_term": int_rho / np.pi,
        "xi_per_loop": xi,
        "xi_term": -sum(xi) / np.pi,
        "alpha_L": symplectic_area(model, immersed, rule),
        "cw": cw.components,
    }
    if constraint is not None and constraint.is_lagrangian and constraint.mean_curvature is not None \
            and surf.loops:
        integrals["boundary_H_term"] = sum(
            lagrangian_boundary_term(model, constraint, immersed.boundary_curve(i), segments, rule)
            for i in range(len(surf.loops)))
    values = np.array([mu_geom, cw.value, float(top)])
    rounded = np.rint(values).astype(int)
    spread = float(values.max() - values.min())
    consistent = bool(len(set(rounded.tolist())) == 1 and spread < 2 * tolerance)
    report = GeometricMaslovReport(float(mu_geom), float(cw.value), int(top), int(rounded[2]),
                                   float(np.abs(values - rounded).max()), consistent, integrals)
    if strict and not consistent:
        raise RouteDisagreement(f"geometric routes disagree: {report.mu_by_route}")
    return report


def geometric_routes(report):
    """The report as a list of RouteResult rows (for tabulation)."""
    comps = report.integrals
    return [
        RouteResult("geom", report.mu_geometric,
                    {"curvature_term": comps["rho_term"], "boundary_term": comps["xi_term"]}),
        RouteResult("cw", report.mu_pullback_cw, comps["cw"]),
        RouteResult("top", float(report.mu_topological), {}),
    ]


def monotonicity_report(model, immersed, constraint, report=None, **kw):
    """Named residual lines for the monotonicity statements that apply.

    kahler_einstein : pi mu - c alpha_L + oint omega(H, .)  (needs c and analytic H)
    soliton         : mu + (2 c_sol / pi) alpha_L           (needs c_sol)
    rho_area / mu_over_rho_area : emitted for rho-Lagrangian constraints in a
    model with definite Ricci form.
    """
    if report is None:
        report = maslov_geometric(model, immersed, constraint, **kw)
    mu = report.mu_geometric
    alpha = report.integrals["alpha_L"]
    lines = {"mu": mu, "alpha_L": alpha}
    c = model.einstein_constant
    if constraint is None:
        return lines
    if c is not None and constraint.is_lagrangian and "boundary_H_term" in report.integrals:
        lines["kahler_einstein"] = np.pi * mu - c * alpha + report.integrals["boundary_H_term"]
    if constraint.soliton_constant is not None:
        lines["soliton"] = mu + 2 * constraint.soliton_constant / np.pi * alpha
    if constraint.rho_lagrangian and model.ricci_sign != 0:
        lines["rho_area"] = report.integrals["rho_area"]
        lines["mu_over_rho_area"] = mu / report.integrals["rho_area"]
    return lines


def gauss_bonnet_report(model, immersed, constraint=None, rule=DEFAULT_RULE, segments=None):
    """(1/pi)(int K dA + oint k ds) next to 2 chi (n = 1 surfaces with boundary)."""
    from .domain import euler_characteristic
    surf = immersed.surface
    if segments is None:
        segments = 16 * 2 ** surf.refinement_level
    int_k = gauss_curvature_integral(model, immersed, rule)
    int_kg = sum(geodesic_curvature_term(model, immersed.boundary_curve(i), segments, rule)
                 for i in range(len(surf.loops)))
    return {"int_K": int_k, "int_kg": int_kg, "gauss_bonnet": (int_k + int_kg) / np.pi,
            "two_chi": 2 * euler_characteristic(surf)}
