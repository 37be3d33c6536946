import numpy as np
import pytest

from maslovcw import ambient as am
from maslovcw import bundlepair as bp
from maslovcw.domain import build_surface, loop_quadrature
from maslovcw.errors import BoundaryOffConstraint, MissingAnalyticH, RouteDisagreement


def cvec(rng, N, n):
    return rng.standard_normal((N, n)) + 1j * rng.standard_normal((N, n))


# --- models -----------------------------------------------------------------

def test_flat_connection_vanishes(rng):
    z = cvec(rng, 5, 2)
    assert np.abs(am.chern_connection(am.flat_cn(2), z)).max() == 0.0


def test_fubini_study_connection_at_origin_and_at_one():
    fs = am.fubini_study(1)
    assert np.abs(am.chern_connection(fs, np.array([[0j]]))).max() < 1e-15
    # oracle: g = (1 + |z|^2)^-2, Gamma = g^-1 dg/dz by central differences at z = 1
    g = lambda z: (1 + abs(z) ** 2) ** -2
    h = 1e-5
    dgdz = 0.5 * ((g(1 + h) - g(1 - h)) - 1j * (g(1 + 1j * h) - g(1 - 1j * h))) / (2 * h)
    oracle = dgdz / g(1.0)
    got = am.chern_connection(fs, np.array([[1.0 + 0j]]))[0, 0, 0, 0]
    assert got == pytest.approx(oracle, abs=1e-6)
    assert got == pytest.approx(-1.0, abs=1e-12)


@pytest.mark.parametrize("model", [am.fubini_study(1), am.fubini_study(2), am.round_sphere(1.5),
                                   am.custom_potential(lambda z: np.log1p(np.sum(np.abs(z) ** 2, axis=1)), 2)])
def test_connection_compatibility(model, rng):
    z = 0.7 * cvec(rng, 6, model.n)
    X = cvec(rng, 6, model.n)
    assert am.connection_compatibility_residual(model, z, X) < 1e-8


def test_analytic_metric_derivative_matches_differences(rng):
    fs = am.fubini_study(2)
    z = 0.6 * cvec(rng, 4, 2)
    numeric = am.KahlerModel("fd", 2, fs.metric).dmetric(z)
    assert np.abs(numeric - fs.dmetric(z)).max() < 1e-7


@pytest.mark.parametrize("model", [am.flat_cn(2), am.fubini_study(1), am.fubini_study(2), am.round_sphere(1.0),
                                   am.round_sphere(2.0)])
def test_model_invariants(model, rng):
    z = 0.7 * cvec(rng, 8, model.n)
    res = am.check_model(model, z)
    assert res["min_eigenvalue"] > 0
    if "potential_residual" in res:
        assert res["potential_residual"] < 1e-6
    if "einstein_residual" in res:
        assert res["einstein_residual"] < 1e-6


def test_ricci_oracles(rng):
    z = 0.7 * cvec(rng, 8, 1)
    X, Y = cvec(rng, 8, 1), cvec(rng, 8, 1)
    assert np.abs(am.ricci_form(am.flat_cn(1), z, X, Y, method="fd")).max() < 1e-8
    # rho = 2 omega_FS; round sphere radius a: rho = omega / a^2
    fs = am.fubini_study(1)
    om = am.omega(fs.metric_at(z), X, Y)
    assert np.abs(am.ricci_form(fs, z, X, Y, method="fd") - 2 * om).max() < 1e-6
    sph = am.round_sphere(2.0)
    om = am.omega(sph.metric_at(z), X, Y)
    assert np.abs(am.ricci_form(sph, z, X, Y, method="fd") - om / 4).max() < 1e-6
    assert sph.einstein_constant == pytest.approx(0.25)


def test_conformal_gauss_curvature_oracle(rng):
    z = 0.7 * cvec(rng, 8, 1)
    assert np.allclose(am.gaussian_curvature(am.round_sphere(1.0), z), 1.0, atol=1e-6)
    assert np.allclose(am.gaussian_curvature(am.round_sphere(3.0), z), 1 / 9, atol=1e-6)


def bumpy_model():
    # K = |z|^2 / 2 + a |z1|^4 + b |z1 z2|^2, metric H = 2 d dbar K by hand
    a, b = 0.1, 0.05
    K = lambda z: 0.5 * np.sum(np.abs(z) ** 2, axis=1) + a * np.abs(z[:, 0]) ** 4 + b * np.abs(z[:, 0] * z[:, 1]) ** 2

    def metric(z):
        z1, z2 = z[:, 0], z[:, 1]
        H = np.zeros((len(z), 2, 2), dtype=complex)
        H[:, 0, 0] = 1 + 8 * a * np.abs(z1) ** 2 + 2 * b * np.abs(z2) ** 2
        H[:, 1, 1] = 1 + 2 * b * np.abs(z1) ** 2
        H[:, 0, 1] = 2 * b * z1 * np.conj(z2)
        H[:, 1, 0] = 2 * b * z2 * np.conj(z1)
        return H

    return am.KahlerModel("bumpy", 2, metric, potential=K)


def test_bumpy_metric_matches_potential(rng):
    m = bumpy_model()
    assert am.check_model(m, 0.6 * cvec(rng, 6, 2))["potential_residual"] < 1e-6


def test_ricci_form_antisymmetric_and_J_invariant(rng):
    m = bumpy_model()
    z = 0.5 * cvec(rng, 6, 2)
    X, Y = cvec(rng, 6, 2), cvec(rng, 6, 2)
    r = am.ricci_form(m, z, X, Y)
    assert np.abs(r + am.ricci_form(m, z, Y, X)).max() < 1e-12
    assert np.abs(r - am.ricci_form(m, z, 1j * X, 1j * Y)).max() < 1e-9


def test_ricci_form_closed(rng):
    # d rho(X, Y, Z) = X rho(Y, Z) - Y rho(X, Z) + Z rho(X, Y) for constant fields
    m = bumpy_model()
    z = 0.4 * cvec(rng, 4, 2)
    X, Y, Z = cvec(rng, 4, 2), cvec(rng, 4, 2), cvec(rng, 4, 2)
    h = 1e-3

    def D(W, A, B):
        return (am.ricci_form(m, z + h * W, A, B) - am.ricci_form(m, z - h * W, A, B)) / (2 * h)

    d_rho = D(X, Y, Z) - D(Y, X, Z) + D(Z, X, Y)
    assert np.abs(d_rho).max() < 1e-5


def test_custom_potential_reproduces_fubini_study(rng):
    custom = am.custom_potential(lambda z: np.log1p(np.sum(np.abs(z) ** 2, axis=1)), 2)
    z = 0.6 * cvec(rng, 5, 2)
    fs = am.fubini_study(2)
    assert np.abs(custom.metric_at(z) - fs.metric_at(z)).max() < 1e-6


# --- constraints ------------------------------------------------------------

@pytest.mark.parametrize("model,constraint,points", [
    (am.flat_cn(1), am.flat_circle(2.0), lambda t: 2.0 * np.exp(2j * np.pi * t)[:, None]),
    (am.flat_cn(2), am.flat_torus((1.0, 1.0)),
     lambda t: np.stack([np.exp(2j * np.pi * t), np.exp(6j * np.pi * t)], axis=1)),
    (am.flat_cn(2), am.flat_torus((1.0, 0.5)),
     lambda t: np.stack([np.exp(2j * np.pi * t), 0.5 * np.exp(-2j * np.pi * t)], axis=1)),
    (am.round_sphere(1.0), am.sphere_latitude(np.pi / 3), lambda t: np.tan(np.pi / 6) * np.exp(2j * np.pi * t)[:, None]),
])
def test_constraint_invariants(model, constraint, points):
    z = points(np.linspace(0, 1, 9, endpoint=False))
    assert constraint.distance(z).max() < 1e-12
    res = am.check_constraint(model, constraint, z)
    assert res["min_wedge_norm_sq"] > 1e-6
    assert res["lagrangian_residual"] < 1e-9
    if "soliton_residual" in res:
        assert res["soliton_residual"] < 1e-6


# --- pullback pair and boundary terms ---------------------------------------

def test_pullback_of_flat_disk_is_the_disk_example():
    surf = build_surface("disk", 3)
    pair = am.pullback_pair(am.flat_cn(1), am.planar_immersion(surf), am.flat_circle(1.0))
    ref = bp.disk_example_pair(3)
    t = np.linspace(0, 1, 17)
    assert np.allclose(bp.boundary_theta(pair, 0, t), bp.boundary_theta(ref, 0, t), atol=1e-14)
    assert bp.maslov_topological(pair) == 2


def test_boundary_off_constraint():
    surf = build_surface("disk", 2)
    with pytest.raises(BoundaryOffConstraint):
        am.pullback_pair(am.flat_cn(1), am.planar_immersion(surf, 1.001), am.flat_circle(1.0))


def test_P_identity(rng):
    # 2 i tr R = 2 rho on pulled-back tangent pairs
    surf = build_surface("spherical_cap_domain", 2, colatitude=np.pi / 3)
    model = am.round_sphere(1.0)
    im = am.planar_immersion(surf)
    pair = am.pullback_pair(model, im, am.sphere_latitude(np.pi / 3))
    p = 0.5 * rng.uniform(-1, 1, (10, 2))
    u, v = rng.standard_normal((2, 10, 2))
    lhs = 2j * bp.curvature_trace(pair, p, u, v)
    rhs = 2 * am.ricci_form(model, im.at(p), im.push(p, u), im.push(p, v))
    assert np.abs(lhs - rhs).max() < 1e-5


def test_xi_on_unit_circle():
    surf = build_surface("disk", 2)
    curve = am.planar_immersion(surf).boundary_curve(0)
    t = np.linspace(0, 1, 11)
    # xi(d/dpsi) = -1, and d/dt = 2 pi d/dpsi
    assert np.allclose(am.xi_J(am.flat_cn(1), am.flat_circle(1.0), curve, t), -2 * np.pi, atol=1e-12)


def test_xi_vanishes_for_parallel_frame():
    curve = am.ChartCurve(lambda t: np.stack([np.cos(2 * np.pi * t), np.sin(2 * np.pi * t)], axis=1) + 0j,
                          lambda t: 2 * np.pi * np.stack([-np.sin(2 * np.pi * t), np.cos(2 * np.pi * t)], axis=1) + 0j)
    t = np.linspace(0, 1, 11)
    assert np.abs(am.xi_J(am.flat_cn(2), am.real_plane(2), curve, t)).max() < 1e-14


def _oint_xi(model, constraint, curve, segments=256):
    t, w = loop_quadrature(segments)
    return float(np.sum(w * am.xi_J(model, constraint, curve, t)))


@pytest.mark.parametrize("scale", [0.5, 1.0, 2.0])
def test_xi_invariant_under_rescaling(scale):
    surf = build_surface("disk", 1)
    im = am.torus_disk_immersion(surf, (1.0, 0.7), scale)
    val = _oint_xi(am.flat_cn(2), am.flat_torus((scale, 0.7 * scale)), im.boundary_curve(0))
    assert val == pytest.approx(-2 * np.pi, abs=1e-9)


def test_xi_homotopy_invariance_on_torus():
    surf = build_surface("disk", 1)
    c = am.flat_torus((1.0, 0.7))
    vals = [_oint_xi(am.flat_cn(2), c, am.torus_disk_immersion(surf, (1.0, 0.7), 1.0, 1, wob).boundary_curve(0))
            for wob in (0.0, 0.3, 0.9)]
    assert np.ptp(vals) < 1e-9


@pytest.mark.parametrize("r", [0.3, 1.0, 4.0])
def test_mean_curvature_term_of_circle(r):
    surf = build_surface("disk", 1)
    curve = am.planar_immersion(surf, r).boundary_curve(0)
    model, c = am.flat_cn(1), am.flat_circle(r)
    val = am.lagrangian_boundary_term(model, c, curve)
    assert val == pytest.approx(-2 * np.pi, rel=1e-12)
    assert abs(val - _oint_xi(model, c, curve)) < 1e-4


def test_mean_curvature_term_of_torus_and_equator():
    surf = build_surface("disk", 1)
    im = am.torus_disk_immersion(surf, (1.0, 0.7))
    assert am.lagrangian_boundary_term(am.flat_cn(2), am.flat_torus((1.0, 0.7)), im.boundary_curve(0)) \
        == pytest.approx(-2 * np.pi, rel=1e-12)
    eq = am.planar_immersion(build_surface("spherical_cap_domain", 1, colatitude=np.pi / 2)).boundary_curve(0)
    assert abs(am.lagrangian_boundary_term(am.round_sphere(1.0), am.sphere_latitude(np.pi / 2), eq)) < 1e-12
    no_h = am.TotallyRealConstraint("no_h", 1, lambda z: (1j * z)[:, :, None], lambda z: 0 * z[:, 0].real)
    with pytest.raises(MissingAnalyticH):
        am.lagrangian_boundary_term(am.flat_cn(1), no_h, eq)


@pytest.mark.parametrize("colat,expected", [(np.pi / 3, np.pi), (np.pi / 2, 0.0), (np.pi / 6, 2 * np.pi * np.cos(np.pi / 6))])
def test_geodesic_curvature_of_latitudes(colat, expected):
    surf = build_surface("spherical_cap_domain", 1, colatitude=colat)
    val = am.geodesic_curvature_term(am.round_sphere(1.0), am.planar_immersion(surf).boundary_curve(0))
    assert val == pytest.approx(expected, abs=1e-8)


def test_geodesic_curvature_of_unit_circle():
    surf = build_surface("disk", 1)
    assert am.geodesic_curvature_term(am.flat_cn(1), am.planar_immersion(surf).boundary_curve(0)) \
        == pytest.approx(2 * np.pi, rel=1e-9)


# --- geometric route and reports --------------------------------------------

def test_geometric_route_disk():
    surf = build_surface("disk", 3)
    rep = am.maslov_geometric(am.flat_cn(1), am.planar_immersion(surf), am.flat_circle(1.0))
    assert rep.mu_rounded == 2 and rep.consistent
    # flat model: the boundary term carries everything
    assert rep.integrals["rho_term"] == 0.0
    assert rep.integrals["xi_term"] == pytest.approx(2.0, abs=1e-12)


def test_geometric_route_hemisphere_sign():
    surf = build_surface("spherical_cap_domain", 3, colatitude=np.pi / 2)
    rep = am.maslov_geometric(am.round_sphere(1.0), am.planar_immersion(surf), am.sphere_latitude(np.pi / 2))
    assert rep.mu_geometric > 0 and rep.mu_rounded == 2
    assert abs(rep.integrals["xi_term"]) < 1e-12


def test_closed_cp1():
    im = am.cp1_sphere_immersion(3)
    rep = am.maslov_geometric(am.fubini_study(1), im, None)
    assert rep.mu_rounded == 4
    assert rep.integrals["rho_area"] == pytest.approx(4 * np.pi, abs=1e-5)
    # the finite-difference Ricci form gives the same integral
    fd = am.rho_integral(am.fubini_study(1), im, method="fd")
    assert fd / np.pi == pytest.approx(4.0, abs=1e-3)


def test_route_disagreement_is_raised():
    # a cap domain whose boundary sits on the latitude, but tolerance far below discretisation error
    surf = build_surface("spherical_cap_domain", 1, colatitude=np.pi / 2)
    args = (am.round_sphere(1.0), am.planar_immersion(surf), am.sphere_latitude(np.pi / 2))
    rep = am.maslov_geometric(*args, tolerance=1e-12, strict=False)
    assert not rep.consistent
    with pytest.raises(RouteDisagreement):
        am.maslov_geometric(*args, tolerance=1e-12)


def test_monotonicity_lines():
    surf = build_surface("disk", 2)
    torus = am.monotonicity_report(am.flat_cn(2), am.torus_disk_immersion(surf, (1.0, 0.7)),
                                   am.flat_torus((1.0, 0.7)))
    assert set(torus) == {"mu", "alpha_L"}
    shrink = am.monotonicity_report(am.flat_cn(1), am.planar_immersion(surf, 2.0), am.flat_circle(2.0))
    assert "soliton" in shrink and "kahler_einstein" not in shrink
    cap = build_surface("spherical_cap_domain", 2, colatitude=np.pi / 3)
    lines = am.monotonicity_report(am.round_sphere(1.0), am.planar_immersion(cap), am.sphere_latitude(np.pi / 3))
    assert {"kahler_einstein", "rho_area", "mu_over_rho_area"} <= set(lines)
    assert abs(lines["kahler_einstein"]) < 1e-9


def test_deformation_keeps_mu_on_sphere(rng):
    # interior bump of a hemisphere: rho is not zero, the boundary is fixed
    surf = build_surface("spherical_cap_domain", 4, colatitude=np.pi / 2)
    base = am.planar_immersion(surf)
    model, c = am.round_sphere(1.0), am.sphere_latitude(np.pi / 2)
    ref = am.maslov_geometric(model, base, c).mu_geometric
    im = am.bumped(base, rng, 0.1)
    assert im.immersion_rank_ok(surf.vertices[::7])
    rep = am.maslov_geometric(model, im, c)
    assert rep.mu_rounded == 2
    assert abs(rep.mu_geometric - ref) < 1e-3


def test_gauss_bonnet_report():
    surf = build_surface("spherical_cap_domain", 3, colatitude=np.pi / 3)
    gb = am.gauss_bonnet_report(am.round_sphere(1.0), am.planar_immersion(surf))
    assert gb["two_chi"] == 2
    assert gb["gauss_bonnet"] == pytest.approx(2.0, abs=1e-3)
