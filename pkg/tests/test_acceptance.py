"""Acceptance criteria 1-12, each at its stated tolerance.

Every test prints exactly one ``ACCEPTANCE <n> PASS|FAIL`` line (repeated in
the terminal summary) before asserting.
"""

import json

import numpy as np

from conftest import ACCEPTANCE_LINES
from maslovcw import ambient as am
from maslovcw import bundlepair as bp
from maslovcw import cli
from maslovcw.domain import build_surface, loop_quadrature
from maslovcw.polyfield import PolyField
from maslovcw.schema import build_geometry, builtin_path, load_scenarios


def verdict(n, ok, detail):
    line = f"ACCEPTANCE {n} {'PASS' if ok else 'FAIL'}: {detail}"
    print(line)
    ACCEPTANCE_LINES.append(line)
    assert ok, line


def by_route(rows):
    return {r.route: r for r in rows}


def test_01_disk_normalization():
    rows = cli.run_scenario("disk_example", levels=[5])
    routes = by_route(rows)
    ok = set(routes) == {"cw", "top", "geom"} and all(r.mu_rounded == 2 for r in rows) \
        and max(r.residual for r in rows) < 1e-6
    verdict(1, ok, f"mu={[r.mu_rounded for r in rows]} max residual={max(r.residual for r in rows):.2e} (<1e-6)")


def test_02_integrality_and_oracle_agreement():
    rows = cli.run_scenario("random")
    cw = {r.scenario: r for r in rows if r.route == "cw"}
    top = {r.scenario: r for r in rows if r.route == "top"}
    agree = sum(cw[s].mu_rounded == top[s].mu_rounded for s in cw)
    worst = max(r.residual for r in cw.values())
    ok = len(cw) == 50 and agree == 50 and worst < 1e-3
    verdict(2, ok, f"{agree}/{len(cw)} rounded cw == topological, max raw residual={worst:.2e} (<1e-3)")


def test_03_independence_suite():
    rng = np.random.default_rng(3)
    worst_shift, negations, cases = 0.0, 0, 0
    for _ in range(4):
        pair, expected = bp.random_pair(rng, 4, "disk")
        base = bp.maslov_chern_weil(pair).value
        extra = bp.random_unitary_connection(rng, pair.k, scale=0.5)
        f = PolyField.random(rng, (), 2, 0.3, complex_=False)
        c = PolyField.random(rng, (pair.k, pair.k), 1, 0.2)
        c.coeffs[0] += np.eye(pair.k)
        for other in (bp.add_connection(pair, extra), bp.change_metric(pair, f, c), bp.flip_frame_orientation(pair)):
            worst_shift = max(worst_shift, abs(bp.maslov_chern_weil(other).value - base))
        for other in (bp.flip_orientation(pair), bp.conjugate_pair(pair)):
            cases += 1
            negations += int(np.rint(bp.maslov_chern_weil(other).value) == -np.rint(base) == -expected)
    ok = worst_shift < 1e-3 and negations == cases
    verdict(3, ok, f"max |delta mu| under connection/metric/frame-orientation change={worst_shift:.2e} (<1e-3), "
                   f"negated {negations}/{cases}")


def test_04_stokes_and_trace_identities():
    rng = np.random.default_rng(4)
    conn = bp.random_unitary_connection(rng, 3, scale=0.4)
    frames = lambda t: np.broadcast_to(np.eye(3, dtype=complex), (len(t), 3, 3)).copy()
    probes = rng.uniform(-0.7, 0.7, (64, 2))
    hs, res = [], []
    wedge = 0.0
    for lv in range(2, 6):
        surf = build_surface("disk", lv)
        pair = bp.BundlePair(surf, 3, conn, boundary=bp.TotallyRealBoundaryData((frames,)))
        wedge = max(wedge, bp.wedge_trace_residual(pair, probes))
        res.append(abs(bp.stokes_residual(pair)))
        hs.append(surf.h)
    order = cli.fit_order(hs, res)
    ok = wedge < 1e-10 and order >= 1.9
    verdict(4, ok, f"|tr(A^A)|={wedge:.1e} (<1e-10), Stokes residuals {['%.1e' % r for r in res]}, "
                   f"fitted order={order:.3f} (>=1.9)")


def test_05_gauss_bonnet_caps():
    rows = cli.run_scenario("caps", levels=[4])
    ok, worst = True, 0.0
    for sc in ("caps/sixth", "caps/third", "caps/half"):
        rs = {r.route: r for r in rows if r.scenario == sc}
        ok &= all(r.mu_rounded == 2 for r in rs.values())
        dev = max(abs(rs["gauss_bonnet"].mu_raw - rs["geom"].mu_raw), abs(rs["gauss_bonnet"].mu_raw - 2))
        worst = max(worst, dev)
    ok &= worst < 1e-3
    verdict(5, ok, f"mu = 2 = 2 chi at colatitudes pi/6, pi/3, pi/2; |(int K + oint k)/pi - mu|={worst:.2e} (<1e-3)")


def test_06_closed_cp1():
    rows = cli.run_scenario("cp1_closed", levels=[4])
    routes = by_route(rows)
    sc = load_scenarios("cp1_closed")[0]
    model, immersed, _ = build_geometry(sc, 4)
    fd = am.rho_integral(model, immersed, method="fd") / np.pi
    res = max(routes["geom"].residual, abs(fd - 4))
    ok = all(r.mu_rounded == 4 for r in rows) and res < 1e-3
    verdict(6, ok, f"mu={[r.mu_rounded for r in rows]}, (1/pi) int rho analytic={routes['geom'].mu_raw:.9f} "
                   f"finite-difference={fd:.9f}, residual={res:.2e} (<1e-3)")


def _oint_xi_over_pi(sc, level=4):
    model, immersed, constraint = build_geometry(sc, level)
    t, w = loop_quadrature(16 * 2 ** level)
    return float(np.sum(w * am.xi_J(model, constraint, immersed.boundary_curve(0), t))) / np.pi


def test_07_ricci_flat_quantization():
    vals = {sc.id: _oint_xi_over_pi(sc) for name in ("torus_disk", "shrinker") for sc in load_scenarios(name)}
    dist = max(abs(v - round(v)) for v in vals.values())
    torus = [vals[f"torus_disk/t{t}"] for t in ("0.5", "1", "2")]
    circle = [vals[f"shrinker/r{t}"] for t in ("0.5", "1", "2")]
    spread = max(np.ptp(torus), np.ptp(circle))
    ok = dist < 1e-3 and spread < 1e-3
    verdict(7, ok, f"(1/pi) oint xi_J distance to integers={dist:.1e} (<1e-3), spread over t in "
                   f"(0.5, 1, 2)={spread:.1e}; torus {round(torus[0])}, circle {round(circle[0])}")


def test_08_kahler_einstein_monotonicity():
    rows = cli.run_scenario("hemisphere", levels=[4])
    r = by_route(rows)["geom"]
    line = r.lines["kahler_einstein"]
    sc = load_scenarios("hemisphere")[0]
    model, immersed, constraint = build_geometry(sc, 4)
    h_term = am.lagrangian_boundary_term(model, constraint, immersed.boundary_curve(0))
    ok = (abs(line) < 1e-3 and all(x.mu_rounded == 2 for x in rows) and model.einstein_constant == 1.0
          and abs(r.alpha_L - 2 * np.pi) < 1e-3 and abs(h_term) < 1e-12)
    verdict(8, ok, f"pi mu - c alpha_L + oint omega(H,.)={line:.1e} (+-1e-3), mu=2, c=1, "
                   f"alpha_L-2pi={r.alpha_L - 2 * np.pi:.1e}, oint omega(H,.)={h_term:.1e}")


def test_09_soliton_monotonicity():
    rows = cli.run_scenario("shrinker", levels=[4])
    lines = {r.scenario: r.lines["soliton"] for r in rows if r.route == "geom"}
    worst = max(abs(v) for v in lines.values())
    ok = len(lines) == 3 and worst < 1e-3 and all(r.mu_rounded == 2 for r in rows)
    verdict(9, ok, f"mu + (2 c_sol/pi) alpha_L for r=0.5,1,2: max |.|={worst:.1e} (+-1e-3), mu=2")


def test_10_lagrangian_cross_check():
    worst = 0.0
    for sc in load_scenarios("torus_disk"):
        model, immersed, constraint = build_geometry(sc, 4)
        curve = immersed.boundary_curve(0)
        t, w = loop_quadrature(256)
        xi = float(np.sum(w * am.xi_J(model, constraint, curve, t)))
        h_term = am.lagrangian_boundary_term(model, constraint, curve, segments=256)
        worst = max(worst, abs(h_term - xi))
    ok = worst < 1e-4
    verdict(10, ok, f"max |oint omega(H,.) - oint xi_J| over torus scenarios={worst:.1e} (<1e-4)")


def test_11_deformation_invariance():
    base = json.loads(builtin_path("deformed_torus").read_text())
    mus, raws = [], []
    for seed in range(10):
        d = json.loads(json.dumps(base))
        d["immersion"]["bump"]["seed"] = seed
        geom = by_route(cli.run_scenario(d))["geom"]
        mus.append(geom.mu_rounded)
        raws.append(geom.mu_raw)
    ok = all(m == 2 for m in mus) and max(abs(r - 2) for r in raws) < 1e-3
    verdict(11, ok, f"rounded mu over 10 bumped torus disks={sorted(set(mus))}, max |mu - 2|={max(abs(r - 2) for r in raws):.1e}")


def test_12_determinism():
    texts = []
    for _ in range(2):
        rows = cli.run_scenario("random", seed=987654321) + cli.run_scenario("deformed_torus")
        texts.append(cli.strip_wall_time(cli.emit_csv(rows)))
    ok = texts[0] == texts[1]
    verdict(12, ok, f"two runs with seed 987654321 give identical CSV without wall_ms ({len(texts[0])} bytes)")
