"""Command-line front end: run scenarios, print reports, write CSV."""

import argparse
import csv
import io
import math
import sys
import time
from dataclasses import dataclass, field

import numpy as np

from . import ambient, bundlepair
from .errors import InputError, MaslovError, NumericalError, ValidationError
from .schema import ROUTES, builtin_names, build_geometry, build_pairs, load_scenarios

CSV_HEADER = ("scenario", "route", "refinement", "mu_raw", "mu_rounded", "residual",
              "int_curvature", "int_boundary", "alpha_L", "wall_ms")
ZERO_RESIDUAL = 1e-12

# informational monotonicity lines (not residuals)
_INFO_LINES = ("mu", "alpha_L", "rho_area", "mu_over_rho_area")


@dataclass
class ReportRow:
    scenario: str
    route: str
    refinement: int
    mu_raw: float
    mu_rounded: int
    residual: float
    int_curvature: float = math.nan
    int_boundary: float = math.nan
    alpha_L: float = math.nan
    wall_ms: float = 0.0
    consistent: bool = True
    tolerance: float = 1e-3
    lines: dict = field(default_factory=dict)

    @classmethod
    def make(cls, scenario, route, level, raw, **kw):
        raw = float(raw)
        rounded = int(np.rint(raw))
        return cls(scenario, route, int(level), raw, rounded, abs(raw - rounded), **kw)


def _fmt(x):
    if isinstance(x, float):
        return "" if math.isnan(x) else repr(x)
    return str(x)


def emit_csv(rows, path=None):
    """Write rows (input order) as UTF-8 CSV; returns the text.

    Floats are written with ``repr`` so that reading them back with
    ``float`` reproduces the values bit for bit; missing values are empty.
    """
    if not rows:
        raise ValueError("emit_csv needs at least one row")
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_HEADER)
    for r in rows:
        w.writerow([_fmt(getattr(r, k)) for k in CSV_HEADER])
    text = buf.getvalue()
    if path is not None:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    return text


def read_csv(path):
    """Inverse of :func:`emit_csv` for the CSV columns."""
    out = []
    with open(path, encoding="utf-8", newline="") as fh:
        for rec in csv.DictReader(fh):
            f = lambda k: math.nan if rec[k] == "" else float(rec[k])
            out.append(ReportRow(rec["scenario"], rec["route"], int(rec["refinement"]), f("mu_raw"),
                                 int(rec["mu_rounded"]), f("residual"), f("int_curvature"),
                                 f("int_boundary"), f("alpha_L"), f("wall_ms")))
    return out


def strip_wall_time(text):
    """CSV text without the wall_ms column (for determinism comparisons)."""
    lines = []
    for rec in csv.reader(io.StringIO(text)):
        lines.append(",".join(rec[:-1]))
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# running
# ---------------------------------------------------------------------------

def _abstract_rows(sc, level, routes):
    rows = []
    pairs = build_pairs(sc, level)
    for idx, (pair, expected) in enumerate(pairs):
        sid = sc.id if len(pairs) == 1 else f"{sc.id}#{idx}"
        t0 = time.perf_counter()
        results = {}
        if "cw" in routes:
            results["cw"] = bundlepair.maslov_chern_weil(pair)
        if "top" in routes:
            results["top"] = bundlepair.RouteResult("top", float(bundlepair.topological_with_refinement(pair)[0]))
        ms = 1e3 * (time.perf_counter() - t0)
        for route, res in results.items():
            c = res.components
            rows.append(ReportRow.make(sid, route, level, res.value,
                                       int_curvature=c.get("curvature_term", math.nan),
                                       int_boundary=c.get("boundary_term", math.nan),
                                       wall_ms=ms, tolerance=sc.tolerance,
                                       lines={"expected": expected}))
    return rows


def _immersed_rows(sc, level, routes):
    model, immersed, constraint = build_geometry(sc, level)
    t0 = time.perf_counter()
    rep = ambient.maslov_geometric(model, immersed, constraint, tolerance=sc.tolerance, strict=False)
    lines = ambient.monotonicity_report(model, immersed, constraint, rep) if sc.kind == "monotonicity" else {}
    gb = ambient.gauss_bonnet_report(model, immersed) if sc.kind == "gauss_bonnet" else None
    ms = 1e3 * (time.perf_counter() - t0)
    alpha = rep.integrals["alpha_L"]
    comps = {
        "geom": (rep.mu_geometric, rep.integrals["rho_term"], rep.integrals["xi_term"]),
        "cw": (rep.mu_pullback_cw, rep.integrals["cw"]["curvature_term"], rep.integrals["cw"]["boundary_term"]),
        "top": (float(rep.mu_topological), math.nan, math.nan),
    }
    rows = [ReportRow.make(sc.id, r, level, comps[r][0], int_curvature=comps[r][1], int_boundary=comps[r][2],
                           alpha_L=alpha, wall_ms=ms, tolerance=sc.tolerance, lines=dict(lines))
            for r in ROUTES if r in routes]
    if gb is not None:
        rows.append(ReportRow.make(sc.id, "gauss_bonnet", level, gb["gauss_bonnet"],
                                   int_curvature=gb["int_K"] / math.pi, int_boundary=gb["int_kg"] / math.pi,
                                   alpha_L=alpha, wall_ms=ms, tolerance=sc.tolerance))
    return rows


def _mark_consistency(rows):
    """Rows of one scenario (and pair) share a rounded value or are all flagged."""
    groups = {}
    for r in rows:
        groups.setdefault(r.scenario, []).append(r)
    for grp in groups.values():
        ok = len({r.mu_rounded for r in grp}) == 1
        expected = grp[0].lines.get("expected")
        if expected is not None and grp[0].mu_rounded != expected:
            ok = False
        for r in grp:
            r.consistent = ok
    return rows


def run_scenario(source, levels=None, routes=None, tolerance=None, seed=None):
    """Run every case of a scenario file; one row per (case, route, level).

    ``levels``, ``routes``, ``tolerance`` and ``seed`` override the file.
    """
    rows = []
    for sc in load_scenarios(source, seed):
        if tolerance is not None:
            sc.tolerance = float(tolerance)
        lv = tuple(levels) if levels is not None else sc.levels
        if lv and (min(lv) < 0 or max(lv) > 6):
            raise ValidationError(f"{sc.id}: refinement levels {lv} outside [0, 6]")
        rts = tuple(routes) if routes is not None else sc.routes
        for level in lv:
            try:
                if sc.immersed:
                    rows.extend(_immersed_rows(sc, level, rts))
                else:
                    rows.extend(_abstract_rows(sc, level, rts))
            except MaslovError as exc:
                raise type(exc)(f"scenario {sc.id}, level {level}: {exc}") from exc
    return _mark_consistency(rows)


def failures(rows):
    """Human-readable reasons why the rows break the exit-code contract.

    Residuals and monotonicity lines are checked at the finest level of
    each scenario; route agreement is checked at every level.
    """
    out = []
    finest = {}
    for r in rows:
        finest[r.scenario] = max(finest.get(r.scenario, -1), r.refinement)
    for r in rows:
        if not r.consistent:
            out.append(f"{r.scenario} level {r.refinement}: routes disagree after rounding")
        if r.refinement != finest[r.scenario]:
            continue
        if r.residual >= r.tolerance:
            out.append(f"{r.scenario} {r.route} level {r.refinement}: residual {r.residual:.3e} >= {r.tolerance:g}")
        for name, val in r.lines.items():
            if name in _INFO_LINES or name == "expected":
                continue
            if abs(val) >= r.tolerance:
                out.append(f"{r.scenario} level {r.refinement}: {name} line {val:.3e} >= {r.tolerance:g}")
    return sorted(set(out), key=out.index)


def fit_order(hs, residuals):
    """Least-squares slope of log(residual) against log(h).

    Returns inf when every residual is at roundoff level (below 1e-12),
    nan when fewer than two usable points remain.
    """
    hs = np.asarray(hs, float)
    res = np.abs(np.asarray(residuals, float))
    if np.all(res < ZERO_RESIDUAL):
        return math.inf
    keep = res >= 1e-15
    if keep.sum() < 2:
        return math.nan
    return float(np.polyfit(np.log(hs[keep]), np.log(res[keep]), 1)[0])


def convergence_study(source, levels, routes=None, seed=None, error="residual"):
    """Rows over ascending levels plus a fitted order per (case, route).

    ``error`` chooses what is fitted: "residual" (|raw - rounded|).
    """
    levels = list(levels)
    if len(levels) < 3 or sorted(levels) != levels:
        raise ValidationError("convergence_study needs at least three ascending levels")
    rows = run_scenario(source, levels=levels, routes=routes, seed=seed)
    hs = {}
    for sc in load_scenarios(source, seed):
        for lv in levels:
            if sc.immersed:
                hs[(sc.id, lv)] = build_geometry(sc, lv)[1].surface.h
            else:
                hs[(sc.id, lv)] = build_pairs(sc, lv)[0][0].surface.h
    series = {}
    for r in rows:
        base = r.scenario.split("#")[0]
        series.setdefault((r.scenario, r.route), ([], []))
        series[(r.scenario, r.route)][0].append(hs[(base, r.refinement)])
        series[(r.scenario, r.route)][1].append(r.residual)
    return rows, {key: fit_order(h, e) for key, (h, e) in series.items()}


# ---------------------------------------------------------------------------
# entry point
# ---------------------------------------------------------------------------

def _parse_levels(text):
    try:
        a, b = text.split("..")
        return list(range(int(a), int(b) + 1))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected A..B, got {text!r}") from None


def _parse_routes(text):
    routes = [r.strip() for r in text.split(",") if r.strip()]
    bad = [r for r in routes if r not in ROUTES]
    if bad:
        raise argparse.ArgumentTypeError(f"unknown routes {bad}; choose from {list(ROUTES)}")
    return routes


def build_parser():
    p = argparse.ArgumentParser(prog="maslovcw", description="Maslov indices by Chern-Weil integrals.")
    p.add_argument("--scenario", help="scenario JSON file or built-in name")
    p.add_argument("--routes", type=_parse_routes, help="comma-separated subset of cw,top,geom")
    lv = p.add_mutually_exclusive_group()
    lv.add_argument("--refine", type=int, help="single refinement level")
    lv.add_argument("--levels", type=_parse_levels, help="level range A..B (three or more levels also fit orders)")
    p.add_argument("--csv", help="write rows to this CSV file")
    p.add_argument("--tol", type=float, help="override the scenario tolerance")
    p.add_argument("--seed", type=int, help="64-bit seed for randomised scenarios")
    p.add_argument("--list-builtins", action="store_true", help="list bundled scenarios and exit")
    return p


def _print_rows(rows, out):
    out.write(f"{'scenario':<28} {'route':<13} {'lvl':>3} {'mu_raw':>20} {'mu':>4} {'residual':>10}\n")
    for r in rows:
        flag = "" if r.consistent else "  INCONSISTENT"
        out.write(f"{r.scenario:<28} {r.route:<13} {r.refinement:>3} {r.mu_raw:>20.12f} "
                  f"{r.mu_rounded:>4d} {r.residual:>10.2e}{flag}\n")
    shown = set()
    for r in rows:
        key = (r.scenario, r.refinement)
        if key in shown or not any(k != "expected" for k in r.lines):
            continue
        shown.add(key)
        body = ", ".join(f"{k}={v:.6g}" for k, v in r.lines.items() if k != "expected")
        out.write(f"  {r.scenario} level {r.refinement}: {body}\n")


def main(argv=None):
    args = build_parser().parse_args(argv)
    if args.list_builtins:
        for name in builtin_names():
            print(name)
        return 0
    if not args.scenario:
        print("error: --scenario is required (or --list-builtins)", file=sys.stderr)
        return 2
    levels = [args.refine] if args.refine is not None else args.levels
    try:
        if levels is not None and len(levels) >= 3:
            rows, orders = convergence_study(args.scenario, levels, args.routes, args.seed)
        else:
            rows, orders = run_scenario(args.scenario, levels, args.routes, args.tol, args.seed), {}
        if args.tol is not None:
            for r in rows:
                r.tolerance = args.tol
        _print_rows(rows, sys.stdout)
        for (sid, route), order in orders.items():
            print(f"  order {sid} {route}: {order:.3f}")
        if args.csv:
            emit_csv(rows, args.csv)
    except InputError as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return 2
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3
    except OSError as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return 2
    bad = failures(rows)
    for line in bad:
        print(f"FAIL {line}", file=sys.stderr)
    return 1 if bad else 0


if __name__ == "__main__":
    sys.exit(main())
