import json
import math

import numpy as np
import pytest

from maslovcw import cli
from maslovcw.errors import DegenerateFrame, ParseError, ValidationError
from maslovcw.schema import SCHEMA, builtin_names, builtin_path, load_scenarios


def write(tmp_path, obj, name="s.json"):
    p = tmp_path / name
    p.write_text(obj if isinstance(obj, str) else json.dumps(obj))
    return p


def trivial_scenario(**extra):
    d = {"schema": SCHEMA, "id": "trivial", "kind": "abstract", "levels": [1, 3], "routes": ["cw", "top"],
         "pair": {"name": "winding", "m": 0, "k": 2}}
    d.update(extra)
    return d


def test_builtins_listed():
    names = builtin_names()
    for n in ("disk_example", "hemisphere", "caps", "cp1_closed", "torus_disk", "shrinker", "random", "monopole"):
        assert n in names


def test_disk_example_rows():
    rows = cli.run_scenario("disk_example", levels=[3])
    assert {r.route for r in rows} == {"cw", "top", "geom"}
    assert all(r.mu_rounded == 2 and r.consistent for r in rows)
    assert all(r.residual < 1e-6 for r in rows)


def test_hemisphere_rows():
    rows = cli.run_scenario("hemisphere", levels=[3])
    assert all(r.mu_rounded == 2 for r in rows)
    assert abs(rows[0].lines["kahler_einstein"]) < 1e-6
    assert not cli.failures(rows)


def test_refinement_out_of_range(tmp_path):
    with pytest.raises(ValidationError):
        load_scenarios(write(tmp_path, trivial_scenario(levels=[2, 9])))
    with pytest.raises(ValidationError):
        cli.run_scenario("disk_example", levels=[9])


@pytest.mark.parametrize("patch", [{"pair": {"name": "winding", "m": 7}}, {"kind": "mystery"},
                                   {"routes": ["cw", "fast"]}, {"tolerance": 5.0}, {"seed": -1}])
def test_validation_errors(tmp_path, patch):
    with pytest.raises(ValidationError):
        load_scenarios(write(tmp_path, trivial_scenario(**patch)))


def test_radius_range(tmp_path):
    d = json.loads(builtin_path("shrinker").read_text())
    d["immersion"]["scale"] = 20.0
    d.pop("cases")
    with pytest.raises(ValidationError):
        load_scenarios(write(tmp_path, d))


def test_parse_error_reports_line(tmp_path):
    p = write(tmp_path, '{\n  "schema": "maslovcw-scenario/1",\n  "kind": abstract\n}')
    with pytest.raises(ParseError, match="line 3"):
        load_scenarios(p)
    with pytest.raises(ParseError, match="schema"):
        load_scenarios(write(tmp_path, {"kind": "abstract"}))
    with pytest.raises(ParseError, match="pair|name"):
        load_scenarios(write(tmp_path, trivial_scenario(pair={"m": 1})))


def test_emit_csv_one_row(tmp_path):
    row = cli.ReportRow.make("x", "cw", 2, 1.9999999999, wall_ms=1.5)
    text = cli.emit_csv([row], tmp_path / "o.csv")
    assert text.count("\n") == 2
    assert text.splitlines()[0] == ",".join(cli.CSV_HEADER)
    with pytest.raises(ValueError):
        cli.emit_csv([])


def test_csv_round_trip(tmp_path):
    rows = cli.run_scenario("shrinker", levels=[2])
    path = tmp_path / "rows.csv"
    cli.emit_csv(rows, path)
    back = cli.read_csv(path)
    assert len(back) == len(rows)
    for a, b in zip(rows, back):
        for k in cli.CSV_HEADER:
            x, y = getattr(a, k), getattr(b, k)
            if isinstance(x, float) and math.isnan(x):
                assert math.isnan(y)
            else:
                assert x == y
    assert path.read_bytes().decode("utf-8") == cli.emit_csv(rows)


def test_convergence_study_orders():
    rows, orders = cli.convergence_study("hemisphere", [2, 3, 4, 5])
    assert orders[("hemisphere", "cw")] >= 1.9
    assert orders[("hemisphere", "geom")] >= 1.9
    # residuals decrease with refinement
    res = [r.residual for r in rows if r.route == "geom"]
    assert np.all(np.diff(res) < 0)


def test_convergence_trivial_pair(tmp_path):
    rows, orders = cli.convergence_study(write(tmp_path, trivial_scenario()), [1, 2, 3])
    assert all(r.residual == 0.0 for r in rows)
    assert orders[("trivial", "cw")] == math.inf


def test_convergence_needs_three_levels():
    with pytest.raises(ValidationError):
        cli.convergence_study("disk_example", [2, 3])


def test_fit_order():
    h = np.array([0.4, 0.2, 0.1])
    assert cli.fit_order(h, 3 * h ** 2) == pytest.approx(2.0)
    assert cli.fit_order(h, [1e-15, 0.0, 2e-16]) == math.inf


def test_main_exit_codes(tmp_path, capsys):
    out = tmp_path / "o.csv"
    assert cli.main(["--scenario", "disk_example", "--refine", "2", "--csv", str(out)]) == 0
    assert out.read_text().startswith("scenario,route")
    # residual 1e-4 at level 2 on the hemisphere fails a 1e-9 tolerance
    assert cli.main(["--scenario", "hemisphere", "--refine", "2", "--tol", "1e-9"]) == 1
    assert cli.main(["--scenario", str(write(tmp_path, "{oops"))]) == 2
    assert cli.main(["--scenario", "no_such_builtin"]) == 2
    assert cli.main(["--list-builtins"]) == 0
    assert "disk_example" in capsys.readouterr().out
    with pytest.raises(SystemExit):
        cli.main(["--scenario", "disk_example", "--routes", "cw,warp"])


def test_main_boundary_off_constraint_is_input_error(tmp_path):
    d = json.loads(builtin_path("disk_example").read_text())
    d["constraint"] = {"name": "real_plane", "n": 1}
    assert cli.main(["--scenario", str(write(tmp_path, d)), "--refine", "1"]) == 2


def test_main_numerical_failure_exit_code(monkeypatch):
    def boom(*a, **k):
        raise DegenerateFrame("frame collapsed")
    monkeypatch.setattr(cli, "run_scenario", boom)
    assert cli.main(["--scenario", "disk_example", "--refine", "1"]) == 3


def test_seed_changes_random_pairs(tmp_path):
    sc = {"schema": SCHEMA, "id": "rnd", "kind": "abstract", "refinement": 2, "routes": ["top"],
          "pair": {"name": "random", "count": 6}}
    p = write(tmp_path, sc)
    a = cli.strip_wall_time(cli.emit_csv(cli.run_scenario(p, seed=1)))
    b = cli.strip_wall_time(cli.emit_csv(cli.run_scenario(p, seed=1)))
    c = cli.strip_wall_time(cli.emit_csv(cli.run_scenario(p, seed=2)))
    assert a == b
    assert a != c
