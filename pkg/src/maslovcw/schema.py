"""Scenario files: JSON schema, validation and object construction.

A scenario file is a JSON object::

    {
      "schema": "maslovcw-scenario/1",
      "id": "hemisphere",
      "kind": "monotonicity",          # abstract | immersed | gauss_bonnet | monotonicity | closed
      "levels": [2, 5],                # inclusive range; or "refinement": 4
      "routes": ["cw", "top", "geom"],
      "tolerance": 1e-3,
      "surface": {"kind": "spherical_cap_domain", "colatitude_over_pi": 0.5},
      "model": {"name": "round_sphere", "radius": 1.0},
      "immersion": {"name": "planar"},
      "constraint": {"name": "latitude", "colatitude_over_pi": 0.5},
      "cases": [{"id": "a", ...overrides...}]   # optional
    }

Abstract and closed-abstract scenarios carry ``"pair": {"name": ..., ...}``
instead of model/immersion/constraint.  Each entry of ``cases`` is merged
(one level deep) into the base object and run as ``<id>/<case id>``.
"""

import json
import math
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np

from . import ambient, bundlepair
from .domain import build_surface
from .errors import ParseError, ValidationError

SCHEMA = "maslovcw-scenario/1"
KINDS = ("abstract", "immersed", "gauss_bonnet", "monotonicity", "closed")
ROUTES = ("cw", "top", "geom")
MAX_LEVEL = 6
MAX_WINDING = 5
RADIUS_RANGE = (0.1, 10.0)
DEFAULT_SEED = 20240601


@dataclass
class Scenario:
    id: str
    kind: str
    levels: tuple
    routes: tuple
    tolerance: float
    spec: dict = field(default_factory=dict)
    seed: int = DEFAULT_SEED

    @property
    def immersed(self):
        return "pair" not in self.spec


def builtin_names():
    root = resources.files("maslovcw") / "scenarios"
    return sorted(p.name[:-5] for p in root.iterdir() if p.name.endswith(".json"))


def builtin_path(name):
    root = resources.files("maslovcw") / "scenarios"
    p = root / f"{name}.json"
    if not p.is_file():
        raise ValidationError(f"unknown built-in scenario {name!r}; choose from {builtin_names()}")
    return p


def _read_text(source):
    if isinstance(source, dict):
        return None, source
    if isinstance(source, (str, Path)) and not Path(source).exists() and not str(source).endswith(".json"):
        source = builtin_path(str(source))
    try:
        text = Path(source).read_text(encoding="utf-8") if isinstance(source, (str, Path)) \
            else source.read_text(encoding="utf-8")
    except OSError as exc:
        raise ParseError(f"cannot read scenario {source}: {exc}") from None
    try:
        return text, json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"{source}: line {exc.lineno} column {exc.colno}: {exc.msg}") from None


def load_scenarios(source, seed=None):
    """Parse and validate a scenario file (path, built-in name or dict).

    Returns a list of :class:`Scenario`, one per case.
    """
    _, raw = _read_text(source)
    if not isinstance(raw, dict):
        raise ParseError("scenario file must contain a JSON object")
    if raw.get("schema") != SCHEMA:
        raise ParseError(f"field 'schema': expected {SCHEMA!r}, got {raw.get('schema')!r}")
    cases = raw.get("cases") or [{}]
    if not isinstance(cases, list):
        raise ParseError("field 'cases': expected a list")
    out = []
    for case in cases:
        merged = {k: v for k, v in raw.items() if k != "cases"}
        for key, val in case.items():
            if isinstance(val, dict) and isinstance(merged.get(key), dict):
                merged[key] = {**merged[key], **val}
            elif key != "id":
                merged[key] = val
        sid = str(raw.get("id", "scenario"))
        if "id" in case:
            sid = f"{sid}/{case['id']}"
        out.append(_validate(sid, merged, seed))
    return out


def _require(d, key, where, types):
    if key not in d:
        raise ParseError(f"{where}: missing field {key!r}")
    if not isinstance(d[key], types):
        raise ParseError(f"{where}: field {key!r} has type {type(d[key]).__name__}")
    return d[key]


def _levels(raw, sid):
    if "refinement" in raw:
        lv = raw["refinement"]
        if not isinstance(lv, int):
            raise ParseError(f"{sid}: field 'refinement' must be an integer")
        levels = (lv,)
    else:
        rng = _require(raw, "levels", sid, list)
        if len(rng) != 2 or not all(isinstance(x, int) for x in rng):
            raise ParseError(f"{sid}: field 'levels' must be [first, last]")
        levels = tuple(range(rng[0], rng[1] + 1))
    if not levels or min(levels) < 0 or max(levels) > MAX_LEVEL:
        raise ValidationError(f"{sid}: refinement levels {levels} outside [0, {MAX_LEVEL}]")
    return levels


def _check_radius(value, what, sid):
    if not RADIUS_RANGE[0] <= float(value) <= RADIUS_RANGE[1]:
        raise ValidationError(f"{sid}: {what} = {value} outside {list(RADIUS_RANGE)}")


def _angle(d):
    if "colatitude_over_pi" in d:
        return math.pi * float(d["colatitude_over_pi"])
    return float(d["colatitude"])


def _validate(sid, raw, seed):
    kind = _require(raw, "kind", sid, str)
    if kind not in KINDS:
        raise ValidationError(f"{sid}: kind {kind!r} not in {KINDS}")
    levels = _levels(raw, sid)
    routes = tuple(raw.get("routes", ROUTES))
    bad = [r for r in routes if r not in ROUTES]
    if bad:
        raise ValidationError(f"{sid}: unknown routes {bad}")
    tol = float(raw.get("tolerance", 1e-3))
    if not 0 < tol < 1:
        raise ValidationError(f"{sid}: tolerance {tol} outside (0, 1)")
    s = int(raw.get("seed", DEFAULT_SEED)) if seed is None else int(seed)
    if not 0 <= s < 2 ** 64:
        raise ValidationError(f"{sid}: seed must be a 64-bit unsigned integer")
    spec = {k: raw[k] for k in ("surface", "pair", "model", "immersion", "constraint") if k in raw}
    if "pair" in spec:
        _validate_pair(sid, spec["pair"])
    else:
        for key in ("surface", "model", "immersion"):
            _require(raw, key, sid, dict)
        if kind != "closed":
            _require(raw, "constraint", sid, dict)
        _validate_geometry(sid, spec)
    return Scenario(sid, kind, levels, routes, tol, spec, s)


def _validate_pair(sid, pair):
    name = _require(pair, "name", f"{sid}.pair", str)
    if name not in PAIR_BUILDERS:
        raise ValidationError(f"{sid}: unknown pair {name!r}")
    for key in ("m", "degree", "max_winding"):
        if key in pair and abs(int(pair[key])) > MAX_WINDING:
            raise ValidationError(f"{sid}: |{key}| = {abs(int(pair[key]))} exceeds {MAX_WINDING}")
    if "k" in pair and not 1 <= int(pair["k"]) <= 3:
        raise ValidationError(f"{sid}: rank k must be in [1, 3]")
    if "count" in pair and not 1 <= int(pair["count"]) <= 1000:
        raise ValidationError(f"{sid}: count must be in [1, 1000]")


def _validate_geometry(sid, spec):
    for key, table in (("model", MODEL_BUILDERS), ("immersion", IMMERSION_BUILDERS),
                       ("constraint", CONSTRAINT_BUILDERS)):
        if key not in spec:
            continue
        name = _require(spec[key], "name", f"{sid}.{key}", str)
        if name not in table:
            raise ValidationError(f"{sid}: unknown {key} {name!r}")
    for key in ("model", "immersion", "constraint", "surface"):
        d = spec.get(key, {})
        for rk in ("radius", "scale", "r"):
            if rk in d:
                _check_radius(d[rk], f"{key}.{rk}", sid)
        for r in d.get("radii", []):
            _check_radius(r, f"{key}.radii", sid)
        if "second_winding" in d and abs(int(d["second_winding"])) > MAX_WINDING:
            raise ValidationError(f"{sid}: |second_winding| exceeds {MAX_WINDING}")
        if "colatitude" in d or "colatitude_over_pi" in d:
            a = _angle(d)
            if not 0.05 <= a <= math.pi / 2 + 1e-12:
                raise ValidationError(f"{sid}: {key} colatitude {a} outside [0.05, pi/2]")
        if "amplitude" in d and not 0 <= float(d["amplitude"]) <= 0.1:
            raise ValidationError(f"{sid}: bump amplitude must be in [0, 0.1]")


# ---------------------------------------------------------------------------
# builders
# ---------------------------------------------------------------------------

def _surface(d, level):
    d = dict(d)
    kind = d.pop("kind")
    if "colatitude_over_pi" in d:
        d["colatitude"] = _angle(d)
        d.pop("colatitude_over_pi")
    return build_surface(kind, level, **d)


MODEL_BUILDERS = {
    "flat_Cn": lambda d: ambient.flat_cn(int(d.get("n", 1))),
    "fubini_study": lambda d: ambient.fubini_study(int(d.get("n", 1))),
    "round_sphere": lambda d: ambient.round_sphere(float(d.get("radius", 1.0))),
}


def _planar(surf, d, rng):
    return ambient.planar_immersion(surf, float(d.get("scale", 1.0)))


def _torus_disk(surf, d, rng):
    return ambient.torus_disk_immersion(surf, tuple(d.get("radii", (1.0, 1.0))), float(d.get("scale", 1.0)),
                                        int(d.get("second_winding", 0)), float(d.get("wobble", 0.0)))


def _cp1(surf, d, rng):
    return ambient.cp1_sphere_immersion(surf.refinement_level)


IMMERSION_BUILDERS = {"planar": _planar, "torus_disk": _torus_disk, "cp1_sphere": _cp1}


def _torus_constraint(d, immersion):
    scale = float(immersion.get("scale", 1.0))
    radii = d.get("radii", immersion.get("radii", (1.0, 1.0)))
    return ambient.flat_torus(tuple(scale * float(r) for r in radii))


CONSTRAINT_BUILDERS = {
    "circle": lambda d, im: ambient.flat_circle(float(d.get("radius", im.get("scale", 1.0)))),
    "torus": _torus_constraint,
    "latitude": lambda d, im: ambient.sphere_latitude(_angle(d) if ("colatitude" in d or "colatitude_over_pi" in d)
                                                      else math.pi / 2, float(d.get("radius", 1.0))),
    "real_plane": lambda d, im: ambient.real_plane(int(d.get("n", 1))),
}


def build_geometry(scenario, level):
    """(model, immersed, constraint) for an immersed scenario at one level."""
    spec = scenario.spec
    surf = _surface(spec["surface"], level)
    model = MODEL_BUILDERS[spec["model"]["name"]](spec["model"])
    im_spec = spec["immersion"]
    immersed = IMMERSION_BUILDERS[im_spec["name"]](surf, im_spec, None)
    if "bump" in im_spec:
        b = im_spec["bump"]
        rng = np.random.default_rng(int(b.get("seed", scenario.seed)))
        immersed = ambient.bumped(immersed, rng, float(b.get("amplitude", 0.1)))
    constraint = None
    if "constraint" in spec:
        c = spec["constraint"]
        constraint = CONSTRAINT_BUILDERS[c["name"]](c, im_spec)
    return model, immersed, constraint


PAIR_BUILDERS = {
    "disk_example": lambda d, lv, rng: [(bundlepair.disk_example_pair(lv), 2)],
    "winding": lambda d, lv, rng: [(bundlepair.winding_pair(lv, int(d.get("k", 1)), int(d.get("m", 1)),
                                                            d.get("surface", "disk")),
                                    2 * int(d.get("m", 1)) * int(d.get("k", 1))
                                    * (2 if d.get("surface") == "annulus" else 1))],
    "monopole": lambda d, lv, rng: [(bundlepair.monopole_pair(lv, int(d.get("degree", 1))),
                                     2 * int(d.get("degree", 1)))],
    "random": lambda d, lv, rng: [bundlepair.random_pair(rng, lv, d.get("surface", "disk"),
                                                         max_winding=int(d.get("max_winding", 3)),
                                                         max_rank=int(d.get("max_rank", 3)))
                                  for _ in range(int(d.get("count", 1)))],
}


def build_pairs(scenario, level):
    """[(pair, expected mu)] for an abstract scenario at one level.

    Random pairs use a generator seeded by the scenario seed only, so every
    level sees the same sequence of pairs.
    """
    d = scenario.spec["pair"]
    rng = np.random.default_rng(scenario.seed)
    return PAIR_BUILDERS[d["name"]](d, level, rng)
