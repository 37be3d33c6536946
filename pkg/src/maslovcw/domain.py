"""Reference surfaces, their boundary loops, and quadrature of forms.

Meshes are structured: polar rings for the disk family, a stitched tensor
grid for the annulus, and a subdivided icosahedron for the sphere.  Flat
kinds use straight triangles in the reference plane, so interior integrals
carry an O(h^2) polygon error while boundary integrals run on the analytic
circle parametrisation.  Sphere triangles are projected radially onto the
unit sphere.
"""

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .errors import NonFiniteField, UnsupportedKind, ValidationError

KINDS = ("disk", "annulus", "closed_sphere", "spherical_cap_domain", "custom")
MAX_LEVEL = 8


@dataclass(frozen=True)
class QuadratureRule:
    tri_points: np.ndarray  # (Q, 3) barycentric
    tri_weights: np.ndarray  # (Q,), sums to 1
    edge_points: np.ndarray  # (E,) in [0, 1]
    edge_weights: np.ndarray  # (E,), sums to 1

    @classmethod
    def default(cls):
        # 6-point degree-4 Dunavant rule; 3-point Gauss-Legendre on edges.
        a1, w1 = 0.108103018168070, 0.223381589678011
        a2, w2 = 0.816847572980459, 0.109951743655322
        pts, wts = [], []
        for a, w in ((a1, w1), (a2, w2)):
            b = 0.5 * (1.0 - a)
            pts += [(a, b, b), (b, a, b), (b, b, a)]
            wts += [w] * 3
        x, we = np.polynomial.legendre.leggauss(3)
        return cls(np.array(pts), np.array(wts), 0.5 * (x + 1.0), 0.5 * we)


DEFAULT_RULE = QuadratureRule.default()


@dataclass(frozen=True)
class BoundaryLoop:
    """Analytic closed curve t in [0, 1) -> reference coordinates.

    ``position`` and ``velocity`` accept an array of parameters and return
    (N, d) arrays; the velocity is d(position)/dt.
    """

    position: Callable[[np.ndarray], np.ndarray]
    velocity: Callable[[np.ndarray], np.ndarray]
    acceleration: Optional[Callable[[np.ndarray], np.ndarray]] = None
    name: str = "loop"

    def reversed(self):
        pos, vel, acc = self.position, self.velocity, self.acceleration
        racc = None if acc is None else (lambda t: acc(1.0 - t))
        return BoundaryLoop(lambda t: pos(1.0 - t), lambda t: -vel(1.0 - t), racc,
                            self.name + "~")

    def samples(self, count):
        return np.arange(count) / count


def circle_loop(radius=1.0, direction=1, name="circle"):
    w = 2 * np.pi * direction

    def pos(t):
        t = np.asarray(t, dtype=float)
        return radius * np.stack([np.cos(w * t), np.sin(w * t)], axis=-1)

    def vel(t):
        t = np.asarray(t, dtype=float)
        return radius * w * np.stack([-np.sin(w * t), np.cos(w * t)], axis=-1)

    def acc(t):
        return -w * w * pos(t)

    return BoundaryLoop(pos, vel, acc, name)


def loop_quadrature(segments, rule=DEFAULT_RULE):
    """Nodes and weights on [0, 1) for ``segments`` equal Gauss panels."""
    if segments < 1:
        raise ValueError("need at least one segment")
    base = np.arange(segments)[:, None]
    t = ((base + rule.edge_points[None, :]) / segments).ravel()
    w = np.tile(rule.edge_weights, segments) / segments
    return t, w


@dataclass(frozen=True)
class RefSurface:
    vertices: np.ndarray
    triangles: np.ndarray
    boundary_loops: tuple = ()  # vertex index arrays, Sigma on the left
    loops: tuple = ()  # BoundaryLoop objects aligned with boundary_loops
    refinement_level: int = 0
    kind: str = "custom"
    projection: Optional[str] = None  # "sphere" for radially projected triangles
    orientation: int = 1
    params: dict = field(default_factory=dict)

    @property
    def dim(self):
        return self.vertices.shape[1]

    @property
    def h(self):
        """Mesh size: longest edge."""
        v = self.vertices
        e = np.concatenate([v[self.triangles[:, 1]] - v[self.triangles[:, 0]],
                            v[self.triangles[:, 2]] - v[self.triangles[:, 1]],
                            v[self.triangles[:, 0]] - v[self.triangles[:, 2]]])
        return float(np.sqrt((e ** 2).sum(axis=1)).max())

    def edges(self):
        t = self.triangles
        directed = np.concatenate([t[:, [0, 1]], t[:, [1, 2]], t[:, [2, 0]]])
        return directed

    def boundary_edges(self):
        """Directed edges that belong to exactly one triangle."""
        directed = self.edges()
        key = np.sort(directed, axis=1)
        _, inv, counts = np.unique(key, axis=0, return_inverse=True, return_counts=True)
        return directed[counts[inv.ravel()] == 1]

    def flipped(self):
        return RefSurface(
            self.vertices, self.triangles[:, [0, 2, 1]],
            tuple(np.ascontiguousarray(b[::-1]) for b in self.boundary_loops),
            tuple(lp.reversed() for lp in self.loops),
            self.refinement_level, self.kind, self.projection, -self.orientation,
            dict(self.params))

    def validate(self):
        """Check the structural invariants; returns self for chaining."""
        bd = {tuple(e) for e in self.boundary_edges()}
        loop_edges = set()
        for b in self.boundary_loops:
            for a, c in zip(b, np.roll(b, -1)):
                if (a, c) in loop_edges:
                    raise ValueError("boundary edge traversed twice")
                loop_edges.add((int(a), int(c)))
        if loop_edges != bd:
            raise ValueError("boundary loops do not match the topological boundary")
        if len(self.loops) != len(self.boundary_loops):
            raise ValueError("analytic loops are not aligned with vertex loops")
        if self.projection is None and self.dim == 2:
            s = np.sign(_signed_areas(self.vertices, self.triangles))
            if np.any(s != self.orientation):
                raise ValueError("triangles are not consistently oriented")
        expected = {"disk": 1, "spherical_cap_domain": 1, "annulus": 0, "closed_sphere": 2}
        if self.kind in expected and euler_characteristic(self) != expected[self.kind]:
            raise ValueError("Euler characteristic does not match the surface kind")
        return self


def _signed_areas(v, tri):
    a, b, c = v[tri[:, 0]], v[tri[:, 1]], v[tri[:, 2]]
    return 0.5 * ((b[:, 0] - a[:, 0]) * (c[:, 1] - a[:, 1]) - (b[:, 1] - a[:, 1]) * (c[:, 0] - a[:, 0]))


def _stitch(inner, inner_ang, outer, outer_ang):
    """Triangulate the strip between two closed rings sorted by angle."""
    tris = []
    i = j = 0
    ni, no = len(inner), len(outer)
    while i < ni or j < no:
        ai = inner_ang[(i + 1) % ni] + (2 * np.pi if i + 1 >= ni else 0.0)
        bj = outer_ang[(j + 1) % no] + (2 * np.pi if j + 1 >= no else 0.0)
        if j >= no or (i < ni and ai <= bj):
            tris.append((inner[i % ni], outer[j % no], inner[(i + 1) % ni]))
            i += 1
        else:
            tris.append((inner[i % ni], outer[j % no], outer[(j + 1) % no]))
            j += 1
    return tris


def _orient_positive(v, tri):
    tri = np.array(tri, dtype=np.int64)
    neg = _signed_areas(v, tri) < 0
    tri[neg] = tri[neg][:, [0, 2, 1]]
    return tri


def _disk_mesh(level, radius):
    rings = 2 ** (level + 1)
    verts = [(0.0, 0.0)]
    ring_idx = [np.array([0])]
    ring_ang = [np.array([0.0])]
    for j in range(1, rings + 1):
        m = 8 * j
        ang = 2 * np.pi * np.arange(m) / m
        r = radius * j / rings
        start = len(verts)
        verts += list(zip(r * np.cos(ang), r * np.sin(ang)))
        ring_idx.append(np.arange(start, start + m))
        ring_ang.append(ang)
    v = np.array(verts)
    tris = []
    first = ring_idx[1]
    for a in range(len(first)):
        tris.append((0, first[a], first[(a + 1) % len(first)]))
    for j in range(1, rings):
        tris += _stitch(ring_idx[j], ring_ang[j], ring_idx[j + 1], ring_ang[j + 1])
    return v, _orient_positive(v, tris), ring_idx[-1]


def _annulus_mesh(level, inner, outer):
    m = 16 * 2 ** level
    nr = 2 ** level + 1
    ang = 2 * np.pi * np.arange(m) / m
    radii = np.linspace(inner, outer, nr + 1)
    v = np.concatenate([np.stack([r * np.cos(ang), r * np.sin(ang)], axis=1) for r in radii])
    idx = np.arange(len(v)).reshape(nr + 1, m)
    tris = []
    for a in range(nr):
        tris += _stitch(idx[a], ang, idx[a + 1], ang)
    return v, _orient_positive(v, tris), idx[-1], idx[0][::-1].copy()


def _icosphere(level):
    p = (1 + 5 ** 0.5) / 2
    v = [(-1, p, 0), (1, p, 0), (-1, -p, 0), (1, -p, 0), (0, -1, p), (0, 1, p),
         (0, -1, -p), (0, 1, -p), (p, 0, -1), (p, 0, 1), (-p, 0, -1), (-p, 0, 1)]
    f = [(0, 11, 5), (0, 5, 1), (0, 1, 7), (0, 7, 10), (0, 10, 11), (1, 5, 9), (5, 11, 4),
         (11, 10, 2), (10, 7, 6), (7, 1, 8), (3, 9, 4), (3, 4, 2), (3, 2, 6), (3, 6, 8),
         (3, 8, 9), (4, 9, 5), (2, 4, 11), (6, 2, 10), (8, 6, 7), (9, 8, 1)]
    verts = [np.array(x, float) / np.linalg.norm(x) for x in v]
    faces = f
    for _ in range(level):
        cache = {}

        def mid(a, b):
            key = (min(a, b), max(a, b))
            if key not in cache:
                m = verts[a] + verts[b]
                verts.append(m / np.linalg.norm(m))
                cache[key] = len(verts) - 1
            return cache[key]

        new = []
        for a, b, c in faces:
            ab, bc, ca = mid(a, b), mid(b, c), mid(c, a)
            new += [(a, ab, ca), (b, bc, ab), (c, ca, bc), (ab, bc, ca)]
        faces = new
    # fixed generic rotation keeps nodes off the coordinate axes (chart poles)
    ca, sa, cb, sb = np.cos(0.3), np.sin(0.3), np.cos(0.7), np.sin(0.7)
    rot = np.array([[ca, -sa, 0], [sa, ca, 0], [0, 0, 1]]) @ np.array([[1, 0, 0], [0, cb, -sb], [0, sb, cb]])
    v = np.array(verts) @ rot.T
    tri = np.array(faces, dtype=np.int64)
    a, b, c = v[tri[:, 0]], v[tri[:, 1]], v[tri[:, 2]]
    outward = np.einsum("ij,ij->i", np.cross(b - a, c - a), a) > 0
    tri[~outward] = tri[~outward][:, [0, 2, 1]]
    return v, tri


def build_surface(kind, refinement_level=3, **params):
    """Build a structured reference surface.

    Parameters
    ----------
    kind : {"disk", "annulus", "closed_sphere", "spherical_cap_domain"}
    refinement_level : int in [0, 8]
    params : ``radius`` (disk), ``inner``/``outer`` (annulus), ``colatitude``
        or ``radius`` (spherical cap: the stereographic disk of radius
        tan(colatitude / 2)).
    """
    if not 0 <= int(refinement_level) <= MAX_LEVEL:
        raise ValidationError(f"refinement_level must be in [0, {MAX_LEVEL}]")
    level = int(refinement_level)
    if kind in ("disk", "spherical_cap_domain"):
        if kind == "spherical_cap_domain" and "colatitude" in params:
            params.setdefault("radius", float(np.tan(params["colatitude"] / 2)))
        radius = float(params.get("radius", 1.0))
        v, tri, ring = _disk_mesh(level, radius)
        return RefSurface(v, tri, (ring,), (circle_loop(radius, 1, "outer"),), level, kind,
                          params=dict(params, radius=radius))
    if kind == "annulus":
        inner, outer = float(params.get("inner", 0.5)), float(params.get("outer", 1.0))
        v, tri, out_ring, in_ring = _annulus_mesh(level, inner, outer)
        return RefSurface(v, tri, (out_ring, in_ring),
                          (circle_loop(outer, 1, "outer"), circle_loop(inner, -1, "inner")),
                          level, kind, params=dict(inner=inner, outer=outer))
    if kind == "closed_sphere":
        v, tri = _icosphere(level)
        return RefSurface(v, tri, (), (), level, kind, projection="sphere", params=dict(params))
    raise UnsupportedKind(f"unsupported surface kind {kind!r}")


def euler_characteristic(surface):
    t = surface.triangles
    und = np.unique(np.sort(surface.edges(), axis=1), axis=0)
    return int(len(np.unique(t)) - len(und) + len(t))


def quadrature_nodes(surface, rule=DEFAULT_RULE):
    """Points and tangent pairs for the triangle rule.

    Returns (points, u, v, weights) with shapes (T*Q, d) and (T*Q,); the
    weights already include the parameter-triangle area 1/2, so
    sum(weights * form(points; u, v)) integrates the 2-form.
    """
    v = surface.vertices
    tri = surface.triangles
    a, b, c = v[tri[:, 0]], v[tri[:, 1]], v[tri[:, 2]]
    e1, e2 = b - a, c - a
    lam = rule.tri_points
    pts = (lam[None, :, 0, None] * a[:, None] + lam[None, :, 1, None] * b[:, None]
           + lam[None, :, 2, None] * c[:, None])
    u = np.broadcast_to(e1[:, None], pts.shape)
    w = np.broadcast_to(e2[:, None], pts.shape)
    if surface.projection == "sphere":
        norm = np.linalg.norm(pts, axis=-1, keepdims=True)
        p = pts / norm

        def tangent(e):
            return (e - p * np.sum(p * e, axis=-1, keepdims=True)) / norm
        u, w, pts = tangent(u), tangent(w), p
    d = v.shape[1]
    weights = np.broadcast_to(0.5 * rule.tri_weights[None, :], pts.shape[:2])
    return (pts.reshape(-1, d), np.ascontiguousarray(u).reshape(-1, d),
            np.ascontiguousarray(w).reshape(-1, d), weights.ravel().copy())


def _finite(values, what):
    values = np.asarray(values)
    if not np.all(np.isfinite(values)):
        raise NonFiniteField(f"{what} produced non-finite values")
    return values


def integrate_2form(surface, form, rule=DEFAULT_RULE, check_antisymmetry=True):
    """Integrate a 2-form ``form(points, u, v) -> (N,)`` over the surface."""
    pts, u, v, w = quadrature_nodes(surface, rule)
    vals = _finite(form(pts, u, v), "2-form")
    if check_antisymmetry and len(pts):
        probe = slice(0, min(8, len(pts)))
        swapped = _finite(form(pts[probe], v[probe], u[probe]), "2-form")
        scale = max(1.0, float(np.abs(vals[probe]).max()))
        if np.abs(swapped + vals[probe]).max() > 1e-10 * scale:
            raise ValueError("2-form is not antisymmetric in its tangent arguments")
    return np.sum(w * vals)


def integrate_1form(loop, form, segments=256, rule=DEFAULT_RULE):
    """Integrate ``form(points, velocities) -> (N,)`` around a boundary loop."""
    t, w = loop_quadrature(segments, rule)
    vals = _finite(form(loop.position(t), loop.velocity(t)), "1-form")
    return np.sum(w * vals)


def dump_off(surface, stream):
    """Write an OFF-style listing (debugging aid)."""
    v, t = surface.vertices, surface.triangles
    stream.write("OFF\n")
    stream.write(f"{len(v)} {len(t)} 0\n")
    for p in v:
        stream.write(" ".join(repr(float(x)) for x in p) + "\n")
    for tri in t:
        stream.write("3 " + " ".join(str(int(i)) for i in tri) + "\n")
    for i, b in enumerate(surface.boundary_loops):
        stream.write(f"# boundary {i}: " + " ".join(str(int(x)) for x in b) + "\n")
