"""
Polygon complexes for ghlab
Edge-glued triangulated surfaces: the projective plane from a 2k-gon, the
sphere glued from a quarter lune and the flat torus
"""

import logging
import math
from collections import defaultdict
from dataclasses import dataclass, field
from functools import cached_property
from typing import Dict, List, Optional, Tuple

import numpy as np
from scipy.spatial import Delaunay

from ..config_loader import settings
from .errors import InfeasibleError, InputError, InternalError
from .metric_core import DiscretizedLengthSpace, length_metric

logger = logging.getLogger(__name__)

Triangle = Tuple[str, str, str]
EdgeKey = Tuple[str, str]

# Cone angle around p and p* of the glued sphere
LUNE_PERIOD = math.pi / 2


def edge_key(u: str, v: str) -> EdgeKey:
    return (u, v) if u < v else (v, u)


@dataclass(frozen=True)
class Diagonal:
    """Second diagonal of the quadrilateral formed by two triangles on edge (a, b)"""
    c: str
    d: str
    length: float
    a: str
    b: str


@dataclass(frozen=True, eq=False)
class PolygonComplex:
    """Triangulated surface given by its triangles, edge lengths and gluing"""
    name: str
    kind: str
    vertices: Tuple[str, ...]
    triangles: Tuple[Triangle, ...]
    lengths: Dict[EdgeKey, float]
    gluing: Tuple[dict, ...] = ()
    marked: Dict[str, str] = field(default_factory=dict)
    mesh_h: float = 0.0
    coords: Dict[str, Tuple[float, ...]] = field(default_factory=dict)
    expected_euler: Optional[int] = None
    closed: bool = True

    @cached_property
    def edges(self) -> Tuple[EdgeKey, ...]:
        keys = {edge_key(u, v) for a, b, c in self.triangles for u, v in ((a, b), (b, c), (c, a))}
        return tuple(sorted(keys))

    @cached_property
    def edge_triangles(self) -> Dict[EdgeKey, List[int]]:
        table: Dict[EdgeKey, List[int]] = defaultdict(list)
        for t, (a, b, c) in enumerate(self.triangles):
            for u, v in ((a, b), (b, c), (c, a)):
                table[edge_key(u, v)].append(t)
        return dict(table)

    def length(self, u: str, v: str) -> float:
        return self.lengths[edge_key(u, v)]

    def _angle(self, apex: str, u: str, v: str) -> float:
        a, b, c = self.length(apex, u), self.length(apex, v), self.length(u, v)
        cos = (a * a + b * b - c * c) / (2 * a * b)
        return math.acos(max(-1.0, min(1.0, cos)))

    @cached_property
    def diagonals(self) -> Tuple[Diagonal, ...]:
        """Flip diagonals of convex quadrilaterals, measured by unfolding the two triangles"""
        existing = set(self.edges)
        found: Dict[EdgeKey, Diagonal] = {}
        for (a, b), tris in self.edge_triangles.items():
            if len(tris) != 2:
                continue
            c = next(x for x in self.triangles[tris[0]] if x not in (a, b))
            d = next(x for x in self.triangles[tris[1]] if x not in (a, b))
            key = edge_key(c, d)
            if c == d or key in existing or key in found:
                continue
            at_a = self._angle(a, b, c) + self._angle(a, b, d)
            at_b = self._angle(b, a, c) + self._angle(b, a, d)
            if at_a >= math.pi - 1e-9 or at_b >= math.pi - 1e-9:
                continue
            ac, ad = self.length(a, c), self.length(a, d)
            length = math.sqrt(max(0.0, ac * ac + ad * ad - 2 * ac * ad * math.cos(at_a)))
            found[key] = Diagonal(key[0], key[1], length, a, b)
        return tuple(found[k] for k in sorted(found))

    @cached_property
    def graph_edges(self) -> Tuple[Tuple[str, str, float], ...]:
        edges = [(u, v, self.lengths[(u, v)]) for u, v in self.edges]
        edges += [(g.c, g.d, g.length) for g in self.diagonals]
        return tuple(edges)

    @cached_property
    def resolution(self) -> float:
        return max(w for _, _, w in self.graph_edges)

    def euler_characteristic(self) -> int:
        return len(self.vertices) - len(self.edges) + len(self.triangles)

    def check_gluing(self) -> dict:
        """Edge-pairing and topology report; raises InfeasibleError on a broken mesh"""
        usage = {k: len(v) for k, v in self.edge_triangles.items()}
        overused = sorted(k for k, n in usage.items() if n > 2)
        open_edges = sorted(k for k, n in usage.items() if n == 1)
        mismatches = [g for g in self.gluing if abs(g.get("length_a", 0.0) - g.get("length_b", 0.0)) > 1e-9]
        report = {
            "vertices": len(self.vertices),
            "edges": len(self.edges),
            "triangles": len(self.triangles),
            "euler": self.euler_characteristic(),
            "expected_euler": self.expected_euler,
            "open_edges": len(open_edges),
            "overused_edges": len(overused),
            "length_mismatches": len(mismatches),
        }
        problems = []
        if overused:
            problems.append(f"edge {overused[0]} lies in more than two triangles")
        if self.closed and open_edges:
            problems.append(f"edge {open_edges[0]} lies in a single triangle")
        if mismatches:
            problems.append(f"glued edges differ in length: {mismatches[0]}")
        if self.expected_euler is not None and report["euler"] != self.expected_euler:
            problems.append(f"Euler characteristic {report['euler']} != {self.expected_euler}")
        if problems:
            raise InfeasibleError(f"mesh {self.name!r} is not a valid surface: {problems[0]}; "
                                  "try a smaller mesh_h")
        return report

    @cached_property
    def space(self) -> DiscretizedLengthSpace:
        """Mesh graph (triangle edges plus flip diagonals) as a length space"""
        return length_metric(self.graph_edges, id=self.name, vertices=self.vertices,
                             basepoint=self.marked.get("o"))


def _check_mesh_h(mesh_h: float):
    if not 0 < mesh_h <= settings.max_mesh_h + 1e-12:
        raise InputError(f"mesh_h must lie in (0, {settings.max_mesh_h}], got {mesh_h}")


def rp2_vertex_radius(k: int) -> float:
    """Distance from the centre of the 2k-gon to its corners"""
    return 1 / math.cos(math.pi / (2 * k))


def rp2_ball_radius(k: int) -> float:
    """r_k = (1 + 1/cos(pi/2k)) / 2"""
    return (1 + rp2_vertex_radius(k)) / 2


def build_polygon_rp2(k: int, mesh_h: float = 0.05) -> Tuple[PolygonComplex, DiscretizedLengthSpace]:
    """Flat 2k-gon with inradius 1 and opposite sides glued antipodally

    Corner j sits at angle (2j+1)pi/2k; the gluing x ~ -x identifies side j
    with side j+k in reversed direction, so the k corner classes become
    the vertices v0..v{k-1}.
    """
    if not isinstance(k, (int, np.integer)) or k < 2:
        raise InputError(f"k must be an integer >= 2, got {k!r}")
    _check_mesh_h(mesh_h)
    h = float(mesh_h)
    half = math.pi / (2 * k)
    R = rp2_vertex_radius(k)
    corners = np.array([[R * math.cos((2 * j + 1) * half), R * math.sin((2 * j + 1) * half)]
                        for j in range(2 * k)])
    side_length = 2 * math.tan(half)
    m = max(2, math.ceil(side_length / h))

    planar: List[Tuple[float, float]] = []
    ids: List[str] = []
    for j in range(2 * k):
        planar.append(tuple(corners[j]))
        ids.append(f"v{j % k}")
    for j in range(2 * k):
        start, end = corners[j], corners[(j + 1) % (2 * k)]
        for i in range(1, m):
            planar.append(tuple(start + (i / m) * (end - start)))
            ids.append(f"s{j % k}_{i:03d}")

    # one extra vertex on each corner bisector keeps corner triangles small
    alpha = math.pi - math.pi / k
    blocker_depth = h * math.cos(alpha / 2) + 0.5 * h * math.sin(alpha / 2)
    blockers = []
    for j in range(2 * k):
        inward = -corners[j] / R
        blockers.append(corners[j] + blocker_depth / math.sin(alpha / 2) * inward)
        planar.append(tuple(blockers[-1]))
        ids.append(f"q{j:02d}")
    blockers = np.array(blockers)

    normals = np.array([[math.cos((j + 1) * math.pi / k), math.sin((j + 1) * math.pi / k)]
                        for j in range(2 * k)])
    rows = math.ceil(R / (h * math.sqrt(3) / 2)) + 1
    for b in range(-rows, rows + 1):
        for a in range(-rows - abs(b), rows + abs(b) + 1):
            x = np.array([(a + b / 2) * h, b * math.sqrt(3) / 2 * h])
            if np.min(1 - normals @ x) < 0.5 * h:
                continue
            if np.min(np.linalg.norm(blockers - x, axis=1)) < 0.5 * h:
                continue
            planar.append((float(x[0]), float(x[1])))
            ids.append("o" if a == 0 and b == 0 else f"i{a:+04d}_{b:+04d}")

    points = np.array(planar)
    tri = Delaunay(points)
    if len(np.unique(tri.simplices)) != len(points):
        raise InfeasibleError(f"triangulation of the {2 * k}-gon dropped points; try a smaller mesh_h")

    triangles: List[Triangle] = []
    lengths: Dict[EdgeKey, float] = {}
    glued: Dict[EdgeKey, dict] = {}
    for simplex in tri.simplices:
        p = points[simplex]
        area = abs(np.cross(p[1] - p[0], p[2] - p[0])) / 2
        if area < 1e-14:
            continue
        names = tuple(ids[i] for i in simplex)
        if len(set(names)) < 3:
            raise InfeasibleError(f"mesh of the {2 * k}-gon is too coarse to separate glued points")
        triangles.append(names)
        for s, t in ((0, 1), (1, 2), (2, 0)):
            key = edge_key(names[s], names[t])
            w = float(np.linalg.norm(p[s] - p[t]))
            if key in lengths and abs(lengths[key] - w) > 1e-12:
                glued[key] = {"edge": list(key), "length_a": lengths[key], "length_b": w}
            lengths.setdefault(key, w)

    coords: Dict[str, Tuple[float, ...]] = {}
    for name, xy in zip(ids, planar):
        coords.setdefault(name, (float(xy[0]), float(xy[1])))

    gluing = tuple(
        [{"sides": [j, j + k], "reversed": True, "length_a": side_length, "length_b": side_length}
         for j in range(k)]
        + list(glued.values())
    )
    complex_ = PolygonComplex(
        name=f"rp2-k{k}", kind="flat", vertices=tuple(sorted(set(ids))),
        triangles=tuple(triangles), lengths=lengths, gluing=gluing,
        marked={"o": "o"}, mesh_h=h, coords=coords, expected_euler=1,
    )
    complex_.check_gluing()
    logger.info("built %s: %d vertices, %d triangles", complex_.name, len(complex_.vertices), len(triangles))
    return complex_, complex_.space


def _wrap(delta: float, period: float) -> float:
    delta = math.fmod(delta, period)
    if delta > period / 2:
        delta -= period
    elif delta <= -period / 2:
        delta += period
    return delta


def spindle_distance(a: Tuple[float, float], b: Tuple[float, float]) -> float:
    """Spherical distance between (theta, phi) points of the glued lune, for nearby points"""
    dphi = _wrap(b[1] - a[1], LUNE_PERIOD)
    s = math.sin((b[0] - a[0]) / 2) ** 2 + math.sin(a[0]) * math.sin(b[0]) * math.sin(dphi / 2) ** 2
    return 2 * math.asin(math.sqrt(min(1.0, s)))


def sphere_rings(mesh_h: float, detour: Optional[float] = None) -> List[float]:
    """Polar angles of the mesh rings, refined geometrically towards p and p*"""
    M = math.ceil(math.pi / mesh_h)
    M += M % 2
    step = math.pi / M
    thetas = [i * step for i in range(1, M)]
    for d in range(1, settings.cone_refinement_depth + 1):
        thetas += [step / 2 ** d, math.pi - step / 2 ** d]
    if detour is not None:
        if not 0 < detour < math.pi / 4:
            raise InputError(f"detour scale must lie in (0, pi/4), got {detour}")
        for target in (detour, math.pi - detour):
            nearest = min(range(len(thetas)), key=lambda i: abs(thetas[i] - target))
            if abs(thetas[nearest] - target) < step / 2 and abs(thetas[nearest] - math.pi / 2) > 1e-12:
                thetas[nearest] = target
            else:
                thetas.append(target)
    return sorted(set(round(t, 15) for t in thetas))


def build_glued_sphere(mesh_h: float = 0.05,
                       detour: Optional[float] = None) -> Tuple[PolygonComplex, DiscretizedLengthSpace]:
    """Quarter lune between antipodal p, p* with its two bounding arcs glued by arc length

    Points are (theta, phi) with theta the distance from p and phi taken
    modulo pi/2, so the glued space is a sphere with cone angle pi/2 at
    p and p*. The marked point o sits on the glued arc at theta = pi/2.
    """
    _check_mesh_h(mesh_h)
    h = float(mesh_h)
    thetas = sphere_rings(h, detour)
    coords: Dict[str, Tuple[float, ...]] = {"p": (0.0, 0.0), "pstar": (math.pi, 0.0)}
    rings: List[List[str]] = []
    for i, theta in enumerate(thetas):
        n = max(3, math.ceil(LUNE_PERIOD * math.sin(theta) / h))
        ring = []
        for j in range(n):
            name = "o" if j == 0 and abs(theta - math.pi / 2) < 1e-12 else f"r{i:03d}_{j:03d}"
            coords[name] = (theta, LUNE_PERIOD * j / n)
            ring.append(name)
        rings.append(ring)
    if "o" not in coords:
        raise InternalError("ring at theta = pi/2 is missing")

    triangles: List[Triangle] = []
    first, last = rings[0], rings[-1]
    for j in range(len(first)):
        triangles.append(("p", first[j], first[(j + 1) % len(first)]))
    for j in range(len(last)):
        triangles.append(("pstar", last[(j + 1) % len(last)], last[j]))
    for upper, lower in zip(rings, rings[1:]):
        triangles += _zip_rings(upper, lower, coords)

    lengths: Dict[EdgeKey, float] = {}
    for a, b, c in triangles:
        for u, v in ((a, b), (b, c), (c, a)):
            key = edge_key(u, v)
            if key not in lengths:
                lengths[key] = spindle_distance(coords[u], coords[v])

    complex_ = PolygonComplex(
        name="glued-sphere" if detour is None else f"glued-sphere-d{detour:g}",
        kind="spherical", vertices=tuple(sorted(coords)), triangles=tuple(triangles),
        lengths=lengths,
        gluing=({"arcs": ["phi=0", "phi=pi/2"], "length_a": math.pi, "length_b": math.pi},),
        marked={"o": "o", "p": "p", "p*": "pstar"}, mesh_h=h, coords=coords, expected_euler=2,
    )
    complex_.check_gluing()
    logger.info("built %s: %d vertices, %d rings", complex_.name, len(coords), len(rings))
    return complex_, complex_.space


def _zip_rings(upper: List[str], lower: List[str], coords) -> List[Triangle]:
    """Triangulate the band between two rings by merging their phi orders"""
    def phi(ring, j):
        return LUNE_PERIOD if j == len(ring) else coords[ring[j]][1]

    out: List[Triangle] = []
    a = b = 0
    while a < len(upper) or b < len(lower):
        take_upper = b == len(lower) or (a < len(upper) and phi(upper, a + 1) <= phi(lower, b + 1))
        if take_upper:
            out.append((upper[a], upper[(a + 1) % len(upper)], lower[b % len(lower)]))
            a += 1
        else:
            out.append((upper[a % len(upper)], lower[(b + 1) % len(lower)], lower[b]))
            b += 1
    return out


def build_flat_torus(a: float = 1.0, b: float = 1.0, mesh_h: Optional[float] = None,
                     shape: Optional[Tuple[int, int]] = None) -> Tuple[PolygonComplex, DiscretizedLengthSpace]:
    """Flat torus [0,a) x [0,b) on a square grid split into triangles"""
    if not (a > 0 and b > 0):
        raise InputError(f"torus sides must be positive, got {a}, {b}")
    if shape is None:
        if mesh_h is None:
            raise InputError("give either mesh_h or shape for the torus grid")
        shape = (math.ceil(a / mesh_h), math.ceil(b / mesh_h))
    nx_, ny_ = int(shape[0]), int(shape[1])
    if nx_ < 3 or ny_ < 3:
        raise InputError(f"torus grid needs at least 3 x 3 nodes, got {nx_} x {ny_}")
    dx, dy = a / nx_, b / ny_

    def name(i, j):
        return f"t{i % nx_:03d}_{j % ny_:03d}"

    triangles: List[Triangle] = []
    for i in range(nx_):
        for j in range(ny_):
            triangles.append((name(i, j), name(i + 1, j), name(i + 1, j + 1)))
            triangles.append((name(i, j), name(i + 1, j + 1), name(i, j + 1)))
    diag = math.hypot(dx, dy)
    lengths: Dict[EdgeKey, float] = {}
    for i in range(nx_):
        for j in range(ny_):
            lengths[edge_key(name(i, j), name(i + 1, j))] = dx
            lengths[edge_key(name(i, j), name(i, j + 1))] = dy
            lengths[edge_key(name(i, j), name(i + 1, j + 1))] = diag
    coords = {name(i, j): (i * dx, j * dy) for i in range(nx_) for j in range(ny_)}
    complex_ = PolygonComplex(
        name=f"torus-{a:g}x{b:g}", kind="flat", vertices=tuple(sorted(coords)),
        triangles=tuple(triangles), lengths=lengths,
        gluing=({"sides": ["x=0", "x=a"], "length_a": b, "length_b": b},
                {"sides": ["y=0", "y=b"], "length_a": a, "length_b": a}),
        marked={"o": name(0, 0)}, mesh_h=max(dx, dy), coords=coords, expected_euler=0,
    )
    complex_.check_gluing()
    return complex_, complex_.space
