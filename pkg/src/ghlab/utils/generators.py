"""
Generators for ghlab
Standard test spaces and Euclidean domains
"""

import logging
import math
from typing import Callable, Dict, List, Optional, Tuple

import networkx as nx
import numpy as np

from ..config_loader import settings
from ..core.errors import InputError
from ..core.euclidean import EuclideanDomain
from ..core.metric_core import (
    DiscretizedLengthSpace,
    FiniteMetricSpace,
    MetricSpace,
    euclidean_space,
    length_metric,
)

logger = logging.getLogger(__name__)


def _width(n: int) -> int:
    return max(2, len(str(n - 1)))


def path_space(n: int, step: float = 1.0) -> DiscretizedLengthSpace:
    """Path graph p00 - p01 - ... with edges of length step"""
    if n < 1:
        raise InputError(f"path needs at least one vertex, got {n}")
    w = _width(n)
    ids = [f"p{i:0{w}d}" for i in range(n)]
    edges = [(ids[i], ids[i + 1], step) for i in range(n - 1)]
    return length_metric(edges, id=f"path-{n}", vertices=ids, basepoint=ids[0],
                         boundary=[ids[0], ids[-1]])


def cycle_space(n: int, step: float = 1.0) -> DiscretizedLengthSpace:
    """Cycle graph c00 ... c(n-1) with edges of length step"""
    if n < 3:
        raise InputError(f"cycle needs at least 3 vertices, got {n}")
    w = _width(n)
    ids = [f"c{i:0{w}d}" for i in range(n)]
    edges = [(ids[i], ids[(i + 1) % n], step) for i in range(n)]
    return length_metric(edges, id=f"cycle-{n}", basepoint=ids[0])


def grid_space(rows: int, cols: Optional[int] = None, step: float = 1.0,
               neighbours: int = 4) -> DiscretizedLengthSpace:
    """Lattice graph with 4- or 8-neighbour moves; the outer ring is tagged as boundary"""
    cols = rows if cols is None else cols
    if rows < 1 or cols < 1:
        raise InputError(f"grid needs positive dimensions, got {rows}x{cols}")
    if neighbours not in (4, 8):
        raise InputError(f"neighbours must be 4 or 8, got {neighbours}")
    w = _width(max(rows, cols))

    def name(i, j):
        return f"g{i:0{w}d}_{j:0{w}d}"

    moves = [(0, 1, step), (1, 0, step)]
    if neighbours == 8:
        moves += [(1, 1, step * math.sqrt(2)), (1, -1, step * math.sqrt(2))]
    edges = []
    for i in range(rows):
        for j in range(cols):
            for di, dj, length in moves:
                if 0 <= i + di < rows and 0 <= j + dj < cols:
                    edges.append((name(i, j), name(i + di, j + dj), length))
    vertices = [name(i, j) for i in range(rows) for j in range(cols)]
    ring = [name(i, j) for i in range(rows) for j in range(cols)
            if i in (0, rows - 1) or j in (0, cols - 1)]
    return length_metric(edges, id=f"grid-{rows}x{cols}", vertices=vertices,
                         basepoint=name(0, 0), boundary=ring)


def line_points(n: int = 11, start: float = 0.0, stop: float = 1.0) -> FiniteMetricSpace:
    """n evenly spaced points of an interval with the restricted metric"""
    coords = np.linspace(start, stop, n)
    return euclidean_space(coords, id=f"line-{n}", basepoint=None)


def circle_sample(n: int = 200, radius: float = 1.0) -> Tuple[FiniteMetricSpace, np.ndarray]:
    """Evenly spaced points on a circle with planar distances, plus their coordinates"""
    if n < 3:
        raise InputError(f"circle sample needs at least 3 points, got {n}")
    angles = 2 * np.pi * np.arange(n) / n
    coords = radius * np.stack([np.cos(angles), np.sin(angles)], axis=1)
    return euclidean_space(coords, id=f"circle-{n}"), coords


def circle_length_space(n: int, radius: float = 1.0) -> DiscretizedLengthSpace:
    """Polygonal circle: the cycle with chord lengths, close to arc length for large n"""
    chord = 2 * radius * math.sin(math.pi / n)
    space = cycle_space(n, chord)
    return DiscretizedLengthSpace(f"circle-arc-{n}", space.points, space.edges, space.basepoint)


def annulus_lattice(inner: float = 1.0, outer: float = 1.5, spacing: float = 0.1,
                    margin: float = 1.0) -> Tuple[DiscretizedLengthSpace, List[str]]:
    """8-neighbour lattice on a square around the annulus, and the ids of the annulus nodes

    The lattice extends margin beyond the outer radius so r-neighbourhoods of
    the annulus stay inside it.
    """
    if not 0 < inner < outer:
        raise InputError(f"annulus needs 0 < inner < outer, got {inner}, {outer}")
    half = int(math.ceil((outer + margin) / spacing))
    size = 2 * half + 1
    grid = grid_space(size, size, spacing, neighbours=8)
    w = _width(size)
    subset = []
    for i in range(size):
        for j in range(size):
            r = spacing * math.hypot(i - half, j - half)
            if inner - 1e-9 <= r <= outer + 1e-9:
                subset.append(f"g{i:0{w}d}_{j:0{w}d}")
    space = DiscretizedLengthSpace(f"annulus-{inner:g}-{outer:g}", grid.points, grid.edges,
                                   f"g{half:0{w}d}_{half:0{w}d}")
    return space, subset


def random_space(n: int, seed: Optional[int] = None, kind: str = "euclidean") -> MetricSpace:
    """Seeded random space: planar points, or a connected random weighted graph"""
    if n < 1:
        raise InputError(f"random space needs at least one point, got {n}")
    seed = settings.default_seed if seed is None else seed
    rng = np.random.default_rng(seed)
    if kind == "euclidean":
        return euclidean_space(rng.random((n, 2)), id=f"random-{n}-s{seed}")
    if kind == "graph":
        g = nx.gnp_random_graph(n, min(1.0, 3.0 / max(n, 1)), seed=seed)
        # a random spanning path keeps it connected
        order = rng.permutation(n)
        g.add_edges_from(zip(order[:-1], order[1:]))
        w = _width(n)
        edges = [(f"v{u:0{w}d}", f"v{v:0{w}d}", float(rng.uniform(0.5, 2.0))) for u, v in sorted(g.edges)]
        return length_metric(edges, id=f"random-graph-{n}-s{seed}", vertices=[f"v{i:0{w}d}" for i in range(n)])
    raise InputError(f"random space kind must be 'euclidean' or 'graph', got {kind!r}")


def bundled_spaces() -> List[MetricSpace]:
    """Ten small spaces used by smoke runs and the default sandwich config"""
    two = FiniteMetricSpace("two-point", ("a", "b"), [[0, 1], [1, 0]])
    triangle = FiniteMetricSpace("equilateral", ("a", "b", "c"), 1 - np.eye(3))
    tetra = FiniteMetricSpace("four-equidistant", ("a", "b", "c", "d"), 1 - np.eye(4))
    return [
        two,
        triangle,
        tetra,
        line_points(11),
        path_space(5),
        cycle_space(4),
        cycle_space(12, 0.5),
        grid_space(4),
        circle_sample(12)[0],
        random_space(8, seed=0),
    ]


# Euclidean domains

_CLOSED = 1e-9


def _box_depth(x: np.ndarray, lo: Tuple[float, float], hi: Tuple[float, float]) -> np.ndarray:
    return np.minimum(np.min(x - np.asarray(lo), axis=1), np.min(np.asarray(hi) - x, axis=1))


def half_plane(extent: float = 1.0) -> EuclideanDomain:
    """{y > 0}, viewed through the box [-extent, extent] x [0, extent]"""
    return EuclideanDomain(
        "half-plane", 2, (-extent, 0.0), (extent, extent),
        inside=lambda x: x[:, 1] > -_CLOSED,
        depth=lambda x: x[:, 1],
    )


def square(side: float = 1.0) -> EuclideanDomain:
    """Closed square [0, side]^2"""
    lo, hi = (0.0, 0.0), (side, side)
    return EuclideanDomain(
        "square", 2, lo, hi,
        inside=lambda x: _box_depth(x, lo, hi) >= -_CLOSED,
        depth=lambda x: _box_depth(x, lo, hi),
    )


def disk(radius: float = 1.0) -> EuclideanDomain:
    return EuclideanDomain(
        "disk", 2, (-radius, -radius), (radius, radius),
        inside=lambda x: np.linalg.norm(x, axis=1) <= radius + _CLOSED,
        depth=lambda x: radius - np.linalg.norm(x, axis=1),
    )


def corridor_squares(width: float = 1e-3, gap: float = 1.0) -> EuclideanDomain:
    """Two unit squares joined along y = 1/2 by a corridor of the given width"""
    pieces = [
        ((0.0, 0.0), (1.0, 1.0)),
        ((1.0 + gap, 0.0), (2.0 + gap, 1.0)),
        ((1.0, 0.5 - width / 2), (1.0 + gap, 0.5 + width / 2)),
    ]

    def depth(x):
        return np.max([_box_depth(x, lo, hi) for lo, hi in pieces], axis=0)

    return EuclideanDomain(
        "corridor-squares", 2, (0.0, 0.0), (2.0 + gap, 1.0),
        inside=lambda x: depth(x) >= -_CLOSED,
        depth=depth,
    )


def sine_curve_domain() -> EuclideanDomain:
    """{0 < x < 1, -2 < y < sin(1/x)}: the region under the topologist's sine curve"""

    def inside(x):
        px, py = x[:, 0], x[:, 1]
        out = np.zeros(len(x), dtype=bool)
        pos = (px > 0) & (px < 1)
        out[pos] = (py[pos] > -2) & (py[pos] < np.sin(1.0 / px[pos]))
        return out

    return EuclideanDomain("sine-curve", 2, (0.0, -2.0), (1.0, 1.0), inside=inside)


def distorted_rays(i: int, length: float = 2.0) -> EuclideanDomain:
    """Union over k <= i of 100^-k neighbourhoods of rays from o in directions (1, 2^-k)

    The rays are cut at the given length so the domain has a bounding box.
    """
    if i < 1:
        raise InputError(f"need at least one ray, got i={i}")
    dirs = [np.array([1.0, 2.0 ** -k]) / math.hypot(1.0, 2.0 ** -k) for k in range(1, i + 1)]
    radii = [100.0 ** -k for k in range(1, i + 1)]

    def depth(x):
        best = np.full(len(x), -np.inf)
        for d, r in zip(dirs, radii):
            t = np.clip(x @ d, 0.0, length)
            dist = np.linalg.norm(x - t[:, None] * d[None, :], axis=1)
            best = np.maximum(best, r - dist)
        return best

    return EuclideanDomain(
        f"distorted-rays-{i}", 2, (-0.01, -0.01), (length + 0.01, length * 0.5 + 0.01),
        inside=lambda x: depth(x) > 0,
        depth=depth,
    )


SPACE_GENERATORS: Dict[str, Callable[..., MetricSpace]] = {
    "path": path_space,
    "cycle": cycle_space,
    "grid": grid_space,
    "line": line_points,
    "circle": lambda n=200, radius=1.0: circle_sample(n, radius)[0],
    "circle-arc": circle_length_space,
    "annulus": lambda **kw: annulus_lattice(**kw)[0],
    "random": random_space,
}

DOMAIN_GENERATORS: Dict[str, Callable[..., EuclideanDomain]] = {
    "half-plane": half_plane,
    "square": square,
    "disk": disk,
    "corridor-squares": corridor_squares,
    "sine-curve": sine_curve_domain,
    "distorted-rays": distorted_rays,
}


def generate_space(kind: str, **params) -> MetricSpace:
    """Build a named space generator with keyword parameters"""
    try:
        factory = SPACE_GENERATORS[kind]
    except KeyError:
        raise InputError(f"unknown space generator {kind!r}; choose from {sorted(SPACE_GENERATORS)}") from None
    try:
        return factory(**params)
    except TypeError as e:
        raise InputError(f"bad parameters for {kind!r}: {e}") from None


def generate_domain(kind: str, **params) -> EuclideanDomain:
    try:
        factory = DOMAIN_GENERATORS[kind]
    except KeyError:
        raise InputError(f"unknown domain generator {kind!r}; choose from {sorted(DOMAIN_GENERATORS)}") from None
    try:
        return factory(**params)
    except TypeError as e:
        raise InputError(f"bad parameters for {kind!r}: {e}") from None
