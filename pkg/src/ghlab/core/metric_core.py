"""
Metric core for ghlab
Finite metric spaces, graph-discretized length spaces, restriction and balls
"""

import logging
from dataclasses import dataclass
from functools import cached_property
from typing import Dict, FrozenSet, Iterable, List, Optional, Sequence, Tuple, Union

import networkx as nx
import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import dijkstra
from scipy.spatial.distance import cdist

from ..config_loader import settings
from .errors import InputError

logger = logging.getLogger(__name__)

Edge = Tuple[str, str, float]

# Rows of at most this many floats are produced per Dijkstra batch
_ROW_BUDGET = 20_000_000


class MetricSpace:
    """Shared interface of finite and graph-backed metric spaces"""

    id: str
    points: Tuple[str, ...]
    basepoint: Optional[str]
    measure: Optional[Dict[str, float]]
    boundary: FrozenSet[str]

    @property
    def n(self) -> int:
        return len(self.points)

    @property
    def resolution(self) -> float:
        return 0.0

    @cached_property
    def _index(self) -> Dict[str, int]:
        return {p: i for i, p in enumerate(self.points)}

    @cached_property
    def id_rank(self) -> np.ndarray:
        """Rank of every point in lexicographic id order, used for tie-breaks"""
        order = sorted(range(self.n), key=self.points.__getitem__)
        rank = np.empty(self.n, dtype=int)
        rank[order] = np.arange(self.n)
        return rank

    def index(self, point: str) -> int:
        try:
            return self._index[point]
        except KeyError:
            raise InputError(f"point {point!r} is not in space {self.id!r}") from None

    def indices(self, subset: Iterable[str]) -> np.ndarray:
        """Indices of a subset, in the space's own point order"""
        idx = sorted({self.index(p) for p in subset})
        return np.asarray(idx, dtype=int)

    def weights(self) -> np.ndarray:
        """Measure as a vector aligned with points (counting measure if absent)"""
        if self.measure is None:
            return np.ones(self.n)
        return np.array([self.measure[p] for p in self.points], dtype=float)

    def rows(self, indices: Sequence[int], limit: Optional[float] = None) -> np.ndarray:
        raise NotImplementedError

    def row(self, i: int, limit: Optional[float] = None) -> np.ndarray:
        return self.rows([i], limit)[0]

    def iter_rows(self, indices: Sequence[int], limit: Optional[float] = None):
        """Yield (chunk_indices, rows) in batches that keep memory bounded"""
        indices = np.asarray(indices, dtype=int)
        chunk = max(1, _ROW_BUDGET // max(1, self.n))
        for start in range(0, len(indices), chunk):
            part = indices[start:start + chunk]
            yield part, self.rows(part, limit)

    def distance(self, x: str, y: str) -> float:
        return float(self.row(self.index(x))[self.index(y)])

    @property
    def matrix(self) -> np.ndarray:
        raise NotImplementedError

    def diameter(self) -> float:
        return float(np.max(self.matrix)) if self.n > 1 else 0.0


def _check_tags(space: MetricSpace):
    """Validate base point, measure and boundary against the point list"""
    if space.basepoint is not None and space.basepoint not in space._index:
        raise InputError(f"basepoint {space.basepoint!r} is not a point of {space.id!r}")
    if space.measure is not None:
        missing = [p for p in space.points if p not in space.measure]
        if missing:
            raise InputError(f"measure of {space.id!r} has no weight for {missing[0]!r}")
        extra = [p for p in space.measure if p not in space._index]
        if extra:
            raise InputError(f"measure of {space.id!r} names unknown point {extra[0]!r}")
        bad = [p for p, w in space.measure.items() if not (np.isfinite(w) and w > 0)]
        if bad:
            raise InputError(f"measure weight of {bad[0]!r} must be positive")
    unknown = [p for p in space.boundary if p not in space._index]
    if unknown:
        raise InputError(f"boundary point {unknown[0]!r} is not in {space.id!r}")


def _normalize_points(points: Iterable) -> Tuple[str, ...]:
    points = tuple(str(p) for p in points)
    if not points:
        raise InputError("a space needs at least one point")
    if len(set(points)) != len(points):
        raise InputError("point ids must be unique")
    return points


@dataclass(frozen=True, eq=False)
class FiniteMetricSpace(MetricSpace):
    """Point set with an explicit distance table"""
    id: str
    points: Tuple[str, ...]
    dist: np.ndarray
    basepoint: Optional[str] = None
    measure: Optional[Dict[str, float]] = None
    boundary: FrozenSet[str] = frozenset()

    def __post_init__(self):
        points = _normalize_points(self.points)
        dist = np.array(self.dist, dtype=float)
        if dist.ndim != 2 or dist.shape[0] != dist.shape[1]:
            raise InputError(f"distance table of {self.id!r} must be square, got shape {dist.shape}")
        if dist.shape[0] != len(points):
            raise InputError(
                f"distance table of {self.id!r} has {dist.shape[0]} rows for {len(points)} points"
            )
        if not np.all(np.isfinite(dist)):
            raise InputError(f"distance table of {self.id!r} contains non-finite entries")
        if np.any(dist < 0):
            raise InputError(f"distance table of {self.id!r} contains negative entries")
        dist.setflags(write=False)
        object.__setattr__(self, "points", points)
        object.__setattr__(self, "dist", dist)
        object.__setattr__(self, "boundary", frozenset(str(p) for p in self.boundary))
        if self.measure is not None:
            object.__setattr__(self, "measure", {str(k): float(v) for k, v in self.measure.items()})
        _check_tags(self)

    def rows(self, indices: Sequence[int], limit: Optional[float] = None) -> np.ndarray:
        block = self.dist[np.asarray(indices, dtype=int)]
        if limit is not None:
            block = np.where(block <= limit, block, np.inf)
        return np.array(block)

    @property
    def matrix(self) -> np.ndarray:
        return self.dist


@dataclass(frozen=True, eq=False)
class DiscretizedLengthSpace(MetricSpace):
    """Weighted graph whose shortest-path metric stands in for a length space"""
    id: str
    points: Tuple[str, ...]
    edges: Tuple[Edge, ...]
    basepoint: Optional[str] = None
    measure: Optional[Dict[str, float]] = None
    boundary: FrozenSet[str] = frozenset()

    def __post_init__(self):
        points = _normalize_points(self.points)
        object.__setattr__(self, "points", points)
        object.__setattr__(self, "boundary", frozenset(str(p) for p in self.boundary))
        if self.measure is not None:
            object.__setattr__(self, "measure", {str(k): float(v) for k, v in self.measure.items()})
        object.__setattr__(self, "edges", _dedupe_edges(self.edges, self._index))
        _check_tags(self)

    @cached_property
    def resolution(self) -> float:
        """h: the maximum edge length"""
        return max((w for _, _, w in self.edges), default=0.0)

    @cached_property
    def csgraph(self) -> csr_matrix:
        n = self.n
        if not self.edges:
            return csr_matrix((n, n))
        u = np.array([self._index[a] for a, _, _ in self.edges])
        v = np.array([self._index[b] for _, b, _ in self.edges])
        w = np.array([c for _, _, c in self.edges], dtype=float)
        return csr_matrix((np.concatenate([w, w]), (np.concatenate([u, v]), np.concatenate([v, u]))),
                          shape=(n, n))

    @cached_property
    def graph(self) -> nx.Graph:
        g = nx.Graph()
        g.add_nodes_from(self.points)
        g.add_weighted_edges_from(self.edges)
        return g

    def rows(self, indices: Sequence[int], limit: Optional[float] = None) -> np.ndarray:
        idx = np.asarray(indices, dtype=int)
        out = dijkstra(self.csgraph, directed=True, indices=idx,
                       limit=np.inf if limit is None else float(limit))
        return np.atleast_2d(out)

    @cached_property
    def matrix(self) -> np.ndarray:
        full = dijkstra(self.csgraph, directed=True)
        full.setflags(write=False)
        return full

    @cached_property
    def metric(self) -> FiniteMetricSpace:
        """The shortest-path metric as an explicit FiniteMetricSpace"""
        return FiniteMetricSpace(self.id, self.points, self.matrix, self.basepoint,
                                 self.measure, self.boundary)

    def diameter(self) -> float:
        if self.n <= settings.dense_max_points:
            return super().diameter()
        # double sweep lower estimate, exact on trees and good on meshes
        start = self._index.get(self.basepoint, 0) if self.basepoint else 0
        far = int(np.argmax(self.row(start)))
        return float(np.max(self.row(far)))


def _dedupe_edges(edges: Iterable, index: Dict[str, int]) -> Tuple[Edge, ...]:
    best: Dict[Tuple[str, str], float] = {}
    for u, v, w in edges:
        u, v, w = str(u), str(v), float(w)
        if u not in index or v not in index:
            raise InputError(f"edge ({u!r}, {v!r}) references an unknown vertex")
        if u == v:
            raise InputError(f"self-loop at {u!r} is not allowed")
        if not (np.isfinite(w) and w > 0):
            raise InputError(f"edge ({u!r}, {v!r}) needs a positive finite length, got {w}")
        key = (u, v) if u < v else (v, u)
        if key not in best or w < best[key]:
            best[key] = w
    return tuple((u, v, w) for (u, v), w in sorted(best.items()))


@dataclass
class MetricValidation:
    """Result of an axiom check"""
    passed: bool
    reason: str
    violation: Optional[Tuple[str, ...]] = None
    excess: float = 0.0


def validate_metric(space: MetricSpace, tolerance: Optional[float] = None) -> MetricValidation:
    """Check identity, symmetry and the triangle inequality; report the worst triple"""
    tol = settings.metric_tolerance if tolerance is None else tolerance
    D = space.matrix
    n = space.n
    if D.shape != (n, n):
        raise InputError(f"distance table shape {D.shape} does not match {n} points")

    diag = np.abs(np.diag(D))
    if np.any(diag > tol):
        i = int(np.argmax(diag))
        return MetricValidation(False, "identity", (space.points[i], space.points[i]), float(diag[i]))

    asym = np.abs(D - D.T)
    if np.any(asym > tol):
        i, j = np.unravel_index(int(np.argmax(asym)), asym.shape)
        return MetricValidation(False, "symmetry", (space.points[i], space.points[j]), float(asym[i, j]))

    best = 0.0
    triple = None
    for y in range(n):
        excess = D - (D[:, y][:, None] + D[y, :][None, :])
        flat = int(np.argmax(excess))
        value = float(excess.flat[flat])
        if value > best:
            x, z = np.unravel_index(flat, excess.shape)
            best = value
            triple = (space.points[x], space.points[y], space.points[z])

    if best > tol:
        return MetricValidation(False, "triangle", triple, best)
    return MetricValidation(True, "ok", None, best)


def length_metric(graph: Union[nx.Graph, Iterable[Edge]], id: str = "graph",
                  vertices: Optional[Iterable[str]] = None,
                  basepoint: Optional[str] = None,
                  measure: Optional[Dict[str, float]] = None,
                  boundary: Optional[Iterable[str]] = None) -> DiscretizedLengthSpace:
    """Shortest-path metric of a connected, positively weighted graph"""
    if isinstance(graph, nx.Graph):
        edges = [(u, v, d.get("weight", 1.0)) for u, v, d in graph.edges(data=True)]
        names = list(graph.nodes)
    else:
        edges = list(graph)
        names = []
    names = {str(p) for p in names}
    names.update(str(p) for p in (vertices or ()))
    for u, v, _ in edges:
        names.update((str(u), str(v)))
    points = tuple(sorted(names))

    space = DiscretizedLengthSpace(id, points, tuple(edges), basepoint, measure,
                                   frozenset(boundary or ()))

    components = sorted((sorted(c) for c in nx.connected_components(space.graph)),
                        key=lambda c: c[0])
    if len(components) > 1:
        raise InputError(
            f"graph {id!r} is disconnected: {components[0][0]!r} cannot reach "
            f"{components[1][0]!r} ({len(components)} components); split it into components first"
        )
    return _prune_redundant_edges(space)


def _prune_redundant_edges(space: DiscretizedLengthSpace) -> DiscretizedLengthSpace:
    """Drop edges longer than a path between their endpoints"""
    if space.n > settings.dense_max_points or not space.edges:
        return space
    D = space.matrix
    tol = settings.metric_tolerance
    kept = [e for e in space.edges if e[2] <= D[space._index[e[0]], space._index[e[1]]] + tol]
    if len(kept) == len(space.edges):
        return space
    logger.debug("dropping %d redundant edges from %s", len(space.edges) - len(kept), space.id)
    return DiscretizedLengthSpace(space.id, space.points, tuple(kept), space.basepoint,
                                  space.measure, space.boundary)


def restrict(space: MetricSpace, subset: Iterable[str], id: Optional[str] = None) -> FiniteMetricSpace:
    """Restricted (not re-intrinsified) metric on a subset"""
    subset = list(subset)
    if not subset:
        raise InputError("cannot restrict to an empty subset")
    idx = space.indices(subset)
    block = space.rows(idx)[:, idx]
    points = tuple(space.points[i] for i in idx)
    keep = set(points)
    measure = None
    if space.measure is not None:
        measure = {p: space.measure[p] for p in points}
    basepoint = space.basepoint if space.basepoint in keep else None
    return FiniteMetricSpace(id or f"{space.id}|restricted", points, block, basepoint, measure,
                             frozenset(space.boundary & keep))


def ball_indices(space: MetricSpace, center: int, r: float, mode: str = "open") -> np.ndarray:
    """Indices of the open or closed ball of radius r"""
    if r < 0:
        raise InputError(f"ball radius must be nonnegative, got {r}")
    tol = settings.ball_tolerance
    d = space.row(center, limit=r + tol)
    if mode == "open":
        return np.flatnonzero(d < r - tol)
    if mode == "closed":
        return np.flatnonzero(d <= r + tol)
    raise InputError(f"ball mode must be 'open' or 'closed', got {mode!r}")


def ball(space: MetricSpace, center: str, r: float, mode: str = "open") -> Tuple[str, ...]:
    """B_r(center): points at distance < r (open) or <= r (closed)"""
    idx = ball_indices(space, space.index(center), r, mode)
    return tuple(space.points[i] for i in idx)


@dataclass
class MidpointDefect:
    """Worst approximate-midpoint defect of a space"""
    defect: float
    pair: Optional[Tuple[str, str]]
    midpoint: Optional[str]


def midpoint_defect(space: MetricSpace) -> MidpointDefect:
    """max over pairs of min over m of the deviation of m from being a midpoint"""
    D = space.matrix
    n = space.n
    worst = MidpointDefect(0.0, None, None)
    for u in range(n):
        half = D[u, :][:, None] / 2.0
        cost = np.maximum(np.abs(D[u, :][None, :] - half), np.abs(D - half))
        best_m = np.argmin(cost, axis=1)
        best = cost[np.arange(n), best_m]
        v = int(np.argmax(best))
        if best[v] > worst.defect:
            worst = MidpointDefect(float(best[v]), (space.points[u], space.points[v]),
                                   space.points[int(best_m[v])])
    return worst


def rescale(space: MetricSpace, factor: float) -> MetricSpace:
    """Multiply every distance by factor > 0"""
    if not factor > 0:
        raise InputError(f"scale factor must be positive, got {factor}")
    if isinstance(space, DiscretizedLengthSpace):
        edges = tuple((u, v, w * factor) for u, v, w in space.edges)
        return DiscretizedLengthSpace(space.id, space.points, edges, space.basepoint,
                                      space.measure, space.boundary)
    return FiniteMetricSpace(space.id, space.points, space.matrix * factor, space.basepoint,
                             space.measure, space.boundary)


def euclidean_space(coords: np.ndarray, ids: Optional[List[str]] = None, id: str = "euclidean",
                    **tags) -> FiniteMetricSpace:
    """Finite metric space of points with Euclidean distances"""
    coords = np.asarray(coords, dtype=float)
    if coords.ndim == 1:
        coords = coords[:, None]
    if ids is None:
        width = len(str(len(coords)))
        ids = [f"x{i:0{width}d}" for i in range(len(coords))]
    return FiniteMetricSpace(id, tuple(ids), cdist(coords, coords), **tags)
