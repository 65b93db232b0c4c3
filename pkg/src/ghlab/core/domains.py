"""
Graph domains for ghlab
r-interiors, undistortedness certificates and the delta-intrinsic and
r-extrinsic metrics on subsets
"""

import logging
from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable, Dict, FrozenSet, Iterable, List, Optional, Sequence, Tuple, Union

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components, dijkstra, shortest_path

from ..config_loader import settings
from .errors import InputError
from .metric_core import DiscretizedLengthSpace, FiniteMetricSpace, MetricSpace, length_metric

logger = logging.getLogger(__name__)

Profile = Union[Callable[[float], float], Dict[float, float], float]


@dataclass(frozen=True, eq=False)
class DomainInGraph:
    """Connected vertex set of an ambient graph with a tagged discrete boundary"""
    ambient: DiscretizedLengthSpace
    vertices: FrozenSet[str]
    boundary: FrozenSet[str]

    def __post_init__(self):
        vertices = frozenset(self.vertices)
        boundary = frozenset(self.boundary)
        if not vertices:
            raise InputError("a domain needs at least one vertex")
        outside = boundary - vertices
        if outside:
            raise InputError(f"boundary vertex {sorted(outside)[0]!r} is not in the domain")
        object.__setattr__(self, "vertices", vertices)
        object.__setattr__(self, "boundary", boundary)

    @cached_property
    def intrinsic(self) -> DiscretizedLengthSpace:
        """d_W: length metric of the induced subgraph"""
        keep = self.vertices
        edges = [e for e in self.ambient.edges if e[0] in keep and e[1] in keep]
        return length_metric(edges, id=f"{self.ambient.id}|domain", vertices=keep,
                             boundary=self.boundary,
                             basepoint=self.ambient.basepoint if self.ambient.basepoint in keep else None,
                             measure=None if self.ambient.measure is None
                             else {p: self.ambient.measure[p] for p in keep})

    @property
    def resolution(self) -> float:
        return self.intrinsic.resolution

    @cached_property
    def boundary_distance(self) -> np.ndarray:
        """d_W(x, boundary) for every vertex, in intrinsic point order"""
        space = self.intrinsic
        if not self.boundary:
            return np.full(space.n, np.inf)
        return _distance_to_set(space, space.indices(self.boundary))


def _distance_to_set(space: DiscretizedLengthSpace, sources: np.ndarray) -> np.ndarray:
    return np.asarray(dijkstra(space.csgraph, directed=True, indices=sources, min_only=True))


def domain_from_space(space: DiscretizedLengthSpace,
                      vertices: Optional[Iterable[str]] = None) -> DomainInGraph:
    """Domain on a vertex subset, taking the boundary from the space's tags"""
    keep = frozenset(space.points if vertices is None else vertices)
    return DomainInGraph(space, keep, space.boundary & keep)


def sublevel_domain(space: DiscretizedLengthSpace, core: Iterable[str], r: float) -> DomainInGraph:
    """Closed r-neighbourhood of a vertex set; boundary = vertices with a neighbour outside"""
    sources = space.indices(core)
    d = _distance_to_set(space, sources)
    inside = d <= r + settings.ball_tolerance
    keep = frozenset(space.points[i] for i in np.flatnonzero(inside))
    graph = space.csgraph.tocoo()
    leaving = inside[graph.row] & ~inside[graph.col]
    boundary = frozenset(space.points[i] for i in np.unique(graph.row[leaving]))
    return DomainInGraph(space, keep, boundary)


def domain_from_membership(grid) -> DomainInGraph:
    """Domain on the inside lattice points of a membership grid"""
    space = grid.lattice_space()
    return DomainInGraph(space, frozenset(space.points), space.boundary)


def r_interior(domain: DomainInGraph, t: float) -> Tuple[str, ...]:
    """W_t: vertices with d_W(x, boundary) > t"""
    if t < 0:
        raise InputError(f"t must be nonnegative, got {t}")
    space = domain.intrinsic
    idx = np.flatnonzero(domain.boundary_distance > t + settings.ball_tolerance)
    return tuple(space.points[i] for i in idx)


def _profile(s: Profile) -> Callable[[float], float]:
    if callable(s):
        return s
    if isinstance(s, dict):
        table = {float(k): float(v) for k, v in s.items()}

        def lookup(t: float) -> float:
            for key, value in table.items():
                if abs(key - t) <= 1e-12:
                    return value
            raise InputError(f"profile table has no entry for t={t}")
        return lookup
    tau = float(s)
    return lambda t: tau * t


@dataclass
class TVerdict:
    t: float
    s: float
    passed: bool
    max_distance: float
    interior_size: int
    worst_vertex: Optional[str]


@dataclass
class UndistortednessCertificate:
    t_grid: List[float]
    s_values: List[float]
    verdicts: List[TVerdict]
    resolution: float
    slack: float
    minimal_tau: Optional[float]
    lipschitz_tau: Optional[float] = None
    passed: bool = field(init=False)

    def __post_init__(self):
        self.passed = all(v.passed for v in self.verdicts)

    def to_dict(self) -> dict:
        return {
            "t_grid": self.t_grid,
            "s_values": self.s_values,
            "resolution": self.resolution,
            "tolerance": self.slack * self.resolution,
            "minimal_tau": self.minimal_tau,
            "lipschitz_tau": self.lipschitz_tau,
            "passed": self.passed,
            "verdicts": [v.__dict__ for v in self.verdicts],
        }


def _coverage(domain: DomainInGraph, t: float) -> Tuple[float, Optional[str], int]:
    """Largest d_W from a vertex to the t-interior"""
    space = domain.intrinsic
    interior = np.flatnonzero(domain.boundary_distance > t + settings.ball_tolerance)
    if len(interior) == 0:
        worst = int(np.argmin(space.id_rank))
        return np.inf, space.points[worst], 0
    d = _distance_to_set(space, interior)
    worst = int(np.lexsort((space.id_rank, -d))[0])
    return float(d[worst]), space.points[worst], len(interior)


def undistortedness_certificate(domain: DomainInGraph, t_grid: Sequence[float], s: Profile,
                                slack: float = 1.0) -> UndistortednessCertificate:
    """Check that every vertex lies within s(t) + slack*h of the t-interior"""
    h = domain.resolution
    profile = _profile(s)
    t_grid = [float(t) for t in t_grid]
    if not t_grid:
        raise InputError("t grid is empty")
    too_small = [t for t in t_grid if t <= 2 * h]
    if too_small:
        raise InputError(f"t={too_small[0]:g} is not above twice the resolution h={h:g}")

    verdicts: List[TVerdict] = []
    taus: List[float] = []
    for t in t_grid:
        s_t = float(profile(t))
        reach, worst, size = _coverage(domain, t)
        passed = reach <= s_t + slack * h + settings.metric_tolerance
        verdicts.append(TVerdict(t, s_t, passed, reach, size, None if passed else worst))
        taus.append(max(0.0, reach - slack * h) / t)
        logger.debug("undistortedness at t=%g: reach %.4g vs s(t)=%.4g", t, reach, s_t)

    minimal_tau = max(taus) if all(np.isfinite(taus)) else None
    cert = UndistortednessCertificate(t_grid, [v.s for v in verdicts], verdicts, h, slack, minimal_tau)
    if cert.passed:
        cert.lipschitz_tau = minimal_tau
    return cert


@dataclass
class ExhaustionStep:
    t: float
    s: float
    interior_size: int
    nested: bool
    max_distance: float
    passed: bool


def exhaustion_certificate(domain: DomainInGraph,
                           schedule: Sequence[Tuple[float, float]]) -> List[ExhaustionStep]:
    """Per step j: W_j = t_j-interior nonempty, nested in W_{j+1}, and W within s_j + h of W_j"""
    h = domain.resolution
    steps: List[ExhaustionStep] = []
    previous_t = np.inf
    for t, s in schedule:
        reach, _, size = _coverage(domain, t)
        nested = t <= previous_t
        passed = size > 0 and nested and reach <= s + h + settings.metric_tolerance
        steps.append(ExhaustionStep(float(t), float(s), size, nested, reach, passed))
        previous_t = t
    return steps


def _components_message(labels: np.ndarray, points: Sequence[str]) -> str:
    groups: Dict[int, List[str]] = {}
    for label, p in zip(labels, points):
        groups.setdefault(int(label), []).append(p)
    parts = sorted((sorted(g) for g in groups.values()), key=lambda g: g[0])
    shown = ", ".join(f"[{g[0]}..] ({len(g)})" for g in parts[:5])
    return f"{len(parts)} components: {shown}"


def delta_intrinsic_metric(ambient: MetricSpace, subset: Iterable[str], delta: float,
                           id: Optional[str] = None) -> FiniteMetricSpace:
    """d^delta on a subset: shortest chains whose steps are at most delta"""
    if not delta > 0:
        raise InputError(f"delta must be positive, got {delta}")
    idx = ambient.indices(subset)
    if len(idx) == 0:
        raise InputError("subset is empty")
    block = np.vstack([rows[:, idx] for _, rows in ambient.iter_rows(idx)])
    points = [ambient.points[i] for i in idx]
    steps = np.where(block <= delta + settings.metric_tolerance, block, 0.0)
    np.fill_diagonal(steps, 0.0)
    graph = csr_matrix(steps)
    count, labels = connected_components(graph, directed=False)
    if count > 1:
        raise InputError(f"delta={delta:g} chain graph is disconnected: "
                         f"{_components_message(labels, points)}")
    # zero-length steps between distinct points are dropped by csr; restore them
    zero = (block <= settings.metric_tolerance) & ~np.eye(len(idx), dtype=bool)
    dist = shortest_path(graph, directed=False)
    if zero.any():
        dist = np.minimum(dist, np.where(zero, 0.0, np.inf))
    return FiniteMetricSpace(id or f"{ambient.id}|delta={delta:g}", tuple(points), dist)


def r_extrinsic_metric(ambient: DiscretizedLengthSpace, subset: Iterable[str], r: float,
                       id: Optional[str] = None) -> FiniteMetricSpace:
    """Length metric of the widened r-neighbourhood of a subset, restricted to the subset

    The neighbourhood is {x : d(x, subset) < r + h} with h the ambient
    resolution, not {d < r}: vertices up to one mesh step past r are kept so
    edges leaving the subset are never cut at sub-resolution radii. Distances
    are therefore those of this widened set.
    """
    if not r > 0:
        raise InputError(f"r must be positive, got {r}")
    if not isinstance(ambient, DiscretizedLengthSpace):
        raise InputError("r-extrinsic metric needs a graph length space")
    idx = ambient.indices(subset)
    if len(idx) == 0:
        raise InputError("subset is empty")
    d = _distance_to_set(ambient, idx)
    hood = np.flatnonzero(d < r + ambient.resolution)
    sub = ambient.csgraph[hood][:, hood]
    count, labels = connected_components(sub, directed=False)
    if count > 1:
        points = [ambient.points[i] for i in hood]
        raise InputError(f"r={r:g} neighbourhood is disconnected: {_components_message(labels, points)}")
    position = np.searchsorted(hood, idx)
    dist = dijkstra(sub, directed=False, indices=position)[:, position]
    return FiniteMetricSpace(id or f"{ambient.id}|extrinsic={r:g}",
                             tuple(ambient.points[i] for i in idx), dist)
