"""
Covers for ghlab
Truncated universal covers of mesh regions by coset-style unfolding, and
normal covers as lifted components of a smaller ball
"""

import heapq
import logging
from collections import defaultdict, deque
from dataclasses import dataclass
from functools import cached_property
from typing import Dict, FrozenSet, Iterable, List, Optional, Tuple

import networkx as nx
import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import dijkstra

from ..config_loader import settings
from .complexes import PolygonComplex
from .errors import InfeasibleError, InputError
from .metric_core import DiscretizedLengthSpace, ball, length_metric

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class CoverGraph:
    """Lifted mesh region around a lifted base point, truncated at distance trunc"""
    base: DiscretizedLengthSpace
    complex: PolygonComplex
    center: str
    region: FrozenSet[str]
    lifted: Tuple[str, ...]
    projection: Dict[str, str]
    edges: Tuple[Tuple[str, str, float], ...]
    root: str
    trunc: float
    truncated: bool
    dists: Dict[str, float]

    @cached_property
    def space(self) -> DiscretizedLengthSpace:
        return length_metric(self.edges, id=f"{self.complex.name}|cover", vertices=self.lifted,
                             basepoint=self.root)

    @cached_property
    def fibers(self) -> Dict[str, List[str]]:
        table: Dict[str, List[str]] = defaultdict(list)
        for v in self.lifted:
            table[self.projection[v]].append(v)
        return {b: sorted(vs, key=lambda v: (self.dists[v], v)) for b, vs in sorted(table.items())}

    def lifts(self, base_vertex: str, within: Optional[float] = None) -> List[str]:
        """Lifts of a base vertex, optionally only those within a lifted distance of the root"""
        found = self.fibers.get(base_vertex, [])
        if within is None:
            return list(found)
        return [v for v in found if self.dists[v] <= within + settings.ball_tolerance]

    @property
    def sheets(self) -> int:
        return max((len(v) for v in self.fibers.values()), default=0)


class CoverUnfolder:
    """Lazily lifts a triangulated region, merging lifts forced equal by triangles

    Each lifted vertex keeps a star map base-neighbour -> lifted neighbour.
    Processing a lifted vertex creates the missing neighbour lifts and closes
    every triangle around it; conflicting lifts are merged through a union-find.
    """

    def __init__(self, complex_: PolygonComplex, region: Iterable[str], limit: float,
                 max_vertices: Optional[int] = None):
        self.complex = complex_
        self.names = list(complex_.vertices)
        index = {v: i for i, v in enumerate(self.names)}
        inside = set(region)
        self.limit = limit
        self.max_vertices = settings.cover_max_vertices if max_vertices is None else max_vertices

        self.neighbours: List[List[Tuple[int, float]]] = [[] for _ in self.names]
        for u, v in complex_.edges:
            if u in inside and v in inside:
                w = complex_.lengths[(u, v)]
                self.neighbours[index[u]].append((index[v], w))
                self.neighbours[index[v]].append((index[u], w))
        self.fans: List[List[Tuple[int, int]]] = [[] for _ in self.names]
        full = set()
        for t, (a, b, c) in enumerate(complex_.triangles):
            if a in inside and b in inside and c in inside:
                full.add(t)
                ia, ib, ic = index[a], index[b], index[c]
                self.fans[ia].append((ib, ic))
                self.fans[ib].append((ic, ia))
                self.fans[ic].append((ia, ib))
        self.diagonals: List[List[Tuple[int, int, float]]] = [[] for _ in self.names]
        for g in complex_.diagonals:
            tris = complex_.edge_triangles[(g.a, g.b) if g.a < g.b else (g.b, g.a)]
            if all(t in full for t in tris):
                self.diagonals[index[g.a]].append((index[g.c], index[g.d], g.length))
        self.index = index

        self.base: List[int] = []
        self.parent: List[int] = []
        self.star: List[Dict[int, int]] = []
        self.dist: List[float] = []
        self.processed: List[bool] = []
        self.heap: List[Tuple[float, int]] = []
        self.merges: deque = deque()
        self.merge_count = 0

    def find(self, i: int) -> int:
        parent = self.parent
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    def new_vertex(self, b: int, d: float) -> int:
        i = len(self.base)
        if i >= self.max_vertices:
            raise InfeasibleError(
                f"cover exceeds {self.max_vertices} lifted vertices; lower the truncation radius "
                "or coarsen the mesh"
            )
        self.base.append(b)
        self.parent.append(i)
        self.star.append({})
        self.dist.append(d)
        self.processed.append(False)
        heapq.heappush(self.heap, (d, i))
        return i

    def relax(self, i: int, d: float):
        i = self.find(i)
        if d < self.dist[i] - 1e-12:
            self.dist[i] = d
            heapq.heappush(self.heap, (d, i))

    def link(self, a: int, b: int):
        """Record that lifted a and b are joined by a lifted edge"""
        for x, y in ((a, b), (b, a)):
            x, y = self.find(x), self.find(y)
            target = self.star[x].get(self.base[y])
            if target is None:
                self.star[x][self.base[y]] = y
            elif self.find(target) != y:
                self.merges.append((target, y))

    def drain(self):
        while self.merges:
            a, b = self.merges.popleft()
            self.union(a, b)

    def union(self, a: int, b: int):
        a, b = self.find(a), self.find(b)
        if a == b:
            return
        if b < a:
            a, b = b, a
        self.parent[b] = a
        self.merge_count += 1
        for w, t in self.star[b].items():
            mine = self.star[a].get(w)
            if mine is None:
                self.star[a][w] = t
            elif self.find(mine) != self.find(t):
                self.merges.append((mine, t))
        self.star[b] = {}
        was_processed = self.processed[a] or self.processed[b]
        self.dist[a] = min(self.dist[a], self.dist[b])
        if was_processed:
            # the merged star has to be closed again
            self.processed[a] = False
            heapq.heappush(self.heap, (self.dist[a], a))

    def process(self, i: int):
        v = self.base[i]
        d = self.dist[i]
        for w, length in self.neighbours[v]:
            target = self.star[i].get(w)
            if target is None:
                target = self.new_vertex(w, d + length)
                self.link(i, target)
            else:
                self.relax(target, d + length)
        self.drain()
        for w, x in self.fans[v]:
            i = self.find(i)
            wl = self.find(self.star[i][w])
            xl = self.find(self.star[i][x])
            self.link(wl, xl)
            self.drain()
        self.processed[self.find(i)] = True

    def run(self, root_base: str):
        """Unfold from the lifted root until every lifted vertex within limit is processed"""
        root = self.new_vertex(self.index[root_base], 0.0)
        rounds = 0
        while True:
            rounds += 1
            while self.heap:
                d, i = heapq.heappop(self.heap)
                if d > self.limit:
                    heapq.heappush(self.heap, (d, i))
                    break
                r = self.find(i)
                if self.processed[r] or d > self.dist[r] + 1e-12:
                    continue
                self.process(r)
            roots, dists = self.exact_distances(root)
            late = [r for r, d in zip(roots, dists) if d <= self.limit and not self.processed[r]]
            if not late:
                break
            for r, d in zip(roots, dists):
                self.dist[r] = min(self.dist[r], d)
            self.heap = [(self.dist[r], r) for r in late]
            heapq.heapify(self.heap)
        logger.info("unfolded %s: %d lifts created, %d merges, %d rounds",
                    self.complex.name, len(self.base), self.merge_count, rounds)
        return self.find(root)

    def lifted_edges(self) -> List[Tuple[int, int, float]]:
        edges: Dict[Tuple[int, int], float] = {}
        for i in range(len(self.base)):
            if self.parent[i] != i:
                continue
            v = self.base[i]
            lengths = dict(self.neighbours[v])
            for w, t in self.star[i].items():
                j = self.find(t)
                key = (i, j) if i < j else (j, i)
                edges[key] = lengths[w]
            if self.processed[i]:
                for c, d, length in self.diagonals[v]:
                    if c in self.star[i] and d in self.star[i]:
                        a, b = self.find(self.star[i][c]), self.find(self.star[i][d])
                        key = (a, b) if a < b else (b, a)
                        if a != b and key not in edges:
                            edges[key] = length
        return [(a, b, w) for (a, b), w in edges.items()]

    def exact_distances(self, root: int) -> Tuple[List[int], np.ndarray]:
        roots = [i for i in range(len(self.base)) if self.parent[i] == i]
        position = {r: k for k, r in enumerate(roots)}
        edges = self.lifted_edges()
        n = len(roots)
        if edges:
            u = np.array([position[a] for a, _, _ in edges])
            v = np.array([position[b] for _, b, _ in edges])
            w = np.array([c for _, _, c in edges])
            graph = csr_matrix((np.concatenate([w, w]), (np.concatenate([u, v]), np.concatenate([v, u]))),
                               shape=(n, n))
        else:
            graph = csr_matrix((n, n))
        dists = dijkstra(graph, directed=True, indices=position[self.find(root)])
        return roots, dists


def unfold_region(complex_: PolygonComplex, center: str, region: Iterable[str], trunc: float,
                  margin_factor: Optional[float] = None,
                  max_vertices: Optional[int] = None) -> CoverGraph:
    """Universal cover of a vertex region of the mesh, kept up to lifted distance trunc"""
    region = frozenset(region)
    if center not in region:
        raise InputError(f"center {center!r} is not in the region")
    if not trunc > 0:
        raise InputError(f"truncation radius must be positive, got {trunc}")
    margin = settings.cover_margin_factor if margin_factor is None else margin_factor
    limit = trunc + margin * complex_.resolution
    unfolder = CoverUnfolder(complex_, region, limit, max_vertices)
    root = unfolder.run(center)
    roots, dists = unfolder.exact_distances(root)

    tol = settings.ball_tolerance
    kept = [(r, d) for r, d in zip(roots, dists) if d <= trunc + tol]
    truncated = any(d > trunc + tol for d in dists) or any(not unfolder.processed[r] for r, _ in kept)

    by_base: Dict[int, List[Tuple[float, int]]] = defaultdict(list)
    for r, d in kept:
        by_base[unfolder.base[r]].append((round(float(d), 9), r))
    names: Dict[int, str] = {}
    for b, members in by_base.items():
        for j, (_, r) in enumerate(sorted(members)):
            names[r] = f"{unfolder.names[b]}~{j}"

    edges = tuple(sorted(
        (names[a], names[b], float(w)) if names[a] < names[b] else (names[b], names[a], float(w))
        for a, b, w in unfolder.lifted_edges() if a in names and b in names
    ))
    lifted = tuple(sorted(names.values()))
    projection = {names[r]: unfolder.names[unfolder.base[r]] for r in names}
    cover = CoverGraph(
        base=complex_.space, complex=complex_, center=center, region=region, lifted=lifted,
        projection=projection, edges=edges, root=names[root], trunc=trunc, truncated=truncated,
        dists={names[r]: float(d) for r, d in kept},
    )
    logger.info("cover of %s around %s: %d lifted vertices within %g%s", complex_.name, center,
                len(lifted), trunc, " (truncated)" if truncated else "")
    return cover


def universal_cover_ball(complex_: PolygonComplex, center: str, r: float, R_trunc: float,
                         **kwargs) -> CoverGraph:
    """Universal cover of the open ball B_r(center), truncated at R_trunc"""
    if not r > 0:
        raise InputError(f"ball radius must be positive, got {r}")
    if R_trunc < r:
        raise InputError(f"truncation radius {R_trunc} must be at least the ball radius {r}")
    region = ball(complex_.space, center, r)
    induced = complex_.space.graph.subgraph(region)
    if not nx.is_connected(induced):
        raise InputError(f"ball B_{r:g}({center}) is not connected in the mesh")
    return unfold_region(complex_, center, region, R_trunc, **kwargs)


def normal_cover(complex_: PolygonComplex, p: str, r1: float, r2: float,
                 R_trunc: Optional[float] = None, **kwargs) -> CoverGraph:
    """Lifted component of B_r1(p) containing the root, inside the universal cover of B_r2(p)

    The component counts as truncated when the r2-cover is truncated and the
    component reaches within two mesh steps of the truncation radius.
    """
    if not 0 < r1 < r2:
        raise InputError(f"need 0 < r1 < r2, got r1={r1}, r2={r2}")
    h = complex_.resolution
    R_trunc = r2 + 4 * h if R_trunc is None else R_trunc
    outer = universal_cover_ball(complex_, p, r2, R_trunc, **kwargs)

    small = set(ball(complex_.space, p, r1))
    keep = {v for v in outer.lifted if outer.projection[v] in small}
    graph = nx.Graph()
    graph.add_nodes_from(keep)
    graph.add_weighted_edges_from(e for e in outer.edges if e[0] in keep and e[1] in keep)
    component = nx.node_connected_component(graph, outer.root)
    edges = tuple(e for e in outer.edges if e[0] in component and e[1] in component)
    reach = max(outer.dists[v] for v in component)
    truncated = outer.truncated and reach >= R_trunc - 2 * h
    return CoverGraph(
        base=complex_.space, complex=complex_, center=p, region=frozenset(small),
        lifted=tuple(sorted(component)),
        projection={v: outer.projection[v] for v in component},
        edges=edges, root=outer.root, trunc=R_trunc, truncated=truncated,
        dists={v: outer.dists[v] for v in component},
    )
