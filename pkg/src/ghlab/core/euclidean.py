"""
Euclidean domains for ghlab
Membership oracles sampled on lattices, the cone condition and Jones flatness
"""

import logging
import math
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import Callable, List, Optional, Tuple, Union

import numpy as np
import pandas as pd
from scipy.ndimage import binary_erosion, distance_transform_edt
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import dijkstra

from ..config_loader import settings
from .errors import InputError
from .metric_core import DiscretizedLengthSpace, length_metric

logger = logging.getLogger(__name__)

Oracle = Callable[[np.ndarray], np.ndarray]

# Jones flatness constants: curve length factor and pair scale r0/7
JONES_C = 450.0
JONES_PAIR_DIVISOR = 7.0
JONES_INTERIOR_DIVISOR = 1801.0


@dataclass(frozen=True, eq=False)
class EuclideanDomain:
    """Domain in R^2 or R^3 given by a membership oracle over points of shape (m, dim)"""
    name: str
    dim: int
    lower: Tuple[float, ...]
    upper: Tuple[float, ...]
    inside: Oracle
    depth: Optional[Oracle] = None

    def __post_init__(self):
        if self.dim not in (2, 3):
            raise InputError(f"domains live in dimension 2 or 3, got {self.dim}")
        if len(self.lower) != self.dim or len(self.upper) != self.dim:
            raise InputError(f"bounding box of {self.name!r} must have {self.dim} coordinates")
        if any(lo >= hi for lo, hi in zip(self.lower, self.upper)):
            raise InputError(f"bounding box of {self.name!r} is empty")


@dataclass(frozen=True, eq=False)
class MembershipGrid:
    """Inside flags on the lattice spacing * (offset + index)"""
    name: str
    spacing: float
    offset: Tuple[int, ...]
    mask: np.ndarray
    domain: Optional[EuclideanDomain] = None

    @property
    def dim(self) -> int:
        return self.mask.ndim

    @cached_property
    def coords(self) -> np.ndarray:
        """Coordinates of every lattice node, shape mask.shape + (dim,)"""
        axes = [(self.offset[a] + np.arange(self.mask.shape[a])) * self.spacing for a in range(self.dim)]
        return np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1)

    @cached_property
    def inside_index(self) -> np.ndarray:
        """Lattice multi-indices of inside nodes, shape (m, dim)"""
        return np.argwhere(self.mask)

    @cached_property
    def inside_points(self) -> np.ndarray:
        return self.coords[self.mask]

    @cached_property
    def boundary_mask(self) -> np.ndarray:
        """Inside nodes with an axis neighbour outside"""
        return self.mask & ~binary_erosion(self.mask, border_value=0)

    @cached_property
    def edt_depth(self) -> np.ndarray:
        """Distance to the nearest outside node, less half a spacing"""
        depth = distance_transform_edt(self.mask, sampling=self.spacing) - self.spacing / 2
        return np.clip(depth, 0.0, None)

    def contains(self, x: np.ndarray) -> np.ndarray:
        x = np.atleast_2d(np.asarray(x, dtype=float))
        if self.domain is not None:
            return np.asarray(self.domain.inside(x), dtype=bool)
        idx = np.rint(x / self.spacing).astype(int) - np.asarray(self.offset)
        ok = np.all((idx >= 0) & (idx < np.asarray(self.mask.shape)), axis=1)
        out = np.zeros(len(x), dtype=bool)
        out[ok] = self.mask[tuple(idx[ok].T)]
        return out

    def depth(self, x: np.ndarray) -> np.ndarray:
        """Lower bound on the distance to the complement"""
        x = np.atleast_2d(np.asarray(x, dtype=float))
        if self.domain is not None and self.domain.depth is not None:
            return np.clip(self.domain.depth(x), 0.0, None)
        idx = np.rint(x / self.spacing).astype(int) - np.asarray(self.offset)
        idx = np.clip(idx, 0, np.asarray(self.mask.shape) - 1)
        return np.clip(self.edt_depth[tuple(idx.T)] - self.spacing, 0.0, None)

    def ids(self) -> List[str]:
        width = max(4, len(str(max(self.mask.shape))))
        return ["g" + "_".join(f"{v:0{width}d}" for v in row) for row in self.inside_index]

    @cached_property
    def lattice_graph(self) -> csr_matrix:
        """King-move lattice graph on inside nodes with Euclidean edge lengths"""
        m = len(self.inside_index)
        lookup = np.full(self.mask.shape, -1, dtype=int)
        lookup[tuple(self.inside_index.T)] = np.arange(m)
        rows, cols, weights = [], [], []
        steps = np.array(np.meshgrid(*[[-1, 0, 1]] * self.dim, indexing="ij")).reshape(self.dim, -1).T
        for step in steps:
            # each undirected edge once
            nonzero = step[step != 0]
            if len(nonzero) == 0 or nonzero[0] < 0:
                continue
            target = self.inside_index + step
            ok = np.all((target >= 0) & (target < np.asarray(self.mask.shape)), axis=1)
            src = np.flatnonzero(ok)
            dst = lookup[tuple(target[ok].T)]
            keep = dst >= 0
            rows.append(src[keep])
            cols.append(dst[keep])
            weights.append(np.full(keep.sum(), self.spacing * np.linalg.norm(step)))
        rows, cols, weights = (np.concatenate(a) for a in (rows, cols, weights))
        return csr_matrix((np.concatenate([weights, weights]),
                           (np.concatenate([rows, cols]), np.concatenate([cols, rows]))), shape=(m, m))

    def lattice_space(self) -> DiscretizedLengthSpace:
        """Connected lattice graph as a length space; boundary = sign-change nodes"""
        ids = self.ids()
        coo = self.lattice_graph.tocoo()
        upper = coo.row < coo.col
        edges = [(ids[i], ids[j], w) for i, j, w in zip(coo.row[upper], coo.col[upper], coo.data[upper])]
        boundary = [ids[i] for i in np.flatnonzero(self.boundary_mask[self.mask])]
        return length_metric(edges, id=f"{self.name}|lattice", vertices=ids, boundary=boundary)


def sample_grid(domain: EuclideanDomain, spacing: float, pad: int = 1) -> MembershipGrid:
    """Evaluate the oracle on the lattice covering the bounding box"""
    if not spacing > 0:
        raise InputError(f"spacing must be positive, got {spacing}")
    lo = np.floor(np.asarray(domain.lower) / spacing).astype(int) - pad
    hi = np.ceil(np.asarray(domain.upper) / spacing).astype(int) + pad
    shape = tuple(int(v) for v in hi - lo + 1)
    axes = [(lo[a] + np.arange(shape[a])) * spacing for a in range(domain.dim)]
    pts = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, domain.dim)
    mask = np.asarray(domain.inside(pts), dtype=bool).reshape(shape)
    if not mask.any():
        raise InputError(f"no lattice point of spacing {spacing:g} lies inside {domain.name!r}")
    logger.debug("sampled %s at spacing %g: %d inside nodes", domain.name, spacing, int(mask.sum()))
    return MembershipGrid(domain.name, float(spacing), tuple(int(v) for v in lo), mask, domain)


def grid_from_csv(path: Union[str, Path], spacing: Optional[float] = None,
                  name: Optional[str] = None) -> MembershipGrid:
    """Load 'x,y[,z],inside' rows sampled on a regular lattice"""
    path = Path(path)
    if not path.exists():
        raise InputError(f"membership file not found: {path}")
    frame = pd.read_csv(path)
    axes = [c for c in ("x", "y", "z") if c in frame.columns]
    if len(axes) not in (2, 3) or "inside" not in frame.columns:
        raise InputError(f"{path} needs columns x,y[,z],inside; got {list(frame.columns)}")
    pts = frame[axes].to_numpy(dtype=float)
    if spacing is None:
        gaps = np.diff(np.unique(pts[:, 0]))
        gaps = gaps[gaps > 1e-12]
        if len(gaps) == 0:
            raise InputError(f"cannot infer the lattice spacing of {path}")
        spacing = float(gaps.min())
    idx = np.rint(pts / spacing).astype(int)
    if np.max(np.abs(idx * spacing - pts)) > spacing * 1e-6:
        raise InputError(f"points of {path} are not on a lattice of spacing {spacing:g}")
    lo = idx.min(axis=0)
    shape = tuple(int(v) for v in idx.max(axis=0) - lo + 1)
    mask = np.zeros(shape, dtype=bool)
    flags = frame["inside"].astype(str).str.lower().isin(["1", "true", "yes", "1.0"])
    mask[tuple((idx - lo)[flags.to_numpy()].T)] = True
    return MembershipGrid(name or path.stem, spacing, tuple(int(v) for v in lo), mask)


def direction_grid(dim: int) -> np.ndarray:
    """Unit directions: equal angles in 2D, a Fibonacci sphere in 3D"""
    if dim == 2:
        count = settings.directions_2d
        angles = 2 * np.pi * np.arange(count) / count
        return np.stack([np.cos(angles), np.sin(angles)], axis=1)
    count = settings.directions_3d
    k = np.arange(count) + 0.5
    z = 1 - 2 * k / count
    phi = np.pi * (1 + 5 ** 0.5) * k
    r = np.sqrt(1 - z ** 2)
    return np.stack([r * np.cos(phi), r * np.sin(phi), z], axis=1)


def direction_gap(directions: np.ndarray) -> float:
    """Largest angle from a direction to its nearest neighbour in the grid"""
    cos = directions @ directions.T
    np.fill_diagonal(cos, -1.0)
    return float(np.max(np.arccos(np.clip(cos.max(axis=1), -1.0, 1.0))))


def _cone_offsets(axis: np.ndarray, theta: float, H: float, spacing: float) -> np.ndarray:
    """Sample offsets of the cone {|v| <= H, angle(v, axis) <= theta}"""
    shells = settings.cone_shells
    samples = []
    for k in range(1, shells + 1):
        rho = H * k / shells
        count = max(3, math.ceil(2 * theta * rho / spacing) + 1)
        if len(axis) == 2:
            base = math.atan2(axis[1], axis[0])
            angles = base + np.linspace(-theta, theta, count)
            samples.append(rho * np.stack([np.cos(angles), np.sin(angles)], axis=1))
        else:
            helper = np.array([1.0, 0.0, 0.0]) if abs(axis[0]) < 0.9 else np.array([0.0, 1.0, 0.0])
            e1 = np.cross(axis, helper)
            e1 /= np.linalg.norm(e1)
            e2 = np.cross(axis, e1)
            for alpha in np.linspace(0.0, theta, max(2, count // 2)):
                ring = max(1, math.ceil(2 * np.pi * rho * math.sin(alpha) / spacing)) if alpha > 0 else 1
                beta = 2 * np.pi * np.arange(ring) / ring
                vec = (math.cos(alpha) * axis[None, :]
                       + math.sin(alpha) * (np.cos(beta)[:, None] * e1 + np.sin(beta)[:, None] * e2))
                samples.append(rho * vec)
    return np.vstack(samples)


@dataclass
class ConeCertificate:
    theta: float
    H: float
    passed: bool
    tested: int
    failures: int
    tau: Optional[float]
    t0: Optional[float]
    directions: int
    witnesses: List[List[float]] = field(default_factory=list)

    def to_dict(self) -> dict:
        return dict(self.__dict__)


def cone_condition_check(grid: MembershipGrid, theta: float, H: float,
                         max_witnesses: int = 10) -> ConeCertificate:
    """Search every inside node for a (theta, H)-cone contained in the domain"""
    if not 0 < theta <= np.pi / 2:
        raise InputError(f"theta must lie in (0, pi/2], got {theta}")
    if not H > 0:
        raise InputError(f"H must be positive, got {H}")
    directions = direction_grid(grid.dim)
    gap = direction_gap(directions)
    if gap >= theta:
        raise InputError(f"direction grid spacing {gap:.3g} rad is too coarse for theta={theta:.3g}")
    if grid.spacing > H * math.sin(theta):
        raise InputError(f"lattice spacing {grid.spacing:g} cannot resolve a cone of height {H:g}")

    points = grid.inside_points
    open_ = np.ones(len(points), dtype=bool)
    budget = 4_000_000
    for axis in directions:
        if not open_.any():
            break
        offsets = _cone_offsets(axis, theta, H, grid.spacing)
        pending = np.flatnonzero(open_)
        chunk = max(1, budget // len(offsets))
        for start in range(0, len(pending), chunk):
            part = pending[start:start + chunk]
            shifted = (points[part][:, None, :] + offsets[None, :, :]).reshape(-1, grid.dim)
            fits = grid.contains(shifted).reshape(len(part), len(offsets)).all(axis=1)
            open_[part[fits]] = False

    failures = int(open_.sum())
    passed = failures == 0
    witnesses = points[open_][:max_witnesses].round(12).tolist()
    logger.info("cone check on %s (theta=%.4g, H=%g): %d of %d nodes without a cone",
                grid.name, theta, H, failures, len(points))
    return ConeCertificate(
        theta=theta, H=H, passed=passed, tested=len(points), failures=failures,
        tau=1 / math.sin(theta) if passed else None, t0=H if passed else None,
        directions=len(directions), witnesses=witnesses,
    )


@dataclass
class JonesCertificate:
    r0: float
    c: float
    pair_scale: float
    pairs_tested: int
    failures: int
    passed: bool
    worst: Optional[dict]
    derived: List[dict]
    headline: dict

    def to_dict(self) -> dict:
        return dict(self.__dict__)


def _sample_pairs(points: np.ndarray, scale: float, budget: int, seed: int) -> List[Tuple[int, int]]:
    rng = np.random.default_rng(seed)
    pairs = []
    attempts = 0
    while len(pairs) < budget and attempts < 20 * budget:
        attempts += 1
        i = int(rng.integers(len(points)))
        d = np.linalg.norm(points - points[i], axis=1)
        near = np.flatnonzero((d > 0) & (d <= scale))
        if len(near):
            pairs.append((i, int(near[rng.integers(len(near))])))
    return pairs


def jones_flatness_check(grid: MembershipGrid, r0: float, budget: Optional[int] = None,
                         seed: Optional[int] = None, c: float = JONES_C) -> JonesCertificate:
    """Join sampled near pairs by lattice paths of length <= c d(x,y) that keep
    d(z, boundary) >= d(z,x) d(z,y) / (c d(x,y))"""
    budget = settings.jones_pair_budget if budget is None else budget
    seed = settings.default_seed if seed is None else seed
    if not r0 > 0:
        raise InputError(f"r0 must be positive, got {r0}")
    scale = r0 / JONES_PAIR_DIVISOR
    if scale < 2 * grid.spacing:
        raise InputError(f"pair scale r0/7={scale:g} is below two lattice spacings ({grid.spacing:g})")

    points = grid.inside_points
    depth = grid.depth(points)
    graph = grid.lattice_graph
    failures = 0
    worst = None
    pairs = _sample_pairs(points, scale, budget, seed)
    for i, j in pairs:
        d = float(np.linalg.norm(points[i] - points[j]))
        to_x = np.linalg.norm(points - points[i], axis=1)
        to_y = np.linalg.norm(points - points[j], axis=1)
        allowed = (depth >= to_x * to_y / (c * d) - 1e-12) & (to_x + to_y <= c * d + 1e-12)
        allowed[[i, j]] = True
        keep = np.flatnonzero(allowed)
        sub = graph[keep][:, keep]
        src, dst = np.searchsorted(keep, [i, j])
        length = float(dijkstra(sub, directed=False, indices=int(src))[dst])
        ratio = length / d
        if ratio > c:
            failures += 1
        if worst is None or ratio > worst["ratio"]:
            worst = {"x": points[i].round(12).tolist(), "y": points[j].round(12).tolist(),
                     "distance": d, "path_length": length, "ratio": ratio}

    derived = []
    for r in (scale, scale / 2, scale / 4):
        interior = grid.mask & (grid.edt_depth > r / JONES_INTERIOR_DIVISOR)
        if interior.any():
            reach = distance_transform_edt(~interior, sampling=grid.spacing)[grid.mask].max()
        else:
            reach = math.inf
        derived.append({
            "r": r,
            "interior_depth": r / JONES_INTERIOR_DIVISOR,
            "neighbourhood": c * r,
            "max_distance_to_interior": float(reach),
            "holds": bool(reach <= c * r + grid.spacing),
        })

    headline = {
        "s_factor": c * JONES_INTERIOR_DIVISOR,
        "t0": r0 / (JONES_PAIR_DIVISOR * JONES_INTERIOR_DIVISOR),
        "note": "obtained from the derived statements with t = r/1801",
    }
    logger.info("jones check on %s: %d of %d pairs fail", grid.name, failures, len(pairs))
    return JonesCertificate(r0, c, scale, len(pairs), failures, failures == 0 and bool(pairs),
                            worst, derived, headline)
