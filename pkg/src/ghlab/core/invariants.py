"""
Packing and covering numbers for ghlab
Exact solvers on small instances, greedy certified bounds on large ones
"""

import logging
from dataclasses import dataclass, field
from typing import Iterable, List, Optional

import networkx as nx
import numpy as np
from scipy.optimize import Bounds, LinearConstraint, milp

from ..config_loader import settings
from .errors import InfeasibleError, InputError, InternalError
from .metric_core import MetricSpace

logger = logging.getLogger(__name__)

MODES = ("exact", "greedy")


@dataclass
class PackingResult:
    """Cap_eps: an eps-discrete witness set"""
    epsilon: float
    count: int
    witness: List[str]
    exact: bool


@dataclass
class CoveringResult:
    """Cov_eps: centers whose open eps-balls cover the space"""
    epsilon: float
    count: int
    centers: List[str]
    exact: bool


@dataclass
class SandwichResult:
    """Cov_eps <= Cap_eps <= Cov_{eps/2}"""
    epsilon: float
    cov: CoveringResult
    cap: PackingResult
    cov_half: CoveringResult
    passed: bool = field(init=False)

    def __post_init__(self):
        self.passed = self.cov.count <= self.cap.count <= self.cov_half.count

    def to_dict(self) -> dict:
        return {
            "epsilon": self.epsilon,
            "cov": self.cov.count,
            "cap": self.cap.count,
            "cov_half": self.cov_half.count,
            "exact": self.cov.exact and self.cap.exact and self.cov_half.exact,
            "passed": self.passed,
        }


def _check_args(epsilon: float, mode: str):
    if not epsilon > 0:
        raise InputError(f"epsilon must be positive, got {epsilon}")
    if mode not in MODES:
        raise InputError(f"mode must be one of {MODES}, got {mode!r}")


def _subset(space: MetricSpace, within: Optional[Iterable[str]]) -> np.ndarray:
    if within is None:
        return np.arange(space.n)
    idx = space.indices(within)
    if len(idx) == 0:
        raise InputError("the 'within' subset is empty")
    return idx


def _block(space: MetricSpace, idx: np.ndarray) -> np.ndarray:
    if len(idx) == space.n:
        return np.asarray(space.matrix)
    return np.vstack([rows[:, idx] for _, rows in space.iter_rows(idx)])


def _start(space: MetricSpace, idx: np.ndarray) -> int:
    """Position in idx of the traversal start: base point, else first id"""
    if space.basepoint is not None:
        b = space.index(space.basepoint)
        hit = np.flatnonzero(idx == b)
        if len(hit):
            return int(hit[0])
    return int(np.argmin(space.id_rank[idx]))


def farthest_point_net(space: MetricSpace, epsilon: float,
                       within: Optional[Iterable[str]] = None) -> List[int]:
    """Farthest-point traversal; returns point indices pairwise >= eps apart

    The traversal stops once every point is closer than eps to the net, so the
    net is both a maximal eps-discrete set and an open eps-cover.
    """
    tol = settings.ball_tolerance
    idx = _subset(space, within)
    rank = space.id_rank[idx]
    chosen = [_start(space, idx)]
    nearest = space.row(idx[chosen[0]])[idx]
    while True:
        # largest distance first, then smallest id
        order = np.lexsort((rank, -nearest))
        far = int(order[0])
        if nearest[far] < epsilon - tol:
            break
        chosen.append(far)
        nearest = np.minimum(nearest, space.row(idx[far])[idx])
    return [int(idx[i]) for i in chosen]


def packing_number(space: MetricSpace, epsilon: float, mode: str = "exact",
                   within: Optional[Iterable[str]] = None,
                   cap: Optional[int] = None) -> PackingResult:
    """Maximal number of points pairwise at distance >= epsilon"""
    _check_args(epsilon, mode)
    idx = _subset(space, within)

    if mode == "greedy":
        net = farthest_point_net(space, epsilon, within)
        return PackingResult(epsilon, len(net), [space.points[i] for i in net], False)

    cap = settings.packing_exact_cap if cap is None else cap
    if len(idx) > cap:
        raise InfeasibleError(
            f"exact packing is limited to {cap} points (got {len(idx)}); use mode 'greedy'"
        )
    D = _block(space, idx)
    tol = settings.ball_tolerance
    compatible = nx.Graph()
    compatible.add_nodes_from(range(len(idx)))
    i, j = np.nonzero(np.triu(D >= epsilon - tol, k=1))
    compatible.add_edges_from(zip(i.tolist(), j.tolist()))
    clique, _ = nx.max_weight_clique(compatible, weight=None)
    witness = sorted((space.points[idx[c]] for c in clique))
    return PackingResult(epsilon, len(witness), witness, True)


def _greedy_set_cover(space: MetricSpace, idx: np.ndarray, covers: np.ndarray) -> List[int]:
    rank = space.id_rank[idx]
    uncovered = np.ones(len(idx), dtype=bool)
    chosen: List[int] = []
    while uncovered.any():
        gain = covers[:, uncovered].sum(axis=1)
        best = int(np.lexsort((rank, -gain))[0])
        chosen.append(best)
        uncovered &= ~covers[best]
    return chosen


def _exact_set_cover(covers: np.ndarray) -> List[int]:
    m = covers.shape[0]
    result = milp(
        c=np.ones(m),
        constraints=LinearConstraint(covers.T.astype(float), lb=1, ub=np.inf),
        integrality=np.ones(m),
        bounds=Bounds(0, 1),
    )
    if result.x is None:
        raise InternalError(f"set cover solver failed: {result.message}")
    return [int(i) for i in np.flatnonzero(result.x > 0.5)]


def covering_number(space: MetricSpace, epsilon: float, mode: str = "exact",
                    within: Optional[Iterable[str]] = None,
                    cap: Optional[int] = None) -> CoveringResult:
    """Least number of open epsilon-balls centred in the space covering it"""
    _check_args(epsilon, mode)
    idx = _subset(space, within)
    tol = settings.ball_tolerance

    if mode == "greedy" and len(idx) > settings.dense_max_points:
        net = farthest_point_net(space, epsilon, within)
        return CoveringResult(epsilon, len(net), [space.points[i] for i in net], False)

    if mode == "exact":
        cap = settings.covering_exact_cap if cap is None else cap
        if len(idx) > cap:
            raise InfeasibleError(
                f"exact covering is limited to {cap} points (got {len(idx)}); use mode 'greedy'"
            )

    covers = _block(space, idx) < epsilon - tol
    if mode == "greedy":
        chosen = _greedy_set_cover(space, idx, covers)
    else:
        chosen = _exact_set_cover(covers)
        if not covers[chosen].any(axis=0).all():
            raise InternalError("set cover solution leaves points uncovered")
    centers = sorted(space.points[idx[c]] for c in chosen)
    return CoveringResult(epsilon, len(centers), centers, mode == "exact")


def sandwich_check(space: MetricSpace, epsilon: float, mode: str = "exact",
                   within: Optional[Iterable[str]] = None) -> SandwichResult:
    """Compare Cov_eps, Cap_eps and Cov_{eps/2}"""
    result = SandwichResult(
        epsilon,
        covering_number(space, epsilon, mode, within),
        packing_number(space, epsilon, mode, within),
        covering_number(space, epsilon / 2, mode, within),
    )
    if mode == "exact" and not result.passed:
        raise InternalError(f"sandwich inequality failed on an exact instance: {result.to_dict()}")
    return result
