"""
Gromov-Hausdorff distance for ghlab
Lower bounds, exact branch and bound on small spaces, a local-search upper
bound, and covering-number verdicts for families of spaces
"""

import logging
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
from scipy.optimize import linear_sum_assignment

from ..config_loader import settings
from ..utils.parallel import parallel_map
from .errors import InfeasibleError, InputError, InternalError
from .invariants import covering_number, packing_number
from .metric_core import FiniteMetricSpace, MetricSpace, ball

logger = logging.getLogger(__name__)


@dataclass
class Correspondence:
    """Relation between X and Y given as index pairs, with its distortion"""
    pairs: List[Tuple[int, int]]
    distortion: float

    def named(self, X: MetricSpace, Y: MetricSpace) -> List[Tuple[str, str]]:
        return sorted({(X.points[i], Y.points[j]) for i, j in self.pairs})


@dataclass
class GHResult:
    value: float
    exact: bool
    correspondence: Optional[Correspondence] = None
    lower: float = 0.0
    evaluations: int = 0

    def to_dict(self, X: Optional[MetricSpace] = None, Y: Optional[MetricSpace] = None) -> dict:
        data = {"value": self.value, "exact": self.exact, "lower": self.lower,
                "evaluations": self.evaluations}
        if self.correspondence is not None:
            data["distortion"] = self.correspondence.distortion
            if X is not None and Y is not None:
                data["correspondence"] = [list(p) for p in self.correspondence.named(X, Y)]
        return data


@dataclass
class LowerBound:
    value: float
    kind: str
    scale: Optional[float] = None
    exact_packing: bool = True

    def to_dict(self) -> dict:
        return dict(self.__dict__)


def distortion(DX: np.ndarray, DY: np.ndarray, xs: Sequence[int], ys: Sequence[int]) -> float:
    """max |dX(x,x') - dY(y,y')| over pairs of related pairs"""
    xs, ys = np.asarray(xs), np.asarray(ys)
    return float(np.max(np.abs(DX[np.ix_(xs, xs)] - DY[np.ix_(ys, ys)])))


def _separation(D: np.ndarray, count: int, cap: int) -> Optional[float]:
    """Largest t such that some `count` points are pairwise >= t apart; None if not computed"""
    n = len(D)
    if count <= 1:
        return np.inf
    if count > n:
        return 0.0
    if n > cap:
        return None
    space = FiniteMetricSpace("separation", tuple(str(i) for i in range(n)), D)
    values = np.unique(D[np.triu_indices(n, k=1)])
    lo, hi = 0, len(values) - 1
    best = 0.0
    while lo <= hi:
        mid = (lo + hi) // 2
        if packing_number(space, float(values[mid]), "exact").count >= count:
            best = float(values[mid])
            lo = mid + 1
        else:
            hi = mid - 1
    return best


def _packing_bound(X: MetricSpace, Y: MetricSpace, candidates: int) -> Optional[LowerBound]:
    DX, DY = np.asarray(X.matrix), np.asarray(Y.matrix)
    scales = np.unique(DX[np.triu_indices(X.n, k=1)])
    if len(scales) > candidates:
        scales = scales[np.linspace(0, len(scales) - 1, candidates).round().astype(int)]
    cap = settings.packing_exact_cap
    best = None
    for eps in scales:
        mode = "exact" if X.n <= cap else "greedy"
        K = packing_number(X, float(eps), mode).count
        t = _separation(DY, K, cap)
        if t is None:
            return best
        value = max(0.0, (float(eps) - t) / 2)
        if best is None or value > best.value:
            best = LowerBound(value, "packing", float(eps), mode == "exact")
    return best


def gh_lower_bounds(X: MetricSpace, Y: MetricSpace, candidates: int = 16) -> LowerBound:
    """Best of the diameter bound and the packing-stability bound in both directions"""
    best = LowerBound(abs(X.diameter() - Y.diameter()) / 2, "diameter")
    for A, B in ((X, Y), (Y, X)):
        if A.n < 2:
            continue
        bound = _packing_bound(A, B, candidates)
        if bound is not None and bound.value > best.value + 1e-15:
            best = bound
    return best


def gh_exact_small(X: MetricSpace, Y: MetricSpace, cap: Optional[int] = None,
                   upper: Optional[float] = None) -> GHResult:
    """Exact d_GH: half the least distortion over relations f-graph union g-graph"""
    cap = settings.gh_exact_cap if cap is None else cap
    if X.n > cap or Y.n > cap:
        raise InfeasibleError(
            f"exact Gromov-Hausdorff search is limited to {cap} points per space "
            f"(got {X.n} and {Y.n}); use the heuristic mode"
        )
    DX, DY = np.asarray(X.matrix), np.asarray(Y.matrix)
    n, m = X.n, Y.n
    # sending each side to a single point gives distortion at most max(diam X, diam Y)
    start = max(float(DX.max()), float(DY.max())) if upper is None else 2 * upper
    best = [start + 1e-12, None]
    px = np.zeros(n + m, dtype=int)
    py = np.zeros(n + m, dtype=int)
    nodes = [0]

    def extend(depth: int, current: float):
        nodes[0] += 1
        if depth == n + m:
            if current < best[0]:
                best[0] = current
                best[1] = list(zip(px.tolist(), py.tolist()))
            return
        if depth < n:
            fixed = depth
            options = np.arange(m)
            cost = np.max(np.abs(DX[fixed, px[:depth]][None, :] - DY[np.ix_(options, py[:depth])]),
                          axis=1, initial=0.0)
        else:
            fixed = depth - n
            options = np.arange(n)
            cost = np.max(np.abs(DX[np.ix_(options, px[:depth])] - DY[fixed, py[:depth]][None, :]),
                          axis=1, initial=0.0)
        total = np.maximum(cost, current)
        for k in np.argsort(total, kind="stable"):
            if total[k] >= best[0]:
                break
            if depth < n:
                px[depth], py[depth] = fixed, options[k]
            else:
                px[depth], py[depth] = options[k], fixed
            extend(depth + 1, float(total[k]))

    extend(0, 0.0)
    if best[1] is None:
        # only reachable when the caller's upper bound is already optimal
        return gh_exact_small(X, Y, cap)
    corr = Correspondence(best[1], best[0])
    return GHResult(best[0] / 2, True, corr, evaluations=nodes[0])


def _profiles(D: np.ndarray, q: np.ndarray) -> np.ndarray:
    return np.quantile(np.sort(D, axis=1), q, axis=1).T


def gh_heuristic(X: MetricSpace, Y: MetricSpace, budget: Optional[int] = None,
                 seed: Optional[int] = None) -> GHResult:
    """Upper bound on d_GH from profile-matched seeds improved by local search"""
    budget = settings.gh_heuristic_budget if budget is None else budget
    seed = settings.default_seed if seed is None else seed
    if budget <= 0:
        raise InputError(f"budget must be positive, got {budget}")
    rng = np.random.default_rng(seed)
    DX, DY = np.asarray(X.matrix), np.asarray(Y.matrix)
    n, m = X.n, Y.n
    q = np.linspace(0, 1, 16)
    cost = np.max(np.abs(_profiles(DX, q)[:, None, :] - _profiles(DY, q)[None, :, :]), axis=2)

    seeds = [(np.argmin(cost, axis=1), np.argmin(cost, axis=0))]
    if n == m:
        rows, cols = linear_sum_assignment(cost)
        f = np.empty(n, dtype=int)
        f[rows] = cols
        g = np.empty(m, dtype=int)
        g[cols] = rows
        seeds.append((f, g))

    def score(f, g) -> float:
        return distortion(DX, DY, np.concatenate([np.arange(n), g]), np.concatenate([f, np.arange(m)]))

    evaluations = 0
    best_f, best_g, best = None, None, np.inf
    for f0, g0 in seeds:
        f, g = f0.copy(), g0.copy()
        current = score(f, g)
        evaluations += 1
        stalled = 0
        while evaluations < budget and stalled < 3:
            improved = False
            # try moving the image of every point, largest cost first
            order = np.argsort(-np.concatenate([cost[np.arange(n), f], cost[g, np.arange(m)]]),
                               kind="stable")
            for slot in order:
                if evaluations >= budget:
                    break
                targets = range(m) if slot < n else range(n)
                for t in targets:
                    trial_f, trial_g = f, g
                    if slot < n:
                        if f[slot] == t:
                            continue
                        trial_f = f.copy()
                        trial_f[slot] = t
                    else:
                        if g[slot - n] == t:
                            continue
                        trial_g = g.copy()
                        trial_g[slot - n] = t
                    value = score(trial_f, trial_g)
                    evaluations += 1
                    if value < current - 1e-15:
                        f, g, current = trial_f, trial_g, value
                        improved = True
                        break
                    if evaluations >= budget:
                        break
            if not improved:
                stalled += 1
                # random kick, kept only if it does not hurt
                kick_f, kick_g = f.copy(), g.copy()
                kick_f[rng.integers(n)] = rng.integers(m)
                kick_g[rng.integers(m)] = rng.integers(n)
                value = score(kick_f, kick_g)
                evaluations += 1
                if value <= current:
                    f, g, current = kick_f, kick_g, value
        if current < best:
            best_f, best_g, best = f, g, current

    pairs = list(zip(np.arange(n).tolist(), best_f.tolist())) + list(zip(best_g.tolist(), np.arange(m).tolist()))
    lower = gh_lower_bounds(X, Y).value
    value = best / 2
    if value < lower - 1e-9:
        raise InternalError(f"heuristic value {value:g} fell below the certified lower bound {lower:g}")
    return GHResult(value, False, Correspondence(pairs, best), lower, evaluations)


@dataclass
class FamilyMember:
    name: str
    space: MetricSpace
    parameter: float = 0.0


@dataclass
class PrecompactnessReport:
    family: str
    eps_grid: List[float]
    members: List[Dict[str, Union[str, float]]]
    table: List[dict]
    verdict: str
    envelope: Dict[float, int] = field(default_factory=dict)
    witness: Optional[dict] = None
    pointed: bool = False
    radius: Optional[float] = None

    def to_dict(self) -> dict:
        return {
            "family": self.family,
            "eps_grid": self.eps_grid,
            "members": self.members,
            "pointed": self.pointed,
            "radius": self.radius,
            "table": self.table,
            "verdict": self.verdict,
            "envelope": {str(k): v for k, v in self.envelope.items()},
            "witness": self.witness,
        }


def _member_counts(member: FamilyMember, eps_grid: Sequence[float], pointed: bool,
                   radius: Optional[float]) -> List[dict]:
    space = member.space
    within = None
    if pointed:
        if space.basepoint is None:
            raise InputError(f"member {member.name!r} has no basepoint for pointed mode")
        within = ball(space, space.basepoint, radius)
    size = space.n if within is None else len(within)
    rows = []
    for eps in eps_grid:
        if size <= settings.covering_exact_cap:
            cov = covering_number(space, eps, "exact", within)
            lower = cov.count
        else:
            cov = covering_number(space, eps, "greedy", within)
            lower = packing_number(space, 2 * eps, "greedy", within).count
        rows.append({"member": member.name, "parameter": member.parameter, "epsilon": eps,
                     "points": size, "upper": cov.count, "lower": lower, "exact": cov.exact})
    logger.info("family member %s: %s", member.name, [r["upper"] for r in rows])
    return rows


def _growth_witness(counts: List[int], names: List[str], eps: float) -> Optional[dict]:
    """Longest nondecreasing run that grows by the configured factor"""
    need = settings.divergence_min_members
    best = None
    start = 0
    for end in range(1, len(counts) + 1):
        if end == len(counts) or counts[end] < counts[end - 1]:
            for s in range(start, end):
                length = end - s
                first, last = counts[s], counts[end - 1]
                if length >= need and last > first and last >= settings.divergence_growth * first:
                    if best is None or length > best["length"]:
                        best = {"epsilon": eps, "length": length, "members": names[s:end],
                                "lower_counts": counts[s:end]}
                    break
            start = end
    return best


def family_precompactness(members: Sequence[FamilyMember], eps_grid: Sequence[float],
                          pointed: bool = False, radius: Optional[float] = None,
                          family: str = "family", threads: Optional[int] = None) -> PrecompactnessReport:
    """Per-eps covering counts across a family, with a bounded or divergent verdict"""
    if not members:
        raise InputError("family is empty")
    eps_grid = sorted({float(e) for e in eps_grid}, reverse=True)
    if not eps_grid or eps_grid[-1] <= 0:
        raise InputError("epsilon grid must contain positive values")
    if pointed and not (radius is not None and radius > 0):
        raise InputError("pointed mode needs a positive radius")
    ordered = sorted(members, key=lambda mb: (mb.parameter, mb.name))
    rows = parallel_map(lambda mb: _member_counts(mb, eps_grid, pointed, radius), ordered, threads)
    table = [row for member_rows in rows for row in member_rows]
    names = [mb.name for mb in ordered]

    witness = None
    for k, eps in enumerate(eps_grid):
        lower = [member_rows[k]["lower"] for member_rows in rows]
        found = _growth_witness(lower, names, eps)
        if found is not None and (witness is None or found["length"] > witness["length"]):
            witness = found
    envelope = {eps: max(member_rows[k]["upper"] for member_rows in rows)
                for k, eps in enumerate(eps_grid)}
    verdict = "divergent" if witness is not None else "bounded"
    return PrecompactnessReport(
        family=family, eps_grid=eps_grid,
        members=[{"name": mb.name, "parameter": mb.parameter} for mb in ordered],
        table=table, verdict=verdict, envelope=envelope if verdict == "bounded" else {},
        witness=witness, pointed=pointed, radius=radius,
    )
