"""
Doubling checks for ghlab
Local doubling, two-point propagation, the packing bound on small balls and
the global doubling profile of measured graph length spaces
"""

import logging
import math
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

import numpy as np

from ..config_loader import settings
from .errors import InputError
from .invariants import covering_number, packing_number
from .metric_core import MetricSpace, ball_indices

logger = logging.getLogger(__name__)

RATIO_TOLERANCE = 1e-9


@dataclass
class LocalDoublingCertificate:
    rho: float
    A0: float
    radii: List[float]
    passed: bool
    worst_witness: Optional[Tuple[str, float, float]]
    target: Optional[float] = None
    counting_measure: bool = False

    def to_dict(self) -> dict:
        return {
            "rho": self.rho,
            "A0": self.A0,
            "target_A0": self.target,
            "radii": self.radii,
            "passed": self.passed,
            "worst_witness": list(self.worst_witness) if self.worst_witness else None,
            "counting_measure": self.counting_measure,
        }


@dataclass
class PropagationVerdict:
    x: str
    R: float
    rho: float
    A0: float
    exponent: int
    continuum_exponent: int
    max_ratio: float
    worst_point: Optional[str]
    passed: bool
    resolution: float

    def to_dict(self) -> dict:
        return dict(self.__dict__)


@dataclass
class PackingBoundVerdict:
    p: str
    rho: float
    epsilon: float
    A0: float
    N: int
    bound: float
    lower: int
    upper: int
    exact: bool
    status: str
    witness: List[str] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return self.status == "PASS"

    def to_dict(self) -> dict:
        data = dict(self.__dict__)
        data["passed"] = self.passed
        return data


@dataclass
class GlobalDoublingProfile:
    rho: float
    A0: float
    radii: List[float]
    A: List[float]
    C: List[int]
    exponents: List[int]
    passed: bool
    worst_witness: Optional[Tuple[str, float, float]]
    sampled_centers: List[str]

    @property
    def monotone(self) -> bool:
        return all(a <= b for a, b in zip(self.A, self.A[1:]))

    def to_dict(self) -> dict:
        data = dict(self.__dict__)
        data["worst_witness"] = list(self.worst_witness) if self.worst_witness else None
        data["monotone"] = self.monotone
        return data


def _weights(space: MetricSpace, counting_default: bool) -> np.ndarray:
    if space.measure is None and not counting_default:
        raise InputError(f"space {space.id!r} carries no measure; supply one or allow counting measure")
    return space.weights()


def _ball_measures(space: MetricSpace, weights: np.ndarray, radii: Sequence[float],
                   centers: Optional[np.ndarray] = None) -> np.ndarray:
    """Open-ball measures, shape (len(centers), len(radii))"""
    tol = settings.ball_tolerance
    centers = np.arange(space.n) if centers is None else np.asarray(centers, dtype=int)
    out = np.empty((len(centers), len(radii)))
    limit = max(radii) + tol
    pos = 0
    for part, rows in space.iter_rows(centers, limit):
        for k, r in enumerate(radii):
            out[pos:pos + len(part), k] = (rows < r - tol) @ weights
        pos += len(part)
    return out


def _check_resolution(space: MetricSpace, rho: float):
    if not rho > 0:
        raise InputError(f"rho must be positive, got {rho}")
    h = space.resolution
    if h > rho / 4 * (1 + RATIO_TOLERANCE):
        raise InputError(f"resolution h={h:g} is too coarse for rho={rho:g}; need h <= rho/4")
    return h


def local_doubling_check(space: MetricSpace, rho: float,
                         radius_grid: Optional[Sequence[float]] = None,
                         A0: Optional[float] = None,
                         counting_default: bool = True) -> LocalDoublingCertificate:
    """Smallest A0 with mu(B_r(x)) <= A0 mu(B_{r/2}(x)) over all x and grid radii"""
    if not rho > 0:
        raise InputError(f"rho must be positive, got {rho}")
    if radius_grid is None:
        radius_grid = [rho / 2 ** j for j in range(settings.doubling_grid_levels)]
    radii = sorted(float(r) for r in radius_grid)
    if not radii or radii[0] <= 0 or radii[-1] > rho * (1 + RATIO_TOLERANCE):
        raise InputError(f"radius grid must lie in (0, rho={rho:g}]")
    weights = _weights(space, counting_default)

    full = _ball_measures(space, weights, radii)
    half = _ball_measures(space, weights, [r / 2 for r in radii])
    if np.any(half <= 0):
        i, k = np.argwhere(half <= 0)[0]
        return LocalDoublingCertificate(rho, math.inf, radii, False,
                                        (space.points[i], radii[k], math.inf), A0,
                                        space.measure is None)
    ratio = full / half
    i, k = np.unravel_index(int(np.argmax(ratio)), ratio.shape)
    measured = float(ratio[i, k])
    passed = A0 is None or measured <= A0 * (1 + RATIO_TOLERANCE)
    logger.debug("local doubling of %s at rho=%g: A0=%g", space.id, rho, measured)
    return LocalDoublingCertificate(rho, measured, radii, passed,
                                    (space.points[i], radii[k], measured), A0,
                                    space.measure is None)


def two_point_propagation_check(space: MetricSpace, x: str, R: float, rho: float,
                                A0: Optional[float] = None,
                                counting_default: bool = True) -> PropagationVerdict:
    """mu(B_{rho/2}(q)) <= A0^m mu(B_{rho/2}(x)) for every q in the closed R-ball of x

    Chains along discrete shortest paths advance by at least rho/2 - h per
    step, so m = ceil(R / (rho/2 - h)).
    """
    h = _check_resolution(space, rho)
    if R < 0:
        raise InputError(f"R must be nonnegative, got {R}")
    if A0 is None:
        A0 = local_doubling_check(space, rho, [rho], counting_default=counting_default).A0
    weights = _weights(space, counting_default)

    xi = space.index(x)
    qs = ball_indices(space, xi, R, mode="closed")
    measures = _ball_measures(space, weights, [rho / 2], qs)[:, 0]
    base = measures[np.flatnonzero(qs == xi)[0]]
    exponent = math.ceil(R / (rho / 2 - h) - RATIO_TOLERANCE) if R > 0 else 0
    ratio = measures / (A0 ** exponent * base)
    worst = int(np.argmax(ratio))
    max_ratio = float(ratio[worst])
    return PropagationVerdict(
        x=x, R=R, rho=rho, A0=A0, exponent=exponent,
        continuum_exponent=math.ceil(2 * R / rho - RATIO_TOLERANCE) if R > 0 else 0,
        max_ratio=max_ratio, worst_point=space.points[qs[worst]],
        passed=max_ratio <= 1 + RATIO_TOLERANCE, resolution=h,
    )


def packing_exponent(rho: float, epsilon: float) -> int:
    """N = ceil(1 + log2(rho) - log2(eps))"""
    return math.ceil(1 + math.log2(rho) - math.log2(epsilon) - 1e-12)


def lemma21_packing_bound_check(space: MetricSpace, p: str, rho: float, epsilon: float,
                                A0: Optional[float] = None,
                                counting_default: bool = True) -> PackingBoundVerdict:
    """Cap_eps of the closed rho/4-ball at p against A0^(N+1)"""
    h = space.resolution
    if not rho > 0:
        raise InputError(f"rho must be positive, got {rho}")
    if epsilon is None or not epsilon > 0:
        raise InputError(f"epsilon must be positive, got {epsilon}")
    if epsilon < h * (1 - RATIO_TOLERANCE):
        raise InputError(f"epsilon={epsilon:g} is below the resolution h={h:g}")
    if epsilon >= rho / 2:
        raise InputError(f"epsilon={epsilon:g} must be smaller than rho/2={rho / 2:g}")
    N = packing_exponent(rho, epsilon)
    if A0 is None:
        ladder = [rho / 2 ** j for j in range(N)]
        A0 = local_doubling_check(space, rho, ladder, counting_default=counting_default).A0
    bound = A0 ** (N + 1)

    region = [space.points[i] for i in ball_indices(space, space.index(p), rho / 4, mode="closed")]
    if len(region) <= settings.packing_exact_cap:
        cap = packing_number(space, epsilon, "exact", within=region)
        lower = upper = cap.count
        exact = True
    else:
        cap = packing_number(space, epsilon, "greedy", within=region)
        lower = cap.count
        upper = covering_number(space, epsilon / 2, "greedy", within=region).count
        exact = False

    if upper <= bound:
        status = "PASS"
    elif lower > bound:
        status = "FAIL"
    else:
        status = "INCONCLUSIVE"
    return PackingBoundVerdict(p, rho, epsilon, A0, N, bound, lower, upper, exact, status,
                               cap.witness)


def _sample_centers(space: MetricSpace, size: int, seed: int) -> np.ndarray:
    rng = np.random.default_rng(seed)
    if space.n <= size:
        picks = np.arange(space.n)
    else:
        picks = np.sort(rng.choice(space.n, size=size, replace=False))
    if space.basepoint is not None:
        picks = np.union1d(picks, [space.index(space.basepoint)])
    return picks


def global_doubling_profile(space: MetricSpace, rho: float, A0: Optional[float] = None,
                            radii: Optional[Sequence[float]] = None,
                            sample_size: int = 32, seed: Optional[int] = None,
                            counting_default: bool = True) -> GlobalDoublingProfile:
    """A(r) = C(r) A0^ceil(r/(rho/2-h)) and the pointwise check mu(B_r) <= A(r) mu(B_{r/2})"""
    h = _check_resolution(space, rho)
    seed = settings.default_seed if seed is None else seed
    if radii is None:
        diameter = space.diameter()
        radii = [rho / 2 * 2 ** j for j in range(64) if rho / 2 * 2 ** j < diameter] + [diameter]
    radii = sorted(float(r) for r in radii if r > 0) or [rho]
    if A0 is None:
        local = sorted({r for r in radii if r <= rho} | {rho})
        A0 = local_doubling_check(space, rho, local, counting_default=counting_default).A0
    weights = _weights(space, counting_default)

    centers = _sample_centers(space, sample_size, seed)
    A: List[float] = []
    C: List[int] = []
    exponents: List[int] = []
    for r in radii:
        exponent = math.ceil(r / (rho / 2 - h) - RATIO_TOLERANCE)
        if r <= rho:
            count = 1
            value = A0
        else:
            count = max(
                covering_number(space, rho / 2, "greedy",
                                within=[space.points[i] for i in ball_indices(space, c, r)]).count
                for c in centers
            )
            value = count * A0 ** exponent
        C.append(count)
        exponents.append(exponent)
        A.append(max(value, A[-1]) if A else value)

    full = _ball_measures(space, weights, radii)
    half = _ball_measures(space, weights, [r / 2 for r in radii])
    ratio = full / (np.asarray(A)[None, :] * half)
    i, k = np.unravel_index(int(np.argmax(ratio)), ratio.shape)
    worst = float(ratio[i, k])
    logger.info("global doubling profile of %s: %d radii, worst ratio %.3g", space.id, len(radii), worst)
    return GlobalDoublingProfile(
        rho=rho, A0=A0, radii=radii, A=A, C=C, exponents=exponents,
        passed=worst <= 1 + RATIO_TOLERANCE,
        worst_witness=(space.points[i], radii[k], float(full[i, k] / half[i, k])),
        sampled_centers=[space.points[c] for c in centers],
    )
