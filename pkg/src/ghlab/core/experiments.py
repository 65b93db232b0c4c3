"""
Cover experiments for ghlab
Packing of lifts in covers of the glued 2k-gons, lifts in the cover of the
glued sphere, torus covers and the universal/normal cover contrast
"""

import logging
import math
from collections import deque
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence

import numpy as np

from ..utils.parallel import parallel_map
from .complexes import LUNE_PERIOD, build_flat_torus, build_glued_sphere, build_polygon_rp2, rp2_ball_radius
from .covers import CoverGraph, normal_cover, unfold_region, universal_cover_ball
from .errors import InputError
from .gh_distance import FamilyMember, family_precompactness
from .invariants import covering_number
from .metric_core import ball

logger = logging.getLogger(__name__)


@dataclass
class ExperimentResult:
    """Rows of an experiment table with its overall verdict"""
    name: str
    rows: List[dict]
    passed: bool
    summary: Dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {"name": self.name, "passed": self.passed, "summary": self.summary, "rows": self.rows}


def _nondecreasing(values: Sequence[float]) -> bool:
    return all(a <= b for a, b in zip(values, values[1:]))


def _min_pairwise(cover: CoverGraph, vertices: List[str]) -> float:
    if len(vertices) < 2:
        return math.inf
    space = cover.space
    idx = space.indices(vertices)
    block = space.rows(idx)[:, idx]
    return float(block[np.triu_indices(len(idx), k=1)].min())


def sw_packing_member(k: int, mesh_h: float, radius: float = 4.0) -> dict:
    """Lifts of the centre o within B_4 of its root in the cover of B_{r_k}(o)"""
    complex_, _ = build_polygon_rp2(k, mesh_h)
    h = complex_.resolution
    r_k = rp2_ball_radius(k)
    cover = universal_cover_ball(complex_, "o", r_k, radius + 2 * mesh_h)
    lifts = cover.lifts("o", within=radius)
    separation = _min_pairwise(cover, lifts)
    pointed = ball(cover.space, cover.root, radius)
    cov = covering_number(cover.space, 1.0, "greedy", within=pointed)
    passed = len(lifts) >= k and separation >= 2 - 10 * mesh_h
    logger.info("sw-packing k=%d: %d lifts, separation %.4f", k, len(lifts), separation)
    return {
        "k": k,
        "r_k": r_k,
        "mesh_h": mesh_h,
        "resolution": h,
        "lifts": len(lifts),
        "min_distance": separation,
        "cov_eps1": cov.count,
        "cover_vertices": len(cover.lifted),
        "truncated": cover.truncated,
        "passed": passed,
    }


def experiment_sw_packing(k_range: Sequence[int], mesh_h: float = 0.02,
                          threads: Optional[int] = None) -> ExperimentResult:
    """k lifts of o_k pairwise at least 2 apart inside B_4 of the universal cover"""
    ks = sorted(int(k) for k in k_range)
    if not ks:
        raise InputError("k range is empty")
    rows = parallel_map(lambda k: sw_packing_member(k, mesh_h), ks, threads)
    counts_monotone = _nondecreasing([r["lifts"] for r in rows])
    cov_monotone = _nondecreasing([r["cov_eps1"] for r in rows])
    return ExperimentResult(
        name="sw-packing",
        rows=rows,
        passed=all(r["passed"] for r in rows),
        summary={"lifts_monotone": counts_monotone, "cov_eps1_monotone": cov_monotone,
                 "separation_floor": 2 - 10 * mesh_h},
    )


def developed_angle(cover: CoverGraph) -> Dict[str, float]:
    """Continuous lift of the lune angle phi along the cover, zero at the root"""
    coords = cover.complex.coords
    neighbours: Dict[str, List[str]] = {v: [] for v in cover.lifted}
    for a, b, _ in cover.edges:
        neighbours[a].append(b)
        neighbours[b].append(a)
    angle = {cover.root: 0.0}
    queue = deque([cover.root])
    while queue:
        v = queue.popleft()
        phi_v = coords[cover.projection[v]][1]
        for w in neighbours[v]:
            if w in angle:
                continue
            delta = math.remainder(coords[cover.projection[w]][1] - phi_v, LUNE_PERIOD)
            angle[w] = angle[v] + delta
            queue.append(w)
    return angle


def experiment_petersen(mesh_h: float = 0.05, detour: float = 0.05, R_trunc: Optional[float] = None,
                        eps: Optional[float] = None) -> ExperimentResult:
    """Lifted cover of the glued sphere minus small caps at p and p*

    Every lift within one full turn (|developed angle| <= 2 pi) must lie
    within pi + eps + 10h of the root, where eps = 2 pi * detour by default.
    """
    R_trunc = 2 * math.pi + 0.5 if R_trunc is None else R_trunc
    if R_trunc < 2 * math.pi:
        raise InputError(f"truncation radius must be at least 2 pi, got {R_trunc}")
    eps = 2 * math.pi * detour if eps is None else eps
    complex_, _ = build_glued_sphere(mesh_h, detour)
    tol = 1e-12
    region = [v for v, (theta, _) in complex_.coords.items()
              if detour - tol <= theta <= math.pi - detour + tol]
    cover = unfold_region(complex_, "o", region, R_trunc)
    angle = developed_angle(cover)

    bound = math.pi + eps + 10 * mesh_h
    turn = [v for v in cover.lifted if abs(angle[v]) <= 2 * math.pi + tol]
    worst = max(turn, key=lambda v: cover.dists[v])
    lifts = cover.lifts("o", within=2 * math.pi)
    row = {
        "detour": detour,
        "mesh_h": mesh_h,
        "eps": eps,
        "bound": bound,
        "max_distance_one_turn": cover.dists[worst],
        "worst_vertex": worst,
        "max_distance_all": max(cover.dists.values()),
        "lifts_of_o": len(lifts),
        "cover_vertices": len(cover.lifted),
        "truncated": cover.truncated,
    }
    row["passed"] = row["max_distance_one_turn"] <= bound
    logger.info("petersen detour=%g: %d lifts of o, max distance %.4f (bound %.4f)",
                detour, len(lifts), row["max_distance_one_turn"], bound)
    return ExperimentResult("petersen", [row], row["passed"], {"bound": bound})


def experiment_petersen_sweep(detours: Sequence[float] = (0.2, 0.1, 0.05), mesh_h: float = 0.05,
                              R_trunc: Optional[float] = None,
                              threads: Optional[int] = None) -> ExperimentResult:
    """Lift counts of o must grow as the excluded caps shrink"""
    ordered = sorted({float(d) for d in detours}, reverse=True)
    results = parallel_map(lambda d: experiment_petersen(mesh_h, d, R_trunc), ordered, threads)
    rows = [r.rows[0] for r in results]
    counts = [r["lifts_of_o"] for r in rows]
    increasing = all(a < b for a, b in zip(counts, counts[1:]))
    return ExperimentResult(
        name="petersen-sweep",
        rows=rows,
        passed=increasing and all(r["passed"] for r in rows),
        summary={"lift_counts": counts, "increasing": increasing},
    )


def experiment_torus_covers(radii: Sequence[float] = (0.3, 0.45, 0.6, 0.7), a: float = 1.0, b: float = 1.0,
                            mesh_h: float = 0.05, R: float = 1.5, eps: float = 0.5,
                            threads: Optional[int] = None) -> ExperimentResult:
    """Universal covers of growing torus balls with pointed covering numbers"""
    complex_, space = build_flat_torus(a, b, mesh_h=mesh_h)
    center = complex_.marked["o"]

    def member(r: float) -> dict:
        cover = universal_cover_ball(complex_, center, r, max(R, r) + 2 * mesh_h)
        pointed = ball(cover.space, cover.root, R)
        cov = covering_number(cover.space, eps, "greedy", within=pointed)
        return {
            "radius": r,
            "sheets": cover.sheets,
            "lifts_of_center": len(cover.lifts(center, within=R)),
            "cov": cov.count,
            "epsilon": eps,
            "cover_vertices": len(cover.lifted),
            "truncated": cover.truncated,
        }

    rows = parallel_map(member, sorted(float(r) for r in radii), threads)
    simply_connected = [r["sheets"] == 1 for r in rows]
    return ExperimentResult(
        name="torus-covers",
        rows=rows,
        passed=True,
        summary={"torus": [a, b], "simply_connected": simply_connected,
                 "cov_monotone": _nondecreasing([r["cov"] for r in rows])},
    )


def experiment_cover_contrast(k_range: Sequence[int], mesh_h: float = 0.02,
                              eps_grid: Sequence[float] = (1.0, 0.5), radius: float = 4.0,
                              r1: float = 0.5, threads: Optional[int] = None) -> ExperimentResult:
    """Universal covers of B_{r_k}(o) diverge; the normal covers of B_{1/2}(o) stay bounded"""
    ks = sorted(int(k) for k in k_range)

    def members(k: int):
        complex_, _ = build_polygon_rp2(k, mesh_h)
        r_k = rp2_ball_radius(k)
        universal = universal_cover_ball(complex_, "o", r_k, radius + 2 * mesh_h)
        normal = normal_cover(complex_, "o", r1, r_k)
        return (FamilyMember(f"universal-k{k}", universal.space, k),
                FamilyMember(f"normal-k{k}", normal.space, k))

    built = parallel_map(members, ks, threads)
    universal = family_precompactness([u for u, _ in built], eps_grid, pointed=True, radius=radius,
                                      family="universal-covers", threads=threads)
    normal = family_precompactness([n for _, n in built], eps_grid, pointed=True, radius=radius,
                                   family="normal-covers", threads=threads)
    rows = universal.table + normal.table
    for row in rows:
        row["family"] = "universal" if row["member"].startswith("universal") else "normal"
    passed = universal.verdict == "divergent" and normal.verdict == "bounded"
    return ExperimentResult(
        name="cover-contrast",
        rows=rows,
        passed=passed,
        summary={"universal": universal.to_dict(), "normal": normal.to_dict()},
    )
