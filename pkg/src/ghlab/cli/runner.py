"""
Experiment runner for ghlab
Turns an ExperimentConfig into a versioned report and its files
"""

import itertools
import logging
from typing import Callable, Dict, List, Optional, Tuple

import numpy as np

from .. import __version__
from ..config_loader import settings
from ..core import experiments
from ..core.gh_distance import FamilyMember, family_precompactness, gh_exact_small
from ..core.invariants import sandwich_check
from ..core.metric_core import FiniteMetricSpace, MetricSpace
from ..utils.generators import bundled_spaces, random_space
from ..utils.parallel import parallel_map
from ..utils.report_writer import ReportWriter
from ..utils.space_io import load_space_dir
from .experiment_config import ExperimentConfig

logger = logging.getLogger(__name__)

TOOL = "ghlab"

# x and y columns of the optional plot per experiment
PLOTS: Dict[str, Tuple[str, str, Optional[str]]] = {
    "sw-packing": ("k", "lifts", None),
    "petersen-sweep": ("detour", "lifts_of_o", None),
    "torus-covers": ("radius", "cov", None),
    "cover-contrast": ("parameter", "upper", "family"),
    "gh-family": ("parameter", "upper", "epsilon"),
}


def make_report(command: str, config: Dict, results: List[Dict], passed: bool) -> Dict:
    """Report envelope shared by every subcommand"""
    return {
        "schema_version": settings.report_schema_version,
        "tool": TOOL,
        "version": __version__,
        "command": command,
        "config": config,
        "passed": passed,
        "results": results,
    }


def _random_spaces(count: int, max_points: int, seed: int) -> List[MetricSpace]:
    rng = np.random.default_rng(seed)
    sizes = rng.integers(1, max_points + 1, size=count)
    kinds = ["euclidean", "graph"]
    return [random_space(int(n), seed=seed * 100_003 + i, kind=kinds[i % 2]) for i, n in enumerate(sizes)]


def run_sandwich(config: ExperimentConfig) -> experiments.ExperimentResult:
    params = config.typed_params()
    if params.source == "bundled":
        spaces = bundled_spaces()
    elif params.source == "dir":
        spaces = load_space_dir(params.dir)
    else:
        spaces = _random_spaces(params.count, params.max_points, config.seed)

    def check(space: MetricSpace) -> List[dict]:
        rows = []
        for eps in params.eps_grid:
            row = sandwich_check(space, eps, params.mode).to_dict()
            row["space"] = space.id
            row["points"] = space.n
            rows.append(row)
        return rows

    rows = [r for rs in parallel_map(check, spaces, config.threads) for r in rs]
    failed = [r for r in rows if not r["passed"]]
    return experiments.ExperimentResult("sandwich", rows, not failed,
                                        {"spaces": len(spaces), "violations": len(failed)})


def run_gh_axioms(config: ExperimentConfig) -> experiments.ExperimentResult:
    params = config.typed_params()
    spaces = _random_spaces(params.spaces, params.max_points, config.seed)
    n = len(spaces)
    pairs = [(i, j) for i in range(n) for j in range(n) if i != j]
    values = parallel_map(lambda ij: gh_exact_small(spaces[ij[0]], spaces[ij[1]]).value, pairs, config.threads)
    D = np.zeros((n, n))
    for (i, j), v in zip(pairs, values):
        D[i, j] = v

    asymmetric = [(spaces[i].id, spaces[j].id) for i, j in pairs if i < j and D[i, j] != D[j, i]]
    triangle = [
        (spaces[i].id, spaces[j].id, spaces[k].id, float(D[i, k] - D[i, j] - D[j, k]))
        for i, j, k in itertools.permutations(range(n), 3)
        if D[i, k] > D[i, j] + D[j, k] + 1e-12
    ]
    self_distances = [gh_exact_small(s, s).value for s in spaces]

    rng = np.random.default_rng(config.seed)
    two_point = []
    for a, b in rng.uniform(0.1, 5.0, size=(params.two_point_pairs, 2)):
        X = FiniteMetricSpace("a", ("x0", "x1"), [[0, a], [a, 0]])
        Y = FiniteMetricSpace("b", ("y0", "y1"), [[0, b], [b, 0]])
        value = gh_exact_small(X, Y).value
        two_point.append(abs(value - abs(a - b) / 2))

    rows = [
        {"check": "symmetry", "cases": n * (n - 1) // 2, "violations": len(asymmetric)},
        {"check": "triangle", "cases": n * (n - 1) * (n - 2), "violations": len(triangle)},
        {"check": "identity", "cases": n, "violations": sum(v != 0 for v in self_distances)},
        {"check": "two-point", "cases": len(two_point),
         "violations": sum(e > 1e-12 for e in two_point)},
    ]
    for row in rows:
        row["passed"] = row["violations"] == 0
    return experiments.ExperimentResult(
        "gh-axioms", rows, all(r["passed"] for r in rows),
        {"asymmetric": asymmetric[:10], "triangle_witnesses": triangle[:10],
         "max_two_point_error": max(two_point, default=0.0)},
    )


def run_gh_family(config: ExperimentConfig) -> experiments.ExperimentResult:
    params = config.typed_params()
    spaces = load_space_dir(params.dir)
    members = [FamilyMember(s.id, s, float(i)) for i, s in enumerate(spaces)]
    report = family_precompactness(members, params.eps_grid, params.pointed, params.radius,
                                   family=params.dir, threads=config.threads)
    # a family report is descriptive; neither verdict is a failed check
    return experiments.ExperimentResult("gh-family", report.table, True, report.to_dict())


def run_sw_packing(config: ExperimentConfig) -> experiments.ExperimentResult:
    p = config.typed_params()
    return experiments.experiment_sw_packing(range(p.k_min, p.k_max + 1), p.mesh_h, config.threads)


def run_petersen(config: ExperimentConfig) -> experiments.ExperimentResult:
    p = config.typed_params()
    return experiments.experiment_petersen(p.mesh_h, p.detour, p.R_trunc)


def run_petersen_sweep(config: ExperimentConfig) -> experiments.ExperimentResult:
    p = config.typed_params()
    return experiments.experiment_petersen_sweep(p.detours, p.mesh_h, p.R_trunc, config.threads)


def run_torus(config: ExperimentConfig) -> experiments.ExperimentResult:
    p = config.typed_params()
    return experiments.experiment_torus_covers(p.radii, p.a, p.b, p.mesh_h, p.R, p.eps, config.threads)


def run_contrast(config: ExperimentConfig) -> experiments.ExperimentResult:
    p = config.typed_params()
    return experiments.experiment_cover_contrast(range(p.k_min, p.k_max + 1), p.mesh_h, p.eps_grid,
                                                 p.radius, p.r1, config.threads)


RUNNERS: Dict[str, Callable[[ExperimentConfig], experiments.ExperimentResult]] = {
    "sandwich": run_sandwich,
    "sw-packing": run_sw_packing,
    "petersen": run_petersen,
    "petersen-sweep": run_petersen_sweep,
    "torus-covers": run_torus,
    "cover-contrast": run_contrast,
    "gh-family": run_gh_family,
    "gh-axioms": run_gh_axioms,
}


def emit(report: Dict, rows: List[Dict], name: str, writer: Optional[ReportWriter], fmt: str = "json",
         plot: Optional[Tuple[str, str, Optional[str]]] = None) -> List[str]:
    """Write the report (and table or plot) through the writer; returns written paths"""
    if writer is None:
        return []
    paths = [writer.write_json(report, name)]
    if fmt == "csv":
        paths.append(writer.write_csv(rows, name))
    if plot is not None:
        x, y, group = plot
        svg = writer.write_plot(rows, x, y, name, title=name, group=group)
        if svg is not None:
            paths.append(svg)
    return [str(p) for p in paths]


def run(config: ExperimentConfig, writer: Optional[ReportWriter] = None) -> Dict:
    """Run one experiment and return its report; files are written when a writer is given"""
    logger.info("running experiment %s (seed %d, %d threads)", config.name, config.seed, config.threads)
    result = RUNNERS[config.name](config)
    report = make_report("experiment", config.model_dump(), [result.to_dict()], result.passed)
    emit(report, result.rows, config.name, writer, config.format,
         PLOTS.get(config.name) if config.plot else None)
    return report
