"""
Command line interface for ghlab
Subcommands: gen, invariants, doubling, domain-cert, cover, gh, experiment
"""

import argparse
import json
import logging
import math
import sys
from dataclasses import asdict
from pathlib import Path
from typing import Dict, List, Optional

import pandas as pd

from ..config_loader import settings
from ..core.complexes import build_flat_torus, build_glued_sphere, build_polygon_rp2
from ..core.covers import normal_cover, universal_cover_ball
from ..core.domains import (
    delta_intrinsic_metric,
    domain_from_membership,
    domain_from_space,
    exhaustion_certificate,
    r_extrinsic_metric,
    r_interior,
    undistortedness_certificate,
)
from ..core.doubling import (
    global_doubling_profile,
    lemma21_packing_bound_check,
    local_doubling_check,
    two_point_propagation_check,
)
from ..core.errors import GHLabError, InputError
from ..core.euclidean import MembershipGrid, cone_condition_check, grid_from_csv, jones_flatness_check, sample_grid
from ..core.gh_distance import FamilyMember, family_precompactness, gh_exact_small, gh_heuristic, gh_lower_bounds
from ..core.invariants import covering_number, packing_number, sandwich_check
from ..core.metric_core import DiscretizedLengthSpace, MetricSpace
from ..utils.generators import DOMAIN_GENERATORS, generate_domain, generate_space
from ..utils.report_writer import ReportWriter, dumps
from ..utils.space_io import dump_cover, dump_space, load_space, load_space_dir, space_to_dict
from .experiment_config import build_config
from .runner import emit, make_report, run

logger = logging.getLogger(__name__)


def _status(passed: bool, message: str, warn: bool = False):
    mark = "⚠️" if warn else ("✅" if passed else "❌")
    print(f"{mark} {message}", file=sys.stderr)


def _params(text: Optional[str]) -> Dict:
    if not text:
        return {}
    path = Path(text)
    try:
        if path.suffix == ".json" and path.exists():
            with open(path, "r") as f:
                data = json.load(f)
        else:
            data = json.loads(text)
    except json.JSONDecodeError as e:
        raise InputError(f"--params must be a JSON object or a .json file: {e}") from None
    if not isinstance(data, dict):
        raise InputError("--params must be a JSON object")
    return data


def _floats(text: str) -> List[float]:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise InputError(f"expected a comma separated list of numbers, got {text!r}") from None


def _space(path: Optional[str]) -> MetricSpace:
    if not path:
        raise InputError("--space is required")
    return load_space(path)


def _graph_space(path: Optional[str]) -> DiscretizedLengthSpace:
    space = _space(path)
    if not isinstance(space, DiscretizedLengthSpace):
        raise InputError(f"{path} holds a distance table; this check needs a graph space")
    return space


def _writer(args) -> Optional[ReportWriter]:
    return ReportWriter(args.output) if args.output else None


def _finish(args, command: str, config: Dict, results: List[Dict], passed: bool,
            rows: Optional[List[Dict]] = None, name: Optional[str] = None,
            plot=None) -> int:
    report = make_report(command, config, results, passed)
    writer = _writer(args)
    if writer is None:
        sys.stdout.write(dumps(report))
    else:
        emit(report, rows if rows is not None else results, name or command, writer, args.format,
             plot if args.plot else None)
    return 0 if passed else 1


# gen

COMPLEXES = ("rp2", "sphere", "torus")


def _complex_space(kind: str, params: Dict):
    if kind == "rp2":
        return build_polygon_rp2(**params)
    if kind == "sphere":
        return build_glued_sphere(**params)
    return build_flat_torus(**params)


def cmd_gen(args) -> int:
    params = _params(args.params)
    out = Path(args.out) if args.out else None
    if args.kind in DOMAIN_GENERATORS:
        spacing = params.pop("spacing", 0.01)
        grid = sample_grid(generate_domain(args.kind, **params), spacing)
        frame = pd.DataFrame(grid.coords.reshape(-1, grid.dim), columns=["x", "y", "z"][:grid.dim])
        frame["inside"] = grid.mask.reshape(-1).astype(int)
        if out is None:
            sys.stdout.write(frame.to_csv(index=False, float_format="%.12g"))
        else:
            out.parent.mkdir(parents=True, exist_ok=True)
            frame.to_csv(out, index=False, float_format="%.12g")
        _status(True, f"{args.kind}: {int(grid.mask.sum())} inside lattice points at spacing {spacing:g}")
        return 0
    if args.kind in COMPLEXES:
        complex_, space = _complex_space(args.kind, params)
        gluing = complex_.check_gluing()
        _status(True, f"{complex_.name}: {space.n} vertices, euler characteristic {gluing['euler']}")
    else:
        space = generate_space(args.kind, **params)
        _status(True, f"{space.id}: {space.n} points")
    if out is None:
        sys.stdout.write(dumps(space_to_dict(space)))
    else:
        dump_space(space, out)
    return 0


# invariants

def cmd_invariants(args) -> int:
    space = _space(args.space)
    eps = args.epsilon
    if args.what == "cap":
        result = packing_number(space, eps, args.mode)
        data, passed = asdict(result), True
    elif args.what == "cov":
        result = covering_number(space, eps, args.mode)
        data, passed = asdict(result), True
    else:
        result = sandwich_check(space, eps, args.mode)
        data, passed = result.to_dict(), result.passed
    data["space"] = space.id
    _status(passed, f"{args.what} of {space.id} at eps={eps:g}: "
            + (f"{data['count']}" if "count" in data else f"{data['cov']} <= {data['cap']} <= {data['cov_half']}"))
    config = {"space": args.space, "epsilon": eps, "mode": args.mode, "what": args.what}
    row = {k: v for k, v in data.items() if not isinstance(v, list)}
    return _finish(args, "invariants", config, [data], passed, rows=[row])


# doubling

def cmd_doubling(args) -> int:
    space = _space(args.space)
    rho = args.rho
    if args.what == "local":
        radii = _floats(args.radii) if args.radii else None
        cert = local_doubling_check(space, rho, radii, args.A0)
        results, passed = [cert.to_dict()], cert.passed
        _status(passed, f"local doubling of {space.id} at rho={rho:g}: A0={cert.A0:.4g}")
    elif args.what == "propagate":
        centers = [args.x] if args.x else list(space.points)
        verdicts = [two_point_propagation_check(space, x, args.R, rho, args.A0) for x in centers]
        results = [v.to_dict() for v in verdicts]
        passed = all(v.passed for v in verdicts)
        _status(passed, f"two-point propagation on {space.id}: {len(verdicts)} centers, "
                f"{sum(not v.passed for v in verdicts)} violations")
    elif args.what == "lemma21":
        if args.epsilon is None:
            raise InputError("--what lemma21 needs --epsilon")
        centers = [args.p] if args.p else list(space.points)
        verdicts = [lemma21_packing_bound_check(space, p, rho, args.epsilon, args.A0) for p in centers]
        results = [v.to_dict() for v in verdicts]
        passed = all(v.status != "FAIL" for v in verdicts)
        inconclusive = any(v.status == "INCONCLUSIVE" for v in verdicts)
        _status(passed, f"packing bound on {space.id}: {len(verdicts)} centers", warn=passed and inconclusive)
    else:
        profile = global_doubling_profile(space, rho, args.A0, sample_size=args.sample_size, seed=args.seed)
        results, passed = [profile.to_dict()], profile.passed
        _status(passed, f"global doubling profile of {space.id}: monotone={profile.monotone}")
    config = {"space": args.space, "rho": rho, "what": args.what, "A0": args.A0, "x": args.x, "R": args.R,
              "p": args.p, "epsilon": args.epsilon, "seed": args.seed}
    rows = [{k: v for k, v in r.items() if not isinstance(v, (list, dict))} for r in results]
    return _finish(args, "doubling", config, results, passed, rows=rows)


# domain-cert

def _grid(args, params: Dict) -> MembershipGrid:
    if args.grid:
        return grid_from_csv(args.grid, params.pop("spacing", None))
    if args.domain:
        spacing = params.pop("spacing", 0.01)
        domain_params = params.pop("domain_params", {})
        return sample_grid(generate_domain(args.domain, **domain_params), spacing)
    raise InputError("this check needs --grid CSV or --domain NAME")


def _graph_domain(args, params: Dict):
    if args.space:
        space = _graph_space(args.space)
        if args.boundary:
            space = DiscretizedLengthSpace(space.id, space.points, space.edges, space.basepoint, space.measure,
                                           frozenset(_boundary_tags(args.boundary, space)))
        return domain_from_space(space, params.pop("vertices", None))
    return domain_from_membership(_grid(args, params))


def _boundary_tags(text: str, space: MetricSpace) -> List[str]:
    path = Path(text)
    if path.exists():
        with open(path, "r") as f:
            return [line.strip() for line in f if line.strip()]
    names = [v.strip() for v in text.split(",") if v.strip()]
    space.indices(names)
    return names


def _subset(space: MetricSpace, params: Dict) -> List[str]:
    subset = params.get("subset")
    return list(space.points) if subset is None else list(subset)


def cmd_domain_cert(args) -> int:
    params = _params(args.params)
    what = args.what
    rows = None
    if what == "interior":
        domain = _graph_domain(args, params)
        t = float(params.get("t", 0.0))
        interior = r_interior(domain, t)
        results = [{"t": t, "size": len(interior), "domain_size": len(domain.vertices),
                    "interior": list(interior)}]
        passed = True
        _status(True, f"{len(interior)} of {len(domain.vertices)} vertices lie deeper than t={t:g}")
    elif what == "undistorted":
        domain = _graph_domain(args, params)
        profile = params.get("s", params.get("tau", 1.0))
        cert = undistortedness_certificate(domain, params["t_grid"], profile, params.get("slack", 1.0))
        results, passed = [cert.to_dict()], cert.passed
        rows = [asdict(v) for v in cert.verdicts]
        _status(passed, f"undistortedness over {len(cert.t_grid)} values of t; minimal tau "
                f"{cert.minimal_tau if cert.minimal_tau is not None else 'n/a'}")
    elif what == "exhaustion":
        domain = _graph_domain(args, params)
        steps = exhaustion_certificate(domain, [tuple(s) for s in params["schedule"]])
        results = [asdict(s) for s in steps]
        passed = all(s.passed for s in steps)
        _status(passed, f"exhaustion schedule of {len(steps)} steps")
    elif what == "cone":
        grid = _grid(args, params)
        cert = cone_condition_check(grid, float(params.get("theta", math.pi / 4)), float(params.get("H", 0.2)))
        results, passed = [cert.to_dict()], cert.passed
        _status(passed, f"cone condition on {grid.name}: {cert.failures} of {cert.tested} points fail")
    elif what == "jones":
        grid = _grid(args, params)
        cert = jones_flatness_check(grid, float(params["r0"]), params.get("budget"), args.seed)
        results, passed = [cert.to_dict()], cert.passed
        _status(passed, f"Jones flatness on {grid.name}: {cert.failures} of {cert.pairs_tested} pairs fail")
    elif what == "delta-metric":
        space = _space(args.space)
        metric = delta_intrinsic_metric(space, _subset(space, params), float(params["delta"]))
        results, passed = [space_to_dict(metric)], True
        _status(True, f"delta-intrinsic metric on {metric.n} points")
    else:
        space = _graph_space(args.space)
        metric = r_extrinsic_metric(space, _subset(space, params), float(params["r"]))
        results, passed = [space_to_dict(metric)], True
        _status(True, f"r-extrinsic metric on {metric.n} points")
    config = {"what": what, "space": args.space, "grid": args.grid, "domain": args.domain,
              "boundary": args.boundary, "params": _params(args.params), "seed": args.seed}
    if rows is None:
        rows = [{k: v for k, v in r.items() if not isinstance(v, (list, dict))} for r in results]
    return _finish(args, "domain-cert", config, results, passed, rows=rows)


# cover

def _base(text: str, mesh_h: float):
    kind, _, spec = text.partition(":")
    if kind == "rp2":
        key, _, value = spec.partition("=")
        if key != "k" or not value.isdigit():
            raise InputError(f"rp2 base needs the form rp2:k=K, got {text!r}")
        return build_polygon_rp2(int(value), mesh_h)[0]
    if kind == "sphere":
        return build_glued_sphere(mesh_h)[0]
    if kind == "torus":
        sides = _floats(spec) if spec else [1.0, 1.0]
        if len(sides) != 2:
            raise InputError(f"torus base needs the form torus:a,b, got {text!r}")
        return build_flat_torus(sides[0], sides[1], mesh_h)[0]
    raise InputError(f"unknown base {text!r}; use rp2:k=K, sphere or torus:a,b")


def cmd_cover(args) -> int:
    complex_ = _base(args.base, args.mesh_h)
    center = args.center or complex_.marked.get("o", "o")
    center = complex_.marked.get(center, center)
    if args.what == "universal":
        trunc = args.trunc if args.trunc is not None else args.r + 4 * args.mesh_h
        cover = universal_cover_ball(complex_, center, args.r, trunc)
    else:
        if args.r2 is None:
            raise InputError("normal covers need --r2")
        cover = normal_cover(complex_, center, args.r, args.r2, args.trunc)
    if args.out:
        dump_cover(cover, args.out)
    summary = {
        "base": complex_.name,
        "center": center,
        "lifted_vertices": len(cover.lifted),
        "sheets": cover.sheets,
        "truncated": cover.truncated,
        "trunc": cover.trunc,
    }
    _status(True, f"{args.what} cover of {complex_.name}: {len(cover.lifted)} vertices, {cover.sheets} sheets",
            warn=cover.truncated)
    config = {"base": args.base, "what": args.what, "center": center, "r": args.r, "r2": args.r2,
              "trunc": args.trunc, "mesh_h": args.mesh_h, "out": args.out}
    return _finish(args, "cover", config, [summary], True)


# gh

def cmd_gh(args) -> int:
    if args.action == "family":
        if not args.dir:
            raise InputError("gh family needs --dir")
        spaces = load_space_dir(args.dir)
        members = [FamilyMember(s.id, s, float(i)) for i, s in enumerate(spaces)]
        report = family_precompactness(members, _floats(args.eps), args.pointed, args.radius,
                                       family=args.dir, threads=args.threads)
        _status(report.verdict == "bounded", f"family of {len(members)} spaces: {report.verdict}",
                warn=report.verdict == "divergent")
        config = {"dir": args.dir, "eps": _floats(args.eps), "pointed": args.pointed, "radius": args.radius}
        return _finish(args, "gh-family", config, [report.to_dict()], True, rows=report.table,
                       plot=("parameter", "upper", "epsilon"))
    if not (args.x and args.y):
        raise InputError("gh needs --x and --y")
    X, Y = load_space(args.x), load_space(args.y)
    if args.mode == "exact":
        result = gh_exact_small(X, Y).to_dict(X, Y)
    elif args.mode == "heuristic":
        result = gh_heuristic(X, Y, seed=args.seed).to_dict(X, Y)
    else:
        result = gh_lower_bounds(X, Y).to_dict()
    result.update({"x": X.id, "y": Y.id, "mode": args.mode})
    _status(True, f"d_GH({X.id}, {Y.id}) {args.mode}: {result['value']:.6g}")
    config = {"x": args.x, "y": args.y, "mode": args.mode, "seed": args.seed}
    row = {k: v for k, v in result.items() if not isinstance(v, list)}
    return _finish(args, "gh", config, [result], True, rows=[row])


# experiment

def cmd_experiment(args) -> int:
    overrides = {"output": args.output, "format": args.format, "plot": args.plot or None,
                 "seed": args.seed_given, "threads": args.threads_given}
    if args.config:
        config = build_config(args.config, **({"name": args.name} if args.name else {}), **overrides)
    else:
        if not args.name:
            raise InputError("experiment needs --name or --config")
        config = build_config({"name": args.name, "params": _params(args.params)}, **overrides)
    writer = ReportWriter(config.output) if config.output else None
    report = run(config, writer)
    if writer is None:
        sys.stdout.write(dumps(report))
    result = report["results"][0]
    _status(report["passed"], f"experiment {config.name}: {len(result['rows'])} rows")
    return 0 if report["passed"] else 1


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--output", help="directory for report files; stdout when omitted")
    common.add_argument("--format", choices=["json", "csv"], default=None, help="json (default) or csv")
    common.add_argument("--plot", action="store_true", help="also write an SVG chart")
    common.add_argument("--seed", type=int, default=None)
    common.add_argument("--threads", type=int, default=None)
    common.add_argument("--log-level", default=None)

    parser = argparse.ArgumentParser(prog="ghlab", description="Gromov-Hausdorff precompactness lab")
    sub = parser.add_subparsers(dest="command", required=True)

    gen = sub.add_parser("gen", parents=[common], help="generate a space, complex or domain grid")
    gen.add_argument("--kind", required=True)
    gen.add_argument("--params")
    gen.add_argument("--out")
    gen.set_defaults(func=cmd_gen)

    inv = sub.add_parser("invariants", parents=[common], help="packing and covering numbers")
    inv.add_argument("--space", required=True)
    inv.add_argument("--epsilon", type=float, required=True)
    inv.add_argument("--mode", choices=["exact", "greedy"], default="exact")
    inv.add_argument("--what", choices=["cap", "cov", "sandwich"], default="sandwich")
    inv.set_defaults(func=cmd_invariants)

    dbl = sub.add_parser("doubling", parents=[common], help="doubling certificates")
    dbl.add_argument("--space", required=True)
    dbl.add_argument("--rho", type=float, required=True)
    dbl.add_argument("--what", choices=["local", "propagate", "lemma21", "profile"], default="local")
    dbl.add_argument("--A0", type=float)
    dbl.add_argument("--radii")
    dbl.add_argument("--x")
    dbl.add_argument("--R", type=float, default=1.0)
    dbl.add_argument("--p")
    dbl.add_argument("--epsilon", type=float)
    dbl.add_argument("--sample-size", type=int, default=32)
    dbl.set_defaults(func=cmd_doubling)

    dom = sub.add_parser("domain-cert", parents=[common], help="interior, undistortedness and domain checks")
    dom.add_argument("--space")
    dom.add_argument("--grid", help="membership CSV with columns x,y[,z],inside")
    dom.add_argument("--domain", choices=sorted(DOMAIN_GENERATORS))
    dom.add_argument("--boundary", help="comma separated ids or a file of ids")
    dom.add_argument("--what", required=True,
                     choices=["interior", "undistorted", "exhaustion", "cone", "jones", "delta-metric", "extrinsic"])
    dom.add_argument("--params")
    dom.set_defaults(func=cmd_domain_cert)

    cov = sub.add_parser("cover", parents=[common], help="universal and normal covers of complex balls")
    cov.add_argument("--base", required=True, help="rp2:k=K, sphere or torus:a,b")
    cov.add_argument("--what", choices=["universal", "normal"], default="universal")
    cov.add_argument("--center")
    cov.add_argument("--r", type=float, required=True)
    cov.add_argument("--r2", type=float)
    cov.add_argument("--trunc", type=float)
    cov.add_argument("--mesh-h", type=float, default=settings.max_mesh_h)
    cov.add_argument("--out")
    cov.set_defaults(func=cmd_cover)

    gh = sub.add_parser("gh", parents=[common], help="Gromov-Hausdorff distances and family verdicts")
    gh.add_argument("action", nargs="?", choices=["family"])
    gh.add_argument("--x")
    gh.add_argument("--y")
    gh.add_argument("--mode", choices=["exact", "heuristic", "lower"], default="exact")
    gh.add_argument("--dir")
    gh.add_argument("--pointed", action="store_true")
    gh.add_argument("--radius", type=float)
    gh.add_argument("--eps", default="1,0.5,0.25")
    gh.set_defaults(func=cmd_gh)

    exp = sub.add_parser("experiment", parents=[common], help="run a configured experiment")
    exp.add_argument("--name")
    exp.add_argument("--params")
    exp.add_argument("--config")
    exp.set_defaults(func=cmd_experiment)
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=(args.log_level or settings.log_level).upper(),
                        format="%(asctime)s %(levelname)s %(name)s: %(message)s", stream=sys.stderr)
    # experiment configs keep their own defaults unless a flag is given
    args.seed_given, args.threads_given = args.seed, args.threads
    args.seed = settings.default_seed if args.seed is None else args.seed
    args.threads = settings.threads if args.threads is None else args.threads
    try:
        return args.func(args)
    except GHLabError as e:
        print(f"❌ {type(e).__name__}: {e}", file=sys.stderr)
        return e.exit_code
    except KeyError as e:
        print(f"❌ missing parameter {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
