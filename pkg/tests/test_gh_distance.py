import pytest

from ghlab.cli.experiment_config import build_config
from ghlab.cli.runner import run_gh_axioms
from ghlab.core.errors import InfeasibleError, InputError
from ghlab.core.gh_distance import (
    FamilyMember,
    family_precompactness,
    gh_exact_small,
    gh_heuristic,
    gh_lower_bounds,
)
from ghlab.core.metric_core import FiniteMetricSpace
from ghlab.utils.generators import line_points, path_space, random_space


def pair(d: float) -> FiniteMetricSpace:
    return FiniteMetricSpace(f"pair-{d:g}", ("a", "b"), [[0.0, d], [d, 0.0]])


def test_identical_spaces_are_at_distance_zero(equilateral):
    result = gh_exact_small(equilateral, equilateral)
    assert result.value == 0.0
    assert result.exact
    assert result.correspondence.distortion == 0.0


def test_two_point_spaces():
    assert gh_exact_small(pair(1.0), pair(3.0)).value == pytest.approx(1.0)


def test_point_against_pair():
    point = FiniteMetricSpace("point", ("x",), [[0.0]])
    result = gh_exact_small(point, pair(2.0))
    assert result.value == pytest.approx(1.0)
    assert result.to_dict(point, pair(2.0))["correspondence"] == [["x", "a"], ["x", "b"]]


@pytest.mark.parametrize("seed", range(5))
def test_exact_is_symmetric(seed):
    X, Y = random_space(4, seed=seed), random_space(5, seed=seed + 100)
    assert gh_exact_small(X, Y).value == pytest.approx(gh_exact_small(Y, X).value)


@pytest.mark.parametrize("seed", range(5))
def test_lower_exact_heuristic_ordering(seed):
    X, Y = random_space(5, seed=seed), random_space(6, seed=seed + 50, kind="graph")
    lower = gh_lower_bounds(X, Y).value
    exact = gh_exact_small(X, Y).value
    upper = gh_heuristic(X, Y, budget=500, seed=seed)
    assert lower <= exact + 1e-9
    assert exact <= upper.value + 1e-9
    assert not upper.exact
    assert upper.evaluations <= 500 + 2


def test_diameter_lower_bound():
    bound = gh_lower_bounds(pair(1.0), pair(5.0))
    assert bound.value >= 2.0
    assert bound.to_dict()["kind"] in ("diameter", "packing")


def test_exact_search_is_capped():
    with pytest.raises(InfeasibleError, match="heuristic"):
        gh_exact_small(random_space(8, seed=0), random_space(3, seed=1))


def test_heuristic_budget_must_be_positive(equilateral):
    with pytest.raises(InputError):
        gh_heuristic(equilateral, equilateral, budget=0)


def test_bounded_family_of_interval_samples():
    members = [FamilyMember(f"line-{n}", line_points(n), n) for n in (11, 21, 41, 81)]
    report = family_precompactness(members, [0.25], family="interval")
    assert report.verdict == "bounded"
    assert [row["lower"] for row in report.table] == [3, 3, 3, 3]
    assert report.envelope[0.25] >= 3
    assert report.witness is None


def test_divergent_family_of_paths():
    members = [FamilyMember(f"path-{n}", path_space(n), n) for n in (5, 10, 20, 40)]
    report = family_precompactness(members, [1.0], family="paths")
    assert report.verdict == "divergent"
    assert report.witness["lower_counts"] == [5, 10, 20, 20]
    assert report.witness["members"] == ["path-5", "path-10", "path-20", "path-40"]
    assert report.envelope == {}


def test_pointed_family_counts_inside_the_ball():
    members = [FamilyMember(f"path-{n}", path_space(n), n) for n in (5, 10, 20, 40)]
    report = family_precompactness(members, [1.0], pointed=True, radius=3.0)
    assert report.verdict == "bounded"
    assert {row["points"] for row in report.table} == {3}


def test_family_arguments_are_checked():
    members = [FamilyMember("line", line_points(5))]
    with pytest.raises(InputError):
        family_precompactness([], [0.5])
    with pytest.raises(InputError):
        family_precompactness(members, [0.0])
    with pytest.raises(InputError):
        family_precompactness(members, [0.5], pointed=True, radius=1.0)


def _axiom_rows(**params):
    config = build_config({"name": "gh-axioms", "seed": 0, "params": params})
    result = run_gh_axioms(config)
    return result, {row["check"]: row for row in result.rows}


def test_gh_axioms_on_a_few_spaces():
    result, rows = _axiom_rows(spaces=6, two_point_pairs=10)
    assert rows["triangle"]["cases"] == 6 * 5 * 4
    assert rows["identity"]["cases"] == 6
    assert result.passed


@pytest.mark.slow
def test_gh_axioms_on_all_triples_of_thirty_spaces():
    result, rows = _axiom_rows(spaces=30, max_points=5, two_point_pairs=50)
    assert rows["symmetry"]["cases"] == 30 * 29 // 2
    assert rows["triangle"]["cases"] == 30 * 29 * 28
    assert rows["two-point"]["cases"] == 50
    assert all(row["violations"] == 0 for row in result.rows), result.summary
    assert result.summary["max_two_point_error"] <= 1e-12
