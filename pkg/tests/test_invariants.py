import numpy as np
import pytest

from ghlab.core.errors import InfeasibleError, InputError
from ghlab.core.invariants import covering_number, farthest_point_net, packing_number, sandwich_check
from ghlab.core.metric_core import FiniteMetricSpace
from ghlab.utils.generators import grid_space, random_space


def test_equidistant_points_all_pack():
    space = FiniteMetricSpace("tetra", ("a", "b", "c", "d"), 1 - np.eye(4))
    result = packing_number(space, 1.0)
    assert result.count == 4
    assert result.exact


def test_line_packing_and_covering(line11):
    assert packing_number(line11, 0.35).count == 3
    cov = covering_number(line11, 0.35)
    assert cov.count == 2
    assert cov.exact


def test_line_sandwich(line11):
    result = sandwich_check(line11, 0.35)
    assert (result.cov.count, result.cap.count, result.cov_half.count) == (2, 3, 4)
    assert result.passed


def test_two_point_space_uses_open_balls():
    space = FiniteMetricSpace("pair", ("a", "b"), [[0, 1], [1, 0]])
    result = sandwich_check(space, 1.0)
    assert (result.cov.count, result.cap.count, result.cov_half.count) == (2, 2, 2)


def test_single_point_covers_itself():
    space = FiniteMetricSpace("one", ("a",), [[0.0]])
    assert covering_number(space, 0.01).count == 1
    assert packing_number(space, 5.0).count == 1


def test_four_cycle_sandwich(four_cycle):
    assert sandwich_check(four_cycle, 1.0).passed


def test_covering_centers_cover_everything(line11):
    cov = covering_number(line11, 0.35)
    D = line11.matrix
    centers = line11.indices(cov.centers)
    assert np.all(D[centers].min(axis=0) < 0.35)


def test_packing_witness_is_discrete(line11):
    cap = packing_number(line11, 0.35)
    idx = line11.indices(cap.witness)
    block = line11.matrix[np.ix_(idx, idx)]
    assert np.all(block[np.triu_indices(len(idx), k=1)] >= 0.35 - 1e-12)


@pytest.mark.parametrize("seed", range(8))
def test_greedy_bounds_point_the_right_way(seed):
    space = random_space(12, seed=seed)
    for eps in (0.2, 0.4):
        assert packing_number(space, eps, "greedy").count <= packing_number(space, eps).count
        assert covering_number(space, eps, "greedy").count >= covering_number(space, eps).count


def test_counts_are_monotone_in_epsilon():
    space = random_space(14, seed=3)
    caps = [packing_number(space, e).count for e in (0.1, 0.2, 0.4)]
    covs = [covering_number(space, e).count for e in (0.1, 0.2, 0.4)]
    assert caps == sorted(caps, reverse=True)
    assert covs == sorted(covs, reverse=True)


def test_farthest_point_net_starts_at_basepoint():
    grid = grid_space(5)
    net = farthest_point_net(grid, 2.0)
    assert grid.points[net[0]] == grid.basepoint


def test_within_restricts_to_subset():
    grid = grid_space(6)
    corner = [p for p in grid.points if int(p[1:3]) < 2 and int(p[4:6]) < 2]
    assert packing_number(grid, 1.0, within=corner).count == 4
    cov = covering_number(grid, 1.5, "greedy", within=corner)
    assert set(cov.centers) <= set(corner)


def test_exact_over_cap_raises():
    space = random_space(40, seed=1)
    with pytest.raises(InfeasibleError, match="greedy"):
        covering_number(space, 0.2)
    with pytest.raises(InfeasibleError):
        packing_number(space, 0.2, cap=10)


@pytest.mark.parametrize("eps", [0.0, -1.0])
def test_nonpositive_epsilon_raises(line11, eps):
    with pytest.raises(InputError):
        packing_number(line11, eps)


def test_unknown_mode_raises(line11):
    with pytest.raises(InputError):
        covering_number(line11, 0.3, "fast")


@pytest.mark.slow
def test_sandwich_on_random_spaces():
    violations = 0
    rng = np.random.default_rng(0)
    for seed in range(200):
        n = int(rng.integers(1, 16))
        space = random_space(n, seed=seed, kind="euclidean" if seed % 2 else "graph")
        for eps in (0.1, 0.3, 0.6):
            violations += not sandwich_check(space, eps).passed
    assert violations == 0
