import math

import pytest

from ghlab.core.errors import InputError
from ghlab.core.experiments import (
    developed_angle,
    experiment_cover_contrast,
    experiment_petersen,
    experiment_petersen_sweep,
    experiment_sw_packing,
    experiment_torus_covers,
    sw_packing_member,
)


def test_torus_covers_separate_disks_from_punctured_tori():
    result = experiment_torus_covers(radii=(0.7, 0.3), mesh_h=0.1, R=1.0, eps=0.5)
    assert result.passed
    assert [row["radius"] for row in result.rows] == [0.3, 0.7]
    disk, punctured = result.rows
    assert disk["sheets"] == 1
    assert disk["lifts_of_center"] == 1
    assert punctured["sheets"] > 1
    assert punctured["lifts_of_center"] >= 5
    assert result.summary["simply_connected"] == [True, False]
    assert result.to_dict()["name"] == "torus-covers"


def test_sw_packing_needs_ks():
    with pytest.raises(InputError):
        experiment_sw_packing([])


def test_petersen_truncation_must_reach_a_full_turn(coarse_mesh):
    with pytest.raises(InputError):
        experiment_petersen(0.1, 0.2, R_trunc=3.0)


@pytest.mark.slow
def test_petersen_bound_with_wide_caps(coarse_mesh):
    result = experiment_petersen(mesh_h=0.1, detour=0.2)
    row = result.rows[0]
    assert result.passed
    assert row["bound"] == pytest.approx(math.pi + 2 * math.pi * 0.2 + 1.0)
    assert row["lifts_of_o"] > 1
    assert row["max_distance_all"] >= row["max_distance_one_turn"]


@pytest.mark.slow
def test_developed_angle_starts_at_the_root(coarse_mesh):
    from ghlab.core.complexes import build_glued_sphere
    from ghlab.core.covers import unfold_region

    complex_, _ = build_glued_sphere(0.1, 0.2)
    region = [v for v, (theta, _) in complex_.coords.items() if 0.2 - 1e-12 <= theta <= math.pi - 0.2 + 1e-12]
    cover = unfold_region(complex_, "o", region, 2.0)
    angle = developed_angle(cover)
    assert angle[cover.root] == 0.0
    assert set(angle) == set(cover.lifted)
    # lifts of o sit at whole turns of the lune
    for lift in cover.lifts("o"):
        turns = angle[lift] / (math.pi / 2)
        assert turns == pytest.approx(round(turns), abs=1e-9)


@pytest.mark.slow
def test_petersen_lift_counts_grow_as_caps_shrink(coarse_mesh):
    result = experiment_petersen_sweep((0.1, 0.2), mesh_h=0.1)
    assert [row["detour"] for row in result.rows] == [0.2, 0.1]
    assert result.summary["increasing"]
    assert result.passed


@pytest.mark.slow
def test_sw_packing_member_finds_k_separated_lifts(coarse_mesh):
    row = sw_packing_member(3, 0.1)
    assert row["lifts"] >= 3
    assert row["min_distance"] >= 2 - 1.0
    assert row["passed"]


@pytest.mark.slow
def test_sw_packing_acceptance():
    result = experiment_sw_packing(range(3, 11), mesh_h=0.02)
    assert [row["k"] for row in result.rows] == list(range(3, 11))
    for row in result.rows:
        assert row["lifts"] >= row["k"], row
        assert row["min_distance"] >= 2 - 10 * 0.02, row
    assert result.summary["cov_eps1_monotone"]
    assert result.passed


@pytest.mark.slow
def test_cover_contrast_acceptance():
    result = experiment_cover_contrast(range(3, 11), mesh_h=0.02, eps_grid=(1.0, 0.5))
    assert result.summary["universal"]["verdict"] == "divergent"
    assert result.summary["normal"]["verdict"] == "bounded"
    assert {row["family"] for row in result.rows} == {"universal", "normal"}
    assert result.passed


@pytest.mark.slow
def test_petersen_acceptance_at_smallest_detour():
    h = 0.05
    result = experiment_petersen(mesh_h=h, detour=0.05, R_trunc=2 * math.pi + 0.5)
    row = result.rows[0]
    assert row["bound"] == pytest.approx(math.pi + 0.05 * 2 * math.pi + 10 * h)
    assert row["max_distance_one_turn"] <= row["bound"]
    assert result.passed


@pytest.mark.slow
def test_petersen_sweep_acceptance():
    result = experiment_petersen_sweep((0.2, 0.1, 0.05), mesh_h=0.05)
    assert [row["detour"] for row in result.rows] == [0.2, 0.1, 0.05]
    counts = result.summary["lift_counts"]
    assert counts[0] < counts[1] < counts[2]
    assert all(row["passed"] for row in result.rows)
    assert result.passed
