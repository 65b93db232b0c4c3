import math

import numpy as np
import pandas as pd
import pytest

from ghlab.core.domains import domain_from_membership, undistortedness_certificate
from ghlab.core.errors import InputError
from ghlab.core.euclidean import (
    EuclideanDomain,
    cone_condition_check,
    direction_gap,
    direction_grid,
    grid_from_csv,
    jones_flatness_check,
    sample_grid,
)
from ghlab.utils.generators import corridor_squares, disk, distorted_rays, half_plane, sine_curve_domain, square


def test_bounding_box_must_be_nonempty():
    with pytest.raises(InputError):
        EuclideanDomain("flat", 2, (0.0, 0.0), (1.0, 0.0), inside=lambda x: x[:, 0] > 0)


def test_sample_grid_counts_square_nodes():
    grid = sample_grid(square(), 0.1)
    assert grid.mask.sum() == 121
    assert grid.boundary_mask.sum() == 40
    assert grid.lattice_space().n == 121


def test_direction_grid_gap():
    dirs = direction_grid(2)
    assert len(dirs) == 64
    assert direction_gap(dirs) == pytest.approx(2 * math.pi / 64)
    assert np.allclose(np.linalg.norm(direction_grid(3), axis=1), 1.0)


def test_square_satisfies_cone_condition():
    cert = cone_condition_check(sample_grid(square(), 0.02), math.pi / 4, 0.2)
    assert cert.passed
    assert cert.tau == pytest.approx(math.sqrt(2))
    assert cert.t0 == 0.2


def test_disk_and_half_plane_satisfy_cone_condition():
    assert cone_condition_check(sample_grid(disk(), 0.05), math.pi / 4, 0.2).passed
    assert cone_condition_check(sample_grid(half_plane(), 0.05), math.pi / 4, 0.2).passed


def test_sine_curve_domain_fails_cone_condition():
    cert = cone_condition_check(sample_grid(sine_curve_domain(), 0.02), math.pi / 4, 0.2)
    assert not cert.passed
    assert cert.witnesses
    assert all(w[0] < 0.5 for w in cert.witnesses)


def test_cone_parameters_validated():
    grid = sample_grid(square(), 0.1)
    with pytest.raises(InputError):
        cone_condition_check(grid, 0.05, 0.2)
    with pytest.raises(InputError):
        cone_condition_check(grid, math.pi / 4, 0.05)


def test_cone_implies_undistorted_square():
    grid = sample_grid(square(), 0.02)
    cone = cone_condition_check(grid, math.pi / 4, 0.2)
    domain = domain_from_membership(grid)
    cert = undistortedness_certificate(domain, [0.1, 0.15], cone.tau, slack=5.0)
    assert cone.passed and cert.passed


@pytest.mark.slow
def test_cone_and_undistortedness_at_fine_resolution():
    grid = sample_grid(square(), 0.01)
    cone = cone_condition_check(grid, math.pi / 4, 0.2)
    cert = undistortedness_certificate(domain_from_membership(grid), [0.05, 0.1, 0.15],
                                       lambda t: t / math.sin(math.pi / 4), slack=5.0)
    assert cone.passed and cert.passed
    assert not cone_condition_check(sample_grid(sine_curve_domain(), 0.01), math.pi / 4, 0.2).passed


def test_square_is_jones_flat():
    cert = jones_flatness_check(sample_grid(square(), 0.02), 0.7, budget=40)
    assert cert.passed
    assert cert.pairs_tested == 40
    assert cert.pair_scale == pytest.approx(0.1)
    assert cert.headline["s_factor"] == pytest.approx(810450)
    assert cert.headline["t0"] == pytest.approx(0.7 / 12607)
    assert len(cert.derived) == 3


def test_jones_pair_scale_must_resolve():
    with pytest.raises(InputError):
        jones_flatness_check(sample_grid(square(), 0.1), 0.7)


def test_corridor_fails_jones_flatness_above_its_width():
    # pair scale 1.0 reaches across the short corridor; crossing pairs have no admissible path
    grid = sample_grid(corridor_squares(width=1e-3, gap=0.1), 0.02)
    cert = jones_flatness_check(grid, 7.0, budget=60)
    assert cert.pairs_tested == 60
    assert not cert.passed
    assert math.isinf(cert.worst["ratio"])


def test_distorted_rays_contain_their_axes():
    domain = distorted_rays(3)
    for k in (1, 2, 3):
        d = np.array([1.0, 2.0 ** -k]) / math.hypot(1.0, 2.0 ** -k)
        assert domain.inside(np.array([1.5 * d]))[0]
    assert not domain.inside(np.array([[1.0, 1.0]]))[0]


def test_sine_curve_oracle_handles_the_axis():
    domain = sine_curve_domain()
    pts = np.array([[0.0, -1.0], [0.5, -1.0], [0.5, 0.95]])
    assert domain.inside(pts).tolist() == [False, True, False]


def test_grid_from_csv(tmp_path):
    xs, ys = np.meshgrid(np.arange(6) * 0.1, np.arange(6) * 0.1, indexing="ij")
    frame = pd.DataFrame({"x": xs.ravel(), "y": ys.ravel()})
    frame["inside"] = ((frame.x > 0.05) & (frame.x < 0.45) & (frame.y > 0.05) & (frame.y < 0.45)).astype(int)
    path = tmp_path / "box.csv"
    frame.to_csv(path, index=False)
    grid = grid_from_csv(path)
    assert grid.spacing == pytest.approx(0.1)
    assert grid.mask.sum() == 16
    assert grid.contains(np.array([[0.2, 0.2], [0.0, 0.0]])).tolist() == [True, False]


def test_grid_from_csv_needs_columns(tmp_path):
    path = tmp_path / "bad.csv"
    pd.DataFrame({"x": [0.0], "inside": [1]}).to_csv(path, index=False)
    with pytest.raises(InputError):
        grid_from_csv(path)
