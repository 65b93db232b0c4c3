import math

import pytest

from ghlab.core.complexes import build_flat_torus, build_polygon_rp2
from ghlab.core.doubling import (
    global_doubling_profile,
    lemma21_packing_bound_check,
    local_doubling_check,
    packing_exponent,
    two_point_propagation_check,
)
from ghlab.core.errors import InputError
from ghlab.core.metric_core import FiniteMetricSpace, rescale
from ghlab.utils.generators import line_points, path_space


@pytest.fixture
def path40():
    return path_space(40)


def test_local_doubling_on_path(path40):
    cert = local_doubling_check(path40, 8.0)
    assert cert.radii == [2.0, 4.0, 8.0]
    assert cert.A0 == pytest.approx(3.0)
    assert cert.worst_witness[1] == 2.0
    assert cert.passed
    assert cert.counting_measure


def test_local_doubling_against_target(path40):
    assert not local_doubling_check(path40, 8.0, A0=2.5).passed
    assert local_doubling_check(path40, 8.0, A0=3.0).passed


def test_radius_grid_beyond_rho_rejected(path40):
    with pytest.raises(InputError):
        local_doubling_check(path40, 4.0, [2.0, 8.0])


def test_missing_measure_without_counting_default(path40):
    with pytest.raises(InputError):
        local_doubling_check(path40, 8.0, counting_default=False)


def test_propagation_passes_with_measured_constant(path40):
    verdict = two_point_propagation_check(path40, "p20", 10.0, 8.0)
    assert verdict.exponent == math.ceil(10.0 / (4.0 - 1.0))
    assert verdict.continuum_exponent == 3
    assert verdict.passed


def test_propagation_fails_with_too_small_constant(path40):
    verdict = two_point_propagation_check(path40, "p00", 10.0, 8.0, A0=1.0)
    assert not verdict.passed
    assert verdict.max_ratio == pytest.approx(7 / 4)


def test_propagation_needs_fine_resolution(path40):
    with pytest.raises(InputError):
        two_point_propagation_check(path40, "p00", 5.0, 2.0)


def test_packing_exponent():
    assert packing_exponent(8.0, 2.0) == 3
    assert packing_exponent(8.0, 1.0) == 4


def test_packing_bound_on_path(path40):
    verdict = lemma21_packing_bound_check(path40, "p20", 8.0, 2.0)
    assert verdict.N == 3
    assert verdict.A0 == pytest.approx(3.0)
    assert verdict.bound == pytest.approx(81.0)
    assert verdict.lower == verdict.upper == 3
    assert verdict.status == "PASS"
    assert verdict.passed


def test_packing_bound_fails_with_unit_constant(path40):
    verdict = lemma21_packing_bound_check(path40, "p20", 8.0, 2.0, A0=1.0)
    assert verdict.status == "FAIL"


def test_packing_bound_epsilon_limits(path40):
    with pytest.raises(InputError):
        lemma21_packing_bound_check(path40, "p20", 8.0, 4.0)
    with pytest.raises(InputError):
        lemma21_packing_bound_check(path40, "p20", 8.0, 0.5)


def test_weighted_measure_changes_the_constant():
    D = [[0, 1, 2], [1, 0, 1], [2, 1, 0]]
    space = FiniteMetricSpace("w", ("a", "b", "c"), D, measure={"a": 1.0, "b": 1.0, "c": 10.0})
    cert = local_doubling_check(space, 2.0, [2.0])
    assert cert.A0 == pytest.approx(12.0)
    assert not cert.counting_measure


def test_global_profile_on_path(path40):
    profile = global_doubling_profile(path40, 8.0, sample_size=8)
    assert profile.passed
    assert profile.monotone
    assert profile.radii[-1] == path40.diameter()
    assert "p00" in profile.sampled_centers


def test_propagation_from_path_endpoint(path40):
    verdict = two_point_propagation_check(path40, "p00", 10.0, 4.0)
    assert verdict.exponent == 10
    assert verdict.A0 == pytest.approx(7 / 3)
    assert verdict.passed


def test_packing_bound_at_unit_scale(path40):
    verdict = lemma21_packing_bound_check(path40, "p20", 4.0, 1.0)
    assert verdict.N == 3
    assert verdict.A0 == pytest.approx(3.0)
    assert verdict.bound == pytest.approx(81.0)
    assert verdict.exact
    assert verdict.lower == verdict.upper == 3
    assert verdict.witness == ["p19", "p20", "p21"]
    assert verdict.status == "PASS"


def test_packing_bound_rejects_missing_epsilon(path40):
    with pytest.raises(InputError):
        lemma21_packing_bound_check(path40, "p20", 4.0, None)
    with pytest.raises(InputError):
        lemma21_packing_bound_check(path40, "p20", 4.0, -1.0)


@pytest.mark.parametrize("n", [4, 6, 8])
def test_dyadic_grid_on_unit_interval(n):
    cert = local_doubling_check(line_points(2 ** n), 0.5, [0.5, 0.25, 0.125])
    assert cert.passed
    assert 1.0 <= cert.A0 <= 3.0


def test_single_point_has_unit_constant():
    point = FiniteMetricSpace("one", ("a",), [[0.0]])
    assert local_doubling_check(point, 1.0).A0 == 1.0
    assert two_point_propagation_check(point, "a", 0.0, 1.0).passed


@pytest.mark.parametrize("factor", [0.5, 4.0])
def test_verdicts_are_scale_covariant(path40, factor):
    scaled = rescale(path40, factor)

    local, local_s = local_doubling_check(path40, 8.0), local_doubling_check(scaled, 8.0 * factor)
    assert local_s.A0 == pytest.approx(local.A0)
    assert local_s.radii == [r * factor for r in local.radii]
    assert local_s.worst_witness[0] == local.worst_witness[0]

    prop = two_point_propagation_check(path40, "p00", 10.0, 8.0)
    prop_s = two_point_propagation_check(scaled, "p00", 10.0 * factor, 8.0 * factor)
    assert (prop_s.exponent, prop_s.passed, prop_s.worst_point) == (prop.exponent, prop.passed, prop.worst_point)
    assert prop_s.max_ratio == pytest.approx(prop.max_ratio)

    bound = lemma21_packing_bound_check(path40, "p20", 8.0, 2.0)
    bound_s = lemma21_packing_bound_check(scaled, "p20", 8.0 * factor, 2.0 * factor)
    assert (bound_s.N, bound_s.lower, bound_s.upper, bound_s.status) == (bound.N, bound.lower, bound.upper,
                                                                         bound.status)
    assert bound_s.witness == bound.witness

    profile = global_doubling_profile(path40, 8.0, sample_size=8)
    profile_s = global_doubling_profile(scaled, 8.0 * factor, sample_size=8)
    assert profile_s.C == profile.C
    assert profile_s.exponents == profile.exponents
    assert profile_s.A == pytest.approx(profile.A)
    assert profile_s.passed == profile.passed


def _spread(space, count):
    step = max(1, space.n // count)
    return list(space.points[::step][:count])


def _acceptance_spaces():
    torus = build_flat_torus(1.0, 1.0, shape=(33, 33))[1]
    rp2 = build_polygon_rp2(3, 0.05)[1]
    return [
        (path_space(40), 4.0, 10.0, "p00", (1.0,)),
        (torus, 0.4, 1.0, "t000_000", (0.1, 0.05)),
        (rp2, 0.8, 1.6, "o", (0.2, 0.1)),
    ]


@pytest.mark.slow
def test_propagation_and_packing_bound_on_acceptance_spaces():
    for space, rho, R, x, epsilons in _acceptance_spaces():
        local = local_doubling_check(space, rho)
        assert local.passed, space.id
        for center in [x] + _spread(space, 8):
            verdict = two_point_propagation_check(space, center, R, rho, local.A0)
            assert verdict.passed, (space.id, center)
        for eps in epsilons:
            assert eps >= space.resolution, (space.id, eps)
            bound = lemma21_packing_bound_check(space, x, rho, eps)
            assert bound.status != "FAIL", (space.id, eps)


@pytest.mark.slow
def test_global_profile_up_to_torus_diameter():
    torus = build_flat_torus(1.0, 1.0, shape=(33, 33))[1]
    profile = global_doubling_profile(torus, 0.4, sample_size=16)
    assert profile.radii[-1] == pytest.approx(torus.diameter())
    assert profile.passed
    assert profile.monotone
