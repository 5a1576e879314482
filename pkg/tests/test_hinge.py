"""Tests for the hinge-smoothing construction and its schedule."""

import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from minklab.errors import (
    ArgumentError,
    ConstructionError,
    HypothesisError,
    ValidationError,
)
from minklab.fn_core import SmoothFn
from minklab.hinge import (
    Hinge,
    build_smoothing,
    place_profiles,
    schedule_smoothings,
    solve_b_eps,
    solve_epsilon,
    transport_series,
    write_smoothing_json,
)
from minklab.patching import check_pliable

EXPECTED_CERTIFICATES = {
    "window_weight_positive",
    "window_weight_upper",
    "window_weight_coarse_upper",
    "left_curvature_mass",
    "right_curvature_mass",
    "left_side_slope_negative",
    "right_side_slope_positive",
    "entry_slope",
    "exit_slope",
    "endpoint_curvature_zero",
    "curvature_nonnegative",
    "midpoint_curvature",
    "interior_curvature_positive",
    "slope_bound",
    "value_bound",
    "left_endpoint_match",
    "right_endpoint_constant_gap",
    "windows_have_no_common_zero",
    "hinge_side_sum",
}


@pytest.fixture(scope="module")
def quartic():
    return SmoothFn.polynomial(
        [0.0, 0.0, 0.0, 0.0, 0.25], (0.0, 1.0), max_order=8, name="quartic"
    )


@pytest.fixture(scope="module")
def quartic_sr(quartic):
    return build_smoothing(quartic, 0.2, 1e-3)


@pytest.fixture(scope="module")
def profile_sr(hinge_profile):
    return build_smoothing(hinge_profile.f, 0.02205, 9.5e-6)


def slope_at(f, x: float) -> float:
    return float(f.jet(np.array([float(x)]), 1)[1][0])


class TestHingeType:
    def test_rejects_nonpositive_sides(self):
        with pytest.raises(ValidationError):
            Hinge(l=0.0, r=1.0, alpha=1.0, apex=0j, u=-1 + 0j, v=1 + 0j)

    def test_rejects_degenerate_angle(self):
        with pytest.raises(ValidationError):
            Hinge(l=1.0, r=1.0, alpha=math.pi, apex=0j, u=-1 + 0j, v=1 + 0j)

    def test_certificate_lookup_unknown_name(self, quartic_sr):
        with pytest.raises(ArgumentError):
            quartic_sr.certificate("no_such_certificate")


class TestPlaceProfiles:
    def test_mirror_identity_is_exact(self, quartic):
        f_u, f_v = place_profiles(quartic, 0.2, 1e-3)
        ts = np.linspace(-0.19, 0.19, 41)
        np.testing.assert_array_equal(f_v.eval(-ts), f_u.eval(ts))

    def test_endpoint_slopes(self, quartic):
        d, gamma = 0.2, 1e-3
        f_u, f_v = place_profiles(quartic, d, gamma)
        tan_g = math.tan(gamma)
        assert abs(slope_at(f_u, -d) + tan_g) <= 1e-12
        assert abs(slope_at(f_v, d) - tan_g) <= 1e-12

    def test_endpoint_value_closed_form(self, quartic):
        # the flat tangency point rotates onto (-d, d * tan(gamma))
        d, gamma = 0.2, 1e-3
        f_u, _ = place_profiles(quartic, d, gamma)
        assert f_u.eval(-d) == pytest.approx(d * math.tan(gamma), abs=1e-15)

    def test_degenerate_angle_rejected(self, quartic):
        with pytest.raises(ArgumentError, match="genuine hinge"):
            place_profiles(quartic, 0.2, 0.0)

    def test_large_angle_rejected(self, quartic):
        with pytest.raises(HypothesisError):
            place_profiles(quartic, 0.2, 1.1)

    def test_wide_hinge_rejected(self, quartic):
        with pytest.raises(HypothesisError, match="below the profile domain"):
            place_profiles(quartic, 0.25, 1e-3)

    def test_profile_domain_must_start_at_zero(self):
        shifted = SmoothFn.polynomial([0.0, 0.0, 1.0], (0.5, 1.0), max_order=6)
        with pytest.raises(ArgumentError, match="start at 0"):
            place_profiles(shifted, 0.1, 1e-3)

    def test_nonpositive_halfwidth_rejected(self, quartic):
        with pytest.raises(ArgumentError):
            place_profiles(quartic, -0.1, 1e-3)


class TestSolveEpsilon:
    def test_quartic_closed_form(self, quartic):
        # slope x**3 equals tan(gamma) at 4*eps, so eps = tan(gamma)**(1/3)/4
        for gamma in (1e-3, 1e-2, 0.1):
            eps = solve_epsilon(quartic, gamma)
            assert eps == pytest.approx(math.tan(gamma) ** (1.0 / 3.0) / 4.0, rel=1e-12)

    def test_slope_residual(self, quartic):
        gamma = 1e-3
        eps = solve_epsilon(quartic, gamma)
        assert abs(slope_at(quartic, 4.0 * eps) - math.tan(gamma)) < 1e-12

    def test_monotone_in_gamma(self, quartic):
        assert solve_epsilon(quartic, 2e-3) > solve_epsilon(quartic, 1e-3)

    def test_angle_outside_slope_range(self, quartic):
        # top slope of the quartic profile is 1.0 < tan(0.8)
        with pytest.raises(HypothesisError, match="slope range"):
            solve_epsilon(quartic, 0.8)

    def test_nonpositive_gamma_rejected(self, quartic):
        with pytest.raises(ArgumentError):
            solve_epsilon(quartic, 0.0)


class TestSolveBEps:
    def test_positive_and_bounded(self, quartic):
        d, gamma = 0.2, 1e-3
        f_u, f_v = place_profiles(quartic, d, gamma)
        eps = solve_epsilon(quartic, gamma)
        b = solve_b_eps(f_u, f_v, eps, d)
        tan_g = slope_at(f_v, d)
        assert b > 0.0
        assert b <= tan_g / (d - 2.0 * eps)
        assert b < 2.0 * tan_g / d

    def test_window_too_wide_rejected(self, quartic):
        d, gamma = 0.2, 1e-3
        f_u, f_v = place_profiles(quartic, d, gamma)
        with pytest.raises(HypothesisError, match="4\\*eps"):
            solve_b_eps(f_u, f_v, d / 3.0, d)


class TestQuarticBuild:
    def test_all_certificates_pass(self, quartic_sr):
        assert {c.name for c in quartic_sr.certificates} == EXPECTED_CERTIFICATES
        assert all(c.passed for c in quartic_sr.certificates)

    def test_entry_and_exit_slopes(self, quartic_sr):
        tan_g = math.tan(quartic_sr.gamma)
        tol = 1e-12 * (1.0 + tan_g)
        d = quartic_sr.d
        assert abs(slope_at(quartic_sr.F, -d) + tan_g) <= tol
        assert abs(slope_at(quartic_sr.F, d) - tan_g) <= tol

    def test_exit_slope_matches_right_profile(self, quartic_sr):
        # the linear solve for the window weight has this as its residual
        d = quartic_sr.d
        gap = slope_at(quartic_sr.F, d) - slope_at(quartic_sr.f_v, d)
        assert abs(gap) <= 1e-12 * (1.0 + math.tan(quartic_sr.gamma))

    def test_endpoint_curvature_exactly_zero(self, quartic_sr):
        assert quartic_sr.certificate("endpoint_curvature_zero").measured == 0.0

    def test_curvature_positive_inside(self, quartic_sr):
        d = quartic_sr.d
        xs = np.linspace(-0.999 * d, 0.999 * d, 2001)
        assert np.all(quartic_sr.F.jet(xs, 2)[2] > 0.0)

    def test_plateau_curvature_equals_window_weight(self, quartic_sr):
        mid = float(quartic_sr.F.jet(np.array([0.0]), 2)[2][0])
        assert mid == quartic_sr.b_eps

    def test_left_endpoint_interpolation(self, quartic_sr):
        d, eps = quartic_sr.d, quartic_sr.epsilon
        xs = np.linspace(-d, -d + eps, 257)
        gap = np.max(np.abs(quartic_sr.F.eval(xs) - quartic_sr.f_u.eval(xs)))
        assert gap <= 1e-10

    def test_right_endpoint_constant_gap(self, quartic_sr):
        d, eps = quartic_sr.d, quartic_sr.epsilon
        xs = np.linspace(d - eps, d, 257)
        diff = quartic_sr.F.eval(xs) - quartic_sr.f_v.eval(xs)
        assert float(diff.max() - diff.min()) <= 1e-10

    def test_slope_and_value_bounds(self, quartic_sr):
        tan_g = math.tan(quartic_sr.gamma)
        d = quartic_sr.d
        xs = np.linspace(-d, d, 2001)
        rows = quartic_sr.F.jet(xs, 1)
        assert np.max(np.abs(rows[1])) < 7.0 * tan_g
        assert np.max(np.abs(rows[0])) <= 3.0 * d * tan_g

    def test_symmetric_input_gives_even_smoothing(self, quartic_sr):
        d = quartic_sr.d
        xs = np.linspace(0.0, d, 801)
        gap = np.max(np.abs(quartic_sr.F.eval(xs) - quartic_sr.F.eval(-xs)))
        assert gap <= 1e-14

    def test_induced_hinge_geometry(self, quartic_sr):
        d, gamma = quartic_sr.d, quartic_sr.gamma
        h = quartic_sr.hinge_out
        assert abs(h.apex) <= 1e-12
        assert h.l + h.r == pytest.approx(2.0 * d / math.cos(gamma), rel=1e-12)
        assert h.alpha == pytest.approx(math.pi - 2.0 * gamma, abs=1e-12)
        assert h.l + h.r <= 4.0 * d / math.cos(gamma)

    def test_build_is_deterministic(self, quartic, quartic_sr):
        again = build_smoothing(quartic, quartic_sr.d, quartic_sr.gamma)
        assert again.epsilon == quartic_sr.epsilon
        assert again.b_eps == quartic_sr.b_eps

    def test_angle_too_large_for_halfwidth(self, quartic):
        # eps(1e-2) = tan(1e-2)**(1/3)/4 makes 4*eps exceed d = 0.2
        with pytest.raises(HypothesisError, match="not small enough"):
            build_smoothing(quartic, 0.2, 1e-2)


class TestGluedProfileBuild:
    def test_all_certificates_pass(self, profile_sr):
        assert {c.name for c in profile_sr.certificates} == EXPECTED_CERTIFICATES
        assert all(c.passed for c in profile_sr.certificates)

    def test_plateau_curvature_equals_window_weight(self, profile_sr):
        mid = float(profile_sr.F.jet(np.array([0.0]), 2)[2][0])
        assert mid == profile_sr.b_eps

    def test_interior_positive_outside_flat_collar(self, profile_sr):
        cert = profile_sr.certificate("interior_curvature_positive")
        assert cert.measured > 0.0

    def test_even_smoothing(self, profile_sr):
        d = profile_sr.d
        xs = np.linspace(0.0, d, 513)
        gap = np.max(np.abs(profile_sr.F.eval(xs) - profile_sr.F.eval(-xs)))
        assert gap <= 1e-14

    def test_apex_angle_relation(self, profile_sr):
        expected = math.pi - 2.0 * profile_sr.gamma
        assert profile_sr.hinge_out.alpha == pytest.approx(expected, abs=1e-9)


class TestTransportSeries:
    def test_base_point_lands_on_left_endpoint(self, hinge_profile):
        d, gamma = 0.02205, 9.5e-6
        ts = transport_series(hinge_profile.series, hinge_profile.f, d, gamma)
        assert ts.base_point == pytest.approx(-d, abs=1e-15)

    def test_structure_survives(self, hinge_profile):
        d, gamma = 0.02205, 9.5e-6
        ps = hinge_profile.series
        ts = transport_series(ps, hinge_profile.f, d, gamma)
        np.testing.assert_array_equal(ts.coeffs, ps.coeffs)
        np.testing.assert_array_equal(ts.indices, ps.indices)
        assert ts.supports.shape == ps.supports.shape
        assert np.all(ts.supports > ts.base_point)
        # same support ordering as the original (the placement map is increasing)
        np.testing.assert_array_equal(
            np.sign(np.diff(ts.supports[:, 0])), np.sign(np.diff(ps.supports[:, 0]))
        )

    def test_weighted_sum_reproduces_rotated_curvature(self, hinge_profile):
        d, gamma = 0.02205, 9.5e-6
        ts = transport_series(hinge_profile.series, hinge_profile.f, d, gamma)
        f_u, _ = place_profiles(hinge_profile.f, d, gamma)
        for j in (0, 4, len(ts.pieces) - 1):
            slo, shi = ts.supports[j]
            ys = np.linspace(slo, shi, 37)[1:-1]
            total = np.zeros_like(ys)
            for c, p, (plo, phi) in zip(ts.coeffs, ts.pieces, ts.supports):
                m = (ys > plo) & (ys < phi)
                if m.any():
                    total[m] += c * p.jet(ys[m], 0)[0]
            ref = f_u.jet(ys, 2)[2]
            scale = np.max(np.abs(ref))
            assert np.max(np.abs(total - ref)) <= 1e-8 * scale

    def test_transported_series_is_pliable(self, hinge_profile):
        d, gamma = 0.02205, 9.5e-6
        ts = transport_series(hinge_profile.series, hinge_profile.f, d, gamma)
        report = check_pliable(ts, 2, np.array([1e-4, 1e-6, 1e-9]))
        assert report.ok
        assert report.violations == []

    def test_pliability_statistics_unchanged(self, hinge_profile):
        d, gamma = 0.02205, 9.5e-6
        ps = hinge_profile.series
        ts = transport_series(ps, hinge_profile.f, d, gamma)
        eps_grid = np.array([1e-4, 1e-6, 1e-9])
        before = check_pliable(ps, 2, eps_grid)
        after = check_pliable(ts, 2, eps_grid)
        assert after.decay_quadratic == before.decay_quadratic
        assert after.accumulation_constant == before.accumulation_constant

    def test_degenerate_angle_rejected(self, hinge_profile):
        with pytest.raises(ArgumentError):
            transport_series(hinge_profile.series, hinge_profile.f, 0.02, 0.0)


class TestSchedule:
    def test_turning_angle_is_exact_fraction_of_pi(self, hinge_schedule):
        hs = hinge_schedule
        assert hs.n == 29
        assert hs.turning_sum == pytest.approx(math.pi / hs.n, abs=1e-12)
        weights = 2.0 ** np.arange(2, len(hs.smoothings) + 2)
        assert float(weights @ hs.gamma_values) == pytest.approx(
            math.pi / hs.n, abs=1e-12
        )

    def test_halfwidths_follow_configured_decay(self, hinge_schedule):
        expected = 0.18 * 0.35 ** np.arange(1, 6)
        np.testing.assert_allclose(hinge_schedule.d_values, expected, rtol=0.0)

    def test_angles_frozen(self, hinge_schedule):
        expected = np.array(
            [2.69579661e-02, 9.50304012e-06, 7.66424795e-06, 5.64161423e-06, 1.87082531e-06]
        )
        np.testing.assert_allclose(hinge_schedule.gamma_values, expected, rtol=1e-6)

    def test_norms_uniformly_capped(self, hinge_schedule):
        hs = hinge_schedule
        assert np.all(hs.norm_table <= hs.caps)
        # the cap is anchored at twice the first build's norms
        np.testing.assert_allclose(hs.norm_table[0], hs.caps / 2.0, rtol=5e-2)

    def test_weighted_side_sums_decrease(self, hinge_schedule):
        sums = np.array(
            [
                2.0 ** (m + 1) * (s.hinge_out.l + s.hinge_out.r)
                for m, s in enumerate(hinge_schedule.smoothings)
            ]
        )
        assert np.all(np.diff(sums) < 0.0)
        assert sums[0] == pytest.approx(0.2521, rel=1e-3)
        assert sums[-1] == pytest.approx(0.0605, rel=1e-3)

    def test_apex_angles_approach_straight(self, hinge_schedule):
        for sr in hinge_schedule.smoothings:
            gap = math.pi - sr.hinge_out.alpha
            assert gap == pytest.approx(2.0 * sr.gamma, rel=1e-6, abs=1e-12)

    def test_every_build_certified(self, hinge_schedule):
        for sr in hinge_schedule.smoothings:
            assert all(c.passed for c in sr.certificates)

    def test_bad_arguments(self, hinge_profile):
        with pytest.raises(ArgumentError):
            schedule_smoothings(hinge_profile.f, 0)
        with pytest.raises(ArgumentError, match="d_ratio"):
            schedule_smoothings(hinge_profile.f, 2, d_ratio=0.5)
        with pytest.raises(HypothesisError):
            schedule_smoothings(hinge_profile.f, 2, d0=0.6)


class TestJsonExport:
    def test_round_trip(self, quartic_sr, tmp_path):
        path = tmp_path / "smoothing.json"
        write_smoothing_json(path, quartic_sr)
        payload = json.loads(path.read_text())
        assert payload["parameters"]["d"] == quartic_sr.d
        assert payload["parameters"]["epsilon"] == quartic_sr.epsilon
        assert payload["parameters"]["b_eps"] == quartic_sr.b_eps
        assert payload["hinge"]["l"] == quartic_sr.hinge_out.l
        names = {c["name"] for c in payload["certificates"]}
        assert names == EXPECTED_CERTIFICATES
        assert all(c["pass"] for c in payload["certificates"])
        grid = payload["grid"]
        assert len(grid["x"]) == len(grid["value"]) == len(grid["curvature"]) == 513
        assert grid["curvature"][0] == 0.0
        assert grid["curvature"][-1] == 0.0


class TestBuildProperty:
    @given(
        gamma=st.floats(min_value=2e-4, max_value=3e-3),
        d=st.floats(min_value=0.15, max_value=0.22),
    )
    @settings(max_examples=8, deadline=None)
    def test_certificates_hold_across_parameters(self, quartic, gamma, d):
        sr = build_smoothing(quartic, d, gamma)
        assert all(c.passed for c in sr.certificates)
        tan_g = math.tan(gamma)
        assert abs(slope_at(sr.F, d) - tan_g) <= 1e-12 * (1.0 + tan_g)
