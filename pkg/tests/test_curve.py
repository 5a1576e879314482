"""Tests for curve assembly, support-function calculus, and zero-set sweeps."""

import dataclasses
import json
import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from minklab.cantor import CantorSpec, IntervalSet, build_cantor
from minklab.curve import (
    ConvexCurve,
    GaussZeroSet,
    SupportFn,
    angular_resolution_arc,
    assemble_curve,
    curvature_transfer_check,
    minkowski_sum,
    refinement_intervals,
    rotations_avoiding_zero_sets,
    write_curve_json,
    write_support_csv,
)
from minklab.errors import (
    ArgumentError,
    ConstructionError,
    HypothesisError,
    ValidationError,
)

TAU = 2.0 * math.pi
CELL = TAU / (1 << 16)


def circle_curve(n=64, radius=1.0, order=None, offset=0.0):
    """A regular n-gon sampled from a circle, with exact vertex normals."""
    th = np.arange(n) * (TAU / n) + offset
    pts = radius * np.column_stack([np.cos(th), np.sin(th)])
    return ConvexCurve(
        boundary=pts,
        gauss_angle=th,
        curvature=np.full(n, 1.0 / radius),
        flat_marks=np.array([], dtype=int),
        symmetry_order=order if order is not None else n,
    )


# ---------------------------------------------------------------------------
# ConvexCurve container and validation
# ---------------------------------------------------------------------------


def test_convex_curve_rejects_bad_shapes():
    pts = np.zeros((2, 2))
    with pytest.raises(ArgumentError):
        ConvexCurve(pts, np.zeros(2), np.zeros(2), np.array([], dtype=int), 1)
    tri = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]])
    with pytest.raises(ArgumentError):
        ConvexCurve(tri, np.zeros(2), np.zeros(3), np.array([], dtype=int), 1)
    with pytest.raises(ArgumentError):
        ConvexCurve(tri, np.zeros(3), np.zeros(3), np.array([], dtype=int), 0)


def test_circle_sample_turns_once_and_validates():
    c = circle_curve(64, radius=2.0)
    assert c.total_turning() == pytest.approx(TAU, abs=1e-12)
    assert c.symmetry_gap() < 1e-12
    c.validate()


def test_validate_rejects_nonconvex_polyline():
    pts = np.array([[0.0, 0.0], [2.0, 0.0], [2.0, 2.0], [1.0, 0.5]])
    c = ConvexCurve(
        pts, np.zeros(4), np.zeros(4), np.array([], dtype=int), 1
    )
    with pytest.raises(ValidationError, match="not convex"):
        c.validate()


def test_validate_rejects_macroscopic_flat_run():
    c = circle_curve(64, radius=2.0)
    marked = dataclasses.replace(c, flat_marks=np.array([3, 4, 5]))
    with pytest.raises(ValidationError, match="spans length"):
        marked.validate(straight_run_tol=1e-6, normal_sweep_tol=10.0)
    with pytest.raises(ValidationError, match="sweeps"):
        marked.validate(straight_run_tol=10.0, normal_sweep_tol=1e-9)
    # generous tolerances accept the same marks
    marked.validate(straight_run_tol=10.0, normal_sweep_tol=10.0)


def test_validate_rejects_broken_symmetry():
    c = circle_curve(32, radius=1.0, order=32)
    pts = c.boundary.copy()
    pts[0] *= 1.001
    bent = dataclasses.replace(c, boundary=pts)
    with pytest.raises(ValidationError, match="not invariant"):
        bent.validate()


def test_angular_resolution_arc_on_uniform_polygon():
    # normals centred in their cells: exactly one edge lands in each bin
    c = circle_curve(64, radius=1.0, offset=math.pi / 64)
    edge = 2.0 * math.sin(math.pi / 64)
    assert angular_resolution_arc(c, 64) == pytest.approx(edge, rel=1e-12)
    # at half the resolution every cell holds exactly two edges
    assert angular_resolution_arc(c, 32) == pytest.approx(2 * edge, rel=1e-12)
    with pytest.raises(ArgumentError):
        angular_resolution_arc(c, 4)


# ---------------------------------------------------------------------------
# GaussZeroSet
# ---------------------------------------------------------------------------


def points_set(values):
    return IntervalSet.from_pairs([(v, v) for v in sorted(values)])


def test_zero_set_validates_symmetric_quadruple():
    z = GaussZeroSet(
        Z=points_set([0.0, math.pi / 2, math.pi, 3 * math.pi / 2]),
        E=[0.0, math.pi],
    )
    z.validate(symmetry_order=4)


def test_zero_set_rejects_entry_outside():
    z = GaussZeroSet(Z=points_set([0.1, TAU - 0.1]), E=[0.15])
    with pytest.raises(ValidationError, match="outside"):
        z.validate()


def test_zero_set_rejects_broken_rotation_symmetry():
    z = GaussZeroSet(Z=points_set([0.1, TAU - 0.1]), E=[0.1])
    z.validate()  # mirror-symmetric pair is fine without an order
    with pytest.raises(ValidationError, match="rotation"):
        z.validate(symmetry_order=4)


def test_zero_set_rejects_broken_mirror_symmetry():
    z = GaussZeroSet(Z=points_set([0.1, 0.2]), E=[0.1])
    with pytest.raises(ValidationError, match="negation"):
        z.validate()


# ---------------------------------------------------------------------------
# refinement intervals
# ---------------------------------------------------------------------------


def test_refinement_intervals_two_levels_exact():
    out = refinement_intervals([0.1, 0.05], 0)
    assert out == [(0.0, pytest.approx(0.4)), (pytest.approx(0.4), pytest.approx(0.8))]
    out1 = refinement_intervals([0.1, 0.05], 1)
    lo = [a for a, _ in out1]
    hi = [b for _, b in out1]
    assert lo == pytest.approx([0.0, 0.3, 0.4, 0.7])
    assert hi == pytest.approx([0.1, 0.4, 0.5, 0.8])
    for bad in (-1, 2):
        with pytest.raises(ArgumentError):
            refinement_intervals([0.1, 0.05], bad)


def test_refinement_lengths_telescope(hinge_schedule):
    g = hinge_schedule.gamma_values
    arc = math.pi / hinge_schedule.n
    for q in range(len(g)):
        ivals = refinement_intervals(g, q)
        survived = sum(b - a for a, b in ivals)
        removed = sum(2.0 ** m * 2.0 * g[m - 1] for m in range(1, q + 1))
        assert survived + removed == pytest.approx(arc, abs=1e-12)
        assert len(ivals) == 2 ** (q + 1)


# ---------------------------------------------------------------------------
# assembly on the shared schedule
# ---------------------------------------------------------------------------


def test_assembled_turning_and_symmetry(assembled, hinge_schedule):
    curve, _ = assembled
    assert curve.symmetry_order == 2 * hinge_schedule.n
    assert abs(curve.total_turning() - TAU) < 1e-6
    assert curve.symmetry_gap() < 1e-9
    # 2n copies of (sum_m 2^m template vertex counts) minus shared junctions
    assert curve.boundary.shape[0] % curve.symmetry_order == 0


def test_assembled_normals_cover_circle_monotonically(assembled):
    curve, _ = assembled
    dg = np.diff(curve.gauss_angle)
    assert np.all(dg >= -1e-12)
    assert curve.gauss_angle[0] == 0.0
    assert curve.gauss_angle[-1] < TAU


def test_flat_marks_sit_on_zero_structure(assembled):
    """Curvature vanishes on the marked set and only near it.

    Every flat-marked vertex normal lies within one angular grid cell of a
    junction angle, and every junction angle has a marked vertex nearby, so
    the zero set of the curvature coincides with the removed-middle marks at
    the built depth.
    """
    curve, zset = assembled
    junctions = np.array(sorted({lo for lo, _ in zset.Z.as_floats()}))
    marked = curve.gauss_angle[curve.flat_marks]
    assert marked.size > 0

    def dist_to(points, targets):
        j = np.clip(np.searchsorted(targets, points), 1, targets.size - 1)
        return np.minimum(
            np.abs(points - targets[j - 1]), np.abs(points - targets[j])
        )

    assert float(np.max(dist_to(marked, junctions))) < CELL
    assert float(np.max(dist_to(junctions, np.sort(marked)))) < CELL
    # vertices angularly far from every junction carry positive curvature
    far = dist_to(curve.gauss_angle, junctions) > CELL
    kmax = float(np.max(curve.curvature))
    assert float(np.min(curve.curvature[far])) > 1e-8 * kmax


def test_zero_set_symmetries_and_entries(assembled):
    curve, zset = assembled
    zset.validate(symmetry_order=curve.symmetry_order)
    per_arc = len(zset.E) // curve.symmetry_order
    assert len(zset.E) == per_arc * curve.symmetry_order
    assert per_arc == 2 * (2 ** 5 - 1)  # two half-trees of 2^5 - 1 smoothings


def test_entries_dense_in_refinement(assembled, hinge_schedule):
    """Every surviving interval at every built depth contains an entry angle."""
    _, zset = assembled
    arc = math.pi / hinge_schedule.n
    e_arc = np.sort(np.unique(np.mod(zset.E, arc)))
    g = hinge_schedule.gamma_values
    for depth in range(len(g)):
        for lo, hi in refinement_intervals(g, depth):
            j = np.searchsorted(e_arc, lo - 1e-12)
            assert j < e_arc.size and e_arc[j] <= hi + 1e-12, (depth, lo, hi)


def test_norms_stay_capped_across_levels(assembled, hinge_schedule):
    """Uniform smoothness across levels: scheduled norms under their caps,
    and the assembled curvature bounded by the scheduled C^2 norms (rigid
    placement leaves curvature unchanged)."""
    curve, _ = assembled
    table = hinge_schedule.norm_table
    assert np.all(table <= hinge_schedule.caps[None, :] + 1e-12)
    assert float(np.max(curve.curvature)) <= float(np.max(table[:, 2]))


def test_stage_graphs_increase_pointwise(hinge_schedule):
    from minklab.curve import _build_templates, _check_stage_monotone, _footprints

    sms = hinge_schedule.smoothings[:3]
    templates = _build_templates(sms, 512)
    fp = _footprints(sms, 3)
    _check_stage_monotone(templates, 3, fp)
    # a smoothing sagging below its hinge interior must be caught
    bad = list(templates)
    t = bad[1]
    sag = 1e-3 * (1.0 - (t.x / t.sm.d) ** 2)
    bad[1] = dataclasses.replace(t, z=t.z - 1j * sag)
    with pytest.raises(ConstructionError, match="dips below"):
        _check_stage_monotone(bad, 3, fp)


def test_assemble_rejects_bad_arguments(hinge_profile, hinge_schedule):
    with pytest.raises(ArgumentError):
        assemble_curve(hinge_profile.f, hinge_schedule, m_max=0)
    with pytest.raises(ArgumentError):
        assemble_curve(hinge_profile.f, hinge_schedule, m_max=9)
    with pytest.raises(ArgumentError):
        assemble_curve(hinge_profile.f, [], m_max=None)
    with pytest.raises(ArgumentError):
        assemble_curve(hinge_profile.f, [1, 2, 3], m_max=2)


def test_assemble_rejects_unnormalized_schedule(hinge_profile, hinge_schedule):
    skewed = [
        dataclasses.replace(s, gamma=s.gamma * 1.01)
        for s in hinge_schedule.smoothings[:5]
    ]
    with pytest.raises(HypothesisError, match="pi/n"):
        assemble_curve(hinge_profile.f, skewed, m_max=5)


# ---------------------------------------------------------------------------
# support functions: constructors and calculus
# ---------------------------------------------------------------------------


def test_support_grid_must_be_uniform():
    n = 16
    th = SupportFn.grid(n).copy()
    ones = np.ones(n)
    SupportFn(th, ones, 0 * ones, 0 * ones, np.zeros(n, dtype=bool))
    th[3] += 1e-6
    with pytest.raises(ArgumentError):
        SupportFn(th, ones, 0 * ones, 0 * ones, np.zeros(n, dtype=bool))
    with pytest.raises(ArgumentError):
        SupportFn(SupportFn.grid(4), np.ones(4), np.zeros(4), np.zeros(4), np.zeros(4, dtype=bool))
    with pytest.raises(ArgumentError):
        SupportFn(SupportFn.grid(n), np.ones(n - 1), 0 * ones, 0 * ones, np.zeros(n, dtype=bool))


def test_disk_support_and_reconstruction():
    s = SupportFn.disk(1.5, center=(0.3, -0.2), grid_n=512)
    s.validate()
    assert np.allclose(s.rho(), 1.5, atol=1e-12)
    rec = s.reconstruct()
    rad = np.hypot(rec[:, 0] - 0.3, rec[:, 1] + 0.2)
    assert np.allclose(rad, 1.5, atol=1e-12)
    with pytest.raises(ArgumentError):
        SupportFn.disk(-1.0)


def test_ellipse_support_matches_implicit_equation():
    a, b = 2.0, 0.7
    s = SupportFn.ellipse(a, b, grid_n=1024)
    s.validate()
    rec = s.reconstruct()
    resid = (rec[:, 0] / a) ** 2 + (rec[:, 1] / b) ** 2 - 1.0
    assert float(np.max(np.abs(resid))) < 1e-12
    assert np.allclose(s.rho(), (a * b) ** 2 / s.h**3, atol=1e-12)


def test_polygon_support_touches_vertices():
    square = np.array([[1.0, 1.0], [-1.0, 1.0], [-1.0, -1.0], [1.0, -1.0]])
    s = SupportFn.from_polygon(square, grid_n=256)
    s.validate()
    assert np.allclose(s.rho(), 0.0, atol=1e-12)
    assert s.h[0] == pytest.approx(1.0)
    k = np.argmin(np.abs(s.theta - math.pi / 4))
    assert s.h[k] == pytest.approx(math.sqrt(2.0), abs=1e-3)
    rec = s.reconstruct()
    dists = np.min(np.linalg.norm(rec[:, None, :] - square[None], axis=2), axis=1)
    assert float(np.max(dists)) < 1e-9
    with pytest.raises(ArgumentError):
        SupportFn.from_polygon(square[:2])


# ---------------------------------------------------------------------------
# Minkowski sums
# ---------------------------------------------------------------------------


def test_disk_plus_disk_is_larger_disk():
    s = minkowski_sum(SupportFn.disk(1.0, grid_n=1024), SupportFn.disk(1.0, grid_n=1024))
    assert np.allclose(s.h, 2.0, atol=1e-12)
    assert np.allclose(s.rho(), 2.0, atol=1e-12)


def test_point_summand_translates():
    e = SupportFn.ellipse(2.0, 1.0, grid_n=512)
    p = SupportFn.point((0.4, -0.7), grid_n=512)
    s = minkowski_sum(e, p)
    shift = s.reconstruct() - e.reconstruct()
    assert np.allclose(shift, [0.4, -0.7], atol=1e-12)
    assert np.allclose(s.rho(), e.rho(), atol=1e-12)


def test_minkowski_sum_rejects_grid_mismatch():
    with pytest.raises(ArgumentError):
        minkowski_sum(SupportFn.disk(1.0, grid_n=256), SupportFn.disk(1.0, grid_n=512))


def test_ellipse_sum_matches_hull_oracle():
    """Support-route sum against a brute-force polygon-hull Minkowski sum."""
    from scipy.spatial import ConvexHull, cKDTree

    s = minkowski_sum(SupportFn.ellipse(2.0, 1.0), SupportFn.ellipse(1.0, 3.0))
    s.validate()
    t = np.arange(1200) * (TAU / 1200)
    p = np.column_stack([2.0 * np.cos(t), np.sin(t)])
    q = np.column_stack([np.cos(t), 3.0 * np.sin(t)])
    pairs = (p[:, None, :] + q[None, :, :]).reshape(-1, 2)
    hull = ConvexHull(pairs)
    hv = pairs[hull.vertices]
    seg = np.roll(hv, -1, axis=0) - hv
    frac = np.linspace(0.0, 1.0, 8, endpoint=False)
    dense = (hv[:, None, :] + frac[None, :, None] * seg[:, None, :]).reshape(-1, 2)

    rec = s.reconstruct()
    d_rec = float(np.max(cKDTree(dense).query(rec)[0]))
    d_hull = float(np.max(cKDTree(rec).query(dense)[0]))
    # inscribed-polygon sagitta + hull-edge and recon sampling spacing
    assert max(d_rec, d_hull) < 1.2e-3


@given(
    r1=st.floats(0.2, 3.0),
    r2=st.floats(0.2, 3.0),
    cx=st.floats(-1.0, 1.0),
    cy=st.floats(-1.0, 1.0),
)
def test_minkowski_commutes_and_adds_radii(r1, r2, cx, cy):
    a = SupportFn.disk(r1, center=(cx, cy), grid_n=256)
    b = SupportFn.disk(r2, grid_n=256)
    ab = minkowski_sum(a, b)
    ba = minkowski_sum(b, a)
    assert np.array_equal(ab.h, ba.h)
    assert np.allclose(ab.rho(), r1 + r2, atol=1e-12)


# ---------------------------------------------------------------------------
# assembled-curve support extraction
# ---------------------------------------------------------------------------


def test_from_curve_needs_atlas():
    with pytest.raises(ArgumentError, match="atlas"):
        SupportFn.from_curve(circle_curve(16))


def test_assembled_support_validates(support_first):
    support_first.validate()
    assert bool(support_first.flat[0])
    assert math.isinf(support_first.rho()[0])
    assert support_first.kappa()[0] == 0.0
    # the curve's quarter-turn junctions land exactly on the grid
    quarters = np.array([0.0, 0.25, 0.5, 0.75]) * TAU
    idx = np.round(quarters / CELL).astype(int)
    assert np.all(support_first.flat[idx])


def test_support_farthest_point_matches_polyline(assembled, support_first):
    curve, _ = assembled
    assert float(np.max(support_first.h)) == pytest.approx(
        float(np.max(np.hypot(*curve.boundary.T))), abs=1e-9
    )


def test_support_reconstruction_agrees_with_polyline(assembled, support_first):
    """Both routes to the boundary agree within the angular resolution floor."""
    from scipy.spatial import cKDTree

    curve, _ = assembled
    rec = support_first.reconstruct()
    floor = angular_resolution_arc(curve, support_first.theta.size)
    d_rec = float(np.max(cKDTree(curve.boundary).query(rec)[0]))
    d_poly = float(np.max(cKDTree(rec).query(curve.boundary)[0]))
    # reconstruction points always sit on the curve; polyline vertices can
    # be at most one hidden sub-cell stretch away from the nearest sample
    assert d_rec < 1e-3
    assert d_poly <= 0.75 * floor
    assert floor < 0.15


# ---------------------------------------------------------------------------
# curvature transfer
# ---------------------------------------------------------------------------


def test_two_circles_transfer_to_third_curvature():
    rep = curvature_transfer_check(
        SupportFn.disk(1.0, grid_n=4096),
        SupportFn.disk(2.0, grid_n=4096),
        np.linspace(0.0, TAU, 97),
    )
    assert rep.transfer_ok
    assert np.allclose(rep.kappa_sum, 1.0 / 3.0, atol=1e-12)
    assert rep.additive_gap < 1e-12
    assert rep.discrete_gap < 1e-6


def test_disk_plus_flat_body_goes_flat(support_first):
    """A positively curved summand cannot remove the other body's flats."""
    disk = SupportFn.disk(1.0, grid_n=support_first.theta.size)
    flats = support_first.theta[support_first.flat]
    generic = np.array([0.3, 1.1, 2.9])
    rep = curvature_transfer_check(disk, support_first, np.concatenate([flats, generic]))
    assert rep.transfer_ok
    assert np.all(rep.kappa_sum[: flats.size] == 0.0)
    assert np.all(rep.kappa_sum[flats.size :] > 0.0)
    assert rep.additive_gap < 1e-8


def test_transfer_requires_curved_first_body(support_first):
    disk = SupportFn.disk(1.0, grid_n=support_first.theta.size)
    with pytest.raises(HypothesisError, match="positive curvature"):
        curvature_transfer_check(support_first, disk, 0.0)


def test_transfer_snaps_angles_to_grid():
    a = SupportFn.disk(1.0, grid_n=512)
    b = SupportFn.disk(1.0, grid_n=512)
    rep = curvature_transfer_check(a, b, [0.1234])
    assert rep.theta[0] in a.theta


def test_curve_pair_shares_flat_sum_angle(support_first, support_second):
    """Summing the two assembled bodies keeps the shared junction flat."""
    s = minkowski_sum(support_first, support_second)
    assert bool(s.flat[0])
    assert s.kappa()[0] == 0.0
    fin = ~s.flat
    gap = np.abs(
        support_first.rho()[fin] + support_second.rho()[fin] - s.rho()[fin]
    )
    assert float(np.max(gap)) < 1e-8


# ---------------------------------------------------------------------------
# rotation sweeps over zero sets
# ---------------------------------------------------------------------------


def test_rotations_avoid_single_point_obstruction():
    za = points_set([0.25])
    zb = points_set([1.0])
    grid = np.array([0.25, 0.5, 0.75])
    out = rotations_avoiding_zero_sets(za, zb, grid)
    assert 0.75 not in out
    assert set(out.tolist()) == {0.25, 0.5}


def test_rotations_blocked_by_covering_cantor():
    # remaining ratio 1/3 per side on a base longer than pi: the difference
    # set covers the full circle, so no rotation avoids
    spec = CantorSpec((0, Fraction(22, 7)), tuple([Fraction(1, 3)] * 8))
    z = build_cantor(spec)
    grid = np.arange(512) * (TAU / 512)
    out = rotations_avoiding_zero_sets(z, z, grid)
    assert out.size == 0


def test_rotations_escape_thin_cantor():
    spec = CantorSpec((0, Fraction(22, 7)), tuple([Fraction(3, 5)] * 8))
    z = build_cantor(spec)
    grid = np.arange(512) * (TAU / 512)
    out = rotations_avoiding_zero_sets(z, z, grid)
    assert out.size > 0


def test_rotations_accept_zero_set_wrappers(assembled):
    _, zset = assembled
    grid = np.array([0.5 * CELL])  # between grid junctions: generic angle
    out = rotations_avoiding_zero_sets(zset, zset, grid)
    # point-like zero sets at finite depth: a generic rotation avoids
    assert out.size == 1


# ---------------------------------------------------------------------------
# exports
# ---------------------------------------------------------------------------


def test_write_curve_json_round_trip(tmp_path, assembled):
    curve, zset = assembled
    path = tmp_path / "curve.json"
    write_curve_json(path, curve, zset)
    data = json.loads(path.read_text())
    assert set(data) == {
        "symmetry_order",
        "vertices",
        "gauss_angle",
        "curvature",
        "flat_marks",
        "cantor_spec",
        "zero_set",
    }
    assert data["symmetry_order"] == curve.symmetry_order
    assert len(data["vertices"]) == curve.boundary.shape[0]
    assert len(data["zero_set"]["E"]) == len(zset.E)
    spec = data["cantor_spec"]
    assert spec["copies"] == curve.symmetry_order
    assert spec["depth"] == 5
    assert spec["removal_lengths"] == pytest.approx(
        (2.0 * curve.atlas.gammas).tolist()
    )


def test_write_support_csv_columns(tmp_path):
    s = SupportFn.disk(1.0, grid_n=16)
    path = tmp_path / "support.csv"
    write_support_csv(path, s)
    lines = path.read_text().strip().splitlines()
    assert lines[0] == "theta,h,dh,d2h"
    assert len(lines) == 17
    first = [float(v) for v in lines[1].split(",")]
    assert first == [0.0, 1.0, 0.0, 0.0]
