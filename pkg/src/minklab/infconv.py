"""Infimal convolution of one-dimensional convex functions, two ways.

Given convex ``f`` and ``g`` on compact intervals, the infimal convolution
``h(x) = inf_y f(y) + g(x - y)`` is computed by two independent routes:

* :func:`infconv_direct` minimizes the split objective per output point
  (coarse scan plus golden-section refinement).  The result carries an
  on-demand :class:`~minklab.fn_core.SmoothFn` whose higher derivatives
  come from a truncated-Taylor solve of the stationarity condition
  ``f'(mu(x)) = g'(x - mu(x))``, so the smoothness of ``h`` can be probed
  wherever the minimizer is interior and the matched curvature sum is
  positive.
* :func:`infconv_conjugate` forms the *exact* Legendre transforms of the
  piecewise-linear interpolants of ``f`` and ``g`` (breakpoints at the
  chord slopes — no slope grid), adds them, and transforms back.  Up to
  rounding this equals the exact infimal convolution of the interpolants,
  so the distance from the true ``h`` is controlled by the interpolation
  errors ``dx^2 * max f'' / 8`` alone.

Shared diagnostics: :func:`minimizer_map` inverts the stationarity
condition by vectorized bisection, and :func:`smoothness_diag` reports
the curvature split ``j = g''/(f'' + g'')`` together with the transferred
curvature ``h'' = f'' * j``.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np

from . import jets
from .errors import (
    ArgumentError,
    CapabilityError,
    DegenerateHessianError,
    RootBracketError,
    ValidationError,
)
from .fn_core import SmoothFn, _as_interval, invert_monotone

__all__ = [
    "InfConvResult",
    "SmoothnessDiag",
    "check_convexity",
    "infconv_direct",
    "infconv_conjugate",
    "minimizer_map",
    "smoothness_diag",
    "write_infconv_csv",
]

_TINY = np.finfo(float).tiny
_INVPHI = 0.5 * (math.sqrt(5.0) - 1.0)


# ---------------------------------------------------------------------------
# validation and geometry helpers
# ---------------------------------------------------------------------------


def check_convexity(fn: SmoothFn, *, grid_n: int = 2049, tol: float = 1e-9) -> None:
    """Raise :class:`ValidationError` unless ``fn`` looks convex on a grid.

    The test is on discrete second differences, so concavity smaller than
    ``tol * scale / dx^2`` cannot be detected; it is a guard against passing
    outright non-convex inputs, not a proof.
    """
    xs = np.linspace(fn.domain[0], fn.domain[1], grid_n)
    vals = fn.eval(xs)
    second = vals[2:] - 2.0 * vals[1:-1] + vals[:-2]
    scale = 1.0 + float(np.max(np.abs(vals)))
    worst = float(np.min(second)) if second.size else 0.0
    if worst < -tol * scale:
        raise ValidationError(
            f"{fn.name or 'input'} fails discrete convexity: min second "
            f"difference {worst:.3e} over {grid_n} nodes on {fn.domain}"
        )


def _windows(f: SmoothFn, g: SmoothFn, xs: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Feasible minimizer window ``[ylo, yhi]`` for each output point."""
    lo_sum = f.domain[0] + g.domain[0]
    hi_sum = f.domain[1] + g.domain[1]
    slack = 1e-9 * (1.0 + abs(lo_sum) + abs(hi_sum))
    if xs.size and (xs.min() < lo_sum - slack or xs.max() > hi_sum + slack):
        raise ArgumentError(
            f"requested points exceed the sum of the domains "
            f"[{lo_sum!r}, {hi_sum!r}]"
        )
    ylo = np.maximum(f.domain[0], xs - g.domain[1])
    yhi = np.minimum(f.domain[1], xs - g.domain[0])
    # Rounding at the extreme ends can invert the window by an ulp; collapse
    # such windows to a feasible point.
    bad = ylo > yhi
    if np.any(bad):
        mid = np.clip(0.5 * (ylo + yhi), f.domain[0], f.domain[1])
        ylo = np.where(bad, mid, ylo)
        yhi = np.where(bad, mid, yhi)
    return ylo, yhi


# ---------------------------------------------------------------------------
# results
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class InfConvResult:
    """Sampled infimal convolution plus a function-object view of it.

    ``boundary[i]`` is True where the minimizer was (numerically) pinned to
    an end of its feasible window, i.e. where the unconstrained optimality
    condition need not hold.
    """

    route: str
    x: np.ndarray
    values: np.ndarray
    mu: np.ndarray
    boundary: np.ndarray
    h: SmoothFn
    error_bound: float | None = field(default=None)


@dataclass(frozen=True)
class SmoothnessDiag:
    """Curvature bookkeeping of the infimal convolution at sample points."""

    x: np.ndarray
    mu: np.ndarray
    hess_f: np.ndarray
    hess_g: np.ndarray
    hess_h: np.ndarray
    j_mu: np.ndarray


# ---------------------------------------------------------------------------
# minimizer map and curvature diagnostics
# ---------------------------------------------------------------------------


def minimizer_map(f: SmoothFn, g: SmoothFn, x, *, residual_tol: float = 1e-9) -> np.ndarray:
    """Solve ``f'(mu) = g'(x - mu)`` for each ``x``, vectorized.

    The slope mismatch ``y -> f'(y) - g'(x - y)`` is nondecreasing for
    convex inputs, so bisection applies.  Raises
    :class:`~minklab.errors.RootBracketError` when some ``x`` has no sign
    change (minimizer pinned to the window edge) or when the residual stays
    above ``residual_tol`` relative to the matched slope scale.
    """
    xs = np.atleast_1d(np.asarray(x, dtype=float))
    scalar = np.ndim(x) == 0
    ylo, yhi = _windows(f, g, xs)

    def slope_gap(y):
        return f.jet(y, 1)[1] - g.jet(xs - y, 1)[1]

    have_second = f.max_order >= 2 and g.max_order >= 2
    dfn = None
    if have_second:
        def dfn(y):
            return f.jet(y, 2)[2] + g.jet(xs - y, 2)[2]

    mu = invert_monotone(
        slope_gap,
        dfn,
        np.zeros(xs.shape),
        ylo,
        yhi,
        bisect_iters=64,
        newton_iters=4 if have_second else 0,
    )
    resid = np.abs(slope_gap(mu))
    scale = 1.0 + np.abs(f.jet(mu, 1)[1])
    if np.any(resid > residual_tol * scale):
        worst = int(np.argmax(resid / scale))
        raise RootBracketError(
            f"stationarity residual {resid[worst]:.3e} at x={xs[worst]!r} "
            f"exceeds tolerance {residual_tol:g}"
        )
    return float(mu[0]) if scalar else mu


def smoothness_diag(f: SmoothFn, g: SmoothFn, x, *, mu=None) -> SmoothnessDiag:
    """Report ``f''``, ``g''``, the split ratio and ``h''`` at matched pairs.

    The split ratio ``j = g''/(f'' + g'')`` is the derivative of the
    minimizer map, and ``h'' = f'' * j = g'' * (1 - j)``.  Raises
    :class:`~minklab.errors.DegenerateHessianError` where the curvature sum
    vanishes (the formula degenerates there).
    """
    xs = np.atleast_1d(np.asarray(x, dtype=float))
    if mu is None:
        mus = np.atleast_1d(minimizer_map(f, g, xs))
    else:
        mus = np.atleast_1d(np.asarray(mu, dtype=float))
    hf = f.jet(mus, 2)[2]
    hg = g.jet(xs - mus, 2)[2]
    total = hf + hg
    if np.any(total < _TINY):
        bad = np.where(total < _TINY)[0]
        raise DegenerateHessianError(
            f"curvature sum vanishes at {bad.size} point(s); first at "
            f"x={xs[bad[0]]!r} (f''={hf[bad[0]]!r}, g''={hg[bad[0]]!r})"
        )
    j = hg / total
    return SmoothnessDiag(x=xs, mu=mus, hess_f=hf, hess_g=hg, hess_h=hf * j, j_mu=j)


# ---------------------------------------------------------------------------
# direct route
# ---------------------------------------------------------------------------


def _direct_minimize(f, g, xs, scan_n, refine_iters):
    ylo, yhi = _windows(f, g, xs)
    width = yhi - ylo
    t = np.linspace(0.0, 1.0, scan_n)[:, None]
    grid = ylo[None, :] + t * width[None, :]
    obj = f.eval(grid.ravel()).reshape(grid.shape)
    obj += g.eval((xs[None, :] - grid).ravel()).reshape(grid.shape)
    best = np.argmin(obj, axis=0)
    cols = np.arange(xs.size)
    a = grid[np.maximum(best - 1, 0), cols]
    b = grid[np.minimum(best + 1, scan_n - 1), cols]
    for _ in range(refine_iters):
        d = b - a
        c1 = b - _INVPHI * d
        c2 = a + _INVPHI * d
        v1 = f.eval(c1) + g.eval(xs - c1)
        v2 = f.eval(c2) + g.eval(xs - c2)
        take = v1 < v2
        b = np.where(take, c2, b)
        a = np.where(take, a, c1)
    mu = 0.5 * (a + b)
    vals = f.eval(mu) + g.eval(xs - mu)
    edge = 1e-7 * width + _TINY
    boundary = (mu - ylo <= edge) | (yhi - mu <= edge)
    return vals, mu, boundary


def _mu_taylor(xs, mu0, f_derivs, g_derivs, order):
    """Taylor rows of the minimizer map about each ``x``.

    Solves the stationarity condition order by order: with the rows below
    ``k`` fixed, the row-``k`` residual is linear in the unknown with
    coefficient ``f''(mu) + g''(x - mu)``.
    """
    fc = jets.derivs_to_jet(f_derivs)
    gc = jets.derivs_to_jet(g_derivs)
    total = f_derivs[2] + g_derivs[2]
    if np.any(total < _TINY):
        bad = np.where(total < _TINY)[0]
        raise DegenerateHessianError(
            f"curvature sum vanishes at {bad.size} point(s); first at "
            f"x={xs[bad[0]]!r} — higher derivatives of the infimal "
            f"convolution are unavailable there"
        )
    lift = np.arange(1, order + 2).reshape((order + 1,) + (1,) * (fc.ndim - 1))
    fprime = fc[1:] * lift
    gprime = gc[1:] * lift
    u = jets.jet_var(xs, order)
    mu_rows = np.zeros((order + 1,) + xs.shape)
    mu_rows[0] = mu0
    for k in range(1, order + 1):
        resid = jets.tcompose(fprime, mu_rows) - jets.tcompose(gprime, u - mu_rows)
        mu_rows[k] = -resid[k] / total
    return mu_rows, fc, gc, u


def _direct_jet(f, g, xs, order):
    mu0 = np.atleast_1d(minimizer_map(f, g, xs))
    f_derivs = f.jet(mu0, order + 1)
    g_derivs = g.jet(xs - mu0, order + 1)
    mu_rows, fc, gc, u = _mu_taylor(xs, mu0, f_derivs, g_derivs, order)
    h_coeffs = jets.tcompose(fc[: order + 1], mu_rows)
    h_coeffs += jets.tcompose(gc[: order + 1], u - mu_rows)
    return jets.jet_to_derivs(h_coeffs)


def infconv_direct(
    f: SmoothFn,
    g: SmoothFn,
    *,
    interval=None,
    grid_n: int = 1025,
    scan_n: int = 1024,
    refine_iters: int = 70,
    validate: bool = True,
) -> InfConvResult:
    """Infimal convolution by per-point minimization of the split objective.

    Each requested point gets a ``scan_n``-point coarse scan of its feasible
    window followed by golden-section refinement, which pins the minimizer
    to a relative width of about ``0.62**refine_iters``.  The returned
    function object re-minimizes on demand; its derivative rows (orders up
    to ``min(max orders) - 1``) come from the truncated-Taylor solve of the
    stationarity condition and therefore require an interior minimizer with
    positive curvature sum.
    """
    if validate:
        check_convexity(f)
        check_convexity(g)
    lo_sum = f.domain[0] + g.domain[0]
    hi_sum = f.domain[1] + g.domain[1]
    span = _as_interval(interval) if interval is not None else (lo_sum, hi_sum)
    xs = np.linspace(span[0], span[1], grid_n)
    vals, mu, boundary = _direct_minimize(f, g, xs, scan_n, refine_iters)

    jet_order = max(0, min(f.max_order, g.max_order) - 1)

    def h_jet(xq, order):
        if order == 0:
            v, _, _ = _direct_minimize(f, g, xq, scan_n, refine_iters)
            return v[None, :]
        return _direct_jet(f, g, xq, order)

    h = SmoothFn.from_jet_fn(
        span,
        jet_order,
        h_jet,
        name=f"infconv[{f.name or 'f'},{g.name or 'g'}]",
    )
    return InfConvResult(
        route="direct_min",
        x=xs,
        values=vals,
        mu=mu,
        boundary=boundary,
        h=h,
    )


# ---------------------------------------------------------------------------
# conjugate route (exact piecewise-linear Legendre transforms)
# ---------------------------------------------------------------------------


def _lower_hull(xs: np.ndarray, vs: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Vertices of the lower convex hull of the graph points, in order.

    Collinear interior points are dropped, so consecutive chord slopes are
    strictly increasing.
    """
    x_list = xs.tolist()
    v_list = vs.tolist()
    keep: list[int] = []
    for i in range(len(x_list)):
        xi, vi = x_list[i], v_list[i]
        while len(keep) >= 2:
            i1 = keep[-1]
            i0 = keep[-2]
            cross = (x_list[i1] - x_list[i0]) * (vi - v_list[i0]) - (
                v_list[i1] - v_list[i0]
            ) * (xi - x_list[i0])
            if cross <= 0.0:
                keep.pop()
            else:
                break
        keep.append(i)
    idx = np.asarray(keep, dtype=np.intp)
    return xs[idx], vs[idx]


def _conjugate_vertices(xs, vs):
    """Hull vertices plus chord slopes: the data of the exact conjugate.

    The conjugate of the piecewise-linear interpolant is itself piecewise
    linear with breakpoints exactly at the chord slopes; on the slope
    interval ending at ``s[i]`` its value is ``p * x[i] - v[i]``.
    """
    hx, hv = _lower_hull(xs, vs)
    if hx.size < 2:
        raise ValidationError("conjugate needs at least two hull vertices")
    slopes = np.diff(hv) / np.diff(hx)
    return hx, hv, slopes


def _conjugate_eval(hx, hv, slopes, p):
    """Exact conjugate values at slopes ``p`` (and the argmax vertex index)."""
    idx = np.searchsorted(slopes, p, side="left")
    return p * hx[idx] - hv[idx], idx


def infconv_conjugate(
    f: SmoothFn,
    g: SmoothFn,
    *,
    interval=None,
    grid_n: int = 1025,
    sample_n: int = (1 << 14) + 1,
    validate: bool = True,
) -> InfConvResult:
    """Infimal convolution via exact piecewise-linear Legendre transforms.

    ``f`` and ``g`` are sampled at ``sample_n`` nodes; everything after
    that is exact arithmetic on piecewise-linear functions: conjugate each
    interpolant, add on the merged slope set, conjugate back.  The returned
    function object is the resulting piecewise-linear ``h`` (order-0 only).
    ``error_bound`` stores ``(dx_f^2 max f'' + dx_g^2 max g'')/8`` when the
    inputs expose second derivatives — a sup-norm bound on the distance to
    the true infimal convolution.
    """
    if validate:
        check_convexity(f)
        check_convexity(g)
    if sample_n < 3:
        raise ArgumentError("sample_n must be at least 3")
    xf = np.linspace(f.domain[0], f.domain[1], sample_n)
    xg = np.linspace(g.domain[0], g.domain[1], sample_n)
    vf = f.eval(xf)
    vg = g.eval(xg)
    hxf, hvf, sf = _conjugate_vertices(xf, vf)
    hxg, hvg, sg = _conjugate_vertices(xg, vg)

    p_all = np.unique(np.concatenate([sf, sg]))
    conj_sum, _ = _conjugate_eval(hxf, hvf, sf, p_all)
    conj_g, _ = _conjugate_eval(hxg, hvg, sg, p_all)
    conj_sum += conj_g
    # The summed conjugate sampled at its own breakpoints is convex data up
    # to rounding; hulling it again is a cheap safeguard.
    pv, sv = _lower_hull(p_all, conj_sum)
    if pv.size < 2:
        raise ValidationError("degenerate summed conjugate (all slopes equal)")
    kinks = np.diff(sv) / np.diff(pv)

    lo_sum = hxf[0] + hxg[0]
    hi_sum = hxf[-1] + hxg[-1]
    span = _as_interval(interval) if interval is not None else (lo_sum, hi_sum)
    slack = 1e-9 * (1.0 + abs(lo_sum) + abs(hi_sum))
    if span[0] < lo_sum - slack or span[1] > hi_sum + slack:
        raise ArgumentError(
            f"requested interval {span} exceeds the sum of the domains "
            f"[{lo_sum!r}, {hi_sum!r}]"
        )

    def pwl_eval(xq):
        idx = np.searchsorted(kinks, xq, side="left")
        return xq * pv[idx] - sv[idx], pv[idx]

    xs = np.linspace(span[0], span[1], grid_n)
    vals, slope_at = pwl_eval(xs)
    fidx = np.searchsorted(sf, slope_at, side="left")
    mu = hxf[fidx]
    boundary = (
        (slope_at <= sf[0])
        | (slope_at >= sf[-1])
        | (slope_at <= sg[0])
        | (slope_at >= sg[-1])
    )

    def h_jet(xq, order):
        out = np.zeros((order + 1,) + xq.shape)
        out[0] = pwl_eval(xq)[0]
        return out

    h = SmoothFn.from_jet_fn(
        span,
        0,
        h_jet,
        name=f"infconv_pwl[{f.name or 'f'},{g.name or 'g'}]",
    )

    error_bound = None
    try:
        max_hf = float(np.max(f.jet(xf, 2)[2]))
        max_hg = float(np.max(g.jet(xg, 2)[2]))
        dxf = (f.domain[1] - f.domain[0]) / (sample_n - 1)
        dxg = (g.domain[1] - g.domain[0]) / (sample_n - 1)
        error_bound = (dxf**2 * max_hf + dxg**2 * max_hg) / 8.0
    except CapabilityError:
        pass

    return InfConvResult(
        route="conjugate",
        x=xs,
        values=vals,
        mu=mu,
        boundary=boundary,
        h=h,
        error_bound=error_bound,
    )


# ---------------------------------------------------------------------------
# export
# ---------------------------------------------------------------------------


def write_infconv_csv(path, result: InfConvResult, f: SmoothFn | None = None, g: SmoothFn | None = None) -> None:
    """Write ``x, h, mu, dh, d2h, j_mu, boundary`` rows for a result.

    The derivative columns are filled from the curvature identities when
    both inputs expose second derivatives; rows whose minimizer sits on the
    window boundary (or where the curvature sum vanishes) get NaN there.
    """
    n = result.x.size
    dh = np.full(n, np.nan)
    d2h = np.full(n, np.nan)
    j_mu = np.full(n, np.nan)
    can_diff = (
        f is not None
        and g is not None
        and f.max_order >= 2
        and g.max_order >= 2
    )
    if can_diff:
        interior = ~result.boundary
        if np.any(interior):
            mu_i = result.mu[interior]
            x_i = result.x[interior]
            dh[interior] = f.jet(mu_i, 1)[1]
            hf = f.jet(mu_i, 2)[2]
            hg = g.jet(x_i - mu_i, 2)[2]
            total = hf + hg
            ok = total >= _TINY
            safe = np.where(ok, total, 1.0)
            j_vals = np.where(ok, hg / safe, np.nan)
            j_mu[interior] = j_vals
            d2h[interior] = np.where(ok, hf * j_vals, np.nan)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["x", "h", "mu", "dh", "d2h", "j_mu", "boundary"])
        for i in range(n):
            writer.writerow(
                [
                    f"{result.x[i]:.17g}",
                    f"{result.values[i]:.17g}",
                    f"{result.mu[i]:.17g}",
                    f"{dh[i]:.17g}",
                    f"{d2h[i]:.17g}",
                    f"{j_mu[i]:.17g}",
                    int(bool(result.boundary[i])),
                ]
            )
