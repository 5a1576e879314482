"""Rotate a function graph and evaluate the rotated graph as a function.

Rotating ``{(x, f(x))}`` by the angle ``phi`` about the origin produces the
parametric curve ``x -> (R(x), I(x))`` with ``R = x cos(phi) - f sin(phi)``
and ``I = x sin(phi) + f cos(phi)``.  As long as ``R' = cos(phi) -
f' sin(phi)`` stays positive the image is again a graph; its carrier here
inverts ``R`` by bisection (polished by Newton) and obtains derivative rows
through the quotient recursion: if ``g_k`` denotes the k-th derivative of
the rotated function pre-composed with ``R``, then ``g_{k+1} = g_k' / R'``.
In particular the first two orders reduce to the closed forms

    first  = (sin(phi) + f' cos(phi)) / (cos(phi) - f' sin(phi)),
    second = f'' / (R')^3,

exposed directly by :func:`rotated_derivatives`.  :func:`cr_bound_check`
compares the measured ``C^r`` norm of the rotated function against an
explicit finite bound in terms of the ``C^s`` norms of ``f`` (for
``s <= 2r - 1``) and the diameter of the domain together with the origin;
the bound is valid under a smallness hypothesis on ``tan(phi)`` times the
norms, which the checker enforces.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from . import jets
from .errors import (
    ArgumentError,
    HypothesisError,
    RotationTooLargeError,
    ValidationError,
)
from .fn_core import SmoothFn, cr_norm, invert_monotone

__all__ = [
    "RotatedFn",
    "CrBoundEntry",
    "CrBoundReport",
    "rotate_graph",
    "rotated_derivatives",
    "cr_bound_check",
]


@dataclass(frozen=True)
class RotatedFn:
    """A rotated graph: base function, angle, coordinate maps, and carrier.

    ``R``/``I`` map a base abscissa to the rotated abscissa/ordinate; the
    identity ``f_phi(R(x)) = I(x)`` holds by construction (``f_phi``
    evaluates exactly that way after inverting ``R``).
    """

    base: SmoothFn
    phi: float
    R: Callable[[np.ndarray], np.ndarray]
    I: Callable[[np.ndarray], np.ndarray]
    f_phi: SmoothFn


def rotate_graph(f: SmoothFn, phi: float, *, check_n: int = 4097) -> RotatedFn:
    """Rotate the graph of ``f`` by ``phi`` (radians, counterclockwise).

    Raises :class:`~minklab.errors.RotationTooLargeError` when
    ``cos(phi) - f' sin(phi)`` fails to stay positive on a ``check_n``-point
    grid, i.e. when the rotated set is no longer the graph of a function.
    """
    phi = float(phi)
    c = math.cos(phi)
    s = math.sin(phi)
    lo, hi = f.domain

    if f.max_order >= 1:
        grid = np.linspace(lo, hi, check_n)
        rprime = c - f.jet(grid, 1)[1] * s
        worst = float(rprime.min())
        if worst <= 0.0:
            raise RotationTooLargeError(
                f"rotation by phi={phi!r} produces a non-graph: "
                f"min slope of the abscissa map is {worst:.3e}"
            )

    def r_map(x):
        return np.asarray(x, dtype=float) * c - f.eval(x) * s

    def i_map(x):
        return np.asarray(x, dtype=float) * s + f.eval(x) * c

    u_lo = float(lo * c - f.eval(lo) * s)
    u_hi = float(hi * c - f.eval(hi) * s)
    if not u_lo < u_hi:
        raise RotationTooLargeError(
            f"rotation by phi={phi!r} collapses the domain image "
            f"[{u_lo!r}, {u_hi!r}]"
        )

    have_first = f.max_order >= 1

    def invert_r(u):
        dfn = None
        if have_first:
            def dfn(x):
                return c - f.jet(x, 1)[1] * s
        return invert_monotone(
            r_map, dfn, u, lo, hi, bisect_iters=64, newton_iters=6, rtol=1e-14
        )

    def jet_fn(u, order):
        x = invert_r(u)
        out = np.zeros((order + 1,) + u.shape)
        if order == 0:
            out[0] = i_map(x)
            return out
        m = order
        fc = jets.derivs_to_jet(f.jet(x, m))
        xj = jets.jet_var(x, m)
        ij = xj * s + fc * c
        lift = np.arange(1, m + 1).reshape((m,) + (1,) * (fc.ndim - 1))
        fprime = fc[1:] * lift
        rpj = -s * fprime
        rpj[0] += c
        out[0] = ij[0]
        cur = ij
        for k in range(1, m + 1):
            oc = cur.shape[0] - 1
            deriv = cur[1:] * np.arange(1, oc + 1).reshape((oc,) + (1,) * (cur.ndim - 1))
            cur = jets.tdiv(deriv, rpj[:oc])
            out[k] = cur[0]
        return out

    f_phi = SmoothFn.from_jet_fn(
        (u_lo, u_hi),
        f.max_order,
        jet_fn,
        name=f"rot[{f.name or 'f'}, {phi:g}]",
    )
    return RotatedFn(base=f, phi=phi, R=r_map, I=i_map, f_phi=f_phi)


def rotated_derivatives(rf: RotatedFn, x):
    """First and second derivative of the rotated function at ``R(x)``.

    Closed forms in base coordinates: no inversion of ``R`` is involved, so
    zero curvature transfers exactly (``f''(x) = 0`` gives ``second = 0``).
    """
    scalar = np.ndim(x) == 0
    rows = rf.base.jet(x, 2)
    c = math.cos(rf.phi)
    s = math.sin(rf.phi)
    rprime = c - rows[1] * s
    if np.any(rprime <= 0.0):
        raise RotationTooLargeError(
            f"abscissa map not increasing at some of the requested points "
            f"(phi={rf.phi!r})"
        )
    first = (s + rows[1] * c) / rprime
    second = rows[2] / rprime**3
    if scalar:
        return float(first[0]), float(second[0])
    return first, second


@dataclass(frozen=True)
class CrBoundEntry:
    """One angle's measured norm versus the explicit bound."""

    phi: float
    measured: float
    bound: float
    hypothesis_value: float


@dataclass(frozen=True)
class CrBoundReport:
    r: int
    diameter: float
    base_norms: np.ndarray
    entries: list[CrBoundEntry]


def cr_bound_check(
    f: SmoothFn,
    phi_set: Sequence[float],
    r: int,
    *,
    grid_n: int = 4097,
) -> CrBoundReport:
    """Check the explicit ``C^r`` bound for rotated graphs at each angle.

    The bound is assembled from the norms ``N_s = sum_{i<=s} max|f^(i)|``
    for ``s`` up to ``2r - 1`` and ``D``, the diameter of the domain
    together with the origin:

        bound = D + N_0 + sum_{i=0}^{r-1} (D + 1 + N_{r+i}) /
                ((cos phi - |sin phi| N_{r+i}) (cos phi - |sin phi| N_r)^i)

    Every denominator must be positive — equivalently ``|tan phi| N_s < 1``
    for all ``s`` in ``r .. 2r-1`` — otherwise a
    :class:`~minklab.errors.HypothesisError` names the offending angle.
    The measured side is the ``C^r`` norm of the rotated function on its
    full (rotated) domain; a measured value above the bound raises
    :class:`~minklab.errors.ValidationError`.
    """
    if r < 0:
        raise ArgumentError("r must be >= 0")
    top = max(r, 2 * r - 1) if r >= 1 else 0
    per = cr_norm(f, top, grid_n=grid_n).per_order
    norms = np.cumsum(per)
    lo, hi = f.domain
    diameter = max(hi, 0.0) - min(lo, 0.0)

    entries: list[CrBoundEntry] = []
    for phi in phi_set:
        phi = float(phi)
        c = math.cos(phi)
        s_abs = abs(math.sin(phi))
        needed = range(r, 2 * r) if r >= 1 else range(0, 1)
        for s_idx in needed:
            if c - s_abs * norms[s_idx] <= 0.0:
                raise HypothesisError(
                    f"phi={phi!r} violates the smallness hypothesis: "
                    f"|tan phi| * N_{s_idx} = "
                    f"{(s_abs / c) * norms[s_idx] if c > 0 else math.inf:.6g} >= 1"
                )
        hypothesis_value = (s_abs / c) * norms[r] if c > 0 else math.inf

        rf = rotate_graph(f, phi)
        measured = cr_norm(rf.f_phi, r, grid_n=grid_n).value

        bound = diameter + norms[0]
        for i in range(r):
            den = (c - s_abs * norms[r + i]) * (c - s_abs * norms[r]) ** i
            bound += (diameter + 1.0 + norms[r + i]) / den

        if measured > bound:
            raise ValidationError(
                f"measured C^{r} norm {measured:.6g} exceeds the bound "
                f"{bound:.6g} at phi={phi!r}"
            )
        entries.append(
            CrBoundEntry(
                phi=phi,
                measured=float(measured),
                bound=float(bound),
                hypothesis_value=float(hypothesis_value),
            )
        )
    return CrBoundReport(r=r, diameter=diameter, base_norms=norms, entries=entries)
