"""Smooth cut-offs: the dyadic partition of unity and an even plateau bump.

Everything here is built from the step ``S(t) = E(t) / (E(t) + E(1-t))``
with ``E(t) = exp(-1/t)`` for ``t > 0``:

* ``psi`` — a bump supported exactly on ``(2/3, 3/2)``, identically 1 on
  ``[3/4, 5/4]``, normalized so that ``sum_m psi(2**m x) = 1`` for every
  ``x > 0``.  The normalizer is invariant under dyadic rescaling, which
  makes the partition identity hold to rounding error, and it is
  identically 1 on the plateau, so the plateau value stays exactly 1.
* ``phi_even`` — an even bump supported on ``(-1, 1)``, identically 1 on
  ``[-1/2, 1/2]``.

All evaluators return jets (see :mod:`minklab.jets`): shape
``(order + 1, N)`` arrays of Taylor coefficients.
"""

from __future__ import annotations

from functools import lru_cache

import numpy as np

from .jets import jet_var, smoothstep_jet, tmul

__all__ = [
    "PSI_SUPPORT",
    "PSI_PLATEAU",
    "PHI_SUPPORT",
    "PHI_PLATEAU",
    "smoothstep",
    "psi_raw_jet",
    "psi_jet",
    "psi_scaled_jet",
    "phi_even_jet",
    "psi_integral",
]

PSI_SUPPORT = (2.0 / 3.0, 1.5)
PSI_PLATEAU = (0.75, 1.25)
PHI_SUPPORT = (-1.0, 1.0)
PHI_PLATEAU = (-0.5, 0.5)

# Ramp slopes chosen so the plateau edges land exactly on S's flat ends:
# 12 * (3/4 - 2/3) = 1 and 4 * (3/2 - 5/4) = 1.
_LEFT_RAMP = 12.0
_RIGHT_RAMP = 4.0


def smoothstep(x) -> np.ndarray:
    """Values of the step ``S`` (0 below 0, 1 above 1, smooth ramp between)."""
    return smoothstep_jet(jet_var(x, 0))[0]


def _affine_jet(x, a: float, b: float, order: int) -> np.ndarray:
    """Jet of ``a*x + b`` at the points ``x``."""
    out = jet_var(x, order)
    out[0] = a * out[0] + b
    if order >= 1:
        out[1] = a
    return out


def psi_raw_jet(x, order: int) -> np.ndarray:
    """Jet of the unnormalized dyadic bump ``S(12(x-2/3)) * S(4(3/2-x))``."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    left = smoothstep_jet(_affine_jet(x, _LEFT_RAMP, -_LEFT_RAMP * PSI_SUPPORT[0], order))
    right = smoothstep_jet(_affine_jet(x, -_RIGHT_RAMP, _RIGHT_RAMP * PSI_SUPPORT[1], order))
    return tmul(left, right)


def _normalizer_jet(x, order: int) -> np.ndarray:
    """Jet of ``T(x) = psi_raw(x/2) + psi_raw(x) + psi_raw(2x)``.

    Only the three central dyadic translates can be positive on the
    support of ``psi_raw``, and ``T(2x) = T(x)`` there, so dividing by
    ``T`` yields an exact partition of unity along dyadic scales.
    """
    out = np.zeros((order + 1,) + np.shape(np.atleast_1d(x)))
    x = np.atleast_1d(np.asarray(x, dtype=float))
    for m in (-1, 0, 1):
        term = psi_raw_jet(np.ldexp(x, m), order)
        for j in range(order + 1):
            term[j] = np.ldexp(term[j], m * j)
        out += term
    return out


def psi_jet(x, order: int) -> np.ndarray:
    """Jet of the normalized partition bump ``psi = psi_raw / T``."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    raw = psi_raw_jet(x, order)
    inside = raw[0] > 0.0
    norm = _normalizer_jet(x, order)
    norm[0] = np.where(inside, norm[0], 1.0)
    out = np.zeros_like(raw)
    for k in range(order + 1):
        acc = np.array(raw[k], copy=True)
        for j in range(1, k + 1):
            acc -= norm[j] * out[k - j]
        out[k] = np.where(inside, acc / norm[0], 0.0)
    return out


def psi_scaled_jet(x, scale_log2: int, order: int) -> np.ndarray:
    """Jet of ``psi(2**scale_log2 * x)`` (exact dyadic argument scaling)."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    out = psi_jet(np.ldexp(x, scale_log2), order)
    for j in range(order + 1):
        out[j] = np.ldexp(out[j], scale_log2 * j)
    return out


def phi_even_jet(x, order: int) -> np.ndarray:
    """Jet of the even bump ``phi(x) = S(4(1 - x^2)/3)``.

    Support is exactly ``(-1, 1)`` and the value is exactly 1 on
    ``[-1/2, 1/2]`` (the inner argument reaches 1 at ``|x| = 1/2``).
    """
    x = np.atleast_1d(np.asarray(x, dtype=float))
    inner = np.zeros((max(order, 2) + 1,) + x.shape)
    inner[0] = (4.0 / 3.0) * (1.0 - x * x)
    inner[1] = -(8.0 / 3.0) * x
    inner[2] = -4.0 / 3.0
    return smoothstep_jet(inner[: order + 1])


@lru_cache(maxsize=1)
def psi_integral(n: int = 1 << 13) -> float:
    """The integral of the normalized bump ``psi`` over its support."""
    from scipy.integrate import simpson

    lo, hi = PSI_SUPPORT
    xs = np.linspace(lo, hi, n + 1)
    return float(simpson(psi_jet(xs, 0)[0], x=xs))
