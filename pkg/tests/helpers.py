"""Shared test fixtures-as-functions: simple carriers and FD stencils."""

import numpy as np

from minklab.fn_core import SmoothFn


def flat_center_fn(domain=(-1, 1), half_width=0.1):
    """Convex C^3 function that is *exactly* zero near 0: (|x|-w)_+^4."""

    def jet_fn(x, order):
        out = np.zeros((order + 1,) + x.shape)
        s = np.sign(x)
        t = np.maximum(np.abs(x) - half_width, 0.0)
        out[0] = t**4
        if order >= 1:
            out[1] = 4.0 * s * t**3
        if order >= 2:
            out[2] = 12.0 * t**2
        if order >= 3:
            out[3] = 24.0 * s * t
        if order >= 4:
            out[4] = np.where(t > 0, 24.0, 0.0)
        return out

    return SmoothFn.from_jet_fn(domain, 4, jet_fn, name="flat_center")


def central_fd(fn, x, order, h):
    """Central finite-difference derivative of a callable, orders 1..4."""
    if order == 1:
        return (fn(x + h) - fn(x - h)) / (2 * h)
    if order == 2:
        return (fn(x + h) - 2 * fn(x) + fn(x - h)) / h**2
    if order == 3:
        return (fn(x + 2 * h) - 2 * fn(x + h) + 2 * fn(x - h) - fn(x - 2 * h)) / (
            2 * h**3
        )
    if order == 4:
        return (
            fn(x + 2 * h) - 4 * fn(x + h) + 6 * fn(x) - 4 * fn(x - h) + fn(x - 2 * h)
        ) / h**4
    raise ValueError(f"unsupported order {order}")
