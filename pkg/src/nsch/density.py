"""Density transport by backward characteristics.

The density lives on the collocation grid.  Each step traces the foot of the
characteristic through every grid node with a midpoint rule (velocity is
evaluated exactly from its Fourier coefficients) and interpolates the old
density there with tensor-product cubic Lagrange weights, clamped to the
values at the corners of the cell holding the foot point.  The clamp makes
the update a discrete maximum principle: no new extrema can appear.
"""
from __future__ import annotations

import itertools

import numpy as np

from .spectral import SpectralLayout, evaluate, forward_transform, inverse_transform


class DataError(ValueError):
    pass


class NumericError(FloatingPointError):
    pass


def mollify_initial_density(layout: SpectralLayout, rho0, delta, rho_star=None):
    """Smooth a nonnegative density and lift it off vacuum.

    Applies a Gaussian low-pass of width ``delta`` (spectral multiplier
    ``exp(-delta^2 |k|^2 / 2)``) and clamps the result into
    ``[delta, rho_star + 1]``.
    """
    rho0 = np.asarray(rho0, dtype=float)
    layout.check_grid(rho0)
    if delta <= 0:
        raise DataError(f"mollification radius must be > 0, got {delta}")
    if np.any(rho0 < 0):
        raise DataError("initial density has negative values")
    if rho_star is None:
        rho_star = float(np.max(rho0))
    c = forward_transform(layout, rho0) * np.exp(-0.5 * delta ** 2 * layout.k2)
    smooth = inverse_transform(layout, c)
    return np.clip(smooth, delta, rho_star + 1.0)


def density_bounds(rho):
    return float(np.min(rho)), float(np.max(rho))


def _wrap(points, layout):
    ext = np.array(layout.extent).reshape(-1, 1)
    return np.mod(points, ext)


def grid_points(layout):
    return layout.x.reshape(layout.dim, -1)


def trace_characteristics(layout, u_old, u_new, dt, points=None):
    """Foot points ``X(t - dt; t, x)`` of the characteristics through ``points``.

    ``u_old`` and ``u_new`` are velocity coefficient arrays at ``t - dt`` and
    ``t``; the velocity is taken linear in time.  Returns wrapped foot points
    of shape ``(dim, P)``.
    """
    on_grid = points is None
    if on_grid:
        points = grid_points(layout)
    u_mid = 0.5 * (u_old + u_new)
    if not np.all(np.isfinite(u_mid)):
        raise NumericError("non-finite velocity in characteristic tracing")
    if on_grid:
        u0 = inverse_transform(layout, u_mid).reshape(layout.dim, -1)
    else:
        u0 = evaluate(layout, u_mid, points)
    half = points - 0.5 * dt * u0
    u1 = evaluate(layout, u_mid, _wrap(half, layout))
    foot = points - dt * u1
    if not np.all(np.isfinite(foot)):
        raise NumericError("non-finite foot point")
    return _wrap(foot, layout)


def _cubic_weights(a):
    return np.array([
        -a * (a - 1.0) * (a - 2.0) / 6.0,
        (a + 1.0) * (a - 1.0) * (a - 2.0) / 2.0,
        -(a + 1.0) * a * (a - 2.0) / 2.0,
        (a + 1.0) * a * (a - 1.0) / 6.0,
    ])


def interpolate_clamped(layout, f, points):
    """Cubic interpolation of grid values ``f`` clamped to cell-corner extrema."""
    n = layout.n_grid
    d = layout.dim
    idx, wts = [], []
    for a in range(d):
        s = points[a] / layout.spacing[a]
        i0 = np.floor(s)
        frac = s - i0
        i0 = i0.astype(int)
        idx.append(np.mod(i0[None, :] + np.arange(-1, 3)[:, None], n))
        wts.append(_cubic_weights(frac))
    P = points.shape[1]
    value = np.zeros(P)
    lo = np.full(P, np.inf)
    hi = np.full(P, -np.inf)
    for offs in itertools.product(range(4), repeat=d):
        sample = f[tuple(idx[a][offs[a]] for a in range(d))]
        w = wts[0][offs[0]]
        for a in range(1, d):
            w = w * wts[a][offs[a]]
        value += w * sample
        if all(o in (1, 2) for o in offs):
            lo = np.minimum(lo, sample)
            hi = np.maximum(hi, sample)
    return np.clip(value, lo, hi)


def advect_density(layout, rho, u_old, u_new, dt):
    """One semi-Lagrangian step of ``d_t rho + u . grad rho = 0``."""
    if not (np.any(u_old) or np.any(u_new)):
        return np.array(rho, copy=True)
    foot = trace_characteristics(layout, u_old, u_new, dt)
    return interpolate_clamped(layout, rho, foot).reshape(layout.shape)
