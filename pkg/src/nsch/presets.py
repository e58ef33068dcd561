"""Initial-condition recipes."""
from __future__ import annotations

import numpy as np

from .density import mollify_initial_density
from .galerkin import chemical_potential_solve, project_solenoidal
from .spectral import SpectralLayout, forward_transform, inverse_transform
from .state import Params, SimState

PRESETS = ("spinodal", "taylor-green", "stratified-density", "manufactured")


def project_velocity(layout, u_grid):
    """Galerkin projection of grid velocity values onto the solenoidal modes."""
    return project_solenoidal(layout, forward_transform(layout, u_grid))


def project_phase(layout, phi_grid):
    return layout.mask * forward_transform(layout, phi_grid)


def make_state(layout, rho0, u0, phi0, params: Params, t=0.0, mollify=True) -> SimState:
    """Assemble an admissible state from grid data.

    ``rho0`` is mollified (unless ``mollify`` is false), ``u0`` and ``phi0``
    are projected onto the Galerkin spaces and ``c`` is solved from them.
    """
    rho0 = np.asarray(rho0, dtype=float)
    if mollify:
        rho = mollify_initial_density(layout, rho0, params.delta, params.rho_star)
    else:
        rho = rho0.copy()
    a = project_velocity(layout, u0)
    b = project_phase(layout, phi0)
    c = chemical_potential_solve(layout, b, rho, params)
    bounds = (float(np.min(rho)), float(np.max(rho)))
    return SimState(layout, rho, a, b, c, t, bounds)


def two_level_density(layout, lo=1.0, hi=2.0, width=0.4):
    """Smooth stripe pattern switching between ``lo`` and ``hi`` along the last axis."""
    y = layout.x[-1] * 2 * np.pi / layout.extent[-1]
    return lo + (hi - lo) * 0.5 * (1.0 + np.tanh(np.cos(y) / width))


def spinodal(layout, params: Params, seed=0, amplitude=0.05, band=None):
    """Small smooth noise around ``phi = 0``, fluid at rest, two-level density."""
    rng = np.random.default_rng(seed)
    band = band if band is not None else max(2, layout.m_cut // 3)
    b = layout.random_coeffs(rng, amplitude=amplitude, band=band)
    b[(0,) * layout.dim] = 0.0
    phi0 = inverse_transform(layout, b)
    rho0 = two_level_density(layout, 1.0, params.rho_star)
    u0 = np.zeros((layout.dim,) + layout.shape)
    return make_state(layout, rho0, u0, phi0, params)


def taylor_green(layout, params: Params, seed=0, amplitude=1.0, phi_amplitude=0.0):
    """Taylor-Green vortex in uniform density; optional ``cos`` perturbation of ``phi``."""
    x = [layout.x[a] * 2 * np.pi / layout.extent[a] for a in range(layout.dim)]
    u0 = np.zeros((layout.dim,) + layout.shape)
    if layout.dim == 2:
        u0[0] = np.sin(x[0]) * np.cos(x[1])
        u0[1] = -np.cos(x[0]) * np.sin(x[1])
    else:
        u0[0] = np.sin(x[0]) * np.cos(x[1]) * np.cos(x[2])
        u0[1] = -np.cos(x[0]) * np.sin(x[1]) * np.cos(x[2])
    phi0 = phi_amplitude * np.cos(x[0])
    rho0 = np.ones(layout.shape)
    return make_state(layout, rho0, amplitude * u0, phi0, params, mollify=False)


def stratified_density(layout, params: Params, seed=0, amplitude=0.2, vacuum=True, width=0.35):
    """Near-vacuum layer with a diffuse interface and a vortex.

    ``rho0`` drops smoothly from 1 to 0 (or to 1/2 with ``vacuum=False``)
    across a band around ``y = pi``; mollification lifts the band to
    ``delta``.
    """
    y = layout.x[-1] * 2 * np.pi / layout.extent[-1]
    x = layout.x[0] * 2 * np.pi / layout.extent[0]
    floor = 0.0 if vacuum else 0.5
    edge = 0.5 * (1.0 + np.tanh((np.abs(y - np.pi) - np.pi / 3) / width))
    rho0 = floor + (1.0 - floor) * edge
    phi0 = np.tanh(np.cos(y) / 0.5)
    u0 = np.zeros((layout.dim,) + layout.shape)
    u0[0] = amplitude * np.sin(x) * np.cos(y)
    u0[-1] = -amplitude * np.cos(x) * np.sin(y)
    return make_state(layout, rho0, u0, phi0, params)


def build(name: str, layout: SpectralLayout, params: Params, seed=0, **kw) -> SimState:
    if name == "spinodal":
        return spinodal(layout, params, seed, **kw)
    if name == "taylor-green":
        return taylor_green(layout, params, seed, **kw)
    if name == "stratified-density":
        return stratified_density(layout, params, seed, **kw)
    if name == "manufactured":
        from .manufactured import Manufactured
        return Manufactured(layout.dim, params).initial_state(layout)
    raise ValueError(f"unknown preset {name!r}; choose from {', '.join(PRESETS)}")
