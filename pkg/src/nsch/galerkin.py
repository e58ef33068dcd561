"""Discrete operators of the semi-Galerkin scheme.

Velocity lives on the solenoidal retained modes with ``k != 0`` and the
order parameter and chemical potential on all retained modes.  Every
nonlinear term is formed pointwise on the collocation grid and then
projected back (truncation to the retained band is the orthogonal
projection for the grid inner product, and the two-thirds rule keeps
products of retained fields alias-free).  The weak forms are

    M1(rho) da/dt = P[-rho (u.grad) u + div T(Du) + rho mu grad phi - rho grad Psi(phi)]
    M2(rho) db/dt = P[-rho u.grad phi] - |k|^2 c
    M2(rho) c     = |k|^2 b + P[rho Psi'(phi)]

with ``T`` the power-law stress and ``P`` the Galerkin projection.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.sparse.linalg import LinearOperator, cg

from . import constitutive as cst
from .spectral import (
    SpectralLayout,
    forward_transform,
    inverse_transform,
    leray_project,
    sym_gradient,
    tensor_divergence,
)
from .state import Params, SimState


class SolverError(RuntimeError):
    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual


class PreconditionError(ValueError):
    pass


def project_solenoidal(layout, F):
    """Galerkin projection of vector coefficients onto the velocity space."""
    return layout.vmask * leray_project(layout, F)


def project_scalar(layout, f):
    return layout.mask * f


class MassOperator:
    """Density-weighted mass operator, applied matrix-free.

    ``kind`` is ``"scalar"`` (order-parameter space) or ``"vector"``
    (solenoidal velocity space).  In the orthonormal Fourier basis the
    operator is Hermitian positive definite with spectrum inside
    ``[min rho, max rho]``.
    """

    def __init__(self, layout: SpectralLayout, rho, kind="scalar", rtol=1e-12, maxiter=1000):
        rho = np.asarray(rho, dtype=float)
        layout.check_grid(rho)
        if not np.all(rho > 0):
            raise PreconditionError("mass operator needs a strictly positive density")
        if kind not in ("scalar", "vector"):
            raise ValueError(f"unknown basis kind {kind!r}")
        self.layout = layout
        self.rho = rho
        self.kind = kind
        self.rtol = rtol
        self.maxiter = maxiter
        self.rho_mean = float(np.mean(rho))
        self.uniform = bool(np.all(rho == rho.flat[0]))
        if kind == "scalar":
            self.sel = layout.mask
            self.lead = ()
        else:
            self.sel = np.broadcast_to(layout.vmask, (layout.dim,) + layout.shape)
            self.lead = (layout.dim,)
        self.full_shape = self.lead + layout.shape
        self.size = int(np.count_nonzero(self.sel))
        self.iterations = 0

    def apply(self, v):
        lay = self.layout
        w = forward_transform(lay, self.rho * inverse_transform(lay, v, real=False))
        if self.kind == "scalar":
            return project_scalar(lay, w)
        return project_solenoidal(lay, w)

    def _expand(self, x):
        v = np.zeros(self.full_shape, dtype=complex)
        v[self.sel] = x
        return v

    def solve(self, rhs):
        rhs = np.asarray(rhs, dtype=complex)
        if self.uniform:
            return rhs / self.rho.flat[0]
        r = rhs[self.sel]
        if not np.any(r):
            return np.zeros(self.full_shape, dtype=complex)
        op = LinearOperator((self.size, self.size), dtype=complex,
                            matvec=lambda x: self.apply(self._expand(x))[self.sel])
        pre = LinearOperator((self.size, self.size), dtype=complex,
                             matvec=lambda x: x / self.rho_mean)
        count = [0]

        def tick(_):
            count[0] += 1

        x, info = cg(op, r, x0=r / self.rho_mean, rtol=self.rtol, atol=0.0,
                     maxiter=self.maxiter, M=pre, callback=tick)
        self.iterations = count[0]
        if info != 0:
            res = np.linalg.norm(op.matvec(x) - r) / np.linalg.norm(r)
            raise SolverError(f"CG did not converge in {self.maxiter} iterations "
                              f"(relative residual {res:.3e})", res)
        return self._expand(x)


def apply_mass(op: MassOperator, v):
    return op.apply(v)


def solve_mass(op: MassOperator, rhs):
    return op.solve(rhs)


# -- grid fields ---------------------------------------------------------

@dataclass
class Fields:
    """Grid values shared by the right-hand-side terms at one stage."""

    u: np.ndarray
    grad_u: np.ndarray  # grad_u[i, j] = d_j u_i
    Du: np.ndarray
    phi: np.ndarray
    grad_phi: np.ndarray
    mu: np.ndarray


def grid_fields(layout, a, b, c) -> Fields:
    ik = layout.deriv
    u = inverse_transform(layout, a)
    grad_u = inverse_transform(layout, ik[None, :] * a[:, None])
    Du = 0.5 * (grad_u + np.swapaxes(grad_u, 0, 1))
    phi = inverse_transform(layout, b)
    grad_phi = inverse_transform(layout, ik * b[None])
    mu = inverse_transform(layout, c)
    return Fields(u, grad_u, Du, phi, grad_phi, mu)


def _psi_prime(phi, params):
    if not params.potential:
        return np.zeros_like(phi)
    return cst.landau_prime(phi)


# -- individual terms (also used by the dense oracle) --------------------

def potential_load(layout, rho, b, params: Params):
    """Projection of ``rho Psi'(phi)`` onto the scalar modes."""
    phi = inverse_transform(layout, b)
    return project_scalar(layout, forward_transform(layout, rho * _psi_prime(phi, params)))


def potential_force(layout, rho, b, params: Params):
    """Projection of ``rho grad Psi(phi)`` onto the velocity modes."""
    phi = inverse_transform(layout, b)
    grad_phi = inverse_transform(layout, layout.deriv * b[None])
    F = forward_transform(layout, rho * _psi_prime(phi, params) * grad_phi)
    return project_solenoidal(layout, F)


def coupling_apply(layout, rho, b, c):
    """Projection of ``rho mu grad phi`` onto the velocity modes (``mu`` from ``c``)."""
    grad_phi = inverse_transform(layout, layout.deriv * b[None])
    mu = inverse_transform(layout, c)
    return project_solenoidal(layout, forward_transform(layout, rho * mu * grad_phi))


def transport_apply(layout, rho, b, a):
    """Projection of ``-rho u . grad phi`` onto the scalar modes (``u`` from ``a``)."""
    grad_phi = inverse_transform(layout, layout.deriv * b[None])
    u = inverse_transform(layout, a)
    return project_scalar(layout, forward_transform(layout, -rho * np.sum(u * grad_phi, 0)))


def convection_term(layout, rho, a):
    """Projection of ``-rho (u . grad) u`` onto the velocity modes."""
    u = inverse_transform(layout, a)
    grad_u = inverse_transform(layout, layout.deriv[None, :] * a[:, None])
    conv = np.sum(grad_u * u[None], axis=1)
    return project_solenoidal(layout, forward_transform(layout, -rho * conv))


def stress_grid(layout, a, b, params: Params):
    Du = sym_gradient(layout, a)
    phi = inverse_transform(layout, b)
    return cst.stress_tensor(Du, phi, params.p, params.law)


def stress_term(layout, a, b, params: Params):
    """Projection of ``div T(Du)``; paired with ``w`` it equals ``-(T, Dw)``."""
    if not params.stress:
        return np.zeros((layout.dim,) + layout.shape, dtype=complex)
    T = stress_grid(layout, a, b, params)
    return project_solenoidal(layout, tensor_divergence(layout, T))


def stiffness(layout):
    """Diagonal of the Laplacian pairing ``(grad w_j, grad w_l)`` on retained modes."""
    return layout.k2 * layout.mask


# -- assembled operations ------------------------------------------------

def chemical_potential_solve(layout, b, rho, params: Params, op: MassOperator | None = None):
    """Solve ``M2(rho) c = |k|^2 b + P[rho Psi'(phi)]`` for the chemical potential."""
    if op is None:
        op = MassOperator(layout, rho, "scalar", params.cg_rtol, params.cg_maxiter)
    rhs = stiffness(layout) * b + potential_load(layout, rho, b, params)
    return op.solve(rhs)


def mu_residual(layout, b, c, rho, params: Params):
    """Max-norm of the projected residual of ``rho mu = -lap phi + rho Psi'(phi)``.

    Returns ``(residual, scale)`` with ``scale = |lap phi|_inf + |rho mu|_inf``.
    """
    phi = inverse_transform(layout, b)
    mu = inverse_transform(layout, c)
    lap = inverse_transform(layout, -layout.k2 * b)
    pointwise = rho * mu + lap - rho * _psi_prime(phi, params)
    res = inverse_transform(layout, project_scalar(layout, forward_transform(layout, pointwise)))
    scale = float(np.max(np.abs(lap)) + np.max(np.abs(rho * mu)))
    return float(np.max(np.abs(res))), scale


def capillary_force(layout, b, mu, rho, params: Params | None = None):
    """Projected ``rho mu grad phi - rho grad Psi(phi)``.

    ``mu`` holds grid values of the chemical potential, so callers can pass
    either the Galerkin field or the pointwise one.
    """
    params = params or Params()
    phi = inverse_transform(layout, b)
    grad_phi = inverse_transform(layout, layout.deriv * b[None])
    g = rho * (mu - _psi_prime(phi, params))
    return project_solenoidal(layout, forward_transform(layout, g * grad_phi))


def korteweg_force(layout, b):
    """Projected ``-div(grad phi (x) grad phi)``."""
    grad_phi = inverse_transform(layout, layout.deriv * b[None])
    G = grad_phi[:, None] * grad_phi[None, :]
    return project_solenoidal(layout, -tensor_divergence(layout, G))


def _forcing(params, t):
    if params.forcing is None:
        return None, None
    return params.forcing(t)


def momentum_rhs(state: SimState, params: Params, op: MassOperator | None = None,
                 fields: Fields | None = None):
    """``da/dt`` from the velocity equation."""
    lay = state.layout
    if op is None:
        op = MassOperator(lay, state.rho, "vector", params.cg_rtol, params.cg_maxiter)
    f = fields or grid_fields(lay, state.a, state.b, state.c)
    conv = np.sum(f.grad_u * f.u[None], axis=1)
    g = state.rho * (f.mu - _psi_prime(f.phi, params))
    grid = -state.rho * conv + g * f.grad_phi
    fu, _ = _forcing(params, state.t)
    if fu is not None:
        grid = grid + fu
    F = forward_transform(lay, grid)
    if params.stress:
        T = cst.stress_tensor(f.Du, f.phi, params.p, params.law)
        F = F + tensor_divergence(lay, T)
    return op.solve(project_solenoidal(lay, F))


def phase_rhs(state: SimState, params: Params, op: MassOperator | None = None,
              fields: Fields | None = None):
    """``db/dt`` from the order-parameter equation (``c`` must match ``b``)."""
    lay = state.layout
    if op is None:
        op = MassOperator(lay, state.rho, "scalar", params.cg_rtol, params.cg_maxiter)
    f = fields or grid_fields(lay, state.a, state.b, state.c)
    grid = -state.rho * np.sum(f.u * f.grad_phi, axis=0)
    _, fphi = _forcing(params, state.t)
    if fphi is not None:
        grid = grid + fphi
    rhs = project_scalar(lay, forward_transform(lay, grid)) - stiffness(lay) * state.c
    return op.solve(rhs)


def full_momentum_force(state: SimState, params: Params):
    """Dealiased, unprojected momentum forcing ``F`` (no time-derivative term)."""
    lay = state.layout
    f = grid_fields(lay, state.a, state.b, state.c)
    conv = np.sum(f.grad_u * f.u[None], axis=1)
    g = state.rho * (f.mu - _psi_prime(f.phi, params))
    F = forward_transform(lay, -state.rho * conv + g * f.grad_phi)
    if params.stress:
        T = cst.stress_tensor(f.Du, f.phi, params.p, params.law)
        F = F + tensor_divergence(lay, T)
    return lay.mask * F


def pressure_from_force(layout, F):
    """Pressure coefficients with ``grad P`` the curl-free part of ``F``; mean zero."""
    return -1j * np.sum(layout.k * F, axis=0) * layout.inv_k2


def helmholtz_residual(layout, F):
    """``|F - grad P - leray(F)| / |F|`` for the pressure recovered from ``F``."""
    P = pressure_from_force(layout, F)
    r = F - 1j * layout.k * P[None] - leray_project(layout, F)
    scale = layout.norm(F)
    return layout.norm(r) / scale if scale > 0 else layout.norm(r)


def recover_pressure(state: SimState, params: Params):
    """Grid values of the pressure of the current state."""
    P = pressure_from_force(state.layout, full_momentum_force(state, params))
    return inverse_transform(state.layout, P)
