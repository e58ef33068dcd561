"""Manufactured smooth solutions with symbolic forcing.

The density is a constant ``rho0`` (transport keeps it so), the velocity
is the curl of a stream function and the order parameter is an arbitrary
smooth field.  Both contain ``exp(sin x)``-type factors, which are not
band-limited, so the Galerkin truncation error is visible and decays
spectrally with ``m_cut``.  The forcing that makes the fields exact is
derived with sympy and returned as grid values through ``Params.forcing``.
"""
from __future__ import annotations

from dataclasses import replace

import numpy as np
import sympy as sp

from .presets import make_state
from .spectral import SpectralLayout, inverse_transform
from .state import Params, SimState


class Manufactured:
    """Exact solution and forcing for the constant-density system.

    ``amp_u`` and ``amp_phi`` scale the velocity and order parameter; the
    velocity decays like ``exp(-t)`` and the order parameter oscillates
    like ``cos(t)``.
    """

    def __init__(self, dim: int, params: Params, rho0: float = 1.0,
                 amp_u: float = 0.2, amp_phi: float = 0.5):
        if dim not in (2, 3):
            raise ValueError("dim must be 2 or 3")
        self.dim = dim
        self.params = params
        self.rho0 = float(rho0)
        t = sp.Symbol("t")
        X = sp.symbols("x0:%d" % dim)
        self._t, self._X = t, X
        z = sp.sin(X[2]) if dim == 3 else sp.Integer(1)
        psi = sp.exp(sp.sin(X[0])) * sp.sin(X[1]) * z
        g = amp_u * sp.exp(-t)
        u = [g * sp.diff(psi, X[1]), -g * sp.diff(psi, X[0])]
        if dim == 3:
            u.append(sp.Integer(0))
        phi = amp_phi * sp.cos(t) * sp.exp(sp.cos(X[0] + X[1])) * (1 + sp.Rational(1, 2) * z)
        self._u, self._phi = u, phi
        self._build_forcing()

    def _build_forcing(self):
        t, X, u, phi = self._t, self._X, self._u, self._phi
        rho = sp.Float(self.rho0)
        d = self.dim
        par = self.params
        lap = lambda f: sum(sp.diff(f, xi, 2) for xi in X)
        psi_p = phi ** 3 - phi if par.potential else sp.Integer(0)
        mu = (-lap(phi) + rho * psi_p) / rho
        f_phi = rho * (sp.diff(phi, t) + sum(u[i] * sp.diff(phi, X[i]) for i in range(d))) - lap(mu)
        D = [[(sp.diff(u[i], X[j]) + sp.diff(u[j], X[i])) / 2 for j in range(d)] for i in range(d)]
        q = sum(D[i][j] ** 2 for i in range(d) for j in range(d))
        if par.stress:
            law = par.law
            if law.nu_upper == law.nu_star:
                nu = sp.Float(law.nu_star)
            else:
                nu = law.nu_star + (law.nu_upper - law.nu_star) / (1 + sp.exp(-law.shape * phi))
            fac = nu * (1 + q) ** ((sp.Float(par.p) - 2) / 2)
        else:
            fac = sp.Integer(0)
        f_u = []
        for i in range(d):
            acc = rho * (sp.diff(u[i], t) + sum(u[j] * sp.diff(u[i], X[j]) for j in range(d)))
            div_T = sum(sp.diff(fac * D[i][j], X[j]) for j in range(d))
            cap = rho * (mu - psi_p) * sp.diff(phi, X[i])
            f_u.append(acc - div_T - cap)
        args = (t,) + X
        self._f_u = [sp.lambdify(args, f, "numpy", cse=True) for f in f_u]
        self._f_phi = sp.lambdify(args, f_phi, "numpy", cse=True)
        self._u_num = [sp.lambdify(args, f, "numpy", cse=True) for f in u]
        self._phi_num = sp.lambdify(args, phi, "numpy", cse=True)

    @staticmethod
    def _full(val, shape):
        return np.broadcast_to(np.asarray(val, dtype=float), shape).copy()

    def velocity(self, layout: SpectralLayout, t: float):
        xs = tuple(layout.x)
        return np.array([self._full(f(t, *xs), layout.shape) for f in self._u_num])

    def phase(self, layout: SpectralLayout, t: float):
        return self._full(self._phi_num(t, *layout.x), layout.shape)

    def forcing(self, layout: SpectralLayout):
        """Callable ``t -> (f_u, f_phi)`` of grid values for ``Params.forcing``."""
        xs = tuple(layout.x)

        def f(t):
            fu = np.array([self._full(g(t, *xs), layout.shape) for g in self._f_u])
            return fu, self._full(self._f_phi(t, *xs), layout.shape)

        return f

    def forced_params(self, layout: SpectralLayout) -> Params:
        return replace(self.params, forcing=self.forcing(layout))

    def initial_state(self, layout: SpectralLayout, t: float = 0.0) -> SimState:
        if layout.dim != self.dim:
            raise ValueError("layout dimension differs from the manufactured solution")
        rho = np.full(layout.shape, self.rho0)
        return make_state(layout, rho, self.velocity(layout, t), self.phase(layout, t),
                          self.forced_params(layout), t=t, mollify=False)

    def errors(self, state: SimState):
        """Relative L2 errors ``(u, phi)`` of ``state`` against the exact fields."""
        lay = state.layout
        ue = self.velocity(lay, state.t)
        pe = self.phase(lay, state.t)
        u = inverse_transform(lay, state.a)
        phi = inverse_transform(lay, state.b)
        eu = np.sqrt(lay.integrate(np.sum((u - ue) ** 2, 0)) / lay.integrate(np.sum(ue ** 2, 0)))
        ep = np.sqrt(lay.integrate((phi - pe) ** 2) / lay.integrate(pe ** 2))
        return float(eu), float(ep)
