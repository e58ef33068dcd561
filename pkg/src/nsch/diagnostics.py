"""Energy ledger, conservation checks and a-priori norm tracks."""
from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

from . import constitutive as cst
from .density import density_bounds
from .galerkin import grid_fields, mu_residual
from .spectral import inverse_transform
from .state import Params, SimState


@dataclass(frozen=True)
class EnergyLedger:
    t: float
    E_kin: float
    E_int: float
    E_pot: float
    D_visc: float
    D_chem: float
    # integral of rho Psi'(phi), kept for comparison only; not part of E
    E_pot_prime: float = 0.0

    @property
    def total(self) -> float:
        return self.E_kin + self.E_int + self.E_pot

    @property
    def dissipation(self) -> float:
        return self.D_visc + self.D_chem

    def as_dict(self):
        d = asdict(self)
        d["E_total"] = self.total
        return d


def energy(state: SimState, params: Params) -> EnergyLedger:
    lay = state.layout
    f = grid_fields(lay, state.a, state.b, state.c)
    rho = state.rho
    E_kin = 0.5 * lay.integrate(rho * np.sum(f.u * f.u, axis=0))
    E_int = 0.5 * lay.inner(lay.deriv * state.b[None], lay.deriv * state.b[None])
    if params.potential:
        E_pot = lay.integrate(rho * cst.landau(f.phi))
        E_pp = lay.integrate(rho * cst.landau_prime(f.phi))
    else:
        E_pot = E_pp = 0.0
    if params.stress:
        D_visc = lay.integrate(cst.dissipation_density(f.Du, f.phi, params.p, params.law))
    else:
        D_visc = 0.0
    D_chem = lay.inner(lay.deriv * state.c[None], lay.deriv * state.c[None])
    return EnergyLedger(state.t, float(E_kin), float(E_int), float(E_pot),
                        float(D_visc), float(D_chem), float(E_pp))


def energy_defect(prev: EnergyLedger, curr: EnergyLedger, dissipation=True) -> float:
    """``E(curr) - E(prev) + trapezoid of the dissipation over the step``."""
    dt = curr.t - prev.t
    d = curr.total - prev.total
    if dissipation:
        d += 0.5 * dt * (prev.dissipation + curr.dissipation)
    return d


def divergence_residual(state: SimState) -> float:
    """``max_k |k . a(k)|`` relative to the coefficient norm."""
    lay = state.layout
    kd = np.abs(np.sum(lay.kint * state.a, axis=0))
    scale = np.sqrt(np.sum(np.abs(state.a) ** 2))
    return float(np.max(kd) / scale) if scale > 0 else float(np.max(kd))


def total_mass(state: SimState) -> float:
    return float(state.layout.integrate(state.rho))


def rho_phi_integral(state: SimState) -> float:
    phi = inverse_transform(state.layout, state.b)
    return float(state.layout.integrate(state.rho * phi))


@dataclass
class InvariantReport:
    t: float
    div_resid: float
    mass_drift: float
    rho_phi_drift: float
    rho_min: float
    rho_max: float
    rho_bounds_ok: bool
    mu_resid: float
    energy_defect: float
    violations: list

    @property
    def ok(self) -> bool:
        return not self.violations


@dataclass(frozen=True)
class Tolerances:
    div: float = 1e-13
    mass: float = 1e-6
    rho_phi: float = 1e-8
    mu: float = 1e-9
    energy: float = np.inf


def invariant_report(prev: SimState | None, curr: SimState, params: Params,
                     reference: SimState | None = None, tol: Tolerances = Tolerances(),
                     ledgers=None) -> InvariantReport:
    """Residuals of ``curr`` against ``reference`` (conservation) and ``prev`` (energy).

    ``reference`` defaults to ``prev``; ``ledgers`` may pass precomputed
    ``(E_prev, E_curr)`` energy ledgers.
    """
    reference = reference or prev or curr
    lay = curr.layout
    div = divergence_residual(curr)
    m0 = total_mass(reference)
    mass_drift = abs(total_mass(curr) - m0) / abs(m0)
    rp0 = rho_phi_integral(reference)
    # the integral itself may vanish (symmetric mixtures); scale by int rho |phi|
    phi0 = inverse_transform(lay, reference.b)
    rp_scale = max(float(lay.integrate(reference.rho * np.abs(phi0))), 1e-300)
    rp_drift = abs(rho_phi_integral(curr) - rp0) / rp_scale
    lo, hi = density_bounds(curr.rho)
    b_lo, b_hi = curr.rho_bounds
    bounds_ok = lo >= b_lo and hi <= b_hi
    res, scale = mu_residual(lay, curr.b, curr.c, curr.rho, params)
    mu_rel = res / scale if scale > 0 else res
    if prev is not None:
        e_prev, e_curr = ledgers or (energy(prev, params), energy(curr, params))
        defect = energy_defect(e_prev, e_curr)
    else:
        defect = 0.0
    bad = []
    if div > tol.div:
        kd = np.abs(np.sum(lay.kint * curr.a, axis=0))
        where = tuple(int(i) for i in np.unravel_index(np.argmax(kd), kd.shape))
        bad.append(f"divergence {div:.3e} at mode index {where}")
    if mass_drift > tol.mass:
        bad.append(f"mass drift {mass_drift:.3e}")
    if rp_drift > tol.rho_phi:
        bad.append(f"rho*phi drift {rp_drift:.3e}")
    if not bounds_ok:
        loc = np.unravel_index(np.argmin(curr.rho) if lo < b_lo else np.argmax(curr.rho),
                               curr.rho.shape)
        bad.append(f"density [{lo:.6g}, {hi:.6g}] outside [{b_lo:.6g}, {b_hi:.6g}] "
                   f"at grid index {tuple(int(i) for i in loc)}")
    if mu_rel > tol.mu:
        bad.append(f"chemical potential residual {mu_rel:.3e}")
    if abs(defect) > tol.energy:
        bad.append(f"energy defect {defect:.3e}")
    return InvariantReport(curr.t, div, mass_drift, rp_drift, lo, hi, bounds_ok,
                           mu_rel, defect, bad)


def norm_tracks(state: SimState, params: Params) -> dict:
    """Instantaneous norms monitored by the uniform a-priori estimates."""
    lay = state.layout
    f = grid_fields(lay, state.a, state.b, state.c)
    rho = state.rho
    p = params.p
    grad_u_abs = np.sqrt(np.sum(f.grad_u * f.grad_u, axis=(0, 1)))
    k2 = lay.k2
    b2 = np.abs(state.b) ** 2
    out = {
        "sqrt_rho_u_L2": float(np.sqrt(lay.integrate(rho * np.sum(f.u * f.u, 0)))),
        "grad_u_Lp": float(lay.integrate(grad_u_abs ** p) ** (1.0 / p)),
        "grad_mu_L2": float(np.sqrt(lay.inner(lay.deriv * state.c[None], lay.deriv * state.c[None]))),
        "phi_H2": float(np.sqrt(lay.area * np.sum((1 + k2 + k2 * k2) * b2))),
        "sqrt_rho_mu_L2": float(np.sqrt(lay.integrate(rho * f.mu * f.mu))),
        "sqrt_rho_phi_L2": float(np.sqrt(lay.integrate(rho * f.phi * f.phi))),
        "dissipation": float(lay.integrate(cst.dissipation_density(f.Du, f.phi, p, params.law)))
        if params.stress else 0.0,
    }
    return out
