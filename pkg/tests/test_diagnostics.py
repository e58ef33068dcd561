import numpy as np
import pytest

from nsch.constitutive import ViscosityLaw
from nsch.diagnostics import (
    EnergyLedger,
    Tolerances,
    divergence_residual,
    energy,
    energy_defect,
    invariant_report,
    norm_tracks,
    rho_phi_integral,
    total_mass,
)
from nsch.spectral import forward_transform
from nsch.state import Params, SimState

PI2 = np.pi ** 2


def _state(layout, rho, u, phi, mu):
    return SimState(layout, rho, forward_transform(layout, u), forward_transform(layout, phi),
                    forward_transform(layout, mu), 0.0, (float(rho.min()), float(rho.max())))


@pytest.fixture
def tg(layout):
    x, y = layout.x
    u = np.array([np.sin(x) * np.cos(y), -np.cos(x) * np.sin(y)])
    return _state(layout, np.ones(layout.shape), u, np.cos(x), np.cos(x))


def test_energy_closed_forms(tg):
    p = Params(p=2.0, law=ViscosityLaw.constant(1.0), potential=False)
    E = energy(tg, p)
    assert E.E_kin == pytest.approx(PI2, rel=1e-13)
    assert E.E_int == pytest.approx(PI2, rel=1e-13)
    assert E.E_pot == 0.0
    assert E.D_visc == pytest.approx(2 * PI2, rel=1e-13)
    assert E.D_chem == pytest.approx(2 * PI2, rel=1e-13)
    assert E.total == pytest.approx(2 * PI2)
    assert E.as_dict()["E_total"] == E.total


def test_potential_energy_at_barrier(layout):
    z = np.zeros(layout.shape)
    s = _state(layout, np.full(layout.shape, 2.0), np.zeros((2,) + layout.shape), z, z)
    E = energy(s, Params())
    # rho Psi(0) = 2 * 1/4 over an area of 4 pi^2
    assert E.E_pot == pytest.approx(2 * PI2, rel=1e-14)
    assert E.E_kin == 0.0 and E.D_visc == 0.0


def test_energy_defect_arithmetic():
    e0 = EnergyLedger(0.0, 1.0, 0.0, 0.0, 2.0, 0.0)
    e1 = EnergyLedger(0.5, 0.0, 0.5, 0.0, 1.0, 1.0)
    # (0.5 - 1.0) + 0.25 * (2 + 2)
    assert energy_defect(e0, e1) == pytest.approx(0.5)
    assert energy_defect(e0, e1, dissipation=False) == pytest.approx(-0.5)


def test_divergence_residual(layout, tg):
    assert divergence_residual(tg) < 1e-15
    x, _ = layout.x
    bad = tg.replace(a=forward_transform(layout, np.array([np.sin(x), 0 * x])))
    assert divergence_residual(bad) > 0.1


def test_mass_and_rho_phi(layout):
    x, y = layout.x
    rho = 2 + np.cos(x)
    s = _state(layout, rho, np.zeros((2,) + layout.shape), np.cos(x), np.zeros(layout.shape))
    assert total_mass(s) == pytest.approx(8 * PI2, rel=1e-14)
    assert rho_phi_integral(s) == pytest.approx(2 * PI2, rel=1e-13)


def test_invariant_report_flags_bound_violation(layout, tg):
    p = Params(potential=False)
    from nsch.galerkin import chemical_potential_solve
    s = tg.replace(c=chemical_potential_solve(layout, tg.b, tg.rho, p))
    good = invariant_report(None, s, p)
    assert good.ok, good.violations
    rho = s.rho.copy()
    rho[3, 4] = 1.5
    bad = invariant_report(s, s.replace(rho=rho), p, tol=Tolerances(mass=1.0, rho_phi=1.0))
    assert not bad.rho_bounds_ok
    assert any("(3, 4)" in v for v in bad.violations)


def test_invariant_report_flags_divergence(layout, tg):
    x, _ = layout.x
    s = tg.replace(a=forward_transform(layout, np.array([np.sin(x), 0 * x])))
    rep = invariant_report(None, s, Params(potential=False), tol=Tolerances(mu=np.inf))
    assert any(v.startswith("divergence") for v in rep.violations)


def test_norm_tracks_closed_forms(tg):
    p = Params(p=2.0, law=ViscosityLaw.constant(1.0), potential=False)
    n = norm_tracks(tg, p)
    assert n["phi_H2"] == pytest.approx(np.sqrt(6 * PI2), rel=1e-13)
    assert n["sqrt_rho_u_L2"] == pytest.approx(np.sqrt(2 * PI2), rel=1e-13)
    assert n["grad_mu_L2"] == pytest.approx(np.sqrt(2 * PI2), rel=1e-13)
    # |grad u|^2 = 2 cos^2 x cos^2 y + 2 sin^2 x sin^2 y integrates to 4 pi^2
    assert n["grad_u_Lp"] == pytest.approx(np.sqrt(4 * PI2), rel=1e-13)
    assert n["dissipation"] == pytest.approx(2 * PI2, rel=1e-13)
