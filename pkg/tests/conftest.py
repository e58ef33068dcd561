import numpy as np
import pytest

from nsch.constitutive import ViscosityLaw
from nsch.spectral import SpectralLayout, inverse_transform
from nsch.state import Params, SimState
from nsch.galerkin import chemical_potential_solve, project_solenoidal

ACCEPTANCE = []


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for line in ACCEPTANCE:
        terminalreporter.write_line(line)


@pytest.fixture
def record():
    """Record one PASS/FAIL line for the acceptance summary."""

    def _record(number, name, ok, detail=""):
        line = f"criterion {number:>3}: {'PASS' if ok else 'FAIL'}  {name}  {detail}".rstrip()
        ACCEPTANCE.append(line)
        print(line)
        return ok

    return _record


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def layout():
    return SpectralLayout(2, 32)


@pytest.fixture
def params():
    return Params(p=2.8, law=ViscosityLaw(0.5, 1.5, 1.0), delta=0.1, rho_star=2.0)


def random_state(layout, params, rng, rho_amp=0.4, u_amp=0.5, phi_amp=0.8, band=None):
    """Random band-limited state with a positive smooth density."""
    rho = 1.5 + inverse_transform(layout, layout.random_coeffs(rng, amplitude=rho_amp, band=band or 3))
    a = project_solenoidal(layout, layout.random_coeffs(rng, 1, amplitude=u_amp))
    b = layout.random_coeffs(rng, amplitude=phi_amp)
    c = chemical_potential_solve(layout, b, rho, params)
    return SimState(layout, rho, a, b, c, 0.0, (float(rho.min()), float(rho.max())))
