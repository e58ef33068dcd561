import numpy as np
import pytest

from nsch.constitutive import ViscosityLaw
from nsch.galerkin import PreconditionError
from nsch.oracle import (
    OracleError,
    RealBasis,
    certify,
    compare,
    dense_assemble,
    dense_rates,
    dense_step,
    dense_objects,
    fast_objects,
)
from nsch.spectral import SpectralLayout, inverse_transform
from nsch.state import Params, SimState

from conftest import random_state

SMALL = SpectralLayout(2, 16, 2)


def _uniform(layout, rho0=1.0, b=None, a=None):
    z = np.zeros(layout.shape, complex)
    return SimState(layout, np.full(layout.shape, rho0),
                    np.zeros((layout.dim,) + layout.shape, complex) if a is None else a,
                    z.copy() if b is None else b, z.copy(), 0.0, (rho0, rho0))


def test_basis_round_trip_and_sizes(rng, params):
    basis = RealBasis(SMALL)
    assert basis.n_scalar == 25 and basis.n_vector == 24
    s = random_state(SMALL, params, rng)
    mask = SMALL.mask
    assert np.allclose(basis.scalar_from_real(basis.scalar_to_real(s.b)), s.b * mask, atol=1e-15)
    a = s.a * SMALL.vmask
    assert np.allclose(basis.vector_from_real(basis.vector_to_real(a)), a, atol=1e-15)


def test_basis_rejects_large_cutoff():
    with pytest.raises(OracleError):
        RealBasis(SpectralLayout(2, 16, 4))


def test_unit_density_gives_identity_mass():
    D = dense_assemble(_uniform(SMALL), Params(stress=False))
    assert np.allclose(D.M1, np.eye(D.M1.shape[0]), atol=1e-14)
    assert np.allclose(D.M2, np.eye(D.M2.shape[0]), atol=1e-14)


def test_stiffness_is_wavenumber_squared():
    D = dense_assemble(_uniform(SMALL), Params(stress=False))
    ks = [float(np.sum(k.astype(float) ** 2)) for k, _ in D.basis.scalar_modes]
    assert np.allclose(np.diag(D.L4), ks, atol=1e-13)


def test_constant_phase_has_no_coupling(rng, params):
    s = random_state(SMALL, params, rng)
    b = np.zeros(SMALL.shape, complex)
    b[0, 0] = 0.3
    D = dense_assemble(s.replace(b=b), params)
    for M in (D.L2, D.L3, D.F1):
        assert np.max(np.abs(M)) < 1e-14


def test_coupling_matrices_are_negative_transposes(rng, params):
    s = random_state(SMALL, params, rng)
    D = dense_assemble(s, Params(stress=False))
    assert np.allclose(D.L3, -D.L2.T, atol=1e-14)


def test_mass_spectrum_within_density_range(rng, params):
    s = random_state(SMALL, params, rng)
    D = dense_assemble(s, Params(stress=False))
    for M in (D.M1, D.M2):
        ev = np.linalg.eigvalsh(M)
        assert s.rho.min() - 1e-12 <= ev.min() and ev.max() <= s.rho.max() + 1e-12


def test_quadrature_grid_too_small_is_refused(rng, params):
    s = random_state(SMALL, params, rng)
    with pytest.raises(PreconditionError):
        dense_assemble(s, params, quad_n=9)
    with pytest.raises(PreconditionError):
        dense_assemble(s, params, quad_n=18)


def test_certification_passes_on_a_random_state(rng, params):
    lay = SpectralLayout(2, 64, 2)
    s = random_state(lay, params, rng)
    cmp = certify(s, params)
    assert cmp.ok, list(cmp.lines())


def test_comparison_reports_perturbed_object(rng, params):
    s = random_state(SMALL, params, rng)
    p = Params(stress=False)
    D = dense_assemble(s, p)
    fast = fast_objects(s, p, D.basis)
    fast["M2"] = fast["M2"].copy()
    fast["M2"][3, 3] += 1e-6
    cmp = compare(fast, dense_objects(D))
    assert not cmp.ok
    assert max(cmp.discrepancy, key=cmp.discrepancy.get) == "M2"
    assert any("M2" in line and "FAIL" in line for line in cmp.lines())


def test_rest_state_has_zero_rates():
    b = np.zeros(SMALL.shape, complex)
    b[0, 0] = 1.0
    _, da, db = dense_rates(_uniform(SMALL, 1.7, b=b), Params())
    assert np.max(np.abs(da)) < 1e-14 and np.max(np.abs(db)) < 1e-14


def test_linearised_phase_decay():
    # rho = rho0, u = 0 and tiny phi = eps cos(2x): rate -(k^4/rho0^2 - k^2/rho0)
    rho0, eps = 2.0, 1e-6
    x, _ = SMALL.x
    b = np.zeros(SMALL.shape, complex)
    b[2, 0] = b[-2, 0] = eps / 2
    s = _uniform(SMALL, rho0, b=b)
    p = Params(law=ViscosityLaw.constant(1.0))
    dt, n = 0.01, 10
    for _ in range(n):
        s = dense_step(s, dt, p)
    rate = 16 / rho0 ** 2 - 4 / rho0
    phi = inverse_transform(SMALL, s.b)
    want = eps * np.exp(-rate * n * dt) * np.cos(2 * x)
    assert np.max(np.abs(phi - want)) <= 1e-8 * eps
