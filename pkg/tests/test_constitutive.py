import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from nsch import constitutive as cst
from nsch.constitutive import ConfigurationError, ViscosityLaw


def test_landau_wells_and_barrier():
    assert cst.landau(np.array([1.0, -1.0])).tolist() == [0.0, 0.0]
    assert cst.landau(0.0) == 0.25
    assert cst.landau_prime(np.array([1.0, -1.0, 0.0])).tolist() == [0.0, 0.0, 0.0]


@pytest.mark.parametrize("s", [-1.7, -0.3, 0.4, 2.1])
def test_landau_derivatives_by_central_differences(s):
    h = 1e-5
    fd1 = (cst.landau(s + h) - cst.landau(s - h)) / (2 * h)
    fd2 = (cst.landau_prime(s + h) - cst.landau_prime(s - h)) / (2 * h)
    assert cst.landau_prime(s) == pytest.approx(fd1, rel=1e-8, abs=1e-10)
    assert cst.landau_second(s) == pytest.approx(fd2, rel=1e-8, abs=1e-10)


def test_viscosity_bounds_and_limits():
    law = ViscosityLaw(0.5, 1.5, 3.0)
    s = np.linspace(-50, 50, 101)
    nu = law(s)
    assert np.all(nu >= 0.5) and np.all(nu <= 1.5)
    assert nu[0] == pytest.approx(0.5) and nu[-1] == pytest.approx(1.5)
    assert np.all(np.diff(nu) >= 0)
    assert law(0.0) == pytest.approx(1.0)


def test_viscosity_lipschitz_bound():
    law = ViscosityLaw(0.5, 1.5, 3.0)
    s = np.linspace(-4, 4, 4001)
    slope = np.max(np.abs(np.diff(law(s)) / np.diff(s)))
    assert slope <= law.lipschitz * (1 + 1e-6)
    assert slope == pytest.approx(law.lipschitz, rel=1e-3)


def test_constant_viscosity():
    law = ViscosityLaw.constant(0.7)
    assert np.all(law(np.array([-3.0, 0.0, 5.0])) == 0.7)


@pytest.mark.parametrize("kw", [dict(nu_star=0.0), dict(nu_star=1.0, nu_upper=0.5)])
def test_viscosity_law_rejects_bad_bounds(kw):
    with pytest.raises(ConfigurationError):
        ViscosityLaw(**kw)


@pytest.mark.parametrize("p,regime", [(2.5, "strong"), (2.8, "strong"), (2.999, "strong"),
                                      (3.0, "weak"), (4.0, "weak"), (2.0, "none"), (1.5, "none")])
def test_theory_regime(p, regime):
    assert cst.theory_regime(p) == regime


def test_exponent_must_exceed_one():
    with pytest.raises(ConfigurationError):
        cst.check_exponent(1.0)


def test_stress_factor():
    assert cst.stress_factor(3.0, 4.0) == pytest.approx(4.0)
    assert np.all(cst.stress_factor(np.array([0.0, 7.0]), 2.0) == 1.0)
    with pytest.raises(ValueError):
        cst.stress_factor(-1e-3, 2.8)


def _sym(rng, shape=(5,)):
    A = rng.standard_normal((2, 2) + shape)
    return 0.5 * (A + np.swapaxes(A, 0, 1))


def test_newtonian_stress_is_linear(rng):
    law = ViscosityLaw(1.0, 2.0, 1.0)
    Du, phi = _sym(rng), rng.standard_normal(5)
    T = cst.stress_tensor(Du, phi, 2.0, law)
    assert np.allclose(T, law(phi) * Du, rtol=1e-15, atol=0)


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 2 ** 32 - 1), p=st.floats(1.5, 4.0))
def test_stress_is_monotone(seed, p):
    # (T(A) - T(B)) : (A - B) >= 0 pointwise for fixed phi
    rng = np.random.default_rng(seed)
    law = ViscosityLaw(0.5, 1.5, 1.0)
    A, B, phi = _sym(rng), _sym(rng), rng.standard_normal(5)
    dT = cst.stress_tensor(A, phi, p, law) - cst.stress_tensor(B, phi, p, law)
    assert np.all(np.sum(dT * (A - B), axis=(0, 1)) >= -1e-12)


def test_dissipation_matches_stress_contraction(rng):
    law = ViscosityLaw(0.5, 1.5, 1.0)
    Du, phi = _sym(rng), rng.standard_normal(5)
    T = cst.stress_tensor(Du, phi, 2.8, law)
    d = cst.dissipation_density(Du, phi, 2.8, law)
    assert np.allclose(d, np.sum(T * Du, axis=(0, 1)), rtol=1e-14)
    assert np.all(d >= 0)


def test_dissipation_power_law_growth():
    # |Du| large: dissipation ~ nu |Du|^p
    law = ViscosityLaw.constant(1.0)
    Du = np.zeros((2, 2, 1))
    Du[0, 1] = Du[1, 0] = 1e3 / np.sqrt(2)
    d = cst.dissipation_density(Du, np.zeros(1), 2.8, law)[0]
    assert d / 1e3 ** 2.8 == pytest.approx(1.0, rel=1e-5)
