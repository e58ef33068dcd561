"""Pointwise material laws: double-well potential, bounded viscosity, power-law stress."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import expit


class ConfigurationError(ValueError):
    pass


def landau(s):
    """Double-well potential ``(s^2 - 1)^2 / 4``."""
    s = np.asarray(s, dtype=float)
    return 0.25 * (s * s - 1.0) ** 2


def landau_prime(s):
    s = np.asarray(s, dtype=float)
    return s * s * s - s


def landau_second(s):
    s = np.asarray(s, dtype=float)
    return 3.0 * s * s - 1.0


@dataclass(frozen=True)
class ViscosityLaw:
    """Logistic profile between ``nu_star`` and ``nu_upper``.

    ``nu(s) = nu_star + (nu_upper - nu_star) * sigmoid(shape * s)``; equal
    bounds give a constant viscosity.
    """

    nu_star: float = 1.0
    nu_upper: float = 1.0
    shape: float = 1.0

    def __post_init__(self):
        if not self.nu_star > 0:
            raise ConfigurationError(f"nu_star must be > 0, got {self.nu_star}")
        if self.nu_upper < self.nu_star:
            raise ConfigurationError(
                f"nu_upper ({self.nu_upper}) must be >= nu_star ({self.nu_star})")

    @classmethod
    def constant(cls, nu=1.0):
        return cls(nu, nu, 0.0)

    @property
    def lipschitz(self) -> float:
        return (self.nu_upper - self.nu_star) * abs(self.shape) / 4.0

    def __call__(self, s):
        return viscosity(s, self)


def viscosity(s, law: ViscosityLaw):
    s = np.asarray(s, dtype=float)
    if law.nu_upper == law.nu_star:
        return np.full_like(s, law.nu_star)
    return law.nu_star + (law.nu_upper - law.nu_star) * expit(law.shape * s)


def theory_regime(p: float) -> str:
    """Which existence result covers exponent ``p``.

    ``"strong"`` for ``5/2 <= p < 3`` (local strong solutions on the torus,
    both endpoints accepted), ``"weak"`` for ``p >= 3`` (global weak
    solutions only) and ``"none"`` otherwise, including shear thinning.
    """
    if 2.5 <= p < 3.0:
        return "strong"
    if p >= 3.0:
        return "weak"
    return "none"


def check_exponent(p: float) -> float:
    if not p > 1:
        raise ConfigurationError(f"power-law exponent must satisfy p > 1, got {p}")
    return float(p)


def stress_factor(q, p):
    """``(1 + q)^((p - 2) / 2)`` for ``q = |Du|^2 >= 0``."""
    q = np.asarray(q, dtype=float)
    if np.any(q < 0):
        raise ValueError("stress_factor needs |Du|^2 >= 0")
    if p == 2:
        return np.ones_like(q)
    return (1.0 + q) ** (0.5 * (p - 2.0))


def strain_norm2(Du):
    """Frobenius ``|Du|^2`` of a tensor field with component axes first."""
    return np.sum(Du * Du, axis=(0, 1))


def stress_tensor(Du, phi, p, law: ViscosityLaw):
    """``nu(phi) (1 + |Du|^2)^((p-2)/2) Du`` pointwise."""
    coef = viscosity(phi, law) * stress_factor(strain_norm2(Du), p)
    return coef * Du


def dissipation_density(Du, phi, p, law: ViscosityLaw):
    """``nu(phi) (1 + |Du|^2)^((p-2)/2) |Du|^2``."""
    q = strain_norm2(Du)
    return viscosity(phi, law) * stress_factor(q, p) * q
