"""Simulation state and physical parameters."""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Callable, Optional

import numpy as np

from .constitutive import ConfigurationError, ViscosityLaw, check_exponent, theory_regime
from .spectral import SpectralLayout


@dataclass(frozen=True)
class Params:
    """Physical parameters and solver tolerances.

    ``potential`` and ``stress`` switch the double-well and viscous terms off
    (test hooks).  ``forcing(t)`` may return grid-valued body forces
    ``(f_u, f_phi)`` added to the momentum and phase equations.
    """

    p: float = 2.8
    law: ViscosityLaw = field(default_factory=ViscosityLaw)
    delta: float = 0.05
    rho_star: float = 1.0
    cg_rtol: float = 1e-12
    cg_maxiter: int = 1000
    potential: bool = True
    stress: bool = True
    forcing: Optional[Callable] = None
    split: bool = False

    def __post_init__(self):
        check_exponent(self.p)
        if not self.delta > 0:
            raise ConfigurationError(f"delta must be > 0, got {self.delta}")
        if not self.rho_star > 0:
            raise ConfigurationError(f"rho_star must be > 0, got {self.rho_star}")

    @property
    def regime(self) -> str:
        return theory_regime(self.p)


@dataclass(frozen=True, eq=False)
class SimState:
    """Density on the grid plus Fourier coefficients of ``u``, ``phi``, ``mu``.

    ``a`` has shape ``(dim, *layout.shape)`` and lives on solenoidal retained
    modes with ``k != 0``; ``b`` and ``c`` live on the retained modes.
    ``rho_bounds`` records the extrema of the initial (mollified) density.
    """

    layout: SpectralLayout
    rho: np.ndarray
    a: np.ndarray
    b: np.ndarray
    c: np.ndarray
    t: float = 0.0
    rho_bounds: tuple = (0.0, np.inf)

    def replace(self, **kw) -> "SimState":
        return replace(self, **kw)

    def is_finite(self) -> bool:
        return bool(np.all(np.isfinite(self.rho)) and np.all(np.isfinite(self.a))
                    and np.all(np.isfinite(self.b)) and np.all(np.isfinite(self.c)))

    def copy(self) -> "SimState":
        return replace(self, rho=self.rho.copy(), a=self.a.copy(),
                       b=self.b.copy(), c=self.c.copy())
