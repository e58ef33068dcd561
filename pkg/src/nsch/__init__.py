"""Variable-density Navier-Stokes-Cahn-Hilliard flow with power-law viscosity.

Fourier pseudo-spectral semi-Galerkin discretisation on periodic boxes:
velocity and order parameter are expanded in truncated Fourier bases,
the density is transported along characteristics, and the resulting ODE
system (with density-dependent mass matrices) is advanced by Heun's method.
"""
from .constitutive import ConfigurationError, ViscosityLaw
from .spectral import SpectralLayout
from .state import Params, SimState

__all__ = ["ConfigurationError", "Params", "SimState", "SpectralLayout", "ViscosityLaw"]
__version__ = "0.1.0"
