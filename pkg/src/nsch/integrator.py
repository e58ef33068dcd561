"""Explicit Heun time stepping of the coupled system."""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from . import constitutive as cst
from .density import NumericError, advect_density
from .galerkin import (
    MassOperator,
    chemical_potential_solve,
    grid_fields,
    momentum_rhs,
    phase_rhs,
    SolverError,
)
from .spectral import inverse_transform
from .state import Params, SimState

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class StepControls:
    dt: Optional[float] = None
    cfl_adv: float = 0.5
    cfl_diff: float = 0.25
    t_end: float = 0.0
    max_steps: int = 10 ** 9

    def __post_init__(self):
        for name in ("cfl_adv", "cfl_diff"):
            v = getattr(self, name)
            if not 0 < v <= 1:
                raise ValueError(f"{name} must lie in (0, 1], got {v}")
        if self.dt is not None and not self.dt > 0:
            raise ValueError(f"dt must be > 0, got {self.dt}")


class BlowUpError(FloatingPointError):
    """A step produced non-finite values; ``last_state`` is the last good one."""

    def __init__(self, message, last_state=None):
        super().__init__(message)
        self.last_state = last_state


def stable_dt(state: SimState, params: Params, controls: StepControls = StepControls()):
    """Explicit stability limit for the Heun stepper.

    ``h = 1/|k|_max`` is the finest resolved length.  The fourth-order
    Cahn-Hilliard term scales like ``|k|^4 / rho^2`` and the viscous term
    like ``nu |k|^2 / rho``, so

        dt = min(cfl_adv h / max|u|, cfl_diff h^4 rho_min^2, cfl_diff h^2 rho_min / nu_eff)
    """
    if not state.is_finite():
        raise NumericError("non-finite state")
    lay = state.layout
    h = lay.resolved_spacing
    rho_min = float(np.min(state.rho))
    rho_max = float(np.max(state.rho))
    u = inverse_transform(lay, state.a)
    umax = float(np.max(np.sqrt(np.sum(u * u, axis=0))))
    dt_adv = controls.cfl_adv * h / max(umax, 1e-12)
    if params.split:
        kappa = split_kappa(state.rho)
        stiff = max(abs(1 / rho_min ** 2 - kappa), abs(1 / rho_max ** 2 - kappa), 1e-12)
        dt_diff = controls.cfl_diff * h ** 4 / stiff
    else:
        dt_diff = controls.cfl_diff * h ** 4 * rho_min ** 2
    dt = min(dt_adv, dt_diff)
    if params.stress:
        Du = grid_fields(lay, state.a, state.b, state.c).Du
        q = float(np.max(cst.strain_norm2(Du)))
        slope = max(1.0, params.p - 1.0) * max(1.0, (1 + q) ** (0.5 * (params.p - 2)))
        nu_eff = params.law.nu_upper * slope
        dt = min(dt, controls.cfl_diff * h ** 2 * rho_min / nu_eff)
    return dt


def split_kappa(rho):
    return 1.0 / float(np.mean(rho)) ** 2


def _rates(state: SimState, params: Params):
    lay = state.layout
    ops = MassOperator(lay, state.rho, "scalar", params.cg_rtol, params.cg_maxiter)
    c = chemical_potential_solve(lay, state.b, state.rho, params, ops)
    state = state.replace(c=c)
    opv = MassOperator(lay, state.rho, "vector", params.cg_rtol, params.cg_maxiter)
    f = grid_fields(lay, state.a, state.b, c)
    da = momentum_rhs(state, params, opv, f)
    db = phase_rhs(state, params, ops, f)
    return c, da, db


def with_potential(state: SimState, params: Params) -> SimState:
    """Return ``state`` with ``c`` recomputed from ``b`` and ``rho``."""
    c = chemical_potential_solve(state.layout, state.b, state.rho, params)
    return state.replace(c=c)


def step(state: SimState, dt: float, params: Params) -> SimState:
    """Advance one Heun step.

    Density first: each stage uses the density advected to its own time
    and the chemical potential solved from its own order parameter.  The
    final density is advected with the time-centred velocity.
    """
    lay = state.layout
    _, ka, kb = _rates(state, params)
    if params.split:
        E = np.exp(-split_kappa(state.rho) * lay.k2 ** 2 * dt) * lay.mask
        L = -split_kappa(state.rho) * lay.k2 ** 2
        kb_r = kb - L * state.b
        b_star = E * (state.b + dt * kb_r)
    else:
        b_star = state.b + dt * kb
    a_star = state.a + dt * ka
    rho_star = advect_density(lay, state.rho, state.a, a_star, dt)
    stage = state.replace(rho=rho_star, a=a_star, b=b_star, t=state.t + dt)
    _, ka2, kb2 = _rates(stage, params)
    a_new = state.a + 0.5 * dt * (ka + ka2)
    if params.split:
        b_new = E * (state.b + 0.5 * dt * kb_r) + 0.5 * dt * (kb2 - L * b_star)
    else:
        b_new = state.b + 0.5 * dt * (kb + kb2)
    rho_new = advect_density(lay, state.rho, state.a, a_new, dt)
    new = state.replace(rho=rho_new, a=a_new, b=b_new, t=state.t + dt)
    new = with_potential(new, params)
    if not new.is_finite():
        raise BlowUpError(f"non-finite values at t={new.t:.6g}", state)
    return new


@dataclass
class StepRecord:
    step: int
    t: float
    dt: float


@dataclass
class RunResult:
    state: SimState
    log: list = field(default_factory=list)
    blowup: Optional[str] = None
    last_valid: Optional[SimState] = None


def run(state0: SimState, params: Params, controls: StepControls,
        callbacks: Optional[list] = None, cadence: int = 1) -> RunResult:
    """Step until ``t_end`` or ``max_steps``.

    Each callback is called as ``cb(step_index, prev_state, state, dt)``
    every ``cadence`` steps (and once at step 0 with ``prev_state=None``).
    A blow-up stops the run and is reported in the result instead of
    raising.
    """
    callbacks = callbacks or []
    state = state0
    if not np.any(state.c) and np.any(state.b):
        state = with_potential(state, params)
    result = RunResult(state)
    for cb in callbacks:
        cb(0, None, state, 0.0)
    n = 0
    eps = 1e-12 * max(1.0, abs(controls.t_end)) if np.isfinite(controls.t_end) else 0.0
    while state.t < controls.t_end - eps and n < controls.max_steps:
        dt = controls.dt if controls.dt is not None else stable_dt(state, params, controls)
        dt = min(dt, controls.t_end - state.t)
        try:
            new = step(state, dt, params)
        except (BlowUpError, NumericError, SolverError) as exc:
            log.warning("run stopped at t=%.6g: %s", state.t, exc)
            result.blowup = str(exc)
            result.last_valid = state
            break
        n += 1
        result.log.append(StepRecord(n, new.t, dt))
        if n % cadence == 0:
            for cb in callbacks:
                cb(n, state, new, dt)
        state = new
    result.state = state
    return result
