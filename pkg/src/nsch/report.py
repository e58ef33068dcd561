"""Per-step monitoring and the diagnostics CSV."""
from __future__ import annotations

import csv
import io
import math

import numpy as np

from . import diagnostics as dg
from .state import Params, SimState

NORM_COLUMNS = ("sqrt_rho_u_L2", "grad_u_Lp", "grad_mu_L2", "phi_H2",
                "sqrt_rho_mu_L2", "sqrt_rho_phi_L2", "dissipation")
COLUMNS = ("step", "t", "dt", "E_kin", "E_int", "E_pot", "E_total", "D_visc", "D_chem",
           "energy_defect", "mass_drift", "rho_phi_drift", "rho_min", "rho_max",
           "div_resid", "mu_resid") + NORM_COLUMNS


class Monitor:
    """Run callback that checks invariants every step and keeps CSV rows.

    The energy defect column is cumulative since the first row.  With
    ``forced`` set (manufactured runs) the energy, mass-weighted phase
    and monotonicity checks are skipped since body forces do work.
    """

    def __init__(self, params: Params, cadence: int = 1, tol: dg.Tolerances = dg.Tolerances(),
                 forced: bool = False, energy_slack: float = 1e-12):
        self.params = params
        self.cadence = cadence
        self.tol = tol
        self.forced = forced
        self.energy_slack = energy_slack
        self.rows = []
        self.violations = []
        self.ceilings = {k: 0.0 for k in NORM_COLUMNS}
        self.reference = None
        self.ledger = None
        self.cum_defect = 0.0
        self.max_increase = -math.inf
        self.rho_range = (math.inf, -math.inf)
        self.worst = {"div_resid": 0.0, "mass_drift": 0.0, "rho_phi_drift": 0.0, "mu_resid": 0.0}
        self.last_step = -1

    def __call__(self, n, prev: SimState | None, state: SimState, dt: float):
        led = dg.energy(state, self.params)
        if prev is None:
            self.reference = state
            rep = dg.invariant_report(None, state, self.params, tol=self._tol())
        else:
            rep = dg.invariant_report(prev, state, self.params, reference=self.reference,
                                      tol=self._tol(), ledgers=(self.ledger, led))
            self.cum_defect += rep.energy_defect
            inc = led.total - self.ledger.total
            self.max_increase = max(self.max_increase, inc)
            if not self.forced and inc > abs(rep.energy_defect) + self.energy_slack * abs(led.total):
                self.violations.append(f"step {n}: energy increased by {inc:.3e}")
        self.violations.extend(f"step {n}: {v}" for v in rep.violations)
        self.ledger = led
        self.rho_range = (min(self.rho_range[0], rep.rho_min), max(self.rho_range[1], rep.rho_max))
        for k in self.worst:
            self.worst[k] = max(self.worst[k], getattr(rep, k))
        norms = dg.norm_tracks(state, self.params)
        for k in NORM_COLUMNS:
            self.ceilings[k] = max(self.ceilings[k], norms[k])
        if n % self.cadence == 0:
            self._row(n, state, dt, led, rep, norms)

    def _tol(self):
        if not self.forced:
            return self.tol
        return dg.Tolerances(self.tol.div, self.tol.mass, math.inf, self.tol.mu, math.inf)

    def _row(self, n, state, dt, led, rep, norms):
        row = {"step": n, "t": state.t, "dt": dt, "E_kin": led.E_kin, "E_int": led.E_int,
               "E_pot": led.E_pot, "E_total": led.total, "D_visc": led.D_visc,
               "D_chem": led.D_chem, "energy_defect": self.cum_defect,
               "mass_drift": rep.mass_drift, "rho_phi_drift": rep.rho_phi_drift,
               "rho_min": rep.rho_min, "rho_max": rep.rho_max, "div_resid": rep.div_resid,
               "mu_resid": rep.mu_resid}
        row.update({k: norms[k] for k in NORM_COLUMNS})
        self.rows.append(row)
        self.last_step = n

    def finish(self, n, state: SimState, dt: float):
        """Add a row for the final state if the cadence skipped it."""
        if n != self.last_step and self.ledger is not None:
            rep = dg.invariant_report(None, state, self.params, reference=self.reference,
                                      tol=self._tol())
            self._row(n, state, dt, self.ledger, rep, dg.norm_tracks(state, self.params))


def _cell(v):
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return repr(float(v))


def csv_text(rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(COLUMNS)
    for r in rows:
        w.writerow([_cell(r[c]) for c in COLUMNS])
    return buf.getvalue()


def write_csv(rows, path):
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(csv_text(rows))


def read_csv(path):
    """Rows of a diagnostics CSV as dicts of floats."""
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        return [{k: float(v) for k, v in r.items()} for r in reader]


def columnar(rows, columns=None) -> str:
    """Whitespace-aligned plain-text columns with a ``#`` header line."""
    if not rows:
        return ""
    columns = list(columns or rows[0].keys())
    missing = [c for c in columns if c not in rows[0]]
    if missing:
        raise KeyError(f"unknown column(s): {', '.join(missing)}")
    lines = ["# " + " ".join(f"{c:>22s}" for c in columns)]
    for r in rows:
        lines.append("  " + " ".join(f"{r[c]:22.15e}" for c in columns))
    return "\n".join(lines) + "\n"
