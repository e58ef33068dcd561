"""Spectral convergence against a manufactured solution.

The exact fields carry exp(sin x) factors, so they are not band-limited
and the Galerkin error falls off geometrically with the cutoff.  Each grid
runs a few steps at its own stable dt; the time error is far below the
truncation error on these grids.
"""
from nsch.constitutive import ViscosityLaw
from nsch.integrator import StepControls, run, stable_dt
from nsch.manufactured import Manufactured
from nsch.spectral import SpectralLayout
from nsch.state import Params

if __name__ == "__main__":
    mm = Manufactured(2, Params(p=2.8, law=ViscosityLaw(0.5, 1.5, 1.0)))
    prev = None
    for n in (8, 12, 16, 24, 32):
        lay = SpectralLayout(2, n)
        s0 = mm.initial_state(lay)
        fp = mm.forced_params(lay)
        dt = stable_dt(s0, fp, StepControls(cfl_diff=1.0))
        res = run(s0, fp, StepControls(dt=dt, t_end=4 * dt))
        eu, ep = mm.errors(res.state)
        drop = f"  drop {prev / ep:8.1f}x" if prev else ""
        print(f"n_grid={n:3d} m_cut={lay.m_cut:2d}  err_u={eu:.3e}  err_phi={ep:.3e}{drop}")
        prev = ep
