"""Command-line front end: ``nsch run | verify | converge | oracle | pressure | plotdata``."""
from __future__ import annotations

import argparse
import logging
import math
import os
import sys
import time

import numpy as np

from . import checkpoint as ck
from . import diagnostics as dg
from . import integrator as it
from . import oracle, presets
from .config import RunConfig, load_config, serialize, with_overrides
from .density import NumericError
from .galerkin import (
    PreconditionError,
    SolverError,
    chemical_potential_solve,
    full_momentum_force,
    helmholtz_residual,
    pressure_from_force,
    project_solenoidal,
)
from .manufactured import Manufactured
from .report import Monitor, columnar, read_csv, write_csv
from .spectral import SpectralLayout, fft_workers, inverse_transform
from .state import SimState

EXIT_OK = 0
EXIT_USAGE = 2       # invalid arguments or configuration
EXIT_CHECKPOINT = 3  # corrupted or mismatched checkpoint
EXIT_NUMERIC = 4     # blow-up, solver failure
EXIT_VERIFY = 5      # an invariant or certification check failed
EXIT_IO = 6          # file system errors

log = logging.getLogger("nsch")


class CliError(Exception):
    def __init__(self, message, code):
        super().__init__(message)
        self.code = code


def _config(args) -> RunConfig:
    cfg = load_config(args.config) if getattr(args, "config", None) else RunConfig()
    return with_overrides(cfg, seed=getattr(args, "seed", None), out_dir=getattr(args, "out", None),
                          checkpoint_every=getattr(args, "checkpoint_every", None))


def _initial_state(cfg: RunConfig, layout, params):
    if cfg.preset == "manufactured":
        mm = Manufactured(layout.dim, params)
        return mm.initial_state(layout), mm.forced_params(layout), True
    return presets.build(cfg.preset, layout, params, seed=cfg.seed), params, False


# -- run -----------------------------------------------------------------

def cmd_run(args) -> int:
    cfg = _config(args)
    layout = cfg.layout()
    params = cfg.params()
    state, params, forced = _initial_state(cfg, layout, params)
    if args.resume:
        state, head = ck.read_checkpoint(args.resume, layout)
        if head["p"] != cfg.p or head["delta"] != cfg.delta:
            log.warning("checkpoint p=%g delta=%g differ from the config; using the config",
                        head["p"], head["delta"])
        if forced:
            state = state.replace(c=chemical_potential_solve(layout, state.b, state.rho, params))
    os.makedirs(cfg.out_dir, exist_ok=True)
    with open(os.path.join(cfg.out_dir, "config.txt"), "w", encoding="utf-8") as fh:
        fh.write(serialize(cfg))

    monitor = Monitor(params, cfg.cadence, forced=forced)
    every = cfg.checkpoint_every

    def saver(n, prev, s, dt):
        if every and n > 0 and n % every == 0:
            ck.write_checkpoint(s, os.path.join(cfg.out_dir, f"step_{n:07d}.nsch"), cfg.p, cfg.delta)

    controls = it.StepControls(dt=cfg.dt, cfl_adv=cfg.cfl_adv, cfl_diff=cfg.cfl_diff,
                               t_end=cfg.t_end)
    t0 = time.perf_counter()
    result = it.run(state, params, controls, [monitor, saver])
    n = len(result.log)
    monitor.finish(n, result.state, result.log[-1].dt if result.log else 0.0)
    write_csv(monitor.rows, os.path.join(cfg.out_dir, "diagnostics.csv"))
    ck.write_checkpoint(result.state, os.path.join(cfg.out_dir, "final.nsch"), cfg.p, cfg.delta)
    print(f"{n} steps to t={result.state.t:.6g} in {time.perf_counter() - t0:.1f}s "
          f"({cfg.preset}, n_grid={layout.n_grid}, m_cut={layout.m_cut}, regime={params.regime})")
    print(f"energy defect {monitor.cum_defect:.3e}, worst mass drift {monitor.worst['mass_drift']:.3e}, "
          f"rho in [{monitor.rho_range[0]:.6g}, {monitor.rho_range[1]:.6g}]")
    if result.blowup:
        print(f"run stopped: {result.blowup}", file=sys.stderr)
        return EXIT_NUMERIC
    if monitor.violations:
        for v in monitor.violations[:20]:
            print(f"violation: {v}", file=sys.stderr)
        return EXIT_VERIFY
    return EXIT_OK


# -- verify --------------------------------------------------------------

def _verify_cases(quick):
    lay = SpectralLayout(2, 24 if quick else 32)
    base = RunConfig(n_grid=lay.n_grid, p=2.8, nu_star=0.5, nu_upper=1.5, delta=0.1, rho_star=2.0)
    for name in presets.PRESETS:
        yield name, with_overrides(base, preset=name), lay


def cmd_verify(args) -> int:
    steps = args.steps
    failed = 0
    for name, cfg, lay in _verify_cases(args.quick):
        params = cfg.params()
        state, params, forced = _initial_state(cfg, lay, params)
        mon = Monitor(params, cadence=1, forced=forced)
        controls = it.StepControls(t_end=math.inf, max_steps=steps)
        res = it.run(state, params, controls, [mon])
        bad = list(mon.violations)
        if res.blowup:
            bad.append(res.blowup)
        status = "ok" if not bad else "FAIL"
        print(f"{name:20s} {status:4s} steps={len(res.log)} defect={mon.cum_defect:.2e} "
              f"div={mon.worst['div_resid']:.1e} mass={mon.worst['mass_drift']:.1e} "
              f"rho_phi={mon.worst['rho_phi_drift']:.1e} mu={mon.worst['mu_resid']:.1e}")
        for v in bad[:5]:
            print(f"    {v}")
        failed += bool(bad)
    cmp_ok = _oracle_sweep((1, 2), seed=0, verbose=False)
    print(f"{'dense oracle':20s} {'ok' if cmp_ok else 'FAIL'}")
    failed += not cmp_ok
    return EXIT_OK if not failed else EXIT_VERIFY


# -- converge ------------------------------------------------------------

def _richardson_orders(values):
    diffs = [float(np.sqrt(sum(np.sum(np.abs(x - y) ** 2) for x, y in zip(u, v))))
             for u, v in zip(values[:-1], values[1:])]
    orders = [math.log2(d0 / d1) if d1 > 0 and d0 > 0 else math.nan
              for d0, d1 in zip(diffs[:-1], diffs[1:])]
    return diffs, orders


def cmd_converge(args) -> int:
    if args.dt_levels < 3:
        raise CliError("--dt-levels must be >= 3 to form an observed order", EXIT_USAGE)
    cfg = _config(args)
    lay = SpectralLayout(cfg.dim, args.n_grid)
    params = cfg.params()
    state, params, _ = _initial_state(with_overrides(cfg, preset="spinodal")
                                      if cfg.preset == "manufactured" else cfg, lay, params)
    dt0 = it.stable_dt(state, params, it.StepControls(cfl_diff=1.0))
    t_end = args.steps * dt0
    finals = []
    for level in range(args.dt_levels):
        dt = dt0 / 2 ** level
        res = it.run(state, params, it.StepControls(dt=dt, t_end=t_end))
        if res.blowup:
            raise CliError(res.blowup, EXIT_NUMERIC)
        finals.append((res.state.a, res.state.b))
        print(f"time  level {level}: dt={dt:.4e} steps={len(res.log)}")
    diffs, orders = _richardson_orders(finals)
    for i, o in enumerate(orders):
        print(f"time  observed order (levels {i}-{i + 2}): {o:.3f}")
    mm = Manufactured(2, RunConfig(p=cfg.p, nu_star=cfg.nu_star, nu_upper=cfg.nu_upper,
                                   nu_shape=cfg.nu_shape).params())
    errs = []
    for n in args.space_grids:
        sl = SpectralLayout(2, n)
        s0 = mm.initial_state(sl)
        fp = mm.forced_params(sl)
        dt = it.stable_dt(s0, fp, it.StepControls(cfl_diff=1.0))
        res = it.run(s0, fp, it.StepControls(dt=dt, t_end=4 * dt))
        eu, ep = mm.errors(res.state)
        errs.append(ep)
        print(f"space n_grid={n:3d} m_cut={sl.m_cut:2d}: L2 error u={eu:.3e} phi={ep:.3e}")
    for (n0, e0), (n1, e1) in zip(zip(args.space_grids, errs), zip(args.space_grids[1:], errs[1:])):
        print(f"space error drop {n0}->{n1}: {e0 / e1:.3g}x")
    ok = all(o >= 1.9 for o in orders)
    return EXIT_OK if ok else EXIT_VERIFY


# -- oracle --------------------------------------------------------------

def _oracle_state(m, seed, params):
    rng = np.random.default_rng(seed)
    lay = SpectralLayout(2, 64, m)
    rho = 1.5 + inverse_transform(lay, lay.random_coeffs(rng, amplitude=0.4, band=3))
    a = project_solenoidal(lay, lay.random_coeffs(rng, 1, amplitude=0.5))
    b = lay.random_coeffs(rng, amplitude=0.8)
    c = chemical_potential_solve(lay, b, rho, params)
    return SimState(lay, rho, a, b, c, 0.0, (float(rho.min()), float(rho.max())))


def _oracle_sweep(ms, seed, verbose=True):
    params = RunConfig(p=2.8, nu_star=0.5, nu_upper=1.5, delta=0.1).params()
    ok = True
    for m in ms:
        state = _oracle_state(m, seed, params)
        cmp = oracle.certify(state, params)
        ok &= cmp.ok
        if verbose:
            print(f"m_cut={m}: worst discrepancy {cmp.worst:.3e} ({'ok' if cmp.ok else 'FAIL'})")
            for line in cmp.lines():
                print("   " + line)
    return ok


def cmd_oracle(args) -> int:
    ok = _oracle_sweep(args.m, args.seed)
    params = RunConfig(p=2.8, nu_star=0.5, nu_upper=1.5, delta=0.1).params()
    state = _oracle_state(min(args.m), args.seed, params)
    errs = []
    for dt in (2e-3, 1e-3, 5e-4):
        f = it.step(state, dt, params)
        d = oracle.dense_step(state, dt, params)
        errs.append(float(np.sqrt(np.sum(np.abs(f.a - d.a) ** 2) + np.sum(np.abs(f.b - d.b) ** 2))))
    orders = [math.log2(e0 / e1) for e0, e1 in zip(errs[:-1], errs[1:])]
    print("Heun vs dense RK4 local differences: " + ", ".join(f"{e:.3e}" for e in errs))
    print("observed local orders: " + ", ".join(f"{o:.3f}" for o in orders))
    ok &= orders[-1] >= 2.9
    return EXIT_OK if ok else EXIT_VERIFY


# -- pressure ------------------------------------------------------------

def cmd_pressure(args) -> int:
    state, head = ck.read_checkpoint(args.checkpoint)
    cfg = _config(args)
    params = with_overrides(cfg, p=head["p"], delta=head["delta"]).params()
    lay = state.layout
    F = full_momentum_force(state, params)
    P = pressure_from_force(lay, F)
    gradP = lay.deriv * P[None]
    Pg = inverse_transform(lay, P)
    gP = inverse_transform(lay, gradP)
    p = params.p
    r = 2 * p / (3 * p - 4)
    grad_abs = np.sqrt(np.sum(gP * gP, axis=0))
    print(f"t = {state.t:.6g}")
    print(f"|P|_L2 = {lay.norm(P):.6e}   max|P| = {np.max(np.abs(Pg)):.6e}")
    print(f"|grad P|_L2 = {lay.norm(gradP):.6e}   |grad P|_L{r:.4g} = "
          f"{float(lay.integrate(grad_abs ** r) ** (1 / r)):.6e}")
    print(f"Helmholtz residual |F - grad P - leray F| / |F| = {helmholtz_residual(lay, F):.3e}")
    if np.max(np.abs(Pg)) == 0.0:
        print("pressure is identically zero")
    if args.output:
        np.save(args.output, Pg)
    return EXIT_OK


# -- plotdata ------------------------------------------------------------

def cmd_plotdata(args) -> int:
    rows = read_csv(args.csv)
    cols = args.columns.split(",") if args.columns else None
    try:
        text = columnar(rows, cols)
    except KeyError as exc:
        raise CliError(str(exc.args[0]), EXIT_USAGE) from None
    if args.output:
        with open(args.output, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="nsch", description=__doc__)
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", metavar="PATH", help="key = value configuration file")
        p.add_argument("--seed", type=int, metavar="N", help="override the config seed")
        p.add_argument("--out", metavar="DIR", help="output directory")

    p = sub.add_parser("run", help="run a simulation; writes CSV diagnostics and checkpoints")
    common(p)
    p.add_argument("--checkpoint-every", type=int, metavar="N", help="checkpoint cadence in steps")
    p.add_argument("--resume", metavar="PATH", help="continue from a checkpoint")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("verify", help="invariant suite on every preset plus the dense oracle")
    p.add_argument("--steps", type=int, default=20)
    p.add_argument("--quick", action="store_true", help="smaller grids")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("converge", help="dt and resolution refinement study")
    common(p)
    p.add_argument("--dt-levels", type=int, default=3)
    p.add_argument("--steps", type=int, default=40, help="steps at the coarsest dt")
    p.add_argument("--n-grid", type=int, default=24, help="grid of the time study")
    p.add_argument("--space-grids", type=int, nargs="+", default=[16, 32])
    p.set_defaults(func=cmd_converge)

    p = sub.add_parser("oracle", help="dense-oracle certification sweep")
    p.add_argument("--m", type=int, nargs="+", default=[1, 2, 3], choices=[1, 2, 3])
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_oracle)

    p = sub.add_parser("pressure", help="pressure field and norms from a checkpoint")
    p.add_argument("checkpoint")
    p.add_argument("--config", metavar="PATH")
    p.add_argument("-o", "--output", metavar="FILE", help="save P grid values (.npy)")
    p.set_defaults(func=cmd_pressure)

    p = sub.add_parser("plotdata", help="diagnostics CSV to plain-text columns")
    p.add_argument("csv")
    p.add_argument("--columns", help="comma-separated column names")
    p.add_argument("-o", "--output", metavar="FILE")
    p.set_defaults(func=cmd_plotdata)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        fft_workers()
        return args.func(args)
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.code
    except ck.CheckpointError as exc:
        print(f"checkpoint error: {exc}", file=sys.stderr)
        return EXIT_CHECKPOINT
    except (SolverError, PreconditionError, NumericError, FloatingPointError) as exc:
        print(f"numerical error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
