"""Line-based run configuration.

One ``key = value`` pair per line; ``#`` starts a comment; blank lines are
ignored.  Every key is optional and falls back to the default listed in
``FIELDS``.  ``serialize`` writes every key so a parsed config round-trips
exactly.
"""
from __future__ import annotations

from dataclasses import dataclass, fields, replace
from typing import Optional

from .constitutive import ViscosityLaw
from .presets import PRESETS
from .spectral import SpectralLayout
from .state import Params


class ConfigError(ValueError):
    """Bad configuration text; ``line`` is 1-based (0 when not line-specific)."""

    def __init__(self, message, line=0, key=None):
        super().__init__(f"line {line}: {message}" if line else message)
        self.message = message
        self.line = line
        self.key = key


def _bool(text):
    t = text.strip().lower()
    if t in ("true", "yes", "on", "1"):
        return True
    if t in ("false", "no", "off", "0"):
        return False
    raise ValueError(f"expected a boolean, got {text!r}")


def _opt_float(text):
    return None if text.strip().lower() in ("auto", "none") else float(text)


def _opt_int(text):
    return None if text.strip().lower() in ("auto", "none") else int(text)


@dataclass(frozen=True)
class RunConfig:
    dim: int = 2
    n_grid: int = 64
    m_cut: Optional[int] = None
    p: float = 2.8
    delta: float = 0.05
    rho_star: float = 1.0
    nu_star: float = 1.0
    nu_upper: float = 1.0
    nu_shape: float = 1.0
    preset: str = "spinodal"
    seed: int = 0
    t_end: float = 0.01
    dt: Optional[float] = None
    cfl_adv: float = 0.5
    cfl_diff: float = 0.25
    split: bool = False
    cg_rtol: float = 1e-12
    cg_maxiter: int = 1000
    cadence: int = 10
    checkpoint_every: int = 0
    out_dir: str = "out"

    def __post_init__(self):
        self.validate()

    def validate(self):
        checks = [
            ("dim", self.dim in (2, 3), "dim must be 2 or 3"),
            ("n_grid", self.n_grid >= 4, "n_grid must be >= 4"),
            ("m_cut", self.m_cut is None or 1 <= self.m_cut <= (self.n_grid - 1) // 3,
             "m_cut must satisfy 1 <= m_cut and 3 * m_cut < n_grid"),
            ("p", self.p > 1, "p must satisfy p > 1"),
            ("delta", self.delta > 0, "delta must satisfy delta > 0"),
            ("rho_star", self.rho_star > 0, "rho_star must satisfy rho_star > 0"),
            ("nu_star", self.nu_star > 0, "nu_star must satisfy nu_star > 0"),
            ("nu_upper", self.nu_upper >= self.nu_star, "nu_upper must be >= nu_star"),
            ("preset", self.preset in PRESETS, f"preset must be one of {', '.join(PRESETS)}"),
            ("seed", self.seed >= 0, "seed must be >= 0"),
            ("t_end", self.t_end >= 0, "t_end must be >= 0"),
            ("dt", self.dt is None or self.dt > 0, "dt must be > 0 or auto"),
            ("cfl_adv", 0 < self.cfl_adv <= 1, "cfl_adv must lie in (0, 1]"),
            ("cfl_diff", 0 < self.cfl_diff <= 1, "cfl_diff must lie in (0, 1]"),
            ("cg_rtol", 0 < self.cg_rtol < 1, "cg_rtol must lie in (0, 1)"),
            ("cg_maxiter", self.cg_maxiter >= 1, "cg_maxiter must be >= 1"),
            ("cadence", self.cadence >= 1, "cadence must be >= 1"),
            ("checkpoint_every", self.checkpoint_every >= 0, "checkpoint_every must be >= 0"),
            ("out_dir", bool(self.out_dir) and self.out_dir == self.out_dir.strip()
             and not any(ch in self.out_dir for ch in "#\n\r"),
             "out_dir must be non-empty, without '#', line breaks or surrounding blanks"),
        ]
        for key, ok, msg in checks:
            if not ok:
                raise ConfigError(msg, key=key)

    def layout(self) -> SpectralLayout:
        return SpectralLayout(self.dim, self.n_grid, self.m_cut)

    def params(self) -> Params:
        law = ViscosityLaw(self.nu_star, self.nu_upper, self.nu_shape)
        return Params(p=self.p, law=law, delta=self.delta, rho_star=self.rho_star,
                      cg_rtol=self.cg_rtol, cg_maxiter=self.cg_maxiter, split=self.split)


_CONVERTERS = {
    "dim": int, "n_grid": int, "m_cut": _opt_int, "p": float, "delta": float,
    "rho_star": float, "nu_star": float, "nu_upper": float, "nu_shape": float,
    "preset": str, "seed": int, "t_end": float, "dt": _opt_float,
    "cfl_adv": float, "cfl_diff": float, "split": _bool, "cg_rtol": float,
    "cg_maxiter": int, "cadence": int, "checkpoint_every": int, "out_dir": str,
}

FIELDS = tuple(f.name for f in fields(RunConfig))


def parse_config(text: str) -> RunConfig:
    values, where = {}, {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"expected 'key = value', got {raw.strip()!r}", lineno)
        key, val = (s.strip() for s in line.split("=", 1))
        if key not in _CONVERTERS:
            raise ConfigError(f"unknown key {key!r}", lineno)
        if key in values:
            raise ConfigError(f"duplicate key {key!r}", lineno)
        try:
            values[key] = _CONVERTERS[key](val)
        except ValueError:
            raise ConfigError(f"cannot parse value {val!r} for {key!r}", lineno) from None
        where[key] = lineno
    try:
        return RunConfig(**values)
    except ConfigError as exc:
        raise ConfigError(exc.message, where.get(exc.key, 0), exc.key) from None


def _fmt(v):
    if v is None:
        return "auto"
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    return str(v)


def serialize(cfg: RunConfig) -> str:
    return "".join(f"{name} = {_fmt(getattr(cfg, name))}\n" for name in FIELDS)


def load_config(path) -> RunConfig:
    with open(path, encoding="utf-8") as fh:
        return parse_config(fh.read())


def with_overrides(cfg: RunConfig, **kw) -> RunConfig:
    kw = {k: v for k, v in kw.items() if v is not None}
    return replace(cfg, **kw) if kw else cfg
