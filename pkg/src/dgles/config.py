"""Run configuration: INI-style ``key = value`` files with section headers.

See the README for the full schema. Every value can be overridden with
``section.key=value`` strings.
"""

from __future__ import annotations

import configparser
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .dg_operator import FLUX_VARIANTS, GasModel
from .les_filter import L_REF_DEFAULT

MODEL_TYPES = ("none", "filter", "smagorinsky")
INITIAL_TYPES = ("tgv", "dhit", "checkpoint", "uniform")

KNOWN_KEYS = {
    "mesh": {"cells", "lengths"},
    "discretization": {"n", "flux"},
    "gas": {"kappa", "r", "mu", "pr"},
    "model": {"type", "preset", "constant", "sigma", "c", "l_ref", "cs"},
    "time": {"end_time", "cfl", "dt", "max_steps"},
    "output": {"series_interval", "sample_times", "spectrum_times", "checkpoint"},
    "initial": {"type", "mach", "slope", "k_min", "k_max", "u_rms", "seed", "path",
                "rho", "velocity", "p"},
    "optimize": {"reference", "times", "window", "max_evals", "restart_every", "x0",
                 "lower", "upper", "seed", "output"},
}


class ConfigError(ValueError):
    """Invalid or inconsistent configuration; the message names the key."""


@dataclass
class ModelSpec:
    type: str = "none"
    preset: int | None = None
    constant: str = "c"
    sigma: tuple[float, ...] | None = None
    c: float | None = None
    L_ref: float = L_REF_DEFAULT
    cs: float = 0.15


@dataclass
class InitialSpec:
    type: str = "tgv"
    mach: float = 0.1
    slope: float = -5.0 / 3.0
    k_min: int = 1
    k_max: int = 16
    u_rms: float = 1.0
    seed: int = 0
    path: str | None = None
    rho: float = 1.0
    velocity: tuple[float, float, float] = (0.0, 0.0, 0.0)
    p: float = 1.0


@dataclass
class OptimizeSpec:
    reference: str | None = None
    times: tuple[float, ...] | None = None
    window: float = 0.5
    max_evals: int = 300
    restart_every: int = 30
    x0: tuple[float, ...] | None = None
    lower: tuple[float, ...] | None = None
    upper: tuple[float, ...] | None = None
    seed: int = 0
    output: str = "best_kernel.txt"


@dataclass
class RunConfig:
    cells: tuple[int, int, int] = (4, 4, 4)
    lengths: tuple[float, float, float] = (2 * np.pi,) * 3
    N: int = 7
    flux: str = "l2roe"
    gas: GasModel = field(default_factory=GasModel)
    model: ModelSpec = field(default_factory=ModelSpec)
    initial: InitialSpec = field(default_factory=InitialSpec)
    end_time: float = 1.0
    cfl: float = 0.5
    dt: float | None = None
    max_steps: int | None = None
    series_interval: float = 0.01
    sample_times: tuple[float, ...] | None = None
    spectrum_times: tuple[float, ...] = ()
    checkpoint: bool = True
    optimize: OptimizeSpec | None = None

    def validate(self) -> "RunConfig":
        if len(self.cells) != 3 or min(self.cells) < 1:
            raise ConfigError(f"mesh.cells: need three counts >= 1, got {self.cells}")
        if len(self.lengths) != 3 or min(self.lengths) <= 0:
            raise ConfigError(f"mesh.lengths: need three positive lengths, got {self.lengths}")
        if self.N < 1:
            raise ConfigError(f"discretization.N: must be >= 1, got {self.N}")
        if self.flux not in FLUX_VARIANTS:
            raise ConfigError(f"discretization.flux: {self.flux!r} not in {FLUX_VARIANTS}")
        m = self.model
        if m.type not in MODEL_TYPES:
            raise ConfigError(f"model.type: {m.type!r} not in {MODEL_TYPES}")
        if m.type == "filter":
            if m.sigma is not None:
                if len(m.sigma) != self.N + 1:
                    raise ConfigError(f"model.sigma: need N+1={self.N + 1} coefficients, "
                                      f"got {len(m.sigma)}")
                if min(m.sigma) < 0 or max(m.sigma) > 1:
                    raise ConfigError("model.sigma: coefficients must lie in [0, 1]")
                if m.c is None:
                    raise ConfigError("model.c: required with an explicit model.sigma")
            elif m.preset is not None and m.preset != self.N:
                raise ConfigError(f"model.preset: kernel for N={m.preset} does not match "
                                  f"discretization.N={self.N}")
            if m.constant not in ("c", "c_inf"):
                raise ConfigError(f"model.constant: must be 'c' or 'c_inf', got {m.constant!r}")
            if m.c is not None and m.c < 0:
                raise ConfigError(f"model.c: must be >= 0, got {m.c}")
            if not m.L_ref > 0:
                raise ConfigError(f"model.l_ref: must be positive, got {m.L_ref}")
        if m.type == "smagorinsky" and m.cs < 0:
            raise ConfigError(f"model.cs: must be >= 0, got {m.cs}")
        ic = self.initial
        if ic.type not in INITIAL_TYPES:
            raise ConfigError(f"initial.type: {ic.type!r} not in {INITIAL_TYPES}")
        if ic.type in ("tgv", "dhit"):
            if not np.allclose(self.lengths, 2 * np.pi, rtol=1e-12, atol=0):
                raise ConfigError(f"mesh.lengths: initial.type={ic.type} needs a (2*pi)^3 box")
            if not ic.mach > 0:
                raise ConfigError(f"initial.mach: must be positive, got {ic.mach}")
        if ic.type == "dhit":
            nyq = min(self.cells) * (self.N + 1) // 2
            if not 1 <= ic.k_min <= ic.k_max:
                raise ConfigError(f"initial.k_min/k_max: need 1 <= k_min <= k_max")
            if ic.k_max >= nyq:
                raise ConfigError(f"initial.k_max: {ic.k_max} must be below the grid "
                                  f"Nyquist wavenumber {nyq}")
        if ic.type == "checkpoint" and not ic.path:
            raise ConfigError("initial.path: required for initial.type=checkpoint")
        if ic.type == "uniform" and not (ic.rho > 0 and ic.p > 0):
            raise ConfigError("initial.rho/initial.p: must be positive")
        if self.end_time < 0:
            raise ConfigError(f"time.end_time: must be >= 0, got {self.end_time}")
        if self.dt is not None and not self.dt > 0:
            raise ConfigError(f"time.dt: must be positive, got {self.dt}")
        if not self.cfl > 0:
            raise ConfigError(f"time.cfl: must be positive, got {self.cfl}")
        if not self.series_interval > 0:
            raise ConfigError(f"output.series_interval: must be positive")
        if self.spectrum_times and (len(set(self.cells)) != 1 or
                                    not np.allclose(self.lengths, 2 * np.pi, rtol=1e-12, atol=0)):
            raise ConfigError("output.spectrum_times: spectra need a cubic (2*pi)^3 mesh")
        if self.optimize is not None:
            self._validate_optimize()
        return self

    def _validate_optimize(self):
        o = self.optimize
        n = self.N  # (c, sigma_1..sigma_{N-1})
        for key in ("x0", "lower", "upper"):
            v = getattr(o, key)
            if v is not None and len(v) != n:
                raise ConfigError(f"optimize.{key}: need {n} values (c, sigma_1..sigma_{n - 1}), "
                                  f"got {len(v)}")
        if o.max_evals < 1:
            raise ConfigError("optimize.max_evals: must be >= 1")
        if o.restart_every < 1:
            raise ConfigError("optimize.restart_every: must be >= 1")
        if o.times is not None and (len(o.times) == 0 or min(o.times) <= 0):
            raise ConfigError("optimize.times: need positive checkpoint times")


def _floats(text, key):
    try:
        vals = [float(eval_number(v)) for v in text.replace(",", " ").split()]
    except ValueError as exc:
        raise ConfigError(f"{key}: {exc}") from None
    return tuple(vals)


def eval_number(token: str) -> float:
    """Parse a float, allowing multiples of pi such as ``2pi`` or ``pi``."""
    t = token.strip().lower()
    if t.endswith("pi"):
        head = t[:-2].rstrip("*")
        return (float(head) if head else 1.0) * np.pi
    return float(t)


def _parse_bool(text, key):
    t = text.strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise ConfigError(f"{key}: expected a boolean, got {text!r}")


def parse_overrides(overrides) -> dict[tuple[str, str], str]:
    out = {}
    for item in overrides or ():
        if "=" not in item:
            raise ConfigError(f"override {item!r}: expected section.key=value")
        key, value = item.split("=", 1)
        if "." not in key:
            raise ConfigError(f"override {item!r}: key must be section.key")
        section, name = key.strip().lower().split(".", 1)
        out[(section, name)] = value.strip()
    return out


def load_config(path=None, text: str | None = None, overrides=None, base_dir=None) -> RunConfig:
    """Read a configuration file (or ``text``) and apply ``section.key=value`` overrides."""
    cp = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    if text is None:
        if path is None:
            raise ConfigError("no configuration given")
        p = Path(path)
        if not p.is_file():
            raise ConfigError(f"config file {path} not found")
        text = p.read_text()
        base_dir = base_dir or p.parent
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(f"malformed config: {exc}") from None
    for (section, name), value in parse_overrides(overrides).items():
        if not cp.has_section(section):
            cp.add_section(section)
        cp.set(section, name, value)
    for section in cp.sections():
        if section not in KNOWN_KEYS:
            raise ConfigError(f"[{section}]: unknown section")
        for key in cp[section]:
            if key not in KNOWN_KEYS[section]:
                raise ConfigError(f"{section}.{key}: unknown key")
    return _build(cp, Path(base_dir) if base_dir else None).validate()


def _build(cp, base_dir) -> RunConfig:
    cfg = RunConfig()

    def get(section, key, conv, default=None):
        if not cp.has_option(section, key):
            return default
        raw = cp.get(section, key)
        name = f"{section}.{key}"
        try:
            if conv is float:
                return eval_number(raw)
            if conv is int:
                return int(raw)
            if conv == "floats":
                return _floats(raw, name)
            if conv is bool:
                return _parse_bool(raw, name)
            return raw.strip()
        except ValueError as exc:
            if isinstance(exc, ConfigError):
                raise
            raise ConfigError(f"{name}: cannot parse {raw!r}") from None

    def path(p):
        if p is None or base_dir is None or Path(p).is_absolute():
            return p
        return str(base_dir / p)

    cells = get("mesh", "cells", "floats")
    if cells is not None:
        if len(cells) == 1:
            cells = cells * 3
        if any(c != int(c) for c in cells):
            raise ConfigError(f"mesh.cells: need integers, got {cells}")
        cfg.cells = tuple(int(c) for c in cells)
    lengths = get("mesh", "lengths", "floats")
    if lengths is not None:
        cfg.lengths = lengths * 3 if len(lengths) == 1 else lengths
    cfg.N = get("discretization", "n", int, cfg.N)
    cfg.flux = get("discretization", "flux", str, cfg.flux)
    try:
        cfg.gas = GasModel(kappa=get("gas", "kappa", float, 1.4), R=get("gas", "r", float, 1.0),
                           mu=get("gas", "mu", float, 0.0), Pr=get("gas", "pr", float, 0.72))
    except ValueError as exc:
        raise ConfigError(f"gas: {exc}") from None

    m = cfg.model
    m.type = get("model", "type", str, m.type)
    m.preset = get("model", "preset", int, None)
    m.constant = get("model", "constant", str, m.constant)
    m.sigma = get("model", "sigma", "floats", None)
    m.c = get("model", "c", float, None)
    m.L_ref = get("model", "l_ref", float, m.L_ref)
    m.cs = get("model", "cs", float, m.cs)

    ic = cfg.initial
    ic.type = get("initial", "type", str, ic.type)
    ic.mach = get("initial", "mach", float, ic.mach)
    ic.slope = get("initial", "slope", float, ic.slope)
    ic.k_min = get("initial", "k_min", int, ic.k_min)
    ic.k_max = get("initial", "k_max", int, ic.k_max)
    ic.u_rms = get("initial", "u_rms", float, ic.u_rms)
    ic.seed = get("initial", "seed", int, ic.seed)
    ic.path = path(get("initial", "path", str, None))
    ic.rho = get("initial", "rho", float, ic.rho)
    vel = get("initial", "velocity", "floats", None)
    if vel is not None:
        if len(vel) != 3:
            raise ConfigError("initial.velocity: need three components")
        ic.velocity = vel
    ic.p = get("initial", "p", float, ic.p)

    cfg.end_time = get("time", "end_time", float, cfg.end_time)
    cfg.cfl = get("time", "cfl", float, cfg.cfl)
    cfg.dt = get("time", "dt", float, None)
    cfg.max_steps = get("time", "max_steps", int, None)
    cfg.series_interval = get("output", "series_interval", float, cfg.series_interval)
    cfg.sample_times = get("output", "sample_times", "floats", None)
    cfg.spectrum_times = get("output", "spectrum_times", "floats", ())
    cfg.checkpoint = get("output", "checkpoint", bool, cfg.checkpoint)

    if cp.has_section("optimize"):
        o = OptimizeSpec()
        o.reference = path(get("optimize", "reference", str, None))
        o.times = get("optimize", "times", "floats", None)
        o.window = get("optimize", "window", float, o.window)
        o.max_evals = get("optimize", "max_evals", int, o.max_evals)
        o.restart_every = get("optimize", "restart_every", int, o.restart_every)
        o.x0 = get("optimize", "x0", "floats", None)
        o.lower = get("optimize", "lower", "floats", None)
        o.upper = get("optimize", "upper", "floats", None)
        o.seed = get("optimize", "seed", int, o.seed)
        o.output = get("optimize", "output", str, o.output)
        cfg.optimize = o
    return cfg
