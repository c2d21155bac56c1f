"""Simulation driver: initial conditions, model set-up, time loop and outputs."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .cases import init_dhit, init_tgv, init_uniform
from .config import RunConfig
from .dg_operator import InvalidStateError, cons_to_prim, dg_rhs
from .diagnostics import (Spectrum, TimeSeries, energy_spectrum, integral_kinetic_energy,
                          kolmogorov_compensate, resolved_dissipation, spectrum_filename)
from .les_filter import RelaxationFilter, SmagorinskyModel, build_filter_kernel, load_presets
from .mesh import SolutionField, build_mesh, read_checkpoint, write_checkpoint
from .time_integrator import NumericalFailure, compute_dt, rk_step

log = logging.getLogger(__name__)


def kernel_from_config(cfg: RunConfig):
    m = cfg.model
    if m.sigma is not None:
        return build_filter_kernel(m.sigma, m.c, cfg.N, L_ref=m.L_ref)
    presets = load_presets()
    N = m.preset if m.preset is not None else cfg.N
    if N not in presets:
        raise KeyError(f"no preset kernel for N={N}")
    rec = presets[N]
    c = m.c if m.c is not None else (rec.c_inf if m.constant == "c_inf" else rec.c)
    return build_filter_kernel(rec.sigma, c, N, L_ref=m.L_ref)


def initial_field(cfg: RunConfig) -> SolutionField:
    ic = cfg.initial
    if ic.type == "checkpoint":
        f = read_checkpoint(ic.path)
        if f.N != cfg.N or f.mesh.cells_per_dir != cfg.cells:
            raise ValueError(f"checkpoint {ic.path} has N={f.N}, cells={f.mesh.cells_per_dir}; "
                             f"config asks for N={cfg.N}, cells={cfg.cells}")
        return f
    mesh = build_mesh(cfg.cells, cfg.lengths)
    if ic.type == "tgv":
        return init_tgv(mesh, cfg.N, cfg.gas, ic.mach)
    if ic.type == "dhit":
        return init_dhit(mesh, cfg.N, cfg.gas, ic.slope, ic.k_min, ic.k_max, ic.mach,
                         ic.seed, ic.u_rms)
    return init_uniform(mesh, cfg.N, cfg.gas, ic.rho, ic.velocity, ic.p)


@dataclass
class RunResult:
    field: SolutionField
    series: TimeSeries
    spectra: list[Spectrum] = field(default_factory=list)
    steps: int = 0


class Simulation:
    """One configured run. ``field`` evolves in place through :meth:`step`."""

    def __init__(self, cfg: RunConfig, field: SolutionField | None = None):
        self.cfg = cfg
        self.gas = cfg.gas
        self.field = field if field is not None else initial_field(cfg)
        self.mesh = self.field.mesh
        self.N = self.field.N
        self.filter = None
        self.eddy = None
        if cfg.model.type == "filter":
            self.filter = RelaxationFilter(kernel_from_config(cfg), self.mesh, self.gas)
        elif cfg.model.type == "smagorinsky" and cfg.model.cs > 0:
            self.eddy = SmagorinskyModel(cfg.model.cs)
        self.steps = 0

    def rhs(self, U, t):
        return dg_rhs(SolutionField(self.mesh, self.N, U, t), self.gas, self.cfg.flux,
                      eddy_viscosity=self.eddy)

    def stable_dt(self) -> float:
        if self.cfg.dt is not None:
            return self.cfg.dt
        return compute_dt(self.field, self.gas, self.cfg.cfl)

    def step(self, dt: float) -> None:
        f = self.field
        hook = None
        if self.filter is not None:
            self.filter.update(f.data)
            hook = self.filter
        try:
            f.data = rk_step(f.data, f.time, dt, self.rhs, filter_hook=hook)
        except InvalidStateError as exc:
            raise NumericalFailure(f"t={f.time:.6g}: {exc}", time=f.time) from exc
        except NumericalFailure as exc:
            raise NumericalFailure(f"t={f.time:.6g}: {exc}", time=f.time, stage=exc.stage) from exc
        f.time += dt
        self.steps += 1

    def check_state(self) -> None:
        try:
            cons_to_prim(self.field.data, self.gas, check=True)
        except InvalidStateError as exc:
            raise NumericalFailure(f"t={self.field.time:.6g}: {exc}", time=self.field.time) from exc

    def sample(self):
        self.check_state()
        return (self.field.time, integral_kinetic_energy(self.field),
                resolved_dissipation(self.field, self.gas))

    def sample_times(self) -> np.ndarray:
        cfg = self.cfg
        t0, t1 = self.field.time, self.field.time + cfg.end_time
        if cfg.sample_times is not None:
            ts = [t0] + [t0 + t for t in cfg.sample_times if 0 < t <= cfg.end_time]
        else:
            nint = int(np.floor(cfg.end_time / cfg.series_interval + 1e-9))
            ts = list(t0 + cfg.series_interval * np.arange(nint + 1))
        ts += [t0 + t for t in cfg.spectrum_times if 0 <= t <= cfg.end_time]
        if cfg.end_time > 0:
            ts.append(t1)
        return np.unique(np.round(np.asarray(ts, dtype=float), 12))

    def run(self, out_dir=None) -> RunResult:
        cfg = self.cfg
        out = Path(out_dir) if out_dir is not None else None
        if out is not None:
            out.mkdir(parents=True, exist_ok=True)
        t_start = self.field.time
        stops = self.sample_times()
        spec_at = {round(t_start + t, 12) for t in cfg.spectrum_times}
        rows, spectra = [], []

        def record():
            rows.append(self.sample())
            if round(self.field.time, 12) in spec_at:
                spectra.append(energy_spectrum(self.field))

        try:
            record()
            for target in stops[1:]:
                while self.field.time < target - 1e-12 * max(1.0, abs(target)):
                    if cfg.max_steps is not None and self.steps >= cfg.max_steps:
                        raise NumericalFailure(f"max_steps={cfg.max_steps} reached",
                                               time=self.field.time)
                    dt = self.stable_dt()
                    remaining = target - self.field.time
                    if dt >= remaining * (1 - 1e-10):
                        dt = remaining
                    self.step(dt)
                self.field.time = float(target)
                record()
                log.info("t=%.4f steps=%d e_kin=%.8e", self.field.time, self.steps, rows[-1][1])
        finally:
            series = self._series(rows)
            self._finish_spectra(spectra, series)
            if out is not None:
                self._write(out, series, spectra)
        return RunResult(self.field, series, spectra, self.steps)

    @staticmethod
    def _series(rows) -> TimeSeries:
        if not rows:
            return TimeSeries([], [], [])
        t, e, k = (np.array(c) for c in zip(*rows))
        return TimeSeries(t, e, k)

    @staticmethod
    def _finish_spectra(spectra, series):
        ok = np.isfinite(series.eps)
        for i, sp in enumerate(spectra):
            eps = float(np.interp(sp.t, series.t[ok], series.eps[ok])) if ok.sum() else np.nan
            if eps > 0:
                spectra[i] = kolmogorov_compensate(sp, eps)
            else:
                sp.compensated = np.full(sp.k.size, np.nan)

    def _write(self, out: Path, series, spectra):
        series.to_csv(out / "series.csv")
        for sp in spectra:
            sp.to_csv(out / spectrum_filename(sp.t))
        if self.cfg.checkpoint:
            write_checkpoint(out / "final.chk", self.field)


def run_simulation(cfg: RunConfig, out_dir=None) -> RunResult:
    return Simulation(cfg).run(out_dir)
