"""Integral diagnostics and kinetic energy spectra."""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .cases import shell_index
from .dg_operator import GasModel, br1_gradients, cons_to_prim
from .les_filter import strain_rate_magnitude
from .mesh import SolutionField, global_integral
from .reference_element import interpolation_matrix
from .dg_operator import apply_along


def _fmt(x) -> str:
    return format(float(x), ".17g")


@dataclass
class TimeSeries:
    t: np.ndarray
    e_kin: np.ndarray
    kappa: np.ndarray
    eps: np.ndarray | None = None

    def __post_init__(self):
        self.t = np.asarray(self.t, dtype=float)
        self.e_kin = np.asarray(self.e_kin, dtype=float)
        self.kappa = np.asarray(self.kappa, dtype=float)
        if self.t.size > 1 and np.any(np.diff(self.t) <= 0):
            raise ValueError("time samples must be strictly increasing")
        if self.eps is None:
            self.eps = (numerical_dissipation(self.t, self.e_kin) if self.t.size >= 3
                        else np.full(self.t.size, np.nan))

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["t", "e_kin", "kappa_resolved", "eps_numerical"])
            for row in zip(self.t, self.e_kin, self.kappa, self.eps):
                w.writerow([_fmt(v) for v in row])

    @classmethod
    def from_csv(cls, path) -> "TimeSeries":
        """Read either the full series format or a ``t,e_kin,kappa`` reference file."""
        with open(path, newline="") as fh:
            rows = list(csv.DictReader(fh))
        if not rows:
            raise ValueError(f"{path}: empty time series")
        kkey = "kappa_resolved" if "kappa_resolved" in rows[0] else "kappa"
        missing = {"t", "e_kin", kkey} - set(rows[0])
        if missing:
            raise ValueError(f"{path}: missing columns {sorted(missing)}")
        t = [float(r["t"]) for r in rows]
        e = [float(r["e_kin"]) for r in rows]
        k = [float(r[kkey]) for r in rows]
        return cls(t, e, k)

    def write_reference(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["t", "e_kin", "kappa"])
            for row in zip(self.t, self.e_kin, self.kappa):
                w.writerow([_fmt(v) for v in row])


@dataclass
class Spectrum:
    k: np.ndarray
    E: np.ndarray
    t: float = 0.0
    compensated: np.ndarray | None = None

    def to_csv(self, path) -> None:
        comp = self.compensated if self.compensated is not None else np.full(self.k.size, np.nan)
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["k", "E", "E_compensated"])
            for k, e, c in zip(self.k, self.E, comp):
                w.writerow([int(k), _fmt(e), _fmt(c)])

    @classmethod
    def from_csv(cls, path, t: float = 0.0) -> "Spectrum":
        data = np.genfromtxt(path, delimiter=",", names=True)
        data = np.atleast_1d(data)
        return cls(data["k"].astype(int), data["E"], t, data["E_compensated"])


def spectrum_filename(t: float) -> str:
    return f"spectrum_t{t:.4f}.csv"


def integral_kinetic_energy(field: SolutionField) -> float:
    """Volume-averaged kinetic energy ``1/|V| int 1/2 rho |v|^2``."""
    U = field.data
    ke = 0.5 * np.sum(U[1:4] ** 2, axis=0) / U[0]
    return global_integral(field, ke) / field.mesh.volume


def resolved_dissipation(field: SolutionField, gas: GasModel, grad=None) -> float:
    """``2 int nu S_ij S_ij dV`` with ``nu = mu / rho`` evaluated per node."""
    if gas.mu == 0:
        return 0.0
    s = cons_to_prim(field.data, gas)
    if grad is None:
        grad = br1_gradients(field, gas, s)
    SS = 0.5 * strain_rate_magnitude(grad) ** 2
    return global_integral(field, 2.0 * gas.mu / s.rho * SS)


def numerical_dissipation(t, e_kin) -> np.ndarray:
    """``-dE/dt`` by second-order central differences; end samples are NaN."""
    t = np.asarray(t, dtype=float)
    e_kin = np.asarray(e_kin, dtype=float)
    if t.size < 3:
        raise ValueError("need at least 3 samples to differentiate")
    eps = -np.gradient(e_kin, t)
    eps[0] = eps[-1] = np.nan
    return eps


def shell_spectrum(u, v, w, t: float = 0.0) -> Spectrum:
    """Shell-binned spectrum of velocity sampled on a uniform periodic (2 pi)^3 grid.

    Normalized so that ``sum(E)`` is the grid average of ``|v|^2 / 2``.
    """
    n = u.shape
    kk = [np.fft.fftfreq(m, 1.0 / m) for m in n]
    KX, KY, KZ = np.meshgrid(*kk, indexing="ij")
    shells = shell_index(KX, KY, KZ).ravel()
    size = float(np.prod(n))
    energy = np.zeros(shells.size)
    for comp in (u, v, w):
        energy += 0.5 * np.abs(np.fft.fftn(comp).ravel() / size) ** 2
    E = np.bincount(shells, weights=energy)
    return Spectrum(np.arange(E.size), E, t)


def equispaced_velocity(field: SolutionField) -> np.ndarray:
    """Velocity interpolated to N+1 equispaced points per element and direction,
    assembled into uniform global grids, shape (3, nx*(N+1), ny*(N+1), nz*(N+1))."""
    n = field.N + 1
    xi = 2.0 * np.arange(n) / n - 1.0
    A = interpolation_matrix(field.ref.nodes, xi)
    vel = field.data[1:4] / field.data[0]
    for axis in range(3):
        vel = apply_along(A, vel, axis)
    nx, ny, nz = field.mesh.cells_per_dir
    return vel.reshape(3, nx * n, ny * n, nz * n)


def energy_spectrum(field: SolutionField) -> Spectrum:
    lengths = np.asarray(field.mesh.domain_lengths)
    cells = field.mesh.cells_per_dir
    if not np.allclose(lengths, 2 * np.pi, rtol=1e-12, atol=0) or len(set(cells)) != 1:
        raise ValueError("energy spectra need a cubic (2*pi)^3 domain with equal cell counts")
    u, v, w = equispaced_velocity(field)
    return shell_spectrum(u, v, w, field.time)


def kolmogorov_compensate(spec: Spectrum, eps: float) -> Spectrum:
    """``E(k) eps^(-2/3) k^(5/3)``."""
    if not eps > 0:
        raise ValueError(f"dissipation rate must be positive, got {eps}")
    comp = spec.E * eps ** (-2.0 / 3.0) * spec.k.astype(float) ** (5.0 / 3.0)
    return Spectrum(spec.k, spec.E, spec.t, comp)


def spectral_slope(spec: Spectrum, k_lo: int, k_hi: int) -> float:
    """Least-squares slope of log E versus log k on ``k_lo <= k <= k_hi``."""
    sel = (spec.k >= k_lo) & (spec.k <= k_hi)
    return float(np.polyfit(np.log(spec.k[sel]), np.log(spec.E[sel]), 1)[0])
