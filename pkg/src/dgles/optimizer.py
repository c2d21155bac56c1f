"""Bounded Nelder-Mead with periodic restarts, and the LES kernel objective."""

from __future__ import annotations

import copy
import csv
import logging
from dataclasses import dataclass, field

import numpy as np

from .config import RunConfig
from .dg_operator import GasModel, InvalidStateError, apply_along
from .diagnostics import TimeSeries, integral_kinetic_energy, resolved_dissipation
from .driver import Simulation, initial_field
from .les_filter import KernelRecord
from .mesh import SolutionField, build_mesh
from .reference_element import interpolation_matrix, legendre_basis, lgl_nodes_weights, reference_element
from .time_integrator import NumericalFailure

log = logging.getLogger(__name__)

C_BOUNDS = (0.1, 2.0)
SIGMA_BOUNDS = (0.1, 1.0)


def bound_unmap(xhat, lower, upper):
    """Unbounded -> bounded: ``x = (b_U - b_L) / (1 + exp(xhat)) + b_L``."""
    xhat = np.asarray(xhat, dtype=float)
    lower = np.asarray(lower, dtype=float)
    upper = np.asarray(upper, dtype=float)
    # (1 + e^y)^-1 written as a logistic function that does not overflow
    return lower + (upper - lower) * np.exp(-np.logaddexp(0.0, xhat))


def bound_map(x, lower, upper):
    """Bounded -> unbounded, the exact inverse of :func:`bound_unmap`."""
    x = np.asarray(x, dtype=float)
    lower = np.asarray(lower, dtype=float)
    upper = np.asarray(upper, dtype=float)
    if np.any(lower >= upper):
        raise ValueError("lower bounds must be strictly below upper bounds")
    if np.any(x <= lower) or np.any(x >= upper):
        raise ValueError(f"point {x.tolist()} is not strictly inside the bounds")
    return np.log((upper - lower) / (x - lower) - 1.0)


@dataclass
class EvalRecord:
    eval: int
    iter: int
    restart: int
    f: float
    x: np.ndarray


@dataclass
class NelderMeadResult:
    x_best: np.ndarray
    f_best: float
    history: list[EvalRecord] = field(default_factory=list)
    n_iter: int = 0
    n_restarts: int = 0

    @property
    def n_evals(self) -> int:
        return len(self.history)

    def write_log(self, path, names=None) -> None:
        n = self.x_best.size
        names = names or [f"x{i}" for i in range(n)]
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["eval", "iter", "restart", "f", *names])
            for r in self.history:
                w.writerow([r.eval, r.iter, r.restart, format(r.f, ".17g"),
                            *(format(v, ".17g") for v in r.x)])


class _BudgetExhausted(Exception):
    pass


class _Counter:
    def __init__(self, objective, lower, upper, max_evals):
        self.objective = objective
        self.lower, self.upper = lower, upper
        self.max_evals = max_evals
        self.history: list[EvalRecord] = []
        self.iter = 0
        self.restart = 0
        self.best_f = np.inf
        self.best_x = None

    def __call__(self, y) -> float:
        if len(self.history) >= self.max_evals:
            raise _BudgetExhausted
        x = bound_unmap(y, self.lower, self.upper)
        try:
            f = float(self.objective(x))
        except (FloatingPointError, ZeroDivisionError, OverflowError):
            f = np.inf
        if not np.isfinite(f):
            f = np.inf
        self.history.append(EvalRecord(len(self.history) + 1, self.iter, self.restart, f, x))
        if f < self.best_f:
            self.best_f, self.best_x = f, x
        return f


def nelder_mead(objective, x0, lower, upper, max_evals: int = 300, restart_every: int = 30,
                seed: int = 0, init_step: float = 0.05, restart_spread: float = 0.1,
                reflect=1.0, expand=2.0, contract=0.5, shrink=0.5) -> NelderMeadResult:
    """Minimize ``objective`` over the box ``(lower, upper)``.

    The simplex lives in the unbounded variables of :func:`bound_map`. Every
    ``restart_every`` iterations it is rebuilt around the best vertex with
    uniform random offsets of ``restart_spread`` times the bound range.
    Non-finite objective values count as ``+inf``.
    """
    lower = np.asarray(lower, dtype=float)
    upper = np.asarray(upper, dtype=float)
    x0 = np.asarray(x0, dtype=float)
    n = x0.size
    if lower.shape != (n,) or upper.shape != (n,):
        raise ValueError("bounds must match the parameter vector length")
    if max_evals < 1:
        raise ValueError("max_evals must be >= 1")
    rng = np.random.default_rng(seed)
    span = upper - lower
    margin = 1e-9 * span
    fun = _Counter(objective, lower, upper, max_evals)

    def interior(x):
        return np.clip(x, lower + margin, upper - margin)

    try:
        f0 = fun(bound_map(x0, lower, upper))
        simplex = [bound_map(x0, lower, upper)]
        fvals = [f0]
        for j in range(n):
            x = x0.copy()
            step = init_step * span[j]
            x[j] = x[j] + step if x[j] + step < upper[j] else x[j] - step
            y = bound_map(interior(x), lower, upper)
            simplex.append(y)
            fvals.append(fun(y))
        simplex = np.array(simplex)
        fvals = np.array(fvals)

        while True:
            if fun.iter > 0 and fun.iter % restart_every == 0:
                fun.restart += 1
                b = int(np.argmin(fvals))
                xb = bound_unmap(simplex[b], lower, upper)
                new = [simplex[b]]
                newf = [fvals[b]]
                for _ in range(n):
                    x = interior(xb + rng.uniform(-restart_spread, restart_spread, n) * span)
                    y = bound_map(x, lower, upper)
                    new.append(y)
                    newf.append(fun(y))
                simplex, fvals = np.array(new), np.array(newf)

            order = np.argsort(fvals, kind="stable")
            simplex, fvals = simplex[order], fvals[order]
            centroid = simplex[:-1].mean(axis=0)
            worst = simplex[-1]

            xr = centroid + reflect * (centroid - worst)
            fr = fun(xr)
            if fr < fvals[0]:
                xe = centroid + expand * (xr - centroid)
                fe = fun(xe)
                if fe < fr:
                    simplex[-1], fvals[-1] = xe, fe
                else:
                    simplex[-1], fvals[-1] = xr, fr
            elif fr < fvals[-2]:
                simplex[-1], fvals[-1] = xr, fr
            else:
                if fr < fvals[-1]:
                    xc = centroid + contract * (xr - centroid)
                    fc = fun(xc)
                    accepted = fc <= fr
                else:
                    xc = centroid + contract * (worst - centroid)
                    fc = fun(xc)
                    accepted = fc < fvals[-1]
                if accepted:
                    simplex[-1], fvals[-1] = xc, fc
                else:
                    for j in range(1, n + 1):
                        simplex[j] = simplex[0] + shrink * (simplex[j] - simplex[0])
                        fvals[j] = fun(simplex[j])
            fun.iter += 1
    except _BudgetExhausted:
        pass
    return NelderMeadResult(np.asarray(fun.best_x), fun.best_f, fun.history,
                            fun.iter, fun.restart)


# ---------------------------------------------------------------------------
# LES kernel optimization


def kernel_from_params(x, N: int):
    """Parameter vector ``(c, sigma_1..sigma_{N-1})`` -> ``(sigma_0..sigma_N, c)``."""
    x = np.asarray(x, dtype=float)
    if x.size != N:
        raise ValueError(f"need {N} parameters for N={N}, got {x.size}")
    sigma = np.concatenate([[1.0], x[1:], [0.0]])
    return sigma, float(x[0])


def default_start(N: int) -> np.ndarray:
    """Start point ``c = 1.25``, ``sigma_1..sigma_{N-2} = 0.55``, ``sigma_{N-1} = 0.75``."""
    x = np.full(N, 0.55)
    x[0] = 1.25
    if N >= 2:
        x[-1] = 0.75
    return x


def default_bounds(N: int):
    lower = np.full(N, SIGMA_BOUNDS[0])
    upper = np.full(N, SIGMA_BOUNDS[1])
    lower[0], upper[0] = C_BOUNDS
    return lower, upper


def default_times(window: float, count: int = 3) -> np.ndarray:
    return window * np.arange(1, count + 1) / count


class LESObjective:
    """Squared errors of kinetic energy and resolved dissipation at checkpoint times.

    Each call runs the LES described by ``template`` from a shared initial
    field with the kernel ``(1, sigma_1, ..., sigma_{N-1}, 0)`` and strength
    constant ``c``. Failed runs score ``+inf``.
    """

    def __init__(self, template: RunConfig, reference: TimeSeries, times, field=None):
        self.template = template
        self.times = np.asarray(times, dtype=float)
        self.ref_e = np.interp(self.times, reference.t, reference.e_kin)
        self.ref_k = np.interp(self.times, reference.t, reference.kappa)
        self.field = field if field is not None else initial_field(template)
        self.calls = 0

    def config_for(self, x) -> RunConfig:
        sigma, c = kernel_from_params(x, self.template.N)
        cfg = copy.deepcopy(self.template)
        cfg.optimize = None
        cfg.model.type = "filter"
        cfg.model.sigma = tuple(sigma)
        cfg.model.c = c
        cfg.end_time = float(self.times.max())
        cfg.sample_times = tuple(self.times)
        cfg.spectrum_times = ()
        cfg.checkpoint = False
        return cfg

    def trajectory(self, x):
        res = Simulation(self.config_for(x), self.field.copy()).run()
        t0 = self.field.time
        e = np.interp(t0 + self.times, res.series.t, res.series.e_kin)
        k = np.interp(t0 + self.times, res.series.t, res.series.kappa)
        return e, k

    def __call__(self, x) -> float:
        self.calls += 1
        try:
            e, k = self.trajectory(x)
        except (NumericalFailure, InvalidStateError) as exc:
            log.warning("evaluation %d failed: %s", self.calls, exc)
            return np.inf
        return float(np.sum((self.ref_e - e) ** 2 + (self.ref_k - k) ** 2))


def optimize_kernel(template: RunConfig, reference: TimeSeries, times=None, x0=None,
                    lower=None, upper=None, max_evals=300, restart_every=30, seed=0):
    """Run the bounded Nelder-Mead over :class:`LESObjective`.

    Returns ``(result, best_record)`` where ``best_record`` is a
    :class:`KernelRecord` ready for the presets file format.
    """
    N = template.N
    times = default_times(0.5) if times is None else np.asarray(times, dtype=float)
    x0 = default_start(N) if x0 is None else np.asarray(x0, dtype=float)
    lo, hi = default_bounds(N)
    lower = lo if lower is None else np.asarray(lower, dtype=float)
    upper = hi if upper is None else np.asarray(upper, dtype=float)
    objective = LESObjective(template, reference, times)
    result = nelder_mead(objective, x0, lower, upper, max_evals=max_evals,
                         restart_every=restart_every, seed=seed)
    sigma, c = kernel_from_params(result.x_best, N)
    return result, KernelRecord(N, tuple(sigma), c, c, result.f_best)


def parameter_names(N: int) -> list[str]:
    return ["c"] + [f"sigma_{i}" for i in range(1, N)]


# ---------------------------------------------------------------------------
# fine -> coarse projection of reference data


def subcell_projection_matrix(N_f: int, N_c: int, ratio: int) -> np.ndarray:
    """Nodal L2 projection of ``ratio`` degree-N_f sub-elements onto one degree-N_c element.

    Integrals are evaluated per sub-element on an LGL grid fine enough to be
    exact for the degree ``N_f + N_c`` integrand. Shape ``(N_c+1, ratio*(N_f+1))``.
    """
    M = (N_f + N_c + 3) // 2 + 1          # LGL exact up to degree 2M-3
    eta, w = lgl_nodes_weights(M - 1)
    fine = reference_element(N_f)
    coarse = reference_element(N_c)
    L = interpolation_matrix(fine.nodes, eta)                 # (M, N_f+1)
    P = np.zeros((N_c + 1, ratio * (N_f + 1)))
    for s in range(ratio):
        xi = -1.0 + (2.0 * s + eta + 1.0) / ratio
        phi = legendre_basis(N_c, xi)                          # (M, N_c+1)
        P[:, s * (N_f + 1):(s + 1) * (N_f + 1)] = (phi.T * w) @ L / ratio
    return coarse.V @ P


def filter_reference_to_les(fine: SolutionField, N_c: int, cells_c) -> SolutionField:
    """Project a fine DG field onto a coarser mesh/degree by per-element L2 projection."""
    cells_f = np.asarray(fine.mesh.cells_per_dir)
    cells_c = np.asarray(cells_c, dtype=int)
    if cells_c.shape != (3,) or np.any(cells_c < 1) or np.any(cells_f % cells_c):
        raise ValueError(f"coarse cells {cells_c.tolist()} must divide fine cells {cells_f.tolist()}")
    if N_c < 1:
        raise ValueError("coarse degree must be >= 1")
    ratio = cells_f // cells_c
    nf = fine.N + 1
    data = fine.data
    for axis in range(3):
        P = subcell_projection_matrix(fine.N, N_c, int(ratio[axis]))
        shp = list(data.shape)
        shp[1 + 2 * axis] = int(cells_c[axis])
        shp[2 + 2 * axis] = int(ratio[axis]) * data.shape[2 + 2 * axis]
        data = apply_along(P, data.reshape(shp), axis)
    mesh = build_mesh(tuple(int(c) for c in cells_c), fine.mesh.domain_lengths)
    return SolutionField(mesh, N_c, np.ascontiguousarray(data), fine.time)


def filtered_sample(fine: SolutionField, N_c: int, cells_c, gas: GasModel):
    """Kinetic energy and resolved dissipation of the projected fine field."""
    coarse = filter_reference_to_les(fine, N_c, cells_c)
    return integral_kinetic_energy(coarse), resolved_dissipation(coarse, gas)
