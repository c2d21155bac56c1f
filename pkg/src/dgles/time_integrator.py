"""Explicit 2N-storage Runge-Kutta integration with a relaxation-filter hook."""

from __future__ import annotations

import numpy as np

from .dg_operator import GasModel, cons_to_prim
from .mesh import SolutionField

# Carpenter & Kennedy (1994), five-stage fourth-order 2N-storage scheme
RK4_A = np.array([
    0.0,
    -567301805773.0 / 1357537059087.0,
    -2404267990393.0 / 2016746695238.0,
    -3550918686646.0 / 2091501179385.0,
    -1275806237668.0 / 842570457699.0,
])
RK4_B = np.array([
    1432997174477.0 / 9575080441755.0,
    5161836677717.0 / 13612068292357.0,
    1720146321549.0 / 2090206949498.0,
    3134564353537.0 / 4481467310338.0,
    2277821191437.0 / 14882151754819.0,
])
RK4_C = np.array([
    0.0,
    1432997174477.0 / 9575080441755.0,
    2526269341429.0 / 6820363962896.0,
    2006345519317.0 / 3224310063776.0,
    2802321613138.0 / 2924317926251.0,
])


class NumericalFailure(RuntimeError):
    """Non-finite values or invalid states during time integration."""

    def __init__(self, message, time=None, stage=None):
        super().__init__(message)
        self.time = time
        self.stage = stage


def compute_dt(field: SolutionField, gas: GasModel, cfl: float = 0.5) -> float:
    """Explicit step size from the advective and viscous constraints.

    ``dt = cfl * min(dx_min / (N^2 (|v| + a)))``, additionally bounded by
    ``cfl * dx_min^2 / (N^4 nu)`` when the gas is viscous.
    """
    if not cfl > 0:
        raise ValueError(f"CFL must be positive, got {cfl}")
    s = cons_to_prim(field.data, gas)
    a = np.sqrt(gas.kappa * s.p / s.rho)
    speed = np.sqrt(np.sum(s.vel**2, axis=0)) + a
    smax = float(np.max(speed))
    if not np.isfinite(smax) or smax <= 0:
        raise NumericalFailure(f"invalid wave speed {smax}", time=field.time)
    N2 = float(max(field.N, 1) ** 2)
    dxmin = float(np.min(field.mesh.dx))
    dt = cfl * dxmin / (N2 * smax)
    if gas.mu > 0:
        nu = gas.mu / float(np.min(s.rho))
        dt = min(dt, cfl * dxmin**2 / (N2**2 * nu))
    return dt


def rk_step(U: np.ndarray, t: float, dt: float, rhs, filter_hook=None, stage_filter=None,
            check_finite: bool = True) -> np.ndarray:
    """Advance ``U`` by one low-storage RK4(5) step and return the new array.

    ``rhs(U, t)`` returns the time derivative. ``filter_hook(U)`` returns the
    relaxation term ``sigma_F (K U - U)`` which is added to the stage
    derivative. ``stage_filter(U)`` instead overwrites each stage solution
    with a filtered copy, the classical hard-filtering approach.
    """
    if not dt > 0:
        raise ValueError(f"dt must be positive, got {dt}")
    U = U.copy()
    res = np.zeros_like(U)
    for stage in range(5):
        dU = rhs(U, t + RK4_C[stage] * dt)
        if filter_hook is not None:
            dU = dU + filter_hook(U)
        res *= RK4_A[stage]
        res += dt * dU
        U += RK4_B[stage] * res
        if stage_filter is not None:
            U = stage_filter(U)
        if check_finite and not np.isfinite(U).all():
            raise NumericalFailure(f"non-finite solution after RK stage {stage}",
                                   time=t, stage=stage)
    return U
