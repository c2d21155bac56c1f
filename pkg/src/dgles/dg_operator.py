"""Split-form DGSEM right-hand side for the compressible Navier-Stokes equations.

Conserved variables are ``U = (rho, rho u, rho v, rho w, rho e)`` with the
variable axis first. All pointwise routines broadcast over trailing axes.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numba import njit

from .mesh import SolutionField

FLUX_VARIANTS = ("kep_central", "roe", "l2roe")
ENTROPY_FIX = 0.05


class InvalidStateError(ValueError):
    """Non-physical state (rho <= 0 or p <= 0) with its location."""

    def __init__(self, message, location=None):
        super().__init__(message if location is None else f"{message} at index {location}")
        self.location = location


@dataclass(frozen=True)
class GasModel:
    kappa: float = 1.4
    R: float = 1.0
    mu: float = 0.0
    Pr: float = 0.72

    def __post_init__(self):
        if not self.kappa > 1:
            raise ValueError(f"kappa must exceed 1, got {self.kappa}")
        if self.mu < 0:
            raise ValueError(f"mu must be >= 0, got {self.mu}")
        if not self.Pr > 0:
            raise ValueError(f"Pr must be > 0, got {self.Pr}")
        if not self.R > 0:
            raise ValueError(f"R must be > 0, got {self.R}")

    @property
    def cv(self) -> float:
        return self.R / (self.kappa - 1.0)

    @property
    def cp(self) -> float:
        return self.kappa * self.cv

    @property
    def lam(self) -> float:
        """Heat conductivity."""
        return self.cp * self.mu / self.Pr


@dataclass
class PrimitiveState:
    rho: np.ndarray
    vel: np.ndarray  # (3, ...)
    p: np.ndarray
    T: np.ndarray
    e: np.ndarray
    h: np.ndarray

    @property
    def u(self):
        return self.vel[0]

    @property
    def v(self):
        return self.vel[1]

    @property
    def w(self):
        return self.vel[2]


def _first_bad(mask):
    idx = np.argwhere(mask)
    return tuple(int(i) for i in idx[0]) if idx.size else None


def cons_to_prim(U, gas: GasModel, check: bool = True) -> PrimitiveState:
    U = np.asarray(U, dtype=float)
    rho = U[0]
    if check and not np.all(rho > 0):
        raise InvalidStateError("non-positive density", _first_bad(~(rho > 0)))
    vel = U[1:4] / rho
    e = U[4] / rho
    p = (gas.kappa - 1.0) * (U[4] - 0.5 * rho * np.sum(vel * vel, axis=0))
    if check and not np.all(p > 0):
        raise InvalidStateError("non-positive pressure", _first_bad(~(p > 0)))
    T = p / (rho * gas.R)
    h = e + p / rho
    return PrimitiveState(rho, vel, p, T, e, h)


def prim_to_cons(rho, vel, p, gas: GasModel) -> np.ndarray:
    rho = np.asarray(rho, dtype=float)
    vel = np.asarray(vel, dtype=float)
    p = np.asarray(p, dtype=float)
    shape = np.broadcast_shapes(rho.shape, vel.shape[1:], p.shape)
    U = np.empty((5,) + shape)
    U[0] = rho
    U[1:4] = rho * vel
    U[4] = p / (gas.kappa - 1.0) + 0.5 * rho * np.sum(vel * vel, axis=0)
    return U


def _unit_normal(normal):
    if np.ndim(normal) == 0:
        n = np.zeros(3)
        n[int(normal)] = 1.0
        return n
    n = np.asarray(normal, dtype=float)
    if n.shape != (3,):
        raise ValueError("normal must be an axis index or a 3-vector")
    return n


def euler_flux(U, normal, gas: GasModel) -> np.ndarray:
    """Advective flux in direction ``normal`` (axis index or unit vector)."""
    n = _unit_normal(normal)
    s = cons_to_prim(U, gas)
    vn = np.tensordot(n, s.vel, axes=1)
    F = np.empty_like(np.asarray(U, dtype=float))
    F[0] = s.rho * vn
    for c in range(3):
        F[1 + c] = s.rho * vn * s.vel[c] + n[c] * s.p
    F[4] = s.rho * vn * s.h
    return F


def _kep_flux_prim(sL: PrimitiveState, sR: PrimitiveState, n) -> np.ndarray:
    rho = 0.5 * (sL.rho + sR.rho)
    vel = 0.5 * (sL.vel + sR.vel)
    p = 0.5 * (sL.p + sR.p)
    h = 0.5 * (sL.h + sR.h)
    mdot = rho * np.tensordot(n, vel, axes=1)
    F = np.empty((5,) + mdot.shape)
    F[0] = mdot
    for c in range(3):
        F[1 + c] = mdot * vel[c] + n[c] * p
    F[4] = mdot * h
    return F


def two_point_kep_flux(UL, UR, normal, gas: GasModel) -> np.ndarray:
    """Kinetic-energy-preserving two-point flux built from arithmetic means."""
    n = _unit_normal(normal)
    return _kep_flux_prim(cons_to_prim(UL, gas), cons_to_prim(UR, gas), n)


def _roe_dissipation(sL, sR, UL, UR, n, gas, low_mach: bool):
    """|A_Roe| (U_R - U_L), optionally with low-Mach scaled acoustic velocity jumps."""
    sqL, sqR = np.sqrt(sL.rho), np.sqrt(sR.rho)
    wsum = sqL + sqR
    vel = (sqL * sL.vel + sqR * sR.vel) / wsum
    H = (sqL * sL.h + sqR * sR.h) / wsum
    q2 = np.sum(vel * vel, axis=0)
    a2 = (gas.kappa - 1.0) * (H - 0.5 * q2)
    if not np.all(a2 > 0):
        raise InvalidStateError("Roe average has non-positive sound speed", _first_bad(~(a2 > 0)))
    a = np.sqrt(a2)
    rho = sqL * sqR
    vn = np.tensordot(n, vel, axes=1)

    drho = sR.rho - sL.rho
    dp = sR.p - sL.p
    dvel = sR.vel - sL.vel
    dvn = np.tensordot(n, dvel, axes=1)

    if low_mach:
        mach = np.maximum(np.sqrt(np.sum(sL.vel**2, axis=0) / (gas.kappa * sL.p / sL.rho)),
                          np.sqrt(np.sum(sR.vel**2, axis=0) / (gas.kappa * sR.p / sR.rho)))
        z = np.minimum(1.0, mach)
    else:
        z = 1.0

    lam1 = np.abs(vn - a)
    lam5 = np.abs(vn + a)
    lam2 = np.abs(vn)
    delta = ENTROPY_FIX * (np.sqrt(q2) + a)
    lam1 = np.where(lam1 < delta, (lam1**2 + delta**2) / (2 * delta), lam1)
    lam5 = np.where(lam5 < delta, (lam5**2 + delta**2) / (2 * delta), lam5)

    alpha1 = lam1 * (dp - rho * a * z * dvn) / (2 * a2)
    alpha5 = lam5 * (dp + rho * a * z * dvn) / (2 * a2)
    alpha2 = lam2 * (drho - dp / a2)
    dvt = dvel - np.multiply.outer(n, dvn)
    shear = lam2 * rho

    D = np.empty((5,) + vn.shape)
    D[0] = alpha1 + alpha5 + alpha2
    for c in range(3):
        D[1 + c] = (alpha1 * (vel[c] - a * n[c]) + alpha5 * (vel[c] + a * n[c])
                    + alpha2 * vel[c] + shear * dvt[c])
    D[4] = (alpha1 * (H - a * vn) + alpha5 * (H + a * vn) + alpha2 * 0.5 * q2
            + shear * np.sum(vel * dvt, axis=0))
    return D


def riemann_flux(UL, UR, normal, gas: GasModel, variant: str = "l2roe") -> np.ndarray:
    """Interface flux: KEP central flux plus optional Roe-type matrix dissipation."""
    if variant not in FLUX_VARIANTS:
        raise ValueError(f"unknown flux variant {variant!r}; choose from {FLUX_VARIANTS}")
    n = _unit_normal(normal)
    sL, sR = cons_to_prim(UL, gas), cons_to_prim(UR, gas)
    F = _kep_flux_prim(sL, sR, n)
    if variant != "kep_central":
        F -= 0.5 * _roe_dissipation(sL, sR, UL, UR, n, gas, low_mach=(variant == "l2roe"))
    return F


# ---------------------------------------------------------------------------
# element operators on the (q, ex, i, ey, j, ez, k) layout


def apply_along(A: np.ndarray, q: np.ndarray, axis: int) -> np.ndarray:
    """Apply the 1D matrix ``A`` along reference direction ``axis`` of every element."""
    shp = q.shape
    n_in = shp[2 + 2 * axis]
    lead = int(np.prod(shp[: 2 + 2 * axis]))
    q = np.ascontiguousarray(q)
    if axis == 2:
        out = q.reshape(-1, n_in) @ A.T
    else:
        out = np.matmul(A, q.reshape(lead, n_in, -1))
    new = list(shp)
    new[2 + 2 * axis] = A.shape[0]
    return out.reshape(new)


def apply_tensor(A: np.ndarray, q: np.ndarray) -> np.ndarray:
    """Apply ``A`` along all three reference directions (tensor-product operator)."""
    for axis in range(3):
        q = apply_along(A, q, axis)
    return q


def _face_slice(axis: int, node: int):
    idx = [slice(None)] * 7
    idx[2 + 2 * axis] = node
    return tuple(idx)


def face_traces(q: np.ndarray, axis: int):
    """Left/right traces at every plus-face in direction ``axis`` (periodic)."""
    left = q[_face_slice(axis, -1)]
    right = np.roll(q[_face_slice(axis, 0)], -1, axis=1 + 2 * axis)
    return left, right


def add_surface_term(out, fstar, f_minus, f_plus, axis, weights, scale):
    """Add ``scale/w_i * (delta_iN (F*-F)_N - delta_i0 (F*-F)_0)`` to ``out``.

    ``fstar`` lives on the plus face of each element; ``f_plus``/``f_minus``
    are the element's own traces at its plus/minus faces.
    """
    eaxis = 1 + 2 * axis
    out[_face_slice(axis, -1)] += scale / weights[-1] * (fstar - f_plus)
    out[_face_slice(axis, 0)] -= scale / weights[0] * (np.roll(fstar, 1, axis=eaxis) - f_minus)


def _volume_products(s: PrimitiveState, mom, rhoE):
    """Direction-independent nodal quantities entering the split volume term:
    rho, u, v, w, h, p, rho u, rho v, rho w, rho h."""
    q = np.empty((10,) + s.rho.shape)
    q[0] = s.rho
    q[1:4] = s.vel
    q[4] = s.h
    q[5] = s.p
    q[6:9] = mom
    np.add(rhoE, s.p, out=q[9])
    return q


@njit(cache=True)
def _combine_split(base, Dbase, Dextra, axis, out):
    n = base.shape[1]
    for i in range(n):
        rho = base[0, i]
        B = base[1 + axis, i]
        rhoB = base[6 + axis, i]
        Drho = Dbase[0, i]
        DB = Dbase[1 + axis, i]
        DrhoB = Dbase[6 + axis, i]
        t1 = B * Drho + DrhoB
        out[0, i] = 0.5 * (rho * DB + t1)
        for c in range(4):
            out[1 + c, i] = 0.25 * (rhoB * Dbase[1 + c, i] + base[6 + c, i] * DB
                                    + base[1 + c, i] * t1 + rho * Dextra[c, i]
                                    + B * Dbase[6 + c, i] + Dextra[4 + c, i])
        out[1 + axis, i] += Dbase[5, i]


def _split_volume(base, Dbase, D, axis):
    """sum_m 2 D_im F#(U_i, U_m) for the Pirozzoli flux, expanded into products.

    Every mean product is multiplied out, so the sum reduces to ``D`` applied
    to products of nodal quantities; ``sum_m D_im = 0`` removes the term that
    only involves node ``i``.
    """
    shape = base.shape[1:]
    B = base[1 + axis]
    extra = np.empty((8,) + shape)
    np.multiply(B, base[1:5], out=extra[:4])
    np.multiply(base[6 + axis], base[1:5], out=extra[4:])
    Dextra = apply_along(D, extra, axis)
    out = np.empty((5,) + shape)
    _combine_split(base.reshape(10, -1), Dbase.reshape(10, -1), Dextra.reshape(8, -1),
                   axis, out.reshape(5, -1))
    return out


def br1_gradients(field: SolutionField, gas: GasModel, prim: PrimitiveState | None = None):
    """BR1 lifted gradients of (u, v, w, T).

    Returns an array ``G`` of shape ``(3, 4, ...)`` with
    ``G[a, q] = d q / d x_a`` and ``q`` in (u, v, w, T).
    """
    s = prim if prim is not None else cons_to_prim(field.data, gas)
    ref = field.ref
    q = np.concatenate([s.vel, s.T[None]])
    G = np.empty((3,) + q.shape)
    for axis in range(3):
        scale = 2.0 / field.mesh.dx[axis]
        g = apply_along(ref.D, q, axis)
        qL, qR = face_traces(q, axis)
        qstar = 0.5 * (qL + qR)
        add_surface_term(g, qstar, q[_face_slice(axis, 0)], qL, axis, ref.weights, 1.0)
        G[axis] = scale * g
    return G


def viscous_flux(s: PrimitiveState, grad, gas: GasModel, axis: int, mu=None):
    """Viscous flux F^v_l for direction ``axis``; ``mu`` may be a nodal array."""
    mu = gas.mu if mu is None else mu
    lam = gas.cp * mu / gas.Pr
    div = grad[0, 0] + grad[1, 1] + grad[2, 2]
    Fv = np.empty((5,) + s.rho.shape)
    Fv[0] = 0.0
    energy = lam * grad[axis, 3]
    for c in range(3):
        tau = mu * (grad[axis, c] + grad[c, axis])
        if c == axis:
            tau = tau - mu * (2.0 / 3.0) * div
        Fv[1 + c] = tau
        energy = energy + tau * s.vel[c]
    Fv[4] = energy
    return Fv


def _slice_prim(s: PrimitiveState, idx) -> PrimitiveState:
    return PrimitiveState(s.rho[idx], s.vel[(slice(None),) + idx], s.p[idx], s.T[idx],
                          s.e[idx], s.h[idx])


def _roll_prim(s: PrimitiveState, shift, axis) -> PrimitiveState:
    return PrimitiveState(np.roll(s.rho, shift, axis), np.roll(s.vel, shift, axis + 1),
                          *(np.roll(a, shift, axis) for a in (s.p, s.T, s.e, s.h)))


def dg_rhs(field: SolutionField, gas: GasModel, variant: str = "l2roe",
           include_viscous: bool | None = None, eddy_viscosity=None) -> np.ndarray:
    """Semi-discrete time derivative ``U_t`` of the split-form DGSEM.

    ``eddy_viscosity`` is an optional callable ``(field, prim, grad) -> mu_t``
    returning a nodal turbulent viscosity added to ``gas.mu``. Viscous terms
    are skipped when neither molecular nor eddy viscosity is active.
    """
    if variant not in FLUX_VARIANTS:
        raise ValueError(f"unknown flux variant {variant!r}; choose from {FLUX_VARIANTS}")
    if include_viscous is None:
        include_viscous = gas.mu > 0 or eddy_viscosity is not None
    U = field.data
    ref = field.ref
    s = cons_to_prim(U, gas)
    base = _volume_products(s, U[1:4], U[4])
    Ut = np.zeros_like(U)
    for axis in range(3):
        n = np.zeros(3)
        n[axis] = 1.0
        scale = 2.0 / field.mesh.dx[axis]
        vol = _split_volume(base, apply_along(ref.D, base, axis), ref.D, axis)
        eaxis = 1 + 2 * axis
        sp = _slice_prim(s, _face_slice(axis, -1)[1:])
        sm = _slice_prim(s, _face_slice(axis, 0)[1:])
        sr = _roll_prim(sm, -1, eaxis - 1)
        fstar = _kep_flux_prim(sp, sr, n)
        if variant != "kep_central":
            UL, UR = face_traces(U, axis)
            fstar -= 0.5 * _roe_dissipation(sp, sr, UL, UR, n, gas, variant == "l2roe")
        add_surface_term(vol, fstar, _kep_flux_prim(sm, sm, n), _kep_flux_prim(sp, sp, n),
                         axis, ref.weights, 1.0)
        vol *= scale
        Ut -= vol

    if include_viscous:
        grad = br1_gradients(field, gas, s)
        mu = gas.mu
        if eddy_viscosity is not None:
            mu = mu + eddy_viscosity(field, s, grad)
        for axis in range(3):
            scale = 2.0 / field.mesh.dx[axis]
            Fv = viscous_flux(s, grad, gas, axis, mu)
            div = apply_along(ref.D, Fv, axis)
            FL, FR = face_traces(Fv, axis)
            add_surface_term(div, 0.5 * (FL + FR), Fv[_face_slice(axis, 0)], FL,
                             axis, ref.weights, 1.0)
            Ut += scale * div
    return Ut
