import numpy as np
import pytest

from dgles.dg_operator import GasModel, dg_rhs, prim_to_cons
from dgles.les_filter import RelaxationFilter, preset_kernel
from dgles.mesh import SolutionField, build_mesh, global_integral
from dgles.time_integrator import RK4_A, RK4_B, RK4_C, NumericalFailure, compute_dt, rk_step
from conftest import smooth_field

GAS = GasModel()


def test_coefficient_consistency():
    # effective weights of the 2N-storage scheme sum to one (consistency)
    n = len(RK4_A)
    b_eff = np.zeros(n)
    for j in range(n):
        w = RK4_B[j]
        for i in range(j + 1, n):
            w += RK4_B[i] * np.prod(RK4_A[j + 1:i + 1])
        b_eff[j] = w
    assert b_eff.sum() == pytest.approx(1.0, abs=1e-12)
    assert RK4_A[0] == 0 and RK4_C[0] == 0


def _decay(dt):
    u = np.array([1.0])
    n = int(round(1.0 / dt))
    for k in range(n):
        u = rk_step(u, k * dt, dt, lambda U, t: -U)
    return abs(u[0] - np.exp(-1))


def test_fourth_order_on_linear_decay():
    errs = [_decay(dt) for dt in (0.5, 0.25, 0.125)]
    orders = np.log2(np.array(errs[:-1]) / errs[1:])
    assert np.all(orders > 3.8), orders


def test_fourth_order_time_dependent_rhs():
    def err(dt):
        u, t = np.array([0.0]), 0.0
        for _ in range(int(round(2.0 / dt))):
            u = rk_step(u, t, dt, lambda U, s: np.cos(s) * np.ones(1))
            t += dt
        return abs(u[0] - np.sin(2.0))
    e = [err(dt) for dt in (0.4, 0.2, 0.1)]
    assert np.log2(e[1] / e[2]) > 3.7


def test_fourth_order_with_filter_hook():
    f0 = smooth_field((2, 2, 2), 3, amp=0.2)
    filt = RelaxationFilter(preset_kernel(3), f0.mesh, GAS)
    filt.update(f0.data)
    filt.strengths = np.full(filt.strengths.shape, 5.0)
    zero = lambda U, t: np.zeros_like(U)

    def run(dt):
        U = f0.data.copy()
        for _ in range(int(round(0.4 / dt))):
            U = rk_step(U, 0.0, dt, zero, filter_hook=filt)
        return U
    ref = run(0.4 / 256)
    e = [np.abs(run(dt) - ref).max() for dt in (0.4 / 8, 0.4 / 16, 0.4 / 32)]
    assert np.log2(e[1] / e[2]) > 3.7


def test_zero_rhs_is_bitwise_identity():
    U = np.random.default_rng(0).normal(size=(5, 3))
    np.testing.assert_array_equal(rk_step(U, 0.0, 0.1, lambda V, t: np.zeros_like(V)), U)


def test_step_preserves_integrals():
    f = smooth_field((2, 2, 2), 3, amp=0.2)
    filt = RelaxationFilter(preset_kernel(3), f.mesh, GAS)
    filt.update(f.data)
    rhs = lambda U, t: dg_rhs(SolutionField(f.mesh, 3, U), GAS, "l2roe")
    U1 = rk_step(f.data, 0.0, 1e-3, rhs, filter_hook=filt)
    for q in range(5):
        a, b = global_integral(f, f.data[q]), global_integral(f, U1[q])
        assert abs(a - b) <= 1e-13 * max(1.0, abs(a))


def test_nan_reports_stage():
    def rhs(U, t):
        return np.full_like(U, np.nan) if t > 0 else np.zeros_like(U)
    with pytest.raises(NumericalFailure) as exc:
        rk_step(np.ones(3), 0.0, 0.1, rhs)
    assert exc.value.stage == 1


def test_invalid_dt():
    with pytest.raises(ValueError):
        rk_step(np.ones(3), 0.0, 0.0, lambda U, t: U)


def _uniform(cells, N, lengths=(2 * np.pi,) * 3, vel=(0, 0, 0), gas=GAS):
    mesh = build_mesh(cells, lengths)
    n = N + 1
    U = prim_to_cons(np.ones((cells[0], n, cells[1], n, cells[2], n)), np.asarray(vel, float)
                     .reshape(3, 1, 1, 1, 1, 1, 1), 1.0, gas)
    return SolutionField(mesh, N, np.ascontiguousarray(U))


def test_compute_dt_examples():
    f = _uniform((2, 2, 2), 4)
    dt = compute_dt(f, GAS, 0.5)
    assert dt == pytest.approx(0.5 * np.pi / (16 * np.sqrt(1.4)), rel=1e-14)
    assert compute_dt(f, GAS, 1.0) == pytest.approx(2 * dt, rel=1e-14)
    g = _uniform((4, 4, 4), 4)
    assert compute_dt(g, GAS, 0.5) == pytest.approx(dt / 2, rel=1e-14)
    h = _uniform((2, 2, 2), 4, vel=(1.0, 0, 0))
    assert compute_dt(h, GAS, 0.5) == pytest.approx(0.5 * np.pi / (16 * (1 + np.sqrt(1.4))))


def test_compute_dt_viscous_limit():
    gas = GasModel(mu=10.0)
    f = _uniform((2, 2, 2), 4, gas=gas)
    assert compute_dt(f, gas, 0.5) == pytest.approx(0.5 * np.pi**2 / (4**4 * 10.0))


def test_compute_dt_rejects_bad_state():
    f = _uniform((1, 1, 1), 2)
    f.data[4] = -1.0
    with pytest.raises(Exception):
        compute_dt(f, GAS, 0.5)
