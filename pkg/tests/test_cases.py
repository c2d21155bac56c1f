import numpy as np
import pytest

from dgles.cases import (dhit_fourier_coefficients, dhit_target_spectrum, eddy_turnover_time,
                         evaluate_fourier, init_dhit, init_tgv, shell_index)
from dgles.dg_operator import GasModel, br1_gradients, cons_to_prim
from dgles.diagnostics import energy_spectrum, integral_kinetic_energy
from dgles.mesh import build_mesh, global_integral

GAS = GasModel()


def test_tgv_initial_condition():
    f = init_tgv(build_mesh((4, 4, 4)), 7, GAS, mach=0.1)
    s = cons_to_prim(f.data, GAS)
    assert np.all(s.vel[2] == 0)
    assert abs(integral_kinetic_energy(f) - 0.125) <= 1e-3 * 0.125
    T = s.T
    assert np.ptp(T) <= 1e-12 * T.max()                 # uniform temperature
    a0 = np.sqrt(GAS.kappa * s.p.mean() / s.rho.mean())
    assert 1 / a0 == pytest.approx(0.1, rel=1e-2)


def _tgv_divergence(cells, N):
    f = init_tgv(build_mesh((cells,) * 3), N, GAS)
    g = br1_gradients(f, GAS)
    return np.abs(g[0, 0] + g[1, 1] + g[2, 2]).max()


def test_tgv_discrete_divergence():
    assert _tgv_divergence(4, 11) <= 1e-8
    assert _tgv_divergence(4, 7) <= 2e-6            # interpolation-limited at N=7


@pytest.mark.xfail(strict=True, reason="the N=7, 4^3 interpolant of the vortex is only accurate "
                   "to ~1e-6; 1e-8 is reached at N=11 (or 8^3 cells)")
def test_tgv_discrete_divergence_n7():
    assert _tgv_divergence(4, 7) <= 1e-8


def test_tgv_rejects_non_cubic():
    with pytest.raises(ValueError):
        init_tgv(build_mesh((2, 2, 2), (1, 1, 1)), 3, GAS)


def test_target_spectrum_and_turnover():
    k, E = dhit_target_spectrum(-5 / 3, 1, 16, 1.0)
    assert E[0] == 0 and E.sum() == pytest.approx(1.5)
    np.testing.assert_allclose(E[2:] / E[1:-1], (k[2:] / k[1:-1]) ** (-5 / 3))
    assert eddy_turnover_time() == pytest.approx(1.592, abs=1e-3)


def test_shell_index_bands():
    assert shell_index(np.array(0.5), 0, 0) == 1
    assert shell_index(np.array(0.49), 0, 0) == 0
    assert shell_index(np.array(1.0), 1, 1) == 2


def test_fourier_coefficients_solenoidal_and_spectrum():
    kmax = 6
    c = dhit_fourier_coefficients(-5 / 3, 1, kmax, 1.0, seed=3)
    k = np.arange(-kmax, kmax + 1)
    KX, KY, KZ = np.meshgrid(k, k, k, indexing="ij")
    div = KX * c[0] + KY * c[1] + KZ * c[2]
    assert np.abs(div).max() <= 1e-12 * np.abs(c).max()
    shells = shell_index(KX, KY, KZ)
    E = np.bincount(shells.ravel(), 0.5 * np.sum(np.abs(c) ** 2, axis=0).ravel())
    _, target = dhit_target_spectrum(-5 / 3, 1, kmax, 1.0)
    np.testing.assert_allclose(E[:kmax + 1], target, rtol=1e-10, atol=1e-14)
    # real field: conjugate symmetry
    np.testing.assert_allclose(c, np.conj(c[:, ::-1, ::-1, ::-1]), atol=1e-14)


def test_dhit_spectrum_matches_target():
    f = init_dhit(build_mesh((4, 4, 4)), 7, GAS, k_max=8, seed=0)
    spec = energy_spectrum(f)
    _, target = dhit_target_spectrum(-5 / 3, 1, 8, 1.0)
    rel = np.abs(spec.E[2:7] / target[2:7] - 1)
    assert rel.max() <= 0.05, rel


def test_dhit_determinism_and_divergence():
    mesh = build_mesh((2, 2, 2))
    a = init_dhit(mesh, 15, GAS, k_max=2, seed=5)
    b = init_dhit(mesh, 15, GAS, k_max=2, seed=5)
    c = init_dhit(mesh, 15, GAS, k_max=2, seed=6)
    np.testing.assert_array_equal(a.data, b.data)
    assert np.abs(a.data - c.data).max() > 1e-3
    sa, sc = energy_spectrum(a), energy_spectrum(c)
    np.testing.assert_allclose(sa.E[1:3], sc.E[1:3], rtol=0.05)
    g = br1_gradients(a, GAS)
    div = g[0, 0] + g[1, 1] + g[2, 2]
    assert np.sqrt(global_integral(a, div**2) / mesh.volume) <= 1e-8


def test_dhit_pointwise_evaluation():
    c = dhit_fourier_coefficients(-5 / 3, 1, 3, 1.0, seed=1)
    x = np.array([0.3, 1.1])
    vel = evaluate_fourier(c, x, x, x)
    k = np.arange(-3, 4)
    direct = np.zeros((3, 2, 2, 2), complex)
    for i, kx in enumerate(k):
        for j, ky in enumerate(k):
            for l, kz in enumerate(k):
                phase = np.exp(1j * (kx * x[:, None, None] + ky * x[None, :, None]
                                     + kz * x[None, None, :]))
                direct += c[:, i, j, l, None, None, None] * phase
    np.testing.assert_allclose(vel, direct.real, atol=1e-13)


def test_dhit_rejects_kmax_above_nyquist():
    with pytest.raises(ValueError):
        init_dhit(build_mesh((2, 2, 2)), 3, GAS, k_max=4)
