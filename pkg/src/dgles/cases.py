"""Initial conditions: Taylor-Green vortex, synthetic isotropic turbulence, uniform flow."""

from __future__ import annotations

import numpy as np

from .dg_operator import GasModel, prim_to_cons
from .mesh import CartesianMesh, SolutionField


def _require_cubic_2pi(mesh: CartesianMesh, what: str):
    if not np.allclose(mesh.domain_lengths, 2 * np.pi, rtol=1e-12, atol=0):
        raise ValueError(f"{what} needs a (2*pi)^3 domain, got lengths {mesh.domain_lengths}")


def _grid(mesh: CartesianMesh, N: int):
    """Broadcastable node coordinates in the (ex, i, ey, j, ez, k) layout."""
    n = N + 1
    x, y, z = mesh.node_coordinates(N)
    nx, ny, nz = mesh.cells_per_dir
    return (x.reshape(nx, n, 1, 1, 1, 1),
            y.reshape(1, 1, ny, n, 1, 1),
            z.reshape(1, 1, 1, 1, nz, n))


def init_uniform(mesh: CartesianMesh, N: int, gas: GasModel, rho=1.0, vel=(0.0, 0.0, 0.0),
                 p=1.0) -> SolutionField:
    f = SolutionField.zeros(mesh, N)
    shape = f.data.shape[1:]
    v = np.broadcast_to(np.asarray(vel, dtype=float).reshape(3, *([1] * 6)), (3,) + shape)
    f.data[:] = prim_to_cons(np.full(shape, float(rho)), v, np.full(shape, float(p)), gas)
    return f


def init_tgv(mesh: CartesianMesh, N: int, gas: GasModel, mach: float = 0.1,
             V0: float = 1.0, rho0: float = 1.0) -> SolutionField:
    """Taylor-Green vortex at reference Mach number ``mach = V0 / a0``."""
    _require_cubic_2pi(mesh, "Taylor-Green vortex")
    if not mach > 0:
        raise ValueError(f"Mach number must be positive, got {mach}")
    X, Y, Z = _grid(mesh, N)
    p0 = rho0 * V0**2 / (gas.kappa * mach**2)
    T0 = p0 / (rho0 * gas.R)
    u = V0 * np.sin(X) * np.cos(Y) * np.cos(Z)
    v = -V0 * np.cos(X) * np.sin(Y) * np.cos(Z)
    w = np.zeros_like(u * v)
    p = p0 + rho0 * V0**2 / 16.0 * (np.cos(2 * X) + np.cos(2 * Y)) * (np.cos(2 * Z) + 2.0)
    rho = p / (gas.R * T0)
    vel = np.stack(np.broadcast_arrays(u, v, w))
    f = SolutionField.zeros(mesh, N)
    f.data[:] = prim_to_cons(rho, vel, np.broadcast_to(p, rho.shape), gas)
    return f


def shell_index(kx, ky, kz):
    """Integer shell of each wavenumber: k-1/2 <= |k| < k+1/2."""
    return np.floor(np.sqrt(kx**2 + ky**2 + kz**2) + 0.5).astype(int)


def dhit_target_spectrum(slope=-5.0 / 3.0, k_min=1, k_max=16, u_rms=1.0):
    """Shell energies E(k) = A k^slope on [k_min, k_max], normalized so that the
    total kinetic energy is 3/2 u_rms^2. Returns (k, E) for k = 0..k_max."""
    k = np.arange(k_max + 1)
    E = np.zeros(k_max + 1)
    band = (k >= k_min) & (k <= k_max)
    E[band] = k[band].astype(float) ** slope
    E *= 1.5 * u_rms**2 / E.sum()
    return k, E


def eddy_turnover_time(slope=-5.0 / 3.0, k_min=1, k_max=16, u_rms=1.0) -> float:
    """Large-eddy turnover time L_int / u_rms of the target spectrum."""
    k, E = dhit_target_spectrum(slope, k_min, k_max, u_rms)
    L_int = np.pi / (2 * u_rms**2) * np.sum(E[1:] / k[1:])
    return L_int / u_rms


def dhit_fourier_coefficients(slope=-5.0 / 3.0, k_min=1, k_max=16, u_rms=1.0, seed=0):
    """Solenoidal Fourier coefficients ``c[comp, kx, ky, kz]`` for wavenumbers
    ``-k_max..k_max`` with Hermitian symmetry and exact shell energies."""
    if not 1 <= k_min <= k_max:
        raise ValueError(f"need 1 <= k_min <= k_max, got {k_min}, {k_max}")
    rng = np.random.default_rng(seed)
    M = 2 * k_max + 4
    noise = rng.standard_normal((3, M, M, M))
    c = np.fft.fftn(noise, axes=(1, 2, 3))
    kk = np.fft.fftfreq(M, 1.0 / M)
    KX, KY, KZ = np.meshgrid(kk, kk, kk, indexing="ij")
    K2 = KX**2 + KY**2 + KZ**2
    K2[0, 0, 0] = 1.0
    kdotc = (KX * c[0] + KY * c[1] + KZ * c[2]) / K2
    c[0] -= KX * kdotc
    c[1] -= KY * kdotc
    c[2] -= KZ * kdotc

    shells = shell_index(KX, KY, KZ)
    _, E_target = dhit_target_spectrum(slope, k_min, k_max, u_rms)
    energy = 0.5 * np.sum(np.abs(c) ** 2, axis=0)
    scale = np.zeros_like(K2)
    for s in range(k_min, k_max + 1):
        sel = shells == s
        e = energy[sel].sum()
        if e > 0:
            scale[sel] = np.sqrt(E_target[s] / e)
    c *= scale
    idx = np.r_[np.arange(0, k_max + 1), np.arange(M - k_max, M)]
    c = c[:, idx][:, :, idx][:, :, :, idx]
    return np.fft.fftshift(c, axes=(1, 2, 3))


def evaluate_fourier(coeffs, x, y, z):
    """Direct Fourier summation on the tensor grid ``x, y, z`` (1D arrays)."""
    K = coeffs.shape[1]
    k = np.arange(K) - (K - 1) // 2
    ex = np.exp(1j * np.outer(k, x))
    ey = np.exp(1j * np.outer(k, y))
    ez = np.exp(1j * np.outer(k, z))
    a = np.einsum("cabd,dz->cabz", coeffs, ez)
    a = np.einsum("cabz,by->cayz", a, ey)
    a = np.einsum("cayz,ax->cxyz", a, ex)
    return a.real


def init_dhit(mesh: CartesianMesh, N: int, gas: GasModel, slope=-5.0 / 3.0, k_min=1, k_max=16,
              mach: float = 0.1, seed: int = 0, u_rms: float = 1.0, rho0: float = 1.0) -> SolutionField:
    """Random divergence-free velocity with ``E(k) ~ k^slope`` at uniform rho and p.

    ``mach`` is ``u_rms / a0``; velocities are evaluated at the LGL nodes by
    direct Fourier summation.
    """
    _require_cubic_2pi(mesh, "isotropic turbulence")
    n = N + 1
    nyquist = min(mesh.cells_per_dir) * n // 2
    if k_max >= nyquist:
        raise ValueError(f"k_max={k_max} must be below the grid Nyquist wavenumber {nyquist}")
    if not mach > 0:
        raise ValueError(f"Mach number must be positive, got {mach}")
    coeffs = dhit_fourier_coefficients(slope, k_min, k_max, u_rms, seed)
    x, y, z = mesh.node_coordinates(N)
    vel = evaluate_fourier(coeffs, x, y, z)
    nx, ny, nz = mesh.cells_per_dir
    vel = vel.reshape(3, nx, n, ny, n, nz, n)
    p0 = rho0 * (u_rms / mach) ** 2 / gas.kappa
    f = SolutionField.zeros(mesh, N)
    shape = f.data.shape[1:]
    f.data[:] = prim_to_cons(np.full(shape, rho0), vel, np.full(shape, p0), gas)
    return f
