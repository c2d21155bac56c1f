"""Modal relaxation-filter LES model and the constant-coefficient Smagorinsky baseline."""

from __future__ import annotations

from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np

from .dg_operator import apply_tensor, cons_to_prim
from .mesh import CartesianMesh, quadrature_weights
from .reference_element import ReferenceElement, reference_element

L_REF_DEFAULT = 2 * np.pi


@dataclass(frozen=True)
class KernelRecord:
    """One row of a kernel presets file."""

    N: int
    sigma: tuple[float, ...]
    c: float
    c_inf: float
    error: float | None = None


@dataclass(frozen=True)
class FilterKernel:
    N: int
    sigma: np.ndarray
    c: float
    K_nodal: np.ndarray = field(repr=False)
    L_ref: float = L_REF_DEFAULT


def modal_filter_matrix(sigma, ref: ReferenceElement) -> np.ndarray:
    """Nodal filter matrix ``V diag(sigma) V^-1``."""
    return ref.V @ (np.asarray(sigma, dtype=float)[:, None] * ref.Vinv)


def build_filter_kernel(sigma, c: float, N: int, ref: ReferenceElement | None = None,
                        L_ref: float = L_REF_DEFAULT) -> FilterKernel:
    sigma = np.asarray(sigma, dtype=float)
    if sigma.shape != (N + 1,):
        raise ValueError(f"kernel for N={N} needs {N + 1} coefficients, got {sigma.size}")
    if np.any(sigma < 0) or np.any(sigma > 1):
        raise ValueError(f"filter coefficients must lie in [0, 1], got {sigma.tolist()}")
    if c < 0:
        raise ValueError(f"filter strength constant must be >= 0, got {c}")
    if not L_ref > 0:
        raise ValueError(f"L_ref must be positive, got {L_ref}")
    ref = ref if ref is not None else reference_element(N)
    K = modal_filter_matrix(sigma, ref)
    sigma = sigma.copy()
    sigma.setflags(write=False)
    K.setflags(write=False)
    return FilterKernel(N, sigma, float(c), K, float(L_ref))


# ---------------------------------------------------------------------------
# presets file


def parse_kernel_file(text: str) -> dict[int, KernelRecord]:
    records = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        tok = line.split()
        N = int(tok[0])
        vals = [float(v) for v in tok[1:]]
        if len(vals) not in (N + 3, N + 4):
            raise ValueError(f"line {lineno}: expected {N + 3} or {N + 4} values after N={N}")
        err = vals[N + 3] if len(vals) == N + 4 else None
        records[N] = KernelRecord(N, tuple(vals[: N + 1]), vals[N + 1], vals[N + 2], err)
    return records


def format_kernel_record(rec: KernelRecord) -> str:
    fields = [str(rec.N)] + [repr(float(s)) for s in rec.sigma] + [repr(rec.c), repr(rec.c_inf)]
    if rec.error is not None:
        fields.append(repr(rec.error))
    return " ".join(fields)


def write_kernel_file(path, records) -> None:
    lines = ["# N  sigma_0 ... sigma_N  c  c_inf  [objective]"]
    lines += [format_kernel_record(r) for r in records]
    Path(path).write_text("\n".join(lines) + "\n")


def load_presets(path=None) -> dict[int, KernelRecord]:
    if path is None:
        text = resources.files("dgles").joinpath("data/kernels.txt").read_text()
    else:
        text = Path(path).read_text()
    return parse_kernel_file(text)


def preset_kernel(N: int, infinite_re: bool = False, L_ref: float = L_REF_DEFAULT) -> FilterKernel:
    """Shipped optimized kernel for degree ``N``, using ``c_inf`` if ``infinite_re``."""
    presets = load_presets()
    if N not in presets:
        raise KeyError(f"no preset kernel for N={N}; available: {sorted(presets)}")
    rec = presets[N]
    return build_filter_kernel(rec.sigma, rec.c_inf if infinite_re else rec.c, N, L_ref=L_ref)


# ---------------------------------------------------------------------------
# filter strength


def cutoff_filter_matrix(ref: ReferenceElement) -> np.ndarray:
    """Test filter: keep modes 0..N-1, remove mode N."""
    sigma = np.ones(ref.N + 1)
    sigma[-1] = 0.0
    return modal_filter_matrix(sigma, ref)


def test_filter_highpass(vel: np.ndarray, ref: ReferenceElement) -> np.ndarray:
    """High-pass part ``v - low(v)`` of nodal fields; the low pass removes every
    tensor mode with a 1D index equal to N."""
    return vel - apply_tensor(cutoff_filter_matrix(ref), vel)


def highest_mode_energy(vel: np.ndarray, mesh: CartesianMesh, ref: ReferenceElement) -> np.ndarray:
    """Per-element kinetic energy of the highest polynomial mode, shape (ex, ey, ez)."""
    vt = test_filter_highpass(vel, ref)
    e = np.sum(vt * vt, axis=0) * quadrature_weights(mesh, ref.N)
    return e.sum(axis=(1, 3, 5))


def filter_width(mesh: CartesianMesh, N: int) -> float:
    return mesh.element_volume ** (1.0 / 3.0) / (N + 1)


def filter_strength(E: np.ndarray, kernel: FilterKernel, mesh: CartesianMesh, N: int) -> np.ndarray:
    """``sigma_F = c sqrt(E / L_ref) / Delta^2`` per element."""
    E = np.asarray(E, dtype=float)
    if np.any(E < 0):
        raise ValueError("highest-mode energy must be non-negative")
    delta = filter_width(mesh, N)
    return kernel.c * np.sqrt(E / kernel.L_ref) / delta**2


def _broadcast_elements(sig):
    nx, ny, nz = sig.shape
    return sig.reshape(nx, 1, ny, 1, nz, 1)


def relaxation_term(U: np.ndarray, kernel: FilterKernel, strengths: np.ndarray) -> np.ndarray:
    """``sigma_F (K U - U)`` with ``K`` applied line by line in each direction."""
    return _broadcast_elements(strengths) * (apply_tensor(kernel.K_nodal, U) - U)


def apply_relaxation(Ut: np.ndarray, U: np.ndarray, kernel: FilterKernel,
                     strengths: np.ndarray) -> np.ndarray:
    return Ut + relaxation_term(U, kernel, strengths)


class RelaxationFilter:
    """Filter-based LES closure used as the RK ``filter_hook``.

    Call :meth:`update` once per time step to freeze the strengths; calling
    the object returns the relaxation term for a stage solution.
    """

    def __init__(self, kernel: FilterKernel, mesh: CartesianMesh, gas):
        self.kernel = kernel
        self.mesh = mesh
        self.gas = gas
        self.ref = reference_element(kernel.N)
        self.energy = None
        self.strengths = np.zeros(mesh.cells_per_dir)

    def update(self, U: np.ndarray) -> np.ndarray:
        vel = U[1:4] / U[0]
        self.energy = highest_mode_energy(vel, self.mesh, self.ref)
        self.strengths = filter_strength(self.energy, self.kernel, self.mesh, self.kernel.N)
        return self.strengths

    def __call__(self, U: np.ndarray) -> np.ndarray:
        return relaxation_term(U, self.kernel, self.strengths)


# ---------------------------------------------------------------------------
# Smagorinsky


def strain_rate_magnitude(grad: np.ndarray) -> np.ndarray:
    """``|S| = sqrt(2 S_ij S_ij)`` from velocity gradients ``grad[a, c] = du_c/dx_a``."""
    g = grad[:, :3]
    S = 0.5 * (g + g.swapaxes(0, 1))
    return np.sqrt(2.0 * np.sum(S * S, axis=(0, 1)))


def smagorinsky_viscosity(grad: np.ndarray, rho: np.ndarray, C_s: float,
                          mesh: CartesianMesh, N: int) -> np.ndarray:
    """Eddy viscosity ``rho (C_s Delta)^2 |S|``."""
    delta = filter_width(mesh, N)
    return rho * (C_s * delta) ** 2 * strain_rate_magnitude(grad)


class SmagorinskyModel:
    """Eddy-viscosity callback for :func:`dgles.dg_operator.dg_rhs`."""

    def __init__(self, C_s: float = 0.15):
        if C_s < 0:
            raise ValueError(f"C_s must be >= 0, got {C_s}")
        self.C_s = C_s

    def __call__(self, field, prim, grad):
        return smagorinsky_viscosity(grad, prim.rho, self.C_s, field.mesh, field.N)
