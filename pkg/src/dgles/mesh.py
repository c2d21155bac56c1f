"""Periodic Cartesian meshes, nodal solution storage and checkpoint I/O.

Solution arrays use the layout ``(var, ex, i, ey, j, ez, k)``: element index
and local LGL node index interleaved per direction, so that a directional
derivative is a batched matmul on one axis pair and reshaping to
``(var, ex*n, ey*n, ez*n)`` is free.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .reference_element import ReferenceElement, reference_element

NVAR = 5
CHECKPOINT_MAGIC = b"DGLES1"
_HEADER = struct.Struct("<6s4q4d")

# face ids: 2*axis + side, side 0 = minus face, side 1 = plus face
FACES = tuple((axis, side) for axis in range(3) for side in (0, 1))


class CheckpointError(ValueError):
    pass


@dataclass(frozen=True)
class CartesianMesh:
    cells_per_dir: tuple[int, int, int]
    domain_lengths: tuple[float, float, float]
    neighbors: np.ndarray = field(repr=False, compare=False)

    @property
    def dx(self) -> np.ndarray:
        return np.asarray(self.domain_lengths) / np.asarray(self.cells_per_dir)

    @property
    def J(self) -> float:
        """Jacobian of the affine map from [-1, 1]^3 to one element."""
        return float(np.prod(self.dx) / 8.0)

    @property
    def n_elements(self) -> int:
        return int(np.prod(self.cells_per_dir))

    @property
    def element_volume(self) -> float:
        return float(np.prod(self.dx))

    @property
    def volume(self) -> float:
        return float(np.prod(self.domain_lengths))

    def element_index(self, ex: int, ey: int, ez: int) -> int:
        nx, ny, nz = self.cells_per_dir
        return (ex * ny + ey) * nz + ez

    def element_coords(self, e: int) -> tuple[int, int, int]:
        nx, ny, nz = self.cells_per_dir
        return e // (ny * nz), (e // nz) % ny, e % nz

    def neighbor(self, e: int, face: int) -> tuple[int, int]:
        """Adjacent element across ``face`` and the face id seen from it."""
        return int(self.neighbors[e, face]), face ^ 1

    def node_coordinates(self, N: int):
        """Physical coordinates of all LGL nodes as three 1D arrays.

        Entry ``x[e*n + i]`` is the x coordinate of node ``i`` in element
        column ``e``; nodes on shared faces appear twice.
        """
        ref = reference_element(N)
        out = []
        for c, h in zip(self.cells_per_dir, self.dx):
            left = np.arange(c)[:, None] * h
            out.append((left + 0.5 * h * (ref.nodes[None, :] + 1.0)).ravel())
        return tuple(out)


def build_mesh(cells_per_dir=(1, 1, 1), domain_lengths=(2 * np.pi,) * 3) -> CartesianMesh:
    cells = tuple(int(c) for c in cells_per_dir)
    lengths = tuple(float(v) for v in domain_lengths)
    if len(cells) != 3 or len(lengths) != 3:
        raise ValueError("need three cell counts and three lengths")
    if min(cells) < 1:
        raise ValueError(f"cell counts must be >= 1, got {cells}")
    if not min(lengths) > 0:
        raise ValueError(f"domain lengths must be > 0, got {lengths}")
    nx, ny, nz = cells
    idx = np.arange(nx * ny * nz).reshape(cells)
    nbr = np.empty((idx.size, 6), dtype=np.int64)
    for axis in range(3):
        nbr[:, 2 * axis] = np.roll(idx, 1, axis=axis).ravel()
        nbr[:, 2 * axis + 1] = np.roll(idx, -1, axis=axis).ravel()
    nbr.setflags(write=False)
    return CartesianMesh(cells, lengths, nbr)


@dataclass
class SolutionField:
    mesh: CartesianMesh
    N: int
    data: np.ndarray
    time: float = 0.0

    def __post_init__(self):
        n = self.N + 1
        nx, ny, nz = self.mesh.cells_per_dir
        shape = (NVAR, nx, n, ny, n, nz, n)
        if self.data.shape != shape:
            raise ValueError(f"data shape {self.data.shape} != expected {shape}")

    @classmethod
    def zeros(cls, mesh: CartesianMesh, N: int, time: float = 0.0) -> "SolutionField":
        n = N + 1
        nx, ny, nz = mesh.cells_per_dir
        return cls(mesh, N, np.zeros((NVAR, nx, n, ny, n, nz, n)), time)

    @property
    def ref(self) -> ReferenceElement:
        return reference_element(self.N)

    def copy(self) -> "SolutionField":
        return SolutionField(self.mesh, self.N, self.data.copy(), self.time)

    def element_major(self) -> np.ndarray:
        """Data as ``(element, i, j, k, var)``, elements in C order of (ex, ey, ez)."""
        nx, ny, nz = self.mesh.cells_per_dir
        n = self.N + 1
        a = self.data.transpose(1, 3, 5, 2, 4, 6, 0)
        return a.reshape(nx * ny * nz, n, n, n, NVAR)

    @classmethod
    def from_element_major(cls, mesh, N, arr, time=0.0) -> "SolutionField":
        nx, ny, nz = mesh.cells_per_dir
        n = N + 1
        a = np.asarray(arr, dtype=float).reshape(nx, ny, nz, n, n, n, NVAR)
        return cls(mesh, N, np.ascontiguousarray(a.transpose(6, 0, 3, 1, 4, 2, 5)), time)


def quadrature_weights(mesh: CartesianMesh, N: int) -> np.ndarray:
    """Per-node weights ``J w_p w_q w_r`` broadcastable against one variable."""
    w = reference_element(N).weights
    nx, ny, nz = mesh.cells_per_dir
    n = N + 1
    W = mesh.J * w[:, None, None] * w[None, :, None] * w[None, None, :]
    return np.broadcast_to(W.reshape(1, n, 1, n, 1, n), (nx, n, ny, n, nz, n))


def global_integral(field: SolutionField, integrand) -> float:
    """Integrate a per-node scalar over the domain with LGL quadrature.

    ``integrand`` is either an array shaped like one variable of
    ``field.data`` or a callable taking the conserved array ``(5, ...)``.
    """
    values = integrand(field.data) if callable(integrand) else integrand
    values = np.broadcast_to(values, field.data.shape[1:])
    return float(np.sum(values * quadrature_weights(field.mesh, field.N)))


def write_checkpoint(path, field: SolutionField) -> None:
    nx, ny, nz = field.mesh.cells_per_dir
    header = _HEADER.pack(CHECKPOINT_MAGIC, field.N, nx, ny, nz,
                          *field.mesh.domain_lengths, field.time)
    body = np.ascontiguousarray(field.element_major(), dtype="<f8")
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(body.tobytes())


def read_checkpoint(path) -> SolutionField:
    raw = Path(path).read_bytes()
    if len(raw) < _HEADER.size or raw[:6] != CHECKPOINT_MAGIC:
        raise CheckpointError(f"{path}: not a DGLES1 checkpoint")
    magic, N, nx, ny, nz, lx, ly, lz, t = _HEADER.unpack_from(raw)
    if N < 1 or min(nx, ny, nz) < 1:
        raise CheckpointError(f"{path}: corrupt header")
    n = N + 1
    count = nx * ny * nz * n**3 * NVAR
    body = raw[_HEADER.size:]
    if len(body) != 8 * count:
        raise CheckpointError(f"{path}: expected {8 * count} data bytes, found {len(body)}")
    mesh = build_mesh((nx, ny, nz), (lx, ly, lz))
    arr = np.frombuffer(body, dtype="<f8").astype(float)
    return SolutionField.from_element_major(mesh, N, arr, t)
