"""One-dimensional polynomial machinery on Legendre-Gauss-Lobatto nodes."""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np


def legendre(N: int, x):
    """Return P_N(x) and P_{N-1}(x) (unnormalized) by three-term recursion."""
    x = np.asarray(x, dtype=float)
    p_prev = np.ones_like(x)
    if N == 0:
        return p_prev, np.zeros_like(x)
    p = x.copy()
    for j in range(1, N):
        p, p_prev = ((2 * j + 1) * x * p - j * p_prev) / (j + 1), p
    return p, p_prev


def legendre_basis(N: int, x) -> np.ndarray:
    """Orthonormal Legendre polynomials phi_0..phi_N evaluated at ``x``.

    Column ``j`` holds ``sqrt(j + 0.5) * P_j(x)``.
    """
    x = np.atleast_1d(np.asarray(x, dtype=float))
    P = np.empty((x.size, N + 1))
    P[:, 0] = 1.0
    if N >= 1:
        P[:, 1] = x
    for j in range(1, N):
        P[:, j + 1] = ((2 * j + 1) * x * P[:, j] - j * P[:, j - 1]) / (j + 1)
    return P * np.sqrt(np.arange(N + 1) + 0.5)


def lgl_nodes_weights(N: int, tol: float = 1e-15, maxiter: int = 100):
    """Legendre-Gauss-Lobatto nodes and weights for polynomial degree ``N``.

    The nodes are the roots of ``(1 - x**2) P_N'(x)``, returned in ascending
    order, and the weights are ``2 / (N (N + 1) P_N(x_i)**2)``.
    """
    if N < 1:
        raise ValueError(f"LGL nodes need N >= 1, got N={N}")
    # Chebyshev-Gauss-Lobatto initial guess, descending
    x = np.cos(np.pi * np.arange(N + 1) / N)
    for _ in range(maxiter):
        p, p_prev = legendre(N, x)
        # Newton on (1-x^2)P'_N, using (1-x^2)P'_N = N (P_{N-1} - x P_N)
        # and its derivative -N(N+1) P_N; endpoints stay fixed.
        dx = (x * p - p_prev) / ((N + 1) * p)
        x = x - dx
        if np.max(np.abs(dx)) < tol:
            break
    x = x[::-1].copy()
    x[0], x[-1] = -1.0, 1.0
    # enforce exact symmetry
    x = 0.5 * (x - x[::-1])
    if N % 2 == 0:
        x[N // 2] = 0.0
    p, _ = legendre(N, x)
    w = 2.0 / (N * (N + 1) * p**2)
    return x, w


def barycentric_weights(nodes) -> np.ndarray:
    nodes = np.asarray(nodes, dtype=float)
    diff = nodes[:, None] - nodes[None, :]
    np.fill_diagonal(diff, 1.0)
    return 1.0 / np.prod(diff, axis=1)


def derivative_matrix(N: int, nodes) -> np.ndarray:
    """Lagrange derivative matrix, ``D[i, j] = l_j'(x_i)``.

    Diagonal entries use the negative-sum trick so that rows sum to zero.
    """
    nodes = np.asarray(nodes, dtype=float)
    if nodes.size != N + 1:
        raise ValueError("expected N+1 nodes")
    wb = barycentric_weights(nodes)
    diff = nodes[:, None] - nodes[None, :]
    np.fill_diagonal(diff, 1.0)
    D = (wb[None, :] / wb[:, None]) / diff
    np.fill_diagonal(D, 0.0)
    np.fill_diagonal(D, -D.sum(axis=1))
    return D


def interpolation_matrix(nodes, x) -> np.ndarray:
    """Matrix evaluating the Lagrange interpolant on ``nodes`` at points ``x``."""
    nodes = np.asarray(nodes, dtype=float)
    x = np.atleast_1d(np.asarray(x, dtype=float))
    wb = barycentric_weights(nodes)
    diff = x[:, None] - nodes[None, :]
    exact = np.isclose(diff, 0.0, atol=1e-15, rtol=0.0)
    diff[exact] = 1.0
    L = wb[None, :] / diff
    L /= L.sum(axis=1, keepdims=True)
    rows = np.any(exact, axis=1)
    L[rows] = exact[rows].astype(float)
    return L


def legendre_vandermonde(N: int, nodes):
    """Orthonormal Legendre Vandermonde ``V[i, j] = phi_j(x_i)`` and its inverse."""
    V = legendre_basis(N, nodes)
    if V.shape != (N + 1, N + 1):
        raise ValueError("expected N+1 nodes")
    Vinv = np.linalg.inv(V)
    return V, Vinv


def change_degree_matrices(N_hi: int, N_lo: int):
    """Prolongation and L2 projection between LGL nodal sets.

    Returns ``(interp, project)``: ``interp`` has shape (N_hi+1, N_lo+1) and
    evaluates a degree-N_lo interpolant at the degree-N_hi nodes; ``project``
    has shape (N_lo+1, N_hi+1) and truncates the orthonormal modal expansion
    of degree-N_hi data to its first N_lo+1 modes.
    """
    if N_lo < 1 or N_hi <= N_lo:
        raise ValueError(f"need N_hi > N_lo >= 1, got N_hi={N_hi}, N_lo={N_lo}")
    hi = reference_element(N_hi)
    lo = reference_element(N_lo)
    interp = interpolation_matrix(lo.nodes, hi.nodes)
    project = lo.V @ hi.Vinv[: N_lo + 1, :]
    return interp, project


@dataclass(frozen=True)
class ReferenceElement:
    N: int
    nodes: np.ndarray
    weights: np.ndarray
    D: np.ndarray
    V: np.ndarray
    Vinv: np.ndarray
    M: np.ndarray = field(repr=False)

    @property
    def n(self) -> int:
        """Nodes per direction."""
        return self.N + 1


@lru_cache(maxsize=None)
def reference_element(N: int) -> ReferenceElement:
    """Cached, read-only reference element of degree ``N``."""
    nodes, weights = lgl_nodes_weights(N)
    D = derivative_matrix(N, nodes)
    V, Vinv = legendre_vandermonde(N, nodes)
    for a in (nodes, weights, D, V, Vinv):
        a.setflags(write=False)
    return ReferenceElement(N, nodes, weights, D, V, Vinv, M=weights)
