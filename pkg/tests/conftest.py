import numpy as np
import pytest

from dgles.dg_operator import GasModel
from dgles.mesh import SolutionField, build_mesh


@pytest.fixture
def gas():
    return GasModel()


def smooth_field(cells=(2, 2, 2), N=3, gas=None, amp=0.1, seed=0):
    """Periodic, smooth, non-trivial state in all five variables."""
    gas = gas or GasModel()
    mesh = build_mesh(cells)
    x, y, z = mesh.node_coordinates(N)
    X = x.reshape(-1, N + 1)[:, :, None, None, None, None]
    Y = y.reshape(-1, N + 1)[None, None, :, :, None, None]
    Z = z.reshape(-1, N + 1)[None, None, None, None, :, :]
    rng = np.random.default_rng(seed)
    ph = rng.uniform(0, 2 * np.pi, 8)
    rho = 1 + amp * np.sin(X + ph[0]) * np.cos(Y + ph[1]) + amp * np.cos(Z + ph[2])
    u = 0.3 + amp * np.sin(Y + ph[3]) + 0 * X
    v = -0.2 + amp * np.cos(Z + ph[4]) * np.sin(X) + 0 * Y
    w = 0.1 + amp * np.sin(X + ph[5]) + 0 * Z
    p = 1 + amp * np.cos(X + Y + ph[6]) + amp * np.sin(Z + ph[7])
    from dgles.dg_operator import prim_to_cons
    U = prim_to_cons(rho, np.stack(np.broadcast_arrays(u, v, w)), p + 0 * rho, gas)
    return SolutionField(mesh, N, np.ascontiguousarray(U))


ACCEPTANCE_LINES = []


def report(criterion: str, passed: bool, detail: str) -> bool:
    """Record one acceptance line; printed again in the terminal summary."""
    line = f"[{'PASS' if passed else 'FAIL'}] {criterion}: {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    return passed


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
