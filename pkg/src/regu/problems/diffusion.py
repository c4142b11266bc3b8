"""Inverse diffusion: recover an initial heat distribution.

The forward map advances the heat equation on the unit square with
homogeneous Neumann boundaries from t = 0 to t = TFinal, discretized by
piecewise-linear finite elements on a uniform triangulation (2(n-1)^2
right triangles) in space and Crank-Nicolson in time.  Each time step
solves (M + dt/2 S) u+ = (M - dt/2 S) u with the mass matrix M and
stiffness matrix S; one sparse factorization of the left side is reused
across all steps and applies.

Multiplying by the transpose would require stepping the factorized
solves in reverse through the same machinery; the operator deliberately
does not offer it, so only transpose-free solvers apply.
"""

from __future__ import annotations

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import splu

from ..linop import FunctionalOperator
from ._base import ProblemInfo, TestProblem

__all__ = ["gen_diffusion", "assemble_fem_matrices"]


def assemble_fem_matrices(n):
    """P1 mass and stiffness matrices on the uniform unit-square mesh.

    The mesh has n-by-n nodes and 2(n-1)^2 right triangles, each cell
    split along its (i, j) -> (i+1, j+1) diagonal.  Nodes are numbered
    column-major: node (i, j) at position (i h, j h), h = 1/(n-1), has
    index i + j n.

    Returns
    -------
    (M, S) : CSR matrices of shape (n^2, n^2)
    """
    if n < 2:
        raise ValueError(f"mesh needs at least 2 nodes per side, got {n}")
    h = 1.0 / (n - 1)
    i, j = np.meshgrid(np.arange(n - 1), np.arange(n - 1), indexing="ij")
    a = (i + j * n).ravel()
    b = (i + 1 + j * n).ravel()
    c = (i + (j + 1) * n).ravel()
    d = (i + 1 + (j + 1) * n).ravel()
    # right-angle vertex first in both triangles of each cell
    tri = np.vstack(
        [np.column_stack([b, a, d]), np.column_stack([c, a, d])]
    )

    k_local = 0.5 * np.array([[2.0, -1.0, -1.0], [-1.0, 1.0, 0.0], [-1.0, 0.0, 1.0]])
    m_local = (h * h / 24.0) * np.array(
        [[2.0, 1.0, 1.0], [1.0, 2.0, 1.0], [1.0, 1.0, 2.0]]
    )

    rows = np.repeat(tri, 3, axis=1).ravel()
    cols = np.tile(tri, (1, 3)).ravel()
    ntri = tri.shape[0]
    N = n * n
    S = sp.coo_matrix(
        (np.tile(k_local.ravel(), ntri), (rows, cols)), shape=(N, N)
    ).tocsr()
    M = sp.coo_matrix(
        (np.tile(m_local.ravel(), ntri), (rows, cols)), shape=(N, N)
    ).tocsr()
    return M, S


def _initial_condition(n):
    # smooth compatible bump: product of raised cosines, zero normal
    # derivative on the boundary, scaled to unit total
    t = np.arange(n) / (n - 1)
    g = 0.5 * (1.0 + np.cos(np.pi * (2.0 * t - 1.0)))
    u0 = np.outer(g, g)
    return u0 / u0.sum()


def gen_diffusion(n=128, TFinal=0.01, Tsteps=100):
    """Inverse diffusion test problem (no adjoint available).

    Parameters
    ----------
    n : int
        Nodes per side; N = n^2 unknowns.
    TFinal : float
        Diffusion time the data is observed at.
    Tsteps : int
        Number of Crank-Nicolson steps covering [0, TFinal].

    Returns
    -------
    TestProblem
        ``A`` is a functional operator with ``has_adjoint = False``;
        ``info.params`` carries the mass and stiffness matrices.
    """
    if n < 3:
        raise ValueError(f"diffusion grid needs n >= 3, got {n}")
    if TFinal <= 0.0:
        raise ValueError(f"TFinal must be positive, got {TFinal}")
    if Tsteps < 1:
        raise ValueError(f"Tsteps must be at least 1, got {Tsteps}")
    N = n * n
    M, S = assemble_fem_matrices(n)
    dt = TFinal / Tsteps
    lhs = splu((M + (dt / 2.0) * S).tocsc())
    rhs = (M - (dt / 2.0) * S).tocsr()

    def forward(u):
        v = u
        for _ in range(Tsteps):
            v = lhs.solve(rhs @ v)
        return v

    A = FunctionalOperator(N, N, forward)
    x = _initial_condition(n).ravel(order="F")
    b = A.apply(x)

    info = ProblemInfo(
        kind="diffusion",
        xgrid=(n, n),
        bgrid=(n, n),
        params={"TFinal": TFinal, "Tsteps": Tsteps, "mass": M, "stiffness": S},
    )
    return TestProblem(A=A, b=b, x=x, info=info)
