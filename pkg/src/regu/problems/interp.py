"""Inverse interpolation: recover gridded values from scattered samples.

The forward map interpolates an n-by-n nodal grid on the unit square to
M = n^2 seeded-random scatter points, so each matrix row is a small
stencil of interpolation weights.  Data comes from sampling a smooth
function directly at the scatter points -- not from applying the
operator -- so the interpolation error keeps the problem honest.
"""

from __future__ import annotations

import numpy as np
import scipy.sparse as sp

from ..linop import SparseOperator
from ._base import ProblemInfo, TestProblem

__all__ = ["gen_invinterp2"]


def _smooth_field(s, t):
    # the sampled ground-truth surface
    return np.sin(np.pi * s) * np.sin(0.5 * np.pi * t)


def gen_invinterp2(n=128, method="linear", seed=0):
    """Inverse 2D interpolation test problem.

    Parameters
    ----------
    n : int
        Grid side length (N = n^2 unknowns, M = n^2 scatter samples).
    method : {'linear', 'nearest'}
        'linear' builds bilinear rows (at most 4 nonzeros, summing to
        1); 'nearest' single-nonzero rows.
    seed : int
        Seed for the scatter locations.

    Returns
    -------
    TestProblem
    """
    if n < 2:
        raise ValueError(f"grid side length must be at least 2, got {n}")
    if method not in ("linear", "nearest"):
        raise ValueError(f"unknown interpolation method: {method!r}")
    N = n * n
    h = 1.0 / (n - 1)
    rng = np.random.default_rng(seed)
    scatter = rng.uniform(size=(N, 2))
    s, t = scatter[:, 0], scatter[:, 1]

    if method == "linear":
        i0 = np.minimum((s / h).astype(int), n - 2)
        j0 = np.minimum((t / h).astype(int), n - 2)
        fs = s / h - i0
        ft = t / h - j0
        rows = np.repeat(np.arange(N), 4)
        cols = np.concatenate(
            [
                i0 + j0 * n,
                (i0 + 1) + j0 * n,
                i0 + (j0 + 1) * n,
                (i0 + 1) + (j0 + 1) * n,
            ]
        ).reshape(4, N).T.ravel()
        vals = np.concatenate(
            [
                (1 - fs) * (1 - ft),
                fs * (1 - ft),
                (1 - fs) * ft,
                fs * ft,
            ]
        ).reshape(4, N).T.ravel()
    else:
        i0 = np.clip(np.round(s / h).astype(int), 0, n - 1)
        j0 = np.clip(np.round(t / h).astype(int), 0, n - 1)
        rows = np.arange(N)
        cols = i0 + j0 * n
        vals = np.ones(N)

    matrix = sp.csr_matrix((vals, (rows, cols)), shape=(N, N))
    matrix.eliminate_zeros()
    A = SparseOperator(matrix)

    grid = np.arange(n) * h
    x = _smooth_field(grid[:, None], grid[None, :]).ravel(order="F")
    b = _smooth_field(s, t)

    info = ProblemInfo(
        kind="invinterp2",
        xgrid=(n, n),
        bgrid=(N, 1),
        params={"method": method, "scatter": scatter, "spacing": h},
    )
    return TestProblem(A=A, b=b, x=x, info=info)
