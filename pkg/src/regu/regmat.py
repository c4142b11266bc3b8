"""Regularization matrices and priorconditioning.

Builders for the smoothing/sparsity operators used in penalized and
priorconditioned least squares: discrete Laplacians (invertible, so
usable as priorconditioners), first-difference pairs for total
variation, and the iteratively reweighted diagonal / gradient-weighted
stacks that restarted sparsity and TV schemes refresh between outer
iterations.

All image-domain matrices assume column-major (Fortran) vectorization;
pixel (i, j) of an n-by-n image is entry ``i + j*n``.
"""

from __future__ import annotations

import numpy as np
import scipy.sparse as sp
from scipy.linalg import qr as dense_qr, solve_triangular
from scipy.sparse.linalg import splu

from .linop import IdentityOperator, SparseOperator

__all__ = [
    "build_laplacian",
    "build_tv_pair",
    "irn_weights",
    "htv_weights",
    "tv_value",
    "Priorconditioner",
    "resolve_regularizer",
]

#: relative floor applied to reweighting denominators
FLOOR_SCALE = 1e-10


def build_laplacian(n, dim=1):
    """Negative discrete Laplacian stencil on a line or square grid.

    The 1D matrix is tridiagonal (1, -2, 1) with the -2 diagonal kept at
    the endpoints, which makes it nonsingular; the 2D matrix is the
    Kronecker sum of two 1D copies and inherits invertibility.

    Parameters
    ----------
    n : int
        Grid side length.  The 2D matrix is n^2-by-n^2.
    dim : {1, 2}

    Returns
    -------
    SparseOperator
    """
    if n < 2:
        raise ValueError(f"laplacian needs n >= 2, got {n}")
    one = np.ones(n)
    l1 = sp.diags([one[:-1], -2.0 * one, one[:-1]], [-1, 0, 1], format="csr")
    if dim == 1:
        return SparseOperator(l1)
    if dim == 2:
        eye = sp.identity(n, format="csr")
        return SparseOperator(sp.kron(eye, l1) + sp.kron(l1, eye))
    raise ValueError(f"dim must be 1 or 2, got {dim}")


def build_tv_pair(n):
    """Forward-difference pair (D_h, D_v) on an n-by-n pixel grid.

    D_h differences each pixel against its horizontal neighbor (next
    column), D_v against its vertical neighbor (next row).  Both are
    n(n-1)-by-n^2; row r of D_h addresses pixel ``(r % n, r // n)`` and
    row r of D_v addresses pixel ``(r % (n-1), r // (n-1))``.

    Returns
    -------
    (SparseOperator, SparseOperator)
    """
    if n < 2:
        raise ValueError(f"difference pair needs n >= 2, got {n}")
    nn = n * n
    m = n * (n - 1)
    r = np.arange(m)
    # horizontal: pixel flat index equals the row index for j < n-1
    dh = sp.csr_matrix(
        (
            np.concatenate([-np.ones(m), np.ones(m)]),
            (np.concatenate([r, r]), np.concatenate([r, r + n])),
        ),
        shape=(m, nn),
    )
    i = r % (n - 1)
    j = r // (n - 1)
    lo = i + j * n
    dv = sp.csr_matrix(
        (
            np.concatenate([-np.ones(m), np.ones(m)]),
            (np.concatenate([r, r]), np.concatenate([lo, lo + 1])),
        ),
        shape=(m, nn),
    )
    return SparseOperator(dh), SparseOperator(dv)


def _union_pair(n):
    """Difference pair extended to the common pixel set.

    Both matrices are (n^2-1)-by-n^2, indexed by pixel flat index; a row
    is zero where that difference does not exist (last column for the
    horizontal one, last row for the vertical one), so corresponding
    rows always address the same pixel.
    """
    nn = n * n
    dh, dv = build_tv_pair(n)
    pad = sp.csr_matrix((n - 1, nn))
    eh = sp.vstack([dh.matrix, pad], format="csr")
    f = np.arange(nn - 1)
    live = f[f % n < n - 1]
    ev = sp.csr_matrix(
        (
            np.concatenate([-np.ones(live.size), np.ones(live.size)]),
            (np.concatenate([live, live]), np.concatenate([live, live + 1])),
        ),
        shape=(nn - 1, nn),
    )
    return eh, ev


def _pixel_gradients(x, n):
    eh, ev = _union_pair(n)
    return eh @ x, ev @ x, eh, ev


def tv_value(x):
    """Discrete (isotropic) total variation of a vectorized square image."""
    x = np.asarray(x, dtype=np.float64)
    n = int(round(np.sqrt(x.size)))
    if n * n != x.size:
        raise ValueError(f"expected a vectorized square image, got length {x.size}")
    gh, gv, _, _ = _pixel_gradients(x, n)
    return float(np.sum(np.sqrt(gh**2 + gv**2)))


def irn_weights(x, floor=None):
    """Diagonal reweighting matrix for sparsity-promoting restarts.

    Entries are ``max(|x_i|, floor)**(-1/2)``, so the penalty
    ``||L x||^2`` approximates ``||x||_1`` near the current iterate.

    Parameters
    ----------
    x : ndarray
        Current iterate.
    floor : float, optional
        Absolute floor on |x_i|.  Default is 1e-10 * max|x_i|; for an
        all-zero iterate the floor falls back to 1, giving the identity.

    Returns
    -------
    SparseOperator
        Square diagonal matrix, always invertible.
    """
    x = np.asarray(x, dtype=np.float64)
    if floor is None:
        top = np.max(np.abs(x)) if x.size else 0.0
        floor = FLOOR_SCALE * top if top > 0.0 else 1.0
    if floor <= 0.0:
        raise ValueError(f"floor must be positive, got {floor}")
    w = np.maximum(np.abs(x), floor) ** -0.5
    return SparseOperator(sp.diags(w, format="csr"))


def htv_weights(x, floor=None):
    """Gradient-weighted difference stack for total-variation restarts.

    Builds ``[W D_h; W D_v]`` on the common pixel set, with diagonal
    weights ``W_ii = max(g_h(i)^2 + g_v(i)^2, floor^2)**(-1/4)`` from
    the difference magnitudes of the current iterate, so that
    ``||L x||^2`` reproduces the total variation of x (up to the floor).

    Parameters
    ----------
    x : ndarray
        Current iterate, a vectorized n-by-n image.
    floor : float, optional
        Floor on the gradient magnitude.  Default is 1e-10 times the
        largest magnitude (1 when all gradients vanish).

    Returns
    -------
    SparseOperator
        Shape 2(n^2-1)-by-n^2; full column rank is not guaranteed, so
        this matrix is for stacked (not priorconditioned) solves.
    """
    x = np.asarray(x, dtype=np.float64)
    n = int(round(np.sqrt(x.size)))
    if n * n != x.size:
        raise ValueError(f"expected a vectorized square image, got length {x.size}")
    gh, gv, eh, ev = _pixel_gradients(x, n)
    mag2 = gh**2 + gv**2
    if floor is None:
        top = float(np.sqrt(mag2.max())) if mag2.size else 0.0
        floor = FLOOR_SCALE * top if top > 0.0 else 1.0
    if floor <= 0.0:
        raise ValueError(f"floor must be positive, got {floor}")
    w = np.maximum(mag2, floor**2) ** -0.25
    wdiag = sp.diags(w)
    return SparseOperator(sp.vstack([wdiag @ eh, wdiag @ ev], format="csr"))


class Priorconditioner:
    """Solver for L^{-1} v and L^{-T} v against a full-rank regularizer.

    Square matrices are LU-factored once (sparse); a rectangular L with
    full column rank is reduced to its triangular QR factor R, which
    spans the same penalty (||L x|| = ||R x||).

    Raises
    ------
    ValueError
        If L is rank deficient ("regularization matrix must have full
        rank") or has fewer rows than columns.
    """

    def __init__(self, regmatrix):
        if isinstance(regmatrix, IdentityOperator) or regmatrix is None:
            self._mode = "identity"
            return
        matrix = regmatrix.matrix if isinstance(regmatrix, SparseOperator) else regmatrix
        matrix = sp.csr_matrix(matrix, dtype=np.float64)
        m, n = matrix.shape
        if m < n:
            raise ValueError(
                f"regularization matrix must have full rank: {m}x{n} is rank deficient"
            )
        if m == n:
            try:
                lu = splu(matrix.tocsc())
            except RuntimeError as exc:
                raise ValueError("regularization matrix must have full rank") from exc
            u_diag = np.abs(lu.U.diagonal())
            if u_diag.min() <= np.finfo(float).eps * max(u_diag.max(), 1.0):
                raise ValueError("regularization matrix must have full rank")
            self._mode = "lu"
            self._lu = lu
        else:
            if m * n > 2**24:
                raise ValueError(
                    f"rectangular regularizer too large to reduce: {m}x{n}"
                )
            r = dense_qr(matrix.toarray(), mode="r")[0][:n, :n]
            d = np.abs(np.diag(r))
            if d.size == 0 or d.min() <= np.finfo(float).eps * max(d.max(), 1.0) * max(m, n):
                raise ValueError("regularization matrix must have full rank")
            self._mode = "triangular"
            self._r = r

    def solve(self, v, transposed=False):
        """Return L^{-1} v (or L^{-T} v when ``transposed``)."""
        v = np.asarray(v, dtype=np.float64)
        if self._mode == "identity":
            return v.copy()
        if self._mode == "lu":
            return self._lu.solve(v, trans="T" if transposed else "N")
        return solve_triangular(self._r, v, trans="T" if transposed else "N")


def resolve_regularizer(spec, n):
    """Turn a SolveOptions.RegMatrix value into an operator or None.

    ``spec`` may be None or 'identity' (no regularizer), the strings
    'laplacian1d' / 'laplacian2d' (built for problem size n), an
    operator, or anything scipy can interpret as a sparse matrix.
    """
    if spec is None or (isinstance(spec, str) and spec == "identity"):
        return None
    if isinstance(spec, str):
        if spec == "laplacian1d":
            return build_laplacian(n, dim=1)
        if spec == "laplacian2d":
            side = int(round(np.sqrt(n)))
            if side * side != n:
                raise ValueError(
                    f"laplacian2d needs a square image size, got N = {n}"
                )
            return build_laplacian(side, dim=2)
        raise ValueError(f"unknown regularization matrix: {spec!r}")
    if isinstance(spec, SparseOperator) or isinstance(spec, IdentityOperator):
        return None if isinstance(spec, IdentityOperator) else spec
    return SparseOperator(sp.csr_matrix(spec))
