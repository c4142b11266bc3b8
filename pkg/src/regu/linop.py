"""Linear operators with exact adjoints.

Every forward map in this package is a :class:`LinearOperator`: a shaped,
immutable pair of callables ``apply`` / ``apply_adjoint`` acting on flat
float64 vectors.  Images are vectorized column-major (Fortran order)
throughout; any 2D reshape in or out of an operator must use
``order='F'``.

Adjoints are exact by construction, not matched numerically after the
fact: structured operators (Kronecker products, boundary-padded
convolutions, stacks, priorconditioned compositions) implement the
transpose of the same discrete map, and :func:`adjoint_consistency_test`
measures the residual inner-product identity for any operator.
"""

from __future__ import annotations

import numpy as np
import scipy.sparse as sp
from scipy.signal import convolve2d, fftconvolve

__all__ = [
    "LinearOperator",
    "IdentityOperator",
    "DenseOperator",
    "SparseOperator",
    "KroneckerOperator",
    "ConvolutionOperator",
    "StackedOperator",
    "PriorconditionedOperator",
    "FunctionalOperator",
    "DimensionMismatchError",
    "AdjointUnavailableError",
    "adjoint_consistency_test",
    "as_dense",
    "stack_vertical",
    "size_of",
]


class DimensionMismatchError(ValueError):
    """Input vector length does not match the operator dimension."""


class AdjointUnavailableError(RuntimeError):
    """Operator has no adjoint; only transpose-free methods apply."""


def _as_vector(x, n, side, kind):
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 1 or x.shape[0] != n:
        actual = x.shape[0] if x.ndim == 1 else x.shape
        raise DimensionMismatchError(
            f"{kind} operator {side} expects a vector of length {n}, got {actual}"
        )
    return x


class LinearOperator:
    """Base class: a shaped linear map with an optional exact adjoint.

    Parameters
    ----------
    rows, cols : int
        Output and input dimensions M and N.
    has_adjoint : bool
        Whether :meth:`apply_adjoint` is available.  Transpose-free
        solvers are the only option when this is False.

    Notes
    -----
    Subclasses implement ``_apply`` (and ``_apply_adjoint`` when the
    adjoint exists); the public methods validate shapes and dtypes.
    Operators are immutable after construction.
    """

    kind = "abstract"

    def __init__(self, rows, cols, has_adjoint=True):
        if rows < 1 or cols < 1:
            raise ValueError(f"operator dimensions must be positive, got ({rows}, {cols})")
        self._shape = (int(rows), int(cols))
        self._has_adjoint = bool(has_adjoint)

    @property
    def shape(self):
        """Tuple ``(M, N)``: output by input dimension."""
        return self._shape

    @property
    def has_adjoint(self):
        return self._has_adjoint

    def apply(self, x):
        """Forward map ``x -> A x``.  Returns a new float64 vector of length M."""
        x = _as_vector(x, self._shape[1], "apply", self.kind)
        y = np.asarray(self._apply(x), dtype=np.float64)
        return y

    def apply_adjoint(self, y):
        """Adjoint map ``y -> A^T y``.  Returns a new float64 vector of length N."""
        if not self._has_adjoint:
            raise AdjointUnavailableError(
                f"{self.kind} operator has no adjoint; "
                "use transpose-free methods only"
            )
        y = _as_vector(y, self._shape[0], "apply_adjoint", self.kind)
        x = np.asarray(self._apply_adjoint(y), dtype=np.float64)
        return x

    def _apply(self, x):
        raise NotImplementedError

    def _apply_adjoint(self, y):
        raise NotImplementedError


class IdentityOperator(LinearOperator):
    """The identity on R^n."""

    kind = "identity"

    def __init__(self, n):
        super().__init__(n, n)

    def _apply(self, x):
        return x.copy()

    def _apply_adjoint(self, y):
        return y.copy()


class _MatrixBacked(LinearOperator):
    """Shared row/column access for dense and sparse explicit matrices.

    Row iteration (ART) and row/column 1- and 2-norms (SIRT scalings)
    are only defined for operators with explicit entries.
    """

    def row_norms_squared(self):
        raise NotImplementedError

    def abs_row_sums(self):
        raise NotImplementedError

    def abs_col_sums(self):
        raise NotImplementedError

    def row_entries(self, i):
        """Return ``(indices, values)`` of the nonzeros in row i."""
        raise NotImplementedError


class DenseOperator(_MatrixBacked):
    """Operator backed by a dense 2D array (copied, read-only)."""

    kind = "dense"

    def __init__(self, matrix):
        matrix = np.array(matrix, dtype=np.float64, order="C", copy=True)
        if matrix.ndim != 2:
            raise ValueError("dense operator needs a 2D array")
        matrix.setflags(write=False)
        super().__init__(matrix.shape[0], matrix.shape[1])
        self._matrix = matrix

    @property
    def matrix(self):
        return self._matrix

    def _apply(self, x):
        return self._matrix @ x

    def _apply_adjoint(self, y):
        return self._matrix.T @ y

    def row_norms_squared(self):
        return np.einsum("ij,ij->i", self._matrix, self._matrix)

    def abs_row_sums(self):
        return np.abs(self._matrix).sum(axis=1)

    def abs_col_sums(self):
        return np.abs(self._matrix).sum(axis=0)

    def row_entries(self, i):
        row = self._matrix[i]
        idx = np.nonzero(row)[0]
        return idx, row[idx]


class SparseOperator(_MatrixBacked):
    """Operator backed by a CSR sparse matrix.

    The raw CSR arrays are reachable as ``row_offsets``,
    ``column_indices`` and ``values``.
    """

    kind = "sparse_csr"

    def __init__(self, matrix):
        matrix = sp.csr_matrix(matrix, dtype=np.float64)
        super().__init__(matrix.shape[0], matrix.shape[1])
        self._matrix = matrix

    @property
    def matrix(self):
        return self._matrix

    @property
    def row_offsets(self):
        return self._matrix.indptr

    @property
    def column_indices(self):
        return self._matrix.indices

    @property
    def values(self):
        return self._matrix.data

    def _apply(self, x):
        return self._matrix @ x

    def _apply_adjoint(self, y):
        # CSR transpose matvec, no CSC copy
        return self._matrix.T @ y

    def row_norms_squared(self):
        return np.asarray(self._matrix.multiply(self._matrix).sum(axis=1)).ravel()

    def abs_row_sums(self):
        return np.asarray(abs(self._matrix).sum(axis=1)).ravel()

    def abs_col_sums(self):
        return np.asarray(abs(self._matrix).sum(axis=0)).ravel()

    def row_entries(self, i):
        lo, hi = self._matrix.indptr[i], self._matrix.indptr[i + 1]
        return self._matrix.indices[lo:hi], self._matrix.data[lo:hi]

    def nnz_per_row(self):
        return np.diff(self._matrix.indptr)


class KroneckerOperator(LinearOperator):
    """Kronecker product ``A = A2 (x) A1`` acting on vec'd n1-by-n2 arrays.

    ``apply`` evaluates ``vec(A1 @ X @ A2.T)`` where ``X`` is the input
    reshaped to (n1, n2) column-major, so the product matrix is never
    formed.
    """

    kind = "kronecker"

    def __init__(self, left_factor, right_factor):
        a2 = np.array(left_factor, dtype=np.float64, copy=True)
        a1 = np.array(right_factor, dtype=np.float64, copy=True)
        if a1.ndim != 2 or a2.ndim != 2:
            raise ValueError("Kronecker factors must be 2D arrays")
        a1.setflags(write=False)
        a2.setflags(write=False)
        super().__init__(a1.shape[0] * a2.shape[0], a1.shape[1] * a2.shape[1])
        self._a1 = a1
        self._a2 = a2

    @property
    def factors(self):
        """``(A2, A1)`` with A = A2 (x) A1."""
        return self._a2, self._a1

    def _apply(self, x):
        m1, n1 = self._a1.shape
        m2, n2 = self._a2.shape
        X = x.reshape((n1, n2), order="F")
        return (self._a1 @ X @ self._a2.T).ravel(order="F")

    def _apply_adjoint(self, y):
        m1, n1 = self._a1.shape
        m2, n2 = self._a2.shape
        Y = y.reshape((m1, m2), order="F")
        return (self._a1.T @ Y @ self._a2).ravel(order="F")


def _reflect_index(i, n):
    # half-sample symmetric reflection of an out-of-range index into [0, n)
    period = 2 * n
    m = i % period
    return m if m < n else period - 1 - m


#: multiply-add budget above which 2D convolutions switch to the FFT path
_DIRECT_CONV_BUDGET = 2**22


def _convolve2d_any(image, kernel, mode):
    """2D convolution, direct for small kernels and FFT-based for large.

    Both paths compute the same convolution; the FFT path only trades
    the last few digits for tractability once the direct multiply-add
    count exceeds a fixed budget.
    """
    if mode == "valid":
        out = (image.shape[0] - kernel.shape[0] + 1) * (
            image.shape[1] - kernel.shape[1] + 1
        )
    else:
        out = (image.shape[0] + kernel.shape[0] - 1) * (
            image.shape[1] + kernel.shape[1] - 1
        )
    if out * kernel.size <= _DIRECT_CONV_BUDGET:
        return convolve2d(image, kernel, mode=mode)
    return fftconvolve(image, kernel, mode=mode)


class ConvolutionOperator(LinearOperator):
    """Boundary-padded 2D convolution on an n-by-n image.

    The forward map pads the image by the kernel half-widths under the
    chosen boundary model (``zero``, ``periodic`` or ``reflective``),
    convolves in the spatial domain and crops to the original frame.
    Padding is a sparse 0/1 selection matrix P, so the exact adjoint is
    ``P^T`` applied to the full correlation; no FFT periodicity leaks in.

    Parameters
    ----------
    psf : ndarray
        2D point spread function.  Trailing exact zeros are cropped.
    n : int
        Image side length.
    boundary : {'zero', 'periodic', 'reflective'}
    center : tuple of int, optional
        Row/column index of the PSF center.  Defaults to the array
        midpoint ``(shape // 2)``.
    """

    kind = "convolution"

    def __init__(self, psf, n, boundary="reflective", center=None):
        psf = np.array(psf, dtype=np.float64, copy=True)
        if psf.ndim != 2:
            raise ValueError("psf must be a 2D array")
        if boundary not in ("zero", "periodic", "reflective"):
            raise ValueError(f"unknown boundary model: {boundary!r}")
        if center is None:
            center = (psf.shape[0] // 2, psf.shape[1] // 2)
        cr, cc = int(center[0]), int(center[1])

        # crop to the nonzero bounding box, keeping the center inside it
        nz = np.nonzero(psf)
        if nz[0].size == 0:
            raise ValueError("psf is identically zero")
        r0 = min(nz[0].min(), cr)
        r1 = max(nz[0].max(), cr)
        c0 = min(nz[1].min(), cc)
        c1 = max(nz[1].max(), cc)
        psf = psf[r0 : r1 + 1, c0 : c1 + 1]
        cr -= r0
        cc -= c0

        super().__init__(n * n, n * n)
        self._n = int(n)
        self._psf = psf
        self._psf.setflags(write=False)
        self._center = (cr, cc)
        self._boundary = boundary
        kh, kw = psf.shape
        # scene index ranges needed by true convolution with this center
        self._pad = (kh - 1 - cr, cr, kw - 1 - cc, cc)  # top, bottom, left, right
        self._selector = self._build_selector()

    @property
    def psf(self):
        return self._psf

    @property
    def boundary(self):
        return self._boundary

    @property
    def pad_widths(self):
        """Scene margins ``(top, bottom, left, right)`` the kernel reaches."""
        return self._pad

    def _build_selector(self):
        """Sparse P with pad(x) == P @ x, in column-major vec ordering."""
        n = self._n
        top, bottom, left, right = self._pad
        rows_p = n + top + bottom
        cols_p = n + left + right
        ri = np.arange(rows_p) - top
        ci = np.arange(cols_p) - left
        if self._boundary == "zero":
            rmask = (ri >= 0) & (ri < n)
            cmask = (ci >= 0) & (ci < n)
            rsrc = np.where(rmask, np.clip(ri, 0, n - 1), -1)
            csrc = np.where(cmask, np.clip(ci, 0, n - 1), -1)
        elif self._boundary == "periodic":
            rsrc = ri % n
            csrc = ci % n
        else:
            rsrc = np.array([_reflect_index(i, n) for i in ri])
            csrc = np.array([_reflect_index(i, n) for i in ci])

        RS, CS = np.meshgrid(rsrc, csrc, indexing="ij")
        keep = (RS >= 0) & (CS >= 0)
        pad_flat = (np.arange(rows_p)[:, None] + np.arange(cols_p)[None, :] * rows_p)[keep]
        src_flat = (RS + CS * n)[keep]
        P = sp.csr_matrix(
            (np.ones(pad_flat.size), (pad_flat, src_flat)),
            shape=(rows_p * cols_p, n * n),
        )
        return P

    def _padded(self, x):
        n = self._n
        top, bottom, left, right = self._pad
        X = x.reshape((n, n), order="F")
        mode = {"zero": "constant", "periodic": "wrap", "reflective": "symmetric"}[
            self._boundary
        ]
        return np.pad(X, ((top, bottom), (left, right)), mode=mode)

    def _apply(self, x):
        Xp = self._padded(x)
        Y = _convolve2d_any(Xp, self._psf, "valid")
        return Y.ravel(order="F")

    def _apply_adjoint(self, y):
        n = self._n
        Y = y.reshape((n, n), order="F")
        flipped = self._psf[::-1, ::-1]
        Zp = _convolve2d_any(Y, flipped, "full")
        return self._selector.T @ Zp.ravel(order="F")

    def blur_scene(self, scene):
        """Convolve an explicitly padded scene and crop to the n-by-n frame.

        ``scene`` must carry the same margins the operator pads with
        (see :attr:`pad_widths`); this is how simulated data avoids the
        inverse crime -- the scene supplies real content beyond the
        frame instead of the operator's boundary model.
        """
        n = self._n
        top, bottom, left, right = self._pad
        scene = np.asarray(scene, dtype=np.float64)
        expected = (n + top + bottom, n + left + right)
        if scene.shape != expected:
            raise ValueError(
                f"padded scene must have shape {expected}, got {scene.shape}"
            )
        return _convolve2d_any(scene, self._psf, "valid").ravel(order="F")


class StackedOperator(LinearOperator):
    """Vertical stack ``[A; lam * L]`` mapping x to ``(A x, lam * L x)``."""

    kind = "stacked"

    def __init__(self, top, bottom, scale_bottom=1.0):
        if top.shape[1] != bottom.shape[1]:
            raise DimensionMismatchError(
                f"stacked operators need equal column counts, "
                f"got {top.shape[1]} and {bottom.shape[1]}"
            )
        super().__init__(
            top.shape[0] + bottom.shape[0],
            top.shape[1],
            has_adjoint=top.has_adjoint and bottom.has_adjoint,
        )
        self._top = top
        self._bottom = bottom
        self._scale = float(scale_bottom)

    @property
    def parts(self):
        return self._top, self._bottom, self._scale

    def _apply(self, x):
        return np.concatenate(
            [self._top.apply(x), self._scale * self._bottom.apply(x)]
        )

    def _apply_adjoint(self, y):
        m = self._top.shape[0]
        return self._top.apply_adjoint(y[:m]) + self._scale * self._bottom.apply_adjoint(
            y[m:]
        )


class PriorconditionedOperator(LinearOperator):
    """Composition ``A @ L^{-1}`` for a square invertible regularizer L.

    ``prior`` is any object with a ``solve(v, transposed=False)`` method
    returning L^{-1} v (or L^{-T} v); see ``regmat.Priorconditioner``.
    """

    kind = "priorconditioned"

    def __init__(self, op, prior):
        super().__init__(op.shape[0], op.shape[1], has_adjoint=op.has_adjoint)
        self._op = op
        self._prior = prior

    @property
    def inner(self):
        return self._op

    @property
    def prior(self):
        return self._prior

    def _apply(self, x):
        return self._op.apply(self._prior.solve(x))

    def _apply_adjoint(self, y):
        return self._prior.solve(self._op.apply_adjoint(y), transposed=True)


class FunctionalOperator(LinearOperator):
    """Operator defined by forward/adjoint callables on flat vectors."""

    kind = "functional"

    def __init__(self, rows, cols, forward, adjoint=None):
        super().__init__(rows, cols, has_adjoint=adjoint is not None)
        self._forward = forward
        self._adjoint = adjoint

    def _apply(self, x):
        return self._forward(x)

    def _apply_adjoint(self, y):
        return self._adjoint(y)


def stack_vertical(top, bottom, scale_bottom=1.0):
    """Stack two operators vertically as ``[top; scale * bottom]``."""
    return StackedOperator(top, bottom, scale_bottom)


def size_of(op):
    """Return the ``(M, N)`` shape of an operator."""
    return op.shape


def as_dense(op):
    """Materialize an operator column by column into a dense (M, N) array."""
    m, n = op.shape
    A = np.empty((m, n))
    e = np.zeros(n)
    for j in range(n):
        e[j] = 1.0
        A[:, j] = op.apply(e)
        e[j] = 0.0
    return A


def adjoint_consistency_test(op, trials=20, seed=0):
    """Largest relative adjoint defect over random probe pairs.

    Draws ``trials`` pairs (x, y) from a seeded standard normal and
    returns ``max |<A x, y> - <x, A^T y>| / (||A x|| ||y||)``.
    """
    rng = np.random.default_rng(seed)
    m, n = op.shape
    worst = 0.0
    for _ in range(trials):
        x = rng.standard_normal(n)
        y = rng.standard_normal(m)
        ax = op.apply(x)
        aty = op.apply_adjoint(y)
        denom = np.linalg.norm(ax) * np.linalg.norm(y)
        if denom == 0.0:
            denom = 1.0
        worst = max(worst, abs(ax @ y - x @ aty) / denom)
    return worst
