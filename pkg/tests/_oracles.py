"""Independent reference implementations the tests compare against.

Everything here is written directly from the defining formulas (loops,
dense linear algebra), deliberately ignoring how the package computes
the same quantities, so agreement is meaningful.
"""

from __future__ import annotations

import numpy as np


def read_pgm(path):
    """Parse a binary P5 PGM file into a uint8 array of shape (rows, cols)."""
    with open(path, "rb") as fh:
        data = fh.read()
    fields = []
    pos = 0
    while len(fields) < 4:
        while pos < len(data) and data[pos : pos + 1].isspace():
            pos += 1
        if data[pos : pos + 1] == b"#":
            while data[pos : pos + 1] not in (b"\n", b""):
                pos += 1
            continue
        start = pos
        while pos < len(data) and not data[pos : pos + 1].isspace():
            pos += 1
        fields.append(data[start:pos])
    pos += 1  # single whitespace byte after maxval
    magic, width, height, maxval = fields
    assert magic == b"P5", f"not a binary PGM: {magic!r}"
    assert maxval == b"255"
    w, h = int(width), int(height)
    pixels = np.frombuffer(data[pos : pos + w * h], dtype=np.uint8)
    assert pixels.size == w * h, "truncated pixel payload"
    return pixels.reshape((h, w))


def reflect_index(i, n):
    """Half-sample symmetric reflection of an index into [0, n)."""
    while i < 0 or i >= n:
        if i < 0:
            i = -1 - i
        if i >= n:
            i = 2 * n - 1 - i
    return i


def conv2d_loop(img, psf, center, boundary):
    """Literal 2D convolution with boundary extension, by quadruple loop.

    out[i, j] = sum_{k,l} psf[k, l] * ext(img)[i - (k - cr), j - (l - cc)]
    where ext extends by zeros, periodic wrap, or symmetric reflection.
    """
    n0, n1 = img.shape
    kh, kw = psf.shape
    cr, cc = center
    out = np.zeros((n0, n1))
    for i in range(n0):
        for j in range(n1):
            acc = 0.0
            for k in range(kh):
                for l in range(kw):
                    ii = i - (k - cr)
                    jj = j - (l - cc)
                    if boundary == "zero":
                        if not (0 <= ii < n0 and 0 <= jj < n1):
                            continue
                    elif boundary == "periodic":
                        ii %= n0
                        jj %= n1
                    else:  # reflective
                        ii = reflect_index(ii, n0)
                        jj = reflect_index(jj, n1)
                    acc += psf[k, l] * img[ii, jj]
            out[i, j] = acc
    return out


def conv_matrix_loop(n, psf, center, boundary):
    """Dense (n^2, n^2) convolution matrix assembled column by column
    from the loop formula, columns in column-major pixel order."""
    cols = []
    for j in range(n):
        for i in range(n):
            e = np.zeros((n, n))
            e[i, j] = 1.0
            cols.append(conv2d_loop(e, psf, center, boundary).ravel(order="F"))
    return np.column_stack(cols)


def tv_loop(img):
    """Isotropic total variation by explicit pixel-pair loops.

    Sums sqrt(gh^2 + gv^2) over all pixels, taking each difference as 0
    where the forward neighbor does not exist.
    """
    n0, n1 = img.shape
    total = 0.0
    for i in range(n0):
        for j in range(n1):
            gh = img[i, j + 1] - img[i, j] if j + 1 < n1 else 0.0
            gv = img[i + 1, j] - img[i, j] if i + 1 < n0 else 0.0
            if gh != 0.0 or gv != 0.0:
                total += np.sqrt(gh * gh + gv * gv)
    return total


def dense_tikhonov(A, b, lam, L=None):
    """Solve (A^T A + lam^2 L^T L) x = A^T b densely."""
    A = np.asarray(A, dtype=np.float64)
    n = A.shape[1]
    LtL = np.eye(n) if L is None else np.asarray(L).T @ np.asarray(L)
    return np.linalg.solve(A.T @ A + lam * lam * LtL, A.T @ b)


def gmres_reference(apply_fn, b, kmax, start_with_ab=False):
    """Textbook Arnoldi-based minimal-residual iterates.

    Builds an orthonormal basis of span{v0, A v0, ...} with doubly
    reorthogonalized Gram-Schmidt (v0 = b, or A b when
    ``start_with_ab``), solving min ||H y - V^T b|| at every step.
    Returns the list of iterates x_1 .. x_kmax.
    """
    v0 = apply_fn(b) if start_with_ab else b
    V = [v0 / np.linalg.norm(v0)]
    H = np.zeros((kmax + 1, kmax))
    g = [float(V[0] @ b)]
    iterates = []
    for k in range(1, kmax + 1):
        w = apply_fn(V[k - 1])
        for _ in range(2):
            for i, v in enumerate(V):
                c = float(v @ w)
                H[i, k - 1] += c
                w = w - c * v
        hnew = np.linalg.norm(w)
        H[k, k - 1] = hnew
        rows = k + 1
        if hnew > 1e-14 * max(abs(H).max(), 1e-300):
            V.append(w / hnew)
            g.append(float(V[k] @ b))
        else:
            rows = k
        y = np.linalg.lstsq(H[:rows, :k], np.asarray(g[:rows]), rcond=None)[0]
        x = np.zeros_like(b)
        for j in range(k):
            x += y[j] * V[j]
        iterates.append(x)
    return iterates


def bilinear_weights(s, t, n):
    """Bilinear interpolation weights on the n-by-n grid over [0, 1]^2.

    Returns (flat_indices, weights) for one point, grid nodes at
    (i h, j h) with h = 1/(n-1), flat index i + j n (column-major).
    """
    h = 1.0 / (n - 1)
    i0 = min(int(s / h), n - 2)
    j0 = min(int(t / h), n - 2)
    fs = s / h - i0
    ft = t / h - j0
    idx = [
        i0 + j0 * n,
        (i0 + 1) + j0 * n,
        i0 + (j0 + 1) * n,
        (i0 + 1) + (j0 + 1) * n,
    ]
    wts = [(1 - fs) * (1 - ft), fs * (1 - ft), (1 - fs) * ft, fs * ft]
    return idx, wts
