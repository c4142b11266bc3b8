"""Parallel-beam X-ray tomography on a square pixel grid.

Each matrix row holds the exact intersection lengths of one ray with
the pixels of the unit square, computed from the sorted gridline
crossings along the ray.  Rays are grouped by projection angle, so the
data vector reshapes to a sinogram with one column per angle.
"""

from __future__ import annotations

import numpy as np
import scipy.sparse as sp

from ..linop import SparseOperator
from ._base import ProblemInfo, TestProblem
from .phantoms import gen_phantom

__all__ = ["gen_tomo", "trace_ray"]

#: crossing parameters closer than this are one gridline hit, not two
_CROSSING_TOL = 1e-14


def trace_ray(n, point, direction):
    """Intersect one ray with the n-by-n pixel grid of the unit square.

    The pixel with index ``(i, j)`` occupies
    ``[i*h, (i+1)*h] x [j*h, (j+1)*h]`` with ``h = 1/n`` and flattens
    to column ``i + j*n`` (first coordinate fastest).

    Parameters
    ----------
    n : int
        Grid side length.
    point : pair of float
        Any point on the ray.
    direction : pair of float
        Ray direction; need not be normalized.

    Returns
    -------
    (cols, lengths)
        Integer pixel columns and the exact lengths cut from each, in
        traversal order.  Both are empty when the ray misses the grid.
    """
    p0 = np.asarray(point, dtype=np.float64)
    d = np.asarray(direction, dtype=np.float64)
    norm = np.linalg.norm(d)
    if norm == 0.0:
        raise ValueError("ray direction must be nonzero")
    d = d / norm
    h = 1.0 / n

    # Clip the ray to the unit square (slab method).
    lo, hi = -np.inf, np.inf
    for axis in range(2):
        if abs(d[axis]) < 1e-15:
            if not 0.0 <= p0[axis] <= 1.0:
                return np.empty(0, dtype=np.int64), np.empty(0)
            continue
        t0 = (0.0 - p0[axis]) / d[axis]
        t1 = (1.0 - p0[axis]) / d[axis]
        lo = max(lo, min(t0, t1))
        hi = min(hi, max(t0, t1))
    if not hi - lo > _CROSSING_TOL:
        return np.empty(0, dtype=np.int64), np.empty(0)

    # All gridline crossings strictly inside the clip window.
    ticks = [np.array([lo, hi])]
    for axis in range(2):
        if abs(d[axis]) < 1e-15:
            continue
        t = (np.arange(n + 1) * h - p0[axis]) / d[axis]
        ticks.append(t[(t > lo) & (t < hi)])
    t = np.sort(np.concatenate(ticks))
    keep = np.empty(t.size, dtype=bool)
    keep[0] = True
    np.greater(np.diff(t), _CROSSING_TOL, out=keep[1:])
    t = t[keep]

    lengths = np.diff(t)
    mids = p0[None, :] + 0.5 * (t[:-1] + t[1:])[:, None] * d[None, :]
    cells = np.clip((mids / h).astype(np.int64), 0, n - 1)
    cols = cells[:, 0] + cells[:, 1] * n
    good = lengths > _CROSSING_TOL
    return cols[good], lengths[good]


def gen_tomo(n=256, angles=None, rays_per_angle=None, phantom="shepplike", seed=0):
    """Tomography test problem: recover an image from its sinogram.

    Parameters
    ----------
    n : int
        Image side length; the solution is an n^2-vector.
    angles : array_like, optional
        Projection angles in degrees; default ``0, 1, ..., 179``.
    rays_per_angle : int, optional
        Parallel rays per angle, spread evenly across the diagonal
        width sqrt(2) of the unit square; default ``round(sqrt(2)*n)``.
    phantom : str or ndarray
        Phantom name or an explicit n-by-n array.
    seed : int
        Passed to the phantom generator.

    Returns
    -------
    TestProblem
        ``info.bgrid`` is (rays_per_angle, len(angles)); rays that
        miss the grid entirely are listed in ``info.params['zero_rays']``.
    """
    angles = np.arange(180.0) if angles is None else np.asarray(angles, dtype=np.float64)
    if angles.ndim != 1 or angles.size == 0:
        raise ValueError("angles must be a nonempty 1D array")
    R = int(round(np.sqrt(2.0) * n)) if rays_per_angle is None else int(rays_per_angle)
    if R < 1:
        raise ValueError(f"rays_per_angle must be positive, got {R}")

    if isinstance(phantom, str):
        X = gen_phantom(phantom, n, seed)
        image_name = phantom
    else:
        X = np.array(phantom, dtype=np.float64, copy=True)
        if X.shape != (n, n):
            raise ValueError(f"phantom must be {n}x{n}, got {X.shape}")
        image_name = "custom"

    offsets = (np.arange(R) + 0.5 - R / 2.0) * (np.sqrt(2.0) / R)
    theta = np.deg2rad(angles)
    rows, cols, vals = [], [], []
    for a, th in enumerate(theta):
        d = np.array([np.cos(th), np.sin(th)])
        perp = np.array([-np.sin(th), np.cos(th)])
        for r in range(R):
            p0 = np.array([0.5, 0.5]) + offsets[r] * perp
            ray_cols, ray_lens = trace_ray(n, p0, d)
            rows.append(np.full(ray_cols.size, r + a * R, dtype=np.int64))
            cols.append(ray_cols)
            vals.append(ray_lens)

    m = R * angles.size
    matrix = sp.coo_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
        shape=(m, n * n),
    ).tocsr()
    A = SparseOperator(matrix)

    x = X.ravel(order="F")
    b = A.apply(x)
    hits = np.diff(matrix.indptr) > 0

    info = ProblemInfo(
        kind="tomo",
        xgrid=(n, n),
        bgrid=(R, angles.size),
        params={
            "angles": angles,
            "rays_per_angle": R,
            "offsets": offsets,
            "true_image": image_name,
            "zero_rays": np.flatnonzero(~hits),
        },
    )
    return TestProblem(A=A, b=b, x=x, info=info)
