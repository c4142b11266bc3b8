"""Synthetic test images.

All phantoms are n-by-n float64 arrays with values in [0, 1], built on
the unit square.  They are the standard true solutions of the imaging
test problems: a sparse field of random dots, a piecewise-smooth head
section built from ellipses, a single smooth bump, and a piecewise
constant pattern with known total variation.
"""

from __future__ import annotations

import numpy as np

__all__ = ["gen_phantom", "PHANTOM_NAMES"]

PHANTOM_NAMES = ("dotk", "shepplike", "smooth_bump", "piecewise_constant")

# Ellipses as (added value, semi-axis a, semi-axis b, center x, center y,
# rotation in degrees) on [-1, 1]^2; values accumulate where they overlap.
_HEAD_ELLIPSES = (
    (1.0, 0.69, 0.92, 0.0, 0.0, 0.0),
    (-0.8, 0.6624, 0.8740, 0.0, -0.0184, 0.0),
    (-0.2, 0.1100, 0.3100, 0.22, 0.0, -18.0),
    (-0.2, 0.1600, 0.4100, -0.22, 0.0, 18.0),
    (0.1, 0.2100, 0.2500, 0.0, 0.35, 0.0),
    (0.1, 0.0460, 0.0460, 0.0, 0.1, 0.0),
    (0.1, 0.0460, 0.0460, 0.0, -0.1, 0.0),
    (0.1, 0.0460, 0.0230, -0.08, -0.605, 0.0),
    (0.1, 0.0230, 0.0230, 0.0, -0.606, 0.0),
    (0.1, 0.0230, 0.0460, 0.06, -0.605, 0.0),
)


def gen_phantom(name, n, seed=0):
    """Build a named n-by-n phantom image with values in [0, 1].

    Parameters
    ----------
    name : {'dotk', 'shepplike', 'smooth_bump', 'piecewise_constant'}
        'dotk' places ceil(n/8) isolated single-pixel dots of random
        intensity (seeded); 'shepplike' is an ellipse-built head
        section; 'smooth_bump' a product-of-cosines bump with maximum
        exactly 1 at the center; 'piecewise_constant' four vertical
        bands whose total variation is known in closed form.
    n : int
        Side length, at least 8.
    seed : int
        Seed for the random phantoms; deterministic ones ignore it.

    Returns
    -------
    ndarray of shape (n, n)
    """
    if n < 8:
        raise ValueError(f"phantom side length must be at least 8, got {n}")
    if name == "dotk":
        return _dotk(n, np.random.default_rng(seed))
    if name == "shepplike":
        return _shepplike(n)
    if name == "smooth_bump":
        return _smooth_bump(n)
    if name == "piecewise_constant":
        return _piecewise_constant(n)
    raise ValueError(f"unknown phantom name: {name!r}")


def _dotk(n, rng):
    """ceil(n/8) isolated dots: no two touch, even diagonally."""
    k = int(np.ceil(n / 8))
    img = np.zeros((n, n))
    placed: list[tuple[int, int]] = []
    attempts = 0
    while len(placed) < k:
        attempts += 1
        if attempts > 100_000:
            raise RuntimeError(f"could not place {k} separated dots on {n}x{n}")
        i = int(rng.integers(1, n - 1))
        j = int(rng.integers(1, n - 1))
        if all(max(abs(i - p), abs(j - q)) >= 2 for p, q in placed):
            placed.append((i, j))
            img[i, j] = rng.uniform(0.5, 1.0)
    return img


def _shepplike(n):
    # pixel centers on [-1, 1]^2, row 0 at the top
    x = -1.0 + (2.0 * np.arange(n) + 1.0) / n
    y = x[::-1]
    X, Y = np.meshgrid(x, y, indexing="xy")
    img = np.zeros((n, n))
    for value, a, b, x0, y0, phi in _HEAD_ELLIPSES:
        t = np.deg2rad(phi)
        xr = (X - x0) * np.cos(t) + (Y - y0) * np.sin(t)
        yr = -(X - x0) * np.sin(t) + (Y - y0) * np.cos(t)
        img[(xr / a) ** 2 + (yr / b) ** 2 <= 1.0] += value
    return np.clip(img, 0.0, 1.0)


def _smooth_bump(n):
    t = (np.arange(n) + 0.5) / n
    g = 0.5 * (1.0 + np.cos(2.0 * np.pi * (t - 0.5)))
    img = np.outer(g, g)
    return img / img.max()


def _piecewise_constant(n):
    # vertical bands only, so every jump is a pure horizontal difference
    # and the discrete total variation is exactly n * (1 + 1/2 + 1/4)
    img = np.zeros((n, n))
    edges = (0, n // 4, n // 2, (3 * n) // 4, n)
    values = (0.0, 1.0, 0.5, 0.75)
    for v, (a, b) in zip(values, zip(edges[:-1], edges[1:])):
        img[:, a:b] = v
    return img
