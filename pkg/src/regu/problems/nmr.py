"""Two-dimensional relaxometry: joint inversion of relaxation signals.

The unknown is a discretized joint density over two relaxation times
(T1, T2) on logarithmically equispaced grids; the measured signal over
two acquisition-time grids separates as a Kronecker product
``A = A2 (x) A1`` of two small dense kernels, with inversion-recovery
entries ``1 - 2 exp(-tau1/T1)`` in the first dimension and decay
entries ``exp(-tau2/T2)`` in the second.  The product matrix is never
formed.
"""

from __future__ import annotations

import numpy as np

from ..linop import KroneckerOperator
from ._base import ProblemInfo, TestProblem

__all__ = ["gen_nmr", "NMR_MATERIALS"]

# Density phantoms per material: Gaussian mixture components in
# (log10 T1, log10 T2), as (weight, center1, center2, sigma1, sigma2).
_MATERIAL_COMPONENTS = {
    "carbonate": (
        (0.6, -1.0, -1.4, 0.45, 0.40),
        (0.4, 0.2, -0.3, 0.30, 0.35),
    ),
    "methane": (
        (0.5, -2.3, -2.6, 0.25, 0.25),
        (0.5, -1.2, -1.6, 0.35, 0.30),
    ),
    "organic": (
        (0.45, -1.8, -2.2, 0.30, 0.25),
        (0.35, -0.8, -1.2, 0.25, 0.30),
        (0.20, 0.3, -0.1, 0.20, 0.25),
    ),
}

NMR_MATERIALS = tuple(sorted(_MATERIAL_COMPONENTS))


def _as_pair(value, name):
    if np.isscalar(value):
        pair = (int(value), int(value))
    else:
        pair = tuple(int(v) for v in value)
        if len(pair) != 2:
            raise ValueError(f"{name} must be an int or a pair, got {value!r}")
    if pair[0] < 2 or pair[1] < 2:
        raise ValueError(f"{name} must be at least 2 per dimension, got {pair}")
    return pair


def _log_grid(limits, count, name):
    lo, hi = float(limits[0]), float(limits[1])
    if not lo < hi:
        raise ValueError(f"{name} must satisfy left < right, got {limits!r}")
    return np.logspace(lo, hi, count)


def gen_nmr(
    n=128,
    numData=None,
    Tloglimits=(-4.0, 1.0),
    tauloglimits=(-4.0, 1.0),
    material="carbonate",
):
    """Relaxometry test problem with Kronecker-structured kernel.

    Parameters
    ----------
    n : int or (int, int)
        Relaxation-time grid sizes (n1, n2); N = n1*n2.
    numData : int or (int, int), optional
        Acquisition-time grid sizes (m1, m2); defaults to (2 n1, 2 n2).
    Tloglimits, tauloglimits : pair of float
        log10 limits of the relaxation and acquisition grids.
    material : {'carbonate', 'methane', 'organic'}
        Picks the Gaussian-mixture density phantom.

    Returns
    -------
    TestProblem
    """
    n1, n2 = _as_pair(n, "n")
    m1, m2 = _as_pair(numData, "numData") if numData is not None else (2 * n1, 2 * n2)
    if material not in _MATERIAL_COMPONENTS:
        raise ValueError(f"unknown material: {material!r}")

    T1 = _log_grid(Tloglimits, n1, "Tloglimits")
    T2 = _log_grid(Tloglimits, n2, "Tloglimits")
    tau1 = _log_grid(tauloglimits, m1, "tauloglimits")
    tau2 = _log_grid(tauloglimits, m2, "tauloglimits")

    A1 = 1.0 - 2.0 * np.exp(-tau1[:, None] / T1[None, :])
    A2 = np.exp(-tau2[:, None] / T2[None, :])
    A = KroneckerOperator(A2, A1)

    density = np.zeros((n1, n2))
    l1 = np.log10(T1)
    l2 = np.log10(T2)
    for w, c1, c2, s1, s2 in _MATERIAL_COMPONENTS[material]:
        density += w * np.exp(
            -((l1[:, None] - c1) ** 2) / (2.0 * s1**2)
            - ((l2[None, :] - c2) ** 2) / (2.0 * s2**2)
        )
    density /= density.sum()

    x = density.ravel(order="F")
    b = A.apply(x)

    info = ProblemInfo(
        kind="nmr",
        xgrid=(n1, n2),
        bgrid=(m1, m2),
        params={
            "material": material,
            "Tloglimits": (float(Tloglimits[0]), float(Tloglimits[1])),
            "tauloglimits": (float(tauloglimits[0]), float(tauloglimits[1])),
            "T1": T1,
            "T2": T2,
            "tau1": tau1,
            "tau2": tau2,
        },
    )
    return TestProblem(A=A, b=b, x=x, info=info)
