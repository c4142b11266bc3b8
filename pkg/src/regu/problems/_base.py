"""Shared container types for the test-problem generators."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..linop import LinearOperator

__all__ = ["ProblemInfo", "TestProblem"]


@dataclass(frozen=True)
class ProblemInfo:
    """What a generated problem is and how its vectors reshape.

    Attributes
    ----------
    kind : str
        Generator name ('blur', 'invinterp2', 'diffusion', 'nmr', 'tomo').
    xgrid : tuple of int
        ``(rows, cols)`` of the solution array; their product is N.
    bgrid : tuple of int
        ``(rows, cols)`` of the data array; their product is M.  Data
        without a natural 2D layout (scattered samples) uses ``(M, 1)``.
    psf : ndarray, optional
        The point spread function, for deblurring problems.
    params : dict
        Generator-specific model parameters (time grids, angles, ...).
    """

    kind: str
    xgrid: tuple
    bgrid: tuple
    psf: np.ndarray | None = None
    params: dict = field(default_factory=dict)


@dataclass(frozen=True)
class TestProblem:
    """One simulated inverse problem: operator, exact data, true solution.

    ``b`` is noise-free but, unless a generator was explicitly asked to
    commit the inverse crime, not exactly ``A @ x``: the data is
    simulated with more faithful physics (padded scenes, off-grid
    samples) than the operator models, so the model error of real
    measurements is present.  Add measurement noise separately with
    :func:`add_noise`.
    """

    A: LinearOperator
    b: np.ndarray
    x: np.ndarray
    info: ProblemInfo

    def __post_init__(self):
        m, n = self.A.shape
        if self.x.shape != (n,):
            raise ValueError(
                f"true solution has shape {self.x.shape}, expected ({n},)"
            )
        if self.b.shape != (m,):
            raise ValueError(f"data has shape {self.b.shape}, expected ({m},)")
        if int(np.prod(self.info.xgrid)) != n or int(np.prod(self.info.bgrid)) != m:
            raise ValueError(
                f"info grids {self.info.xgrid}/{self.info.bgrid} do not match "
                f"operator shape {self.A.shape}"
            )
