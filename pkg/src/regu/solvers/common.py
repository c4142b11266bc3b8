"""Shared option, result and bookkeeping types for the iterative solvers.

All solvers share one calling convention::

    result = solver(A, b, K=None, opts=SolveOptions(...))

``K`` lists the (1-based) iteration indices whose iterates should be
returned; ``result.X`` holds those iterates as columns (the final
iterate is appended when the run halts before the last requested
index, so X is never empty).  ``result.info`` carries the relative
histories and the two distinguished iterates: ``StopReg`` (where the
configured stopping rule first fired, even if iteration continued
under NoStop) and ``BestReg`` (the true-error minimizer, when the true
solution is known).
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Any, Callable

import numpy as np

from ..linop import IdentityOperator, PriorconditionedOperator
from ..regmat import Priorconditioner, resolve_regularizer

__all__ = [
    "SolveOptions",
    "IterationInfo",
    "SolveResult",
    "RegSnapshot",
    "IterationLog",
    "build_projector",
    "project_simplex",
    "power_norm_estimate",
    "priorconditioned_system",
    "relative_residual",
    "check_finite",
]

STOP_OUT_MODES = ("xstab", "Lxstab", "regPstab")


@dataclass
class SolveOptions:
    """Options shared by every solver; unknown-to-a-solver fields are ignored.

    Attributes
    ----------
    x_true : ndarray, optional
        True solution; enables the error history and BestReg.
    x0 : ndarray, optional
        Starting vector (solver default when omitted: zeros, except the
        product-form nonnegative method, which needs a positive start).
    NoiseLevel : float
        Relative noise level ||e|| / ||b_exact||; 0 disables the
        discrepancy principle.
    eta : float
        Discrepancy safety factor (>= 1).
    RegParam : float or str, optional
        Regularization parameter or choice rule ('off', 'gcv', 'wgcv',
        'modified_gcv', 'discrep'); None takes the solver default.
    RegMatrix : optional
        None/'identity', 'laplacian1d', 'laplacian2d', or an explicit
        matrix/operator.
    MaxIter : int
    NoStop : bool
        Keep iterating to MaxIter after a stopping rule fires (the
        rule's iterate is still recorded as StopReg).
    NoStopOut : bool
        Same, for the outer loop of restarted methods.
    NE_Rtol : float
        Normal-equation residual tolerance for stationary methods.
    stopOut : str
        Outer stabilization mode: 'xstab', 'Lxstab' or 'regPstab'.
    xMin, xMax : float, optional
        Box constraint bounds.
    xEnergy : float, optional
        Energy constraint sum(x) = xEnergy (with x >= 0).
    omega : float, optional
        Relaxation parameter for the row-action and SIRT sweeps.
    sirt_variant : str
        'sart', 'cimmino' or 'landweber'.
    enrichment_basis : ndarray, optional
        Columns to enrich the Krylov subspace with.
    inner_solver : str
        Inner method for restarted schemes.
    reorth : bool
        Full reorthogonalization of Krylov bases (default on).
    gcv_window, gcv_tol : GCV flatness stopping controls.
    wgcv_weight : weight for the weighted GCV variant.
    outer_tol, outer_window : outer stabilization controls.
    """

    x_true: Any = None
    x0: Any = None
    NoiseLevel: float = 0.0
    eta: float = 1.01
    RegParam: Any = None
    RegMatrix: Any = None
    MaxIter: int = 100
    NoStop: bool = False
    NoStopOut: bool = False
    NE_Rtol: float = 1e-12
    stopOut: str = "xstab"
    xMin: float | None = None
    xMax: float | None = None
    xEnergy: float | None = None
    omega: float | None = None
    sirt_variant: str = "sart"
    enrichment_basis: Any = None
    inner_solver: str = "cgls"
    reorth: bool = True
    gcv_window: int = 4
    gcv_tol: float = 1e-6
    wgcv_weight: float = 0.8
    outer_tol: float = 1e-4
    outer_window: int = 2

    def __post_init__(self):
        if not 0.0 <= self.NoiseLevel < 1.0:
            raise ValueError(
                f"NoiseLevel must lie in [0, 1), got {self.NoiseLevel}"
            )
        if self.eta < 1.0:
            raise ValueError(f"eta must be >= 1, got {self.eta}")
        if self.MaxIter < 1:
            raise ValueError(f"MaxIter must be >= 1, got {self.MaxIter}")
        if self.NE_Rtol <= 0.0:
            raise ValueError(f"NE_Rtol must be positive, got {self.NE_Rtol}")
        if self.stopOut not in STOP_OUT_MODES:
            raise ValueError(
                f"stopOut must be one of {STOP_OUT_MODES}, got {self.stopOut!r}"
            )
        if (
            self.xMin is not None
            and self.xMax is not None
            and not self.xMin < self.xMax
        ):
            raise ValueError(f"xMin must be < xMax, got [{self.xMin}, {self.xMax}]")
        if self.xEnergy is not None and self.xEnergy <= 0.0:
            raise ValueError(f"xEnergy must be positive, got {self.xEnergy}")
        if not 0.0 < self.wgcv_weight <= 1.0:
            raise ValueError(
                f"wgcv_weight must lie in (0, 1], got {self.wgcv_weight}"
            )

    def with_(self, **kw):
        """Copy with fields replaced."""
        return replace(self, **kw)


@dataclass
class RegSnapshot:
    """An iterate singled out by a rule: the vector and its iteration index."""

    X: np.ndarray
    It: int


@dataclass
class IterationInfo:
    """Per-iteration histories and distinguished iterates of one solve."""

    its: int
    StopFlag: str
    Rnrm: np.ndarray
    Enrm: np.ndarray | None
    NE_Rnrm: np.ndarray | None
    RegP: np.ndarray | None
    StopReg: RegSnapshot
    BestReg: RegSnapshot | None
    saved_iterations: list[int] = field(default_factory=list)
    inner_its: int | None = None


@dataclass
class SolveResult:
    X: np.ndarray
    info: IterationInfo

    @property
    def x(self):
        """The last stored iterate."""
        return self.X[:, -1]


class IterationLog:
    """History/storage bookkeeping every solver shares.

    Tracks the relative residual, error and normal-equation histories,
    snapshots the first stopping-rule firing and the best-error iterate,
    and stores the iterates requested through K.
    """

    def __init__(self, x_true=None, K=None, track_ne=False, track_lam=False):
        self.x_true = None if x_true is None else np.asarray(x_true, float).ravel()
        self._xtn = np.linalg.norm(self.x_true) if self.x_true is not None else 0.0
        self.rnrm: list[float] = []
        self.enrm: list[float] | None = [] if self.x_true is not None else None
        self.ne: list[float] | None = [] if track_ne else None
        self.lam: list[float] | None = [] if track_lam else None
        self._store = sorted(set(int(k) for k in K)) if K is not None else None
        self._stored_x: list[np.ndarray] = []
        self._stored_k: list[int] = []
        self._best: tuple[float, int, np.ndarray] | None = None
        self._stop: tuple[int, np.ndarray, str] | None = None

    def record(self, k, x, rnrm, ne=None, lam=None):
        """Log iteration k (1-based) with its recomputed relative residual."""
        self.rnrm.append(float(rnrm))
        if self.enrm is not None:
            e = np.linalg.norm(x - self.x_true) / (self._xtn or 1.0)
            self.enrm.append(float(e))
            if self._best is None or e < self._best[0]:
                self._best = (float(e), k, x.copy())
        if self.ne is not None:
            self.ne.append(float(ne) if ne is not None else np.nan)
        if self.lam is not None:
            self.lam.append(float(lam) if lam is not None else np.nan)
        if self._store is not None and k in self._store:
            self._stored_k.append(k)
            self._stored_x.append(x.copy())

    def flag_stop(self, k, x, reason):
        """Snapshot the first stopping-rule firing; later calls are ignored."""
        if self._stop is None:
            self._stop = (k, x.copy(), reason)

    @property
    def stopped(self):
        return self._stop is not None

    def finalize(self, x_final, its, fallback_reason="max_iter", inner_its=None):
        """Assemble the SolveResult once iteration has halted."""
        x_final = np.asarray(x_final, float)
        want_more = self._store is not None and (
            not self._stored_k or self._stored_k[-1] < max(self._store)
        )
        if self._store is None or (want_more and (not self._stored_k or self._stored_k[-1] != its)):
            self._stored_k.append(its)
            self._stored_x.append(x_final.copy())
        X = np.column_stack(self._stored_x) if self._stored_x else x_final[:, None]
        if self._stop is not None:
            k, xs, reason = self._stop
            stop = RegSnapshot(xs, k)
            flag = reason
        else:
            stop = RegSnapshot(x_final.copy(), its)
            flag = fallback_reason
        best = None
        if self._best is not None:
            be, bk, bx = self._best
            best = RegSnapshot(bx, bk)
        info = IterationInfo(
            its=its,
            StopFlag=flag,
            Rnrm=np.asarray(self.rnrm),
            Enrm=np.asarray(self.enrm) if self.enrm is not None else None,
            NE_Rnrm=np.asarray(self.ne) if self.ne is not None else None,
            RegP=np.asarray(self.lam) if self.lam is not None else None,
            StopReg=stop,
            BestReg=best,
            saved_iterations=list(self._stored_k),
            inner_its=inner_its,
        )
        return SolveResult(X, info)


def project_simplex(x, energy):
    """Euclidean projection onto {y >= 0, sum(y) = energy}."""
    if energy <= 0:
        raise ValueError(f"energy must be positive, got {energy}")
    u = np.sort(x)[::-1]
    css = np.cumsum(u) - energy
    j = np.arange(1, x.size + 1)
    rho = np.nonzero(u - css / j > 0)[0]
    if rho.size == 0:
        theta = css[-1] / x.size
    else:
        theta = css[rho[-1]] / (rho[-1] + 1)
    return np.maximum(x - theta, 0.0)


def build_projector(opts) -> Callable[[np.ndarray], np.ndarray] | None:
    """Projector onto the configured constraint set, or None when unconstrained.

    Box bounds clamp; an energy constraint projects onto the scaled
    simplex afterwards (clamp-then-project composition).
    """
    has_box = opts.xMin is not None or opts.xMax is not None
    has_energy = opts.xEnergy is not None
    if not has_box and not has_energy:
        return None
    lo, hi, energy = opts.xMin, opts.xMax, opts.xEnergy

    def project(x):
        y = np.clip(x, lo, hi) if has_box else x
        if has_energy:
            y = project_simplex(y, energy)
        return y

    return project


def power_norm_estimate(op, steps=10, seed=0):
    """Estimate ||A||_2 by ``steps`` power iterations on A^T A (seeded)."""
    rng = np.random.default_rng(seed)
    v = rng.standard_normal(op.shape[1])
    v /= np.linalg.norm(v)
    est = 0.0
    for _ in range(steps):
        w = op.apply_adjoint(op.apply(v))
        nw = np.linalg.norm(w)
        if nw == 0.0:
            return 0.0
        est = nw
        v = w / nw
    return float(np.sqrt(est))


def priorconditioned_system(A, opts):
    """Resolve RegMatrix into a priorconditioned operator.

    Returns ``(op, prior)``: the operator the Krylov method should see
    and the factorized regularizer mapping its iterates back to x
    (``None`` when the regularizer is the identity).
    """
    L = resolve_regularizer(opts.RegMatrix, A.shape[1])
    if L is None:
        return A, None
    prior = Priorconditioner(L)
    return PriorconditionedOperator(A, prior), prior


def relative_residual(A, b, x, b_norm):
    """||b - A x|| / ||b||, recomputed from scratch."""
    return float(np.linalg.norm(b - A.apply(x)) / b_norm)


def check_finite(value, what):
    """Raise when an inner product or norm went NaN/inf (operator fault)."""
    if not np.all(np.isfinite(value)):
        raise FloatingPointError(
            f"{what} is not finite; the operator produced NaN or inf"
        )
    return value
