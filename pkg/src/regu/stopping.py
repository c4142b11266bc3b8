"""Stopping rules and regularization-parameter choice.

Iterations in this package are stopped (that is, regularized) by one of
a few interchangeable rules: the discrepancy principle against a known
noise level, generalized cross validation on the projected problem each
hybrid iteration carries, a normal-equation residual tolerance for
stationary methods, or stabilization of outer restarts.  This module
implements those rules on plain numbers and on a small dense
``ProjectedProblem``, so solvers stay free of parameter-choice logic.

Every rule returns a :class:`StoppingDecision` rather than acting; the
caller owns the iterate bookkeeping (and may keep iterating after a
rule fires when asked not to stop).
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

__all__ = [
    "StoppingDecision",
    "ProjectedProblem",
    "check_discrepancy",
    "check_ne_residual",
    "check_gcv_stop",
    "check_residual_stabilization",
    "check_outer_stabilization",
    "gcv_function",
    "choose_lambda",
    "secant_lambda_update",
    "discrepancy_lambda",
]

#: stop when |discrepancy - target| <= this fraction of the target
SECANT_RTOL = 1e-4

GCV_VARIANTS = ("standard", "modified", "weighted")


@dataclass(frozen=True)
class StoppingDecision:
    """Outcome of one stopping-rule check.

    Attributes
    ----------
    stop : bool
    reason : str or None
        Rule identifier when ``stop`` is True (e.g. ``'discrepancy'``).
    value : float
        The quantity the rule examined, for logging.
    """

    stop: bool
    reason: str | None = None
    value: float = float("nan")


def check_discrepancy(rel_residual, noise_level, eta=1.01):
    """Discrepancy principle: stop once ||b - A x|| / ||b|| <= eta * noise_level.

    A noise-free problem with an explicit residual threshold tau is the
    special case eta = 1, noise_level = tau.
    """
    if noise_level < 0:
        raise ValueError(f"noise level must be nonnegative, got {noise_level}")
    if eta < 1.0:
        raise ValueError(f"safety factor eta must be >= 1, got {eta}")
    hit = rel_residual <= eta * noise_level
    return StoppingDecision(hit, "discrepancy" if hit else None, rel_residual)


def check_ne_residual(rel_ne_residual, tol=1e-12):
    """Normal-equation residual rule for stationary first-order methods."""
    hit = rel_ne_residual <= tol
    return StoppingDecision(hit, "ne_residual" if hit else None, rel_ne_residual)


def _stable(series, tol, window):
    """True when the last ``window`` entries of ``series`` change by < tol.

    Changes are measured relative to the preceding entry; a window of w
    entries checks w - 1 successive changes.
    """
    if len(series) < window:
        return False
    tail = np.asarray(series[-window:], dtype=np.float64)
    denom = np.maximum(np.abs(tail[:-1]), np.finfo(float).tiny)
    return bool(np.all(np.abs(np.diff(tail)) / denom < tol))


def check_gcv_stop(g_history, window=4, tol=1e-6):
    """Stop a hybrid iteration when its minimal GCV values go flat or rise.

    ``g_history`` holds min_lambda G_k(lambda) for k = 1, 2, ...; the
    rule fires when the last ``window`` entries are non-decreasing, or
    all change by less than ``tol`` in relative terms (flat).
    """
    if len(g_history) < window:
        return StoppingDecision(False, None, g_history[-1] if g_history else np.nan)
    tail = np.asarray(g_history[-window:], dtype=np.float64)
    if _stable(g_history, tol, window):
        return StoppingDecision(True, "gcv_flat", tail[-1])
    if np.all(np.diff(tail) >= 0):
        return StoppingDecision(True, "gcv_increase", tail[-1])
    return StoppingDecision(False, None, tail[-1])


def check_residual_stabilization(rnrm_history, tol=1e-6, window=4):
    """Stop when the residual norm history stabilizes over ``window`` entries."""
    hit = _stable(rnrm_history, tol, window)
    return StoppingDecision(
        hit, "residual_stabilized" if hit else None,
        rnrm_history[-1] if rnrm_history else np.nan,
    )


def check_outer_stabilization(series, mode="xstab", tol=1e-4, window=2):
    """Outer-restart stop: the monitored quantity stabilized.

    ``series`` holds the per-restart scalars the configured ``mode``
    monitors (iterate norm for 'xstab', penalty norm ||L x|| for
    'Lxstab', regularization parameter for 'regPstab'); the rule fires
    when the last ``window`` entries change by less than ``tol`` in
    relative terms.
    """
    hit = _stable(series, tol, window)
    return StoppingDecision(
        hit, "outer_stabilized" if hit else None,
        series[-1] if series else np.nan,
    )


class ProjectedProblem:
    """Small dense Tikhonov problem min ||R y - c||^2 + lam^2 ||y||^2.

    Hybrid iterations project the full problem onto a k-dimensional
    subspace; R is the (k+1)-by-k (or k-by-k after breakdown) projected
    matrix and c the projected right-hand side.  The SVD is computed
    once, so parameter sweeps cost O(k) per lambda.

    Parameters
    ----------
    R : ndarray
    c : ndarray
    m_full : int, optional
        Row count of the full problem, used by the modified GCV weight.
    """

    def __init__(self, R, c, m_full=None):
        R = np.atleast_2d(np.asarray(R, dtype=np.float64))
        c = np.asarray(c, dtype=np.float64).ravel()
        if R.shape[0] < R.shape[1]:
            raise ValueError(f"projected matrix must be tall, got {R.shape}")
        if c.size != R.shape[0]:
            raise ValueError(
                f"projected rhs length {c.size} does not match {R.shape[0]} rows"
            )
        self.R = R
        self.c = c
        self.k = R.shape[1]
        self.m_full = int(m_full) if m_full is not None else R.shape[0]
        u, s, vt = np.linalg.svd(R, full_matrices=False)
        self._u = u
        self._s = s
        self._vt = vt
        self._ct = u.T @ c
        # rhs energy outside the column span (zero for square/consistent R)
        self._perp2 = max(float(c @ c - self._ct @ self._ct), 0.0)

    @property
    def sigma_max(self):
        return float(self._s[0]) if self._s.size else 0.0

    def solve(self, lam):
        """Minimizer y_lam; lam = 0 gives the pseudo-inverse solution."""
        s = self._s
        mask = s > s[0] * np.finfo(float).eps * max(self.R.shape) if s.size else s
        f = np.zeros_like(s)
        f[mask] = s[mask] / (s[mask] ** 2 + lam**2)
        return self._vt.T @ (f * self._ct)

    def residual_norm(self, lam):
        """||R y_lam - c|| including any component of c outside range(R)."""
        s = self._s
        with np.errstate(invalid="ignore", divide="ignore"):
            filt = np.where(s > 0, lam**2 / (s**2 + lam**2), 1.0)
        return float(np.sqrt(np.sum((filt * self._ct) ** 2) + self._perp2))

    def trace_term(self, lam):
        """trace of the influence matrix, sum sigma_i^2 / (sigma_i^2 + lam^2)."""
        s = self._s
        with np.errstate(invalid="ignore", divide="ignore"):
            t = np.where(s > 0, s**2 / (s**2 + lam**2), 0.0)
        return float(np.sum(t))


def gcv_function(proj, lam, variant="standard", weight=0.8):
    """Generalized cross validation value of the projected problem.

    G(lam) = ||R y_lam - c|| / (Q - w * trace) with
    (Q, w) = (k+1, 1) for 'standard', (m_full - k, 1) for 'modified'
    and (k+1, weight) for 'weighted'.  A nonpositive denominator
    returns +inf so minimizers simply avoid that lambda.
    """
    if variant not in GCV_VARIANTS:
        raise ValueError(f"unknown GCV variant: {variant!r}")
    if variant == "modified":
        q = proj.m_full - proj.k
        w = 1.0
    else:
        q = proj.k + 1
        w = weight if variant == "weighted" else 1.0
    denom = q - w * proj.trace_term(lam)
    if denom <= 0.0:
        return float("inf")
    return proj.residual_norm(lam) / denom


def _golden_section(f, lo, hi, rel_width=1e-3):
    """Golden-section minimum of f(exp(t)) for log-lambda t in [lo, hi]."""
    phi = (np.sqrt(5.0) - 1.0) / 2.0
    a, b = np.log(lo), np.log(hi)
    stop_width = np.log1p(rel_width)
    c = b - phi * (b - a)
    d = a + phi * (b - a)
    fc, fd = f(np.exp(c)), f(np.exp(d))
    while (b - a) > stop_width:
        if fc <= fd:
            b, d, fd = d, c, fc
            c = b - phi * (b - a)
            fc = f(np.exp(c))
        else:
            a, c, fc = c, d, fd
            d = a + phi * (b - a)
            fd = f(np.exp(d))
    return float(np.exp((a + b) / 2.0))


#: coarse pre-scan size used to bracket the global GCV minimum
GCV_SCAN_POINTS = 256


def _gcv_minimize(proj, variant, weight):
    smax = proj.sigma_max
    if smax <= 0.0:
        return 0.0
    lo, hi = 1e-12 * smax, smax
    grid = np.logspace(np.log10(lo), np.log10(hi), GCV_SCAN_POINTS)
    vals = np.array([gcv_function(proj, g, variant, weight) for g in grid])
    if not np.any(np.isfinite(vals)):
        warnings.warn(
            "GCV function is non-finite across the search bracket; "
            "falling back to lambda = 0",
            RuntimeWarning,
            stacklevel=3,
        )
        return 0.0
    i = int(np.argmin(vals))
    a = grid[max(i - 1, 0)]
    b = grid[min(i + 1, grid.size - 1)]
    if a == b:
        return float(grid[i])
    return _golden_section(lambda lam: gcv_function(proj, lam, variant, weight), a, b)


def secant_lambda_update(history, target, lam_max=None):
    """One secant step toward solving discrepancy(lambda) = target.

    ``history`` is the list of (lambda, discrepancy) pairs evaluated so
    far (at least one).  With a single point the step is a doubling or
    halving in the indicated direction; a flat secant slope falls back
    to bisecting the last two lambdas.  The result is clamped to
    [0, lam_max].
    """
    if not history:
        raise ValueError("secant update needs at least one prior evaluation")
    lam1, d1 = history[-1]
    if len(history) == 1:
        nxt = lam1 * 2.0 if d1 < target else lam1 / 2.0
        if nxt == lam1:  # lam1 == 0
            nxt = 1.0 if d1 < target else 0.0
    else:
        lam0, d0 = history[-2]
        if abs(d1 - d0) <= np.finfo(float).tiny * (1.0 + abs(d1)):
            nxt = 0.5 * (lam0 + lam1)
        else:
            nxt = lam1 - (d1 - target) * (lam1 - lam0) / (d1 - d0)
        if not np.isfinite(nxt):
            nxt = 0.5 * (lam0 + lam1)
    nxt = max(nxt, 0.0)
    if lam_max is not None:
        nxt = min(nxt, lam_max)
    return float(nxt)


def discrepancy_lambda(eval_d, target, lam_max, seeds=None, max_evals=60):
    """Solve discrepancy(lambda) = target on [0, lam_max] by damped secant.

    ``eval_d`` maps lambda to the (monotonically nondecreasing)
    discrepancy; convergence is declared at relative accuracy
    ``SECANT_RTOL``.  Returns 0 when even the unregularized solution
    sits above the target, and ``lam_max`` when the target is
    unreachable from above.
    """
    if target < 0:
        raise ValueError(f"discrepancy target must be nonnegative, got {target}")
    d0 = eval_d(0.0)
    if d0 >= target:
        return 0.0
    dmax = eval_d(lam_max)
    if dmax <= target:
        return float(lam_max)
    lo, dlo = 0.0, d0
    hi, dhi = float(lam_max), dmax
    history = [(lo, dlo), (hi, dhi)]
    tol0 = SECANT_RTOL * target if target > 0 else SECANT_RTOL
    for lam in seeds or ():
        lam = float(min(max(lam, 0.0), lam_max))
        d = eval_d(lam)
        if abs(d - target) <= tol0:
            return lam
        history.append((lam, d))
        if d < target and lam > lo:
            lo, dlo = lam, d
        elif d > target and lam < hi:
            hi, dhi = lam, d
    tol = SECANT_RTOL * target if target > 0 else SECANT_RTOL
    best, best_err = hi, abs(dhi - target)
    for _ in range(max_evals):
        lam = secant_lambda_update(history, target, lam_max)
        if not (lo < lam < hi):
            lam = 0.5 * (lo + hi)
        d = eval_d(lam)
        history.append((lam, d))
        if abs(d - target) < best_err:
            best, best_err = lam, abs(d - target)
        if abs(d - target) <= tol:
            return float(lam)
        if d < target:
            lo, dlo = lam, d
        else:
            hi, dhi = lam, d
        if hi - lo <= SECANT_RTOL * max(hi, 1e-300):
            break
    return float(best)


def choose_lambda(proj, rule, *, target=None, weight=0.8):
    """Regularization parameter for one projected problem.

    Parameters
    ----------
    proj : ProjectedProblem
    rule : float or str
        A number is used as-is.  'off' or None gives 0.  'gcv',
        'modified_gcv' and 'wgcv' minimize the matching GCV variant by
        a bracketed golden section on [1e-12 sigma_max, sigma_max].
        'discrep' solves ||R y - c|| = target by the secant update.
    target : float, optional
        Absolute residual target for 'discrep'.
    weight : float
        Weight for 'wgcv'.

    Returns
    -------
    float
    """
    if rule is None:
        return 0.0
    if isinstance(rule, (int, float)) and not isinstance(rule, bool):
        if rule < 0:
            raise ValueError(f"regularization parameter must be >= 0, got {rule}")
        return float(rule)
    if rule == "off":
        return 0.0
    if rule == "gcv":
        return _gcv_minimize(proj, "standard", weight)
    if rule == "modified_gcv":
        return _gcv_minimize(proj, "modified", weight)
    if rule == "wgcv":
        return _gcv_minimize(proj, "weighted", weight)
    if rule == "discrep":
        if target is None:
            raise ValueError("'discrep' needs a residual target (noise level known)")
        smax = proj.sigma_max
        if smax <= 0.0:
            return 0.0
        return discrepancy_lambda(proj.residual_norm, target, smax)
    raise ValueError(f"unknown regularization parameter rule: {rule!r}")
