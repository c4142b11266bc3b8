"""First-order iterations: accelerated projected gradient, a nonnegative
steepest-descent method, and the classical row-action / simultaneous
reflection families.

These methods trade Krylov optimality for cheap iterations and easy
constraints: every step is a matvec pair (or a sweep of row updates)
followed by a projection onto the configured box/energy set.
"""

from __future__ import annotations

import warnings

import numpy as np

from ..linop import IdentityOperator, stack_vertical
from ..stopping import check_discrepancy, check_ne_residual
from .common import (
    IterationLog,
    SolveOptions,
    build_projector,
    check_finite,
    power_norm_estimate,
)
from .cgls import _fixed_lambda

__all__ = ["fista", "mrnsd", "art", "sirt"]


def _identity_reg_only(opts, who):
    if opts.RegMatrix not in (None, "identity"):
        raise ValueError(f"{who} supports the identity regularizer only")


def _damped(A, b, lam):
    """Stacked damped system for a fixed parameter (or the original one)."""
    if lam > 0.0:
        op = stack_vertical(A, IdentityOperator(A.shape[1]), lam)
        data = np.concatenate([b, np.zeros(A.shape[1])])
        return op, data
    return A, b


def fista(A, b, K=None, opts=None):
    """Accelerated projected gradient for (damped) least squares.

    Gradient steps of fixed size 1 / ||A||_2^2 (power-method estimate)
    with the usual momentum sequence t_{k+1} = (1 + sqrt(1+4 t_k^2))/2,
    projecting onto the box/energy constraint set each step.  A numeric
    RegParam adds identity damping; stopping is by the discrepancy
    principle and the normal-equation residual.

    Returns
    -------
    SolveResult
    """
    opts = opts or SolveOptions()
    _identity_reg_only(opts, "fista")
    b = np.asarray(b, dtype=np.float64).ravel()
    m, n = A.shape
    if b.size != m:
        raise ValueError(f"right-hand side has length {b.size}, expected {m}")
    lam = _fixed_lambda(opts, "fista")
    op, data = _damped(A, b, lam)
    b_norm = np.linalg.norm(b) or 1.0

    est = power_norm_estimate(op, steps=50)
    if est == 0.0:
        raise ValueError("operator norm estimate is zero; nothing to iterate on")
    step = 1.0 / (1.02 * est) ** 2

    project = build_projector(opts)
    x = (
        np.asarray(opts.x0, dtype=np.float64).ravel().copy()
        if opts.x0 is not None
        else np.zeros(n)
    )
    if x.size != n:
        raise ValueError(f"x0 has length {x.size}, expected {n}")
    if project is not None:
        x = project(x)
    y = x.copy()
    t = 1.0
    natb = np.linalg.norm(op.apply_adjoint(data)) or 1.0

    log = IterationLog(opts.x_true, K, track_ne=True)
    its = 0
    for k in range(1, opts.MaxIter + 1):
        g = op.apply_adjoint(data - op.apply(y))
        check_finite(g, "gradient")
        x_new = y + step * g
        if project is not None:
            x_new = project(x_new)
        t_new = 0.5 * (1.0 + np.sqrt(1.0 + 4.0 * t * t))
        y = x_new + ((t - 1.0) / t_new) * (x_new - x)
        x, t = x_new, t_new

        rnrm = np.linalg.norm(b - A.apply(x)) / b_norm
        ne = np.linalg.norm(op.apply_adjoint(data - op.apply(x))) / natb
        log.record(k, x, rnrm, ne=ne)
        its = k

        if not log.stopped:
            dec = check_discrepancy(rnrm, opts.NoiseLevel, opts.eta)
            if not dec.stop:
                dec = check_ne_residual(ne, opts.NE_Rtol)
            if dec.stop:
                log.flag_stop(k, x, dec.reason)
        if log.stopped and not opts.NoStop:
            break

    return log.finalize(x, its)


def mrnsd(A, b, K=None, opts=None):
    """Modified residual norm steepest descent on the nonnegative cone.

    Scales the negative gradient by diag(x), so iterates stay
    nonnegative by construction: the step length is the smaller of the
    exact line minimizer and the largest step that keeps every entry
    nonnegative.  The start must be strictly positive (default: a small
    positive constant vector).

    Returns
    -------
    SolveResult
    """
    opts = opts or SolveOptions()
    _identity_reg_only(opts, "mrnsd")
    b = np.asarray(b, dtype=np.float64).ravel()
    m, n = A.shape
    if b.size != m:
        raise ValueError(f"right-hand side has length {b.size}, expected {m}")
    lam = _fixed_lambda(opts, "mrnsd")
    op, data = _damped(A, b, lam)
    b_norm = np.linalg.norm(b) or 1.0

    if opts.x0 is not None:
        x = np.asarray(opts.x0, dtype=np.float64).ravel().copy()
        if x.size != n:
            raise ValueError(f"x0 has length {x.size}, expected {n}")
        if np.any(x <= 0.0):
            raise ValueError("initial vector must be strictly positive")
    else:
        scale = float(np.max(np.abs(A.apply_adjoint(b)))) if m else 0.0
        x = np.full(n, 1e-6 * max(scale, 1.0))

    natb = np.linalg.norm(op.apply_adjoint(data)) or 1.0
    log = IterationLog(opts.x_true, K, track_ne=True)
    its = 0
    for k in range(1, opts.MaxIter + 1):
        g = op.apply_adjoint(data - op.apply(x))
        check_finite(g, "gradient")
        d = x * g
        gd = float(g @ d)  # = sum x g^2 >= 0
        if gd > 0.0:
            ad = op.apply(d)
            denom = float(ad @ ad)
            theta = gd / denom if denom > 0.0 else 0.0
            neg = d < 0.0
            if np.any(neg):
                theta = min(theta, float(np.min(-x[neg] / d[neg])))
            x = np.maximum(x + theta * d, 0.0)

        rnrm = np.linalg.norm(b - A.apply(x)) / b_norm
        ne = np.linalg.norm(op.apply_adjoint(data - op.apply(x))) / natb
        log.record(k, x, rnrm, ne=ne)
        its = k

        if not log.stopped:
            dec = check_discrepancy(rnrm, opts.NoiseLevel, opts.eta)
            if not dec.stop:
                dec = check_ne_residual(ne, opts.NE_Rtol)
            if not dec.stop and gd == 0.0:
                dec = check_ne_residual(0.0, opts.NE_Rtol)
            if dec.stop:
                log.flag_stop(k, x, dec.reason)
        if log.stopped and not opts.NoStop:
            break

    return log.finalize(x, its)


def _need_rows(A, who):
    needed = ("row_entries", "row_norms_squared")
    if not all(hasattr(A, attr) for attr in needed):
        raise TypeError(f"{who} requires explicit rows; wrap the operator in a matrix")
    return A


def art(A, b, K=None, opts=None):
    """Row-action (Kaczmarz) sweeps with optional projection.

    One iteration is one cyclic sweep over all rows: each row update
    moves the iterate onto (or toward, for relaxation omega != 1) the
    hyperplane of that equation; rows with zero norm are skipped.  The
    configured constraint projection is applied after every row update.
    Needs an operator with explicit rows (dense or sparse).

    Returns
    -------
    SolveResult
    """
    opts = opts or SolveOptions()
    _identity_reg_only(opts, "art")
    _need_rows(A, "art")
    b = np.asarray(b, dtype=np.float64).ravel()
    m, n = A.shape
    if b.size != m:
        raise ValueError(f"right-hand side has length {b.size}, expected {m}")
    omega = opts.omega if opts.omega is not None else 1.0
    if not 0.0 < omega < 2.0:
        raise ValueError(f"relaxation omega must lie in (0, 2), got {omega}")
    b_norm = np.linalg.norm(b) or 1.0
    project = build_projector(opts)

    x = (
        np.asarray(opts.x0, dtype=np.float64).ravel().copy()
        if opts.x0 is not None
        else np.zeros(n)
    )
    rnsq = A.row_norms_squared()
    live = [i for i in range(m) if rnsq[i] > 0.0]

    log = IterationLog(opts.x_true, K)
    its = 0
    for k in range(1, opts.MaxIter + 1):
        for i in live:
            idx, vals = A.row_entries(i)
            resid = b[i] - float(vals @ x[idx])
            x[idx] += (omega * resid / rnsq[i]) * vals
            if project is not None:
                x = project(x)
        rnrm = np.linalg.norm(b - A.apply(x)) / b_norm
        check_finite(rnrm, "residual norm")
        log.record(k, x, rnrm)
        its = k
        if not log.stopped:
            dec = check_discrepancy(rnrm, opts.NoiseLevel, opts.eta)
            if dec.stop:
                log.flag_stop(k, x, dec.reason)
        if log.stopped and not opts.NoStop:
            break

    return log.finalize(x, its)


def sirt(A, b, K=None, opts=None):
    """Simultaneous iterative reconstruction: sart, cimmino or landweber.

    All variants iterate x <- P(x + omega D1 A^T D2 (b - A x)).  The
    'sart' scaling uses inverse absolute row/column sums, 'cimmino'
    weights rows by 1/(m ||a_i||^2), 'landweber' is the unscaled
    gradient step with default omega = 0.95 * 2 / s where s is a
    10-step power estimate of ||A||_2^2.  Rows or columns with zero
    norm get a zero diagonal entry (with a warning) and never update.

    Returns
    -------
    SolveResult
    """
    opts = opts or SolveOptions()
    _identity_reg_only(opts, "sirt")
    variant = opts.sirt_variant
    if variant not in ("sart", "cimmino", "landweber"):
        raise ValueError(f"unknown sirt variant: {variant!r}")
    b = np.asarray(b, dtype=np.float64).ravel()
    m, n = A.shape
    if b.size != m:
        raise ValueError(f"right-hand side has length {b.size}, expected {m}")
    b_norm = np.linalg.norm(b) or 1.0
    project = build_projector(opts)

    def _safe_inv(v, what):
        out = np.zeros_like(v)
        good = v > 0.0
        if not np.all(good):
            warnings.warn(
                f"{int(np.size(v) - np.count_nonzero(good))} zero {what} norms; "
                "those entries will not update",
                stacklevel=2,
            )
        out[good] = 1.0 / v[good]
        return out

    if variant == "landweber":
        d1 = None
        d2 = None
        est = power_norm_estimate(A, steps=10)
        if est == 0.0:
            raise ValueError("operator norm estimate is zero; nothing to iterate on")
        omega = opts.omega if opts.omega is not None else 0.95 * 2.0 / est**2
    else:
        _need_rows(A, "sirt")
        if variant == "sart":
            d1 = _safe_inv(A.abs_col_sums(), "column")
            d2 = _safe_inv(A.abs_row_sums(), "row")
        else:
            d1 = None
            d2 = _safe_inv(m * A.row_norms_squared(), "row")
        omega = opts.omega if opts.omega is not None else 1.0
    if omega <= 0.0:
        raise ValueError(f"relaxation omega must be positive, got {omega}")

    x = (
        np.asarray(opts.x0, dtype=np.float64).ravel().copy()
        if opts.x0 is not None
        else np.zeros(n)
    )
    log = IterationLog(opts.x_true, K)
    its = 0
    for k in range(1, opts.MaxIter + 1):
        r = b - A.apply(x)
        check_finite(r, "residual")
        upd = A.apply_adjoint(r if d2 is None else d2 * r)
        if d1 is not None:
            upd = d1 * upd
        x = x + omega * upd
        if project is not None:
            x = project(x)

        rnrm = np.linalg.norm(b - A.apply(x)) / b_norm
        log.record(k, x, rnrm)
        its = k
        if not log.stopped:
            dec = check_discrepancy(rnrm, opts.NoiseLevel, opts.eta)
            if dec.stop:
                log.flag_stop(k, x, dec.reason)
        if log.stopped and not opts.NoStop:
            break

    return log.finalize(x, its)
