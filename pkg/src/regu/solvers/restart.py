"""Restarted inner-outer iterations.

The outer loop repeatedly solves a least-squares correction problem on
the current residual, updates the iterate (projecting it onto the
constraint set, refreshing an iterate-dependent regularizer, adapting
the penalty parameter), and restarts.  Stopping is by the outer
discrepancy principle, stabilization of the outer sequence, or
exhaustion of the total inner-iteration budget; the iterate histories
are indexed by outer step.

Drivers built on the framework:

- ``constr_ls``: projected restarts, plain (or priorconditioned) inner
  conjugate gradient corrections.
- ``irn``: sparsity via restarted priorconditioning with the diagonal
  reweighting matrix refreshed from each outer iterate.
- ``htv``: a total-variation heuristic, stacking the gradient-weighted
  difference matrix into the inner problem with a per-restart penalty
  parameter matched to the noise level by a secant update.
"""

from __future__ import annotations

import numpy as np

from ..linop import stack_vertical
from ..regmat import htv_weights, irn_weights
from ..stopping import check_discrepancy, check_outer_stabilization, secant_lambda_update
from .cgls import cgls
from .common import IterationLog, SolveOptions, build_projector

__all__ = ["restart", "constr_ls", "irn", "htv"]

#: cap on the inner discrepancy level so inner options stay valid
_MAX_INNER_NL = 0.999


def _inner_options(opts, remaining, inner_nl):
    return SolveOptions(
        NoiseLevel=inner_nl,
        eta=1.0,
        MaxIter=remaining,
        NE_Rtol=opts.NE_Rtol,
        reorth=opts.reorth,
    )


def _default_inner(opts):
    if opts.inner_solver != "cgls":
        raise ValueError(
            f"unsupported inner solver {opts.inner_solver!r}; only 'cgls' is available"
        )

    def solve(A, r, L, lam, remaining, inner_nl):
        inner_opts = _inner_options(opts, remaining, inner_nl)
        if L is not None:
            inner_opts = inner_opts.with_(RegMatrix=L)
        if lam > 0.0:
            inner_opts = inner_opts.with_(RegParam=lam)
        return cgls(A, r, opts=inner_opts)

    return solve


def _stacked_inner(opts):
    """Inner solve of min ||A w - r||^2 + lam^2 ||L w||^2 via the stacked system."""

    def solve(A, r, L, lam, remaining, inner_nl):
        inner_opts = _inner_options(opts, remaining, inner_nl)
        if L is None or lam == 0.0:
            return cgls(A, r, opts=inner_opts)
        op = stack_vertical(A, L, lam)
        data = np.concatenate([r, np.zeros(L.shape[0])])
        return cgls(op, data, opts=inner_opts)

    return solve


def restart(A, b, K=None, opts=None, *, mode="penalized", weights=None,
            inner=None, lam_rule=None):
    """Generic restarted inner-outer iteration.

    Parameters
    ----------
    A : LinearOperator
    b : ndarray
    K : sequence of int, optional
        Outer steps to store; ``max(K)`` also bounds the total number
        of inner iterations across all restarts.
    opts : SolveOptions
        ``MaxIter`` caps the outer count (and the inner budget when K
        is not given); constraints define the projection; ``stopOut``
        picks the stabilization metric.
    mode : {'penalized', 'projected', 'penalized+projected'}
        Projected modes apply the constraint projection to every outer
        iterate; penalized modes may carry an (iterate-dependent)
        regularizer into the inner solve.
    weights : callable, optional
        ``weights(x)`` builds the regularizer for the next restart.
    inner : callable, optional
        ``inner(A, r, L, lam, remaining, inner_nl) -> SolveResult``
        solving the correction problem.  Defaults to conjugate gradient
        (priorconditioned when L is given).
    lam_rule : float or 'secant', optional
        Per-restart penalty parameter: a number is held fixed, 'secant'
        retargets it to the outer discrepancy level each restart.

    Returns
    -------
    SolveResult
        Histories indexed by outer step; ``info.inner_its`` is the
        total inner-iteration count.
    """
    opts = opts or SolveOptions()
    if mode not in ("penalized", "projected", "penalized+projected"):
        raise ValueError(f"unknown restart mode: {mode!r}")
    if "penalized" not in mode and weights is not None:
        raise ValueError("projected restarts take no regularizer weights")
    b = np.asarray(b, dtype=np.float64).ravel()
    m, n = A.shape
    if b.size != m:
        raise ValueError(f"right-hand side has length {b.size}, expected {m}")

    project = build_projector(opts) if "projected" in mode else None
    solve = inner if inner is not None else _default_inner(opts)
    budget = max(int(k) for k in K) if K else opts.MaxIter
    if budget < 1:
        raise ValueError(f"iteration budget must be >= 1, got {budget}")
    b_norm = np.linalg.norm(b) or 1.0
    target = opts.eta * opts.NoiseLevel * b_norm

    x = (
        np.asarray(opts.x0, dtype=np.float64).ravel().copy()
        if opts.x0 is not None
        else np.zeros(n)
    )
    if project is not None:
        x = project(x)

    log = IterationLog(opts.x_true, K, track_lam=True)
    monitored: list[float] = []
    lam_hist: list[tuple[float, float]] = []
    lam = float(lam_rule) if isinstance(lam_rule, (int, float)) else 1.0
    used = 0
    ell = 0
    while ell < opts.MaxIter and used < budget:
        r = b - A.apply(x)
        rnrm = np.linalg.norm(r) / b_norm
        if not log.stopped:
            dec = check_discrepancy(rnrm, opts.NoiseLevel, opts.eta)
            if dec.stop:
                log.flag_stop(ell, x, dec.reason)
        if log.stopped and not opts.NoStopOut:
            break

        L = weights(x) if weights is not None else None
        if lam_rule == "secant" and lam_hist:
            lam = secant_lambda_update(lam_hist, target)
        inner_nl = 0.0
        if target > 0.0:
            inner_nl = min(target / np.linalg.norm(r), _MAX_INNER_NL)
        result = solve(A, r, L, lam if lam_rule is not None else 0.0,
                       budget - used, inner_nl)
        used += max(result.info.its, 1)
        w = result.X[:, -1]

        x = x + w
        if project is not None:
            x = project(x)
        ell += 1
        rnrm_new = np.linalg.norm(b - A.apply(x)) / b_norm
        lam_used = lam if lam_rule is not None else 0.0
        log.record(ell, x, rnrm_new, lam=lam_used)
        if lam_rule == "secant":
            lam_hist.append((lam, rnrm_new * b_norm))

        monitored.append(_monitored_scalar(opts.stopOut, x, L, lam_used))
        if not log.stopped:
            dec = check_outer_stabilization(
                monitored, opts.stopOut, opts.outer_tol, opts.outer_window
            )
            if dec.stop:
                log.flag_stop(ell, x, dec.reason)
        if log.stopped and not opts.NoStopOut:
            break

    return log.finalize(x, ell, inner_its=used)


def _monitored_scalar(mode, x, L, lam):
    """The per-restart scalar the configured stabilization rule watches."""
    if mode == "regPstab":
        return float(lam)
    if mode == "Lxstab" and L is not None:
        return float(np.linalg.norm(L.apply(x)))
    return float(np.linalg.norm(x))


def constr_ls(A, b, K=None, opts=None):
    """Constrained least squares by projected restarts.

    Inner conjugate gradient corrections (priorconditioned when a
    RegMatrix is configured, damped when RegParam is numeric) followed
    by projection onto the box/energy set.  Unconstrained, this reduces
    to restarted conjugate gradient and converges in one restart.

    Returns
    -------
    SolveResult
    """
    opts = opts or SolveOptions()
    rp = opts.RegParam
    lam_rule = None
    if isinstance(rp, (int, float)) and not isinstance(rp, bool) and rp > 0:
        lam_rule = float(rp)

    def solve(A_, r, L, lam, remaining, inner_nl):
        inner_opts = _inner_options(opts, remaining, inner_nl).with_(
            RegMatrix=opts.RegMatrix
        )
        if lam > 0.0:
            inner_opts = inner_opts.with_(RegParam=lam)
        return cgls(A_, r, opts=inner_opts)

    return restart(A, b, K=K, opts=opts, mode="projected", inner=solve,
                   lam_rule=lam_rule)


def irn(A, b, K=None, opts=None):
    """Sparsity-promoting restarts: iteratively reweighted priorconditioning.

    Each restart rebuilds the diagonal weight matrix from the current
    iterate (identity on the first pass) and runs priorconditioned
    conjugate gradient on the residual, stopped by the discrepancy
    principle, so the penalty approximates the 1-norm ever better near
    the emerging support.  Box/energy constraints, when configured, are
    enforced by projecting each outer iterate.

    Returns
    -------
    SolveResult
    """
    opts = opts or SolveOptions()
    constrained = (
        opts.xMin is not None or opts.xMax is not None or opts.xEnergy is not None
    )
    return restart(
        A, b, K=K, opts=opts,
        mode="penalized+projected" if constrained else "penalized",
        weights=lambda x: irn_weights(x), inner=_default_inner(opts),
    )


def htv(A, b, K=None, opts=None):
    """Total-variation-flavored restarts via gradient-reweighted stacking.

    Each restart rebuilds the weighted difference stack from the
    current image and solves the stacked damped problem
    ``min ||A w - r||^2 + lam^2 ||L w||^2``; a numeric RegParam holds
    lam fixed, otherwise a secant update retargets it to the outer
    discrepancy level after every restart.

    Returns
    -------
    SolveResult
    """
    opts = opts or SolveOptions()
    rp = opts.RegParam
    if isinstance(rp, (int, float)) and not isinstance(rp, bool):
        lam_rule = float(rp)
    elif rp in (None, "discrep"):
        lam_rule = "secant"
    else:
        raise ValueError(f"htv takes a numeric RegParam or 'discrep', got {rp!r}")
    return restart(
        A, b, K=K, opts=opts, mode="penalized",
        weights=lambda x: htv_weights(x), inner=_stacked_inner(opts),
        lam_rule=lam_rule,
    )
