"""Krylov subspace methods with per-iteration Tikhonov stabilization.

The hybrid solvers here project onto a growing subspace (Golub-Kahan
bidiagonalization for ``hybrid_lsqr``, the Arnoldi process for
``hybrid_gmres``, a flexible Arnoldi process with an iterate-adapted
diagonal preconditioner for ``hybrid_fgmres``), then regularize the
small projected problem afresh at every iteration.  The projected
parameter can be fixed, chosen by a GCV variant, or matched to the
noise level by a secant iteration on the projected discrepancy.

``rrgmres`` is the unregularized range-restricted sibling: its subspace
starts at A b, so it never needs the adjoint, and stopping is left to
the discrepancy principle.

With the parameter pinned at zero the hybrids coincide with their
plain ancestors (LSQR/CGLS and GMRES), which the test suite checks.
"""

from __future__ import annotations

import warnings

import numpy as np

from ..stopping import (
    ProjectedProblem,
    check_discrepancy,
    check_gcv_stop,
    check_residual_stabilization,
    choose_lambda,
    gcv_function,
)
from .common import IterationLog, SolveOptions, check_finite, priorconditioned_system

__all__ = ["hybrid_lsqr", "hybrid_gmres", "hybrid_fgmres", "ell1", "rrgmres"]

#: relative norm drop that declares a basis vector numerically dependent
BREAKDOWN_RTOL = 1e-14

_GCV_RULES = {"gcv": "standard", "modified_gcv": "modified", "wgcv": "weighted"}


def _orthogonalize(w, basis, reorth):
    """MGS of w against ``basis`` (list of unit vectors); returns (h, w)."""
    h = np.zeros(len(basis))
    passes = 2 if reorth else 1
    for _ in range(passes):
        for i, v in enumerate(basis):
            c = float(v @ w)
            h[i] += c
            w = w - c * v
    return h, w


class _HybridRule:
    """Per-iteration parameter choice plus the matching stopping rule."""

    def __init__(self, opts, b_norm, default_rule):
        rule = opts.RegParam if opts.RegParam is not None else default_rule
        if isinstance(rule, (int, float)) and not isinstance(rule, bool):
            if rule < 0:
                raise ValueError(
                    f"regularization parameter must be >= 0, got {rule}"
                )
        elif rule == "discrep":
            if opts.NoiseLevel <= 0.0:
                raise ValueError("RegParam 'discrep' needs a positive NoiseLevel")
        elif rule != "off" and rule not in _GCV_RULES:
            raise ValueError(f"unknown regularization parameter rule: {rule!r}")
        self.rule = rule
        self.opts = opts
        self.b_norm = b_norm
        self.target = opts.eta * opts.NoiseLevel * b_norm
        self.gmin: list[float] = []

    def select(self, proj):
        try:
            return choose_lambda(
                proj, self.rule, target=self.target, weight=self.opts.wgcv_weight
            )
        except (np.linalg.LinAlgError, FloatingPointError, ZeroDivisionError) as exc:
            warnings.warn(
                f"regularization parameter search failed ({exc}); "
                "continuing with lambda = 0",
                RuntimeWarning,
                stacklevel=2,
            )
            return 0.0

    def stopping(self, proj, lam, rnrm, rnrm_history):
        """First matching stop decision for this iteration, if any."""
        opts = self.opts
        if self.rule == "discrep":
            if proj.residual_norm(0.0) <= self.target:
                return "discrepancy"
            return None
        if self.rule in _GCV_RULES:
            self.gmin.append(
                gcv_function(proj, lam, _GCV_RULES[self.rule], opts.wgcv_weight)
            )
            dec = check_gcv_stop(self.gmin, opts.gcv_window, opts.gcv_tol)
            if dec.stop:
                return dec.reason
        elif opts.NoiseLevel > 0.0:
            dec = check_discrepancy(rnrm, opts.NoiseLevel, opts.eta)
            if dec.stop:
                return dec.reason
        dec = check_residual_stabilization(
            rnrm_history, opts.gcv_tol, opts.gcv_window
        )
        return dec.reason if dec.stop else None


def _prepare(A, b, opts):
    b = np.asarray(b, dtype=np.float64).ravel()
    if b.size != A.shape[0]:
        raise ValueError(f"right-hand side has length {b.size}, expected {A.shape[0]}")
    if opts.x0 is not None:
        raise ValueError("Krylov methods here start from zero; shift b for a warm start")
    return b, float(np.linalg.norm(b))


def hybrid_lsqr(A, b, K=None, opts=None):
    """Golub-Kahan hybrid: LSQR stabilized by per-iteration Tikhonov.

    Each step extends the bidiagonalization A V_k = U_{k+1} B_k (with
    full reorthogonalization unless ``opts.reorth`` is off), solves the
    projected problem min ||B_k y - beta e_1||^2 + lam_k^2 ||y||^2 with
    lam_k picked by ``opts.RegParam`` (default: weighted GCV), and maps
    back as x_k = V_k y.  A full-rank RegMatrix priorconditions the
    process.  With RegParam = 0 this is plain LSQR.

    Returns
    -------
    SolveResult
    """
    opts = opts or SolveOptions()
    b, b_norm = _prepare(A, b, opts)
    Ahat, prior = priorconditioned_system(A, opts)
    rule = _HybridRule(opts, b_norm or 1.0, default_rule="wgcv")
    log = IterationLog(opts.x_true, K, track_lam=True)
    m, n = A.shape

    if b_norm == 0.0:
        x = np.zeros(n)
        log.flag_stop(0, x, "discrepancy")
        return log.finalize(x, 0)

    beta1 = b_norm
    U = [b / beta1]
    v = Ahat.apply_adjoint(U[0])
    alpha = np.linalg.norm(v)
    if alpha == 0.0:
        x = np.zeros(n)
        log.flag_stop(0, x, "breakdown")
        return log.finalize(x, 0)
    V = [v / alpha]
    alphas = [alpha]
    betas: list[float] = []

    x = np.zeros(n)
    its = 0
    breakdown = False
    for k in range(1, opts.MaxIter + 1):
        u = Ahat.apply(V[-1]) - alphas[-1] * U[-1]
        if opts.reorth:
            _, u = _orthogonalize(u, U, True)
        beta = np.linalg.norm(u)
        check_finite(beta, "bidiagonalization norm")
        if beta <= BREAKDOWN_RTOL * alphas[0]:
            breakdown = True
        else:
            U.append(u / beta)
            betas.append(beta)
            v = Ahat.apply_adjoint(U[-1]) - beta * V[-1]
            if opts.reorth:
                _, v = _orthogonalize(v, V, True)
            alpha = np.linalg.norm(v)
            if alpha <= BREAKDOWN_RTOL * alphas[0]:
                breakdown = True
            else:
                V.append(v / alpha)
                alphas.append(alpha)

        # projected bidiagonal matrix for the first k columns
        rows = min(len(betas), k) + 1
        B = np.zeros((rows, k))
        for j in range(k):
            B[j, j] = alphas[j]
            if j + 1 < rows:
                B[j + 1, j] = betas[j]
        c = np.zeros(rows)
        c[0] = beta1
        proj = ProjectedProblem(B, c, m_full=m)
        lam = rule.select(proj)
        y = proj.solve(lam)
        xk = np.zeros(n)
        for j in range(k):
            xk += y[j] * V[j]
        x = prior.solve(xk) if prior is not None else xk
        rnrm = np.linalg.norm(b - A.apply(x)) / b_norm
        log.record(k, x, rnrm, lam=lam)
        its = k

        if not log.stopped:
            reason = rule.stopping(proj, lam, rnrm, log.rnrm)
            if reason is not None:
                log.flag_stop(k, x, reason)
        if breakdown:
            log.flag_stop(k, x, "breakdown")
            break
        if log.stopped and not opts.NoStop:
            break

    return log.finalize(x, its)


def _arnoldi_hybrid(A, b, K, opts, flexible, default_rule, adapt=True):
    """Shared Arnoldi / flexible-Arnoldi hybrid loop."""
    m, n = A.shape
    if m != n:
        raise ValueError(
            f"this method needs a square operator, got {m}x{n}"
        )
    b, b_norm = _prepare(A, b, opts)
    if flexible:
        if opts.RegMatrix not in (None, "identity"):
            raise ValueError("the flexible hybrid adapts its own preconditioner; "
                             "RegMatrix is not supported")
        Ahat, prior = A, None
    else:
        Ahat, prior = priorconditioned_system(A, opts)
    rule = _HybridRule(opts, b_norm or 1.0, default_rule=default_rule)
    log = IterationLog(opts.x_true, K, track_lam=True)

    if b_norm == 0.0:
        x = np.zeros(n)
        log.flag_stop(0, x, "discrepancy")
        return log.finalize(x, 0)

    beta = b_norm
    V = [b / beta]
    Z: list[np.ndarray] = []
    H = np.zeros((opts.MaxIter + 1, opts.MaxIter))
    x = np.zeros(n)
    its = 0
    breakdown = False
    for k in range(1, opts.MaxIter + 1):
        if flexible:
            if adapt and k > 1 and np.any(x):
                tau = 1e-10 * float(np.max(np.abs(x)))
                d = np.maximum(np.abs(x), tau)
            else:
                d = np.ones(n)
            z = d * V[k - 1]
            Z.append(z)
            w = Ahat.apply(z)
        else:
            w = Ahat.apply(V[k - 1])
        h, w = _orthogonalize(w, V, opts.reorth)
        hnew = np.linalg.norm(w)
        check_finite(hnew, "Arnoldi norm")
        H[: k, k - 1] = h
        H[k, k - 1] = hnew
        scale = np.abs(H[: k + 1, : k]).max()
        if hnew <= BREAKDOWN_RTOL * max(scale, 1e-300):
            breakdown = True
            rows = k
        else:
            V.append(w / hnew)
            rows = k + 1

        c = np.zeros(rows)
        c[0] = beta
        proj = ProjectedProblem(H[:rows, :k], c, m_full=m)
        lam = rule.select(proj)
        y = proj.solve(lam)
        basis = Z if flexible else V
        xk = np.zeros(n)
        for j in range(k):
            xk += y[j] * basis[j]
        x = prior.solve(xk) if prior is not None else xk
        rnrm = np.linalg.norm(b - A.apply(x)) / b_norm
        log.record(k, x, rnrm, lam=lam)
        its = k

        if not log.stopped:
            reason = rule.stopping(proj, lam, rnrm, log.rnrm)
            if reason is not None:
                log.flag_stop(k, x, reason)
        if breakdown:
            log.flag_stop(k, x, "breakdown")
            break
        if log.stopped and not opts.NoStop:
            break

    return log.finalize(x, its)


def hybrid_gmres(A, b, K=None, opts=None):
    """Arnoldi hybrid for square systems: GMRES with per-iteration Tikhonov.

    Builds the Krylov basis of (A, b), regularizes the projected
    Hessenberg problem each step (default rule: GCV), and supports
    priorconditioning through a full-rank RegMatrix.  With RegParam = 0
    this is plain GMRES.  No adjoint is ever applied.
    """
    return _arnoldi_hybrid(A, b, K, opts or SolveOptions(), False, "gcv")


def hybrid_fgmres(A, b, K=None, opts=None, adapt=True):
    """Flexible Arnoldi hybrid with an iterate-adapted diagonal preconditioner.

    Iteration k preconditions with diag(max(|x_{k-1}|, tau)),
    tau = 1e-10 ||x_{k-1}||_inf (identity on the first step), which
    steers the solution space toward the support of the emerging
    solution; the projected problem is regularized like the other
    hybrids (default rule: GCV).  Approximates a 1-norm penalty, hence
    suited to sparse reconstructions.  ``adapt=False`` freezes the
    preconditioner at the identity, which reduces the method to
    ``hybrid_gmres``.
    """
    return _arnoldi_hybrid(A, b, K, opts or SolveOptions(), True, "gcv", adapt=adapt)


def ell1(A, b, K=None, opts=None):
    """Sparsity-flavored solver: the flexible hybrid under its default rules."""
    return hybrid_fgmres(A, b, K=K, opts=opts)


def rrgmres(A, b, K=None, opts=None):
    """Range-restricted GMRES: minimal residual over span{A b, ..., A^k b}.

    Starting the subspace at A b (instead of b) filters the noise
    component that lives outside the range of A, which is what makes
    plain restarted-free GMRES usable on inverse problems.  Requires a
    square operator but never the adjoint.  Stopping: discrepancy
    principle (when NoiseLevel > 0), Arnoldi breakdown, or MaxIter.
    """
    opts = opts or SolveOptions()
    m, n = A.shape
    if m != n:
        raise ValueError(f"this method needs a square operator, got {m}x{n}")
    b, b_norm = _prepare(A, b, opts)
    if opts.RegMatrix not in (None, "identity"):
        raise ValueError("rrgmres does not support a regularization matrix")
    log = IterationLog(opts.x_true, K)

    w0 = A.apply(b)
    nrm0 = np.linalg.norm(w0)
    if b_norm == 0.0 or nrm0 == 0.0:
        x = np.zeros(n)
        log.flag_stop(0, x, "breakdown" if b_norm else "discrepancy")
        return log.finalize(x, 0)

    V = [w0 / nrm0]
    g = [float(V[0] @ b)]
    H = np.zeros((opts.MaxIter + 1, opts.MaxIter))
    x = np.zeros(n)
    its = 0
    breakdown = False
    for k in range(1, opts.MaxIter + 1):
        w = A.apply(V[k - 1])
        h, w = _orthogonalize(w, V, opts.reorth)
        hnew = np.linalg.norm(w)
        check_finite(hnew, "Arnoldi norm")
        H[: k, k - 1] = h
        H[k, k - 1] = hnew
        scale = np.abs(H[: k + 1, : k]).max()
        if hnew <= BREAKDOWN_RTOL * max(scale, 1e-300):
            breakdown = True
            rows = k
        else:
            V.append(w / hnew)
            g.append(float(V[k] @ b))
            rows = k + 1

        y = np.linalg.lstsq(H[:rows, :k], np.asarray(g[:rows]), rcond=None)[0]
        xk = np.zeros(n)
        for j in range(k):
            xk += y[j] * V[j]
        x = xk
        rnrm = np.linalg.norm(b - A.apply(x)) / b_norm
        log.record(k, x, rnrm)
        its = k

        if not log.stopped:
            dec = check_discrepancy(rnrm, opts.NoiseLevel, opts.eta)
            if dec.stop:
                log.flag_stop(k, x, dec.reason)
        if breakdown:
            log.flag_stop(k, x, "breakdown")
            break
        if log.stopped and not opts.NoStop:
            break

    return log.finalize(x, its)
