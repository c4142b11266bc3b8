"""Conjugate gradient least squares, plain and subspace-enriched.

``cgls`` runs the CG recursion on the normal equations of
``min ||A x - b||`` without ever forming A^T A.  A full-rank
regularizer turns the run into a priorconditioned one (the recursion
sees A L^{-1} and iterates are mapped back through L); a fixed
regularization parameter turns it into the stacked damped problem
``min ||A x - b||^2 + lam^2 ||L x||^2``.

``enriched_cgls`` augments the Krylov subspace with user-supplied
directions (a flat guess, a known background, ...) and returns the
least-squares-optimal iterate over the enlarged span, so its residual
is never worse than plain CGLS at the same iteration count.
"""

from __future__ import annotations

import numpy as np
from scipy.linalg import solve_triangular

from ..linop import IdentityOperator, stack_vertical
from ..regmat import resolve_regularizer
from ..stopping import check_discrepancy, check_ne_residual
from .common import (
    IterationLog,
    SolveOptions,
    check_finite,
    priorconditioned_system,
)

__all__ = ["cgls", "enriched_cgls"]


def _fixed_lambda(opts, who):
    """Numeric RegParam for methods without per-iteration selection rules."""
    rp = opts.RegParam
    if rp is None or rp == "off":
        return 0.0
    if isinstance(rp, (int, float)) and not isinstance(rp, bool):
        if rp < 0:
            raise ValueError(f"RegParam must be >= 0, got {rp}")
        return float(rp)
    raise ValueError(
        f"{who} takes a fixed numeric RegParam (or 'off'), got {rp!r}; "
        "use a hybrid method for per-iteration selection"
    )


def _shifted_system(A, b, opts, lam, L):
    """Assemble the working operator/data, handling x0 shifts and damping.

    Returns ``(op, data, w0map, x_base)`` where the recursion solves
    ``min ||op w - data||`` from zero and iterates map back as
    ``x = x_base + w0map(w)``.
    """
    n = A.shape[1]
    x_base = None
    d = b
    if opts.x0 is not None:
        x_base = np.asarray(opts.x0, dtype=np.float64).ravel()
        if x_base.size != n:
            raise ValueError(f"x0 has length {x_base.size}, expected {n}")
        d = b - A.apply(x_base)
    if lam > 0.0:
        bottom = np.zeros(n)
        if x_base is not None:
            lx = L.apply(x_base) if L is not None else x_base
            bottom = -lam * lx
        op = stack_vertical(A, IdentityOperator(n) if L is None else L, lam)
        data = np.concatenate([d, bottom])
    else:
        op = A
        data = d
    return op, data, x_base


def cgls(A, b, K=None, opts=None):
    """CG on the normal equations of the (possibly damped) problem.

    Parameters
    ----------
    A : LinearOperator
    b : ndarray
    K : sequence of int, optional
        Iteration indices whose iterates are returned in ``X``.
    opts : SolveOptions, optional
        ``RegMatrix`` priorconditions the iteration; a numeric
        ``RegParam`` adds Tikhonov damping.  Stopping: discrepancy
        principle when NoiseLevel > 0, normal-equation residual below
        NE_Rtol, or MaxIter.

    Returns
    -------
    SolveResult
    """
    opts = opts or SolveOptions()
    b = np.asarray(b, dtype=np.float64).ravel()
    m, n = A.shape
    if b.size != m:
        raise ValueError(f"right-hand side has length {b.size}, expected {m}")
    lam = _fixed_lambda(opts, "cgls")
    Ahat, prior = priorconditioned_system(A, opts)
    L = resolve_regularizer(opts.RegMatrix, n)

    # Priorconditioned recursion works in the transformed variable; a
    # fixed lam then damps that variable directly (identity penalty).
    if prior is not None:
        x_base = None
        if opts.x0 is not None:
            raise ValueError("x0 with a priorconditioner is not supported; shift b instead")
        if lam > 0.0:
            op = stack_vertical(Ahat, IdentityOperator(n), lam)
            data = np.concatenate([b, np.zeros(n)])
        else:
            op, data = Ahat, b
        to_x = prior.solve
    else:
        op, data, x_base = _shifted_system(A, b, opts, lam, L)
        to_x = None

    b_norm = np.linalg.norm(b)
    if b_norm == 0.0:
        b_norm = 1.0
    log = IterationLog(opts.x_true, K, track_ne=True)

    w = np.zeros(op.shape[1])
    r = data.copy()
    s = op.apply_adjoint(r)
    gamma = float(s @ s)
    check_finite(gamma, "initial gradient norm")
    natb = np.sqrt(gamma)

    def current_x(wvec):
        x = to_x(wvec) if to_x is not None else wvec.copy()
        if x_base is not None:
            x = x_base + x
        return x

    if natb == 0.0:
        # A^T b = 0: zero is already stationary
        x = current_x(w)
        log.flag_stop(0, x, "ne_residual")
        return log.finalize(x, 0)

    p = s.copy()
    its = 0
    for k in range(1, opts.MaxIter + 1):
        q = op.apply(p)
        qq = float(q @ q)
        check_finite(qq, "direction energy")
        if qq == 0.0:
            break
        alpha = gamma / qq
        w = w + alpha * p
        r = r - alpha * q
        s = op.apply_adjoint(r)
        gamma_new = float(s @ s)
        check_finite(gamma_new, "gradient norm")

        x = current_x(w)
        rnrm = np.linalg.norm(b - A.apply(x)) / b_norm
        ne = np.sqrt(gamma_new) / natb
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

        beta = gamma_new / gamma
        gamma = gamma_new
        p = s + beta * p

    return log.finalize(current_x(w), its)


def _orthonormal_columns(W, n):
    W = np.atleast_2d(np.asarray(W, dtype=np.float64))
    if W.shape[0] != n:
        W = W.T
    if W.shape[0] != n:
        raise ValueError(f"enrichment vectors must have length {n}")
    q, r = np.linalg.qr(W)
    d = np.abs(np.diag(r))
    if d.size and d.min() <= np.finfo(float).eps * max(W.shape) * max(d.max(), 1.0):
        raise ValueError("enrichment basis is rank deficient")
    return q


class _GrowingLS:
    """Incremental QR least squares min ||G c - data|| as columns arrive."""

    def __init__(self, data):
        self.data = data
        self.q: list[np.ndarray] = []
        self.r = np.zeros((0, 0))
        self.t = np.zeros(0)

    def try_add(self, g):
        """Orthogonalize an image column; returns False when it adds nothing."""
        h = np.zeros(len(self.q))
        v = g.astype(np.float64, copy=True)
        for _ in range(2):  # reorthogonalize once
            for i, qi in enumerate(self.q):
                c = float(qi @ v)
                h[i] += c
                v -= c * qi
        rho = np.linalg.norm(v)
        if rho <= 1e-12 * max(np.linalg.norm(g), 1e-300):
            return False
        v /= rho
        j = len(self.q)
        newr = np.zeros((j + 1, j + 1))
        newr[:j, :j] = self.r
        newr[:j, j] = h
        newr[j, j] = rho
        self.r = newr
        self.q.append(v)
        self.t = np.append(self.t, float(v @ self.data))
        return True

    def coefficients(self):
        if self.r.shape[0] == 0:
            return np.zeros(0)
        return solve_triangular(self.r, self.t)


def enriched_cgls(A, b, K=None, opts=None):
    """CGLS over the Krylov subspace enriched with given directions.

    The iterate at step k is the least-squares minimizer over
    ``span(W) + span(p_1, ..., p_k)`` where W holds the columns of
    ``opts.enrichment_basis`` and the p_i are the CGLS search directions.
    With no enrichment this is exactly ``cgls``.  Priorconditioning is
    not supported here; a numeric RegParam adds identity damping.

    Returns
    -------
    SolveResult
    """
    opts = opts or SolveOptions()
    if opts.enrichment_basis is None or np.size(opts.enrichment_basis) == 0:
        return cgls(A, b, K=K, opts=opts)
    if opts.RegMatrix not in (None, "identity"):
        raise ValueError("enriched_cgls supports the identity regularizer only")
    b = np.asarray(b, dtype=np.float64).ravel()
    m, n = A.shape
    if b.size != m:
        raise ValueError(f"right-hand side has length {b.size}, expected {m}")
    lam = _fixed_lambda(opts, "enriched_cgls")
    op, data, x_base = _shifted_system(A, b, opts, lam, None)

    b_norm = np.linalg.norm(b) or 1.0
    log = IterationLog(opts.x_true, K, track_ne=True)

    Qw = _orthonormal_columns(opts.enrichment_basis, n)
    basis = [Qw[:, j].copy() for j in range(Qw.shape[1])]
    ls = _GrowingLS(data)
    for c in basis:
        if not ls.try_add(op.apply(c)):
            raise ValueError("enrichment basis is rank deficient under the operator")

    # plain CGLS recursion supplies the Krylov directions
    w = np.zeros(op.shape[1])
    r = data.copy()
    s = op.apply_adjoint(r)
    gamma = float(s @ s)
    natb = np.sqrt(gamma)
    if natb == 0.0:
        coeffs = ls.coefficients()
        x = _combine(basis, coeffs, x_base)
        log.flag_stop(0, x, "ne_residual")
        return log.finalize(x, 0)

    p = s.copy()
    its = 0
    x = _combine(basis, ls.coefficients(), x_base)
    for k in range(1, opts.MaxIter + 1):
        q = op.apply(p)
        qq = float(q @ q)
        check_finite(qq, "direction energy")
        if qq == 0.0:
            break
        if ls.try_add(q):
            basis.append(p.copy())
        coeffs = ls.coefficients()
        x = _combine(basis, coeffs, x_base)

        stacked_res = data - op.apply(x if x_base is None else x - x_base)
        rnrm = np.linalg.norm(b - A.apply(x)) / b_norm
        ne = np.linalg.norm(op.apply_adjoint(stacked_res)) / natb
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

        # advance the underlying CGLS recursion
        alpha = gamma / qq
        w = w + alpha * p
        r = r - alpha * q
        s = op.apply_adjoint(r)
        gamma_new = float(s @ s)
        check_finite(gamma_new, "gradient norm")
        beta = gamma_new / gamma
        gamma = gamma_new
        p = s + beta * p

    return log.finalize(x, its)


def _combine(basis, coeffs, x_base):
    x = np.zeros_like(basis[0]) if basis else None
    for c, v in zip(coeffs, basis):
        x = x + c * v
    if x_base is not None:
        x = x + x_base
    return x
