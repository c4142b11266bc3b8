"""Iterative solvers for discrete ill-posed least-squares problems."""

from .cgls import cgls, enriched_cgls
from .common import (
    IterationInfo,
    IterationLog,
    RegSnapshot,
    SolveOptions,
    SolveResult,
    build_projector,
    power_norm_estimate,
    project_simplex,
)
from .firstorder import art, fista, mrnsd, sirt
from .krylov import ell1, hybrid_fgmres, hybrid_gmres, hybrid_lsqr, rrgmres
from .restart import constr_ls, htv, irn, restart

__all__ = [
    "SolveOptions",
    "SolveResult",
    "IterationInfo",
    "IterationLog",
    "RegSnapshot",
    "build_projector",
    "project_simplex",
    "power_norm_estimate",
    "cgls",
    "enriched_cgls",
    "rrgmres",
    "hybrid_lsqr",
    "hybrid_gmres",
    "hybrid_fgmres",
    "ell1",
    "fista",
    "mrnsd",
    "art",
    "sirt",
    "restart",
    "constr_ls",
    "irn",
    "htv",
]
