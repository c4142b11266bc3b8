"""Iterative regularization toolkit.

Matrix-free solvers for large-scale discrete ill-posed problems
(Krylov, hybrid, first-order and restarted families), the
regularization matrices and stopping rules they share, and a set of 2D
test problems (image deblurring, inverse interpolation, inverse
diffusion, multi-exponential relaxometry, parallel-beam tomography)
with controlled noise models.

Vectors are float64; images are vectorized column-major.
"""

from . import linop, problems, regmat, solvers, stopping
from .linop import (
    ConvolutionOperator,
    DenseOperator,
    FunctionalOperator,
    IdentityOperator,
    KroneckerOperator,
    LinearOperator,
    PriorconditionedOperator,
    SparseOperator,
    StackedOperator,
    adjoint_consistency_test,
    as_dense,
    stack_vertical,
)
from .problems import (
    TestProblem,
    add_noise,
    gen_blur,
    gen_diffusion,
    gen_invinterp2,
    gen_nmr,
    gen_phantom,
    gen_psf,
    gen_tomo,
    severity_scan,
)
from .regmat import (
    Priorconditioner,
    build_laplacian,
    build_tv_pair,
    htv_weights,
    irn_weights,
    tv_value,
)
from .solvers import (
    SolveOptions,
    SolveResult,
    art,
    cgls,
    constr_ls,
    ell1,
    enriched_cgls,
    fista,
    htv,
    hybrid_fgmres,
    hybrid_gmres,
    hybrid_lsqr,
    irn,
    mrnsd,
    restart,
    rrgmres,
    sirt,
)
from .stopping import (
    ProjectedProblem,
    check_discrepancy,
    check_gcv_stop,
    check_ne_residual,
    choose_lambda,
    gcv_function,
    secant_lambda_update,
)

__version__ = "0.1.0"
