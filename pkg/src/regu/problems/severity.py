"""How ill posed is each problem class?  Compare singular value decay.

Operators are densified by probing with unit vectors (forward applies
only, so adjoint-free operators qualify) and handed to LAPACK; a size
guard keeps this honest-but-dense approach to small instances.
"""

from __future__ import annotations

import numpy as np

from ..linop import as_dense
from .blur import gen_blur
from .diffusion import gen_diffusion
from .interp import gen_invinterp2
from .nmr import gen_nmr
from .tomo import gen_tomo

__all__ = ["severity_scan", "singular_values", "DENSIFY_LIMIT"]

#: refuse to densify operators with more entries than this
DENSIFY_LIMIT = 4_000_000

_GENERATORS = {
    "blur": gen_blur,
    "diffusion": gen_diffusion,
    "invinterp2": gen_invinterp2,
    "nmr": gen_nmr,
    "tomo": gen_tomo,
}


def singular_values(op):
    """All singular values of a small operator, descending.

    Raises ``ValueError`` when ``rows * cols`` exceeds
    ``DENSIFY_LIMIT``, since the operator is assembled densely first.
    """
    m, n = op.shape
    if m * n > DENSIFY_LIMIT:
        raise ValueError(
            f"operator of size {m}x{n} is too large to densify "
            f"(limit {DENSIFY_LIMIT} entries)"
        )
    return np.linalg.svd(as_dense(op), compute_uv=False)


def severity_scan(kinds=("blur", "diffusion", "invinterp2", "tomo"), n=16):
    """Singular value sequences of the named generators at small size.

    Each kind is generated with its defaults at side length ``n`` and
    densified.  Returns ``{kind: descending singular values}``; the
    faster the decay, the more severely ill posed the problem.
    """
    unknown = [k for k in kinds if k not in _GENERATORS]
    if unknown:
        raise ValueError(f"unknown problem kinds: {unknown}")
    return {kind: singular_values(_GENERATORS[kind](n=n).A) for kind in kinds}
