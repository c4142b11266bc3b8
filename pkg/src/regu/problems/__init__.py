"""Test-problem generators, phantoms, and noise injection.

Five forward models -- image deblurring, 2D inverse interpolation,
inverse diffusion, NMR relaxometry, and parallel-beam tomography --
each packaged as a :class:`TestProblem` holding the operator, noise-free
data, true solution, and bookkeeping info.  Solution and data vectors
are column-major flattenings of the underlying 2D arrays.
"""

from ._base import ProblemInfo, TestProblem
from .blur import BLUR_LEVELS, PSF_KINDS, gen_blur, gen_psf
from .diffusion import assemble_fem_matrices, gen_diffusion
from .interp import gen_invinterp2
from .io import write_pgm
from .nmr import NMR_MATERIALS, gen_nmr
from .noise import NOISE_KINDS, NoiseSpec, add_noise
from .phantoms import PHANTOM_NAMES, gen_phantom
from .severity import DENSIFY_LIMIT, severity_scan, singular_values
from .tomo import gen_tomo, trace_ray

__all__ = [
    "BLUR_LEVELS",
    "DENSIFY_LIMIT",
    "NMR_MATERIALS",
    "NOISE_KINDS",
    "NoiseSpec",
    "PHANTOM_NAMES",
    "PSF_KINDS",
    "ProblemInfo",
    "TestProblem",
    "add_noise",
    "assemble_fem_matrices",
    "gen_blur",
    "gen_diffusion",
    "gen_invinterp2",
    "gen_nmr",
    "gen_phantom",
    "gen_psf",
    "gen_tomo",
    "severity_scan",
    "singular_values",
    "trace_ray",
    "write_pgm",
]
