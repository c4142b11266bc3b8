"""Image deblurring test problems.

The forward map is boundary-padded 2D convolution with a point spread
function (PSF); the data is the blurred image.  Unless asked to commit
the inverse crime, the noise-free data comes from blurring an
edge-replicated padded scene, so the operator's boundary model never
exactly explains it -- as with real photographs.
"""

from __future__ import annotations

import numpy as np

from ..linop import ConvolutionOperator
from ._base import ProblemInfo, TestProblem
from .phantoms import gen_phantom

__all__ = ["gen_psf", "gen_blur", "BLUR_LEVELS", "PSF_KINDS"]

PSF_KINDS = ("gauss", "defocus", "motion", "shake")
BLUR_LEVELS = ("mild", "medium", "severe")

_LEVEL_FACTOR = {"mild": 1.0, "medium": 2.0, "severe": 4.0}
_MOTION_DIVISOR = {"mild": 32.0, "medium": 16.0, "severe": 8.0}

#: random-walk sample count for the camera-shake PSF
_SHAKE_STEPS = 500


def _psf_scale(n):
    # Blur extents are stated on a 256-pixel reference frame, with a
    # floor so small images are still genuinely (not cosmetically)
    # blurred; above 128 pixels the extent scales proportionally.
    return max(n, 128) / 256.0


def gen_psf(kind, n, blur_level="medium", seed=0):
    """Build an n-by-n point spread function summing to one.

    Parameters
    ----------
    kind : {'gauss', 'defocus', 'motion', 'shake'}
        Isotropic Gaussian, uniform out-of-focus disk, 45-degree
        motion line, or a seeded random-walk camera shake.
    n : int
        Side length, at least 3.
    blur_level : {'mild', 'medium', 'severe'}
        Gaussian spread sigma in {1, 2, 4} and disk/shake radius in
        {2, 4, 8}, both times ``max(n, 128)/256``; motion-line length
        n/32, n/16 or n/8 pixels.
    seed : int
        Consumed by 'shake' only.

    Returns
    -------
    ndarray of shape (n, n), nonnegative, summing to 1.
    """
    if kind not in PSF_KINDS:
        raise ValueError(f"unknown PSF kind: {kind!r}")
    if blur_level not in BLUR_LEVELS:
        raise ValueError(f"unknown blur level: {blur_level!r}")
    if n < 3:
        raise ValueError(f"PSF side length must be at least 3, got {n}")
    scale = _psf_scale(n)
    if kind == "gauss":
        sigma = _LEVEL_FACTOR[blur_level] * scale
        psf = _gauss_psf(n, sigma)
    elif kind == "defocus":
        radius = 2.0 * _LEVEL_FACTOR[blur_level] * scale
        psf = _defocus_psf(n, radius)
    elif kind == "motion":
        length = max(1, int(round(n / _MOTION_DIVISOR[blur_level])))
        psf = _motion_psf(n, length)
    else:
        radius = 2.0 * _LEVEL_FACTOR[blur_level] * scale
        psf = _shake_psf(n, radius, np.random.default_rng(seed))
    return psf / psf.sum()


def _centered_distances(n):
    c = (n - 1) / 2.0
    d = np.arange(n) - c
    return d[:, None] ** 2 + d[None, :] ** 2


def _gauss_psf(n, sigma):
    return np.exp(-_centered_distances(n) / (2.0 * sigma**2))


def _defocus_psf(n, radius):
    if 2.0 * radius + 1.0 > n:
        raise ValueError(
            f"defocus radius {radius} does not fit an {n}x{n} kernel"
        )
    return (_centered_distances(n) <= radius**2).astype(np.float64)


def _motion_psf(n, length):
    if length > n:
        raise ValueError(f"motion length {length} does not fit an {n}x{n} kernel")
    psf = np.zeros((n, n))
    center = (n - 1) // 2
    start = center - (length - 1) // 2
    for t in range(length):
        psf[start + t, start + t] = 1.0
    return psf


def _shake_psf(n, radius, rng):
    if 2.0 * radius + 1.0 > n:
        raise ValueError(f"shake radius {radius} does not fit an {n}x{n} kernel")
    path = np.cumsum(rng.standard_normal((_SHAKE_STEPS, 2)), axis=0)
    path -= path.mean(axis=0)
    spread = np.abs(path).max()
    if spread > 0.0:
        path *= radius / spread
    c = (n - 1) / 2.0
    hist, _, _ = np.histogram2d(
        path[:, 0] + c,
        path[:, 1] + c,
        bins=n,
        range=[[-0.5, n - 0.5], [-0.5, n - 0.5]],
    )
    return hist


def gen_blur(
    n=256,
    psf_kind="gauss",
    blur_level="medium",
    boundary="reflective",
    commit_crime=False,
    true_image="shepplike",
    seed=0,
):
    """Deblurring test problem: recover an image from its blurred version.

    Parameters
    ----------
    n : int
        Image side length; the solution and data are n^2-vectors.
    psf_kind, blur_level, seed
        Passed to :func:`gen_psf`.
    boundary : {'zero', 'periodic', 'reflective'}
        How the operator models the scene beyond the frame.
    commit_crime : bool
        When True the data is exactly ``A x`` (useful for solver
        verification); when False (default) the data is the blur of an
        edge-replicated padded scene, so the model error of a finite
        frame is present.
    true_image : str or ndarray
        Phantom name or an explicit n-by-n array.

    Returns
    -------
    TestProblem
    """
    if isinstance(true_image, str):
        X = gen_phantom(true_image, n, seed)
        image_name = true_image
    else:
        X = np.array(true_image, dtype=np.float64, copy=True)
        if X.shape != (n, n):
            raise ValueError(f"true image must be {n}x{n}, got {X.shape}")
        image_name = "custom"

    psf = gen_psf(psf_kind, n, blur_level, seed)
    A = ConvolutionOperator(psf, n, boundary=boundary)
    x = X.ravel(order="F")
    if commit_crime:
        b = A.apply(x)
    else:
        top, bottom, left, right = A.pad_widths
        scene = np.pad(X, ((top, bottom), (left, right)), mode="edge")
        b = A.blur_scene(scene)

    info = ProblemInfo(
        kind="blur",
        xgrid=(n, n),
        bgrid=(n, n),
        psf=psf,
        params={
            "psf_kind": psf_kind,
            "blur_level": blur_level,
            "boundary": boundary,
            "commit_crime": bool(commit_crime),
            "true_image": image_name,
        },
    )
    return TestProblem(A=A, b=b, x=x, info=info)
