"""Export 2D arrays (phantoms, PSFs, reconstructions) as binary PGM.

Format P5 with maxval 255: an ASCII header followed by row-major bytes,
with values linearly rescaled so the array minimum maps to 0 and the
maximum to 255.  Constant arrays map to mid-gray.
"""

from __future__ import annotations

import numpy as np

__all__ = ["write_pgm"]


def write_pgm(path, image):
    """Write ``image`` to ``path`` as a binary (P5) PGM file."""
    a = np.asarray(image, dtype=np.float64)
    if a.ndim != 2:
        raise ValueError(f"PGM export needs a 2D array, got shape {a.shape}")
    lo = a.min()
    hi = a.max()
    if hi > lo:
        pixels = np.round((a - lo) / (hi - lo) * 255.0).astype(np.uint8)
    else:
        pixels = np.full(a.shape, 128, dtype=np.uint8)
    rows, cols = a.shape
    header = f"P5\n{cols} {rows}\n255\n".encode("ascii")
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(pixels.tobytes())
