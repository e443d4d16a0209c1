"""Complex-vector arithmetic, block transforms, and seedable random generation.

Conventions used throughout the package:

* A "complex vector" is a 1-D ``numpy.ndarray`` of ``complex128``; blocks are
  2-D arrays of shape ``(n_blocks, n)`` transformed along the last axis.
* The forward DFT carries no scale factor; the inverse carries ``1/N``, so
  ``idft(dft(v)) == v``.  This keeps the per-subcarrier channel coefficients
  used by the equalizers exact.
* Random numbers come from numpy's PCG64 generator, always created through
  :func:`make_rng` with an explicit integer seed.  Every Monte-Carlo worker
  owns its own generator (seed = base_seed + trial_index); generators are
  never shared across workers.
"""

from __future__ import annotations

import numpy as np

__all__ = [
    "dft",
    "idft",
    "make_rng",
    "gaussian_complex",
    "to_db",
    "from_db",
]


def _as_complex_array(v) -> np.ndarray:
    a = np.asarray(v, dtype=np.complex128)
    if a.shape[-1] == 0:
        raise ValueError("transform input must have at least one sample")
    return a


def dft(v) -> np.ndarray:
    """Forward DFT along the last axis, no scale factor."""
    return np.fft.fft(_as_complex_array(v), axis=-1)


def idft(v) -> np.ndarray:
    """Inverse DFT along the last axis, carrying the 1/N factor."""
    return np.fft.ifft(_as_complex_array(v), axis=-1)


def make_rng(seed: int) -> np.random.Generator:
    """Create a PCG64-backed generator with an explicit seed."""
    return np.random.Generator(np.random.PCG64(int(seed)))


def gaussian_complex(rng: np.random.Generator, variance: float, size=None):
    """Draw circularly symmetric complex Gaussian samples of the given power.

    Real and imaginary parts are independent N(0, variance/2); the mean
    squared magnitude is ``variance``.  ``variance == 0`` yields exact zeros
    while still consuming the same number of generator draws, so paired
    configurations (e.g. direct link on/off) stay stream-aligned.
    """
    if variance < 0:
        raise ValueError(f"variance must be >= 0, got {variance}")
    n = 1 if size is None else int(size)
    z = rng.standard_normal((n, 2))
    out = (z[:, 0] + 1j * z[:, 1]) * np.sqrt(variance / 2.0)
    if size is None:
        return complex(out[0])
    return out


def to_db(x) -> np.ndarray | float:
    """Linear power ratio to dB."""
    return 10.0 * np.log10(x)


def from_db(x_db) -> np.ndarray | float:
    """dB to linear power ratio."""
    return 10.0 ** (np.asarray(x_db, dtype=float) / 10.0) if np.ndim(x_db) else 10.0 ** (float(x_db) / 10.0)
