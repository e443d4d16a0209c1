"""Sample-level simulation of the full-duplex AF relay loop.

The loop per sample n is

    r_n = h_sr * x_n + h_rr * t_n + nR_n      (relay receive)
    y_n = h_rd * t_n + h_sd * x_n + nD_n      (destination, direct-link term optional)
    t_{n+1} = beta * r_n                      (one-sample processing delay)

with all state zero at the start of a frame.  The loop is linear, so it is
evaluated as the superposition of three first-order recursions (signal path,
relay-noise path, destination noise); each recursion is run by
``scipy.signal.lfilter``, which computes the identical difference equation.
:func:`ideal_iir_filter` is a deliberately independent plain-Python recursion
kept as the cross-check oracle for the noiseless loop.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.signal import lfilter

from .channel import ChannelRealization, is_stable
from .exceptions import StabilityError
from .numerics import gaussian_complex

__all__ = [
    "LinkOutput",
    "simulate_fd_link",
    "ideal_iir_filter",
    "hd_relay_gain",
    "simulate_hd_fdd",
    "dump_stream",
]


@dataclass(frozen=True)
class LinkOutput:
    """Destination stream plus recorded noise contributions.

    ``n_ry`` is the destination-side noise that originated at the relay
    (useful for diagnostics and budget checks).  ``delay_offset`` is the
    number of leading samples the receiver must skip: 1 without a direct
    link (the relay path's pure one-sample delay), 0 with one.  ``n_relay``
    and ``n_dest`` hold the raw noise draws when noise is on, else None.
    """

    y: np.ndarray
    n_ry: np.ndarray
    delay_offset: int
    n_relay: np.ndarray | None = None
    n_dest: np.ndarray | None = None


def _check_finite(x: np.ndarray, what: str):
    bad = ~np.isfinite(x)
    if np.any(bad):
        idx = int(np.flatnonzero(bad)[0])
        raise ArithmeticError(f"non-finite {what} at sample index {idx}")


def simulate_fd_link(x, ch: ChannelRealization, beta: float, rng=None, *,
                     with_direct: bool = False,
                     noiseless: bool = False) -> LinkOutput:
    """Run the relay loop over a transmit stream.

    Raises :class:`StabilityError` before touching any samples if the loop
    pole is outside the guard-banded stability region, and requires ``rng``
    unless ``noiseless``.
    """
    x = np.asarray(x, dtype=np.complex128)
    if not is_stable(beta, ch.h_rr):
        raise StabilityError(
            f"|beta*h_rr| = {abs(beta * ch.h_rr):.6f} is not stable"
        )
    _check_finite(x, "input sample")

    den = np.array([1.0, -beta * ch.h_rr], dtype=np.complex128)
    # Signal path: beta*h_sr*h_rd with one sample delay, plus optional direct.
    y = lfilter([0.0, beta * ch.h_sr * ch.h_rd], den, x)
    if with_direct:
        y += ch.h_sd * x

    if noiseless:
        n_ry = np.zeros_like(y)
        return LinkOutput(y, n_ry, 0 if with_direct else 1)

    if rng is None:
        raise ValueError("rng is required unless noiseless=True")
    n_relay = gaussian_complex(rng, ch.sigma2_r, size=x.size)
    n_dest = gaussian_complex(rng, ch.sigma2_d, size=x.size)
    n_ry = lfilter([0.0, beta * ch.h_rd], den, n_relay)
    y = y + n_ry + n_dest
    _check_finite(y, "output sample")
    return LinkOutput(y, n_ry, 0 if with_direct else 1, n_relay, n_dest)


def ideal_iir_filter(x, a0: complex, a1: complex) -> np.ndarray:
    """Exact recursion y_n = (x_n - a1*y_{n-1}) / a0 with y_{-1} = 0.

    Plain-Python on purpose: this is the independent oracle for the sample
    simulator (they must agree to 1e-12 after the one-sample alignment).
    """
    if a0 == 0:
        raise ValueError("a0 must be nonzero")
    if abs(a1 / a0) >= 1.0:
        raise StabilityError(f"|a1/a0| = {abs(a1 / a0):.6f} >= 1")
    x = np.asarray(x, dtype=np.complex128)
    y = np.empty_like(x)
    prev = 0.0 + 0.0j
    for n in range(x.size):
        prev = (x[n] - a1 * prev) / a0
        if abs(prev) > 1e12:
            raise StabilityError(f"recursion diverged at sample {n}")
        y[n] = prev
    return y


def hd_relay_gain(ch: ChannelRealization) -> float:
    """Amplitude gain normalizing the half-duplex relay's transmit power to 1."""
    return 1.0 / np.sqrt(abs(ch.h_sr) ** 2 + ch.sigma2_r)


def simulate_hd_fdd(x, ch: ChannelRealization, rng=None, *,
                    noiseless: bool = False) -> LinkOutput:
    """Half-duplex FDD relay: two cascaded flat hops, no self-interference.

    The relay scales its received signal by :func:`hd_relay_gain`; the
    destination sees ``b*h_sr*h_rd*x + b*h_rd*nR + nD`` with no delay.
    """
    x = np.asarray(x, dtype=np.complex128)
    b = hd_relay_gain(ch)
    y = b * ch.h_sr * ch.h_rd * x
    if noiseless:
        return LinkOutput(y, np.zeros_like(y), 0)
    if rng is None:
        raise ValueError("rng is required unless noiseless=True")
    n_relay = gaussian_complex(rng, ch.sigma2_r, size=x.size)
    n_dest = gaussian_complex(rng, ch.sigma2_d, size=x.size)
    n_ry = b * ch.h_rd * n_relay
    return LinkOutput(y + n_ry + n_dest, n_ry, 0, n_relay, n_dest)


def dump_stream(path, v):
    """Debug dump: interleaved little-endian float64 re/im pairs."""
    v = np.asarray(v, dtype=np.complex128).ravel()
    flat = np.empty(2 * v.size, dtype="<f8")
    flat[0::2] = v.real
    flat[1::2] = v.imag
    flat.tofile(path)
