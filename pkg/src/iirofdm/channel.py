"""Quasi-static channel draws and the equivalent rational-channel coefficients.

The full-duplex relay loop turns the four flat links (source-relay,
relay-destination, residual self-interference, optional source-destination)
into a first-order rational end-to-end channel.  Without a direct link the
response is the single-pole ``1 / (a0 + a1 z^-1)``; with a direct link it is
the mixed ``(b0 + b1 z^-1) / (1 - beta*h_rr z^-1)``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .exceptions import DegenerateChannelError, SingularSubcarrierError, StabilityError
from .numerics import gaussian_complex

__all__ = [
    "EPS_STAB",
    "ChannelConfig",
    "ChannelRealization",
    "IirCoefficients",
    "draw_channels",
    "is_stable",
    "compute_coeffs",
    "first_order_dft",
    "iir_freq_response",
    "relay_impulse_taps",
]

# Guard band below the strict |beta*h_rr| < 1 stability bound; keeps the
# simulated transients bounded.
EPS_STAB = 1e-6

# Gains with squared magnitude below this are redrawn to avoid division blowup.
_REDRAW_THRESHOLD = 1e-12
_MAX_REDRAWS = 100


@dataclass(frozen=True)
class ChannelConfig:
    """Variances of the four link gains plus the two noise powers."""

    var_sr: float = 1.0
    var_rd: float = 1.0
    var_rr: float = 10.0 ** (-15 / 10)  # residual self-interference power
    var_sd: float = 0.0                 # 0 disables the direct link
    sigma2_r: float = 0.1
    sigma2_d: float = 0.1

    def __post_init__(self):
        for name in ("var_sr", "var_rd", "var_rr", "var_sd"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be >= 0")
        if self.sigma2_r <= 0 or self.sigma2_d <= 0:
            raise ValueError("noise powers must be > 0")


@dataclass(frozen=True)
class ChannelRealization:
    """One quasi-static draw; gains are held fixed for an entire frame."""

    h_sr: complex
    h_rd: complex
    h_rr: complex
    h_sd: complex
    sigma2_r: float
    sigma2_d: float


@dataclass(frozen=True)
class IirCoefficients:
    """Denominator taps (a0, a1) and numerator taps (b0, b1) of the end-to-end channel.

    ``b0 == 0`` marks the pure-IIR (no direct link) case; callers must then
    use the one-step equalizer rather than the two-step one.
    """

    a0: complex
    a1: complex
    b0: complex
    b1: complex


def _nonzero_gain(rng, variance: float, name: str) -> complex:
    for _ in range(_MAX_REDRAWS):
        h = gaussian_complex(rng, variance)
        if abs(h) >= _REDRAW_THRESHOLD:
            return h
    raise DegenerateChannelError(
        f"{name} stayed below {_REDRAW_THRESHOLD} after {_MAX_REDRAWS} redraws "
        f"(variance={variance})"
    )


def draw_channels(rng, cfg: ChannelConfig) -> ChannelRealization:
    """Draw one realization; h_sr and h_rd are redrawn if numerically zero."""
    h_sr = _nonzero_gain(rng, cfg.var_sr, "h_sr")
    h_rd = _nonzero_gain(rng, cfg.var_rd, "h_rd")
    h_rr = gaussian_complex(rng, cfg.var_rr)
    h_sd = gaussian_complex(rng, cfg.var_sd)
    return ChannelRealization(h_sr, h_rd, h_rr, h_sd, cfg.sigma2_r, cfg.sigma2_d)


def is_stable(beta: float, h_rr: complex) -> bool:
    """True iff the loop pole magnitude |beta*h_rr| is below 1 - EPS_STAB."""
    if beta < 0:
        raise ValueError("beta must be >= 0")
    return abs(beta * h_rr) < 1.0 - EPS_STAB


def _require_stable(beta: float, h_rr: complex):
    if not is_stable(beta, h_rr):
        raise StabilityError(
            f"|beta*h_rr| = {abs(beta * h_rr):.6f} >= {1.0 - EPS_STAB}; "
            "the relay loop would diverge"
        )


def compute_coeffs(ch: ChannelRealization, beta: float) -> IirCoefficients:
    """Rational-channel taps for a realization and relay amplitude gain.

    a0 = 1/(beta*h_sr*h_rd), a1 = -h_rr/(h_sr*h_rd);
    b0 = h_sd, b1 = beta*h_sr*h_rd - beta*h_rr*h_sd.
    """
    if beta <= 0:
        raise ValueError("beta must be > 0")
    _require_stable(beta, ch.h_rr)
    if abs(ch.h_sr) < _REDRAW_THRESHOLD or abs(ch.h_rd) < _REDRAW_THRESHOLD:
        raise DegenerateChannelError("h_sr and h_rd must be nonzero")
    hop = ch.h_sr * ch.h_rd
    return IirCoefficients(
        a0=1.0 / (beta * hop),
        a1=-ch.h_rr / hop,
        b0=ch.h_sd,
        b1=beta * hop - beta * ch.h_rr * ch.h_sd,
    )


def first_order_dft(t0: complex, t1: complex, n: int) -> np.ndarray:
    """N-point DFT of the two-tap sequence [t0, t1, 0, ..., 0]."""
    if n < 1:
        raise ValueError("n must be >= 1")
    return t0 + t1 * np.exp(-2j * np.pi * np.arange(n) / n)


def iir_freq_response(coeffs: IirCoefficients, k, n: int):
    """Response of the single-pole channel at subcarrier(s) k: 1 / (a0 + a1 W^k).

    The denominator equals the k-th entry of the N-point DFT of
    [a0, a1, 0, ..., 0].
    """
    k_arr = np.atleast_1d(np.asarray(k, dtype=int))
    if np.any(k_arr < 0) or np.any(k_arr >= n):
        raise ValueError(f"subcarrier index out of range [0, {n})")
    denom = coeffs.a0 + coeffs.a1 * np.exp(-2j * np.pi * k_arr / n)
    small = np.abs(denom) < 1e-12
    if np.any(small):
        bad = int(k_arr[small][0])
        raise SingularSubcarrierError(bad, float(np.abs(denom[small][0])))
    out = 1.0 / denom
    return complex(out[0]) if np.isscalar(k) or np.asarray(k).ndim == 0 else out


def relay_impulse_taps(ch: ChannelRealization, beta: float, count: int) -> np.ndarray:
    """First `count` taps of the relay-to-destination impulse response.

    Tap j (1-based) is ``beta*h_rd*(beta*h_rr)**(j-1)``; the source-path
    effective taps are these multiplied by h_sr.
    """
    if count < 1:
        raise ValueError("count must be >= 1")
    _require_stable(beta, ch.h_rr)
    ratio = beta * ch.h_rr
    return beta * ch.h_rd * ratio ** np.arange(count)
