"""Block extraction, frequency-domain equalization, and bit-error counting.

All equalizers are zero-forcing: they multiply or divide per subcarrier by
the known channel responses (perfect CSI throughout).  Near-zero divisors
are surfaced as :class:`SingularSubcarrierError` rather than regularized.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .channel import ChannelRealization, IirCoefficients, first_order_dft, relay_impulse_taps
from .exceptions import FramingError, SingularSubcarrierError
from .numerics import dft, idft
from .txchain import Constellation

__all__ = [
    "EqualizedBlock",
    "BerRecord",
    "extract_blocks",
    "equalize_iir",
    "equalize_mixed",
    "equalize_two_tap",
    "equalize_truncated",
    "demap_symbols",
    "demap_and_count",
]

_EPS_DIVIDE = 1e-9


@dataclass(frozen=True)
class EqualizedBlock:
    """Equalized symbols in both domains; ``time == idft(freq)``."""

    freq: np.ndarray
    time: np.ndarray


@dataclass(frozen=True)
class BerRecord:
    """One measured point of a BER sweep."""

    scheme: str
    sweep_value: float
    bits: int
    errors: int

    @property
    def ber(self) -> float:
        return self.errors / self.bits


def extract_blocks(y, n: int, offset: int) -> np.ndarray:
    """Split a received stream into (m, n) blocks, dropping the guard samples.

    After skipping ``offset`` leading samples, every group of n+1 samples is
    one block whose first sample (the guard position) is discarded.  A
    trailing remainder shorter than one block is ignored.
    """
    y = np.asarray(y, dtype=np.complex128)
    if offset < 0 or offset > y.size:
        raise FramingError(f"offset {offset} outside stream of {y.size} samples")
    m = (y.size - offset) // (n + 1)
    if m < 1:
        raise FramingError(
            f"stream of {y.size} samples holds no complete block of {n + 1} "
            f"after offset {offset}"
        )
    return y[offset:offset + m * (n + 1)].reshape(m, n + 1)[:, 1:]


def _as_blocks(yblocks) -> np.ndarray:
    b = np.asarray(yblocks, dtype=np.complex128)
    return b[None, :] if b.ndim == 1 else b


def _checked_divide(num: np.ndarray, denom: np.ndarray, what: str) -> np.ndarray:
    small = np.abs(denom) < _EPS_DIVIDE
    if np.any(small):
        k = int(np.flatnonzero(small)[0])
        raise SingularSubcarrierError(k, float(np.abs(denom[k])), what)
    return num / denom


def equalize_iir(yblocks, coeffs: IirCoefficients, n: int | None = None) -> EqualizedBlock:
    """One-step equalization for the pure single-pole channel.

    Multiplies each received subcarrier by the channel denominator response
    A_k; in time this is the circular two-tap combination
    ``a0*y[n] + a1*y[n-1 mod N]``, which undoes the channel exactly on
    CP-structured blocks.
    """
    blocks = _as_blocks(yblocks)
    n = blocks.shape[-1] if n is None else n
    a = first_order_dft(coeffs.a0, coeffs.a1, n)
    freq = a * dft(blocks)
    out_shape = np.asarray(yblocks).shape
    return EqualizedBlock(freq.reshape(out_shape), idft(freq).reshape(out_shape))


def equalize_mixed(yblocks, coeffs: IirCoefficients, n: int | None = None) -> EqualizedBlock:
    """Two-step equalization for the mixed channel: divide by B_k, multiply by A_k.

    B_k is the N-point DFT of [b0, b1, 0, ...].  Note that the cascade of
    these literal tap responses leaves the known flat factor a0 on the
    output; chain-level receivers divide it out (perfect CSI).
    """
    blocks = _as_blocks(yblocks)
    n = blocks.shape[-1] if n is None else n
    a = first_order_dft(coeffs.a0, coeffs.a1, n)
    b = first_order_dft(coeffs.b0, coeffs.b1, n)
    freq = a * _checked_divide(dft(blocks), b, "numerator response")
    out_shape = np.asarray(yblocks).shape
    return EqualizedBlock(freq.reshape(out_shape), idft(freq).reshape(out_shape))


def equalize_two_tap(yblocks, t0: complex, t1: complex,
                     n: int | None = None) -> EqualizedBlock:
    """Divide each subcarrier by the response of the known taps [t0, t1]."""
    blocks = _as_blocks(yblocks)
    n = blocks.shape[-1] if n is None else n
    h = first_order_dft(t0, t1, n)
    freq = _checked_divide(dft(blocks), h, "two-tap response")
    out_shape = np.asarray(yblocks).shape
    return EqualizedBlock(freq.reshape(out_shape), idft(freq).reshape(out_shape))


def equalize_truncated(yblocks, ch: ChannelRealization, beta: float,
                       n: int | None = None, *,
                       with_direct: bool = False) -> EqualizedBlock:
    """CP-1 baseline equalizer: invert only the first two effective taps.

    A CP of length 1 supports channel order 1, so the baseline divides by
    the response of the first two taps of the true channel and leaves
    everything beyond them as residual interference.
    """
    taps = relay_impulse_taps(ch, beta, 2)
    if with_direct:
        t0, t1 = ch.h_sd, ch.h_sr * taps[0]
    else:
        t0, t1 = ch.h_sr * taps[0], ch.h_sr * taps[1]
    return equalize_two_tap(yblocks, t0, t1, n)


def demap_symbols(symbols, constellation: Constellation) -> np.ndarray:
    """Minimum-distance slicing followed by the constellation's bit labels."""
    symbols = np.asarray(symbols, dtype=np.complex128).ravel()
    # chunked so the distance matrix stays small
    idx = np.empty(symbols.size, dtype=np.intp)
    step = 1 << 16
    pts = constellation.points
    for lo in range(0, symbols.size, step):
        chunk = symbols[lo:lo + step]
        d2 = np.abs(chunk[:, None] - pts[None, :]) ** 2
        idx[lo:lo + chunk.size] = d2.argmin(axis=1)
    return constellation.bit_table[idx].ravel()


def demap_and_count(eq_freq, ref_bits, constellation: Constellation,
                    symbol_scale: float = 1.0, *, scheme: str = "",
                    sweep_value: float = 0.0) -> BerRecord:
    """Rescale equalized frequency symbols, slice, and count bit errors."""
    ref_bits = np.asarray(ref_bits, dtype=np.uint8).ravel()
    symbols = np.asarray(eq_freq, dtype=np.complex128).ravel() / symbol_scale
    got = demap_symbols(symbols, constellation)
    if got.size != ref_bits.size:
        raise ValueError(
            f"decoded {got.size} bits but reference has {ref_bits.size}"
        )
    errors = int(np.count_nonzero(got != ref_bits))
    return BerRecord(scheme, sweep_value, int(ref_bits.size), errors)
