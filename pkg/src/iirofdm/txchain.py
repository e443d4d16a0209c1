"""Bit mapping and the three transmitter variants.

Transmitters emit contiguous complex sample streams of M blocks, each block
N+1 samples: one guard sample followed by N data samples.  All three
variants normalize the emitted stream to unit mean power analytically (no
per-frame empirical rescaling):

* :func:`precode_frame` - designed guard samples that make the *received*
  stream cyclic-prefix structured after the single-pole relay channel.
* :func:`prefilter_frame` - standard CP-1 OFDM passed through the two-tap
  FIR [a0, a1] that pre-inverts the relay channel.
* :func:`standard_cp_frame` - plain CP-1 OFDM.

Frequency-domain blocks are scaled by sqrt(N * p) where p is the target
time-domain sample power, matching the unscaled-forward / 1/N-inverse
transform convention of :mod:`iirofdm.numerics`.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .exceptions import SingularSubcarrierError
from .numerics import idft

__all__ = [
    "Constellation",
    "QPSK",
    "QAM16",
    "map_bits",
    "data_symbol_power",
    "PrecodedFrame",
    "precode_frame",
    "prefilter_symbol_power",
    "prefilter_frame",
    "standard_cp_frame",
]


@dataclass(frozen=True)
class Constellation:
    """Gray-coded constellation with exactly unit average power.

    ``points[label]`` is the symbol whose bit pattern is the binary
    expansion of ``label``, most significant bit first.
    """

    name: str
    points: np.ndarray
    bits_per_symbol: int

    @property
    def bit_table(self) -> np.ndarray:
        """(n_points, bits_per_symbol) array mapping point index to bits."""
        labels = np.arange(len(self.points))
        shifts = np.arange(self.bits_per_symbol - 1, -1, -1)
        return ((labels[:, None] >> shifts[None, :]) & 1).astype(np.uint8)


def _qpsk() -> Constellation:
    # bits (b0, b1): I = 1 - 2*b0, Q = 1 - 2*b1, scaled to unit power.
    #   00 -> (+1+j)/sqrt(2)   01 -> (+1-j)/sqrt(2)
    #   10 -> (-1+j)/sqrt(2)   11 -> (-1-j)/sqrt(2)
    b = np.arange(4)
    i = 1 - 2 * ((b >> 1) & 1)
    q = 1 - 2 * (b & 1)
    return Constellation("qpsk", (i + 1j * q) / np.sqrt(2.0), 2)


_GRAY_AXIS_16 = np.array([-3.0, -1.0, 3.0, 1.0])  # axis level for bit pair 00,01,10,11


def _qam16() -> Constellation:
    # bits (b0, b1, b2, b3): I from (b0, b1), Q from (b2, b3); per-axis Gray
    # levels 00->-3, 01->-1, 11->+1, 10->+3, scaled by 1/sqrt(10).
    b = np.arange(16)
    i = _GRAY_AXIS_16[(b >> 2) & 3]
    q = _GRAY_AXIS_16[b & 3]
    return Constellation("qam16", (i + 1j * q) / np.sqrt(10.0), 4)


QPSK = _qpsk()
QAM16 = _qam16()


def map_bits(bits, constellation: Constellation, n: int) -> np.ndarray:
    """Map a bit sequence to (n_blocks, n) unit-power symbol blocks."""
    bits = np.asarray(bits, dtype=np.uint8).ravel()
    k = constellation.bits_per_symbol
    if bits.size == 0 or bits.size % (n * k) != 0:
        raise ValueError(
            f"bit count {bits.size} is not a positive multiple of n*k = {n * k}"
        )
    shifts = np.arange(k - 1, -1, -1)
    labels = (bits.reshape(-1, k) << shifts).sum(axis=1)
    return constellation.points[labels].reshape(-1, n)


def data_symbol_power(alpha: float, n: int) -> float:
    """Power budget left for the N data samples once the guard sample is paid for.

    With pole-magnitude-squared ``alpha``, the designed guard sample carries
    (1+alpha)/(1-alpha) times the data-sample power, so unit mean transmit
    power requires data-sample power (N+1) / ((1+alpha)/(1-alpha) + N).
    """
    if not 0.0 <= alpha < 1.0:
        raise ValueError(f"alpha must be in [0, 1), got {alpha}")
    return (n + 1) / ((1.0 + alpha) / (1.0 - alpha) + n)


@dataclass(frozen=True)
class PrecodedFrame:
    """Transmit stream plus the designed per-block quantities.

    ``response_blocks[i]`` is the noiseless block the destination will see
    (the per-block circular response of the scaled symbols through the
    single-pole channel); the guard values are built from its last column.
    ``data_scale`` is the factor applied to the unit-power frequency symbols;
    the receiver divides equalized symbols by it before slicing.
    """

    stream: np.ndarray
    gi_values: np.ndarray
    response_blocks: np.ndarray
    data_scale: float


def precode_frame(blocks: np.ndarray, a0: complex, a1: complex,
                  alpha: float) -> PrecodedFrame:
    """Build the guard-designed transmit stream for the single-pole channel.

    Per block i of the scaled symbols X: the designed response is
    y_i = idft(X_i / A) with A the N-point DFT of [a0, a1, 0, ...]; the data
    samples are x_i = idft(X_i); the guard sample preceding block i is
    a0*y_i[N-1] + a1*y_{i-1}[N-1] (the second term is dropped for the first
    block, which starts from an all-zero virtual block).  Through the channel
    this makes the received guard equal the last sample of its own block, so
    one-tap-per-subcarrier equalization is exact.
    """
    if a0 == 0:
        raise ValueError("a0 must be nonzero")
    blocks = np.asarray(blocks, dtype=np.complex128)
    if blocks.ndim != 2:
        raise ValueError("blocks must be a 2-D (n_blocks, n) array")
    m, n = blocks.shape
    scale = float(np.sqrt(n * data_symbol_power(alpha, n)))
    freq = scale * blocks

    a = a0 + a1 * np.exp(-2j * np.pi * np.arange(n) / n)
    small = np.abs(a) < 1e-12
    if np.any(small):
        k = int(np.flatnonzero(small)[0])
        raise SingularSubcarrierError(k, float(np.abs(a[k])), "channel denominator")

    response = idft(freq / a)
    data = idft(freq)

    gi = a0 * response[:, -1]
    gi[1:] += a1 * response[:-1, -1]

    stream = np.empty((m, n + 1), dtype=np.complex128)
    stream[:, 0] = gi
    stream[:, 1:] = data
    return PrecodedFrame(stream.ravel(), gi, response, scale)


def prefilter_symbol_power(a0: complex, a1: complex) -> float:
    """Data-sample power that makes the two-tap-filtered stream unit power."""
    return 1.0 / (abs(a0) ** 2 + abs(a1) ** 2)


def prefilter_frame(blocks: np.ndarray, a0: complex, a1: complex) -> np.ndarray:
    """CP-1 OFDM stream filtered by the channel-inverting FIR [a0, a1].

    The underlying CP-1 stream carries sample power
    1 / (|a0|^2 + |a1|^2) so the filtered output has unit mean power; the
    filter state starts at zero.
    """
    if a0 == 0:
        raise ValueError("a0 must be nonzero")
    base = standard_cp_frame(blocks) * np.sqrt(prefilter_symbol_power(a0, a1))
    out = a0 * base
    out[1:] += a1 * base[:-1]
    return out


def standard_cp_frame(blocks: np.ndarray) -> np.ndarray:
    """Plain CP-1 OFDM: each block is [x[N-1], x[0], ..., x[N-1]], unit power."""
    blocks = np.asarray(blocks, dtype=np.complex128)
    if blocks.ndim != 2:
        raise ValueError("blocks must be a 2-D (n_blocks, n) array")
    m, n = blocks.shape
    data = idft(np.sqrt(n) * blocks)
    stream = np.empty((m, n + 1), dtype=np.complex128)
    stream[:, 0] = data[:, -1]
    stream[:, 1:] = data
    return stream.ravel()
