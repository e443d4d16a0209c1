"""Shared draw helpers and independent oracles used across test modules."""

import numpy as np

from iirofdm.channel import ChannelConfig, ChannelRealization, draw_channels
from iirofdm.numerics import make_rng


def noise_power_db(snr_db: float) -> float:
    return 10.0 ** (-snr_db / 10.0)


def random_stable_pair(rng, alpha_range=(0.05, 0.9), snr_db=10.0, var_sd=0.0):
    """One channel draw plus a relay gain with pole magnitude inside the range."""
    p = noise_power_db(snr_db)
    cfg = ChannelConfig(var_sd=var_sd, sigma2_r=p, sigma2_d=p)
    ch = draw_channels(rng, cfg)
    alpha = rng.uniform(*alpha_range)
    beta = float(np.sqrt(alpha) / abs(ch.h_rr))
    return ch, beta


def channel_from_params(alpha, eta, p_r1, *, h_rr_mag=0.2, phase_rng=None):
    """Channel whose budget reproduces the given (alpha, eta, p_r1) scalars."""
    rng = phase_rng or make_rng(0)
    ph = np.exp(1j * rng.uniform(0, 2 * np.pi, size=3))
    h_sr = 1.0 * ph[0]
    h_rd = 1.0 * ph[1]
    h_rr = h_rr_mag * ph[2]
    sigma2_r = p_r1 * abs(h_sr) ** 2
    sigma2_d = eta * abs(h_sr) ** 2 * abs(h_rd) ** 2 / abs(h_rr) ** 2
    ch = ChannelRealization(h_sr, h_rd, h_rr, 0.0 + 0.0j, sigma2_r, sigma2_d)
    beta = float(np.sqrt(alpha) / abs(h_rr))
    return ch, beta


def dft_by_summation(v):
    """O(N^2) transform oracle, independent of the FFT path."""
    v = np.asarray(v, dtype=np.complex128)
    n = v.size
    k = np.arange(n)
    w = np.exp(-2j * np.pi * np.outer(k, k) / n)
    return w @ v


def iir_recursion(x, a0, a1):
    """Reference y_n = (x_n - a1*y_{n-1}) / a0 recursion, zero initial state."""
    y = np.empty(len(x), dtype=np.complex128)
    prev = 0j
    for i, xi in enumerate(x):
        prev = (xi - a1 * prev) / a0
        y[i] = prev
    return y


def qfunc(x):
    """Gaussian tail probability."""
    from scipy.special import erfc

    return 0.5 * erfc(x / np.sqrt(2.0))
