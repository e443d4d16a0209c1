"""Closed-form noise powers, post-equalization SNR, and relay gain control.

Everything here is scalar math over one channel realization and one relay
amplitude gain.  ``alpha`` always denotes the squared loop-pole magnitude
``(beta*|h_rr|)**2``; geometric tail sums use their closed forms, never
truncated series.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .channel import ChannelRealization, EPS_STAB
from .exceptions import StabilityError
from .txchain import data_symbol_power

__all__ = [
    "LinkBudget",
    "GainSolution",
    "budget",
    "snr_closed_form",
    "prefilter_snr",
    "delta_sign_poly",
    "snr_gap",
    "optimize_gain",
    "optimize_prefilter_gain",
    "DEFAULT_BETA2_CAP",
]

# Relay power-gain cap used when h_rr == 0 and the SNR has no interior
# maximum in the gain.
DEFAULT_BETA2_CAP = 100.0

_ALPHA_DOMAIN_EPS = 1e-4
_INV_PHI = (math.sqrt(5.0) - 1.0) / 2.0


@dataclass(frozen=True)
class LinkBudget:
    """All scalar powers and SNRs for one (channel, beta) pair.

    Powers are per-sample means after equalization: ``p_d`` destination
    noise, ``p_r1`` relay noise on the N-1 plain positions, ``p_r2`` relay
    noise on the block-start position, ``p_r`` their block average, ``p_n``
    the pre-equalization relay-noise power at the destination, ``p_y`` the
    received block-tail signal power, ``p_gi`` the guard-sample transmit
    power, ``sigma_x2`` the data-sample transmit power.  ``gamma`` is the
    post-equalization SNR of the guard-designed scheme, ``gamma_pre`` the
    SNR of the pre-filtering baseline, ``delta`` their difference.
    """

    alpha: float
    beta: float
    p_d: float
    p_r1: float
    p_n: float
    p_r2: float
    p_r: float
    p_y: float
    p_gi: float
    sigma_x2: float
    eta: float
    gamma: float
    gamma_pre: float
    delta: float


@dataclass(frozen=True)
class GainSolution:
    """Result of the relay power-gain optimization.

    ``alpha_star`` is None in the degenerate h_rr == 0 case, where the SNR
    is monotone in the gain and ``beta_star`` comes from the configured
    transmit-power cap instead.
    """

    alpha_star: float | None
    beta_star: float
    gamma_star: float
    iterations: int


def _alpha_of(ch: ChannelRealization, beta: float) -> float:
    alpha = (beta * abs(ch.h_rr)) ** 2
    if alpha >= (1.0 - EPS_STAB) ** 2:
        raise StabilityError(f"alpha = {alpha:.6f} is not in the stable region")
    return alpha


def budget(ch: ChannelRealization, beta: float, n: int) -> LinkBudget:
    """All noise powers and both SNRs for one (channel, beta) pair.

    ``gamma`` is computed from the two-term form sigma_x2 / (p_r + p_d);
    :func:`snr_closed_form` provides the equivalent rational expression in
    (alpha, eta, p_r1, n) as an independent code path.  ``beta == 0`` is the
    degenerate no-relay limit and yields gamma = 0.
    """
    if beta < 0:
        raise ValueError("beta must be >= 0")
    alpha = _alpha_of(ch, beta)
    g2 = abs(ch.h_sr) ** 2 * abs(ch.h_rd) ** 2
    p_r1 = ch.sigma2_r / abs(ch.h_sr) ** 2
    eta = abs(ch.h_rr) ** 2 * ch.sigma2_d / g2

    sigma_x2 = data_symbol_power(alpha, n)
    p_n = beta ** 2 * abs(ch.h_rd) ** 2 * ch.sigma2_r / (1.0 - alpha)
    p_r2 = (1.0 + alpha) * ch.sigma2_r / (abs(ch.h_sr) ** 2 * (1.0 - alpha))
    p_r = ((n - 1) * p_r1 + p_r2) / n
    p_gi = sigma_x2 * (1.0 + alpha) / (1.0 - alpha)
    if beta == 0:
        p_d = math.inf
        p_y = 0.0
        gamma = 0.0
    else:
        p_d = (1.0 + alpha) * ch.sigma2_d / (beta ** 2 * g2)
        p_y = beta ** 2 * g2 * sigma_x2 / (1.0 - alpha)
        gamma = sigma_x2 / (p_r + p_d)
    g_pre = prefilter_snr(ch, beta)
    return LinkBudget(
        alpha=alpha, beta=beta, p_d=p_d, p_r1=p_r1, p_n=p_n, p_r2=p_r2,
        p_r=p_r, p_y=p_y, p_gi=p_gi, sigma_x2=sigma_x2, eta=eta,
        gamma=gamma, gamma_pre=g_pre, delta=gamma - g_pre,
    )


def snr_closed_form(alpha: float, eta: float, p_r1: float, n: int) -> float:
    """Post-equalization SNR as a rational function of (alpha, eta, p_r1, n).

    Algebraically identical to the two-term form in :func:`budget` for
    0 < alpha < 1; kept as a separate code path for cross-checking and as
    the optimizer's objective.
    """
    num = n * (n + 1) * (alpha - 1.0) ** 2 * alpha
    den = ((alpha - 1.0) * n - alpha - 1.0) * (
        eta * (alpha ** 2 - 1.0) * n + p_r1 * alpha * ((alpha - 1.0) * n - 2.0 * alpha)
    )
    return num / den


def prefilter_snr(ch: ChannelRealization, beta: float) -> float:
    """Receiver SNR of the pre-filtering baseline.

    sigma_s^2 / (p_n + sigma_d^2) with sigma_s^2 the baseline's data-sample
    power; returns +inf in the noiseless limit and 0 at beta = 0.
    """
    if beta < 0:
        raise ValueError("beta must be >= 0")
    alpha = _alpha_of(ch, beta)
    if beta == 0:
        return 0.0
    g2 = abs(ch.h_sr) ** 2 * abs(ch.h_rd) ** 2
    sigma_s2 = beta ** 2 * g2 / (1.0 + beta ** 2 * abs(ch.h_rr) ** 2)
    p_n = beta ** 2 * abs(ch.h_rd) ** 2 * ch.sigma2_r / (1.0 - alpha)
    denom = p_n + ch.sigma2_d
    if denom == 0:
        return math.inf
    return sigma_s2 / denom


def delta_sign_poly(alpha: float, eta: float, p_r1: float, n: int) -> float:
    """Quadratic in alpha that carries the sign of gamma - gamma_pre.

    delta(alpha) = p_r1*alpha*(1-alpha)*n^2
                 + (p_r1*(alpha^2-alpha) + eta*(alpha^2-1))*n
                 - p_r1*(alpha^2-alpha);
    its n^2 coefficient is positive for alpha in (0, 1), which is why the
    guard-designed scheme wins at large block sizes.
    """
    return (
        p_r1 * alpha * (1.0 - alpha) * n ** 2
        + (p_r1 * (alpha ** 2 - alpha) + eta * (alpha ** 2 - 1.0)) * n
        - p_r1 * (alpha ** 2 - alpha)
    )


def snr_gap(ch: ChannelRealization, beta: float, n: int) -> tuple[float, float]:
    """(gamma - gamma_pre, sign polynomial value) for one operating point."""
    b = budget(ch, beta, n)
    return b.delta, delta_sign_poly(b.alpha, b.eta, b.p_r1, n)


def _golden_max(f, lo: float, hi: float, tol: float) -> tuple[float, int]:
    c = hi - _INV_PHI * (hi - lo)
    d = lo + _INV_PHI * (hi - lo)
    fc, fd = f(c), f(d)
    iterations = 0
    while hi - lo > tol:
        iterations += 1
        if fc >= fd:
            hi, d, fd = d, c, fc
            c = hi - _INV_PHI * (hi - lo)
            fc = f(c)
        else:
            lo, c, fc = c, d, fd
            d = lo + _INV_PHI * (hi - lo)
            fd = f(d)
    return 0.5 * (lo + hi), iterations


def _maximize_over_alpha(objective, grid_points: int, tol: float):
    import numpy as np

    grid = np.linspace(_ALPHA_DOMAIN_EPS, 1.0 - _ALPHA_DOMAIN_EPS, grid_points)
    values = np.array([objective(a) for a in grid])
    best = int(values.argmax())
    lo = grid[max(best - 1, 0)]
    hi = grid[min(best + 1, grid_points - 1)]
    alpha, iterations = _golden_max(objective, lo, hi, tol)
    # never return worse than the best grid point
    if objective(alpha) < values[best]:
        alpha = float(grid[best])
    return float(alpha), iterations


def optimize_gain(ch: ChannelRealization, n: int, grid_points: int = 512,
                  tol: float = 1e-6, *,
                  beta2_cap: float = DEFAULT_BETA2_CAP) -> GainSolution:
    """Relay gain maximizing the post-equalization SNR.

    Coarse grid over alpha in (1e-4, 1-1e-4) followed by golden-section
    refinement of the bracketing interval.  With h_rr == 0 the SNR has no
    interior maximum in the gain, so the gain is capped at ``beta2_cap``.
    """
    if abs(ch.h_rr) == 0:
        beta = math.sqrt(beta2_cap)
        return GainSolution(None, beta, budget(ch, beta, n).gamma, 0)
    p_r1 = ch.sigma2_r / abs(ch.h_sr) ** 2
    eta = abs(ch.h_rr) ** 2 * ch.sigma2_d / (abs(ch.h_sr) ** 2 * abs(ch.h_rd) ** 2)
    alpha, iterations = _maximize_over_alpha(
        lambda a: snr_closed_form(a, eta, p_r1, n), grid_points, tol)
    beta = math.sqrt(alpha) / abs(ch.h_rr)
    return GainSolution(alpha, beta, snr_closed_form(alpha, eta, p_r1, n), iterations)


def optimize_prefilter_gain(ch: ChannelRealization, grid_points: int = 512,
                            tol: float = 1e-6, *,
                            beta2_cap: float = DEFAULT_BETA2_CAP) -> GainSolution:
    """Relay gain maximizing the pre-filtering baseline's SNR (same search)."""
    if abs(ch.h_rr) == 0:
        beta = math.sqrt(beta2_cap)
        return GainSolution(None, beta, prefilter_snr(ch, beta), 0)

    def objective(a: float) -> float:
        return prefilter_snr(ch, math.sqrt(a) / abs(ch.h_rr))

    alpha, iterations = _maximize_over_alpha(objective, grid_points, tol)
    beta = math.sqrt(alpha) / abs(ch.h_rr)
    return GainSolution(alpha, beta, objective(alpha), iterations)
