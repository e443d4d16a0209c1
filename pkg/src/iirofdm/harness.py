"""Monte-Carlo experiment drivers, per-scheme link chains, and CSV output.

A *trial* is one quasi-static channel draw carrying one frame of
``blocks_per_frame`` OFDM blocks.  Trials are deterministic given
``seed + trial_index`` and are merged in trial order, so results do not
depend on how they are scheduled across workers.

Schemes:

* ``proposed``  - guard-designed transmitter, one-step (or two-step, with a
  direct link) zero-forcing equalizer, analytically optimized relay gain.
* ``prefilter`` - channel-inverting FIR in front of CP-1 OFDM, relay gain
  maximizing its own SNR formula.
* ``cp_ofdm``   - plain CP-1 OFDM with a two-tap truncated equalizer and an
  empirical pilot-run gain search.
* ``hd_fdd``    - half-duplex FDD relay at 16QAM (spectral-efficiency-fair
  baseline).
"""

from __future__ import annotations

import multiprocessing
from dataclasses import dataclass, fields, replace

import numpy as np

from . import __version__
from .channel import ChannelConfig, ChannelRealization, compute_coeffs, draw_channels
from .fdrelay import simulate_fd_link, simulate_hd_fdd, hd_relay_gain
from .linkbudget import (
    DEFAULT_BETA2_CAP,
    budget,
    optimize_gain,
    optimize_prefilter_gain,
    prefilter_snr,
)
from .numerics import from_db, make_rng, to_db
from .receiver import (
    BerRecord,
    demap_and_count,
    equalize_iir,
    equalize_mixed,
    equalize_truncated,
    equalize_two_tap,
    extract_blocks,
)
from .txchain import (
    QAM16,
    QPSK,
    map_bits,
    precode_frame,
    prefilter_frame,
    prefilter_symbol_power,
    standard_cp_frame,
)

__all__ = [
    "SCHEMES",
    "SimConfig",
    "FrameRun",
    "run_frame",
    "frame_ber",
    "select_beta",
    "measure_link_snr",
    "ber_point",
    "SweepResult",
    "run_fig2",
    "run_fig3",
    "run_fig4",
    "run_fig5",
    "write_csv",
]

SCHEMES = ("proposed", "prefilter", "cp_ofdm", "hd_fdd")

# Keeps pilot-run draws out of the measurement streams.
_PILOT_SEED_OFFSET = 10 ** 12


@dataclass(frozen=True)
class SimConfig:
    """Experiment configuration; every field maps to a config-file key."""

    n: int = 128
    blocks_per_frame: int = 50
    frames: int = 200
    constellation: str = "qpsk"
    snr_c_db: tuple = (10.0, 15.0, 20.0, 25.0, 30.0)
    rsi_db: float = -15.0
    direct_link: bool = False
    direct_pathloss_db: float = 10.0
    schemes: tuple = SCHEMES
    seed: int = 1234
    beta_policy: str = "optimized"  # optimized | fixed:<beta2> | sweep:<beta2,...>
    workers: int = 1
    min_bits: int = 100_000
    early_stop_errors: int | None = 100
    pilot_frames: int = 10
    pilot_blocks: int = 3
    gain_grid_points: int = 32
    fig2_grid_points: int = 19
    fig2_snr_c_db: float = 10.0
    fig5_snr_c_db: float = 25.0
    rsi_sweep_db: tuple = (-30.0, -25.0, -20.0, -15.0, -10.0, -5.0, 0.0)

    def __post_init__(self):
        if self.n < 2 or (self.n & (self.n - 1)) != 0:
            raise ValueError(f"n must be a power of two >= 2, got {self.n}")
        if self.frames < 1:
            raise ValueError("frames must be >= 1")
        for s in self.schemes:
            if s not in SCHEMES:
                raise ValueError(f"unknown scheme {s!r}; choose from {SCHEMES}")
        if not all(np.isfinite(v) for v in self.snr_c_db):
            raise ValueError("snr_c_db values must be finite")

    @classmethod
    def from_file(cls, path) -> "SimConfig":
        """Parse a flat key = value config file ('#' starts a comment)."""
        values = {}
        with open(path, "r", encoding="utf-8") as fh:
            for lineno, raw in enumerate(fh, 1):
                line = raw.split("#", 1)[0].strip()
                if not line:
                    continue
                if "=" not in line:
                    raise ValueError(f"{path}:{lineno}: expected key = value")
                key, text = (part.strip() for part in line.split("=", 1))
                values[key] = text
        return cls.from_strings(values)

    @classmethod
    def from_strings(cls, values: dict) -> "SimConfig":
        kwargs = {}
        by_name = {f.name: f for f in fields(cls)}
        for key, text in values.items():
            if key not in by_name:
                raise ValueError(f"unknown config key {key!r}")
            kwargs[key] = _parse_field(key, text, by_name[key].type)
        return cls(**kwargs)


def _parse_field(key: str, text: str, typename: str):
    if key in ("snr_c_db", "rsi_sweep_db"):
        return tuple(float(v) for v in text.split(","))
    if key == "schemes":
        return tuple(v.strip() for v in text.split(","))
    if key == "early_stop_errors":
        return None if text.lower() in ("none", "off") else int(text)
    if key == "direct_link":
        return text.lower() in ("1", "true", "yes", "on")
    if typename == "int":
        return int(text)
    if typename == "float":
        return float(text)
    return text


def channel_config(cfg: SimConfig, *, snr_c_db: float,
                   rsi_db: float | None = None,
                   direct: bool | None = None) -> ChannelConfig:
    """Channel variances for one sweep point (unit-variance relay hops)."""
    rsi = cfg.rsi_db if rsi_db is None else rsi_db
    use_direct = cfg.direct_link if direct is None else direct
    noise = from_db(-snr_c_db)
    return ChannelConfig(
        var_sr=1.0,
        var_rd=1.0,
        var_rr=from_db(rsi),
        var_sd=from_db(-cfg.direct_pathloss_db) if use_direct else 0.0,
        sigma2_r=noise,
        sigma2_d=noise,
    )


def _constellation(cfg: SimConfig, scheme: str):
    if scheme == "hd_fdd":
        return QAM16
    if cfg.constellation == "qpsk":
        return QPSK
    if cfg.constellation == "qam16":
        return QAM16
    raise ValueError(f"unknown constellation {cfg.constellation!r}")


@dataclass(frozen=True)
class FrameRun:
    """One frame through transmitter, channel, and receiver."""

    bits: np.ndarray
    tx_stream: np.ndarray
    eq_freq: np.ndarray
    eq_time: np.ndarray
    symbol_scale: float


def run_frame(scheme: str, ch: ChannelRealization, beta: float | None,
              cfg: SimConfig, rng=None, *, with_direct: bool = False,
              noiseless: bool = False, payload_bits=None) -> FrameRun:
    """Run one frame of the given scheme over one channel realization.

    ``payload_bits`` overrides the random payload so matched noisy/noiseless
    runs share the transmitted stream (the noiseless path never touches the
    generator).
    """
    const = _constellation(cfg, scheme)
    n, m = cfg.n, cfg.blocks_per_frame
    if payload_bits is None:
        if rng is None:
            raise ValueError("rng is required when payload_bits is not given")
        payload_bits = rng.integers(0, 2, m * n * const.bits_per_symbol,
                                    dtype=np.uint8)
    bits = np.asarray(payload_bits, dtype=np.uint8)
    blocks = map_bits(bits, const, n)

    if scheme == "hd_fdd":
        stream = standard_cp_frame(blocks)
        link = simulate_hd_fdd(stream, ch, rng, noiseless=noiseless)
        yblocks = extract_blocks(link.y, n, link.delay_offset)
        flat = hd_relay_gain(ch) * ch.h_sr * ch.h_rd
        eq = equalize_two_tap(yblocks, flat, 0.0, n)
        return FrameRun(bits, stream, eq.freq, eq.time, float(np.sqrt(n)))

    if beta is None:
        raise ValueError(f"scheme {scheme!r} requires a relay gain")
    coeffs = compute_coeffs(ch, beta)

    if scheme == "proposed":
        alpha = (beta * abs(ch.h_rr)) ** 2
        frame = precode_frame(blocks, coeffs.a0, coeffs.a1, alpha)
        stream, scale = frame.stream, frame.data_scale
    elif scheme == "prefilter":
        stream = prefilter_frame(blocks, coeffs.a0, coeffs.a1)
        scale = float(np.sqrt(n * prefilter_symbol_power(coeffs.a0, coeffs.a1)))
    elif scheme == "cp_ofdm":
        stream = standard_cp_frame(blocks)
        scale = float(np.sqrt(n))
    else:
        raise ValueError(f"unknown scheme {scheme!r}")

    # Without a direct link the relay path is one sample late; pad so the
    # last block's final sample is still produced, then skip the pad.
    x = stream if with_direct else np.concatenate([stream, [0.0 + 0.0j]])
    link = simulate_fd_link(x, ch, beta, rng, with_direct=with_direct,
                            noiseless=noiseless)
    yblocks = extract_blocks(link.y, n, link.delay_offset)

    if scheme == "proposed":
        if with_direct:
            eq = equalize_mixed(yblocks, coeffs, n)
            # the literal two-step cascade leaves the known flat factor a0
            eq_freq = eq.freq / coeffs.a0
            eq_time = eq.time / coeffs.a0
        else:
            eq = equalize_iir(yblocks, coeffs, n)
            eq_freq, eq_time = eq.freq, eq.time
    elif scheme == "prefilter":
        if with_direct:
            # pre-filtered stream through the mixed channel is the two-tap
            # FIR [h_sd*a0, h_sd*a1 + 1]
            eq = equalize_two_tap(yblocks, ch.h_sd * coeffs.a0,
                                  ch.h_sd * coeffs.a1 + 1.0, n)
        else:
            eq = equalize_two_tap(yblocks, 1.0, 0.0, n)
        eq_freq, eq_time = eq.freq, eq.time
    else:  # cp_ofdm
        eq = equalize_truncated(yblocks, ch, beta, n, with_direct=with_direct)
        eq_freq, eq_time = eq.freq, eq.time

    return FrameRun(bits, stream, eq_freq, eq_time, scale)


def frame_ber(scheme: str, fr: FrameRun, cfg: SimConfig, *,
              sweep_value: float = 0.0) -> BerRecord:
    const = _constellation(cfg, scheme)
    return demap_and_count(fr.eq_freq, fr.bits, const, fr.symbol_scale,
                           scheme=scheme, sweep_value=sweep_value)


def _stable_alpha_grid(points: int) -> np.ndarray:
    return np.linspace(0.05, 0.95, points)


def select_beta(scheme: str, ch: ChannelRealization, cfg: SimConfig,
                trial_seed: int, *, with_direct: bool = False) -> float | None:
    """Per-scheme relay gain for one channel draw.

    ``proposed`` and ``prefilter`` maximize their analytic SNRs; ``cp_ofdm``
    grid-searches the gain on a short pilot run and keeps the gain with the
    lowest measured pilot BER (ties broken by measured symbol error power);
    ``hd_fdd`` normalizes relay transmit power internally.
    """
    policy = cfg.beta_policy
    if policy.startswith("fixed:"):
        return float(np.sqrt(float(policy.split(":", 1)[1])))
    if scheme == "hd_fdd":
        return None
    if scheme == "proposed":
        return optimize_gain(ch, cfg.n).beta_star
    if scheme == "prefilter":
        return optimize_prefilter_gain(ch).beta_star

    # cp_ofdm: empirical pilot search
    if abs(ch.h_rr) == 0:
        return float(np.sqrt(DEFAULT_BETA2_CAP))
    betas = np.sqrt(_stable_alpha_grid(cfg.gain_grid_points)) / abs(ch.h_rr)
    pilot_cfg = replace(cfg, blocks_per_frame=cfg.pilot_blocks)
    best = (None, None, None)
    for i, beta in enumerate(betas):
        errors = 0
        bits = 0
        err_power = 0.0
        for p in range(cfg.pilot_frames):
            rng = make_rng(_PILOT_SEED_OFFSET + trial_seed * 1009 + p)
            fr = run_frame("cp_ofdm", ch, float(beta), pilot_cfg, rng,
                           with_direct=with_direct)
            rec = frame_ber("cp_ofdm", fr, pilot_cfg)
            errors += rec.errors
            bits += rec.bits
            ref = map_bits(fr.bits, _constellation(cfg, "cp_ofdm"), cfg.n)
            err_power += float(np.sum(np.abs(
                fr.eq_freq / fr.symbol_scale - ref) ** 2))
        key = (errors / bits, err_power)
        if best[0] is None or key < best[0]:
            best = (key, float(beta), i)
    return best[1]


def measure_link_snr(scheme: str, ch: ChannelRealization, beta: float,
                     cfg: SimConfig, seed: int, n_frames: int, *,
                     with_direct: bool = False) -> float:
    """Post-equalization SNR measured by matched noiseless subtraction.

    Each frame is simulated twice with the same payload: once noiseless
    (the useful signal) and once with noise; the per-sample difference is
    the equalized noise.  Returns signal power / noise power.
    """
    const = _constellation(cfg, scheme)
    n_bits = cfg.blocks_per_frame * cfg.n * const.bits_per_symbol
    sig_power = 0.0
    noise_power = 0.0
    for t in range(n_frames):
        rng = make_rng(seed + t)
        bits = rng.integers(0, 2, n_bits, dtype=np.uint8)
        clean = run_frame(scheme, ch, beta, cfg, None, with_direct=with_direct,
                          noiseless=True, payload_bits=bits)
        noisy = run_frame(scheme, ch, beta, cfg, rng, with_direct=with_direct,
                          noiseless=False, payload_bits=bits)
        sig_power += float(np.sum(np.abs(clean.eq_time) ** 2))
        noise_power += float(np.sum(np.abs(noisy.eq_time - clean.eq_time) ** 2))
    return sig_power / noise_power


def _point_trial(args) -> tuple[int, int]:
    """One (scheme, sweep point) trial; top-level so worker pools can pickle it."""
    scheme, cfg, snr_c_db, rsi_db, direct, trial_index, sweep_value = args
    chcfg = channel_config(cfg, snr_c_db=snr_c_db, rsi_db=rsi_db, direct=direct)
    trial_seed = cfg.seed + trial_index
    rng = make_rng(trial_seed)
    ch = draw_channels(rng, chcfg)
    beta = select_beta(scheme, ch, cfg, trial_seed, with_direct=direct)
    fr = run_frame(scheme, ch, beta, cfg, rng, with_direct=direct)
    rec = frame_ber(scheme, fr, cfg, sweep_value=sweep_value)
    return rec.bits, rec.errors


def ber_point(scheme: str, cfg: SimConfig, *, snr_c_db: float,
              rsi_db: float | None = None, direct: bool | None = None,
              sweep_value: float | None = None) -> BerRecord:
    """Average BER over independent channel draws for one sweep point.

    Trials run until ``cfg.frames`` draws are consumed, or earlier once at
    least ``cfg.min_bits`` bits and ``cfg.early_stop_errors`` errors have
    accumulated (early stop is applied in trial order, so the result is
    identical for any worker count).
    """
    use_direct = cfg.direct_link if direct is None else direct
    rsi = cfg.rsi_db if rsi_db is None else rsi_db
    sweep = snr_c_db if sweep_value is None else sweep_value
    args = [(scheme, cfg, snr_c_db, rsi, use_direct, t, sweep)
            for t in range(cfg.frames)]

    bits = errors = 0

    def merged(results) -> bool:
        nonlocal bits, errors
        for b, e in results:
            bits += b
            errors += e
            if (cfg.early_stop_errors is not None
                    and errors >= cfg.early_stop_errors
                    and bits >= cfg.min_bits):
                return True
        return False

    if cfg.workers > 1:
        chunk = max(cfg.workers * 2, 8)
        with multiprocessing.Pool(cfg.workers) as pool:
            for lo in range(0, len(args), chunk):
                if merged(pool.map(_point_trial, args[lo:lo + chunk])):
                    break
    else:
        for a in args:
            if merged([_point_trial(a)]):
                break
    return BerRecord(scheme, sweep, bits, errors)


@dataclass(frozen=True)
class SweepResult:
    """Rows of one experiment plus a config echo for the CSV header."""

    columns: tuple
    rows: list
    metadata: dict


def _base_metadata(cfg: SimConfig, figure: str) -> dict:
    meta = {"figure": figure, "version": __version__}
    for f in fields(cfg):
        value = getattr(cfg, f.name)
        if isinstance(value, tuple):
            value = ",".join(str(v) for v in value)
        meta[f.name] = value
    return meta


def run_fig2(cfg: SimConfig) -> SweepResult:
    """SNR vs relay power gain for a fixed seeded channel.

    Sweeps the gain over a grid, emitting the analytic and the measured SNR
    of both the guard-designed scheme and the pre-filtering baseline, and
    marks the analytically optimized gain in the metadata.
    """
    snr_c = cfg.fig2_snr_c_db
    chcfg = channel_config(cfg, snr_c_db=snr_c, direct=False)
    ch = draw_channels(make_rng(cfg.seed), chcfg)

    if cfg.beta_policy.startswith("sweep:"):
        beta2_grid = [float(v) for v in cfg.beta_policy.split(":", 1)[1].split(",")]
    else:
        beta2_grid = list(_stable_alpha_grid(cfg.fig2_grid_points)
                          / abs(ch.h_rr) ** 2)

    rows = []
    for beta2 in beta2_grid:
        beta = float(np.sqrt(beta2))
        b = budget(ch, beta, cfg.n)
        measured = measure_link_snr("proposed", ch, beta, cfg, cfg.seed + 1,
                                    cfg.frames)
        measured_pre = measure_link_snr("prefilter", ch, beta, cfg, cfg.seed + 1,
                                        cfg.frames)
        rows.append((beta2, to_db(b.gamma), to_db(measured),
                     to_db(b.gamma_pre), to_db(measured_pre)))

    star = optimize_gain(ch, cfg.n)
    meta = _base_metadata(cfg, "fig2")
    meta.update(
        h_sr=ch.h_sr, h_rd=ch.h_rd, h_rr=ch.h_rr,
        alpha_star=star.alpha_star,
        beta2_star=star.beta_star ** 2,
        gamma_star_db=to_db(star.gamma_star),
    )
    return SweepResult(
        ("beta2", "gamma_db_analytic", "gamma_db_measured",
         "gamma_pre_db_analytic", "gamma_pre_db_measured"),
        rows, meta)


def _ber_sweep(cfg: SimConfig, figure: str, sweep_name: str,
               points, direct: bool, snr_of_point, rsi_of_point) -> SweepResult:
    rows = []
    for value in points:
        for scheme in cfg.schemes:
            rec = ber_point(scheme, cfg, snr_c_db=snr_of_point(value),
                            rsi_db=rsi_of_point(value), direct=direct,
                            sweep_value=value)
            rows.append((scheme, value, rec.bits, rec.errors, rec.ber))
    return SweepResult(("scheme", sweep_name, "bits", "errors", "ber"),
                       rows, _base_metadata(cfg, figure))


def run_fig3(cfg: SimConfig) -> SweepResult:
    """BER vs per-hop channel SNR, no direct link."""
    return _ber_sweep(cfg, "fig3", "snr_c_db", cfg.snr_c_db, False,
                      lambda v: v, lambda v: cfg.rsi_db)


def run_fig4(cfg: SimConfig) -> SweepResult:
    """BER vs per-hop channel SNR with the direct link enabled."""
    return _ber_sweep(cfg, "fig4", "snr_c_db", cfg.snr_c_db, True,
                      lambda v: v, lambda v: cfg.rsi_db)


def run_fig5(cfg: SimConfig) -> SweepResult:
    """BER vs residual self-interference power at fixed channel SNR."""
    return _ber_sweep(cfg, "fig5", "rsi_db", cfg.rsi_sweep_db, False,
                      lambda v: cfg.fig5_snr_c_db, lambda v: v)


def _format_cell(value) -> str:
    if isinstance(value, bool):
        return str(value).lower()
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return f"{float(value):.10g}"
    if isinstance(value, complex):
        return f"{value.real:.10g}{value.imag:+.10g}j"
    return str(value)


def write_csv(result: SweepResult, fh):
    """Write '#' metadata lines, one header row, then the data rows."""
    for key in result.metadata:
        fh.write(f"# {key}={_format_cell(result.metadata[key])}\n")
    fh.write(",".join(result.columns) + "\n")
    for row in result.rows:
        fh.write(",".join(_format_cell(v) for v in row) + "\n")
