"""Command-line interface.

Subcommands mirror the experiment drivers (``fig2`` .. ``fig5``), plus
``optimize-gain`` and ``budget`` for the closed-form machinery and
``simulate`` for one BER point.  Flags override config-file values; exit
code is 0 on success and 1 with a one-line diagnostic on config or numeric
errors.
"""

from __future__ import annotations

import argparse
import dataclasses
import sys

from .channel import ChannelRealization
from .exceptions import StabilityError
from .fdrelay import dump_stream
from .harness import (
    SCHEMES,
    SimConfig,
    ber_point,
    channel_config,
    run_fig2,
    run_fig3,
    run_fig4,
    run_fig5,
    run_frame,
    select_beta,
    write_csv,
)
from .linkbudget import budget, optimize_gain
from .numerics import from_db, make_rng, to_db

_FIGURES = {"fig2": run_fig2, "fig3": run_fig3, "fig4": run_fig4, "fig5": run_fig5}


def _add_config_flags(p: argparse.ArgumentParser):
    p.add_argument("--config", help="flat key = value config file")
    p.add_argument("--seed", type=int, help="base RNG seed")
    p.add_argument("--frames", type=int, help="channel draws per sweep point")
    p.add_argument("--schemes", help="comma-separated subset of "
                                     + ",".join(SCHEMES))
    p.add_argument("--workers", type=int, help="worker processes")
    p.add_argument("--out", help="CSV output path (default: stdout)")
    p.add_argument("--snr-c", dest="snr_c", help="channel SNR(s) in dB, comma-separated")
    p.add_argument("--rsi-db", dest="rsi_db", type=float,
                   help="residual self-interference power in dB")
    p.add_argument("--beta-policy", dest="beta_policy",
                   help="optimized | fixed:<beta2> | sweep:<beta2,...>")


def _add_channel_flags(p: argparse.ArgumentParser):
    p.add_argument("--h-sr", type=float, default=1.0)
    p.add_argument("--h-rd", type=float, default=1.0)
    p.add_argument("--h-rr", type=float, required=True)
    p.add_argument("--h-sd", type=float, default=0.0)
    p.add_argument("--snr-c", dest="snr_c", type=float, default=10.0)
    p.add_argument("--n", type=int, default=128)


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="iirofdm",
        description="Full-duplex AF relay OFDM link simulator")
    sub = parser.add_subparsers(dest="command", required=True)

    for name in _FIGURES:
        p = sub.add_parser(name, help=f"run the {name} experiment")
        _add_config_flags(p)

    p = sub.add_parser("simulate", help="run one BER point")
    _add_config_flags(p)
    p.add_argument("--scheme", choices=SCHEMES, default="proposed")
    p.add_argument("--direct", action="store_true", help="enable the direct link")
    p.add_argument("--dump-streams", metavar="PREFIX",
                   help="debug: dump first-frame tx/rx streams as raw float64 re/im")

    p = sub.add_parser("optimize-gain", help="closed-form relay gain optimum")
    _add_channel_flags(p)

    p = sub.add_parser("budget", help="print all link-budget quantities")
    _add_channel_flags(p)
    group = p.add_mutually_exclusive_group(required=True)
    group.add_argument("--alpha", type=float, help="squared pole magnitude")
    group.add_argument("--beta2", type=float, help="relay power gain")

    return parser


def _config_from_args(args) -> SimConfig:
    cfg = SimConfig.from_file(args.config) if args.config else SimConfig()
    updates = {}
    if args.seed is not None:
        updates["seed"] = args.seed
    if args.frames is not None:
        updates["frames"] = args.frames
    if args.schemes:
        updates["schemes"] = tuple(s.strip() for s in args.schemes.split(","))
    if args.workers is not None:
        updates["workers"] = args.workers
    if getattr(args, "snr_c", None):
        updates["snr_c_db"] = tuple(float(v) for v in str(args.snr_c).split(","))
    if args.rsi_db is not None:
        updates["rsi_db"] = args.rsi_db
    if args.beta_policy:
        updates["beta_policy"] = args.beta_policy
    return dataclasses.replace(cfg, **updates) if updates else cfg


def _fixed_channel(args) -> ChannelRealization:
    noise = from_db(-args.snr_c)
    return ChannelRealization(
        h_sr=complex(args.h_sr), h_rd=complex(args.h_rd),
        h_rr=complex(args.h_rr), h_sd=complex(args.h_sd),
        sigma2_r=noise, sigma2_d=noise)


def _emit(result, out_path):
    if out_path:
        with open(out_path, "w", encoding="utf-8", newline="") as fh:
            write_csv(result, fh)
    else:
        write_csv(result, sys.stdout)


def _run(args) -> int:
    if args.command in _FIGURES:
        cfg = _config_from_args(args)
        _emit(_FIGURES[args.command](cfg), args.out)
        return 0

    if args.command == "simulate":
        cfg = _config_from_args(args)
        snr = cfg.snr_c_db[0]
        if args.dump_streams:
            chcfg = channel_config(cfg, snr_c_db=snr, direct=args.direct)
            from .channel import draw_channels
            rng = make_rng(cfg.seed)
            ch = draw_channels(rng, chcfg)
            beta = select_beta(args.scheme, ch, cfg, cfg.seed,
                               with_direct=args.direct)
            fr = run_frame(args.scheme, ch, beta, cfg, rng,
                           with_direct=args.direct)
            dump_stream(args.dump_streams + ".tx.f64", fr.tx_stream)
            dump_stream(args.dump_streams + ".eq.f64", fr.eq_time)
        rec = ber_point(args.scheme, cfg, snr_c_db=snr, direct=args.direct)
        print(f"scheme={rec.scheme} snr_c_db={snr:g} bits={rec.bits} "
              f"errors={rec.errors} ber={rec.ber:.6e}")
        return 0

    if args.command == "optimize-gain":
        sol = optimize_gain(_fixed_channel(args), args.n)
        alpha = "none" if sol.alpha_star is None else f"{sol.alpha_star:.6f}"
        print(f"alpha_star={alpha} beta_star={sol.beta_star:.6f} "
              f"beta2_star={sol.beta_star ** 2:.6f} "
              f"gamma_star_db={to_db(sol.gamma_star):.4f}")
        return 0

    if args.command == "budget":
        ch = _fixed_channel(args)
        if args.alpha is not None:
            if args.h_rr == 0:
                raise ValueError("--alpha requires a nonzero --h-rr")
            beta = (args.alpha ** 0.5) / abs(args.h_rr)
        else:
            beta = args.beta2 ** 0.5
        b = budget(ch, beta, args.n)
        for field in dataclasses.fields(b):
            print(f"{field.name}={getattr(b, field.name):.10g}")
        return 0

    raise AssertionError(f"unhandled command {args.command}")


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        return _run(args)
    except (ValueError, StabilityError, OSError, ArithmeticError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
