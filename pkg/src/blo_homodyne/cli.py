"""Command-line entry point.

Exit codes: 0 success, 2 configuration error, 3 physically infeasible
request, 4 I/O failure.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from . import scenarios
from .config import load_config
from .errors import ConfigError, PhysicsError

log = logging.getLogger("blo_homodyne")

EXIT_OK, EXIT_CONFIG, EXIT_PHYSICS, EXIT_IO = 0, 2, 3, 4


def _common() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    p.add_argument("--config", type=Path, action="append", default=[],
                   help="INI file layered over the defaults (repeatable)")
    p.add_argument("--seed", type=int, help="base seed, unsigned 64-bit")
    p.add_argument("--analytic", action="store_true",
                   help="closed-form curves instead of synthesized records")
    p.add_argument("--out-dir", type=Path, help="directory for CSV/JSON/trace output")
    p.add_argument("--svg", action="store_true", help="also plot the CSVs to SVG (matplotlib)")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def build_parser() -> argparse.ArgumentParser:
    common = _common()
    parser = argparse.ArgumentParser(
        prog="blo-homodyne",
        description="Squeezed-vacuum detection with a bichromatic local oscillator.")
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("spectrum", parents=[common],
                   help="squeezed/antisqueezed noise spectra over the analysis band")
    sub.add_parser("zero-span", parents=[common],
                   help="zero-span traces during an LO phase ramp (dual and single LO)")
    sub.add_parser("signal", parents=[common],
                   help="baseband signal shifted to Omega0, with the LO beatnote")
    p_fit = sub.add_parser("fit", parents=[common],
                           help="fit r and the efficiency to a measured dB pair")
    p_fit.add_argument("v_sq_db", type=float, help="squeezed level, dB rel. SNL (< 0)")
    p_fit.add_argument("v_anti_db", type=float, help="antisqueezed level, dB rel. SNL (> 0)")
    p_fit.add_argument("--dark-db", type=float, default=None,
                       help="dark noise in dB rel. SNL contained in the SNL reference")
    p_synth = sub.add_parser("synth", parents=[common], help="export a raw photocurrent trace")
    p_synth.add_argument("--format", choices=("bin", "csv", "both"), default="bin")
    return parser


def _load(args):
    overrides = {}
    if args.seed is not None:
        overrides["run.seed"] = str(args.seed)
    if args.out_dir is not None:
        overrides["run.out_dir"] = str(args.out_dir)
    return load_config(args.config, overrides)


def run(args) -> scenarios.RunReport:
    if args.command == "fit":
        return scenarios.cmd_fit(args.v_sq_db, args.v_anti_db, args.out_dir, args.dark_db)
    cfg = _load(args)
    if args.command == "spectrum":
        report = scenarios.cmd_spectrum(cfg, args.analytic)
    elif args.command == "zero-span":
        report = scenarios.cmd_zero_span(cfg, args.analytic)
    elif args.command == "signal":
        report = scenarios.cmd_signal(cfg, args.analytic)
    else:
        report = scenarios.cmd_synth(cfg, args.format)
    if args.svg:
        from .plot import plot_report
        report.artifacts += plot_report(report)
    return report


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        report = run(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except PhysicsError as exc:
        print(f"infeasible: {exc}", file=sys.stderr)
        return EXIT_PHYSICS
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    print(report.render())
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
