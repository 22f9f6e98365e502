#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
Multiplexed Quantum Protocols - Main Entry Point

Command-line driver for the QKD, eavesdropping, teleportation and spectral
design experiments.
"""

import argparse
import sys
from typing import List, Optional

from config.constants import APP_TITLE, APP_VERSION
from harness.commands import COMMANDS, execute, parse_config
from harness.emit import emit
from utils import logger
from utils.errors import MqpError
from utils.logger import dbg


def _floats(text: str) -> List[float]:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="mqp", description=f"{APP_TITLE} {APP_VERSION}")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON experiment file")
    common.add_argument("--seed", type=int, help="master seed")
    common.add_argument("--mode", choices=("expectation", "sampled"))
    common.add_argument("--out", help="output directory")
    common.add_argument("--workers", type=int, help="worker threads for sweeps")
    common.add_argument("--verbose", action="store_true", help="debug logging")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name, parents=[common])
        if name == "attack-sweep":
            p.add_argument("--attack", choices=("none", "steal", "steal-resend", "intercept-resend"))
            p.add_argument("--t-grid", type=_floats, help="comma-separated transmissions")
        elif name == "run-teleport":
            p.add_argument("--g-grid", type=_floats, help="comma-separated squeezing gains")
        elif name == "design-setup":
            p.add_argument("--pixel", type=float)
            p.add_argument("--aperture", type=float)
            p.add_argument("--lambda", dest="wavelength", type=float)
            p.add_argument("--span", type=float)
        elif name == "crosstalk-test":
            p.add_argument("--leak", type=_floats, help="comma-separated leakage values")
    return parser


def overrides_from_args(args: argparse.Namespace) -> dict:
    """CLI flags as a partial configuration, None meaning 'not given'."""
    get = lambda name: getattr(args, name, None)
    out = {"command": args.command, "seed": args.seed, "mode": args.mode,
           "out": args.out, "workers": args.workers}
    if args.command == "validate" and args.mode is None:
        out["mode"] = "expectation"
    sweep = {k: v for k, v in (("attack", get("attack")), ("t_grid", get("t_grid"))) if v is not None}
    if sweep:
        out["sweep"] = sweep
    if get("g_grid") is not None:
        out["teleport"] = {"g_grid": args.g_grid}
    optics = {k: get(a) for k, a in (("pixel", "pixel"), ("aperture", "aperture"),
                                     ("wavelength", "wavelength"), ("span", "span"))
              if get(a) is not None}
    if optics:
        out["optics"] = optics
    if get("leak") is not None:
        out["crosstalk"] = {"leak_grid": args.leak}
    return out


def main(argv: Optional[List[str]] = None) -> int:
    """
    Main entry point of the application.

    Parses the command line, runs the command and writes its reports.
    Exits with the error category code on failure.
    """
    args = build_parser().parse_args(argv)
    logger.configure(args.verbose)
    cfg = None
    try:
        cfg = parse_config(args.config, overrides_from_args(args))
        bundle = execute(cfg)
        for path in emit(bundle, cfg.out):
            print(path)
        return 0
    except MqpError as e:
        partial = getattr(e, "bundle", None)
        if partial is not None and cfg is not None:
            try:
                emit(partial, cfg.out)
            except MqpError as emit_error:
                dbg(f"Impossibile salvare i risultati parziali: {emit_error}")
        dbg(f"Errore: {e}")
        print(f"error: {e}", file=sys.stderr)
        return e.exit_code
    except Exception as e:
        dbg(f"Errore fatale: {e}")
        print(f"fatal error: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
