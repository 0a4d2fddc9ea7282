"""Command-line entry point ``fk``."""
from __future__ import annotations

import argparse
import sys

from .config import LEMMA_CHECKS, MODES, SIDES, resolve
from .errors import ConfigError, InstanceTooLarge, TruncationError
from .harness import EXIT_CONFIG, EXIT_RESOURCE, EXIT_VERIFY, run_experiment

_HELP = {
    "dist": "distances between two explicit points (Bowen, averaged, FK)",
    "cover": "greedy FK cover counts with verification",
    "pack": "greedy FK packing counts",
    "mdim-b": "FK-Bowen mean dimension estimate (cover growth rates)",
    "mdim-p": "FK-packing mean dimension estimate (packing growth rates)",
    "local-entropy": "FK local entropies of an empirical measure",
    "vp-check": "compare cover/packing growth with integrated local entropies",
    "verify-lemmas": "seeded finite-instance checks of the supporting inequalities",
}


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", metavar="PATH", help="INI config file (flags override it)")
    p.add_argument("--system", help="system name, e.g. full-shift-2, unit-cube-shift")
    p.add_argument("--param", action="append", default=[], metavar="KEY=VALUE",
                   help="system parameter (repeatable), e.g. --param L=32")
    p.add_argument("--seed", type=int)
    p.add_argument("--out", dest="output", metavar="DIR", help="output directory")
    p.add_argument("--eps", dest="epsilon", help="comma-separated epsilon list")
    p.add_argument("--n-min", type=int)
    p.add_argument("--n-max", type=int)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="fk", description="Feldman-Katok mean dimension tools")
    sub = parser.add_subparsers(dest="mode", metavar="MODE")
    for mode in MODES:
        p = sub.add_parser(mode, help=_HELP[mode])
        _common(p)
        if mode in ("cover", "pack", "mdim-b", "mdim-p", "vp-check"):
            p.add_argument("--samples", type=int, help="sample size for cover/packing counts")
        if mode in ("cover", "pack", "mdim-b", "mdim-p", "local-entropy", "vp-check"):
            p.add_argument("--measure", help="measure descriptor(s): uniform, bernoulli:p, orbit:x0")
        if mode in ("local-entropy", "vp-check"):
            p.add_argument("--m", type=int, help="number of atoms of the empirical measure")
            p.add_argument("--eval-points", type=int)
            p.add_argument("--entropy-n-min", type=int)
            p.add_argument("--entropy-n-max", type=int)
        if mode == "vp-check":
            p.add_argument("--slack", type=float)
            p.add_argument("--side", choices=SIDES)
        if mode == "verify-lemmas":
            p.add_argument("--which", help=f"comma-separated subset of {','.join(LEMMA_CHECKS)}")
            p.add_argument("--trials", type=int)
        if mode == "dist":
            p.add_argument("--x", help="first point (symbol string or real)")
            p.add_argument("--y", help="second point")
            p.add_argument("--n", type=int, help="orbit length")
            p.add_argument("--distance-mode", choices=("exact", "bisection"))
            p.add_argument("--tol", type=float)
    return parser


def _params(items: list[str]) -> dict:
    out = {}
    for item in items:
        key, sep, raw = item.partition("=")
        if not sep or not key:
            raise ConfigError(f"--param expects KEY=VALUE, got {item!r}")
        for cast in (int, float, str):
            try:
                out[key] = cast(raw)
                break
            except ValueError:
                continue
    return out


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code else 0
    if args.mode is None:
        parser.print_usage(sys.stderr)
        return EXIT_CONFIG
    flags = {k: v for k, v in vars(args).items() if k not in ("mode", "config", "param")}
    try:
        cfg = resolve(args.mode, args.config, flags, _params(args.param))
        status, outcome, paths = run_experiment(cfg)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (TruncationError, InstanceTooLarge, MemoryError) as exc:
        print(f"resource error: {exc}", file=sys.stderr)
        return EXIT_RESOURCE
    except AssertionError as exc:
        print(f"verification failure: {exc}", file=sys.stderr)
        return EXIT_VERIFY
    print(outcome.summary)
    for p in paths:
        print(f"wrote {p}")
    return status


if __name__ == "__main__":
    sys.exit(main())
