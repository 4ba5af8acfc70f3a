"""``tdl`` command line: one subcommand per experiment kind."""

from __future__ import annotations

import argparse
import os
import sys

from .errors import ConfigError
from .harness import EXIT_CONFIG, KINDS, load_config, run_experiment


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="tdl",
        description="Lattice-count, Strichartz and NLS experiments on flat tori.",
    )
    sub = parser.add_subparsers(dest="kind", metavar="subcommand", required=True)
    for kind in KINDS:
        p = sub.add_parser(kind, help=f"run a {kind} experiment")
        p.add_argument("--config", required=True, help="JSON configuration file")
        p.add_argument("--out", default=None, help="output directory (default: ./tdl-out/<subcommand>)")
        p.add_argument("--seed", type=int, default=None, help="override the configured seed")
        p.add_argument("--threads", type=int, default=None,
                       help="FFT worker threads (fallback: TDL_THREADS)")
    return parser


def _threads(arg: int | None) -> int | None:
    if arg is not None:
        return arg
    env = os.environ.get("TDL_THREADS")
    if env in (None, ""):
        return None
    try:
        return int(env)
    except ValueError:
        raise ConfigError(f"TDL_THREADS must be an integer, got {env!r}") from None


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code else 0
    try:
        threads = _threads(args.threads)
        if threads is not None and threads < 1:
            raise ConfigError("--threads must be >= 1")
        if args.seed is not None and args.seed < 0:
            raise ConfigError("--seed must be >= 0")
        config = load_config(args.config, args.kind, args.seed)
    except ConfigError as exc:
        print(f"tdl: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    out = args.out or os.path.join("tdl-out", args.kind)
    outcome = run_experiment(config, out, threads)
    m = outcome.manifest
    for check in m["checks"]:
        tag = "PASS" if check["passed"] else ("FAIL" if check["enforced"] else "FLAG")
        print(f"[{tag}] {check['name']}: {check['detail']}")
    if m["status"] == "FAILED":
        print(f"tdl: runtime error: {m['error']['type']}: {m['error']['message']}", file=sys.stderr)
    print(f"manifest: {outcome.manifest_path}")
    return outcome.exit_code


if __name__ == "__main__":
    sys.exit(main())
