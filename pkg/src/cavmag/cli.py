"""Command-line entry point: ``cavmag <scenario> [options]``.

Exit codes: 0 success, 1 usage error, 2 solver failure, 3 verification failure.
"""
from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .scenarios import ConfigError, ScenarioConfig, run

EXIT_OK, EXIT_USAGE, EXIT_SOLVER, EXIT_VERIFY = 0, 1, 2, 3

SUBCOMMANDS = {
    "continuous-sweep": "steady photon/magnon numbers and g2 over a (B, omega_0) grid",
    "pulse": "free evolution after a coherent photon pulse",
    "g2-vs-drive": "steady g2 against drive strength at three drive frequencies",
    "g2-vs-temperature": "steady g2 against bath temperature at three drive frequencies",
    "verify": "cross-solver consistency checks",
}

# flag -> config key
FLAG_KEYS = {
    "solver": "solver",
    "order": "order",
    "n_traj": "n_traj",
    "dt": "dt",
    "seed": "seed",
    "threads": "threads",
    "out": "out",
}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: error: {message}")


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--config", type=Path, help="flat key = value config file")
    common.add_argument(
        "--set", action="append", default=[], metavar="KEY=VALUE", help="override a config key (repeatable)"
    )
    common.add_argument("--solver", choices=("analytic", "moments", "trajectories"))
    common.add_argument("--order", type=int, help="moment-hierarchy truncation order")
    common.add_argument("--n-traj", dest="n_traj", type=int, help="number of trajectories")
    common.add_argument("--dt", type=float, help="trajectory time step in seconds")
    common.add_argument("--seed", type=int, help="master seed")
    common.add_argument("--out", type=Path, help="CSV output path (metadata goes next to it as .json)")
    common.add_argument("--threads", type=int, help="worker processes")

    parser = _Parser(prog="cavmag", description="Cavity magnon-polariton scenarios.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    for name, help_text in SUBCOMMANDS.items():
        sub.add_parser(name, parents=[common], help=help_text, description=help_text)
    return parser


def config_from_args(args: argparse.Namespace) -> ScenarioConfig:
    entries: dict[str, str] = {}
    text = ""
    if args.config is not None:
        try:
            text = args.config.read_text()
        except OSError as exc:
            raise ConfigError(f"cannot read config: {exc}") from exc
    for item in args.set:
        if "=" not in item:
            raise ConfigError(f"--set expects KEY=VALUE, got {item!r}")
        key, value = item.split("=", 1)
        entries[key.strip()] = value.strip()
    for attr, key in FLAG_KEYS.items():
        value = getattr(args, attr)
        if value is not None:
            entries[key] = str(value)
    return ScenarioConfig.from_text(args.command, text, entries)


def main(argv: list[str] | None = None) -> int:
    try:
        args = build_parser().parse_args(argv)
        config = config_from_args(args)
    except (UsageError, ConfigError) as exc:
        print(exc, file=sys.stderr)
        return EXIT_USAGE
    except SystemExit as exc:
        # --help
        return EXIT_OK if not exc.code else EXIT_USAGE

    try:
        table = run(config)
    except (ValueError, ArithmeticError, RuntimeError) as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        return EXIT_SOLVER

    if config.out:
        csv_path, meta_path = table.write(config.out)
        print(f"wrote {csv_path} and {meta_path}", file=sys.stderr)
    else:
        sys.stdout.write(table.to_csv())

    if config.scenario == "verify":
        for name, passed, measured, tol, _ in table.rows:
            print(f"{'PASS' if passed else 'FAIL'} {name}: {measured:.3g} (tolerance {tol:g})", file=sys.stderr)
        return EXIT_OK if table.metadata["all_passed"] else EXIT_VERIFY
    status = table.metadata.get("status")
    if status is None and "status" in table.columns:
        status = list(table.column("status"))
    if status and any(s != "ok" for s in status):
        print("some points failed; see the status column", file=sys.stderr)
        return EXIT_SOLVER
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
