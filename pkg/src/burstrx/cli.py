"""Command-line front end: air / ber / noise / complexity subcommands.

Settings come from an optional flat config file plus flags; flags win.
Exit codes: 0 on success, 1 for invalid configuration, 2 for I/O errors.
"""

from __future__ import annotations

import argparse
import sys

from .harness import (
    ConfigError,
    SimConfig,
    SweepResult,
    complexity_count,
    dump_noise,
    parse_config_file,
    run_air_sweep,
    run_ber_sweep,
)


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # invalid flags count as invalid config
        self.print_usage(sys.stderr)
        raise ConfigError(message)


_FLAG_TO_KEY = {
    "A": "A",
    "Lambda": "Lambda",
    "r": "r",
    "W": "W",
    "rx_A": "rx_A",
    "rx_Lambda": "rx_Lambda",
    "rx_r": "rx_r",
    "rx_W": "rx_W",
    "sigma0_sq": "sigma0_sq",
    "M": "M",
    "snr_db": "snr_db",
    "snr_grid": "snr_grid",
    "lambda_grid": "lambda_grid",
    "T": "T",
    "n_sequences": "n_sequences",
    "K": "K",
    "iterations": "iterations",
    "genie_iterations": "genie_iterations",
    "designs": "designs",
    "target_errors": "target_errors",
    "max_frames": "max_frames",
    "min_frames": "min_frames",
    "code_memory": "code_memory",
    "code_generators": "code_generators",
    "seed": "seed",
    "out": "out",
    "threads": "threads",
}


def _add_shared(sub):
    sub.add_argument("--config", help="flat key = value config file")
    sub.add_argument("--seed", help="master seed (u64)")
    sub.add_argument("--out", help="output CSV path")
    sub.add_argument("--threads", help="worker processes for frames/sequences")


def _add_channel(sub):
    for flag in ("--A", "--Lambda", "--r", "--W"):
        sub.add_argument(flag)
    for flag in ("--rx-A", "--rx-Lambda", "--rx-r", "--rx-W"):
        sub.add_argument(flag)


def build_parser() -> _Parser:
    parser = _Parser(prog="burstrx", description=__doc__)
    subs = parser.add_subparsers(dest="command", required=True)

    air = subs.add_parser("air", help="information-rate sweep")
    _add_shared(air)
    _add_channel(air)
    for flag in ("--M", "--snr-db", "--snr-grid", "--lambda-grid", "--T", "--n-sequences"):
        air.add_argument(flag)

    ber = subs.add_parser("ber", help="bit-error-rate sweep")
    _add_shared(ber)
    _add_channel(ber)
    for flag in (
        "--M", "--snr-db", "--snr-grid", "--K", "--iterations", "--genie-iterations",
        "--designs", "--target-errors", "--max-frames", "--min-frames",
        "--code-memory", "--code-generators",
    ):
        ber.add_argument(flag)

    noise = subs.add_parser("noise", help="dump one noise realization")
    _add_shared(noise)
    _add_channel(noise)
    noise.add_argument("--sigma0-sq")
    noise.add_argument("--T")

    comp = subs.add_parser("complexity", help="multiplication counts per symbol")
    _add_shared(comp)
    comp.add_argument("--M")
    comp.add_argument("--W")
    comp.add_argument("--L", help="code memory")
    comp.add_argument("--iterations", help="comma list of iteration counts")
    return parser


def _resolve_config(args: argparse.Namespace, experiment: str) -> SimConfig:
    cfg = SimConfig(experiment=experiment)
    if args.config:
        cfg = SimConfig.from_strings(parse_config_file(args.config), base=cfg)
        cfg = SimConfig.from_strings({"experiment": experiment}, base=cfg)
    overrides = {}
    for attr, key in _FLAG_TO_KEY.items():
        val = getattr(args, attr, None)
        if val is not None:
            overrides[key] = val
    if "L" in vars(args) and args.L is not None:
        overrides["code_memory"] = args.L
    return SimConfig.from_strings(overrides, base=cfg)


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command == "complexity" and getattr(args, "iterations", None):
            # allow a comma list for the complexity table
            iteration_values = [int(tok) for tok in args.iterations.split(",") if tok.strip()]
            args.iterations = None
        else:
            iteration_values = None
        config = _resolve_config(args, args.command)

        if args.command == "air":
            result = run_air_sweep(config)
        elif args.command == "ber":
            result = run_ber_sweep(config)
        elif args.command == "noise":
            result = dump_noise(config)
        else:
            result = SweepResult(
                columns=("M", "W", "L", "iterations", "design", "multiplications")
            )
            for design in ("joint", "separate"):
                for it in iteration_values or [config.iterations]:
                    result.add(
                        M=config.M, W=config.W, L=config.code_memory, iterations=it,
                        design=design,
                        multiplications=complexity_count(
                            config.M, config.W, config.code_memory, it, design
                        ),
                    )
            if config.out:
                result.write_csv(config.out)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return 2

    if config.out:
        print(f"wrote {len(result.rows)} rows to {config.out}")
    else:
        for row in result.rows:
            print(",".join(f"{c}={row[c]}" for c in result.columns))
    return 0


if __name__ == "__main__":
    sys.exit(main())
