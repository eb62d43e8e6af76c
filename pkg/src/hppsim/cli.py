"""Command-line entry point: ``hppsim run|validate|gen-signals|summarize``.

Failures exit nonzero after printing a single line to stderr:

    error: <ErrorType>: <message>
"""
from __future__ import annotations

import argparse
import sys
import time
from pathlib import Path

from .errors import HppError
from .outputs import summarize, write_outputs
from .scenario import load_scenario
from .signals import PROFILES, generate_synthetic_signals, write_signal_csv
from .simulate import run_scenario


def _overrides(args) -> dict:
    out = {}
    if getattr(args, "dt", None) is not None:
        out["dt"] = args.dt
    if getattr(args, "duration", None) is not None:
        out["duration"] = args.duration
    return out


def _cmd_run(args) -> int:
    scenario = load_scenario(args.config, _overrides(args))
    out = Path(args.out) if args.out else Path("runs") / Path(args.config).stem
    t0 = time.perf_counter()
    record = run_scenario(scenario)
    elapsed = time.perf_counter() - t0
    files = write_outputs(record, out, scenario)
    print(f"simulated {scenario.duration:g} s in {len(record)} rows ({elapsed:.1f} s wall)")
    for f in files:
        print(f"wrote {f}")
    return 0


def _cmd_validate(args) -> int:
    scenario = load_scenario(args.config, _overrides(args))
    print(f"ok: {args.config} (duration {scenario.duration:g} s, dt {scenario.dt:g} s, {scenario.n_rows} rows)")
    for d in scenario.defaults_applied:
        print(f"default {d}")
    return 0


def _cmd_gen_signals(args) -> int:
    duration = args.duration if args.duration is not None else 6 * 3600.0
    signals = generate_synthetic_signals(args.seed, duration, args.profile)
    out = Path(args.out) if args.out else Path(".")
    out.mkdir(parents=True, exist_ok=True)
    for series, unit in zip(signals, ("m_per_s", "w_per_m2", "w")):
        path = out / f"{series.name}.csv"
        write_signal_csv(series, path, f"{series.name}_{unit}")
        print(f"wrote {path}")
    return 0


def _cmd_summarize(args) -> int:
    sys.stdout.write(summarize(args.run_dir))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="hppsim", description="Hybrid power plant simulator.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="simulate a scenario and write a run directory")
    p.add_argument("config")
    p.add_argument("--out", help="run directory (default runs/<config stem>)")
    p.add_argument("--dt", type=float, help="override the step size, s")
    p.add_argument("--duration", type=float, help="override the duration, s")
    p.set_defaults(func=_cmd_run)

    p = sub.add_parser("validate", help="parse and validate a scenario without running it")
    p.add_argument("config")
    p.add_argument("--out", help="ignored; accepted for symmetry with run")
    p.add_argument("--dt", type=float)
    p.add_argument("--duration", type=float)
    p.set_defaults(func=_cmd_validate)

    p = sub.add_parser("gen-signals", help="write synthetic wind, irradiance and demand CSVs")
    p.add_argument("seed", type=int)
    p.add_argument("profile", choices=PROFILES)
    p.add_argument("--out", help="output directory (default .)")
    p.add_argument("--dt", type=float, help="ignored; signals are sampled every second")
    p.add_argument("--duration", type=float, help="signal length, s (default 21600)")
    p.set_defaults(func=_cmd_gen_signals)

    p = sub.add_parser("summarize", help="recompute summary.txt from a run directory")
    p.add_argument("run_dir")
    p.set_defaults(func=_cmd_summarize)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (HppError, OSError, ValueError) as exc:
        message = " ".join(str(exc).split())
        print(f"error: {type(exc).__name__}: {message}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
