"""Command-line entry point: ``simulate``, ``verify`` and ``ratio``.

Exit codes: 0 success, 1 a verification suite failed, 2 bad input
(config, arguments or output directory).
"""

from __future__ import annotations

import argparse
import sys

from ..numerics import DomainError
from ..overload_sim import overload_ratio
from .config import OUTPUT_ENV, ConfigError, parse_config
from .grid import OutputDirError, run_grid
from .verify import FAULTS, SUITES, run_suite

EXIT_OK = 0
EXIT_FAILED = 1
EXIT_USAGE = 2


def _positive_int(text: str) -> int:
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer, got {text!r}")
    if v < 1:
        raise argparse.ArgumentTypeError("must be >= 1")
    return v


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="activeprecision", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="run a Baseline/Co4 sweep from a JSON config")
    sim.add_argument("--config", required=True, help="path to the experiment JSON")
    sim.add_argument("--out", help=f"output directory (default: config output_dir, then ${OUTPUT_ENV}, then ./runs)")
    sim.add_argument("--parallel", type=_positive_int, default=1, help="worker processes (results do not depend on it)")

    ver = sub.add_parser("verify", help="run a self-check suite")
    ver.add_argument("--suite", required=True, choices=SUITES + ("all",))
    ver.add_argument("--seed", type=int, default=0)
    ver.add_argument("--inject-fault", choices=FAULTS, help="corrupt one draw to exercise the failure path (invariants only)")

    rat = sub.add_parser("ratio", help="overload ratio gamma = s_c / s_r and its regime")
    rat.add_argument("--sc", type=float, required=True)
    rat.add_argument("--sr", type=float, required=True)
    return p


def _simulate(args) -> int:
    try:
        cfg = parse_config(args.config)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    try:
        report = run_grid(cfg, args.out, parallel=args.parallel)
    except OutputDirError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    out = cfg.resolve_output_dir(args.out)
    for c in report.cells:
        b, k = c["Baseline"], c["Co4"]
        print(
            f"s_r={c['s_r']:<5d} s_c={c['s_c']:<5d} gamma={c['gamma']:<6.3g} "
            f"baseline drift {b['rms_drift']['mean']:.3f}+-{b['rms_drift']['std']:.3f}  "
            f"co4 drift {k['rms_drift']['mean']:.3f}+-{k['rms_drift']['std']:.3f}  "
            f"co4 wins {c['co4_wins']}/{c['n_seeds']}"
        )
    print(f"wrote {out}")
    return EXIT_OK


def _verify(args) -> int:
    if args.inject_fault and args.suite not in ("invariants", "all"):
        print("error: --inject-fault applies to the invariants suite only", file=sys.stderr)
        return EXIT_USAGE
    names = SUITES if args.suite == "all" else (args.suite,)
    ok = True
    for name in names:
        fault = args.inject_fault if name == "invariants" else None
        report = run_suite(name, seed=args.seed, inject_fault=fault)
        print("\n".join(report.lines()))
        ok &= report.passed
    return EXIT_OK if ok else EXIT_FAILED


def _ratio(args) -> int:
    try:
        gamma, regime = overload_ratio(args.sc, args.sr)
    except DomainError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    print(f"gamma={gamma:.6g} regime={regime.value}")
    return EXIT_OK


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    handler = {"simulate": _simulate, "verify": _verify, "ratio": _ratio}[args.command]
    return handler(args)


if __name__ == "__main__":
    sys.exit(main())
