"""Command line entry point: ``riskmkt run``."""

from __future__ import annotations

import argparse
import csv
import logging
import os
import sys
from pathlib import Path

import numpy as np

from .completion import WELFARE_TOL, random_zero_sum, run_completion
from .config import bundled_config, instrument_label, parse_config
from .exceptions import ConfigError, RiskMarketError

EXPERIMENTS = ("example1", "example2", "example3", "example7", "custom")

OUTPUT_HELP = """\
output files (scenario and instrument numbers are 1-based, floats use 12
significant digits):

  welfare.csv      stage, num_instruments, welfare, gap_to_complete
  prices.csv       stage, instrument_index, bundle_lo, bundle_hi, price
  diagnostics.csv  stage, max_pairing_gap, duality_gap

stage is the scheme label: the dyadic level m, the number of tail
instruments, or the number of cuts applied. bundle_lo and bundle_hi are the
first and last scenario where the instrument pays. max_pairing_gap is the
largest |sum_i E[W_i Y_i]| over the config's random zero-sum allocations W.

environment:
  RISKMKT_THREADS  worker processes used to solve stages (default 1)

exit status: 0 on success, 1 on a config error, 2 on a solver failure or a
welfare monotonicity violation.
"""


def _fmt(x) -> str:
    return format(float(x), ".12g")


def _threads() -> int:
    raw = os.environ.get("RISKMKT_THREADS", "1")
    try:
        n = int(raw)
    except ValueError:
        raise ConfigError(f"RISKMKT_THREADS must be an integer, got {raw!r}") from None
    if n < 1:
        raise ConfigError(f"RISKMKT_THREADS must be positive, got {n}")
    return n


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="riskmkt", description="Risk market equilibria and monotone completion.")
    sub = parser.add_subparsers(dest="command", required=True)
    run = sub.add_parser(
        "run",
        help="run a completion experiment",
        description="Solve every stage of a refinement scheme and write CSV results.",
        epilog=OUTPUT_HELP,
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    run.add_argument("name", nargs="?", choices=EXPERIMENTS, help="bundled experiment, or custom with --config")
    run.add_argument("--config", type=Path, help="path to a config file")
    run.add_argument("--out", type=Path, default=Path("."), help="output directory (default: current)")
    run.add_argument("--stages", type=int, help="number of stages to run")
    run.add_argument("--tol", type=float, default=WELFARE_TOL, help=f"welfare monotonicity tolerance (default {WELFARE_TOL:g})")
    run.add_argument("--dump-lp", action="store_true", help="write each stage's LP and solution under OUT/lp/")
    return parser


def _load(args):
    if args.config is not None:
        if args.name not in (None, "custom"):
            raise ConfigError("--config only combines with the name 'custom'")
        return parse_config(args.config, stages=args.stages)
    if args.name in (None, "custom"):
        raise ConfigError("custom experiments need --config")
    return parse_config(bundled_config(args.name), stages=args.stages)


def write_outputs(trace, out: Path) -> None:
    out.mkdir(parents=True, exist_ok=True)
    with open(out / "welfare.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["stage", "num_instruments", "welfare", "gap_to_complete"])
        for st in trace.stages:
            w.writerow([st.label, st.instruments.k, _fmt(st.welfare), _fmt(st.gap_to_complete)])
    with open(out / "prices.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["stage", "instrument_index", "bundle_lo", "bundle_hi", "price"])
        for st in trace.stages:
            for j, price in enumerate(st.result.prices):
                lo, hi = instrument_label(st.instruments, j)
                w.writerow([st.label, j + 1, lo, hi, _fmt(price)])
    with open(out / "diagnostics.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["stage", "max_pairing_gap", "duality_gap"])
        for st in trace.stages:
            w.writerow([st.label, _fmt(st.max_pairing_gap), _fmt(st.result.gap)])


def summary(cfg, trace) -> str:
    lines = [f"{cfg.name}: {len(cfg.market.agents)} agents, {cfg.market.n} scenarios, complete-market welfare {trace.complete_value:.10g}"]
    lines.append(f"{'stage':>6} {'instr':>6} {'welfare':>16} {'gap':>12} {'pairing':>10}")
    for st in trace.stages:
        lines.append(f"{st.label:>6} {st.instruments.k:>6} {st.welfare:>16.10f} {st.gap_to_complete:>12.3e} {st.max_pairing_gap:>10.2e}")
    last = trace.stages[-1]
    if last.instruments.k <= 8:
        prices = ", ".join(f"{p:.4f}" for p in last.result.prices)
        lines.append(f"final prices: lambda = ({prices})")
    return "\n".join(lines)


def run_experiment(args) -> int:
    try:
        if not args.tol >= 0:
            raise ConfigError(f"--tol must be nonnegative, got {args.tol}")
        cfg = _load(args)
        workers = _threads()
    except ConfigError as exc:
        print(f"riskmkt: config error: {exc}", file=sys.stderr)
        return 1
    rng = np.random.default_rng(cfg.seed)
    n_agents = len(cfg.market.agents)
    W = [random_zero_sum(n_agents, cfg.market.n, rng) for _ in range(cfg.pairing_draws)]
    try:
        trace = run_completion(
            cfg.market,
            cfg.scheme,
            labels=cfg.labels,
            pairing_W=W,
            tol=args.tol,
            max_workers=workers,
            dump_dir=args.out / "lp" if args.dump_lp else None,
        )
    except RiskMarketError as exc:
        print(f"riskmkt: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2
    try:
        write_outputs(trace, args.out)
    except OSError as exc:
        print(f"riskmkt: cannot write output: {exc}", file=sys.stderr)
        return 1
    print(summary(cfg, trace))
    return 0


def main(argv=None) -> int:
    logging.basicConfig(level=logging.WARNING, format="%(name)s: %(message)s")
    args = build_parser().parse_args(argv)
    if args.command == "run":
        return run_experiment(args)
    return 1


if __name__ == "__main__":
    sys.exit(main())
