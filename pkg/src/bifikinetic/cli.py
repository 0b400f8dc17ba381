"""Command-line entry point: ``bifikinetic <command> --config FILE --out DIR``."""
from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from .harness import (
    ExperimentConfig,
    run_bifi_eval,
    run_convergence_in_N,
    run_eps_sweep,
    run_offline,
    run_order_study,
)

log = logging.getLogger("bifikinetic")


def _offline(cfg, out):
    res = run_offline(cfg, out=out)
    print(f"selected N={res.surrogate.N} of {len(res.train)} candidates; "
          f"low runs={res.low_calls}, high runs={res.high_calls}; surrogate in {out / 'surrogate'}")


def _bifi_eval(cfg, out):
    rep, _ = run_bifi_eval(cfg, out=out)
    print(f"aggregate L2_z error {rep.aggregate:.6e} over {rep.errors.size} samples "
          f"(coefficient bound {'ok' if rep.bound_ok else 'VIOLATED'})")


def _conv_n(cfg, out):
    header, rows, _ = run_convergence_in_N(cfg, out=out)
    _print_table(header, rows)


def _eps_sweep(cfg, out):
    header, rows, _ = run_eps_sweep(cfg, out=out)
    _print_table(header, rows)


def _order_study(cfg, out):
    header, rows, ls = run_order_study(cfg, out=out)
    _print_table(header, rows)
    print(f"least-squares observed order: {ls:.3f}")


def _print_table(header, rows):
    print(",".join(header))
    for r in rows:
        print(",".join(f"{v:.6g}" if isinstance(v, float) else str(v) for v in r))


COMMANDS = {
    "offline": (_offline, "build and persist the surrogate (offline stage)"),
    "bifi-eval": (_bifi_eval, "evaluate the surrogate on fresh samples"),
    "conv-n": (_conv_n, "error versus number of high-fidelity runs N"),
    "eps-sweep": (_eps_sweep, "error components across Knudsen numbers"),
    "order-study": (_order_study, "mesh refinement study for the fine/coarse pair"),
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="bifikinetic", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, (_, help_) in COMMANDS.items():
        p = sub.add_parser(name, help=help_)
        p.add_argument("--config", required=True, type=Path, help="flat key=value config file")
        p.add_argument("--out", required=True, type=Path, help="output directory")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    cfg = ExperimentConfig.from_file(args.config)
    cfg.out = str(args.out)
    args.out.mkdir(parents=True, exist_ok=True)
    COMMANDS[args.command][0](cfg, args.out)
    return 0


if __name__ == "__main__":
    sys.exit(main())
