"""Command-line entry point: run, sweep, validate and report scenarios."""
from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from .harness.config import SWEEP_AXES, ConfigError, load, with_axis
from .harness.io import report, write_outputs
from .harness.runner import run_scenario
from .harness.sweep import format_table, sweep, to_json

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_ABORT = 3

log = logging.getLogger("advswarm")


def _values(text):
    out = []
    for tok in text.split(","):
        tok = tok.strip()
        if not tok:
            continue
        try:
            out.append(float(tok))
        except ValueError:
            raise ConfigError(f"not a number in --values: {tok!r}") from None
    return out


def cmd_run(args):
    cfg = load(args.scenario)
    if args.seed is not None:
        cfg = with_axis(cfg, "seed", args.seed)
    records, summary = run_scenario(cfg)
    path = write_outputs(records, summary, cfg, args.out)
    print(f"{cfg.name} seed {cfg.seed}: RMS {_opt(summary.rms)}  sup|P| {summary.sup_p_norm:.4f}  "
          f"sum|P| {summary.sum_p_norm:.2f}  missed {summary.missed_fraction:.3f}")
    print(f"wrote {path}")
    if summary.aborted:
        log.error("numerical abort: %s", summary.abort_reason)
        return EXIT_ABORT
    return EXIT_OK


def cmd_sweep(args):
    cfg = load(args.scenario)
    rows = sweep(cfg, args.axis, _values(args.values), seeds=args.seeds)
    print(format_table(rows))
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        (out / f"{cfg.name}_sweep_{args.axis}.json").write_text(to_json(rows))
    if any(r["aborted"] for r in rows):
        return EXIT_ABORT
    return EXIT_OK


def cmd_validate(args):
    cfg = load(args.scenario)
    print(f"{args.scenario}: ok ({cfg.name}, {len(cfg.robots)} robots, {cfg.horizon} steps)")
    return EXIT_OK


def cmd_report(args):
    if not Path(args.out_dir).is_dir():
        raise ConfigError(f"no such directory: {args.out_dir}")
    print(report(args.out_dir))
    return EXIT_OK


def _opt(v):
    return "n/a" if v is None else f"{v:.4f}"


def build_parser():
    ap = argparse.ArgumentParser(prog="advswarm", description=__doc__)
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="simulate one scenario")
    p.add_argument("scenario")
    p.add_argument("--seed", type=int)
    p.add_argument("--out", default="out")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("sweep", help="sweep one attack parameter over seeds")
    p.add_argument("scenario")
    p.add_argument("--axis", required=True, choices=SWEEP_AXES)
    p.add_argument("--values", required=True, help="comma-separated list")
    p.add_argument("--seeds", type=int, default=1)
    p.add_argument("--out")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("validate", help="check a scenario file")
    p.add_argument("scenario")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("report", help="tabulate the summaries in an output directory")
    p.add_argument("out_dir")
    p.set_defaults(func=cmd_report)
    return ap


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
