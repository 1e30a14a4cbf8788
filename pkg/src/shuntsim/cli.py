"""Command-line interface.

    shuntsim run <scenario.scn> [--out DIR]
    shuntsim sweep --seeds N [--jobs J] <scenario.scn> [--out DIR]
    shuntsim compare <run-dir>
    shuntsim report --bins SECONDS <run-dir>

Output directory resolution: --out flag, else $SHUNTSIM_OUT, else ./out.
Exit codes: 0 ok, 1 scenario/validation error, 2 runtime error.
"""

from __future__ import annotations

import argparse
import os
import sys
from pathlib import Path

from .errors import ParameterError, ScenarioError
from .runner import compare_run, fmt, read_summary, rebin, run_scenario, sweep

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_RUNTIME = 2


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise ScenarioError([message])


def _outdir(args, default_leaf: str) -> Path:
    if args.out:
        return Path(args.out)
    base = os.environ.get("SHUNTSIM_OUT", "out")
    return Path(base) / default_leaf


def _print_es(run_dir: Path):
    es = run_dir / "es.csv"
    if not es.exists():
        return
    import csv
    rows = list(csv.reader(open(es, newline="")))
    widths = [max(len(r[i]) for r in rows) for i in range(len(rows[0]))]
    for r in rows:
        print("  ".join(c.rjust(w) for c, w in zip(r, widths)))


def _cmd_run(args) -> int:
    outdir = _outdir(args, Path(args.scenario).stem)
    art = run_scenario(args.scenario, outdir)
    _print_es(art.outdir)
    for key in ("measured_total_j", "oracle_total_j", "delta_total_rel",
                "overhead_total_j", "balance_residual_rel", "v_cap_end_v"):
        if key in art.summary:
            print(f"{key} = {art.summary[key]}")
    print(f"artifacts: {art.outdir}")
    return EXIT_OK


def _cmd_sweep(args) -> int:
    outdir = _outdir(args, f"sweep_{Path(args.scenario).stem}")
    rows = sweep(args.scenario, args.seeds, outdir, jobs=args.jobs)
    print(f"{len(rows)} seeds -> {outdir}")
    stats = outdir / "sweep_stats.csv"
    if stats.exists():
        print(stats.read_text().strip())
    return EXIT_OK


def _cmd_compare(args) -> int:
    rows = compare_run(args.run_dir)
    print(f"{'quantity':24} {'measured':>14} {'reference':>14} "
          f"{'abs_err':>13} {'rel_err':>12}")
    for name, m, o, d, rel in rows:
        print(f"{name:24} {fmt(m):>14} {fmt(o):>14} {fmt(d):>13} {fmt(rel):>12}")
    return EXIT_OK


def _cmd_report(args) -> int:
    rows = rebin(args.run_dir, args.bins)
    print(f"{'bin_start_s':>12} {'bin_end_s':>12} {'p_use_w':>13} "
          f"{'p_charge_w':>13} {'v_cap_end_v':>12}")
    for a, b, use, charge, v in rows:
        print(f"{fmt(a):>12} {fmt(b):>12} {fmt(use):>13} "
              f"{fmt(charge):>13} {fmt(v):>12}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="shuntsim",
                description="In-situ power measurement simulator")
    sub = p.add_subparsers(dest="verb", required=True)

    run_p = sub.add_parser("run", help="execute one scenario")
    run_p.add_argument("scenario")
    run_p.add_argument("--out", help="output directory")
    run_p.set_defaults(fn=_cmd_run)

    sweep_p = sub.add_parser("sweep", help="run many seeds of one scenario")
    sweep_p.add_argument("scenario")
    sweep_p.add_argument("--seeds", type=int, required=True)
    sweep_p.add_argument("--jobs", type=int, default=1)
    sweep_p.add_argument("--out", help="output directory")
    sweep_p.set_defaults(fn=_cmd_sweep)

    cmp_p = sub.add_parser("compare", help="measured-vs-reference error table")
    cmp_p.add_argument("run_dir")
    cmp_p.set_defaults(fn=_cmd_compare)

    rep_p = sub.add_parser("report", help="re-bin a run at a new bin width")
    rep_p.add_argument("run_dir")
    rep_p.add_argument("--bins", type=float, required=True,
                       help="bin width in seconds")
    rep_p.set_defaults(fn=_cmd_report)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.fn(args)
    except (ScenarioError, ParameterError) as exc:
        problems = getattr(exc, "problems", [str(exc)])
        for msg in problems:
            print(f"error: {msg}", file=sys.stderr)
        return EXIT_VALIDATION
    except Exception as exc:  # noqa: BLE001 - CLI boundary
        print(f"runtime error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
