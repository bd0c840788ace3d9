"""Command-line front end.

    incentive-alloc run --config exp.cfg [--set key=value ...] [--out DIR]
    incentive-alloc matrix --configs DIR [--seeds 0-9] [--parallel N] [--out DIR]
    incentive-alloc report --in DIR [--no-returns]
    incentive-alloc validate --dataset FILE [--undirected] [--expect-nodes N] [--expect-edges M]

The output directory defaults to $INCENTIVE_ALLOC_OUT, else ./runs.
"""

from __future__ import annotations

import argparse
import dataclasses
import logging
import os
import sys
from pathlib import Path

from . import network as net
from .config import ConfigError, parse_config
from .engine import RunFailure, load_summary_csv, run_matrix, summary_csv, trace_csv
from .report import ReportError, report

OUT_ENV = "INCENTIVE_ALLOC_OUT"
log = logging.getLogger("incentive_alloc")


def _out_dir(arg: str | None) -> Path:
    path = Path(arg or os.environ.get(OUT_ENV) or "runs")
    path.mkdir(parents=True, exist_ok=True)
    return path


def parse_seeds(text: str) -> list[int]:
    seeds = []
    for part in text.split(","):
        if "-" in part.strip()[1:]:
            lo, hi = part.split("-", 1)
            seeds.extend(range(int(lo), int(hi) + 1))
        else:
            seeds.append(int(part))
    return seeds


def _write_results(results, out: Path) -> int:
    summaries, failed = [], 0
    for res in results:
        if isinstance(res, RunFailure):
            failed += 1
            print(f"FAILED {res.config.label}: {res.error}", file=sys.stderr)
            continue
        (out / f"{res.config.label}.csv").write_text(trace_csv(res), encoding="utf-8")
        summaries.append(res.summary)
        s = res.summary
        print(f"{res.config.label}: mean_gaup={s.mean_gaup:.3f} mean_giac={s.mean_giac:.3f} "
              f"spend={s.spend:.3f}/{s.total_budget:.3f} ({res.elapsed:.1f}s)")
    if summaries:
        (out / "summary.csv").write_text(summary_csv(summaries), encoding="utf-8")
    return 1 if failed else 0


def cmd_run(args) -> int:
    text = Path(args.config).read_text(encoding="utf-8")
    sets = list(args.set or [])
    if args.dump_influence:
        sets.append(f"influence_dump = {args.dump_influence}")
    cfg = parse_config(text, sets)
    if not cfg.name:
        cfg.name = f"{Path(args.config).stem}-{cfg.strategy}-s{cfg.seed}"
    return _write_results(run_matrix([cfg]), _out_dir(args.out))


def cmd_matrix(args) -> int:
    paths = sorted(Path(args.configs).glob("*.cfg"))
    if not paths:
        print(f"no *.cfg files in {args.configs}", file=sys.stderr)
        return 2
    cfgs = []
    for p in paths:
        base = parse_config(p.read_text(encoding="utf-8"), args.set or [])
        for seed in parse_seeds(args.seeds) if args.seeds else [base.seed]:
            cfgs.append(dataclasses.replace(base, seed=seed, name=f"{p.stem}-{base.strategy}-s{seed}"))
    return _write_results(run_matrix(cfgs, args.parallel), _out_dir(args.out))


def cmd_report(args) -> int:
    src = Path(args.input) / "summary.csv"
    summaries = load_summary_csv(src.read_text(encoding="utf-8"))
    text, table = report(summaries, returns=not args.no_returns)
    (Path(args.input) / "report.csv").write_text(table, encoding="utf-8")
    print(text, end="")
    return 0


def cmd_validate(args) -> int:
    g = net.read_edge_list(args.dataset, undirected=args.undirected)
    n, m = len(g.users), g.edge_count
    print(f"users: {n}")
    print(f"edges: {m}")
    print(f"avg out-degree: {m / n:.2f}")
    if args.clustering:
        print(f"avg clustering: {net.average_clustering(g):.3f}")
    status = 0
    if args.expect_nodes is not None and args.expect_nodes != n:
        print(f"MISMATCH users: expected {args.expect_nodes}, got {n}")
        status = 1
    if args.expect_edges is not None and args.expect_edges != m:
        print(f"MISMATCH edges: expected {args.expect_edges}, got {m}")
        status = 1
    return status


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="incentive-alloc", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="run one experiment config")
    r.add_argument("--config", required=True)
    r.add_argument("--set", action="append", metavar="KEY=VALUE", help="override a config key")
    r.add_argument("--out")
    r.add_argument("--dump-influence", metavar="DIR", help="write pairwise/degree CSVs per step")
    r.set_defaults(func=cmd_run)

    m = sub.add_parser("matrix", help="run every *.cfg in a directory")
    m.add_argument("--configs", required=True)
    m.add_argument("--set", action="append", metavar="KEY=VALUE")
    m.add_argument("--seeds", help="e.g. 0-9 or 1,3,5; overrides each config's seed")
    m.add_argument("--parallel", type=int, default=1)
    m.add_argument("--out")
    m.set_defaults(func=cmd_matrix)

    rep = sub.add_parser("report", help="render the budget-efficiency table")
    rep.add_argument("--in", dest="input", required=True)
    rep.add_argument("--no-returns", action="store_true")
    rep.set_defaults(func=cmd_report)

    v = sub.add_parser("validate", help="report dataset statistics")
    v.add_argument("--dataset", required=True)
    v.add_argument("--undirected", action="store_true")
    v.add_argument("--clustering", action="store_true", help="also compute the average clustering coefficient")
    v.add_argument("--expect-nodes", type=int)
    v.add_argument("--expect-edges", type=int)
    v.set_defaults(func=cmd_validate)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except (ConfigError, ReportError, net.EdgeListError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
