"""Command-line entry point: run, list, describe, plotdata."""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
import time
from pathlib import Path

import numpy as np

from .errors import ColumnMissing, SchemaError, UnknownScenario
from .runner import DEFAULT_BOUNDS, execute
from .scenario import Scenario, bundled_names, bundled_scenario, resolve_scenario, system_dim

EXIT_OK, EXIT_FAIL, EXIT_INPUT = 0, 1, 2
OUT_ENV = "GEOMECH_OUT"


def write_csv(path: Path, traj, energy) -> None:
    n = traj.dim
    header = ["t"] + [f"q{i + 1}" for i in range(n)] + [f"p{i + 1}" for i in range(n)] + ["energy"]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for t, x, e in zip(traj.times, traj.states, energy):
            w.writerow(["%.16e" % v for v in (t, *x, e)])


def build_report(scn: Scenario, rec, artifacts: dict) -> dict:
    return {
        "scenario": scn.model_dump(mode="json"),
        "seed": scn.seed,
        "passed": all(c["passed"] for c in rec.checks),
        "checks": rec.checks,
        "extras": rec.extras,
        "artifacts": artifacts,
        "wall_time": "see timing sidecar",
    }


def run_scenario(scn: Scenario, out_dir: Path) -> tuple:
    """Execute and write artifacts; returns (report dict, exit code)."""
    t0 = time.perf_counter()
    rec = execute(scn)
    elapsed = time.perf_counter() - t0
    out_dir.mkdir(parents=True, exist_ok=True)
    artifacts = {}
    if rec.trajectory is not None and len(rec.trajectory):
        name = f"{scn.name}.csv"
        write_csv(out_dir / name, rec.trajectory, rec.energy)
        artifacts["trajectory"] = name
    report = build_report(scn, rec, artifacts)
    text = json.dumps(report, indent=2) + "\n"
    (out_dir / f"{scn.name}.report.json").write_text(text)
    (out_dir / f"{scn.name}.timing.json").write_text(json.dumps({"wall_time_s": elapsed}) + "\n")
    return report, EXIT_OK if report["passed"] else EXIT_FAIL


def _print_checks(report: dict, stream) -> None:
    for c in report["checks"]:
        flag = "PASS" if c["passed"] else "FAIL"
        val = c["value"]
        val = f"{val:.3e}" if isinstance(val, float) else str(val)
        print(f"  [{flag}] {c['name']}: {val} {c['relation']} {c['bound']}  {c['message']}".rstrip(), file=stream)


def cmd_run(args) -> int:
    scn = resolve_scenario(args.file)
    if args.seed is not None:
        try:
            scn = Scenario.model_validate({**scn.model_dump(), "seed": args.seed})
        except ValueError as exc:
            raise SchemaError(str(exc)) from None
    out = Path(args.out or os.environ.get(OUT_ENV) or "geomech-out")
    report, code = run_scenario(scn, out)
    print(f"{scn.name} ({scn.kind}): {'PASS' if code == EXIT_OK else 'FAIL'}")
    _print_checks(report, sys.stdout)
    print(f"  report: {out / (scn.name + '.report.json')}")
    return code


def cmd_list(args) -> int:
    for name in bundled_names():
        scn = bundled_scenario(name)
        print(f"{name:32s} {scn.kind:18s} {scn.description}")
    return EXIT_OK


def cmd_describe(args) -> int:
    scn = bundled_scenario(args.name)
    print(f"name:   {scn.name}")
    print(f"kind:   {scn.kind}")
    print(f"system: {scn.system.type} (dimension {system_dim(scn.system)})")
    if scn.description:
        print(f"about:  {scn.description}")
    if scn.anchors:
        print("exercises:")
        for a in scn.anchors:
            print(f"  - {a}")
    if scn.bounds:
        print("bounds:")
        for k, v in scn.bounds.items():
            print(f"  {k} <= {v}" if k.split(':')[0] in DEFAULT_BOUNDS else f"  {k}: {v}")
    return EXIT_OK


def read_columns(path, cols) -> dict:
    try:
        with open(path, newline="") as fh:
            rows = list(csv.reader(fh))
    except OSError as exc:
        raise ColumnMissing(f"cannot read {path}: {exc}") from None
    if len(rows) < 2:
        raise ColumnMissing(f"{path} has no trajectory rows")
    header = rows[0]
    missing = [c for c in cols if c not in header]
    if missing:
        raise ColumnMissing(f"columns {missing} not in {header}")
    data = np.array([[float(v) for v in r] for r in rows[1:] if r], dtype=float)
    return {c: data[:, header.index(c)] for c in cols}


def plot_series(path, cols, max_points: int = 2000) -> dict:
    series = read_columns(path, cols)
    m = len(next(iter(series.values())))
    idx = np.unique(np.linspace(0, m - 1, min(m, max_points)).round().astype(int))
    return {c: v[idx] for c, v in series.items()}


def cmd_plotdata(args) -> int:
    cols = [c.strip() for c in args.cols.split(",") if c.strip()]
    if not cols:
        raise ColumnMissing("no columns requested")
    series = plot_series(args.csv, cols, args.max_points)
    if args.json:
        print(json.dumps({c: v.tolist() for c, v in series.items()}))
    else:
        print("# " + " ".join(cols))
        for row in zip(*series.values()):
            print(" ".join("%.16e" % v for v in row))
    return EXIT_OK


def make_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="geomech", description="Geometric mechanics scenario runner")
    sub = ap.add_subparsers(dest="command", required=True)
    r = sub.add_parser("run", help="run a scenario file or bundled scenario name")
    r.add_argument("file")
    r.add_argument("--out", default=None, help=f"output directory (default ${OUT_ENV} or ./geomech-out)")
    r.add_argument("--seed", type=int, default=None)
    r.set_defaults(func=cmd_run)
    sub.add_parser("list", help="list bundled scenarios").set_defaults(func=cmd_list)
    d = sub.add_parser("describe", help="show what a bundled scenario exercises")
    d.add_argument("name")
    d.set_defaults(func=cmd_describe)
    p = sub.add_parser("plotdata", help="emit plot-ready columns from a trajectory CSV")
    p.add_argument("csv")
    p.add_argument("--cols", default="q1,q2")
    p.add_argument("--max-points", type=int, default=2000)
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_plotdata)
    return ap


def main(argv=None) -> int:
    ap = make_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_INPUT
    try:
        return args.func(args)
    except (SchemaError, UnknownScenario, ColumnMissing) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
