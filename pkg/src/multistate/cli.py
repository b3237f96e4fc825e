"""Command-line runner: ``multistate list | run | validate``."""
from __future__ import annotations

import argparse
import csv
import json
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from .config import load_spec
from .errors import IoFailure, MultistateError
from .scenarios import RunReport, get_scenario, list_scenarios, run_scenario, validate_config

WORKERS_ENV = "MULTISTATE_WORKERS"


def _fmt(v):
    if isinstance(v, (bool, np.bool_)):
        return str(int(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        f = float(obj)
        return f if math.isfinite(f) else str(f)
    return obj


def _is_decay_table(columns):
    return len(columns) == 2 and columns[0] == "t"


def _write_csv(path, columns, rows):
    cols = list(columns)
    out_rows = [list(r) for r in rows]
    if _is_decay_table(cols):
        cols += ["log_t", "log_" + cols[1]]
        for r in out_rows:
            t, y = float(r[0]), float(r[1])
            r += [math.log(t) if t > 0 else float("nan"), math.log(y) if y > 0 else float("nan")]
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(cols)
        for r in out_rows:
            w.writerow([_fmt(v) for v in r])


def emit_plotdata(report: RunReport, out_dir) -> Path:
    """Per-table CSV files plus ``manifest.json`` under ``out_dir/<scenario>``; returns the manifest path."""
    base = Path(out_dir) / report.scenario
    try:
        base.mkdir(parents=True, exist_ok=True)
        entries = []
        for exp in report.experiments:
            for tname, (columns, rows) in exp.tables.items():
                path = base / f"{exp.name}__{tname}.csv"
                _write_csv(path, columns, rows)
                entries.append({"experiment": exp.name, "table": tname, "path": path.name,
                                "columns": list(columns) + (["log_t", "log_" + columns[1]]
                                                            if _is_decay_table(columns) else []),
                                "rows": len(rows)})
                report.artifacts.append(str(path))
        summary = base / "report.json"
        with open(summary, "w", encoding="utf-8") as fh:
            json.dump(_jsonable(report_dict(report)), fh, indent=2)
        manifest = base / "manifest.json"
        with open(manifest, "w", encoding="utf-8") as fh:
            json.dump({"scenario": report.scenario, "entries": entries, "report": summary.name}, fh, indent=2)
    except OSError as exc:
        raise IoFailure(str(exc)) from exc
    report.artifacts.extend([str(summary), str(manifest)])
    return manifest


def report_dict(report: RunReport):
    return {
        "scenario": report.scenario,
        "passed": report.passed,
        "experiments": [{"name": e.name, "verdict": e.verdict, "reason": e.reason, "metrics": e.metrics}
                        for e in report.experiments],
        "config": report.config,
        "environment": report.environment,
    }


def parse_override(text):
    if "=" not in text:
        raise argparse.ArgumentTypeError(f"expected key=value, got {text!r}")
    key, raw = text.split("=", 1)
    try:
        value = json.loads(raw)
    except json.JSONDecodeError:
        value = raw
    return key.strip(), value


def worker_count():
    raw = os.environ.get(WORKERS_ENV, "1")
    try:
        return max(1, int(raw))
    except ValueError:
        return 1


def _run_one(args):
    name, overrides, base = args
    return run_scenario(name, overrides, base)


def _print_report(rep: RunReport, stream):
    for e in rep.experiments:
        tail = f" ({e.reason})" if e.reason else ""
        print(f"{rep.scenario:32s} {e.name:24s} {e.verdict}{tail}", file=stream)


def cmd_list(_args):
    for name, anchor, summary in list_scenarios():
        print(f"{name}\n    {anchor}\n    {summary}")
    return 0


def cmd_run(args):
    overrides = dict(args.set or [])
    base = None
    if args.config:
        try:
            with open(args.config, encoding="utf-8") as fh:
                base = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise IoFailure(str(exc)) from exc
    jobs = [(n, overrides, base) for n in args.scenarios]
    for n, ov, b in jobs:  # fail fast on bad names or paths before any heavy work
        get_scenario(n).config(ov, base=b)
    workers = min(worker_count(), len(jobs))
    if workers > 1:
        with ProcessPoolExecutor(workers) as pool:
            reports = list(pool.map(_run_one, jobs))
    else:
        reports = [_run_one(j) for j in jobs]
    ok = True
    for rep in reports:
        if args.out:
            emit_plotdata(rep, args.out)
        _print_report(rep, sys.stdout)
        ok &= rep.passed
    return 0 if ok else 1


def cmd_validate(args):
    """Accepts a problem spec or a scenario config ``{"scenario": name, "config": {...}}``."""
    try:
        with open(args.path, encoding="utf-8") as fh:
            doc = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise IoFailure(str(exc)) from exc
    if isinstance(doc, dict) and "scenario" in doc:
        sc = get_scenario(doc["scenario"])
        validate_config(sc.defaults, doc.get("config", sc.defaults))
        print(f"valid scenario config for {sc.name}")
        return 0
    spec = load_spec(args.path)
    print(f"valid {spec.mode} spec: m = {spec.m}, n = {spec.ambient_dim}")
    if args.energy is not None:
        from .model import validate_assumptions

        rep = validate_assumptions(spec, args.energy)
        for c in rep.checks:
            scalars = {k: v for k, v in c.details.items() if isinstance(v, (int, float, str))}
            print(f"  {c.name:40s} {'ok' if c.passed else 'FAIL'}  {json.dumps(_jsonable(scalars))}")
        return 0 if rep.passed else 1
    return 0


def build_parser():
    p = argparse.ArgumentParser(prog="multistate", description="Multistate Schroedinger experiments.")
    sub = p.add_subparsers(dest="command", required=True)
    sub.add_parser("list", help="list built-in scenarios").set_defaults(fn=cmd_list)
    r = sub.add_parser("run", help="run one or more scenarios")
    r.add_argument("scenarios", nargs="+")
    r.add_argument("--set", action="append", type=parse_override, metavar="KEY=VALUE",
                   help="override a dotted config key (value parsed as JSON when possible)")
    r.add_argument("--config", help="JSON file replacing the scenario defaults")
    r.add_argument("--out", help="directory for CSV/JSON artifacts")
    r.set_defaults(fn=cmd_run)
    v = sub.add_parser("validate", help="validate a problem spec or scenario config file")
    v.add_argument("path")
    v.add_argument("--energy", type=float, default=None, help="also check the model assumptions at this energy")
    v.set_defaults(fn=cmd_validate)
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except MultistateError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
