"""CSV artifacts: fixed schemas, a typed loader, and cross-run aggregation."""

from __future__ import annotations

import csv
import json
from pathlib import Path as FsPath
from typing import Any, Callable, Iterable, Mapping, Sequence

import numpy as np


class ReportError(ValueError):
    pass


def _opt_float(text: str) -> float | None:
    return float(text) if text != "" else None


def _opt_int(text: str) -> int | None:
    return int(text) if text != "" else None


def _bool(text: str) -> bool:
    if text not in ("true", "false"):
        raise ValueError(f"expected true/false, got {text!r}")
    return text == "true"


Column = tuple[str, Callable[[str], Any]]

SCHEMAS: dict[str, list[Column]] = {
    "flow_stats": [
        ("flow", str), ("group", int), ("cycle_ns", int), ("path", str),
        ("delivered", int), ("dropped", int),
        ("min_delay_ns", _opt_float), ("mean_delay_ns", _opt_float), ("p50_delay_ns", _opt_float),
        ("p99_delay_ns", _opt_float), ("max_delay_ns", _opt_float), ("jitter_ns", float),
        ("e2e_bound_ns", int), ("jitter_bound_ns", int), ("violations", int), ("schedule_mismatches", int),
    ],
    "utilization": [
        ("src", str), ("dst", str), ("group", int), ("max_fill", float), ("mean_fill", float),
    ],
    "throughput": [
        ("run", str), ("groups", int), ("multipliers", str), ("hop_limit", int), ("mode", str),
        ("demands", int), ("objective", int), ("acceptance_ratio", float),
        ("nodes_explored", int), ("gap", int), ("exhausted", _bool),
    ],
    "comparison": [
        ("hop_limit", int), ("dip_run", str), ("dip_objective", _opt_int),
        ("fdip_run", str), ("fdip_groups", _opt_int), ("fdip_objective", _opt_int), ("advantage", _opt_int),
    ],
    "latency": [
        ("run", str), ("be_load", _opt_float), ("flow", str), ("group", int), ("cycle_ns", int),
        ("max_delay_ns", _opt_float), ("p50_delay_ns", _opt_float), ("p99_delay_ns", _opt_float),
        ("jitter_ns", float), ("e2e_bound_ns", int), ("dropped", int),
    ],
}


def _cell(value: Any) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def write_csv(path: str | FsPath, schema: str, rows: Iterable[Mapping[str, Any]]) -> None:
    cols = [name for name, _ in SCHEMAS[schema]]
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(cols)
        for row in rows:
            w.writerow([_cell(row.get(c)) for c in cols])


def read_csv(path: str | FsPath, schema: str) -> list[dict[str, Any]]:
    """Load a CSV written by :func:`write_csv`, checking header and types."""
    cols = SCHEMAS[schema]
    try:
        with open(path, newline="", encoding="utf-8") as fh:
            reader = csv.reader(fh)
            header = next(reader, None)
            if header != [name for name, _ in cols]:
                raise ReportError(f"{path}: header {header} does not match the {schema} schema")
            out = []
            for lineno, raw in enumerate(reader, start=2):
                if len(raw) != len(cols):
                    raise ReportError(f"{path}:{lineno}: expected {len(cols)} fields, got {len(raw)}")
                try:
                    out.append({name: conv(v) for (name, conv), v in zip(cols, raw)})
                except ValueError as exc:
                    raise ReportError(f"{path}:{lineno}: {exc}") from exc
            return out
    except OSError as exc:
        raise ReportError(f"cannot read {path}: {exc.strerror or exc}") from exc
    except (csv.Error, UnicodeDecodeError) as exc:
        raise ReportError(f"{path}: {exc}") from exc


def write_json(path: str | FsPath, doc: Any) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, sort_keys=True, indent=2)
        fh.write("\n")


def read_json(path: str | FsPath) -> Any:
    try:
        with open(path, encoding="utf-8") as fh:
            return json.load(fh)
    except OSError as exc:
        raise ReportError(f"cannot read {path}: {exc.strerror or exc}") from exc
    except (json.JSONDecodeError, UnicodeDecodeError) as exc:
        raise ReportError(f"{path} is corrupt: {exc}") from exc


def flow_rows(result, assignment, ladder) -> list[dict[str, Any]]:
    """One flow_stats row per accepted demand, in demand-id order."""
    rows = []
    for did in sorted(assignment.accepted):
        cand = assignment.accepted[did]
        st = result.flows[did]
        samples = np.array([float(s) for s in st.samples]) if st.samples else None
        rows.append({
            "flow": did, "group": cand.group, "cycle_ns": ladder.length(cand.group),
            "path": str(cand.path), "delivered": st.delivered, "dropped": st.dropped,
            "min_delay_ns": float(st.min_delay) if st.min_delay is not None else None,
            "mean_delay_ns": float(st.mean_delay) if st.mean_delay is not None else None,
            "p50_delay_ns": float(np.percentile(samples, 50)) if samples is not None else None,
            "p99_delay_ns": float(np.percentile(samples, 99)) if samples is not None else None,
            "max_delay_ns": float(st.max_delay) if st.max_delay is not None else None,
            "jitter_ns": float(st.jitter),
            "e2e_bound_ns": cand.schedule.e2e_bound, "jitter_bound_ns": cand.schedule.jitter_bound,
            "violations": st.violations, "schedule_mismatches": st.schedule_mismatches,
        })
    return rows


def find_runs(roots: Sequence[str | FsPath]) -> list[FsPath]:
    runs: list[FsPath] = []
    for root in roots:
        root = FsPath(root)
        if not root.is_dir():
            raise ReportError(f"{root} is not a directory")
        runs.extend(p.parent for p in root.rglob("plan_stats.json"))
    runs = sorted(set(runs))
    if not runs:
        raise ReportError(f"no runs (plan_stats.json) found under {', '.join(map(str, roots))}")
    return runs


def _label(run: FsPath, roots: Sequence[FsPath]) -> str:
    for root in roots:
        try:
            rel = run.relative_to(root)
            return str(rel) if str(rel) != "." else run.name
        except ValueError:
            continue
    return str(run)


def aggregate(roots: Sequence[str | FsPath], out: str | FsPath) -> dict[str, list[dict[str, Any]]]:
    """Collect every run under ``roots`` into throughput, comparison and latency tables."""
    roots = [FsPath(r) for r in roots]
    runs = find_runs(roots)
    throughput, latency = [], []
    for run in runs:
        stats = read_json(run / "plan_stats.json")
        try:
            label = _label(run, roots)
            throughput.append({
                "run": label, "groups": len(stats["multipliers"]),
                "multipliers": "-".join(str(k) for k in stats["multipliers"]),
                "hop_limit": int(stats["hop_limit"]), "mode": stats["mode"],
                "demands": int(stats["demands"]), "objective": int(stats["objective"]),
                "acceptance_ratio": stats["objective"] / stats["demands"] if stats["demands"] else 0.0,
                "nodes_explored": int(stats.get("nodes_explored", 0)), "gap": int(stats.get("gap", 0)),
                "exhausted": bool(stats.get("exhausted", True)),
            })
        except (KeyError, TypeError) as exc:
            raise ReportError(f"{run / 'plan_stats.json'} is missing field {exc}") from exc
        fs = run / "flow_stats.csv"
        if fs.exists():
            be = None
            ver = run / "verification.json"
            if ver.exists():
                be = read_json(ver).get("be_load")
            for row in read_csv(fs, "flow_stats"):
                latency.append({
                    "run": label, "be_load": be, "flow": row["flow"], "group": row["group"],
                    "cycle_ns": row["cycle_ns"], "max_delay_ns": row["max_delay_ns"],
                    "p50_delay_ns": row["p50_delay_ns"], "p99_delay_ns": row["p99_delay_ns"],
                    "jitter_ns": row["jitter_ns"], "e2e_bound_ns": row["e2e_bound_ns"], "dropped": row["dropped"],
                })

    comparison = []
    for h in sorted({r["hop_limit"] for r in throughput}):
        at_h = [r for r in throughput if r["hop_limit"] == h]
        dip = max((r for r in at_h if r["groups"] == 1), key=lambda r: (r["objective"], r["run"]), default=None)
        fdip = max((r for r in at_h if r["groups"] > 1), key=lambda r: (r["objective"], r["run"]), default=None)
        comparison.append({
            "hop_limit": h,
            "dip_run": dip["run"] if dip else "", "dip_objective": dip["objective"] if dip else None,
            "fdip_run": fdip["run"] if fdip else "", "fdip_groups": fdip["groups"] if fdip else None,
            "fdip_objective": fdip["objective"] if fdip else None,
            "advantage": fdip["objective"] - dip["objective"] if dip and fdip else None,
        })

    out = FsPath(out)
    out.mkdir(parents=True, exist_ok=True)
    tables = {"throughput": throughput, "comparison": comparison, "latency": latency}
    for name, rows in tables.items():
        write_csv(out / f"{name}.csv", name, rows)
    return tables
