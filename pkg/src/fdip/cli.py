"""Command-line front end: plan, simulate, verify, report, sweep.

Exit codes: 0 success, 2 invalid input, 3 infeasible plan or failed
verification, 4 an internal limit was hit.
"""

from __future__ import annotations

import argparse
import logging
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path as FsPath
from typing import Any, Sequence

from .ledger import utilization
from .network import NetworkError
from .planner import AssignmentError, OracleCapExceeded, build_candidates, from_document, plan, validate
from .planner.simplex import UnboundedLP
from .report import ReportError, aggregate, flow_rows, read_csv, read_json, write_csv, write_json
from .scenario import Scenario, ScenarioError, load_scenario
from .sim import SimulationError, run as simulate_run, verify_against_bounds
from .timing import LadderError

EXIT_OK, EXIT_INPUT, EXIT_FAILED, EXIT_LIMIT = 0, 2, 3, 4

log = logging.getLogger("fdip")


class CliError(Exception):
    def __init__(self, message: str, code: int):
        super().__init__(message)
        self.code = code


def _overrides(args: argparse.Namespace) -> dict[str, Any]:
    out = getattr(args, "out", None)
    return {
        "seed": getattr(args, "seed", None),
        "output": str(FsPath(out).resolve()) if out else None,
        "planner.mode": getattr(args, "mode", None),
        "planner.hop_limit": getattr(args, "hop_limit", None),
        "traffic.be_load": getattr(args, "be_load", None),
        "traffic.horizon": getattr(args, "horizon", None),
        "traffic.trace": True if getattr(args, "trace", False) else None,
    }


def _scenario(args: argparse.Namespace, extra: dict[str, Any] | None = None) -> Scenario:
    return load_scenario(args.scenario, {**_overrides(args), **(extra or {})})


# -- commands -------------------------------------------------------------------------

def do_plan(sc: Scenario) -> dict[str, Any]:
    cfg = sc.planner
    cands = build_candidates(sc.ladder, sc.net, sc.demands, cfg.hop_limit, cfg.paths_per_demand)
    result = plan(cands, sc.ladder, sc.net, cfg)
    if validate(result, sc.net, sc.ladder):
        raise CliError("planner returned an over-committed plan", EXIT_FAILED)
    sc.out.mkdir(parents=True, exist_ok=True)
    doc = result.to_document(sc.demands)
    doc["scenario_hash"] = sc.plan_hash
    write_json(sc.out / "assignment.json", doc)
    stats = {
        **{k: v for k, v in result.stats.items() if k != "incumbents"},
        "incumbents": list(result.stats.get("incumbents", [])),
        "mode": cfg.mode, "objective": result.objective, "demands": len(sc.demands),
        "candidates": len(cands), "hop_limit": cfg.hop_limit,
        "multipliers": list(sc.ladder.multipliers), "delta0_ns": sc.ladder.delta0,
        "hypercycle_ns": sc.ladder.hypercycle, "scenario_hash": sc.plan_hash,
    }
    write_json(sc.out / "plan_stats.json", stats)
    write_csv(sc.out / "utilization.csv", "utilization", utilization(result.ledger(sc.ladder), sc.net, sc.ladder))
    return stats


def _load_assignment(sc: Scenario, path: FsPath | None):
    path = path or sc.out / "assignment.json"
    doc = read_json(path)
    if doc.get("scenario_hash") != sc.plan_hash:
        raise CliError(f"{path} was planned for a different scenario (hash mismatch)", EXIT_INPUT)
    return from_document(doc, sc.demands, sc.net, sc.ladder)


def do_simulate(sc: Scenario, assignment_path: FsPath | None = None) -> dict[str, Any]:
    assignment = _load_assignment(sc, assignment_path)
    result = simulate_run(sc.ladder, sc.net, assignment, sc.traffic)
    report = verify_against_bounds(result, assignment)
    sc.out.mkdir(parents=True, exist_ok=True)
    write_csv(sc.out / "flow_stats.csv", "flow_stats", flow_rows(result, assignment, sc.ladder))
    be = sc.traffic.be_load
    verdict = {
        **report.as_dict(),
        "be_load": be if isinstance(be, float | int) else None,
        "seed": sc.traffic.seed, "horizon": sc.traffic.horizon,
        "trace_hash": result.trace_hash, "events": result.events,
        "be_delivered_bits": result.be_delivered_bits,
    }
    write_json(sc.out / "verification.json", verdict)
    if result.trace is not None:
        with open(sc.out / "trace.csv", "w", encoding="utf-8") as fh:
            fh.write("time_ns,node,event,flow,bits\n")
            for t, node, event, flow, bits in result.trace:
                fh.write(f"{float(t)!r},{node},{event},{flow},{bits}\n")
    return verdict


def do_verify(sc: Scenario, assignment_path: FsPath | None = None) -> dict[str, Any]:
    """Re-check a run directory: the plan against capacity and QoS, and
    recorded flow statistics (if any) against the plan's bounds."""
    assignment = _load_assignment(sc, assignment_path)
    problems = [f"capacity exceeded on {v.link} group {v.group} cycle {v.cycle} by {float(v.excess)} bits"
                for v in validate(assignment, sc.net, sc.ladder)]
    fs = sc.out / "flow_stats.csv"
    checked = 0
    if fs.exists():
        rows = {r["flow"]: r for r in read_csv(fs, "flow_stats")}
        for did, cand in sorted(assignment.accepted.items()):
            row = rows.get(did)
            if row is None:
                problems.append(f"{did}: missing from {fs.name}")
                continue
            checked += 1
            if row["dropped"]:
                problems.append(f"{did}: {row['dropped']} dropped")
            if row["max_delay_ns"] is not None and row["max_delay_ns"] > cand.schedule.e2e_bound:
                problems.append(f"{did}: max delay {row['max_delay_ns']} > {cand.schedule.e2e_bound}")
            if row["jitter_ns"] > cand.schedule.jitter_bound:
                problems.append(f"{did}: jitter {row['jitter_ns']} > {cand.schedule.jitter_bound}")
    return {"passed": not problems, "problems": problems, "flows_checked": checked,
            "accepted": assignment.objective}


# -- sweep ----------------------------------------------------------------------------

SWEEP_PARAMS = {
    "be-load": ("traffic.be_load", float),
    "hop-limit": ("planner.hop_limit", int),
    "multipliers": ("ladder.multipliers", lambda v: [int(k) for k in v.split(",")]),
    "seed": ("seed", int),
}


def _sweep_point(scenario: str, base: dict[str, Any], key: str, value: Any, out: str,
                 simulate: bool) -> tuple[int, dict[str, Any]]:
    """Run one isolated point; returns (exit code, summary)."""
    overrides = dict(base)
    overrides["output"] = out
    overrides[key] = value
    try:
        sc = load_scenario(scenario, overrides)
        stats = do_plan(sc)
        summary = {"objective": stats["objective"]}
        if simulate:
            verdict = do_simulate(sc)
            summary["passed"] = verdict["passed"]
            if not verdict["passed"]:
                return EXIT_FAILED, summary
        return EXIT_OK, summary
    except Exception as exc:  # reported by the parent; one bad point must not hide the others
        return _exit_code(exc), {"error": str(exc)}


def do_sweep(args: argparse.Namespace) -> int:
    key, conv = SWEEP_PARAMS[args.param]
    values = [conv(v) for v in args.values]
    base = {k: v for k, v in _overrides(args).items() if k != "output" and v is not None}
    out = FsPath(args.out or "sweep").resolve()
    out.mkdir(parents=True, exist_ok=True)
    simulate = args.simulate or args.param == "be-load"
    jobs = []
    for raw, value in zip(args.values, values):
        point = out / f"{args.param}={raw}"
        jobs.append((args.scenario, base, key, value, str(point), simulate))
    if args.workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=args.workers) as pool:
            results = list(pool.map(_sweep_point, *zip(*jobs)))
    else:
        results = [_sweep_point(*job) for job in jobs]
    worst = EXIT_OK
    for (raw, (code, summary)) in zip(args.values, results):
        print(f"{args.param}={raw}: " + ", ".join(f"{k}={v}" for k, v in summary.items()))
        worst = max(worst, code)
    if worst in (EXIT_OK, EXIT_FAILED):
        aggregate([out], out)
    return worst


# -- entry point ----------------------------------------------------------------------

def _exit_code(exc: BaseException) -> int:
    if isinstance(exc, CliError):
        return exc.code
    if isinstance(exc, (ScenarioError, NetworkError, LadderError, AssignmentError, ReportError, SimulationError)):
        return EXIT_INPUT
    if isinstance(exc, (OracleCapExceeded, UnboundedLP, RecursionError)):
        return EXIT_LIMIT
    if isinstance(exc, RuntimeError) and "iteration limit" in str(exc):
        return EXIT_LIMIT
    raise exc


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="fdip", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, planner=True, traffic=False):
        sp.add_argument("--scenario", required=True, help="scenario YAML file")
        sp.add_argument("--seed", type=int)
        sp.add_argument("--out", help="output directory (overrides the scenario)")
        if planner:
            sp.add_argument("--mode", choices=("bnb", "greedy", "oracle"))
            sp.add_argument("--hop-limit", type=int)
        if traffic:
            sp.add_argument("--be-load", type=float)
            sp.add_argument("--horizon", type=int, help="hypercycles to simulate (first is warm-up)")
            sp.add_argument("--trace", action="store_true", help="write a per-packet trace.csv")

    common(sub.add_parser("plan", help="choose paths and groups for the demands"))
    sp = sub.add_parser("simulate", help="replay a plan and verify it against its bounds")
    common(sp, traffic=True)
    sp.add_argument("--assignment", type=FsPath)
    sp = sub.add_parser("verify", help="re-check a run directory")
    common(sp)
    sp.add_argument("--assignment", type=FsPath)
    sp = sub.add_parser("report", help="aggregate run directories into comparison tables")
    sp.add_argument("runs", nargs="+", type=FsPath)
    sp.add_argument("--out", type=FsPath)
    sp = sub.add_parser("sweep", help="run one scenario over several parameter values")
    common(sp, traffic=True)
    sp.add_argument("--param", required=True, choices=sorted(SWEEP_PARAMS))
    sp.add_argument("--values", required=True, nargs="+")
    sp.add_argument("--simulate", action="store_true", help="also simulate each point")
    sp.add_argument("--workers", type=int, default=1)
    return p


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.command == "plan":
            stats = do_plan(_scenario(args))
            gap = f" (node budget hit, gap {stats['gap']})" if not stats.get("exhausted", True) else ""
            print(f"objective {stats['objective']}/{stats['demands']}{gap}")
            return EXIT_OK
        if args.command == "simulate":
            verdict = do_simulate(_scenario(args), args.assignment)
            print(f"verification {'passed' if verdict['passed'] else 'FAILED'} for {verdict['flows']} flows")
            for f in verdict["failures"]:
                print(f"  {f['flow']}: {'; '.join(f['reasons'])}")
            return EXIT_OK if verdict["passed"] else EXIT_FAILED
        if args.command == "verify":
            res = do_verify(_scenario(args), args.assignment)
            print(f"verify {'passed' if res['passed'] else 'FAILED'}: "
                  f"{res['accepted']} accepted, {res['flows_checked']} flow records checked")
            for msg in res["problems"]:
                print(f"  {msg}")
            return EXIT_OK if res["passed"] else EXIT_FAILED
        if args.command == "report":
            out = args.out or args.runs[0]
            tables = aggregate(args.runs, out)
            for row in tables["comparison"]:
                print(f"H={row['hop_limit']}: DIP {row['dip_objective']} vs FDIP {row['fdip_objective']}")
            return EXIT_OK
        if args.command == "sweep":
            return do_sweep(args)
    except Exception as exc:
        code = _exit_code(exc)
        print(f"fdip {args.command}: {exc}", file=sys.stderr)
        return code
    return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
