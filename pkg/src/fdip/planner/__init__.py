from .assignment import Assignment, AssignmentError, from_document, validate
from .baselines import OracleCapExceeded, brute_force_oracle, greedy_baseline
from .bnb import PlannerConfig, SearchStats, branch_and_bound
from .candidates import Candidate, build_candidates, priority
from .relaxation import INFEASIBLE, solve_relaxation
from .simplex import simplex_max


def plan(candidates, ladder, net, config: PlannerConfig | None = None) -> Assignment:
    """Dispatch on ``config.mode``."""
    cfg = config or PlannerConfig()
    if cfg.mode == "bnb":
        return branch_and_bound(candidates, ladder, net, cfg)
    if cfg.mode == "greedy":
        return greedy_baseline(candidates, ladder, net, cfg.weights)
    if cfg.mode == "oracle":
        return brute_force_oracle(candidates, ladder, net, cap=cfg.oracle_cap) or Assignment()
    raise ValueError(f"unknown planner mode {cfg.mode!r}")

__all__ = [
    "Assignment", "AssignmentError", "Candidate", "INFEASIBLE", "OracleCapExceeded",
    "PlannerConfig", "SearchStats", "branch_and_bound", "brute_force_oracle",
    "build_candidates", "from_document", "greedy_baseline", "plan", "priority",
    "simplex_max", "solve_relaxation", "validate",
]
