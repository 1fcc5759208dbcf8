from .background import Burst, TrafficConfig, inject_background
from .engine import FlowStats, SimResult, SimulationError, run, ts_samples
from .verify import VerificationReport, verify_against_bounds

__all__ = [
    "Burst", "FlowStats", "SimResult", "SimulationError", "TrafficConfig",
    "VerificationReport", "inject_background", "run", "ts_samples", "verify_against_bounds",
]
