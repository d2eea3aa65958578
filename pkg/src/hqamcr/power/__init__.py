"""Optimal power control for HQAM transmission under sensing errors."""
from .dual import DEFAULT_P_MAX, optimize_avg_avg, optimize_imperfect_csi, optimize_peak_avg
from .inner import decision_rhs, inner_powers
from .kkt import BracketError, kkt_lhs, log_kkt_lhs, solve_p_star
from .lambertw import approx_lambertw, lambertw_power
from .statistical import boundary_p1, optimize_statistical
from .types import (
    Constraints,
    DualState,
    InfeasibleError,
    NonConvergenceError,
    PowerPolicy,
    SampleSet,
    TraceRow,
)

__all__ = [
    "Constraints",
    "DualState",
    "SampleSet",
    "PowerPolicy",
    "TraceRow",
    "NonConvergenceError",
    "InfeasibleError",
    "BracketError",
    "DEFAULT_P_MAX",
    "kkt_lhs",
    "log_kkt_lhs",
    "solve_p_star",
    "decision_rhs",
    "inner_powers",
    "lambertw_power",
    "approx_lambertw",
    "optimize_peak_avg",
    "optimize_avg_avg",
    "optimize_imperfect_csi",
    "optimize_statistical",
    "boundary_p1",
]
