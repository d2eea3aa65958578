"""Hierarchical 16-QAM over a cognitive radio link: error rates under
imperfect spectrum sensing, optimal power control and packet-level image
transmission."""
from .ber import (
    ber_hp_instant,
    ber_hp_nakagami,
    ber_integer_m,
    ber_lp_instant,
    ber_lp_nakagami,
    ber_lp_upper_instant,
    weighted_objective,
)
from .channel import ChannelEnv, FadingSpec, SensingModel
from .linksim import GrayImage, SessionReport, run_session, synthetic_image
from .modem import build_constellation, map_detect, monte_carlo_ber
from .power import (
    Constraints,
    PowerPolicy,
    SampleSet,
    optimize_avg_avg,
    optimize_imperfect_csi,
    optimize_peak_avg,
    optimize_statistical,
)

__version__ = "0.1.0"

__all__ = [
    "SensingModel",
    "FadingSpec",
    "ChannelEnv",
    "build_constellation",
    "map_detect",
    "monte_carlo_ber",
    "ber_hp_instant",
    "ber_lp_instant",
    "ber_lp_upper_instant",
    "ber_hp_nakagami",
    "ber_lp_nakagami",
    "ber_integer_m",
    "weighted_objective",
    "Constraints",
    "SampleSet",
    "PowerPolicy",
    "optimize_peak_avg",
    "optimize_avg_avg",
    "optimize_imperfect_csi",
    "optimize_statistical",
    "GrayImage",
    "SessionReport",
    "synthetic_image",
    "run_session",
]
