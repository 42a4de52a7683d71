"""Radio resource management for mmWave hybrid-beamforming downlinks.

Joint beam selection, user selection, power distribution and MCS selection per
mega block, with an exact offline planner, low-complexity online schedulers and
a seeded Monte-Carlo harness.
"""
from .beamforming import (BeamAssignment, Codebook, EffectiveChannelTensor, PrecodedChannels,
                          beam_align, build_codebook, effective_channels, ndbf_channels, zf_precode)
from .channel import ChannelConfig, ChannelRealization, GeometryConfig, channel_matrix, draw_realization
from .errors import CapacityError, ConfigError, DegenerateSetError
from .harness import ExperimentConfig, MetricsReport, export, gm, run_experiment, run_realization
from .link import McsTable, RateApprox, rate_approx, rate_discrete, select_mcs, sinr
from .offline import OfflinePlanner, SetSpace, enumerate_sets, solve_epd, solve_no_conb, solve_opd
from .online import (RrState, UeCoefficients, run_benchmark_mb, run_heuristic_mb, select_beams,
                     select_users, ue_coefficients)
from .plan import Dbf, MbPlan, PfState, PrbBudget, pf_update
from .power import (PdSolution, estimate_interference, iawf, solve_p1_ndbf, solve_p1_zf,
                    waterfill)

__all__ = [
    "BeamAssignment", "Codebook", "EffectiveChannelTensor", "PrecodedChannels", "beam_align",
    "build_codebook", "effective_channels", "ndbf_channels", "zf_precode", "ChannelConfig",
    "ChannelRealization", "GeometryConfig", "channel_matrix", "draw_realization", "CapacityError",
    "ConfigError", "DegenerateSetError", "ExperimentConfig", "MetricsReport", "export", "gm",
    "run_experiment", "run_realization", "McsTable", "RateApprox", "rate_approx", "rate_discrete",
    "select_mcs", "sinr", "OfflinePlanner", "SetSpace", "enumerate_sets", "solve_epd",
    "solve_no_conb", "solve_opd", "RrState", "UeCoefficients", "run_benchmark_mb",
    "run_heuristic_mb", "select_beams", "select_users", "ue_coefficients", "Dbf", "MbPlan",
    "PfState", "PrbBudget", "pf_update", "PdSolution", "estimate_interference", "iawf",
    "solve_p1_ndbf", "solve_p1_zf", "waterfill",
]

__version__ = "0.1.0"
