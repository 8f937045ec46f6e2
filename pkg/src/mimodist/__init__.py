"""mimodist: optimal operating points on the MIMO diversity-multiplexing-delay
tradeoff for minimum end-to-end distortion.

Layers, bottom to top:

  tradeoff  - the piecewise-linear optimal diversity curve d*(r) and its
              ARQ-scaled form d*(r/L)
  exponent  - closed-form rate selection, high-SNR and finite-SNR
  video     - progressive-video distortion model and antenna assignment
  lp        - self-contained two-phase revised simplex solver
  mdp       - delay-constrained ARQ rate adaptation as an average-reward MDP
  sim       - Monte-Carlo validation of the MDP model
  cli       - `mimodist` command-line front end
"""

from .exponent import (
    ExponentSolution,
    FiniteSnrSolution,
    SourceConfig,
    distortion_terms,
    no_delay_arq_procedure,
    solve_finite_snr,
    solve_high_snr,
)
from .lp import LpNumericalError, LpProblem, LpSolution, LpStatus, solve
from .mdp import (
    Action,
    ArqConfig,
    MdpModel,
    MdpState,
    Policy,
    bellman_residuals,
    build_mdp,
    cumulative_decode_prob,
    decode_prob,
    evaluate_policy,
    extract_policy,
    static_policy,
    stationary_report,
    to_lp,
)
from .sim import SimConfig, SimReport, run
from .tradeoff import (
    ChannelConfig,
    TradeoffCurve,
    build_curve,
    eval_d,
    short_term_exponent,
)
from .video import (
    CodeErrorTable,
    ParametricRd,
    RdTable,
    VideoSourceModel,
    channel_distortion,
    optimize_antennas,
)

__version__ = "0.1.0"

__all__ = [
    "Action",
    "ArqConfig",
    "ChannelConfig",
    "CodeErrorTable",
    "ExponentSolution",
    "FiniteSnrSolution",
    "LpNumericalError",
    "LpProblem",
    "LpSolution",
    "LpStatus",
    "MdpModel",
    "MdpState",
    "ParametricRd",
    "Policy",
    "RdTable",
    "SimConfig",
    "SimReport",
    "SourceConfig",
    "TradeoffCurve",
    "VideoSourceModel",
    "bellman_residuals",
    "build_curve",
    "build_mdp",
    "channel_distortion",
    "cumulative_decode_prob",
    "decode_prob",
    "distortion_terms",
    "eval_d",
    "evaluate_policy",
    "extract_policy",
    "no_delay_arq_procedure",
    "optimize_antennas",
    "run",
    "short_term_exponent",
    "solve",
    "solve_finite_snr",
    "solve_high_snr",
    "static_policy",
    "stationary_report",
    "to_lp",
]
