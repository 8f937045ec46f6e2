"""Optimal multiplexing rate selection for minimum end-to-end distortion.

Two regimes are covered.  At asymptotically high SNR the optimal rate is the
unique intersection of the increasing source-exponent line (pT/k)*r with the
decreasing piecewise-linear diversity curve, solved exactly segment by
segment.  At large but finite SNR the two-term exponential objective

    h(r) = c_src * 2^(-(pT/k) r log2 SNR) + c_ch * 2^(-d*(r/L) log2 SNR)

is minimized; within each linear segment of the curve h is a convex sum of
exponentials of affine functions, so the per-segment stationary point has a
closed form and the global minimum is the best among interior stationary
points and segment endpoints.  No iterative search is needed in either case.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

from .tradeoff import ChannelConfig, TradeoffCurve, build_curve, eval_d

__all__ = [
    "SourceConfig",
    "ExponentSolution",
    "FiniteSnrSolution",
    "solve_high_snr",
    "solve_finite_snr",
    "distortion_terms",
    "no_delay_arq_procedure",
]


@dataclass(frozen=True)
class SourceConfig:
    """Source-side parameters: distortion norm order p and source dimension."""

    norm_order: float
    source_dim: float

    def __post_init__(self):
        if self.norm_order <= 0:
            raise ValueError("norm_order must be positive")
        if self.source_dim <= 0:
            raise ValueError("source_dim must be positive")

    def slope(self, cfg: ChannelConfig) -> float:
        """Source distortion exponent slope pT/k."""
        return self.norm_order * cfg.block_length / self.source_dim

    def matched_bits(self, cfg: ChannelConfig, r: float) -> float:
        """Bits per message when the quantizer rate matches the channel:
        s = T * r * log2(SNR)."""
        return cfg.block_length * r * math.log2(cfg.snr_linear)


@dataclass(frozen=True)
class ExponentSolution:
    """High-SNR operating point: rate r*, diversity d*(r*), exponent -d*."""

    r_star: float
    d_star: float
    distortion_exponent: float
    segment_index: int


@dataclass(frozen=True)
class FiniteSnrSolution:
    """Finite-SNR operating point and the objective decomposition at r*."""

    r_star: float
    objective: float
    source_term: float
    channel_term: float


def _segments(curve: TradeoffCurve):
    """Yield (index, x_lo, x_hi, intercept, slope) for each linear piece of
    the ARQ-scaled curve, where d(x) = intercept + slope * x on [x_lo, x_hi]."""
    knots_r, knots_d = curve.scaled_knots
    for j in range(len(knots_r) - 1):
        x_lo, x_hi = knots_r[j], knots_r[j + 1]
        slope = (knots_d[j + 1] - knots_d[j]) / (x_hi - x_lo)
        intercept = knots_d[j] - slope * x_lo
        yield j, x_lo, x_hi, intercept, slope


def _warn_if_loose(cfg: ChannelConfig) -> None:
    if not cfg.tight:
        warnings.warn(
            f"block length {cfg.block_length} < M+N-1 = "
            f"{cfg.tx_antennas + cfg.rx_antennas - 1}: the tradeoff curve is "
            "only an upper bound in this regime",
            stacklevel=3,
        )


def solve_high_snr(
    curve: TradeoffCurve, src: SourceConfig, cfg: ChannelConfig
) -> ExponentSolution:
    """Closed-form high-SNR optimum: solve d*(r/L) = (pT/k) r per segment.

    The intersection always exists and is unique: the left side decreases
    from MN to 0 over the domain while the right side increases from 0, so
    the solution is interior (never full diversity or full multiplexing).
    """
    _warn_if_loose(cfg)
    a = src.slope(cfg)
    for j, x_lo, x_hi, intercept, slope in _segments(curve):
        # a*x = intercept + slope*x, with a > 0 >= slope
        x = intercept / (a - slope)
        if x_lo <= x <= x_hi:
            d = a * x
            return ExponentSolution(
                r_star=float(x),
                d_star=float(d),
                distortion_exponent=float(-d),
                segment_index=j,
            )
    raise AssertionError("no intersection found; curve invariants violated")


def distortion_terms(
    r: float,
    curve: TradeoffCurve,
    src: SourceConfig,
    cfg: ChannelConfig,
    c_src: float = 1.0,
    c_ch: float = 1.0,
) -> tuple[float, float]:
    """Source and channel addends of the finite-SNR objective at rate r.

    The multiplicative constants (c_src, c_ch) default to 1, which replicates
    the high-SNR regime where the O(1) terms are neglected.
    """
    if cfg.snr_linear <= 1.0:
        raise ValueError("snr_linear must exceed 1 (log2 SNR > 0)")
    c = math.log2(cfg.snr_linear)
    source = c_src * 2.0 ** (-src.slope(cfg) * r * c)
    channel = c_ch * 2.0 ** (-eval_d(curve, r) * c)
    return source, channel


def solve_finite_snr(
    curve: TradeoffCurve,
    src: SourceConfig,
    cfg: ChannelConfig,
    c_src: float = 1.0,
    c_ch: float = 1.0,
) -> FiniteSnrSolution:
    """Minimize the two-term exponential distortion objective over the curve
    domain.  Candidates are the per-segment interior stationary points (closed
    form) plus every vertex, which covers the non-differentiable knots."""
    if cfg.snr_linear <= 1.0:
        raise ValueError("snr_linear must exceed 1 (log2 SNR > 0)")
    _warn_if_loose(cfg)
    a = src.slope(cfg)
    c = math.log2(cfg.snr_linear)

    knots_r, _ = curve.scaled_knots
    candidates = list(knots_r)
    for _, x_lo, x_hi, intercept, slope in _segments(curve):
        # Stationary point of c_src*2^{-a c x} + c_ch*2^{-(intercept+slope x) c}:
        #   c_src * a * 2^{-a c x} = c_ch * (-slope) * 2^{-(intercept+slope x) c}
        if slope >= 0:  # cannot happen for a valid curve, but keep the guard
            continue
        x = (math.log2(c_ch * -slope) - math.log2(c_src * a) - intercept * c) / (
            c * (slope - a)
        )
        if x_lo < x < x_hi:
            candidates.append(x)

    best = None
    for x in candidates:
        s_term, c_term = distortion_terms(x, curve, src, cfg, c_src, c_ch)
        h = s_term + c_term
        if best is None or h < best[1]:
            best = (x, h, s_term, c_term)
    return FiniteSnrSolution(
        r_star=float(best[0]),
        objective=float(best[1]),
        source_term=float(best[2]),
        channel_term=float(best[3]),
    )


def no_delay_arq_procedure(
    cfg: ChannelConfig, src: SourceConfig, max_window: int
) -> ExponentSolution:
    """Distortion-minimizing procedure for ARQ without a delay constraint:
    use the largest window, form d*(r, L) = d*(r/L), and solve the high-SNR
    balance equation on the enhanced curve."""
    if int(max_window) != max_window or max_window < 1:
        raise ValueError("max_window must be a positive integer")
    curve = build_curve(cfg, arq_window=int(max_window))
    return solve_high_snr(curve, src, cfg)
