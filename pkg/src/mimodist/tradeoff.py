"""Optimal diversity-multiplexing tradeoff curves for MIMO block-fading channels.

The tradeoff curve is stored as an explicit vertex list rather than a closed
form so that the same evaluator serves the plain curve, the ARQ-scaled curve
(window ``L`` stretches the multiplexing axis by ``L``), and any empirical
curve a caller may want to substitute.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "ChannelConfig",
    "TradeoffCurve",
    "build_curve",
    "eval_d",
    "short_term_exponent",
]


@dataclass(frozen=True)
class ChannelConfig:
    """MIMO channel parameters: antenna counts, block length, operating SNR."""

    tx_antennas: int
    rx_antennas: int
    block_length: int
    snr_db: float = 10.0

    def __post_init__(self):
        for name in ("tx_antennas", "rx_antennas", "block_length"):
            value = getattr(self, name)
            if int(value) != value or value < 1:
                raise ValueError(f"{name} must be a positive integer, got {value!r}")

    @property
    def snr_linear(self) -> float:
        return 10.0 ** (self.snr_db / 10.0)

    @property
    def max_multiplexing(self) -> int:
        return min(self.tx_antennas, self.rx_antennas)

    @property
    def tight(self) -> bool:
        """True iff the block length is long enough for the curve to be exact.

        Requires T >= M + N - 1.  When False the curve is still a valid upper
        bound; optimizers warn and proceed.
        """
        return self.block_length >= self.tx_antennas + self.rx_antennas - 1


@dataclass(frozen=True)
class TradeoffCurve:
    """Piecewise-linear diversity curve through (i, (M-i)(N-i)).

    ``arq_window`` scales the evaluation domain to [0, L*min(M,N)] via the
    substitution r -> r/L.  ``arq_window=1`` is the plain no-ARQ curve.
    """

    vertices: tuple[tuple[float, float], ...]
    arq_window: int = 1

    def __post_init__(self):
        if int(self.arq_window) != self.arq_window or self.arq_window < 1:
            raise ValueError(f"arq_window must be a positive integer, got {self.arq_window!r}")
        if len(self.vertices) < 2:
            raise ValueError("curve needs at least two vertices")
        d = [v[1] for v in self.vertices]
        if any(b >= a for a, b in zip(d, d[1:])):
            raise ValueError("diversity values must be strictly decreasing")
        if d[-1] != 0.0:
            raise ValueError("curve must reach zero diversity at full multiplexing")
        slopes = np.diff(d) / np.diff([v[0] for v in self.vertices])
        if np.any(np.diff(slopes) < 0):
            raise ValueError("curve must be convex (segment slopes non-decreasing)")

    @property
    def max_rate(self) -> float:
        """Upper end of the evaluation domain, L * min(M, N)."""
        return self.arq_window * self.vertices[-1][0]

    @property
    def scaled_knots(self) -> tuple[np.ndarray, np.ndarray]:
        """Vertex positions in the ARQ-scaled domain and their diversity values."""
        r = np.array([v[0] for v in self.vertices]) * self.arq_window
        d = np.array([v[1] for v in self.vertices])
        return r, d

    def with_window(self, arq_window: int) -> "TradeoffCurve":
        return TradeoffCurve(self.vertices, arq_window)


def build_curve(cfg: ChannelConfig, arq_window: int = 1) -> TradeoffCurve:
    """Build the optimal tradeoff curve for the given channel.

    Vertices are (i, (M-i)(N-i)) for integer i in [0, min(M, N)].
    """
    m, n = cfg.tx_antennas, cfg.rx_antennas
    vertices = tuple(
        (float(i), float((m - i) * (n - i))) for i in range(min(m, n) + 1)
    )
    return TradeoffCurve(vertices, arq_window)


def eval_d(curve: TradeoffCurve, r):
    """Evaluate d*(r/L) by linear interpolation of the vertex list.

    Accepts a scalar or array of multiplexing gains.  Values outside
    [0, L*min(M,N)] are a hard error rather than being clamped: the ARQ-scaled
    curve is only defined on that domain and silent clamping would corrupt
    optimizer results.
    """
    r_arr = np.asarray(r, dtype=float)
    if np.any(r_arr < 0) or np.any(r_arr > curve.max_rate):
        raise ValueError(
            f"multiplexing gain out of domain [0, {curve.max_rate}]: {r!r}"
        )
    knots_r, knots_d = curve.scaled_knots
    out = np.interp(r_arr, knots_r, knots_d)
    return out if out.ndim else float(out)


def short_term_exponent(curve: TradeoffCurve, r):
    """Diversity under the short-term static fading model: L * d*(r/L).

    Provided as an option; the long-term static model (``eval_d``) is the
    default everywhere else.
    """
    return curve.arq_window * eval_d(curve, r)
