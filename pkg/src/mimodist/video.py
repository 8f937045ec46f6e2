"""End-to-end distortion minimization for progressive video over space-time codes.

Total distortion splits into an encoder term D_e(rate) and a channel term
D_c driven by the codeword error probability.  The encoder curve is user
data (a monotone rate-distortion table or the standard parametric form
D0 + theta/(R - R0)); the error probability is a table keyed by the number
of multiplexing antennas and the SNR.  The antenna assignment is an integer
program over at most a handful of choices, solved by exhaustive enumeration.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

__all__ = [
    "RdTable",
    "ParametricRd",
    "VideoSourceModel",
    "CodeErrorTable",
    "channel_distortion",
    "optimize_antennas",
]

DEFAULT_ALLOWED_NU = (1, 2, 4, 8)


class RdTable:
    """Monotone rate -> encoder distortion table with log-linear interpolation."""

    def __init__(self, rates, distortions):
        self.rates = np.asarray(rates, dtype=float)
        self.distortions = np.asarray(distortions, dtype=float)
        if self.rates.ndim != 1 or self.rates.shape != self.distortions.shape:
            raise ValueError("rates and distortions must be 1-d and equal length")
        if len(self.rates) < 2:
            raise ValueError("need at least two rate-distortion points")
        if np.any(np.diff(self.rates) <= 0):
            raise ValueError("rates must be strictly increasing")
        if np.any(np.diff(self.distortions) > 0):
            raise ValueError("distortion must be non-increasing in rate")
        if np.any(self.distortions <= 0) or not np.all(np.isfinite(self.distortions)):
            raise ValueError("distortions must be finite and positive")

    @classmethod
    def from_csv(cls, path) -> "RdTable":
        rates, des = [], []
        with open(path, newline="") as fh:
            reader = csv.DictReader(fh)
            if reader.fieldnames != ["rate_bits", "de"]:
                raise ValueError(f"expected header 'rate_bits,de' in {path}")
            for row in reader:
                rates.append(_strict_float(row["rate_bits"]))
                des.append(_strict_float(row["de"]))
        return cls(rates, des)

    def __call__(self, rate: float) -> float:
        if rate < self.rates[0] or rate > self.rates[-1]:
            raise ValueError(
                f"rate {rate} outside table range [{self.rates[0]}, {self.rates[-1]}]"
            )
        hit = np.flatnonzero(self.rates == rate)
        if hit.size:  # exact grid point: no log/exp round trip
            return float(self.distortions[hit[0]])
        return float(np.exp(np.interp(rate, self.rates, np.log(self.distortions))))


@dataclass(frozen=True)
class ParametricRd:
    """Convenience encoder model D_e(R) = d0 + theta / (R - r0), R > r0."""

    d0: float
    theta: float
    r0: float = 0.0

    def __call__(self, rate: float) -> float:
        if rate <= self.r0:
            raise ValueError(f"rate must exceed r0={self.r0}")
        return self.d0 + self.theta / (rate - self.r0)


@dataclass(frozen=True)
class VideoSourceModel:
    """Fitted source model: redundancy beta, stream parameters gamma, sigma2,
    and the encoder rate-distortion curve."""

    rd_curve: Callable[[float], float]
    beta: float = 0.01
    gamma: float = 1.0
    sigma2: float = 1.0

    def __post_init__(self):
        if self.beta <= 0 or self.gamma <= 0 or self.sigma2 <= 0:
            raise ValueError("beta, gamma, sigma2 must all be positive")


def channel_distortion(model: VideoSourceModel, p_e: float) -> float:
    """Channel-induced distortion for codeword error probability p_e:

        sigma^2 * p_e * [ ((gamma+beta)/gamma) ln(1 + gamma/beta) - 1/gamma + 1/2 ]
    """
    if not 0.0 <= p_e <= 1.0:
        raise ValueError(f"p_e must be a probability, got {p_e!r}")
    b, g = model.beta, model.gamma
    bracket = (g + b) / g * math.log1p(g / b) - 1.0 / g + 0.5
    return model.sigma2 * p_e * bracket


def _strict_float(text: str) -> float:
    value = float(text)
    if not math.isfinite(value):
        raise ValueError(f"non-finite value {text!r}")
    return value


@dataclass
class CodeErrorTable:
    """Codeword error probability P_e(N_u, SNR) for a family of space-time codes.

    Stored as a full grid: every allowed N_u must cover the same SNR points.
    Lookups between grid SNRs interpolate log10(P_e) linearly in snr_db;
    lookups outside the grid's SNR range are an error, never extrapolated.
    """

    entries: dict[tuple[int, float], float]
    allowed_nu: tuple[int, ...] = DEFAULT_ALLOWED_NU

    _snr_grid: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        self.allowed_nu = tuple(sorted(set(int(n) for n in self.allowed_nu)))
        snrs = {}
        for (nu, snr), pe in self.entries.items():
            if not 0.0 <= pe <= 1.0:
                raise ValueError(f"P_e out of [0,1] at nu={nu}, snr={snr}: {pe}")
            snrs.setdefault(nu, set()).add(snr)
        for nu in self.allowed_nu:
            if nu not in snrs:
                raise ValueError(f"table has no entries for nu={nu}")
        grids = [tuple(sorted(s)) for s in snrs.values()]
        if len(set(grids)) != 1:
            raise ValueError("every nu must cover the same SNR grid")
        self._snr_grid = np.array(grids[0], dtype=float)
        for nu in self.allowed_nu:
            pes = [self.entries[(nu, s)] for s in self._snr_grid]
            if any(b > a for a, b in zip(pes, pes[1:])):
                raise ValueError(f"P_e must be non-increasing in SNR for nu={nu}")
        for s in self._snr_grid:
            pes = [self.entries[(nu, s)] for nu in self.allowed_nu]
            if any(b < a for a, b in zip(pes, pes[1:])):
                raise ValueError(f"P_e must be non-decreasing in nu at snr={s}")

    @classmethod
    def from_csv(cls, path, allowed_nu=None) -> "CodeErrorTable":
        entries = {}
        with open(path, newline="") as fh:
            reader = csv.DictReader(fh)
            if reader.fieldnames != ["nu", "snr_db", "pe"]:
                raise ValueError(f"expected header 'nu,snr_db,pe' in {path}")
            for row in reader:
                nu = int(row["nu"])
                snr = _strict_float(row["snr_db"])
                pe = _strict_float(row["pe"])
                if (nu, snr) in entries:
                    raise ValueError(f"duplicate table point nu={nu}, snr_db={snr}")
                entries[(nu, snr)] = pe
        if allowed_nu is None:
            allowed_nu = tuple(sorted({nu for nu, _ in entries}))
        return cls(entries, allowed_nu)

    def lookup(self, nu: int, snr_db: float) -> float:
        """P_e at (nu, snr_db), interpolating log10(P_e) between grid SNRs."""
        if nu not in self.allowed_nu:
            raise ValueError(f"nu={nu} not in allowed set {self.allowed_nu}")
        grid = self._snr_grid
        if snr_db < grid[0] or snr_db > grid[-1]:
            raise ValueError(
                f"snr_db={snr_db} outside table range [{grid[0]}, {grid[-1]}]"
            )
        if (nu, snr_db) in self.entries:
            return self.entries[(nu, snr_db)]
        pes = np.array([self.entries[(nu, s)] for s in grid])
        if np.any(pes == 0.0):
            # log-domain interpolation breaks on exact zeros; fall back linear
            return float(np.interp(snr_db, grid, pes))
        return float(10.0 ** np.interp(snr_db, grid, np.log10(pes)))


def optimize_antennas(
    model: VideoSourceModel,
    table: CodeErrorTable,
    snr_db: float,
    rate_of: Callable[[int], float],
) -> tuple[int, float]:
    """Integer program over the antenna assignment, solved by enumeration.

    Returns (N_u*, minimum total distortion).  Ties break toward the smaller
    N_u (lower decoder complexity at equal distortion).
    """
    best_nu, best_total = None, None
    for nu in table.allowed_nu:
        total = model.rd_curve(rate_of(nu)) + channel_distortion(
            model, table.lookup(nu, snr_db)
        )
        if best_total is None or total < best_total:
            best_nu, best_total = nu, total
    return best_nu, float(best_total)
