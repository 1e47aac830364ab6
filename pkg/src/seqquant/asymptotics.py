"""Small-cost asymptotics of the Bayes sequential cost.

As the per-sample cost ``c -> 0`` the optimal cost of a design behaves like
``G * c * ln(1/c)`` where ``G`` (the sequential cost coefficient) depends only
on the priors and on the two KL divergences of the induced channel(s). All
comparisons between designs in this module are made at the level of ``G``.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import AssumptionViolated, DomainError, NotFound, NotRandomized, RegimeError
from .models import InducedChannel, binary_kl, mix_channels

STRICT_RTOL = 1e-10
EQUAL_ATOL = 1e-12


def _check_prior(prior1: float) -> float:
    prior1 = float(prior1)
    if not 0.0 < prior1 < 1.0:
        raise DomainError(f"prior1 must lie in (0, 1), got {prior1}")
    return prior1


def prior1_from_ratio(ratio: float) -> float:
    """Convert a prior likelihood ratio ``pi0/pi1`` to ``pi1``."""
    if not ratio > 0:
        raise DomainError(f"prior ratio must be > 0, got {ratio}")
    return 1.0 / (1.0 + ratio)


# ---------------------------------------------------------------------------
# Wald approximation
# ---------------------------------------------------------------------------


def wald_cost(alpha: float, beta: float, c: float, prior1: float, d0: float, d1: float) -> float:
    """Wald's overshoot-free approximation of the cost of an SPRT with error rates ``(alpha, beta)``.

    ``c pi0 D(alpha, 1-beta)/D0 + c pi1 D(1-beta, alpha)/D1 + pi0 alpha + pi1 beta``.
    Zero error rates are accepted, as Monte Carlo estimates can be zero;
    the approximation is then infinite because one divergence term diverges.
    """
    prior1 = _check_prior(prior1)
    if not (0.0 <= alpha < 1.0 and 0.0 <= beta < 1.0 and alpha + beta <= 1.0):
        raise DomainError(f"need alpha, beta in [0, 1) with alpha + beta <= 1, got ({alpha}, {beta})")
    if not (c > 0 and d0 > 0 and d1 > 0):
        raise DomainError(f"c, d0 and d1 must be > 0, got c={c}, d0={d0}, d1={d1}")
    prior0 = 1.0 - prior1
    if alpha == 0.0 or beta == 0.0:
        return math.inf
    return (
        c * prior0 * binary_kl(alpha, 1.0 - beta) / d0
        + c * prior1 * binary_kl(1.0 - beta, alpha) / d1
        + prior0 * alpha
        + prior1 * beta
    )


def optimal_errors(c: float, prior1: float, d0: float, d1: float) -> tuple[float, float]:
    """Minimizers ``alpha* = c pi1/(D1 pi0)``, ``beta* = c pi0/(D0 pi1)`` of the leading-order cost."""
    prior1 = _check_prior(prior1)
    if not (c > 0 and d0 > 0 and d1 > 0):
        raise DomainError(f"c, d0 and d1 must be > 0, got c={c}, d0={d0}, d1={d1}")
    prior0 = 1.0 - prior1
    alpha = c * prior1 / (d1 * prior0)
    beta = c * prior0 / (d0 * prior1)
    if alpha >= 0.5 or beta >= 0.5:
        raise RegimeError(
            f"alpha*={alpha:.4g}, beta*={beta:.4g}: c={c} is too large for the small-cost regime"
        )
    return alpha, beta


# ---------------------------------------------------------------------------
# Cost coefficients
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class CostCoefficient:
    """``G = T pi0 / d0_sum + T pi1 / d1_sum`` for a period-``T`` design."""

    value: float
    d0_sum: float
    d1_sum: float
    prior1: float
    period: int = 1

    def to_json(self) -> dict:
        return {
            "G": self.value,
            "d0_sum": self.d0_sum,
            "d1_sum": self.d1_sum,
            "prior1": self.prior1,
            "period": self.period,
        }


def blockwise_coefficient(prior1: float, channels: Sequence[InducedChannel]) -> CostCoefficient:
    """Cost coefficient of the periodic design cycling through ``channels``."""
    prior1 = _check_prior(prior1)
    if not channels:
        raise DomainError("blockwise_coefficient needs at least one channel")
    for ch in channels:
        ch.require_nondegenerate()
    T = len(channels)
    d0_sum = math.fsum(ch.d0 for ch in channels)
    d1_sum = math.fsum(ch.d1 for ch in channels)
    value = T * (1.0 - prior1) / d0_sum + T * prior1 / d1_sum
    return CostCoefficient(value, d0_sum, d1_sum, prior1, T)


def cost_coefficient(prior1: float, channel: InducedChannel) -> CostCoefficient:
    return blockwise_coefficient(prior1, [channel])


# ---------------------------------------------------------------------------
# Two-quantizer analysis
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class PriorInterval:
    """Open interval ``(lower, upper)`` of prior ratios ``pi0/pi1``."""

    lower: float
    upper: float

    def __contains__(self, ratio: float) -> bool:
        return self.lower < ratio < self.upper

    def to_json(self) -> dict:
        return {"U": self.lower, "V": self.upper}


def _ordered_pair(ch1: InducedChannel, ch2: InducedChannel, swap: bool) -> tuple[InducedChannel, InducedChannel]:
    """Return the pair so that the first has smaller D0 and larger D1.

    With ``swap=False`` the input order must already satisfy this.
    """
    for ch in (ch1, ch2):
        ch.require_nondegenerate()
    if ch1.d0 < ch2.d0 and ch1.d1 > ch2.d1:
        return ch1, ch2
    if swap and ch2.d0 < ch1.d0 and ch2.d1 > ch1.d1:
        return ch2, ch1
    raise AssumptionViolated(
        "need D0_1 < D0_2 and D1_1 > D1_2; got "
        f"D0=({ch1.d0:.6g}, {ch2.d0:.6g}), D1=({ch1.d1:.6g}, {ch2.d1:.6g})"
    )


def asymmetry_interval(ch1: InducedChannel, ch2: InducedChannel) -> PriorInterval:
    """Prior ratios for which alternating ``ch1``/``ch2`` beats both stationary designs.

    Requires ``ch1.d0 < ch2.d0`` and ``ch1.d1 > ch2.d1``.
    """
    ch1, ch2 = _ordered_pair(ch1, ch2, swap=False)
    a0, a1, b0, b1 = ch1.d0, ch1.d1, ch2.d0, ch2.d1
    common = (a1 - b1) * (a0 + b0) / ((a1 + b1) * (b0 - a0))
    return PriorInterval(a0 / a1 * common, b0 / b1 * common)


def crossover_ratio(ch1: InducedChannel, ch2: InducedChannel) -> float:
    """Prior ratio ``pi0/pi1`` at which both stationary coefficients coincide."""
    ch1, ch2 = _ordered_pair(ch1, ch2, swap=True)
    a0, a1, b0, b1 = ch1.d0, ch1.d1, ch2.d0, ch2.d1
    return a0 * b0 * (b1 - a1) / (a1 * b1 * (a0 - b0))


class PriorRegime(enum.Enum):
    FIRST_BEST = "first<=alternating<=second"
    ALTERNATING_BEST = "alternating<min"
    SECOND_BEST = "first>=alternating>=second"


def alternating_comparison(ch1: InducedChannel, ch2: InducedChannel, ratio: float) -> dict:
    """Coefficients of ``ch1``, ``ch2`` and their alternation at prior ratio ``ratio``."""
    p1 = prior1_from_ratio(ratio)
    g1 = cost_coefficient(p1, ch1).value
    g2 = cost_coefficient(p1, ch2).value
    g12 = blockwise_coefficient(p1, [ch1, ch2]).value
    return {"ratio": ratio, "G1": g1, "G2": g2, "G_alt": g12}


def classify_prior(ch1: InducedChannel, ch2: InducedChannel, ratio: float) -> PriorRegime:
    """Which of the three regimes (below U, inside (U, V), above V) ``ratio`` falls in."""
    iv = asymmetry_interval(ch1, ch2)
    if ratio <= iv.lower:
        return PriorRegime.FIRST_BEST
    if ratio >= iv.upper:
        return PriorRegime.SECOND_BEST
    return PriorRegime.ALTERNATING_BEST


class Dominance(enum.Enum):
    DOMINATES = "dominates"
    DOMINATED_BY = "dominated_by"
    INCOMPARABLE = "incomparable"
    EQUAL = "equal"


def dominance(ch1: InducedChannel, ch2: InducedChannel) -> Dominance:
    """Compare divergence pairs: ``ch1`` dominates if both its divergences are >= those of ``ch2``."""
    e0 = abs(ch1.d0 - ch2.d0) <= EQUAL_ATOL
    e1 = abs(ch1.d1 - ch2.d1) <= EQUAL_ATOL
    if e0 and e1:
        return Dominance.EQUAL
    ge = (e0 or ch1.d0 > ch2.d0) and (e1 or ch1.d1 > ch2.d1)
    le = (e0 or ch1.d0 < ch2.d0) and (e1 or ch1.d1 < ch2.d1)
    if ge:
        return Dominance.DOMINATES
    if le:
        return Dominance.DOMINATED_BY
    return Dominance.INCOMPARABLE


# ---------------------------------------------------------------------------
# Randomized quantizers
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class PeriodicPlan:
    """Use channel ``i`` for ``counts[i]`` consecutive steps; repeat every ``period`` steps."""

    counts: tuple[int, ...]
    period: int
    margin0: float = 0.0
    margin1: float = 0.0

    def schedule(self, channels: Sequence[InducedChannel]) -> list[InducedChannel]:
        out: list[InducedChannel] = []
        for q, ch in zip(self.counts, channels):
            out.extend([ch] * q)
        return out

    def to_json(self) -> dict:
        return {"counts": list(self.counts), "period": self.period}


def _round_to_counts(w: np.ndarray, N: int) -> np.ndarray:
    counts = np.floor(w * N + 0.5).astype(int)
    while counts.sum() != N:
        rem = w * N - counts
        if counts.sum() < N:
            counts[int(np.argmax(rem))] += 1
        else:
            rem = np.where(counts > 0, rem, np.inf)
            counts[int(np.argmin(rem))] -= 1
    return counts


def rationalize_mixture(weights: Sequence[float], channels: Sequence[InducedChannel], n_max: int = 1000) -> PeriodicPlan:
    """Deterministic periodic schedule whose coefficient beats the randomized mixture.

    Searches ``N = 2, 3, ...`` for rational weights ``q_i / N`` such that
    both averaged divergences strictly exceed the mixture's divergences.
    """
    w = np.asarray(weights, dtype=float)
    if w.shape != (len(channels),):
        raise DomainError(f"{w.size} weights for {len(channels)} channels")
    if n_max < 2:
        raise DomainError("n_max must be >= 2")
    mixed = mix_channels(w, channels).require_nondegenerate()
    distinct = []
    for wi, ch in zip(w, channels):
        if wi <= 0:
            continue
        if not any(np.allclose(ch.g0, o.g0, rtol=0, atol=EQUAL_ATOL) and np.allclose(ch.g1, o.g1, rtol=0, atol=EQUAL_ATOL) for o in distinct):
            distinct.append(ch)
    if len(distinct) < 2:
        raise NotRandomized("mixture puts all its weight on a single channel")
    d0 = np.array([ch.d0 for ch in channels])
    d1 = np.array([ch.d1 for ch in channels])
    best = -math.inf
    for N in range(2, n_max + 1):
        counts = _round_to_counts(w, N)
        avg0 = float(counts @ d0) / N
        avg1 = float(counts @ d1) / N
        m0 = avg0 * (1 - STRICT_RTOL) - mixed.d0
        m1 = avg1 * (1 - STRICT_RTOL) - mixed.d1
        if m0 > 0 and m1 > 0:
            return PeriodicPlan(tuple(int(q) for q in counts), N, m0, m1)
        best = max(best, min(m0, m1))
    raise NotFound(f"no period N <= {n_max} beats the mixture (best margin {best:.3g})", best)


# ---------------------------------------------------------------------------
# Multiple sensors
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class MultiSensorReport:
    sensors: int
    stationary: tuple[float, ...]  # G_k, k sensors on A and d-k on B
    nonstationary: float  # sensor 1 alternates A/B, the rest stay on B
    interval: PriorInterval

    def to_json(self) -> dict:
        return {
            "sensors": self.sensors,
            "G_k": list(self.stationary),
            "G_nonstationary": self.nonstationary,
            **self.interval.to_json(),
        }


def multisensor_coefficients(d: int, chA: InducedChannel, chB: InducedChannel, prior1: float) -> MultiSensorReport:
    """Coefficients for ``d`` independent sensors each using quantizer A or B.

    ``chA`` must have the larger D0 and smaller D1 (A and B of the
    three-point example); the returned interval is the range of prior
    ratios where the single-alternating-sensor design beats every
    stationary assignment.
    """
    if d < 1:
        raise DomainError(f"need at least one sensor, got {d}")
    prior1 = _check_prior(prior1)
    chB, chA = _ordered_pair(chB, chA, swap=False)
    prior0 = 1.0 - prior1
    a0, a1, b0, b1 = chA.d0, chA.d1, chB.d0, chB.d1
    gk = tuple(prior0 / (k * a0 + (d - k) * b0) + prior1 / (k * a1 + (d - k) * b1) for k in range(d + 1))
    g = 2 * prior0 / (a0 + (2 * d - 1) * b0) + 2 * prior1 / (a1 + (2 * d - 1) * b1)
    common = (b1 - a1) / (a0 - b0) * (a0 + (2 * d - 1) * b0) / (a1 + (2 * d - 1) * b1)
    lower = common * b0 / b1
    upper = common * (a0 + (d - 1) * b0) / (a1 + (d - 1) * b1)
    return MultiSensorReport(d, gk, g, PriorInterval(lower, upper))
