"""Monte Carlo simulation of two-threshold SPRTs over quantized observations.

Each trial draws the true hypothesis from the prior, then feeds quantized
outputs from the scheduled channels into the cumulative log-likelihood
ratio until it leaves ``(a, b)``. Overshoot is kept as simulated.

Trials are processed in fixed-size chunks. Every chunk owns an independent
Philox stream keyed by ``(seed, chunk_index)``, so the output does not
depend on how many worker threads process the chunks.
"""

from __future__ import annotations

import csv
import io
import json
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass
from typing import Sequence

import numpy as np

from .asymptotics import wald_cost
from .errors import DomainError, NonTermination
from .models import HypothesisPair, InducedChannel, Quantizer, binary_kl, induce

CHUNK_TRIALS = 1 << 16
DEFAULT_STEP_CAP = 10_000_000


def thresholds_from_errors(alpha: float, beta: float) -> tuple[float, float]:
    """Wald thresholds ``(ln(beta/(1-alpha)), ln((1-beta)/alpha))``."""
    if not (0.0 < alpha < 1.0 and 0.0 < beta < 1.0 and alpha + beta < 1.0):
        raise DomainError(f"need alpha, beta in (0, 1) with alpha + beta < 1, got ({alpha}, {beta})")
    return math.log(beta / (1.0 - alpha)), math.log((1.0 - beta) / alpha)


@dataclass(frozen=True)
class QuantizerSchedule:
    """A finite ``prefix`` of quantizers followed by ``cycle`` repeated forever."""

    cycle: tuple
    prefix: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "cycle", tuple(self.cycle))
        object.__setattr__(self, "prefix", tuple(self.prefix))
        if not self.cycle:
            raise DomainError("schedule cycle must contain at least one quantizer")

    @classmethod
    def stationary(cls, q: Quantizer) -> "QuantizerSchedule":
        return cls((q,))

    @property
    def is_stationary(self) -> bool:
        return not self.prefix and len(self.cycle) == 1

    def slot(self, step: int) -> int:
        """Index into ``prefix + cycle`` of the quantizer used at 0-based ``step``."""
        P = len(self.prefix)
        return step if step < P else P + (step - P) % len(self.cycle)

    def channels(self, hp: HypothesisPair) -> list[InducedChannel]:
        return [induce(q, hp, name=f"slot{i}") for i, q in enumerate(self.prefix + self.cycle)]


@dataclass(frozen=True)
class SprtSpec:
    a: float
    b: float
    schedule: QuantizerSchedule
    hp: HypothesisPair
    c: float

    def __post_init__(self):
        if not self.a < 0 < self.b:
            raise DomainError(f"thresholds must satisfy a < 0 < b, got a={self.a}, b={self.b}")
        if not self.c > 0:
            raise DomainError(f"c must be > 0, got {self.c}")

    def llr_bound(self) -> float:
        return max(ch.llr_bound for ch in self.schedule.channels(self.hp))


@dataclass(frozen=True)
class SimulationResult:
    trials: int
    seed: int
    trials_h0: int
    trials_h1: int
    alpha_hat: float
    beta_hat: float
    mean_n0: float
    mean_n1: float
    mean_l0: float
    mean_l1: float
    cost_hat: float
    alpha_stderr: float
    beta_stderr: float
    n0_stderr: float
    n1_stderr: float
    l0_stderr: float
    l1_stderr: float
    cost_stderr: float

    def to_json(self) -> str:
        return json.dumps(asdict(self), sort_keys=True)


@dataclass(frozen=True, eq=False)
class TrialRecord:
    """Per-trial outcomes in trial-index order."""

    hypothesis: np.ndarray
    stop_time: np.ndarray
    final_llr: np.ndarray
    decision: np.ndarray

    def to_csv(self, fh=None) -> str | None:
        sink = io.StringIO() if fh is None else fh
        w = csv.writer(sink, lineterminator="\n")
        w.writerow(["trial", "hypothesis", "N", "L_N", "decision"])
        for i, (h, n, l, d) in enumerate(
            zip(self.hypothesis.tolist(), self.stop_time.tolist(), self.final_llr.tolist(), self.decision.tolist())
        ):
            w.writerow([i, h, n, repr(l), d])
        return sink.getvalue() if fh is None else None


def _thread_count() -> int:
    raw = os.environ.get("SEQQUANT_THREADS", "")
    try:
        n = int(raw)
    except ValueError:
        n = os.cpu_count() or 1
    return max(1, n)


def _simulate_chunk(tables, spec: SprtSpec, seed: int, chunk: int, size: int, step_cap: int):
    cdf0, cdf1, llrs, slot_of = tables
    rng = np.random.Generator(np.random.Philox(np.random.SeedSequence([seed, chunk])))
    hyp = (rng.random(size) < spec.hp.prior1).astype(np.int8)
    llr = np.zeros(size)
    n = np.zeros(size, dtype=np.int64)
    active = np.arange(size)
    step = 0
    while active.size and step < step_cap:
        s = slot_of(step)
        u = rng.random(active.size)
        cdf = np.where(hyp[active, None] == 1, cdf1[s], cdf0[s])
        out = np.sum(u[:, None] >= cdf[:, :-1], axis=1)
        llr[active] += llrs[s][out]
        step += 1
        n[active] = step
        inside = (llr[active] > spec.a) & (llr[active] < spec.b)
        active = active[inside]
    return hyp, n, llr, active.size


def simulate_trials(spec: SprtSpec, trials: int, seed: int, step_cap: int = DEFAULT_STEP_CAP) -> TrialRecord:
    """Run ``trials`` independent SPRTs; raises :class:`NonTermination` if any hits ``step_cap``."""
    if trials < 1:
        raise DomainError(f"trials must be >= 1, got {trials}")
    if seed < 0:
        raise DomainError(f"seed must be unsigned, got {seed}")
    channels = spec.schedule.channels(spec.hp)
    cdf0, cdf1, llrs = [], [], []
    for ch in channels:
        c0 = np.cumsum(ch.g0)
        c1 = np.cumsum(ch.g1)
        c0[-1] = c1[-1] = 1.0
        cdf0.append(c0)
        cdf1.append(c1)
        with np.errstate(divide="ignore", invalid="ignore"):
            llrs.append(np.where(ch.g0 > 0, np.log(ch.g1 / ch.g0), 0.0))
    tables = (cdf0, cdf1, llrs, spec.schedule.slot)
    bounds = [(k, min(CHUNK_TRIALS, trials - k * CHUNK_TRIALS)) for k in range(-(-trials // CHUNK_TRIALS))]
    with ThreadPoolExecutor(max_workers=min(_thread_count(), len(bounds))) as pool:
        parts = list(pool.map(lambda kb: _simulate_chunk(tables, spec, seed, kb[0], kb[1], step_cap), bounds))
    capped = sum(p[3] for p in parts)
    if capped:
        raise NonTermination(f"{capped} trials reached the step cap of {step_cap}", capped)
    hyp = np.concatenate([p[0] for p in parts])
    n = np.concatenate([p[1] for p in parts])
    llr = np.concatenate([p[2] for p in parts])
    decision = (llr >= spec.b).astype(np.int8)
    return TrialRecord(hyp, n, llr, decision)


def _mean_se(x: np.ndarray) -> tuple[float, float]:
    if x.size == 0:
        return math.nan, math.nan
    if x.size == 1:
        return float(x[0]), 0.0
    return float(np.mean(x)), float(np.std(x, ddof=1) / math.sqrt(x.size))


def _proportion(hits: int, total: int) -> tuple[float, float]:
    """Empirical rate with an Agresti-Coull standard error (nonzero even for 0 or ``total`` hits)."""
    if total == 0:
        return math.nan, math.nan
    adj = (hits + 2.0) / (total + 4.0)
    return hits / total, math.sqrt(adj * (1.0 - adj) / (total + 4.0))


def summarize(record: TrialRecord, spec: SprtSpec, seed: int) -> SimulationResult:
    h0 = record.hypothesis == 0
    h1 = ~h0
    alpha, alpha_se = _proportion(int(np.sum(record.decision[h0] == 1)), int(h0.sum()))
    beta, beta_se = _proportion(int(np.sum(record.decision[h1] == 0)), int(h1.sum()))
    n0, n0_se = _mean_se(record.stop_time[h0].astype(float))
    n1, n1_se = _mean_se(record.stop_time[h1].astype(float))
    l0, l0_se = _mean_se(record.final_llr[h0])
    l1, l1_se = _mean_se(record.final_llr[h1])
    per_trial = spec.c * record.stop_time + (record.decision != record.hypothesis)
    cost, cost_se = _mean_se(per_trial)
    return SimulationResult(
        int(record.hypothesis.size), int(seed), int(h0.sum()), int(h1.sum()),
        alpha, beta, n0, n1, l0, l1, cost,
        alpha_se, beta_se, n0_se, n1_se, l0_se, l1_se, cost_se,
    )


def run_sprt(spec: SprtSpec, trials: int, seed: int, step_cap: int = DEFAULT_STEP_CAP) -> SimulationResult:
    return summarize(simulate_trials(spec, trials, seed, step_cap), spec, seed)


@dataclass(frozen=True)
class WaldComparison:
    cost_hat: float
    wald_cost: float
    bound: float
    passed: bool

    def to_json(self) -> dict:
        return asdict(self)


def compare_with_wald(result: SimulationResult, spec: SprtSpec) -> WaldComparison:
    """Check ``|cost_hat - wald_cost(alpha_hat, beta_hat)| <= 2 c M + 3 stderr``."""
    if not spec.schedule.is_stationary:
        raise DomainError("compare_with_wald needs a stationary schedule")
    (ch,) = spec.schedule.channels(spec.hp)
    approx = wald_cost(result.alpha_hat, result.beta_hat, spec.c, spec.hp.prior1, ch.d0, ch.d1)
    bound = 2.0 * spec.c * ch.llr_bound + 3.0 * result.cost_stderr
    return WaldComparison(result.cost_hat, float(approx), bound, bool(abs(result.cost_hat - approx) <= bound))


@dataclass(frozen=True)
class BracketCheck:
    """``e^b alpha_hat <= 1 - beta_hat <= e^(b+M) alpha_hat``, each side allowed 3 sigma of slack."""

    lower_slack: float  # (1 - beta) - e^b alpha, want >= -3 sigma
    upper_slack: float  # e^(b+M) alpha - (1 - beta), want >= -3 sigma
    lower_sigma: float
    upper_sigma: float
    passed: bool

    def to_json(self) -> dict:
        return asdict(self)


def wald_bracket(result: SimulationResult, spec: SprtSpec) -> BracketCheck:
    M = spec.llr_bound()
    lo_f = math.exp(spec.b)
    hi_f = math.exp(spec.b + M)
    power = 1.0 - result.beta_hat
    lower = power - lo_f * result.alpha_hat
    upper = hi_f * result.alpha_hat - power
    lo_sig = math.hypot(result.beta_stderr, lo_f * result.alpha_stderr)
    hi_sig = math.hypot(result.beta_stderr, hi_f * result.alpha_stderr)
    ok = lower >= -3.0 * lo_sig and upper >= -3.0 * hi_sig
    return BracketCheck(lower, upper, lo_sig, hi_sig, bool(ok))


def overshoot_bracket(result: SimulationResult, spec: SprtSpec) -> dict:
    """Whether the mean final LLR under each hypothesis lies within ``M`` (plus 3 sigma) of Wald's value."""
    M = spec.llr_bound()
    target1 = float(binary_kl(1.0 - result.beta_hat, result.alpha_hat))
    target0 = -float(binary_kl(result.alpha_hat, 1.0 - result.beta_hat))
    ok1 = abs(result.mean_l1 - target1) <= M + 3.0 * result.l1_stderr
    ok0 = abs(result.mean_l0 - target0) <= M + 3.0 * result.l0_stderr
    return {"target0": target0, "target1": target1, "bound": M, "h0": bool(ok0), "h1": bool(ok1)}


def stationary_spec(q: Quantizer, hp: HypothesisPair, c: float, alpha: float, beta: float) -> SprtSpec:
    a, b = thresholds_from_errors(alpha, beta)
    return SprtSpec(a, b, QuantizerSchedule.stationary(q), hp, c)


def schedule_from(cycle: Sequence[Quantizer], prefix: Sequence[Quantizer] = ()) -> QuantizerSchedule:
    return QuantizerSchedule(tuple(cycle), tuple(prefix))
