"""Numerical verification of the structural results on quantizer design.

Every check returns a :class:`CheckReport`. A check is deterministic given
its parameters and seed. Margins are signed so that negative values mean
"on the wrong side"; ``worst_margin`` is the smallest margin seen, which is
reported even when nothing fails.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .asymptotics import cost_coefficient
from .errors import DomainError, NoImprovement
from .models import (
    RATIO_TIE_RTOL,
    DeterministicQuantizer,
    HypothesisPair,
    InducedChannel,
    binary_kl,
    enumerate_quantizers,
    induce,
    is_llr_threshold,
    mix_channels,
    unnormalized_divergences,
)

WITNESS_CAP = 10
FD_STEP = 1e-5
EDGE_GAP = 1e-3
COMBINATION_RTOL = 1e-9
TANGENT_RTOL = 1e-6
INEQUALITY_RTOL = 1e-9
COEFFICIENT_RTOL = 1e-10


@dataclass(frozen=True)
class CheckReport:
    name: str
    samples_or_cells: int
    failures: int
    worst_margin: float
    witnesses: tuple = ()
    seed: int = 0
    parts: tuple = ()
    extras: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return self.failures == 0

    def to_json(self) -> dict:
        out = {
            "name": self.name,
            "samples_or_cells": self.samples_or_cells,
            "failures": self.failures,
            "worst_margin": self.worst_margin,
            "witnesses": list(self.witnesses),
            "seed": self.seed,
        }
        if self.parts:
            out["parts"] = [p.to_json() for p in self.parts]
        if self.extras:
            out["extras"] = self.extras
        return out


def _report(name: str, margins: np.ndarray, failed: np.ndarray, witness: Callable[[int], dict], seed: int, **extras) -> CheckReport:
    idx = np.flatnonzero(failed)
    wit = tuple(witness(int(i)) for i in idx[:WITNESS_CAP])
    worst = float(np.min(margins)) if margins.size else math.inf
    return CheckReport(name, int(margins.size), int(idx.size), worst, wit, seed, extras=extras)


def combine_reports(name: str, parts: Sequence[CheckReport], seed: int, **extras) -> CheckReport:
    wit = tuple(w for p in parts for w in p.witnesses)[:WITNESS_CAP]
    return CheckReport(
        name,
        sum(p.samples_or_cells for p in parts),
        sum(p.failures for p in parts),
        min(p.worst_margin for p in parts),
        wit,
        seed,
        tuple(parts),
        extras,
    )


# ---------------------------------------------------------------------------
# Unnormalized-KL ordering lemma
# ---------------------------------------------------------------------------


def _ordered_triples(samples: int, rng: np.random.Generator, log_range: float = math.log(100.0)) -> np.ndarray:
    """Positive ``(3, 2)`` triples with strictly increasing ratio ``x1/x0`` by rejection sampling."""
    kept: list[np.ndarray] = []
    have = 0
    while have < samples:
        batch = np.exp(rng.uniform(-log_range, log_range, size=(6 * (samples - have) + 64, 3, 2)))
        r = batch[:, :, 1] / batch[:, :, 0]
        ok = (r[:, 0] < r[:, 1]) & (r[:, 1] < r[:, 2])
        kept.append(batch[ok])
        have += int(ok.sum())
    return np.concatenate(kept)[:samples]


def lemma_margins(a, b, c) -> np.ndarray:
    """Slack of the better of the two condition pairs; positive iff the lemma's conclusion holds."""
    ref0, ref1 = unnormalized_divergences(b, c + a)
    l0, l1 = unnormalized_divergences(a, b + c)
    r0, r1 = unnormalized_divergences(c, a + b)
    return np.maximum(np.minimum(l0 - ref0, l1 - ref1), np.minimum(r0 - ref0, r1 - ref1))


def check_unnormalized_kl_lemma(samples: int = 100_000, seed: int = 0, negate: bool = False) -> CheckReport:
    """Sample ordered positive sextuples and count those where neither condition pair holds.

    ``negate`` flips the verdict and exists only as a harness self-test.
    """
    if samples < 1:
        raise DomainError(f"samples must be >= 1, got {samples}")
    rng = np.random.default_rng(seed)
    x = _ordered_triples(samples, rng)
    a, b, c = (x[:, i, :].T for i in range(3))
    m = lemma_margins(a, b, c)
    if negate:
        m = -m

    def witness(i):
        return {"a": x[i, 0].tolist(), "b": x[i, 1].tolist(), "c": x[i, 2].tolist(), "margin": float(m[i])}

    return _report("unnormalized_kl_lemma", m, m <= 0, witness, seed)


# ---------------------------------------------------------------------------
# Quasiconcavity of the binary cost coefficient
# ---------------------------------------------------------------------------


def coefficient_surface(c0: float, c1: float, d0: float, d1: float) -> Callable:
    """``F(x, y) = c0/(D(x, y) + d0) + c1/(D(y, x) + d1)`` with ``D`` the binary KL divergence."""

    def F(x, y):
        out = 0.0
        if c0:
            out = out + c0 / (binary_kl(x, y) + d0)
        if c1:
            out = out + c1 / (binary_kl(y, x) + d1)
        return out

    return F


def _interior_points(n: int, rng: np.random.Generator) -> np.ndarray:
    kept, have = [], 0
    while have < n:
        pts = rng.uniform(EDGE_GAP, 1.0 - EDGE_GAP, size=(2 * (n - have) + 16, 2))
        pts = pts[np.abs(pts[:, 0] - pts[:, 1]) > EDGE_GAP]
        kept.append(pts)
        have += len(pts)
    return np.concatenate(kept)[:n]


def _combination_test(F, same_side: bool, samples: int, rng: np.random.Generator, seed: int) -> CheckReport:
    P = _interior_points(samples, rng)
    Q = _interior_points(samples, rng)
    if same_side:
        # reflect Q onto P's side of the diagonal
        flip = np.sign(P[:, 0] - P[:, 1]) != np.sign(Q[:, 0] - Q[:, 1])
        Q[flip] = Q[flip][:, ::-1]
    lam = rng.uniform(0.0, 1.0, samples)
    R = lam[:, None] * P + (1.0 - lam[:, None]) * Q
    fP, fQ, fR = F(*P.T), F(*Q.T), F(*R.T)
    low = np.minimum(fP, fQ)
    m = (fR - low) / np.abs(low)

    def witness(i):
        return {"P": P[i].tolist(), "Q": Q[i].tolist(), "lambda": float(lam[i]), "margin": float(m[i])}

    return _report("combination", m, m < -COMBINATION_RTOL, witness, seed)


def tangent_curvature(F, x: np.ndarray, y: np.ndarray, h: float = FD_STEP) -> tuple[np.ndarray, np.ndarray]:
    """Curvature of ``F`` along the unit direction orthogonal to its gradient, and the Hessian's Frobenius norm."""
    f = F(x, y)
    fx = (F(x + h, y) - F(x - h, y)) / (2 * h)
    fy = (F(x, y + h) - F(x, y - h)) / (2 * h)
    fxx = (F(x + h, y) - 2 * f + F(x - h, y)) / h**2
    fyy = (F(x, y + h) - 2 * f + F(x, y - h)) / h**2
    fxy = (F(x + h, y + h) - F(x + h, y - h) - F(x - h, y + h) + F(x - h, y - h)) / (4 * h * h)
    norm = np.hypot(fx, fy)
    hx, hy = -fy / norm, fx / norm
    curv = hx * hx * fxx + 2 * hx * hy * fxy + hy * hy * fyy
    scale = np.sqrt(fxx**2 + 2 * fxy**2 + fyy**2)
    return curv, scale


def _tangent_test(F, samples: int, rng: np.random.Generator, seed: int) -> CheckReport:
    pts = _interior_points(samples, rng)
    x, y = pts.T
    curv, scale = tangent_curvature(F, x, y)
    rel = curv / scale
    m = -rel

    def witness(i):
        return {"point": pts[i].tolist(), "curvature": float(curv[i]), "relative": float(rel[i])}

    return _report("tangent", m, rel > TANGENT_RTOL, witness, seed)


def check_quasiconcavity(
    c0: float,
    c1: float,
    d0: float,
    d1: float,
    samples: int = 100_000,
    seed: int = 0,
    tangent_samples: int | None = None,
) -> CheckReport:
    """Convex-combination and tangent-curvature tests of ``F`` on the open unit square minus the diagonal."""
    if min(c0, c1, d0, d1) < 0:
        raise DomainError("constants must be non-negative")
    if c0 == 0 and c1 == 0:
        raise DomainError("c0 and c1 cannot both be zero")
    tangent_samples = max(1, samples // 10) if tangent_samples is None else tangent_samples
    F = coefficient_surface(c0, c1, d0, d1)
    rng = np.random.default_rng(seed)
    same_side = d0 == 0 or d1 == 0
    comb = _combination_test(F, same_side, samples, rng, seed)
    tan = _tangent_test(F, tangent_samples, rng, seed)
    return combine_reports("quasiconcavity", [comb, tan], seed, constants=[c0, c1, d0, d1])


# ---------------------------------------------------------------------------
# Final two-variable inequality of the quasiconcavity argument
# ---------------------------------------------------------------------------


def final_inequality_sides(u, v) -> tuple[np.ndarray, np.ndarray]:
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    s = np.sqrt(u * v)
    w = np.cbrt(v * (v + 1) / 2)
    q = 2 * np.sqrt(u) + (u + 1) / 2
    lhs = ((u + v) / 2 + 2 * s) * ((u + v) / 2 + 3 * s + 4 * u * v) * (3 * w - q)
    rhs = q * w * ((u + v) / 2 + 5 * s) * (v - u)
    return lhs, rhs


def check_final_inequality(u_grid=None, v_grid=None, negate: bool = False) -> CheckReport:
    """Evaluate ``LHS - RHS`` on a ``u <= 1 <= v`` grid; margins are relative to ``max(|LHS|, |RHS|)``."""
    u = np.linspace(0.01, 1.0, 500) if u_grid is None else np.asarray(u_grid, dtype=float)
    v = np.linspace(1.0, 100.0, 500) if v_grid is None else np.asarray(v_grid, dtype=float)
    if np.any((u <= 0) | (u > 1)) or np.any(v < 1):
        raise DomainError("grids must satisfy 0 < u <= 1 <= v")
    U, V = np.meshgrid(u, v, indexing="ij")
    lhs, rhs = final_inequality_sides(U, V)
    if negate:
        lhs, rhs = rhs, lhs
    scale = np.maximum(np.maximum(np.abs(lhs), np.abs(rhs)), np.finfo(float).tiny)
    m = ((lhs - rhs) / scale).ravel()
    corner_l, corner_r = final_inequality_sides(1.0, 1.0)

    def witness(i):
        return {"u": float(U.flat[i]), "v": float(V.flat[i]), "margin": float(m[i])}

    return _report(
        "final_inequality", m, m < -INEQUALITY_RTOL, witness, 0, corner_margin=float(corner_l - corner_r)
    )


# ---------------------------------------------------------------------------
# Pseudo-LLR property and improvement moves
# ---------------------------------------------------------------------------


def _level_ratio(ch: InducedChannel, u: int) -> float:
    return float(ch.g1[u] / ch.g0[u])


def _level_points(q: DeterministicQuantizer, hp: HypothesisPair) -> dict[int, list[int]]:
    pts: dict[int, list[int]] = {}
    for x in hp.support.tolist():
        pts.setdefault(q.mapping[x], []).append(x)
    return pts


def pseudo_llr_violations(q: DeterministicQuantizer, hp: HypothesisPair) -> tuple[list[dict], list[float]]:
    """All ``(u1, u2)`` with the ratio of level ``u1`` strictly inside level ``u2``'s preimage ratio span.

    Margins are log-ratio distances to the nearest end of the span (negative inside).
    """
    if not isinstance(q, DeterministicQuantizer):
        raise DomainError("pseudo-LLR check needs a deterministic quantizer")
    ratios = hp.likelihood_ratios()
    ch = induce(q, hp, allow_degenerate=True)
    pts = _level_points(q, hp)
    found, margins = [], []
    for u1, u2 in itertools.permutations(sorted(pts), 2):
        r1 = math.log(_level_ratio(ch, u1))
        span = np.log(ratios[pts[u2]])
        lo, hi = float(span.min()), float(span.max())
        margin = max(r1 - hi, lo - r1)
        margins.append(margin)
        tie = RATIO_TIE_RTOL
        if lo + tie < r1 < hi - tie:
            found.append({"u1": u1, "u2": u2, "ratio": math.exp(r1), "interval": [math.exp(lo), math.exp(hi)]})
    return found, margins


def check_pseudo_llr(q: DeterministicQuantizer, hp: HypothesisPair) -> CheckReport:
    found, margins = pseudo_llr_violations(q, hp)
    m = np.asarray(margins, dtype=float)
    return CheckReport(
        "pseudo_llr",
        int(m.size),
        len(found),
        float(m.min()) if m.size else math.inf,
        tuple(found[:WITNESS_CAP]),
        0,
    )


def _relabel(q: DeterministicQuantizer, moved: Sequence[int], target: int) -> DeterministicQuantizer:
    mapping = list(q.mapping)
    for x in moved:
        mapping[x] = target
    return DeterministicQuantizer(tuple(mapping), q.output_size)


def _dominates(new: InducedChannel, old: InducedChannel) -> bool:
    tol = 1e-12
    ge0 = new.d0 >= old.d0 * (1 - tol)
    ge1 = new.d1 >= old.d1 * (1 - tol)
    strict = new.d0 > old.d0 * (1 + tol) or new.d1 > old.d1 * (1 + tol)
    return ge0 and ge1 and strict


def _reassignment_moves(q: DeterministicQuantizer, hp: HypothesisPair):
    """Candidate quantizers moving the low or high part of a violating level to the other level."""
    ratios = hp.likelihood_ratios()
    pts = _level_points(q, hp)
    found, _ = pseudo_llr_violations(q, hp)
    for w in found:
        u1, u2, r = w["u1"], w["u2"], w["ratio"]
        members = pts[u2]
        tie = [x for x in members if abs(ratios[x] - r) <= RATIO_TIE_RTOL * r]
        low = [x for x in members if ratios[x] < r and x not in tie]
        high = [x for x in members if ratios[x] > r and x not in tie]
        for label, moved in (("low", low), ("high", high), ("low+ties", low + tie), ("high+ties", high + tie)):
            if moved and len(moved) < len(members):
                yield {"kind": "reassign", "part": label, "from": u2, "to": u1}, _relabel(q, moved, u1)


def _interleaved_pair(q: DeterministicQuantizer, hp: HypothesisPair, ch: InducedChannel):
    """First pair of levels (lower, upper) whose preimages interleave in likelihood-ratio order."""
    ratios = hp.likelihood_ratios()
    pts = _level_points(q, hp)
    for u, w in itertools.combinations(sorted(pts), 2):
        lower, upper = (u, w) if _level_ratio(ch, u) <= _level_ratio(ch, w) else (w, u)
        min_up = ratios[pts[upper]].min()
        inside = [x for x in pts[lower] if ratios[x] > min_up * (1 + RATIO_TIE_RTOL)]
        if inside:
            return lower, upper, inside
    return None


def _merge_moves(q: DeterministicQuantizer, hp: HypothesisPair, ch: InducedChannel):
    """The two level merges that make an interleaved pair of levels threshold-separated.

    (i) the lower level's points lying above the upper level's smallest ratio
    join the upper level; (ii) the upper level's points lying below the largest
    of those join the lower level.
    """
    pair = _interleaved_pair(q, hp, ch)
    if pair is None:
        return []
    lower, upper, inside = pair
    ratios = hp.likelihood_ratios()
    top = max(ratios[x] for x in inside)
    pts = _level_points(q, hp)
    pulled = [x for x in pts[upper] if ratios[x] <= top * (1 + RATIO_TIE_RTOL)]
    out = []
    if len(inside) < len(pts[lower]):
        out.append(({"kind": "merge", "variant": "i", "lower": lower, "upper": upper}, _relabel(q, inside, upper)))
    if len(pulled) < len(pts[upper]):
        out.append(({"kind": "merge", "variant": "ii", "lower": lower, "upper": upper}, _relabel(q, pulled, lower)))
    return out


def improve_non_llr(
    q: DeterministicQuantizer, hp: HypothesisPair, prior1: float | None = None, return_move: bool = False
):
    """One improving modification of a quantizer that is not a likelihood-ratio rule.

    Reassignment moves of a pseudo-LLR violation are tried first; the first
    one whose divergence pair dominates the original is returned. Otherwise
    the two level merges of an interleaved pair are evaluated and the one
    with the lower cost coefficient at ``prior1`` is returned, provided it
    does not raise the coefficient.
    """
    if not isinstance(q, DeterministicQuantizer):
        raise DomainError("improve_non_llr needs a deterministic quantizer")
    prior1 = hp.prior1 if prior1 is None else prior1
    ch = induce(q, hp, allow_degenerate=True)
    tried = []
    for move, cand in _reassignment_moves(q, hp):
        new = induce(cand, hp, allow_degenerate=True)
        tried.append({**move, "d0": new.d0, "d1": new.d1})
        if _dominates(new, ch):
            return (cand, move) if return_move else cand
    merges = _merge_moves(q, hp, ch)
    if merges:
        scored = []
        for move, cand in merges:
            new = induce(cand, hp, allow_degenerate=True)
            G = math.inf if new.degenerate else cost_coefficient(prior1, new).value
            scored.append((G, move, cand))
            tried.append({**move, "G": G})
        G_best, move, cand = min(scored, key=lambda s: s[0])
        G_old = math.inf if ch.degenerate else cost_coefficient(prior1, ch).value
        if G_best <= G_old * (1 + COEFFICIENT_RTOL):
            return (cand, move) if return_move else cand
    raise NoImprovement(
        "no reassignment or merge move improves the quantizer",
        {"d0": ch.d0, "d1": ch.d1, "tried": tried, "is_llr": is_llr_threshold(q, hp)},
    )


def iterate_to_llr(
    q: DeterministicQuantizer, hp: HypothesisPair, prior1: float | None = None, max_steps: int | None = None
) -> tuple[DeterministicQuantizer, int]:
    """Apply :func:`improve_non_llr` until the quantizer is an LLR rule; returns it with the step count."""
    cap = q.output_size * q.input_size if max_steps is None else max_steps
    steps = 0
    while not is_llr_threshold(q, hp):
        if steps >= cap:
            raise NoImprovement(f"still not an LLR rule after {cap} moves", {"map": list(q.mapping)})
        q = improve_non_llr(q, hp, prior1)
        steps += 1
    return q, steps


# ---------------------------------------------------------------------------
# Optimality of likelihood-ratio rules
# ---------------------------------------------------------------------------


def _coefficient_or_inf(ch: InducedChannel, prior1: float) -> float:
    return math.inf if ch.degenerate else cost_coefficient(prior1, ch).value


def best_quantizers(hp: HypothesisPair, K: int, prior1: float | None = None) -> dict:
    """Exhaustive minimum of the cost coefficient overall and over LLR rules."""
    prior1 = hp.prior1 if prior1 is None else prior1
    best = (math.inf, None)
    best_llr = (math.inf, None)
    for q in enumerate_quantizers(hp.alphabet_size, K):
        G = _coefficient_or_inf(induce(q, hp, allow_degenerate=True), prior1)
        if G < best[0]:
            best = (G, q)
        if G < best_llr[0] and is_llr_threshold(q, hp):
            best_llr = (G, q)
    return {"G": best[0], "quantizer": best[1], "G_llr": best_llr[0], "llr_quantizer": best_llr[1]}


def random_pair(rng: np.random.Generator, max_alphabet: int = 6, floor: float = 1e-6) -> HypothesisPair:
    """Random pair with full common support (``floor`` keeps every mass positive)."""
    n = int(rng.integers(2, max_alphabet + 1))
    f = rng.dirichlet(np.ones(n), size=2) + floor
    f /= f.sum(axis=1, keepdims=True)
    return HypothesisPair(f[0], f[1], float(rng.uniform(0.05, 0.95)))


def verify_llr_optimality(
    hp: HypothesisPair | None = None,
    K: int | None = 2,
    prior1: float | None = None,
    trials: int = 0,
    seed: int = 0,
    max_alphabet: int = 6,
) -> CheckReport:
    """Check that an LLR rule attains the exhaustive minimum of the cost coefficient.

    With ``trials == 0`` the single pair ``hp`` is checked; otherwise
    ``trials`` random pairs are drawn (``K=None`` draws ``K`` from {2, 3}).
    """
    cases = []
    if trials == 0:
        if hp is None or K is None:
            raise DomainError("single mode needs a hypothesis pair and K")
        cases.append((hp, K, hp.prior1 if prior1 is None else prior1))
    else:
        rng = np.random.default_rng(seed)
        for _ in range(trials):
            pair = random_pair(rng, max_alphabet)
            k = int(rng.choice([2, 3])) if K is None else K
            cases.append((pair, k, pair.prior1))
    margins, details = [], []
    for pair, k, pr in cases:
        res = best_quantizers(pair, k, pr)
        margins.append(-(res["G_llr"] - res["G"]) / res["G"])
        details.append(
            {
                "f0": pair.f0.tolist(),
                "f1": pair.f1.tolist(),
                "prior1": pr,
                "K": k,
                "G": res["G"],
                "G_llr": res["G_llr"],
                "best": list(res["quantizer"].mapping),
            }
        )
    m = np.asarray(margins)
    return _report("llr_optimality", m, m < -COEFFICIENT_RTOL, lambda i: details[i], seed)


def binary_candidates(hp: HypothesisPair) -> list[DeterministicQuantizer]:
    """All non-constant binary maps, each with its label-swapped twin."""
    out = []
    for q in enumerate_quantizers(hp.alphabet_size, 2):
        out.append(q)
        out.append(DeterministicQuantizer(tuple(1 - u for u in q.mapping), 2))
    return out


def verify_extreme_points(
    hp: HypothesisPair, prior1: float | None = None, samples: int = 10_000, seed: int = 0
) -> CheckReport:
    """Random binary mixtures never beat the best deterministic LLR rule."""
    prior1 = hp.prior1 if prior1 is None else prior1
    cands = binary_candidates(hp)
    chans = [induce(q, hp, allow_degenerate=True) for q in cands]
    det = min(_coefficient_or_inf(ch, prior1) for q, ch in zip(cands, chans) if is_llr_threshold(q, hp))
    rng = np.random.default_rng(seed)
    margins = np.empty(samples)
    picks: list[tuple] = []
    for i in range(samples):
        k = int(rng.integers(2, len(cands) + 1))
        idx = rng.choice(len(cands), size=k, replace=False)
        w = rng.dirichlet(np.ones(k))
        mix = mix_channels(w, [chans[j] for j in idx])
        margins[i] = (_coefficient_or_inf(mix, prior1) - det) / det
        picks.append((idx.tolist(), w.tolist()))

    def witness(i):
        idx, w = picks[i]
        return {"maps": [list(cands[j].mapping) for j in idx], "weights": w, "margin": float(margins[i])}

    return _report("extreme_points", margins, margins < -COEFFICIENT_RTOL, witness, seed, best_deterministic=det)


def explore_randomized_quasiconcavity(
    hp: HypothesisPair, K: int, samples: int = 1000, seed: int = 0, prior1: float | None = None
) -> CheckReport:
    """Exploratory sampler for ``K > 2`` randomized quantizers.

    Compares ``G`` at a mixture of two random randomized quantizers with the
    smaller of the two endpoint values. The outcome is informational only:
    no claim is made for ``K > 2``, so a negative margin is not a defect.
    """
    prior1 = hp.prior1 if prior1 is None else prior1
    maps = enumerate_quantizers(hp.alphabet_size, K)
    chans = [induce(q, hp, allow_degenerate=True) for q in maps]
    rng = np.random.default_rng(seed)

    def draw():
        k = int(rng.integers(1, min(4, len(maps)) + 1))
        idx = rng.choice(len(maps), size=k, replace=False)
        return mix_channels(rng.dirichlet(np.ones(k)), [chans[j] for j in idx])

    margins = np.empty(samples)
    for i in range(samples):
        P, Q = draw(), draw()
        lam = rng.uniform()
        R = mix_channels([lam, 1 - lam], [P, Q])
        gP, gQ, gR = (_coefficient_or_inf(ch, prior1) for ch in (P, Q, R))
        low = min(gP, gQ)
        margins[i] = (gR - low) / low if math.isfinite(low) and math.isfinite(gR) else math.inf
    rep = _report("explore_randomized", margins, margins < -COMBINATION_RTOL, lambda i: {"margin": float(margins[i])}, seed)
    return CheckReport(rep.name, rep.samples_or_cells, rep.failures, rep.worst_margin, rep.witnesses, seed, extras={"asserting": False, "K": K})

