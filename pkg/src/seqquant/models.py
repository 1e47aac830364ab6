"""Finite-alphabet hypothesis pairs, quantizers, induced channels and divergences.

Everything here is an immutable value: arrays stored on the dataclasses are
made read-only at construction, so objects can be shared freely between
threads. Natural logarithms are used throughout.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Sequence, Union

import numpy as np

from .errors import (
    AbsoluteContinuityViolation,
    DegenerateChannel,
    DimensionMismatch,
    DomainError,
    EmptyLevel,
    SizeLimit,
)

PROB_TOL = 1e-12
RATIO_TIE_RTOL = 1e-12
ENUMERATION_BUDGET = 1 << 20


def _frozen(arr: np.ndarray) -> np.ndarray:
    arr.setflags(write=False)
    return arr


def as_probability_vector(values, name: str = "vector") -> np.ndarray:
    """Validate a probability vector; renormalize if its sum is within ``PROB_TOL`` of 1."""
    arr = np.asarray(values, dtype=float)
    if arr.ndim != 1 or arr.size == 0:
        raise DomainError(f"{name}: expected a non-empty 1-d vector, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise DomainError(f"{name}: entries must be finite")
    if np.any(arr < 0):
        raise DomainError(f"{name}: entries must be >= 0, got {arr.tolist()}")
    total = float(arr.sum())
    if abs(total - 1.0) > PROB_TOL:
        raise DomainError(f"{name}: entries sum to {total!r}, not 1 (tolerance {PROB_TOL})")
    return _frozen(arr / total)


# ---------------------------------------------------------------------------
# Divergences
# ---------------------------------------------------------------------------


def kl(p, q) -> float:
    """KL divergence ``D(p || q)`` of two probability vectors.

    Terms with ``p[i] == 0`` contribute nothing. Each summand is evaluated as
    ``p ln(p/q) - p + q``, which is termwise non-negative, so the result never
    dips below zero through rounding.
    """
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    if p.shape != q.shape:
        raise DimensionMismatch(f"kl: lengths differ ({p.shape} vs {q.shape})")
    pos = p > 0
    if np.any(pos & (q <= 0)):
        bad = np.flatnonzero(pos & (q <= 0)).tolist()
        raise AbsoluteContinuityViolation(f"kl: p > 0 but q = 0 at indices {bad}")
    with np.errstate(divide="ignore", invalid="ignore"):
        terms = np.where(pos, p * np.log(np.where(pos, p, 1.0) / np.where(pos, q, 1.0)), 0.0)
    return float(np.sum(terms - p + q))


def _xlogy_ratio(x, y):
    # x * ln(x / y) with 0 * ln(0 / y) := 0
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        out = np.where(x > 0, x * np.log(np.where(x > 0, x, 1.0) / np.where(y > 0, y, 1.0)), 0.0)
    return out


def binary_kl(alpha, beta):
    """``D(alpha, beta) = alpha ln(alpha/beta) + (1-alpha) ln((1-alpha)/(1-beta))``.

    Accepts scalars or broadcastable arrays. Arguments need not be
    complementary probabilities of the same event; the formula value is
    returned as is.
    """
    a = np.asarray(alpha, dtype=float)
    b = np.asarray(beta, dtype=float)
    if np.any((a < 0) | (a > 1) | (b < 0) | (b > 1)) or np.any(np.isnan(a) | np.isnan(b)):
        raise DomainError(f"binary_kl: arguments must lie in [0, 1], got ({alpha}, {beta})")
    if np.any((a > 0) & (b == 0)) or np.any((a < 1) & (b == 1)):
        raise DomainError(f"binary_kl: log of zero at ({alpha}, {beta})")
    out = _xlogy_ratio(a, b) + _xlogy_ratio(1.0 - a, 1.0 - b)
    return float(out) if out.ndim == 0 else out


def unnormalized_divergences(a, b):
    """Unnormalized KL pair ``(D~0(a; b), D~1(a; b))`` for positive pairs ``a=(a0, a1)``, ``b=(b0, b1)``.

    ``D~0(a; b) = a0 ln(a0/a1) + b0 ln(b0/b1)`` and symmetrically for ``D~1``.
    Entries may be arrays (evaluated elementwise).
    """
    a0, a1 = (np.asarray(v, dtype=float) for v in a)
    b0, b1 = (np.asarray(v, dtype=float) for v in b)
    for v in (a0, a1, b0, b1):
        if np.any(~(v > 0)):
            raise DomainError("unnormalized_divergences: all entries must be > 0")
    d0 = a0 * np.log(a0 / a1) + b0 * np.log(b0 / b1)
    d1 = a1 * np.log(a1 / a0) + b1 * np.log(b1 / b0)
    if d0.ndim == 0:
        return float(d0), float(d1)
    return d0, d1


# ---------------------------------------------------------------------------
# Hypotheses and quantizers
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class HypothesisPair:
    """Conditional pmfs ``f0``, ``f1`` on a finite alphabet plus the prior ``P(H=1)``."""

    f0: np.ndarray
    f1: np.ndarray
    prior1: float = 0.5

    def __post_init__(self):
        f0 = as_probability_vector(self.f0, "f0")
        f1 = as_probability_vector(self.f1, "f1")
        if f0.shape != f1.shape:
            raise DimensionMismatch(f"f0 has {f0.size} entries, f1 has {f1.size}")
        mismatch = (f0 > 0) != (f1 > 0)
        if np.any(mismatch):
            raise AbsoluteContinuityViolation(
                f"f0 and f1 must share support; they differ at {np.flatnonzero(mismatch).tolist()}"
            )
        prior1 = float(self.prior1)
        if not 0.0 < prior1 < 1.0:
            raise DomainError(f"prior1 must lie in (0, 1), got {prior1}")
        object.__setattr__(self, "f0", f0)
        object.__setattr__(self, "f1", f1)
        object.__setattr__(self, "prior1", prior1)

    @property
    def prior0(self) -> float:
        return 1.0 - self.prior1

    @property
    def alphabet_size(self) -> int:
        return int(self.f0.size)

    @property
    def support(self) -> np.ndarray:
        return np.flatnonzero(self.f0 > 0)

    def likelihood_ratios(self) -> np.ndarray:
        """``f1(x)/f0(x)``; NaN on zero-mass points."""
        with np.errstate(divide="ignore", invalid="ignore"):
            return np.where(self.f0 > 0, self.f1 / np.where(self.f0 > 0, self.f0, 1.0), np.nan)

    def with_prior(self, prior1: float) -> "HypothesisPair":
        return HypothesisPair(self.f0, self.f1, prior1)

    def to_json(self) -> dict:
        return {"f0": self.f0.tolist(), "f1": self.f1.tolist(), "prior1": self.prior1}

    @classmethod
    def from_json(cls, obj: dict) -> "HypothesisPair":
        if not isinstance(obj, dict):
            raise DomainError("hypothesis: expected an object with keys f0, f1, prior1")
        missing = [k for k in ("f0", "f1") if k not in obj]
        if missing:
            raise DomainError(f"hypothesis: missing key(s) {missing}")
        return cls(obj["f0"], obj["f1"], obj.get("prior1", 0.5))


@dataclass(frozen=True)
class DeterministicQuantizer:
    """Map ``x -> mapping[x]`` from alphabet indices onto ``0..output_size-1``."""

    mapping: tuple[int, ...]
    output_size: int = 0  # 0 means "infer as max(mapping) + 1"

    def __post_init__(self):
        mapping = tuple(int(u) for u in self.mapping)
        if not mapping:
            raise DomainError("quantizer map must be non-empty")
        k = int(self.output_size) or max(mapping) + 1
        if any(u < 0 or u >= k for u in mapping):
            raise DomainError(f"quantizer map entries must lie in [0, {k - 1}], got {list(mapping)}")
        object.__setattr__(self, "mapping", mapping)
        object.__setattr__(self, "output_size", k)

    @property
    def input_size(self) -> int:
        return len(self.mapping)

    def preimage(self, u: int) -> tuple[int, ...]:
        return tuple(x for x, v in enumerate(self.mapping) if v == u)

    def levels_used(self) -> tuple[int, ...]:
        return tuple(sorted(set(self.mapping)))

    def canonical(self) -> "DeterministicQuantizer":
        """Relabel outputs in order of first occurrence over the alphabet."""
        return DeterministicQuantizer(canonical_map(self.mapping), self.output_size)

    def to_json(self) -> dict:
        return {"map": list(self.mapping)}


@dataclass(frozen=True)
class RandomizedQuantizer:
    """Mixture of deterministic quantizers sharing ``(|X|, K)``."""

    weights: tuple[float, ...]
    components: tuple[DeterministicQuantizer, ...]

    def __post_init__(self):
        comps = tuple(self.components)
        if not comps:
            raise DomainError("randomized quantizer needs at least one component")
        w = np.asarray(self.weights, dtype=float)
        if w.shape != (len(comps),):
            raise DimensionMismatch(f"{w.size} weights for {len(comps)} components")
        w = as_probability_vector(w, "weights")
        n = comps[0].input_size
        if any(c.input_size != n for c in comps):
            raise DimensionMismatch("randomized quantizer components have different input alphabets")
        k = max(c.output_size for c in comps)
        comps = tuple(DeterministicQuantizer(c.mapping, k) for c in comps)
        object.__setattr__(self, "weights", tuple(float(x) for x in w))
        object.__setattr__(self, "components", comps)

    @property
    def input_size(self) -> int:
        return self.components[0].input_size

    @property
    def output_size(self) -> int:
        return self.components[0].output_size

    def to_json(self) -> dict:
        return {"weights": list(self.weights), "components": [list(c.mapping) for c in self.components]}


Quantizer = Union[DeterministicQuantizer, RandomizedQuantizer]


def quantizer_from_json(obj) -> Quantizer:
    if isinstance(obj, (list, tuple)):
        return DeterministicQuantizer(tuple(obj))
    if not isinstance(obj, dict):
        raise DomainError("quantizer: expected {'map': [...]} or {'weights': [...], 'components': [...]}")
    if "map" in obj:
        return DeterministicQuantizer(tuple(obj["map"]), int(obj.get("output_size", 0)))
    if "weights" in obj and "components" in obj:
        comps = tuple(DeterministicQuantizer(tuple(c)) for c in obj["components"])
        return RandomizedQuantizer(tuple(obj["weights"]), comps)
    raise DomainError("quantizer: expected key 'map' or keys 'weights' and 'components'")


def quantizer_to_json(q: Quantizer) -> dict:
    return q.to_json()


def canonical_map(mapping: Sequence[int]) -> tuple[int, ...]:
    seen: dict[int, int] = {}
    return tuple(seen.setdefault(u, len(seen)) for u in mapping)


# ---------------------------------------------------------------------------
# Induced channels
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class InducedChannel:
    """Output pmfs of a quantizer under each hypothesis.

    ``g0``/``g1`` keep all ``K`` outputs; outputs with zero mass under both
    hypotheses are excluded from ``support`` and from every derived quantity.
    """

    g0: np.ndarray
    g1: np.ndarray
    name: str = ""
    support: np.ndarray = field(init=False, repr=False)
    d0: float = field(init=False)
    d1: float = field(init=False)
    llr_bound: float = field(init=False)

    def __post_init__(self):
        g0 = as_probability_vector(self.g0, "g0")
        g1 = as_probability_vector(self.g1, "g1")
        if g0.shape != g1.shape:
            raise DimensionMismatch(f"g0 has {g0.size} entries, g1 has {g1.size}")
        if np.any((g0 > 0) != (g1 > 0)):
            raise AbsoluteContinuityViolation(
                f"channel {self.name!r}: output with mass under one hypothesis only"
            )
        support = _frozen(np.flatnonzero(g0 > 0))
        object.__setattr__(self, "g0", g0)
        object.__setattr__(self, "g1", g1)
        object.__setattr__(self, "support", support)
        object.__setattr__(self, "d0", kl(g0, g1))
        object.__setattr__(self, "d1", kl(g1, g0))
        object.__setattr__(self, "llr_bound", float(np.max(np.abs(self.llr))))

    @property
    def p0(self) -> np.ndarray:
        return self.g0[self.support]

    @property
    def p1(self) -> np.ndarray:
        return self.g1[self.support]

    @property
    def llr(self) -> np.ndarray:
        """Per-output log-likelihood ratio ``ln(g1/g0)`` on the support."""
        return np.log(self.p1 / self.p0)

    @property
    def degenerate(self) -> bool:
        return self.d0 <= 0.0 or self.d1 <= 0.0

    def require_nondegenerate(self) -> "InducedChannel":
        if self.degenerate:
            label = f" {self.name!r}" if self.name else ""
            raise DegenerateChannel(
                f"channel{label} has D0={self.d0:g}, D1={self.d1:g}; both must be > 0"
            )
        return self

    def renamed(self, name: str) -> "InducedChannel":
        return InducedChannel(self.g0, self.g1, name)


def mix_channels(weights: Sequence[float], channels: Sequence[InducedChannel], name: str = "") -> InducedChannel:
    """Weight-convex combination of channels over a common output alphabet."""
    w = as_probability_vector(weights, "weights")
    if len(channels) != w.size:
        raise DimensionMismatch(f"{w.size} weights for {len(channels)} channels")
    sizes = {ch.g0.size for ch in channels}
    if len(sizes) != 1:
        raise DimensionMismatch(f"channels have different output sizes {sorted(sizes)}")
    g0 = sum(wi * ch.g0 for wi, ch in zip(w, channels))
    g1 = sum(wi * ch.g1 for wi, ch in zip(w, channels))
    return InducedChannel(g0, g1, name)


def induce(q: Quantizer, hp: HypothesisPair, name: str = "", allow_degenerate: bool = False) -> InducedChannel:
    """Distribution of ``phi(X)`` under each hypothesis."""
    if q.input_size != hp.alphabet_size:
        raise DimensionMismatch(
            f"quantizer expects |X|={q.input_size}, hypothesis pair has |X|={hp.alphabet_size}"
        )
    if isinstance(q, DeterministicQuantizer):
        idx = np.asarray(q.mapping)
        g0 = np.bincount(idx, weights=hp.f0, minlength=q.output_size)
        g1 = np.bincount(idx, weights=hp.f1, minlength=q.output_size)
        ch = InducedChannel(g0, g1, name)
    else:
        parts = [induce(c, hp, allow_degenerate=True) for c in q.components]
        ch = mix_channels(q.weights, parts, name)
    if not allow_degenerate:
        ch.require_nondegenerate()
    return ch


# ---------------------------------------------------------------------------
# Enumeration and likelihood-ratio structure
# ---------------------------------------------------------------------------


def enumerate_quantizers(alphabet_size: int, K: int, budget: int = ENUMERATION_BUDGET) -> list[DeterministicQuantizer]:
    """All non-constant maps ``X -> {0..K-1}`` up to output relabeling, in lexicographic order.

    Each map is returned in canonical form (labels numbered by first
    occurrence). Maps leaving some of the ``K`` levels unused are included.
    """
    if alphabet_size < 2 or K < 2:
        raise DomainError(f"need alphabet_size >= 2 and K >= 2, got ({alphabet_size}, {K})")
    total = K**alphabet_size
    if total > budget:
        raise SizeLimit(f"{K}^{alphabet_size} = {total} maps exceeds the enumeration budget {budget}")
    out = []
    for m in itertools.product(range(K), repeat=alphabet_size):
        if canonical_map(m) == m and max(m) > 0:
            out.append(DeterministicQuantizer(m, K))
    return out


def _ratio_groups(hp: HypothesisPair) -> list[list[int]]:
    """Positive-mass alphabet points grouped by (tolerance-equal) likelihood ratio, ascending."""
    ratios = hp.likelihood_ratios()
    pts = sorted(hp.support.tolist(), key=lambda x: ratios[x])
    groups: list[list[int]] = []
    for x in pts:
        if groups:
            ref = ratios[groups[-1][0]]
            if abs(ratios[x] - ref) <= RATIO_TIE_RTOL * max(ratios[x], ref):
                groups[-1].append(x)
                continue
        groups.append([x])
    return groups


def is_llr_threshold(q: Quantizer, hp: HypothesisPair) -> bool:
    """True iff every output level is a contiguous block in likelihood-ratio order.

    Points with equal ratios may be ordered freely, so tied points may be
    split between the two adjacent blocks. Zero-mass points are ignored.
    """
    if not isinstance(q, DeterministicQuantizer):
        raise DomainError("is_llr_threshold requires a deterministic quantizer")
    if q.input_size != hp.alphabet_size:
        raise DimensionMismatch("quantizer and hypothesis pair have different alphabets")
    label_sets = [{q.mapping[x] for x in grp} for grp in _ratio_groups(hp)]
    span: dict[int, list[int]] = {}
    for gi, labels in enumerate(label_sets):
        for u in labels:
            span.setdefault(u, []).append(gi)
    # each label occupies a run of consecutive groups
    for gis in span.values():
        if gis[-1] - gis[0] + 1 != len(gis):
            return False
    for gi, labels in enumerate(label_sets):
        left = label_sets[gi - 1] & labels if gi > 0 else set()
        right = label_sets[gi + 1] & labels if gi + 1 < len(label_sets) else set()
        if len(left) > 1 or len(right) > 1:
            return False
        # a label continuing on both sides must fill the whole group
        if left and left == right and len(labels) > 1:
            return False
    return True


def make_llr_quantizer(hp: HypothesisPair, thresholds: Sequence[float], labels: Sequence[int]) -> DeterministicQuantizer:
    """Threshold the likelihood ratio: bucket ``l`` holds ``d_{l-1} < f1/f0 <= d_l``.

    A ratio equal to a threshold goes to the lower bucket. Zero-mass points
    are put in the first bucket.
    """
    d = np.asarray(thresholds, dtype=float)
    labels = tuple(int(u) for u in labels)
    if d.ndim != 1 or np.any(np.diff(d) <= 0):
        raise DomainError(f"thresholds must be strictly increasing, got {list(thresholds)}")
    if len(labels) != d.size + 1 or sorted(labels) != list(range(len(labels))):
        raise DomainError(f"labels must be a permutation of 0..{d.size}, got {list(labels)}")
    ratios = hp.likelihood_ratios()
    buckets = np.where(np.isnan(ratios), 0, np.searchsorted(d, np.nan_to_num(ratios), side="left"))
    counts = np.bincount(buckets, minlength=len(labels))
    if np.any(counts == 0):
        raise EmptyLevel(f"buckets {np.flatnonzero(counts == 0).tolist()} receive no alphabet point")
    return DeterministicQuantizer(tuple(labels[b] for b in buckets), len(labels))


def llr_threshold_parameters(q: DeterministicQuantizer, hp: HypothesisPair) -> tuple[list[float], list[int]]:
    """Thresholds and labels with which :func:`make_llr_quantizer` reproduces ``q``.

    Only defined when ``q`` is an LLR threshold rule that keeps tied points
    together; raises :class:`DomainError` otherwise.
    """
    if not is_llr_threshold(q, hp):
        raise DomainError("quantizer is not a likelihood ratio threshold rule")
    ratios = hp.likelihood_ratios()
    order: list[int] = []
    top: dict[int, float] = {}
    for grp in _ratio_groups(hp):
        grp_labels = {q.mapping[x] for x in grp}
        if len(grp_labels) > 1:
            raise DomainError("tied likelihood ratios are split across levels")
        (u,) = grp_labels
        if not order or order[-1] != u:
            order.append(u)
        top[u] = max(float(ratios[x]) for x in grp)
    zero_mass = [x for x in range(hp.alphabet_size) if hp.f0[x] == 0]
    if any(q.mapping[x] != order[0] for x in zero_mass):
        raise DomainError("zero-mass points are not on the first level")
    return [top[u] for u in order[:-1]], order
