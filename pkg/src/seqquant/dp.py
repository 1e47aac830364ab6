"""Exact Bayes-optimal sequential cost by value iteration on the posterior.

The state is the posterior ``p = P(H=1 | data)``. Stopping at ``p`` costs
``g(p) = min(p, 1-p)``; sampling once more with channel ``phi`` costs ``c``
plus the expected cost-to-go at the updated posterior. Cost-to-go tables
live on a grid and are linearly interpolated between nodes.

Two grids are supported: a uniform grid on ``p in [0, 1]`` and, for very
small ``c`` where the continuation region hugs ``p = 0`` and ``p = 1``, a
uniform grid in log-odds ``ln(p/(1-p))`` on ``[-L, L]``. Outside the
log-odds range the table is taken to equal ``g`` (immediate stopping).
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import DomainError, NoConvergence, ZeroMass
from .models import InducedChannel


@dataclass(frozen=True)
class DPConfig:
    c: float = 0.01
    grid_size: int = 100001
    max_iters: int = 500
    tol: float = 1e-7
    grid: str = "auto"  # "uniform", "logodds" or "auto"
    logodds_halfwidth: float = 40.0
    small_c_threshold: float = 1e-4

    def __post_init__(self):
        if not self.c > 0:
            raise DomainError(f"c must be > 0, got {self.c}")
        if self.grid_size < 101:
            raise DomainError(f"grid_size must be >= 101, got {self.grid_size}")
        if not self.tol > 0:
            raise DomainError(f"tol must be > 0, got {self.tol}")
        if self.max_iters < 1:
            raise DomainError("max_iters must be >= 1")
        if self.grid not in ("auto", "uniform", "logodds"):
            raise DomainError(f"unknown grid kind {self.grid!r}")

    @property
    def grid_kind(self) -> str:
        if self.grid != "auto":
            return self.grid
        return "logodds" if self.c <= self.small_c_threshold else "uniform"


def stop_cost(p):
    p = np.asarray(p, dtype=float)
    return np.minimum(p, 1.0 - p)


def _stop_cost_logodds(lam):
    # min(p, 1-p) with p = sigmoid(lam), stable for large |lam|
    return 1.0 / (1.0 + np.exp(np.abs(lam)))


def _sigmoid(lam):
    lam = np.asarray(lam, dtype=float)
    e = np.exp(-np.abs(lam))
    return np.where(lam >= 0, 1.0 / (1.0 + e), e / (1.0 + e))


@dataclass(frozen=True, eq=False)
class PosteriorGrid:
    kind: str
    coords: np.ndarray  # interpolation coordinate: p or log-odds
    p: np.ndarray

    @classmethod
    def build(cls, cfg: DPConfig) -> "PosteriorGrid":
        if cfg.grid_kind == "uniform":
            p = np.linspace(0.0, 1.0, cfg.grid_size)
            coords = p
        else:
            L = cfg.logodds_halfwidth
            coords = np.linspace(-L, L, cfg.grid_size)
            p = _sigmoid(coords)
        coords.setflags(write=False)
        p.setflags(write=False)
        return cls(cfg.grid_kind, coords, p)

    @property
    def size(self) -> int:
        return int(self.coords.size)

    def stop_cost(self) -> np.ndarray:
        if self.kind == "uniform":
            return stop_cost(self.p)
        return _stop_cost_logodds(self.coords)

    def interpolate(self, values: np.ndarray, p) -> np.ndarray:
        p = np.asarray(p, dtype=float)
        if self.kind == "uniform":
            return np.interp(p, self.coords, values)
        with np.errstate(divide="ignore"):
            lam = np.log(p) - np.log1p(-p)
        return self._interp_logodds(values, lam)

    def _interp_logodds(self, values: np.ndarray, lam: np.ndarray) -> np.ndarray:
        lo, hi = self.coords[0], self.coords[-1]
        inside = (lam >= lo) & (lam <= hi)
        return np.where(inside, np.interp(np.clip(lam, lo, hi), self.coords, values), _stop_cost_logodds(lam))

    def expected_next(self, ch: InducedChannel, nxt: np.ndarray) -> np.ndarray:
        """``sum_u m(u|p) * nxt(p'(p, u))`` at every node, summed in fixed output order."""
        acc = np.zeros(self.size)
        for g0, g1, llr in zip(ch.p0, ch.p1, ch.llr):
            mass = self.p * g1 + (1.0 - self.p) * g0
            if self.kind == "uniform":
                nxt_p = self.p * g1 / mass
                acc += mass * np.interp(nxt_p, self.coords, nxt)
            else:
                acc += mass * self._interp_logodds(nxt, self.coords + llr)
        return acc


@dataclass(frozen=True, eq=False)
class ValueFunction:
    """Tabulated optimal cost-to-go ``J`` for one slot of a (periodic) schedule."""

    grid: PosteriorGrid
    values: np.ndarray
    cost_c: float
    channel_tag: str = ""
    iterations: int = 0
    converged: bool = True
    last_change: float = 0.0
    monotone: bool = True  # iterates never increased anywhere

    @property
    def grid_size(self) -> int:
        return self.grid.size

    @property
    def p(self) -> np.ndarray:
        return self.grid.p

    def __call__(self, p):
        out = self.grid.interpolate(self.values, p)
        return float(out) if np.ndim(out) == 0 else out

    def continue_region(self, atol: float = 1e-14) -> tuple[float, float] | None:
        """Smallest and largest grid posteriors where sampling beats stopping."""
        idx = np.flatnonzero(self.values < self.grid.stop_cost() - atol)
        if idx.size == 0:
            return None
        return float(self.p[idx[0]]), float(self.p[idx[-1]])

    def require_converged(self) -> "ValueFunction":
        if not self.converged:
            raise NoConvergence(
                f"value iteration for {self.channel_tag or 'schedule'} stopped after {self.iterations} "
                f"sweeps with sup-change {self.last_change:.3g}",
                self.last_change,
            )
        return self

    def to_csv(self, fh=None) -> str | None:
        """Write ``p,J`` rows; returns the text when ``fh`` is None."""
        sink = io.StringIO() if fh is None else fh
        w = csv.writer(sink, lineterminator="\n")
        w.writerow(["p", "J"])
        for p, v in zip(self.p.tolist(), self.values.tolist()):
            w.writerow([repr(p), repr(v)])
        return sink.getvalue() if fh is None else None


def value_at(vf: ValueFunction, p: float) -> float:
    if not 0.0 <= p <= 1.0:
        raise DomainError(f"posterior must lie in [0, 1], got {p}")
    return vf(p)


def posterior_update(p: float, u: int, channel: InducedChannel) -> float:
    """Bayes update of ``P(H=1)`` after observing output ``u`` of ``channel``."""
    if not 0.0 <= p <= 1.0:
        raise DomainError(f"posterior must lie in [0, 1], got {p}")
    num = p * channel.g1[u]
    den = num + (1.0 - p) * channel.g0[u]
    if den <= 0:
        raise ZeroMass(f"output {u} has zero probability at p={p}")
    return float(num / den)


def _bellman(grid: PosteriorGrid, g: np.ndarray, c: float, ch: InducedChannel, nxt: np.ndarray) -> np.ndarray:
    return np.minimum(g, c + grid.expected_next(ch, nxt))


def solve_periodic(channels: Sequence[InducedChannel], cfg: DPConfig) -> list[ValueFunction]:
    """Jointly iterate the ``T`` coupled Bellman equations of a period-``T`` schedule.

    ``J_t(p) = min(g(p), c + E[J_{t+1 mod T}(p') | p, phi_t])``; the schedule's
    cost from prior ``pi1`` is ``result[0](pi1)``. Iteration starts from
    ``J = g`` (so iterates decrease monotonically) and stops when the
    sup-norm change over all tables drops below ``cfg.tol`` or after
    ``cfg.max_iters`` sweeps. Non-convergence is reported through the
    ``converged`` flag, not raised.
    """
    if not channels:
        raise DomainError("schedule needs at least one channel")
    for ch in channels:
        ch.require_nondegenerate()
    grid = PosteriorGrid.build(cfg)
    g = grid.stop_cost()
    T = len(channels)
    tables = [g.copy() for _ in range(T)]
    change = np.inf
    monotone = True
    it = 0
    for it in range(1, cfg.max_iters + 1):
        new = [_bellman(grid, g, cfg.c, channels[t], tables[(t + 1) % T]) for t in range(T)]
        change = max(float(np.max(np.abs(n - o))) for n, o in zip(new, tables))
        monotone = monotone and all(bool(np.all(n <= o)) for n, o in zip(new, tables))
        tables = new
        if change < cfg.tol:
            break
    converged = change < cfg.tol
    out = []
    for t, vals in enumerate(tables):
        vals.setflags(write=False)
        out.append(
            ValueFunction(grid, vals, cfg.c, channels[t].name or f"slot{t}", it, converged, change, monotone)
        )
    return out


def solve_stationary(channel: InducedChannel, cfg: DPConfig) -> ValueFunction:
    """Optimal cost-to-go when the same quantizer is used at every step."""
    return solve_periodic([channel], cfg)[0]


def backward_induction(prefix: Sequence[InducedChannel], tail: ValueFunction, c: float | None = None) -> np.ndarray:
    """Cost-to-go table at the start of ``prefix`` followed by the schedule behind ``tail``."""
    c = tail.cost_c if c is None else c
    grid = tail.grid
    g = grid.stop_cost()
    vals = tail.values
    for ch in reversed(list(prefix)):
        ch.require_nondegenerate()
        vals = _bellman(grid, g, c, ch, vals)
    return vals


def prefix_cost(prefix: Sequence[InducedChannel], tail: ValueFunction, prior_p: float, cfg: DPConfig | None = None) -> float:
    """Cost of running ``prefix`` once and then the (converged) schedule of ``tail``.

    Raises :class:`NoConvergence` (carrying the computed value) if ``tail``
    did not converge.
    """
    if not 0.0 <= prior_p <= 1.0:
        raise DomainError(f"prior must lie in [0, 1], got {prior_p}")
    c = tail.cost_c if cfg is None else cfg.c
    if cfg is not None and abs(cfg.c - tail.cost_c) > 0:
        raise DomainError(f"cfg.c={cfg.c} differs from the tail's c={tail.cost_c}")
    vals = backward_induction(prefix, tail, c)
    cost = float(tail.grid.interpolate(vals, prior_p))
    if not tail.converged:
        raise NoConvergence(
            f"tail value function did not converge (sup-change {tail.last_change:.3g})",
            tail.last_change,
            value=cost,
        )
    return cost


@dataclass(frozen=True)
class CostReport:
    design: str
    prior1: float
    c: float
    grid_size: int
    iterations: int
    cost: float
    grid: str = "uniform"
    converged: bool = True
    continue_region: tuple[float, float] | None = field(default=None)

    def to_json(self) -> str:
        obj = {
            "design": self.design,
            "prior1": self.prior1,
            "c": self.c,
            "grid_size": self.grid_size,
            "iterations": self.iterations,
            "cost": self.cost,
            "grid": self.grid,
            "converged": self.converged,
            "continue_region": list(self.continue_region) if self.continue_region else None,
        }
        return json.dumps(obj, sort_keys=True)


def schedule_cost(
    prefix: Sequence[InducedChannel],
    cycle: Sequence[InducedChannel],
    prior1: float,
    cfg: DPConfig,
    design: str = "",
) -> tuple[CostReport, ValueFunction]:
    """Exact cost of ``prefix`` followed by the repeating ``cycle``.

    Returns the report and the value function at the start of the cycle.
    """
    tables = solve_periodic(cycle, cfg)
    head = tables[0]
    if prefix:
        vals = backward_induction(prefix, head, cfg.c)
        cost = float(head.grid.interpolate(vals, prior1))
    else:
        cost = head(prior1)
    report = CostReport(
        design or "+".join(ch.name for ch in (*prefix, *cycle)),
        prior1,
        cfg.c,
        head.grid_size,
        head.iterations,
        cost,
        head.grid.kind,
        head.converged,
        head.continue_region(),
    )
    return report, head
