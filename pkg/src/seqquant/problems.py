"""Problem files: a hypothesis pair, named quantizer designs and run settings.

Format (JSON)::

    {
      "hypothesis": {"f0": [...], "f1": [...], "prior1": 0.08},
      "designs": {"A": {"map": [0, 1, 1]}, "R": {"weights": [...], "components": [[...], ...]}},
      "dp": {"c": 0.01, "grid_size": 100001, "tol": 1e-7, "max_iters": 500, "grid": "auto"},
      "sim": {"trials": 100000, "seed": 0}
    }

Only ``hypothesis`` and ``designs`` are required.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, fields
from pathlib import Path

from .dp import DPConfig
from .errors import ParseError, SeqQuantError
from .models import HypothesisPair, Quantizer, quantizer_from_json

_DP_KEYS = {f.name for f in fields(DPConfig)}
_SIM_KEYS = {"trials", "seed", "step_cap"}


@dataclass(frozen=True)
class ProblemFile:
    hypothesis: HypothesisPair
    designs: dict
    dp: dict = field(default_factory=dict)
    sim: dict = field(default_factory=dict)
    name: str = ""

    def design(self, name: str) -> Quantizer:
        try:
            return self.designs[name]
        except KeyError:
            raise ParseError(f"unknown design {name!r}; available: {', '.join(self.designs)}") from None

    def dp_config(self, **overrides) -> DPConfig:
        merged = {**self.dp, **{k: v for k, v in overrides.items() if v is not None}}
        try:
            return DPConfig(**merged)
        except SeqQuantError as exc:
            raise ParseError(f"dp: {exc}") from None


def _field(path: str, fn, *args):
    try:
        return fn(*args)
    except ParseError:
        raise
    except (SeqQuantError, TypeError, ValueError) as exc:
        raise ParseError(f"{path}: {exc}") from None


def _check_numbers(path: str, values) -> None:
    if not isinstance(values, list):
        raise ParseError(f"{path}: expected a list of numbers")
    for i, v in enumerate(values):
        if isinstance(v, bool) or not isinstance(v, (int, float)):
            raise ParseError(f"{path}[{i}]: expected a number, got {json.dumps(v)}")


def problem_from_json(obj, name: str = "") -> ProblemFile:
    if not isinstance(obj, dict):
        raise ParseError("top level: expected a JSON object")
    unknown = set(obj) - {"hypothesis", "designs", "dp", "sim", "name"}
    if unknown:
        raise ParseError(f"top level: unknown key(s) {sorted(unknown)}")
    for key in ("hypothesis", "designs"):
        if key not in obj:
            raise ParseError(f"top level: missing required key {key!r}")

    hyp = obj["hypothesis"]
    if not isinstance(hyp, dict):
        raise ParseError("hypothesis: expected an object with keys f0, f1, prior1")
    for key in ("f0", "f1"):
        if key not in hyp:
            raise ParseError(f"hypothesis.{key}: missing")
        _check_numbers(f"hypothesis.{key}", hyp[key])
    hp = _field("hypothesis", HypothesisPair.from_json, hyp)

    raw = obj["designs"]
    if not isinstance(raw, dict) or not raw:
        raise ParseError("designs: expected a non-empty object of named quantizers")
    designs = {}
    for dname, spec in raw.items():
        path = f"designs.{dname}"
        if isinstance(spec, dict) and "map" in spec:
            _check_numbers(f"{path}.map", spec["map"])
        q = _field(path, quantizer_from_json, spec)
        if q.input_size != hp.alphabet_size:
            raise ParseError(f"{path}: map covers {q.input_size} symbols, alphabet has {hp.alphabet_size}")
        designs[dname] = q

    dp = obj.get("dp", {})
    if not isinstance(dp, dict):
        raise ParseError("dp: expected an object")
    bad = set(dp) - _DP_KEYS
    if bad:
        raise ParseError(f"dp: unknown key(s) {sorted(bad)}")
    sim = obj.get("sim", {})
    if not isinstance(sim, dict):
        raise ParseError("sim: expected an object")
    bad = set(sim) - _SIM_KEYS
    if bad:
        raise ParseError(f"sim: unknown key(s) {sorted(bad)}")
    for key, v in sim.items():
        if isinstance(v, bool) or not isinstance(v, int) or v < 0:
            raise ParseError(f"sim.{key}: expected a non-negative integer, got {json.dumps(v)}")
    prob = ProblemFile(hp, designs, dict(dp), dict(sim), obj.get("name", name))
    prob.dp_config()  # validate overrides eagerly
    return prob


def parse_problem(text: str, name: str = "") -> ProblemFile:
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"line {exc.lineno} column {exc.colno}: {exc.msg}") from None
    return problem_from_json(obj, name)


def load_problem(path: str | Path) -> ProblemFile:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ParseError(f"{path}: {exc.strerror}") from None
    try:
        return parse_problem(text, path.stem)
    except ParseError as exc:
        raise ParseError(f"{path}: {exc}") from None


COUNTEREXAMPLE = {
    "name": "counterexample",
    "hypothesis": {"f0": [0.8, 0.1999, 0.0001], "f1": [1 / 3, 1 / 3, 1 / 3], "prior1": 0.08},
    "designs": {"A": {"map": [0, 1, 1]}, "B": {"map": [0, 0, 1]}, "C": {"map": [0, 1, 0]}},
    "dp": {"c": 0.01},
    "sim": {"trials": 100000, "seed": 0},
}

BUILTINS = {"counterexample": COUNTEREXAMPLE}


def builtin_problem(name: str) -> ProblemFile:
    if name not in BUILTINS:
        raise ParseError(f"unknown builtin {name!r}; available: {', '.join(BUILTINS)}")
    return problem_from_json(BUILTINS[name], name)
