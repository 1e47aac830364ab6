"""``seqquant`` command line.

Human-readable tables go to stdout; machine output goes only to the files
named by ``--json``/``--csv``/``--trace``. Exit codes: 0 success, 1 a check
failed, 2 usage or input error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from pathlib import Path
from typing import Sequence

from . import asymptotics as asy
from . import checks
from .dp import CostReport, DPConfig, backward_induction, solve_periodic
from .errors import (
    AbsoluteContinuityViolation,
    DimensionMismatch,
    DomainError,
    EmptyLevel,
    NoConvergence,
    ParseError,
    SeqQuantError,
    SizeLimit,
)
from .models import enumerate_quantizers, induce, is_llr_threshold
from .problems import ProblemFile, builtin_problem, load_problem
from .sprt import QuantizerSchedule, SprtSpec, compare_with_wald, simulate_trials, summarize, thresholds_from_errors, wald_bracket

EXIT_OK, EXIT_CHECK, EXIT_USAGE, EXIT_NUMERIC = 0, 1, 2, 3
_INPUT_ERRORS = (ParseError, DomainError, DimensionMismatch, AbsoluteContinuityViolation, EmptyLevel, SizeLimit)


def _write_json(path: str | None, obj) -> None:
    if path:
        Path(path).write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n")


def _problem(args) -> ProblemFile:
    if args.problem:
        return load_problem(args.problem)
    return builtin_problem(args.builtin)


def _prior(args, prob: ProblemFile) -> float:
    if getattr(args, "ratio", None) is not None:
        return asy.prior1_from_ratio(args.ratio)
    if getattr(args, "prior", None) is not None:
        return args.prior
    return prob.hypothesis.prior1


def _names(text: str) -> list[str]:
    return [s.strip() for s in text.split(",") if s.strip()]


def _channel(prob: ProblemFile, name: str):
    return induce(prob.design(name), prob.hypothesis, name=name)


def _table(rows: Sequence[Sequence], header: Sequence[str]) -> str:
    cells = [list(map(str, header))] + [[str(c) for c in r] for r in rows]
    widths = [max(len(r[i]) for r in cells) for i in range(len(header))]
    return "\n".join("  ".join(c.rjust(w) for c, w in zip(r, widths)) for r in cells)


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------


def cmd_kl(args) -> int:
    prob = _problem(args)
    rows = []
    for name in prob.designs:
        ch = _channel(prob, name)
        rows.append((name, ch.d0, ch.d1, ch.llr_bound))
    print(_table([(n, f"{a:.6f}", f"{b:.6f}", f"{m:.6f}") for n, a, b, m in rows], ["design", "D0", "D1", "M"]))
    if args.csv:
        lines = ["design,D0,D1,M"] + [f"{n},{a!r},{b!r},{m!r}" for n, a, b, m in rows]
        Path(args.csv).write_text("\n".join(lines) + "\n")
    _write_json(args.json, [{"design": n, "D0": a, "D1": b, "M": m} for n, a, b, m in rows])
    return EXIT_OK


def cmd_dp(args) -> int:
    prob = _problem(args)
    cfg = prob.dp_config(c=args.c, grid_size=args.grid_size, tol=args.tol, max_iters=args.max_iters, grid=args.grid)
    prior1 = _prior(args, prob)
    if args.design:
        prefix, cycle = [], [args.design]
    elif args.cycle:
        prefix, cycle = [], _names(args.cycle)
    elif args.tail:
        prefix, cycle = _names(args.prefix or ""), _names(args.tail)
    else:
        raise ParseError("dp: give --design, --cycle or --prefix/--tail")
    pre = [_channel(prob, n) for n in prefix]
    cyc = [_channel(prob, n) for n in cycle]
    head = solve_periodic(cyc, cfg)[0]
    if not head.converged:
        raise NoConvergence(
            f"value iteration stopped after {head.iterations} sweeps; last sup-change {head.last_change:.3g}",
            head.last_change,
        )
    vals = backward_induction(pre, head, cfg.c)
    cost = float(head.grid.interpolate(vals, prior1))
    design = ("+".join(prefix) + "|" if prefix else "") + ",".join(cycle)
    report = CostReport(design, prior1, cfg.c, head.grid_size, head.iterations, cost, head.grid.kind, True, head.continue_region())
    print(f"design      {design}")
    print(f"prior1      {prior1:g}")
    print(f"c           {cfg.c:g}")
    print(f"grid        {head.grid.kind} ({head.grid_size} points)")
    print(f"iterations  {head.iterations}")
    print(f"cost        {cost:.8f}")
    region = report.continue_region
    print("continue    " + (f"({region[0]:.6g}, {region[1]:.6g})" if region else "empty (stop immediately)"))
    if args.csv:
        with open(args.csv, "w", newline="") as fh:
            head.to_csv(fh)
    if args.json:
        Path(args.json).write_text(report.to_json() + "\n")
    return EXIT_OK


def _asym_report(prob: ProblemFile, pair: list[str], prior1: float) -> dict:
    if len(pair) != 2:
        raise ParseError("--pair needs exactly two design names")
    ch1, ch2 = (_channel(prob, n) for n in pair)
    iv = asy.asymmetry_interval(ch1, ch2)
    delta = asy.crossover_ratio(ch1, ch2)
    coeffs = {n: asy.cost_coefficient(prior1, _channel(prob, n)).value for n in prob.designs if not _channel_degenerate(prob, n)}
    dom = {
        a: {b: asy.dominance(_channel(prob, a), _channel(prob, b)).value for b in coeffs if b != a} for a in coeffs
    }
    alt = asy.blockwise_coefficient(prior1, [ch1, ch2]).value
    ratio = (1 - prior1) / prior1
    return {
        "pair": pair,
        "prior1": prior1,
        "ratio": ratio,
        "G": coeffs,
        "G_alternating": alt,
        "delta": delta,
        "case": asy.classify_prior(ch1, ch2, ratio).name,
        "dominance": dom,
        **iv.to_json(),
    }


def _channel_degenerate(prob: ProblemFile, name: str) -> bool:
    return induce(prob.design(name), prob.hypothesis, allow_degenerate=True).degenerate


def _print_multisensor(rep: asy.MultiSensorReport) -> None:
    for k, g in enumerate(rep.stationary):
        print(f"G_{k}        {g:.8f}")
    print(f"G_alt      {rep.nonstationary:.8f}")
    print(f"(U, V)     ({rep.interval.lower:.6f}, {rep.interval.upper:.6f})")


def cmd_asym(args) -> int:
    prob = _problem(args)
    prior1 = _prior(args, prob)
    pair = _names(args.pair)
    rep = _asym_report(prob, pair, prior1)
    for name, g in rep["G"].items():
        print(f"G[{name}]       {g:.8f}")
    print(f"G_alt      {rep['G_alternating']:.8f}  (alternating {pair[0]},{pair[1]})")
    print(f"(U, V)     ({rep['U']:.6f}, {rep['V']:.6f})")
    print(f"delta      {rep['delta']:.6f}")
    print(f"ratio      {rep['ratio']:.6f}  -> {rep['case']}")
    print("dominance")
    for a, row in rep["dominance"].items():
        for b, rel in row.items():
            print(f"  {a} vs {b}: {rel}")
    if args.sensors:
        ms = asy.multisensor_coefficients(args.sensors, _channel(prob, pair[1]), _channel(prob, pair[0]), prior1)
        _print_multisensor(ms)
        rep["multisensor"] = ms.to_json()
    _write_json(args.json, rep)
    return EXIT_OK


def cmd_multisensor(args) -> int:
    prob = _problem(args)
    prior1 = _prior(args, prob)
    pair = _names(args.pair)
    if len(pair) != 2:
        raise ParseError("--pair needs exactly two design names (A-like first, B-like second)")
    rep = asy.multisensor_coefficients(args.sensors, _channel(prob, pair[0]), _channel(prob, pair[1]), prior1)
    _print_multisensor(rep)
    _write_json(args.json, rep.to_json())
    return EXIT_OK


def cmd_simulate(args) -> int:
    prob = _problem(args)
    prior1 = _prior(args, prob)
    hp = prob.hypothesis.with_prior(prior1)
    c = args.c if args.c is not None else prob.dp_config().c
    trials = args.trials if args.trials is not None else prob.sim.get("trials", 100_000)
    seed = args.seed if args.seed is not None else prob.sim.get("seed", 0)
    cap = args.step_cap if args.step_cap is not None else prob.sim.get("step_cap", 10_000_000)
    q = prob.design(args.design)
    ch = induce(q, hp, name=args.design)
    if args.alpha is not None and args.beta is not None:
        alpha, beta = args.alpha, args.beta
    else:
        alpha, beta = asy.optimal_errors(c, prior1, ch.d0, ch.d1)
    a, b = thresholds_from_errors(alpha, beta)
    spec = SprtSpec(a, b, QuantizerSchedule.stationary(q), hp, c)
    record = simulate_trials(spec, trials, seed, cap)
    res = summarize(record, spec, seed)
    cmp = compare_with_wald(res, spec)
    br = wald_bracket(res, spec)
    print(f"thresholds  a={a:.6f}  b={b:.6f}")
    print(f"trials      {res.trials}  (seed {seed})")
    print(f"alpha_hat   {res.alpha_hat:.6g} +/- {res.alpha_stderr:.2g}")
    print(f"beta_hat    {res.beta_hat:.6g} +/- {res.beta_stderr:.2g}")
    print(f"E0[N]       {res.mean_n0:.6g}    E1[N] {res.mean_n1:.6g}")
    print(f"cost_hat    {res.cost_hat:.6g} +/- {res.cost_stderr:.2g}")
    print(f"wald cost   {cmp.wald_cost:.6g}  |diff| <= {cmp.bound:.3g}: {'pass' if cmp.passed else 'FAIL'}")
    print(f"bracket     {'pass' if br.passed else 'FAIL'}")
    if args.json:
        obj = {"result": json.loads(res.to_json()), "wald": cmp.to_json(), "bracket": br.to_json(), "a": a, "b": b}
        _write_json(args.json, obj)
    if args.trace:
        with open(args.trace, "w", newline="") as fh:
            record.to_csv(fh)
    return EXIT_OK if cmp.passed and br.passed else EXIT_CHECK


def _suite(prob: ProblemFile, seed: int, quick: bool, inject_bug: bool) -> dict:
    hp = prob.hypothesis
    scale = 10 if quick else 1
    suite = {}

    def lemma():
        return checks.check_unnormalized_kl_lemma(100_000 // scale, seed)

    def quasi():
        parts = [
            checks.check_quasiconcavity(*cs, samples=100_000 // scale, seed=seed, tangent_samples=10_000 // scale)
            for cs in ((1, 1, 0, 0), (1, 0, 0, 0), (1, 1, 0.5, 0.5), (1 - hp.prior1, hp.prior1, 0, 0))
        ]
        return checks.combine_reports("quasiconcavity", parts, seed)

    def final():
        return checks.check_final_inequality(negate=inject_bug)

    def pseudo():
        best = checks.best_quantizers(hp, 2)["quantizer"]
        return checks.check_pseudo_llr(best, hp)

    def llr():
        single = checks.verify_llr_optimality(hp, 2)
        rnd = checks.verify_llr_optimality(K=None, trials=50 // (5 if quick else 1), seed=seed)
        return checks.combine_reports("llr_optimality", [single, rnd], seed)

    def extreme():
        return checks.verify_extreme_points(hp, samples=10_000 // scale, seed=seed)

    suite.update(
        unnormalized_kl_lemma=lemma,
        quasiconcavity=quasi,
        final_inequality=final,
        pseudo_llr=pseudo,
        llr_optimality=llr,
        extreme_points=extreme,
    )
    return suite


def cmd_verify(args) -> int:
    prob = _problem(args)
    suite = _suite(prob, args.seed, args.quick, args.inject_bug)
    names = args.only or list(suite)
    unknown = [n for n in names if n not in suite]
    if unknown:
        raise ParseError(f"unknown check(s) {unknown}; available: {', '.join(suite)}")
    if args.inject_bug and "final_inequality" not in names:
        names.append("final_inequality")
    reports = [suite[n]() for n in names]
    for r in reports:
        status = "pass" if r.passed else "FAIL"
        print(f"{status}  {r.name:<22} n={r.samples_or_cells:<8} failures={r.failures:<6} worst_margin={r.worst_margin:.3g}")
    ok = all(r.passed for r in reports)
    print("suite: " + ("all checks passed" if ok else "FAILED"))
    _write_json(args.json, {"passed": ok, "seed": args.seed, "checks": [r.to_json() for r in reports]})
    return EXIT_OK if ok else EXIT_CHECK


def cmd_search(args) -> int:
    prob = _problem(args)
    prior1 = _prior(args, prob)
    hp = prob.hypothesis
    rows = []
    for q in enumerate_quantizers(hp.alphabet_size, args.levels):
        ch = induce(q, hp, allow_degenerate=True)
        G = math.inf if ch.degenerate else asy.cost_coefficient(prior1, ch).value
        rows.append((G, list(q.mapping), is_llr_threshold(q, hp), ch.d0, ch.d1))
    rows.sort(key=lambda r: (r[0], r[1]))
    top = rows[: args.top]
    print(_table([(f"{G:.8f}", m, "yes" if l else "no", f"{a:.6f}", f"{b:.6f}") for G, m, l, a, b in top], ["G", "map", "llr", "D0", "D1"]))
    _write_json(
        args.json,
        {"prior1": prior1, "levels": args.levels, "ranked": [{"G": G, "map": m, "llr": l, "D0": a, "D1": b} for G, m, l, a, b in top]},
    )
    return EXIT_OK


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="seqquant", description="Quantizer design for sequential detection.")
    sub = parser.add_subparsers(dest="command", required=True)

    common = argparse.ArgumentParser(add_help=False)
    src = common.add_mutually_exclusive_group()
    src.add_argument("--problem", metavar="FILE", help="problem JSON file")
    src.add_argument("--builtin", default="counterexample", metavar="NAME", help="builtin problem (default: counterexample)")
    common.add_argument("--json", metavar="FILE", help="write machine-readable output here")
    prior = argparse.ArgumentParser(add_help=False)
    pg = prior.add_mutually_exclusive_group()
    pg.add_argument("--prior", type=float, help="prior probability of H=1")
    pg.add_argument("--ratio", type=float, help="prior ratio pi0/pi1")

    p = sub.add_parser("kl", parents=[common], help="KL divergences of each design")
    p.add_argument("--csv", metavar="FILE")
    p.set_defaults(func=cmd_kl)

    p = sub.add_parser("dp", parents=[common, prior], help="exact Bayes cost by dynamic programming")
    shape = p.add_mutually_exclusive_group()
    shape.add_argument("--design", help="stationary design")
    shape.add_argument("--cycle", help="comma-separated periodic schedule")
    shape.add_argument("--tail", help="comma-separated cycle run after --prefix")
    p.add_argument("--prefix", help="comma-separated designs used once before --tail")
    p.add_argument("--c", type=float, help="cost per sample")
    p.add_argument("--grid-size", type=int)
    p.add_argument("--tol", type=float)
    p.add_argument("--max-iters", type=int)
    p.add_argument("--grid", choices=["auto", "uniform", "logodds"])
    p.add_argument("--csv", metavar="FILE", help="dump J(p) of the first cycle slot")
    p.set_defaults(func=cmd_dp)

    p = sub.add_parser("asym", parents=[common, prior], help="asymptotic cost coefficients of two designs")
    p.add_argument("--pair", default="B,A", help="two designs, smaller D0 first (default B,A)")
    p.add_argument("--sensors", type=int, help="also report the multi-sensor coefficients")
    p.set_defaults(func=cmd_asym)

    p = sub.add_parser("multisensor", parents=[common, prior], help="multi-sensor coefficients")
    p.add_argument("--sensors", type=int, default=2)
    p.add_argument("--pair", default="A,B", help="A-like design (larger D0) then B-like design")
    p.set_defaults(func=cmd_multisensor)

    p = sub.add_parser("simulate", parents=[common, prior], help="Monte Carlo SPRT")
    p.add_argument("--design", default="B")
    p.add_argument("--c", type=float)
    p.add_argument("--trials", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--alpha", type=float)
    p.add_argument("--beta", type=float)
    p.add_argument("--step-cap", type=int)
    p.add_argument("--trace", metavar="FILE", help="per-trial CSV")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("verify", parents=[common], help="run the numerical property suite")
    p.add_argument("--only", action="append", metavar="NAME")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--quick", action="store_true", help="one tenth of the default sample sizes")
    p.add_argument("--inject-bug", action="store_true", help="harness self-test: negate one inequality")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("search", parents=[common, prior], help="exhaustive deterministic quantizer search")
    p.add_argument("--levels", type=int, default=2)
    p.add_argument("--top", type=int, default=10)
    p.set_defaults(func=cmd_search)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code in (0, None) else EXIT_USAGE
    try:
        return args.func(args)
    except _INPUT_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except SeqQuantError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
