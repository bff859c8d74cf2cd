"""Command-line entry point: ``poitariff <command> --scenario file.json``."""

from __future__ import annotations

import argparse
import contextlib
import csv
import sys
from typing import Iterable, Sequence

import numpy as np

from .core_model import InvalidParameters, stage3_fractions
from .oracle import OracleConfig
from .scenario import Scenario, ScenarioError, load_scenario
from .sensitivity import SWEEP_HEADER, classify_monotonicity, sensitivity_thresholds, sweep
from .tariff_optimizer import (
    BargainingSpec,
    RiskUtility,
    app_revenue,
    bargaining_tariff,
    optimal_lump_sum_only,
    optimal_per_player_only,
    optimal_two_part,
    revenue_breakdown,
    solve_under_uncertainty,
)
from .venue_response import classify_situation, venue_best_response, venue_payoff
from .verification import run_verification

EXIT_OK, EXIT_INVALID, EXIT_MISMATCH = 0, 1, 2


def fmt(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return str(bool(x)).lower()
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return format(float(x), ".12g")
    return "" if x is None else str(x)


@contextlib.contextmanager
def _output(path: str | None):
    if path is None or path == "-":
        yield sys.stdout
    else:
        with open(path, "w", newline="") as fh:
            yield fh


def _write(path: str | None, header: Sequence[str], rows: Iterable[Sequence]) -> None:
    with _output(path) as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([fmt(x) for x in row])


def _improvement(two: float, other: float) -> float | None:
    return None if other == 0 else (two - other) / other * 100.0


def cmd_solve(sc: Scenario, args) -> int:
    p = sc.market
    t = optimal_two_part(p)
    b = revenue_breakdown(t, p)
    v = venue_best_response(t, p)
    out = stage3_fractions(v, p)
    rows = [
        ("situation", classify_situation(p).value),
        ("lump_sum_fee", t.l),
        ("per_player_charge", t.p),
        ("poi", v.r),
        ("investment", v.I),
        ("x_bar", out.x_bar),
        ("y_bar", out.y_bar),
        ("stage3_case", out.case_tag),
        ("total_revenue", b.total),
        ("venue_payment", b.venue_payment),
        ("ad_revenue", b.ad_revenue),
        ("venue_payoff", venue_payoff(v, t, p)),
    ]
    _write(args.out, ("quantity", "value"), rows)
    return EXIT_OK


COMPARE_HEADER = (
    "parameter", "value",
    "two_part_fee", "two_part_charge", "two_part_revenue",
    "lump_sum_fee", "lump_sum_revenue",
    "per_player_charge", "per_player_revenue",
    "improvement_vs_lump_sum_pct", "improvement_vs_per_player_pct",
)


def _compare_row(name, value, p):
    two, lump, per = optimal_two_part(p), optimal_lump_sum_only(p), optimal_per_player_only(p)
    r2, rl, rp = app_revenue(two, p), app_revenue(lump, p), app_revenue(per, p)
    return (name, value, two.l, two.p, r2, lump.l, rl, per.p, rp,
            _improvement(r2, rl), _improvement(r2, rp))


def cmd_compare(sc: Scenario, args) -> int:
    rows = []
    if sc.sweep is None:
        rows.append(_compare_row("none", None, sc.market))
    else:
        for value in sc.sweep.values():
            q = sc.market.replace(**{sc.sweep.parameter: float(value)})
            rows.append(_compare_row(sc.sweep.parameter, float(value), q))
    _write(args.out, COMPARE_HEADER, rows)
    return EXIT_OK


def cmd_sweep(sc: Scenario, args) -> int:
    if sc.sweep is None:
        raise ScenarioError("the sweep command needs a 'sweep' block")
    res = sweep(sc.sweep.parameter, sc.sweep.values(), sc.market)
    for value, problems in res.skipped:
        print(f"skipped {sc.sweep.parameter}={fmt(value)}: {'; '.join(problems)}", file=sys.stderr)
    _write(args.out, SWEEP_HEADER, (pt.row() for pt in res.points))
    return EXIT_OK


def cmd_uncertainty(sc: Scenario, args) -> int:
    if sc.phi_scenario is None:
        raise ScenarioError("the uncertainty command needs a 'phi_scenario' block")
    risk = sc.risk or RiskUtility.neutral()
    s = solve_under_uncertainty(sc.phi_scenario, risk, sc.market)
    _write(args.out, ("risk", "coef", "lump_sum_fee", "per_player_charge",
                      "expected_utility", "certainty_equivalent"),
           [(risk.kind, risk.coef, s.tariff.l, s.tariff.p, s.expected_utility,
             s.certainty_equivalent)])
    return EXIT_OK


def cmd_bargain(sc: Scenario, args) -> int:
    gammas = list(np.linspace(0.0, 1.0, args.gamma_points))
    if sc.bargaining is not None and sc.bargaining.gamma not in gammas:
        gammas = sorted(gammas + [sc.bargaining.gamma])
    rows = []
    for g in gammas:
        t = bargaining_tariff(BargainingSpec(float(g)), sc.market)
        v = venue_best_response(t, sc.market)
        rows.append((g, t.l, t.p, app_revenue(t, sc.market), venue_payoff(v, t, sc.market)))
    _write(args.out, ("gamma", "lump_sum_fee", "per_player_charge", "app_revenue",
                      "venue_payoff"), rows)
    return EXIT_OK


def cmd_thresholds(sc: Scenario, args) -> int:
    th = sensitivity_thresholds(sc.market)
    rows = [(k, v) for k, v in th.to_dict().items()]
    for name in ("U", "eta", "N"):
        r = classify_monotonicity(name, sc.market)
        rows.append((f"regime_{name}", r.regime))
    _write(args.out, ("quantity", "value"), rows)
    return EXIT_OK


def cmd_verify(sc: Scenario | None, args) -> int:
    cfg = OracleConfig.from_grid(args.grid) if args.grid else OracleConfig()
    markets = [sc.market] if sc is not None else None
    report = run_verification(args.sets, args.seed, cfg, markets)
    print(f"seed={args.seed} sets={report.sets}", file=sys.stderr)
    _write(args.out, ("check", "cases", "failures", "max_deviation", "tolerance", "status"),
           [(c.name, c.cases, c.failures, c.max_deviation, c.tolerance,
             "pass" if c.passed else "fail") for c in report.checks])
    for c in report.checks:
        for note in c.examples:
            print(f"{c.name} mismatch: {note}", file=sys.stderr)
    return EXIT_OK if report.passed else EXIT_MISMATCH


COMMANDS = {
    "solve": cmd_solve,
    "compare": cmd_compare,
    "sweep": cmd_sweep,
    "uncertainty": cmd_uncertainty,
    "bargain": cmd_bargain,
    "thresholds": cmd_thresholds,
    "verify": cmd_verify,
}


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="poitariff", description=__doc__)
    sub = ap.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sp = sub.add_parser(name)
        sp.add_argument("--scenario", required=name != "verify", help="scenario JSON file")
        sp.add_argument("--out", default=None, help="CSV output path (default stdout)")
        sp.add_argument("--grid", type=int, default=None,
                        help="oracle tariff grid n×n, investment grid 10n")
        sp.add_argument("--seed", type=int, default=0, help="random seed")
        if name == "verify":
            sp.add_argument("--sets", type=int, default=100, help="random parameter sets")
        if name == "bargain":
            sp.add_argument("--gamma-points", type=int, default=11)
    return ap


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        sc = load_scenario(args.scenario) if args.scenario else None
        return COMMANDS[args.command](sc, args)
    except (ScenarioError, InvalidParameters) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except OSError as exc:
        print(f"error: cannot write output: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
