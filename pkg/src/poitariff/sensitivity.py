"""How the app's optimal revenue responds to venue quality, popularity and population.

Closed-form thresholds pin the proven monotonicity regimes; ``sweep`` gives
the numeric picture, split into the venue's payment and ad revenue.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence, TextIO

from scipy.optimize import bisect

from .core_model import MarketParams, check_params, validate_params
from .tariff_optimizer import optimal_two_part, revenue_breakdown

FLAT_TOL = 1e-9
SWEEP_HEADER = (
    "parameter", "value", "total_revenue", "venue_payment", "ad_revenue",
    "investment", "x_bar", "y_bar",
)


@dataclass(frozen=True)
class SensitivityThresholds:
    """Regime boundaries; a field is ``None`` when its defining condition fails."""

    delta1: float
    delta2: float
    delta3: float
    U_turn: float | None
    eta_A: float | None = None
    eta_B: float | None = None
    N_A: float | None = None
    N_B: float | None = None

    def to_dict(self) -> dict[str, float | None]:
        return {
            "delta1": self.delta1, "delta2": self.delta2, "delta3": self.delta3,
            "U_turn": self.U_turn, "eta_A": self.eta_A, "eta_B": self.eta_B,
            "N_A": self.N_A, "N_B": self.N_B,
        }


def _congestion_root(theta_i0: float, slope: float) -> float:
    """Root above θI0 of δ² − (2θI0 + slope)δ + (θI0)² = 0."""
    s = 2.0 * theta_i0 + slope
    return 0.5 * (s + math.sqrt(s * s - 4.0 * theta_i0 * theta_i0))


def delta2_polynomial(delta: float, p: MarketParams) -> float:
    t = p.theta * p.I0
    return delta * delta - (2 * t + p.b * p.V ** 2 / (p.k * p.U)) * delta + t * t


def delta3_polynomial(delta: float, p: MarketParams) -> float:
    t = p.theta * p.I0
    slope = p.V ** 2 * (p.b * p.eta + p.phi) / (p.k * (p.V + p.eta * p.U))
    return delta * delta - (2 * t + slope) * delta + t * t


def population_polynomial(n: float, p: MarketParams) -> float:
    """Quadratic in the population whose root in (0, N_B) is N_A."""
    gap = p.delta - p.theta * p.I0
    c = p.c_max
    return (
        -p.b * p.eta ** 2 * c * p.U * gap ** 2 * n ** 2
        - 2 * p.b * p.eta ** 2 * c ** 2 * p.I0 * p.U * gap * n
        + p.b * p.eta * c ** 3 * p.I0 ** 2 * p.V
        + p.phi * (p.eta * p.U + p.V) * c ** 3 * p.I0 ** 2
    )


def small_congestion_bound(p: MarketParams) -> float:
    """φ c_max I0 / (b η N) + θ I0: below it revenue rises with venue quality."""
    return p.phi * p.c_max * p.I0 / (p.b * p.eta * p.N) + p.theta * p.I0


def sensitivity_thresholds(p: MarketParams) -> SensitivityThresholds:
    check_params(p)
    t = p.theta * p.I0
    delta2 = _congestion_root(t, p.b * p.V ** 2 / (p.k * p.U))
    delta3 = _congestion_root(
        t, p.V ** 2 * (p.b * p.eta + p.phi) / (p.k * (p.V + p.eta * p.U))
    )
    u_turn = None
    delta1 = math.inf
    if p.eta > 0:
        lift = p.N * p.theta * p.b * p.eta / p.c_max + p.phi
        if lift > 0:
            u_turn = p.delta * p.k * (p.b * p.eta + p.phi) / (p.eta * lift ** 2) - p.V / p.eta
            quality_room = p.eta * p.c_max + (1 - p.eta) * p.V - p.eta * p.theta * p.N
            delta1 = max(
                small_congestion_bound(p),
                lift ** 2 * quality_room / (p.k * (p.b * p.eta + p.phi)),
            )

    low_ads = p.phi < p.b * p.V / p.U
    gap = p.delta - t
    eta_A = eta_B = n_A = n_B = None
    if low_ads and p.delta > delta2:
        eta_A = (p.b * p.V + p.phi * p.U) * p.c_max * p.I0 / (2 * p.b * p.U * p.N * gap)
        eta_B = p.V * p.c_max * p.I0 / (p.U * p.N * gap)
    if low_ads and p.delta > delta3 and p.eta > 0:
        n_B = p.V * p.c_max * p.I0 / (p.eta * p.U * gap)
        # The quadratic is positive at 0 and negative at N_B.
        n_A = bisect(population_polynomial, 0.0, n_B, args=(p,), xtol=1e-12 * n_B, maxiter=500)
    return SensitivityThresholds(delta1, delta2, delta3, u_turn, eta_A, eta_B, n_A, n_B)


@dataclass(frozen=True)
class RegimeReport:
    parameter: str
    regime: str
    interval: tuple[float, float] | None = None
    condition: str = ""
    turning_point: float | None = None


INDETERMINATE = "indeterminate: numeric sweep advised"


def classify_monotonicity(parameter: str, p: MarketParams) -> RegimeReport:
    th = sensitivity_thresholds(p)
    if parameter == "U":
        bound = small_congestion_bound(p)
        if p.delta <= bound:
            return RegimeReport("U", "monotone increasing", (0.0, math.inf),
                                f"delta <= {bound:.6g}")
        if p.delta > th.delta1:
            top = p.c_max - p.V - p.theta * p.N
            return RegimeReport("U", "monotone decreasing", (0.0, top),
                                f"delta > delta1 = {th.delta1:.6g}")
        turn = th.U_turn
        if turn is None or turn <= 0.0:
            return RegimeReport("U", "monotone increasing", (0.0, math.inf),
                                f"delta > {bound:.6g}, turning point at or below 0", turn)
        return RegimeReport("U", "decreasing then increasing", (0.0, turn),
                            f"delta > {bound:.6g}", turn)
    if parameter in ("eta", "N"):
        threshold, name = (th.delta2, "delta2") if parameter == "eta" else (th.delta3, "delta3")
        ratio = p.b * p.V / p.U
        if p.phi >= ratio:
            return RegimeReport(parameter, "monotone increasing", (0.0, math.inf),
                                f"phi >= bV/U = {ratio:.6g}")
        if p.delta > threshold:
            interval = (th.eta_A, th.eta_B) if parameter == "eta" else (th.N_A, th.N_B)
            if None not in interval:
                return RegimeReport(
                    parameter, f"non-monotone: decreasing on ({interval[0]:.6g},{interval[1]:.6g})",
                    interval, f"phi < bV/U and delta > {name} = {threshold:.6g}",
                )
        return RegimeReport(parameter, INDETERMINATE, None,
                            f"phi < bV/U and delta <= {name} = {threshold:.6g}")
    raise ValueError(f"no monotonicity classification for parameter {parameter!r}")


@dataclass(frozen=True)
class SweepPoint:
    parameter: str
    value: float
    total_revenue: float
    venue_payment: float
    ad_revenue: float
    investment: float
    x_bar: float
    y_bar: float

    def row(self) -> tuple:
        return (self.parameter, self.value, self.total_revenue, self.venue_payment,
                self.ad_revenue, self.investment, self.x_bar, self.y_bar)


@dataclass
class SweepResult:
    points: list[SweepPoint] = field(default_factory=list)
    skipped: list[tuple[float, list[str]]] = field(default_factory=list)


def sweep_point(parameter: str, value: float, p: MarketParams) -> SweepPoint:
    q = check_params(p.replace(**{parameter: value}))
    b = revenue_breakdown(optimal_two_part(q), q)
    return SweepPoint(parameter, float(value), b.total, b.venue_payment, b.ad_revenue,
                      b.I, b.x_bar, b.y_bar)


def sweep(parameter: str, values: Iterable[float], p: MarketParams) -> SweepResult:
    """Optimal two-part revenue along ``values`` of one parameter, in grid order."""
    if parameter not in MarketParams.__dataclass_fields__:
        raise ValueError(f"unknown parameter {parameter!r}")
    out = SweepResult()
    for value in values:
        q = p.replace(**{parameter: float(value)})
        problems = validate_params(q)
        if problems:
            out.skipped.append((float(value), problems))
            continue
        out.points.append(sweep_point(parameter, float(value), p))
    return out


def fmt(x: float) -> str:
    return format(x, ".12g")


def write_sweep_csv(points: Sequence[SweepPoint], stream: TextIO) -> None:
    w = csv.writer(stream, lineterminator="\n")
    w.writerow(SWEEP_HEADER)
    for pt in points:
        w.writerow([pt.parameter, *(fmt(x) for x in pt.row()[1:])])


def slope_signs(values: Sequence[float], tol: float = FLAT_TOL) -> list[int]:
    """+1/−1/0 for each consecutive difference; |Δ| ≤ tol counts as flat."""
    out = []
    for a, b in zip(values[:-1], values[1:]):
        d = b - a
        out.append(0 if abs(d) <= tol else (1 if d > 0 else -1))
    return out


def signed_runs(xs: Sequence[float], ys: Sequence[float], tol: float = FLAT_TOL):
    """Maximal runs of equal slope sign as ``(sign, x_start, x_end)``."""
    signs = slope_signs(ys, tol)
    runs = []
    for i, s in enumerate(signs):
        if runs and runs[-1][0] == s:
            runs[-1][2] = xs[i + 1]
        else:
            runs.append([s, xs[i], xs[i + 1]])
    return [tuple(r) for r in runs]
