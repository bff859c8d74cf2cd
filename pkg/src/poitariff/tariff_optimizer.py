"""Stage I: the app's revenue and tariff design.

The optimal two-part tariff subsidizes each interacting user by the unit
ad revenue and sets the lump-sum fee to the venue's maximum acceptable fee
at that subsidy.  The lump-sum-only and per-player-only tariffs are the
single-instrument baselines it is compared against.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
from typing import Sequence

import numpy as np
from scipy.special import logsumexp

from ._numerics import golden_section_max, grid_then_golden
from .core_model import MarketParams, stage3_fractions
from .venue_response import (
    PriceBreakpoints,
    Tariff,
    max_lump_sum,
    price_breakpoints,
    venue_best_response,
)

PER_PLAYER_XTOL = 1e-8
PER_PLAYER_POINTS = 400
UNCERTAINTY_XTOL = 1e-6
UNCERTAINTY_SCAN = 256
QUADRATURE_NODES = 64


@lru_cache(maxsize=8)
def _legendre(n: int) -> tuple[np.ndarray, np.ndarray]:
    t, w = np.polynomial.legendre.leggauss(n)
    t.flags.writeable = False
    w.flags.writeable = False
    return t, w


class SolverDiagnostic(RuntimeError):
    """A numerical search contradicted its structural guarantee.

    ``candidates`` holds the competing (p, value) pairs for inspection.
    """

    def __init__(self, message: str, candidates: Sequence[tuple[float, float]] = ()):
        super().__init__(message)
        self.candidates = list(candidates)


@dataclass(frozen=True)
class RevenueBreakdown:
    total: float
    venue_payment: float
    ad_revenue: float
    r: int
    I: float
    x_bar: float
    y_bar: float


def revenue_breakdown(
    t: Tariff, p: MarketParams, phi: float | None = None, bp: PriceBreakpoints | None = None
) -> RevenueBreakdown:
    """App revenue split into the venue's payment and advertising income.

    ``phi`` overrides the realized unit ad revenue; the venue's response is
    always computed at the announced tariff, which does not involve ``phi``.
    """
    phi = p.phi if phi is None else phi
    v = venue_best_response(t, p, bp)
    out = stage3_fractions(v, p)
    payment = v.r * (t.l + t.p * p.N * out.y_bar)
    ads = phi * p.N * out.y_bar
    return RevenueBreakdown(payment + ads, payment, ads, v.r, v.I, out.x_bar, out.y_bar)


def app_revenue(
    t: Tariff, p: MarketParams, phi: float | None = None, bp: PriceBreakpoints | None = None
) -> float:
    return revenue_breakdown(t, p, phi, bp).total


def optimal_two_part(p: MarketParams) -> Tariff:
    price = -p.phi
    fee = max_lump_sum(price, p)
    if fee < 0.0:
        raise SolverDiagnostic(f"optimal lump-sum fee {fee:g} < 0")
    return Tariff(fee, price)


def optimal_lump_sum_only(p: MarketParams) -> Tariff:
    # Once the venue accepts, y_bar does not depend on l, so the best fee is
    # the acceptance boundary.
    fee = max_lump_sum(0.0, p)
    if fee < 0.0:
        raise SolverDiagnostic(f"maximum fee at zero per-player charge is negative ({fee:g})")
    return Tariff(fee, 0.0)


def _acceptance_limit(p: MarketParams, bp: PriceBreakpoints, lo: float, hi: float) -> float:
    """Largest charge in ``[lo, hi]`` at which a zero lump-sum fee is still accepted."""
    accepts = lambda price: max_lump_sum(price, p, bp) >= 0.0
    if accepts(hi):
        return hi
    a, b = lo, hi
    while b - a > PER_PLAYER_XTOL * max(1.0, abs(a)) * 1e-2:
        m = 0.5 * (a + b)
        if m <= a or m >= b:
            break
        if accepts(m):
            a = m
        else:
            b = m
    return a


def optimal_per_player_only(p: MarketParams) -> Tariff:
    """Best per-player charge when the lump-sum fee is fixed at zero.

    The feasible charges (venue accepts l = 0) form a half-line.  The
    revenue is smooth between the venue's price breakpoints and may jump at
    them, so each smooth piece is scanned and golden-refined separately.
    """
    bp = price_breakpoints(p)
    lo = -p.phi - p.b * p.eta - 1.0
    hi = p.b * p.eta + 1.0
    limit = _acceptance_limit(p, bp, lo, hi)
    cuts = sorted(
        x for x in (bp.p0, bp.p1, bp.p2, bp.p3) if x is not None and lo < x < limit
    )
    edges = [lo, *cuts, limit]
    revenue = lambda price: app_revenue(Tariff(0.0, price), p, bp=bp)
    best_p, best_v = lo, revenue(lo)
    for a, b in zip(edges[:-1], edges[1:]):
        x, v = grid_then_golden(revenue, a, b, points=PER_PLAYER_POINTS, xtol=PER_PLAYER_XTOL)
        if v > best_v or (v == best_v and x < best_p):
            best_p, best_v = x, v
    # Charges worth considering also include the acceptance boundary itself.
    v = revenue(limit)
    if v > best_v:
        best_p, best_v = limit, v
    return Tariff(0.0, best_p)


@dataclass(frozen=True)
class BargainingSpec:
    gamma: float

    def __post_init__(self):
        if not 0.0 <= self.gamma <= 1.0:
            raise ValueError(f"bargaining power must lie in [0,1], got {self.gamma}")


def bargaining_tariff(spec: BargainingSpec, p: MarketParams) -> Tariff:
    """Nash-bargaining tariff: same subsidy, fee scaled by the app's power."""
    return Tariff(spec.gamma * max_lump_sum(-p.phi, p), -p.phi)


# ---------------------------------------------------------------------------
# Uncertain unit ad revenue
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class PhiScenario:
    """Distribution of the unit ad revenue.

    ``distribution`` is ``"uniform"`` on ``[phi_min, phi_max]``,
    ``"discrete"`` with ``points`` as ``(phi, probability)`` pairs, or
    ``"tabulated-quantile"`` with ``quantiles`` as ``(u, phi)`` pairs of a
    piecewise-linear quantile function on ``u in [0, 1]``.
    """

    phi_min: float
    phi_max: float
    distribution: str = "uniform"
    points: tuple[tuple[float, float], ...] = ()
    quantiles: tuple[tuple[float, float], ...] = ()

    def __post_init__(self):
        problems = self.violations()
        if problems:
            raise ValueError("; ".join(problems))

    def violations(self) -> list[str]:
        out = []
        if self.distribution not in ("uniform", "discrete", "tabulated-quantile"):
            return [f"unknown distribution {self.distribution!r}"]
        if self.phi_min < 0:
            out.append("phi_min must be >= 0")
        if self.distribution == "uniform":
            if not self.phi_min < self.phi_max:
                out.append("uniform support needs phi_min < phi_max")
        elif self.distribution == "discrete":
            if not self.points:
                out.append("discrete distribution needs points")
            else:
                probs = [w for _, w in self.points]
                if any(w < 0 for w in probs) or abs(sum(probs) - 1.0) > 1e-9:
                    out.append("discrete probabilities must be non-negative and sum to 1")
                phis = [x for x, _ in self.points]
                if min(phis) < self.phi_min - 1e-12 or max(phis) > self.phi_max + 1e-12:
                    out.append("discrete points fall outside [phi_min, phi_max]")
        else:
            us = [u for u, _ in self.quantiles]
            qs = [q for _, q in self.quantiles]
            if len(self.quantiles) < 2:
                out.append("quantile table needs at least two rows")
            elif us[0] != 0.0 or us[-1] != 1.0 or np.any(np.diff(us) <= 0):
                out.append("quantile levels must increase strictly from 0 to 1")
            elif np.any(np.diff(qs) < 0):
                out.append("quantile table must be monotone")
            elif abs(qs[0] - self.phi_min) > 1e-12 or abs(qs[-1] - self.phi_max) > 1e-12:
                out.append("quantile table endpoints must equal phi_min and phi_max")
        return out

    @classmethod
    def point_mass(cls, phi: float) -> "PhiScenario":
        return cls(phi, phi, "discrete", points=((phi, 1.0),))

    @property
    def degenerate(self) -> bool:
        return self.phi_min == self.phi_max

    def nodes(self, n: int = QUADRATURE_NODES) -> tuple[np.ndarray, np.ndarray]:
        """Quadrature abscissae and weights (weights sum to one)."""
        if self.distribution == "discrete":
            xs = np.array([x for x, _ in self.points], dtype=float)
            ws = np.array([w for _, w in self.points], dtype=float)
            return xs, ws
        t, w = _legendre(n)
        if self.distribution == "uniform":
            half = 0.5 * (self.phi_max - self.phi_min)
            return self.phi_min + half * (t + 1.0), 0.5 * w
        # One Gauss-Legendre panel per linear piece of the quantile function.
        xs, ws = [], []
        for (u0, q0), (u1, q1) in zip(self.quantiles[:-1], self.quantiles[1:]):
            u = u0 + 0.5 * (u1 - u0) * (t + 1.0)
            xs.append(q0 + (q1 - q0) * (u - u0) / (u1 - u0))
            ws.append(0.5 * (u1 - u0) * w)
        return np.concatenate(xs), np.concatenate(ws)

    def mean(self) -> float:
        if self.distribution == "uniform":
            return 0.5 * (self.phi_min + self.phi_max)
        if self.distribution == "discrete":
            return float(sum(x * w for x, w in self.points))
        us = np.array([u for u, _ in self.quantiles])
        qs = np.array([q for _, q in self.quantiles])
        return float(np.sum(0.5 * (qs[1:] + qs[:-1]) * np.diff(us)))

    def shifted(self, amount: float) -> "PhiScenario":
        """The scenario with every outcome reduced by ``amount`` (support cost)."""
        return PhiScenario(
            self.phi_min - amount,
            self.phi_max - amount,
            self.distribution,
            tuple((x - amount, w) for x, w in self.points),
            tuple((u, q - amount) for u, q in self.quantiles),
        )


@dataclass(frozen=True)
class RiskUtility:
    """App utility over realized revenue: neutral, averse (2 − e^{−αz}) or seeking (e^{βz})."""

    kind: str = "neutral"
    coef: float = 0.0

    def __post_init__(self):
        if self.kind not in ("neutral", "averse", "seeking"):
            raise ValueError(f"unknown risk kind {self.kind!r}")
        if self.kind != "neutral" and not self.coef > 0:
            raise ValueError(f"{self.kind} utility needs a positive coefficient")

    @classmethod
    def neutral(cls) -> "RiskUtility":
        return cls("neutral", 0.0)

    @classmethod
    def averse(cls, alpha: float) -> "RiskUtility":
        return cls("averse", alpha)

    @classmethod
    def seeking(cls, beta: float) -> "RiskUtility":
        return cls("seeking", beta)

    def __call__(self, z):
        z = np.asarray(z, dtype=float)
        if self.kind == "neutral":
            return z
        if self.kind == "averse":
            return 2.0 - np.exp(-self.coef * z)
        return np.exp(self.coef * z)

    def certainty_equivalent(self, z: np.ndarray, w: np.ndarray) -> float:
        """J⁻¹(E[J(z)]), evaluated in log space.

        With revenues in the tens, 2 − e^{−αz} rounds to 2 in double
        precision, so optimizers work on this monotone transform instead.
        """
        if self.kind == "neutral":
            return float(np.dot(w, z))
        a = self.coef
        if self.kind == "averse":
            return float(-logsumexp(-a * z, b=w) / a)
        return float(logsumexp(a * z, b=w) / a)


def _realized_revenues(t: Tariff, s: PhiScenario, p: MarketParams, n: int):
    xs, ws = s.nodes(n)
    b = revenue_breakdown(t, p)
    # Revenue is affine in the realized phi once the venue has responded.
    z = b.venue_payment + xs * p.N * b.y_bar
    return z, ws


def expected_utility(
    t: Tariff, s: PhiScenario, j: RiskUtility, p: MarketParams, nodes: int = QUADRATURE_NODES
) -> float:
    z, w = _realized_revenues(t, s, p, nodes)
    return float(np.dot(w, j(z)))


def certainty_equivalent(
    t: Tariff, s: PhiScenario, j: RiskUtility, p: MarketParams, nodes: int = QUADRATURE_NODES
) -> float:
    z, w = _realized_revenues(t, s, p, nodes)
    return j.certainty_equivalent(z, w)


@dataclass(frozen=True)
class UncertaintySolution:
    tariff: Tariff
    expected_utility: float
    certainty_equivalent: float
    scan_best: tuple[float, float] | None = field(default=None)


def solve_under_uncertainty(
    s: PhiScenario,
    j: RiskUtility,
    p: MarketParams,
    nodes: int = QUADRATURE_NODES,
    xtol: float = UNCERTAINTY_XTOL,
    scan_points: int = UNCERTAINTY_SCAN,
) -> UncertaintySolution:
    """Tariff maximizing expected utility with the fee on the acceptance boundary."""
    bp = price_breakpoints(p)
    mean = s.mean()
    if j.kind == "neutral" or s.degenerate:
        t = Tariff(max_lump_sum(-mean, p, bp), -mean)
        return UncertaintySolution(
            t, expected_utility(t, s, j, p, nodes), certainty_equivalent(t, s, j, p, nodes)
        )

    def objective(price: float) -> float:
        return certainty_equivalent(Tariff(max_lump_sum(price, p, bp), price), s, j, p, nodes)

    lo, hi = -s.phi_max, -s.phi_min
    price, value = golden_section_max(objective, lo, hi, xtol=xtol)
    grid = np.linspace(lo, hi, scan_points)
    scan = np.array([objective(x) for x in grid])
    i = int(np.argmax(scan))
    scan_best = (float(grid[i]), float(scan[i]))
    if scan[i] > value + 1e-9 * (1.0 + abs(value)):
        raise SolverDiagnostic(
            "expected utility is not unimodal on the search bracket",
            candidates=[(price, value), scan_best],
        )
    slack = 10 * xtol
    if j.kind == "averse":
        ok = -mean - slack <= price <= -s.phi_min + slack
    else:
        ok = -s.phi_max - slack <= price <= -mean + slack
    if not ok:
        raise SolverDiagnostic(
            f"{j.kind} optimum p={price:g} escapes its theoretical bracket",
            candidates=[(price, value), scan_best],
        )
    t = Tariff(max_lump_sum(price, p, bp), price)
    return UncertaintySolution(t, expected_utility(t, s, j, p, nodes), value, scan_best)


def optimal_tariff_under_uncertainty(
    s: PhiScenario, j: RiskUtility, p: MarketParams, nodes: int = QUADRATURE_NODES
) -> Tariff:
    return solve_under_uncertainty(s, j, p, nodes).tariff
