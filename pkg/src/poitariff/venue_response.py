"""Stage II: the venue's POI and investment decision.

The venue accepts the POI tag iff the lump-sum fee does not exceed
``max_lump_sum(p)``, and once it accepts, its investment depends on the
per-player charge only.  Which closed form applies depends on the
situation (I, II or III) fixed by the exogenous parameters.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

from scipy.optimize import bisect

from .core_model import (
    MarketParams,
    VenueChoice,
    cutoff_shift,
    investment_threshold,
    stage3_fractions,
)

P2_XTOL = 1e-10
P2_MAXITER = 200


class Situation(str, enum.Enum):
    I = "I"       # I0 <= I_th and delta > delta_th
    II = "II"     # I0 <= I_th and delta <= delta_th
    III = "III"   # I0 > I_th


@dataclass(frozen=True)
class Tariff:
    l: float
    p: float


@dataclass(frozen=True)
class PriceBreakpoints:
    situation: Situation
    p0: float | None = None
    p1: float | None = None
    p2: float | None = None
    p3: float | None = None


class InvestmentDiagnostic(RuntimeError):
    """An interior investment came out negative inside its stated price range."""


def _visibility(p: MarketParams) -> float:
    """V c_max + θ η U N, a recurring denominator."""
    return p.V * p.c_max + p.theta * p.eta * p.U * p.N


def congestion_threshold(p: MarketParams) -> float:
    """Threshold congestion factor δ_th separating situations I and II."""
    if p.eta == 0.0:
        raise ValueError("δ_th is undefined for η = 0 (situation III or degenerate)")
    w = _visibility(p)
    num = w * (p.b * p.eta * w - p.theta * p.I0 * p.c_max * p.k)
    den = p.k * p.c_max * p.eta * p.U * (p.c_max - p.theta * p.N)
    return num / den


def classify_situation(p: MarketParams) -> Situation:
    if p.I0 > investment_threshold(p):
        return Situation.III
    if p.eta == 0.0:
        # Only reachable with I0 = 0; the η factor cancels from δ_th.
        w = _visibility(p)
        delta_th = p.b * w * w / (p.k * p.c_max * p.U * (p.c_max - p.theta * p.N))
    else:
        delta_th = congestion_threshold(p)
    return Situation.I if p.delta > delta_th else Situation.II


def interior_investment(price: float, p: MarketParams) -> float:
    """Stationary point of the case-C venue payoff in I (may be negative)."""
    s = p.c_max - p.N * p.theta
    root = math.sqrt(p.delta * (p.V + p.eta * p.U) * (p.b * p.eta - price) / p.k)
    return p.N / s * root - p.delta * p.N / s - p.I0


def _rationed_charge_slope(p: MarketParams) -> float:
    """N ȳ at I = 0 in case B, i.e. V / (δ/I0 − θ); zero when I0 = 0."""
    return p.V * p.I0 / (p.delta - p.theta * p.I0)


def _interior_fee(price: float, p: MarketParams) -> float:
    """Maximum fee accepted when the venue invests at the interior optimum."""
    s = p.c_max - p.N * p.theta
    gap = math.sqrt((p.V + p.eta * p.U) * (p.b * p.eta - price)) - math.sqrt(p.delta * p.k)
    return -p.N / p.c_max * p.b * p.eta ** 2 * p.U + p.N / s * gap * gap + p.k * p.I0


def _p2_residual(price: float, p: MarketParams) -> float:
    return _interior_fee(price, p) + _rationed_charge_slope(p) * price


def price_breakpoints(p: MarketParams) -> PriceBreakpoints:
    situation = classify_situation(p)
    if situation is Situation.III:
        s = (p.c_max - p.theta * p.N) * p.I0 + p.delta * p.N
        p3 = p.b * p.eta - p.k * s * s / (p.delta * (p.V + p.eta * p.U) * p.N ** 2)
        return PriceBreakpoints(situation, p3=p3)
    w = _visibility(p)
    p0 = -p.k * (p.delta - p.theta * p.I0) * p.c_max / w
    p1 = p.b * p.eta - p.delta * p.k * (p.V + p.eta * p.U) * p.c_max ** 2 / (w * w)
    if situation is Situation.I:
        return PriceBreakpoints(situation, p0=p0, p1=p1)
    lo, hi = p0, p1
    g_lo, g_hi = _p2_residual(lo, p), _p2_residual(hi, p)
    if g_lo == 0.0:
        p2 = lo
    elif g_hi == 0.0 or g_lo * g_hi > 0.0:
        # G(p0) >= 0 >= G(p1) holds analytically; rounding can only bite at
        # the degenerate edge where the two endpoints coincide.
        p2 = hi if abs(g_hi) <= abs(g_lo) else lo
    else:
        p2 = bisect(_p2_residual, lo, hi, args=(p,), xtol=P2_XTOL, maxiter=P2_MAXITER)
    return PriceBreakpoints(situation, p0=p0, p1=p1, p2=p2)


def max_lump_sum(price: float, p: MarketParams, bp: PriceBreakpoints | None = None) -> float:
    """H̃(p): the largest lump-sum fee the venue accepts at per-player charge ``price``."""
    bp = bp or price_breakpoints(p)
    if bp.situation is Situation.I:
        if price < bp.p1:
            return _interior_fee(price, p)
        if price <= bp.p0:
            return (-price * p.N * p.eta * p.U / p.c_max
                    - p.k * investment_threshold(p) + p.k * p.I0)
        return -_rationed_charge_slope(p) * price
    if bp.situation is Situation.II:
        if price < bp.p2:
            return _interior_fee(price, p)
        return -_rationed_charge_slope(p) * price
    if price < bp.p3:
        return _interior_fee(price, p)
    extra = cutoff_shift(p.I0, p) / p.c_max
    return (p.b * p.eta - price) * p.N * extra - price * p.N * p.eta * p.U / p.c_max


def _checked_interior(price: float, p: MarketParams) -> float:
    value = interior_investment(price, p)
    if value < 0.0:
        if value < -1e-9 * (1.0 + p.I0):
            raise InvestmentDiagnostic(
                f"interior investment {value:g} < 0 at p={price:g}; parameters likely invalid"
            )
        value = 0.0
    return value


def venue_best_response(
    t: Tariff, p: MarketParams, bp: PriceBreakpoints | None = None
) -> VenueChoice:
    bp = bp or price_breakpoints(p)
    if t.l > max_lump_sum(t.p, p, bp):
        return VenueChoice(0, 0.0)
    price = t.p
    if bp.situation is Situation.I:
        if price < bp.p1:
            return VenueChoice(1, _checked_interior(price, p))
        if price <= bp.p0:
            return VenueChoice(1, investment_threshold(p) - p.I0)
        return VenueChoice(1, 0.0)
    cut = bp.p2 if bp.situation is Situation.II else bp.p3
    if price < cut:
        return VenueChoice(1, _checked_interior(price, p))
    return VenueChoice(1, 0.0)


def venue_payoff(v: VenueChoice, t: Tariff, p: MarketParams) -> float:
    """b N x̄ − k I − r (l + p N ȳ)."""
    out = stage3_fractions(v, p)
    payoff = p.b * p.N * out.x_bar - p.k * v.I
    if v.r == 1:
        payoff -= t.l + t.p * p.N * out.y_bar
    return payoff
