"""Brute-force reference solver used to cross-check the closed forms.

Only the plain data types are shared with the rest of the package.  Users
are a histogram of transportation costs per interest class, the user
equilibrium is found by bisecting the best-response fixed point, and the
venue and app problems are solved by exhaustive grid search.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core_model import MarketParams, VenueChoice
from .venue_response import Tariff


class OracleNonConvergence(RuntimeError):
    pass


@dataclass(frozen=True)
class OracleConfig:
    cost_bins: int = 2000
    investment_steps: int = 2000
    tariff_points: int = 200
    fixed_point_tol: float = 1e-10
    max_iterations: int = 10000

    def __post_init__(self):
        for name in ("cost_bins", "investment_steps", "tariff_points", "max_iterations"):
            if getattr(self, name) < 2:
                raise ValueError(f"{name} must be at least 2")
        if not self.fixed_point_tol > 0:
            raise ValueError("fixed_point_tol must be positive")

    @classmethod
    def from_grid(cls, n: int) -> "OracleConfig":
        """Tariff grid n×n, investment grid 10n steps."""
        return cls(tariff_points=n, investment_steps=10 * n)


class _Population:
    """Users of both interest classes with histogrammed transportation costs."""

    def __init__(self, p: MarketParams, bins: int):
        self.edges = np.linspace(0.0, p.c_max, bins + 1)
        mass = np.full(bins, 1.0 / bins)
        self.cum = np.concatenate([[0.0], np.cumsum(mass)])
        self.p = p

    def share_below(self, cost):
        """Fraction of one class with transportation cost below ``cost``."""
        return np.interp(cost, self.edges, self.cum)

    def surplus(self, y, total):
        """Extra payoff of interacting, for interaction share ``y`` and total investment."""
        p = self.p
        y = np.asarray(y, dtype=float)
        total = np.broadcast_to(np.asarray(total, dtype=float), y.shape)
        safe = np.where(total > 0, total, 1.0)
        g = p.V + p.theta * y * p.N - p.delta * y * p.N / safe
        # Without any infrastructure nobody can interact unless nobody tries.
        return np.where(total > 0, g, np.where(y == 0, p.V, -np.inf))

    def strict_interactors(self, y, total):
        """Share of users whose unique best reply is to visit and interact."""
        p = self.p
        g = self.surplus(y, total)
        pos = g > 0
        gg = np.where(pos, g, 0.0)
        share = p.eta * self.share_below(p.U + gg) + (1 - p.eta) * self.share_below(gg)
        return np.where(pos, share, 0.0)


def _equilibrium(pop: _Population, total: np.ndarray, cfg: OracleConfig):
    """Vectorized bisection for the interaction share at each total investment."""
    lo = np.zeros_like(total)
    hi = np.ones_like(total)
    for _ in range(cfg.max_iterations):
        if np.all(hi - lo <= cfg.fixed_point_tol):
            break
        mid = 0.5 * (lo + hi)
        excess = pop.strict_interactors(mid, total) - mid
        up = excess > 0
        lo = np.where(up, mid, lo)
        hi = np.where(up, hi, mid)
    else:
        raise OracleNonConvergence("user fixed point did not converge")
    y = 0.5 * (lo + hi)
    p = pop.p
    g = np.maximum(pop.surplus(y, total), 0.0)
    x = p.eta * pop.share_below(p.U + g)
    return x, y


def oracle_stage3(v: VenueChoice, p: MarketParams, cfg: OracleConfig = OracleConfig()):
    """(x̄, ȳ) for venue choice ``v`` from the discretized population."""
    x, y = oracle_stage3_grid(v.r, np.array([v.I], dtype=float), p, cfg)
    return float(x[0]), float(y[0])


def oracle_stage3_grid(r: int, investments: np.ndarray, p: MarketParams, cfg: OracleConfig):
    pop = _Population(p, cfg.cost_bins)
    investments = np.asarray(investments, dtype=float)
    if r == 0:
        x = np.full_like(investments, p.eta * float(pop.share_below(p.U)))
        return x, np.zeros_like(investments)
    return _equilibrium(pop, investments + p.I0, cfg)


@dataclass(frozen=True)
class VenueSearch:
    """Venue's grid search outcome for one tariff."""

    choice: VenueChoice
    payoff: float
    poi_payoff: float
    plain_payoff: float
    step: float
    slack: float


class _VenueTable:
    """Stage-III outcomes on a shared investment grid, reusable across tariffs."""

    def __init__(self, p: MarketParams, cfg: OracleConfig, prices: np.ndarray):
        self.p, self.cfg = p, cfg
        prices = np.atleast_1d(np.asarray(prices, dtype=float))
        # A priori cap: extra sales and charges are bounded by bNη + |p|N.
        cap = (p.b * p.N * p.eta + np.max(np.abs(prices)) * p.N) / p.k + 1.0
        coarse = np.linspace(0.0, cap, cfg.investment_steps + 1)
        x, y = oracle_stage3_grid(1, coarse, p, cfg)
        best = np.argmax(self._poi(prices, coarse, x, y), axis=1)
        top = 3.0 * coarse[np.max(best)] + 2.0 * (coarse[1] - coarse[0])
        self.grid = np.linspace(0.0, min(top, cap), cfg.investment_steps + 1)
        self.x, self.y = oracle_stage3_grid(1, self.grid, p, cfg)
        x0, _ = oracle_stage3_grid(0, self.grid, p, cfg)
        plain = p.b * p.N * x0 - p.k * self.grid
        self.plain_index = int(np.argmax(plain))
        self.plain = float(plain[self.plain_index])

    def _poi(self, prices, grid, x, y):
        p = self.p
        return (p.b * p.N * x - p.k * grid)[None, :] - prices[:, None] * p.N * y[None, :]

    def poi_before_fee(self, prices):
        """POI payoff over the grid, excluding the lump-sum fee."""
        return self._poi(np.atleast_1d(np.asarray(prices, dtype=float)), self.grid, self.x, self.y)

    def respond(self, t: Tariff) -> VenueSearch:
        row = self.poi_before_fee(t.p)[0] - t.l
        i = int(np.argmax(row))  # smallest I on ties
        nb = row[max(i - 1, 0): i + 2]
        slack = float(np.max(nb) - np.min(nb))
        step = float(self.grid[1] - self.grid[0])
        if row[i] > self.plain:
            choice, payoff = VenueChoice(1, float(self.grid[i])), float(row[i])
        else:
            choice, payoff = VenueChoice(0, float(self.grid[self.plain_index])), self.plain
        return VenueSearch(choice, payoff, float(row[i]), self.plain, step, slack)


def oracle_venue_search(t: Tariff, p: MarketParams, cfg: OracleConfig = OracleConfig()) -> VenueSearch:
    return _VenueTable(p, cfg, np.array([t.p, -p.phi])).respond(t)


def oracle_venue(t: Tariff, p: MarketParams, cfg: OracleConfig = OracleConfig()) -> VenueChoice:
    """Grid argmax of the venue payoff; ties go to smaller I, then to r = 0."""
    return oracle_venue_search(t, p, cfg).choice


@dataclass(frozen=True)
class AppSearch:
    tariff: Tariff
    revenue: float
    fee_step: float
    price_step: float
    slack: float
    fee_estimate: float


def oracle_app_search(p: MarketParams, cfg: OracleConfig = OracleConfig()) -> AppSearch:
    n = cfg.tariff_points
    prices = np.linspace(-p.phi - p.b * p.eta - 1.0, p.b * p.eta + 1.0, n)
    table = _VenueTable(p, cfg, np.concatenate([prices, [-p.phi]]))
    poi = table.poi_before_fee(prices)
    best_i = np.argmax(poi, axis=1)
    rows = np.arange(n)
    accept_limit = poi[rows, best_i] - table.plain  # fee must stay strictly below
    y_at = table.y[best_i]
    fee_estimate = float(np.max(table.poi_before_fee(-p.phi)) - table.plain)
    fees = np.linspace(0.0, 1.5 * max(fee_estimate, 1e-9), n)
    accepted = fees[None, :] < accept_limit[:, None]
    revenue = np.where(
        accepted, fees[None, :] + ((prices + p.phi) * p.N * y_at)[:, None], 0.0
    )
    j = int(np.argmax(revenue))  # row-major: smallest p, then smallest l
    pi, li = divmod(j, n)
    best = float(revenue[pi, li])
    fee_step = float(fees[1] - fees[0])
    block = revenue[max(pi - 1, 0): pi + 2, max(li - 1, 0): li + 2]
    ok = accepted[max(pi - 1, 0): pi + 2, max(li - 1, 0): li + 2]
    slack = max(fee_step, float(np.max(np.abs(block[ok] - best))))
    return AppSearch(Tariff(float(fees[li]), float(prices[pi])), best, fee_step,
                     float(prices[1] - prices[0]), slack, fee_estimate)


def oracle_app(p: MarketParams, cfg: OracleConfig = OracleConfig()) -> tuple[Tariff, float]:
    s = oracle_app_search(p, cfg)
    return s.tariff, s.revenue


BASELINE = MarketParams(N=200, c_max=24, U=3, V=5, theta=0.05, delta=0.1, I0=0.6,
                        b=1, k=3, eta=0.2, phi=0.4)


def _is_valid(p: MarketParams) -> bool:
    # The oracle keeps its own copy of the admissibility rules.
    return (0 <= p.eta <= 1 and p.c_max > p.U + p.V + p.theta * p.N
            and min(p.N, p.c_max, p.U, p.V, p.delta, p.b, p.k) > 0)


def random_params(rng: np.random.Generator, count: int, base: MarketParams = BASELINE,
                  max_draws: int = 1_000_000) -> list[MarketParams]:
    """Admissible parameter sets drawn log-uniformly in [0.1, 10]× ``base``."""
    names = list(base.to_dict())
    out: list[MarketParams] = []
    draws = 0
    while len(out) < count:
        draws += 1
        if draws > max_draws:
            raise RuntimeError("could not draw enough admissible parameter sets")
        scale = np.exp(rng.uniform(np.log(0.1), np.log(10.0), len(names)))
        q = MarketParams(**{n: getattr(base, n) * float(s) for n, s in zip(names, scale)})
        if _is_valid(q):
            out.append(q)
    return out
