"""Market primitives and the users' (Stage III) equilibrium.

Users differ in product interest ``omega`` and transportation cost ``c``
(uniform on ``[0, c_max]``).  Given the venue's POI flag and investment the
equilibrium fractions have closed forms in three cases:

* A: no POI, only interested nearby users visit;
* B: POI with insufficient total investment, interaction is rationed by
  congestion until the net POI surplus is exactly zero;
* C: POI with sufficient total investment, the POI attracts new visitors.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, fields, replace
from typing import Any, Mapping

# Threshold comparisons (I + I0 vs I_th) allow this much absolute slack.
THRESHOLD_ATOL = 1e-12


class InvalidParameters(ValueError):
    """Raised when a MarketParams instance violates the model's invariants."""

    def __init__(self, violations: list[str]):
        self.violations = list(violations)
        super().__init__("; ".join(self.violations))


@dataclass(frozen=True)
class MarketParams:
    N: float
    c_max: float
    U: float
    V: float
    theta: float
    delta: float
    I0: float
    b: float
    k: float
    eta: float
    phi: float

    def replace(self, **changes: float) -> "MarketParams":
        return replace(self, **changes)

    def to_dict(self) -> dict[str, float]:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "MarketParams":
        names = [f.name for f in fields(cls)]
        missing = [n for n in names if n not in data]
        if missing:
            raise KeyError(f"market parameters missing: {', '.join(missing)}")
        unknown = sorted(set(data) - set(names))
        if unknown:
            raise KeyError(f"unknown market parameters: {', '.join(unknown)}")
        return cls(**{n: float(data[n]) for n in names})

    @property
    def outside_option(self) -> float:
        """Venue payoff without POI and without investment, b N eta U / c_max."""
        return self.b * self.N * self.eta * self.U / self.c_max


@dataclass(frozen=True)
class UserType:
    omega: int
    c: float


@dataclass(frozen=True)
class VenueChoice:
    r: int
    I: float

    def __post_init__(self):
        if self.r not in (0, 1):
            raise ValueError(f"POI flag must be 0 or 1, got {self.r!r}")
        if not self.I >= 0:
            raise ValueError(f"investment must be non-negative, got {self.I!r}")


@dataclass(frozen=True)
class StageThreeOutcome:
    x_bar: float
    y_bar: float
    case_tag: str
    c_t: float | None = None


# User decisions.
STAY_HOME = 0
VISIT = 1
VISIT_AND_INTERACT = 2


def validate_params(p: MarketParams) -> list[str]:
    """Return every violated invariant of ``p`` (empty list when valid)."""
    violations = []
    for name in ("N", "c_max", "U", "V", "delta", "b", "k"):
        value = getattr(p, name)
        if not (math.isfinite(value) and value > 0):
            violations.append(f"{name} must be > 0 (got {value})")
    for name in ("theta", "I0", "phi"):
        value = getattr(p, name)
        if not (math.isfinite(value) and value >= 0):
            violations.append(f"{name} must be >= 0 (got {value})")
    if not (0.0 <= p.eta <= 1.0):
        violations.append(f"η outside [0,1] (got {p.eta})")
    bound = p.U + p.V + p.theta * p.N
    if not p.c_max > bound:
        violations.append(
            f"c_max ≤ U+V+θN ({p.c_max:g} ≤ {p.U:g}+{p.V:g}+{p.theta * p.N:g})"
        )
    return violations


def check_params(p: MarketParams) -> MarketParams:
    violations = validate_params(p)
    if violations:
        raise InvalidParameters(violations)
    return p


def net_poi_surplus(y: float, total_investment: float, p: MarketParams) -> float:
    """V + θ y N − δ y N / (I + I0): extra payoff of interacting over plain visiting."""
    if y == 0.0:
        return p.V
    if total_investment <= 0.0:
        return -math.inf
    return p.V + p.theta * y * p.N - p.delta * y * p.N / total_investment


def user_best_response(u: UserType, v: VenueChoice, y_conj: float, p: MarketParams) -> int:
    """Payoff-maximizing decision of a type-(omega, c) user under conjecture ``y_conj``.

    Ties resolve toward the lower decision index, so a user indifferent
    between staying home and visiting stays home.
    """
    if not 0.0 <= y_conj <= 1.0:
        raise ValueError(f"conjectured interaction fraction must lie in [0,1], got {y_conj}")
    visit = p.U * u.omega - u.c
    best, best_payoff = STAY_HOME, 0.0
    if visit > best_payoff:
        best, best_payoff = VISIT, visit
    if v.r == 1:
        interact = visit + net_poi_surplus(y_conj, v.I + p.I0, p)
        if interact > best_payoff:
            best = VISIT_AND_INTERACT
    return best


def investment_threshold(p: MarketParams) -> float:
    """Total investment I_th above which a POI attracts new visitors.

    Written as δηUN / (θηUN + V c_max) so the η = 0 limit is exactly zero.
    """
    a = p.eta * p.U * p.N
    return p.delta * a / (p.theta * a + p.V * p.c_max)


def cutoff_shift(total_investment: float, p: MarketParams) -> float:
    """The case-C cost cutoff shift c_t for total investment I + I0."""
    T = total_investment
    a = p.eta * p.U * p.N
    num = p.V * p.c_max * T - a * p.delta + a * p.theta * T
    den = p.c_max * T + p.N * p.delta - p.N * p.theta * T
    return num / den


def stage3_fractions(v: VenueChoice, p: MarketParams) -> StageThreeOutcome:
    """Equilibrium fractions of consuming (x̄) and interacting (ȳ) users."""
    base = p.eta * p.U / p.c_max
    if v.r == 0:
        return StageThreeOutcome(x_bar=base, y_bar=0.0, case_tag="A")
    T = v.I + p.I0
    if T <= investment_threshold(p) + THRESHOLD_ATOL:
        if T == 0.0:
            y = 0.0
        else:
            # V / ((δ/T − θ) N), rearranged to avoid dividing by T.
            y = p.V * T / ((p.delta - p.theta * T) * p.N)
        return StageThreeOutcome(x_bar=base, y_bar=y, case_tag="B")
    c_t = cutoff_shift(T, p)
    return StageThreeOutcome(
        x_bar=p.eta * (p.U + c_t) / p.c_max,
        y_bar=(p.eta * p.U + c_t) / p.c_max,
        case_tag="C",
        c_t=c_t,
    )
