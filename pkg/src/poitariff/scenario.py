"""Scenario files: JSON with a ``market`` block and optional extras.

A file that is just the flat market mapping is also accepted.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Mapping

import numpy as np

from .core_model import MarketParams, check_params
from .tariff_optimizer import BargainingSpec, PhiScenario, RiskUtility

KNOWN_KEYS = {"market", "phi_scenario", "risk", "bargaining", "sweep", "support_cost"}


class ScenarioError(ValueError):
    pass


@dataclass(frozen=True)
class SweepSpec:
    parameter: str
    start: float
    stop: float
    points: int

    def values(self) -> np.ndarray:
        return np.linspace(self.start, self.stop, self.points)


@dataclass(frozen=True)
class Scenario:
    market: MarketParams
    phi_scenario: PhiScenario | None = None
    risk: RiskUtility | None = None
    bargaining: BargainingSpec | None = None
    sweep: SweepSpec | None = None


def _phi_scenario(block: Mapping[str, Any], shift: float) -> PhiScenario:
    kind = block.get("distribution", "uniform")
    s = PhiScenario(
        float(block["phi_min"]),
        float(block["phi_max"]),
        kind,
        tuple((float(x), float(w)) for x, w in block.get("points", ())),
        tuple((float(u), float(q)) for u, q in block.get("quantiles", ())),
    )
    if shift:
        if s.phi_min - shift < 0:
            raise ScenarioError("support cost exceeds the smallest unit ad revenue")
        s = s.shifted(shift)
    return s


def _risk(block: Mapping[str, Any]) -> RiskUtility:
    kind = block.get("kind", "neutral")
    if kind == "neutral":
        return RiskUtility.neutral()
    coef = block.get("alpha" if kind == "averse" else "beta", block.get("coef"))
    if coef is None:
        raise ScenarioError(f"{kind} risk block needs a coefficient")
    return RiskUtility(kind, float(coef))


def parse_scenario(data: Mapping[str, Any]) -> Scenario:
    if not isinstance(data, Mapping):
        raise ScenarioError("scenario must be a JSON object")
    if "market" not in data:
        data = {"market": data}
    unknown = sorted(set(data) - KNOWN_KEYS)
    if unknown:
        raise ScenarioError(f"unknown scenario keys: {', '.join(unknown)}")
    try:
        market = MarketParams.from_dict(data["market"])
        shift = float(data.get("support_cost", 0.0))
        if shift < 0:
            raise ScenarioError("support cost must be non-negative")
        if shift:
            if market.phi - shift < 0:
                raise ScenarioError("support cost exceeds the unit ad revenue")
            market = market.replace(phi=market.phi - shift)
        check_params(market)
        phi = _phi_scenario(data["phi_scenario"], shift) if "phi_scenario" in data else None
        risk = _risk(data["risk"]) if "risk" in data else None
        bargaining = (
            BargainingSpec(float(data["bargaining"]["gamma"])) if "bargaining" in data else None
        )
        sweep = None
        if "sweep" in data:
            b = data["sweep"]
            sweep = SweepSpec(str(b["parameter"]), float(b["from"]), float(b["to"]), int(b["points"]))
            if sweep.points < 1:
                raise ScenarioError("sweep grid must contain at least one point")
            if sweep.parameter not in market.to_dict():
                raise ScenarioError(f"cannot sweep unknown parameter {sweep.parameter!r}")
    except KeyError as exc:
        raise ScenarioError(f"missing field: {exc.args[0]}") from exc
    except (TypeError, ValueError) as exc:
        if isinstance(exc, ScenarioError):
            raise
        raise ScenarioError(str(exc)) from exc
    return Scenario(market, phi, risk, bargaining, sweep)


def load_scenario(path: str | Path) -> Scenario:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ScenarioError(f"cannot read scenario {path}: {exc.strerror}") from exc
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ScenarioError(f"scenario {path} is not valid JSON: {exc}") from exc
    return parse_scenario(data)
