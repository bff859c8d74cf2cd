import numpy as np
import pytest
from hypothesis import settings
from hypothesis import strategies as st

from poitariff.core_model import MarketParams, investment_threshold
from poitariff.oracle import random_params

settings.register_profile("default", max_examples=60, deadline=None)
settings.load_profile("default")

RANDOM_SEED = 20241014

# Subsidy baseline: large initial investment, the venue always attracts new visitors.
BASELINE = MarketParams(N=200, c_max=24, U=3, V=5, theta=0.05, delta=0.1, I0=0.6,
                        b=1, k=3, eta=0.2, phi=0.4)
# Venue-quality markets with weak and strong congestion.
QUALITY_LOW = MarketParams(N=400, c_max=36, U=5, V=4.5, theta=0.01, delta=0.005, I0=1,
                           b=3, k=2, eta=0.5, phi=0.1)
QUALITY_HIGH = QUALITY_LOW.replace(delta=0.3)
# Popularity market (sweep eta) and population market (sweep N).
POPULARITY = MarketParams(N=200, c_max=36, U=6, V=5, theta=0.05, delta=9, I0=25,
                          b=7, k=3, eta=0.5, phi=2)
POPULATION = MarketParams(N=100, c_max=100, U=6, V=5, theta=0.1, delta=12, I0=3,
                          b=29, k=5.2, eta=0.3, phi=8)


def _log_scale(lo, hi):
    return st.floats(np.log(lo), np.log(hi)).map(np.exp).map(float)


@st.composite
def markets(draw, max_eta=1.0, small_initial=False):
    """Admissible markets built directly, so no draws are rejected."""
    N = draw(_log_scale(10, 2000))
    U = draw(_log_scale(0.3, 30))
    V = draw(_log_scale(0.5, 50))
    theta = draw(st.one_of(st.just(0.0), _log_scale(1e-4, 0.05)))
    room = draw(st.floats(0.02, 3.0))
    c_max = (U + V + theta * N) * (1.0 + room)
    eta = draw(st.floats(0.01, max_eta))
    delta = draw(_log_scale(1e-3, 10))
    probe = MarketParams(N=N, c_max=c_max, U=U, V=V, theta=theta, delta=delta, I0=0.0,
                         b=1.0, k=1.0, eta=eta, phi=0.0)
    ith = investment_threshold(probe)
    if small_initial:
        I0 = ith * draw(st.floats(0.0, 0.95))
    else:
        I0 = draw(st.one_of(st.just(0.0), _log_scale(1e-3, 50)))
    return probe.replace(
        I0=I0,
        b=draw(_log_scale(0.05, 20)),
        k=draw(_log_scale(0.1, 10)),
        phi=draw(st.one_of(st.just(0.0), _log_scale(1e-3, 10))),
    )


@pytest.fixture(scope="session")
def random_markets():
    return random_params(np.random.default_rng(RANDOM_SEED), 100)


ACCEPTANCE_LINES: list[str] = []


def record_acceptance(number: int, ok: bool, detail: str) -> None:
    line = f"criterion {number:2d}: {'PASS' if ok else 'FAIL'}  {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
