"""One-dimensional search helpers shared by the optimizers."""

from __future__ import annotations

import math
from typing import Callable

import numpy as np

INV_PHI = (math.sqrt(5.0) - 1.0) / 2.0


def golden_section_max(
    f: Callable[[float], float], lo: float, hi: float, xtol: float = 1e-8, maxiter: int = 500
) -> tuple[float, float]:
    """Maximize a unimodal ``f`` on ``[lo, hi]``; returns ``(x, f(x))``.

    The endpoints are also evaluated so a maximum sitting on the boundary is
    not lost to the interior probes.
    """
    if hi < lo:
        lo, hi = hi, lo
    a, b = lo, hi
    c = b - INV_PHI * (b - a)
    d = a + INV_PHI * (b - a)
    fc, fd = f(c), f(d)
    for _ in range(maxiter):
        if b - a <= xtol:
            break
        if fc >= fd:
            b, d, fd = d, c, fc
            c = b - INV_PHI * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + INV_PHI * (b - a)
            fd = f(d)
    candidates = [(lo, f(lo)), (c, fc), (d, fd), (hi, f(hi))]
    # Highest value wins; ties go to the smaller abscissa.
    best = max(candidates, key=lambda xv: (xv[1], -xv[0]))
    return best


def grid_then_golden(
    f: Callable[[float], float], lo: float, hi: float, points: int = 256, xtol: float = 1e-8
) -> tuple[float, float]:
    """Scan ``points`` equispaced values, then golden-refine around the best one."""
    if hi <= lo:
        return lo, f(lo)
    xs = np.linspace(lo, hi, points)
    values = np.array([f(x) for x in xs])
    i = int(np.argmax(values))  # first maximum, i.e. smallest x on ties
    a = xs[max(i - 1, 0)]
    b = xs[min(i + 1, points - 1)]
    x, v = golden_section_max(f, a, b, xtol=xtol)
    if values[i] > v:
        return float(xs[i]), float(values[i])
    return x, v
