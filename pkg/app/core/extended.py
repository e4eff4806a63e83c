"""
Extended resistances in [0, inf].

Values are plain floats; ``math.inf`` is the distinguished infinite resistance.
The arithmetic table is total: x + inf = inf, 1/0 = inf, 1/inf = 0,
series(inf, x) = inf, parallel(0, x) = 0.
"""

import math
from typing import Iterable

import numpy as np

from app.core.exceptions import ParamOutOfRange

ExtResistance = float

INF: ExtResistance = math.inf


def check(value: float) -> ExtResistance:
    """Validate and normalise a resistance value"""
    value = float(value)
    if math.isnan(value) or value < 0:
        raise ParamOutOfRange(f"resistance must lie in [0, inf], got {value}")
    return value


def conductance(r: ExtResistance) -> float:
    if r == 0:
        return INF
    if math.isinf(r):
        return 0.0
    return 1.0 / r


def from_conductance(g: float) -> ExtResistance:
    if g == 0:
        return INF
    if math.isinf(g):
        return 0.0
    return 1.0 / g


def series(a: ExtResistance, b: ExtResistance) -> ExtResistance:
    """a + b with inf absorbing"""
    return check(a) + check(b)


def parallel(a: ExtResistance, b: ExtResistance) -> ExtResistance:
    """(1/a + 1/b)^-1 with 0 absorbing"""
    a, b = check(a), check(b)
    if a == 0 or b == 0:
        return 0.0
    if math.isinf(a):
        return b
    if math.isinf(b):
        return a
    return a * b / (a + b)


def parallel_all(values: Iterable[ExtResistance]) -> ExtResistance:
    """Parallel combination of any number of resistances; empty input is inf"""
    total = INF
    for value in values:
        total = parallel(total, value)
    return total


def conductances(r: np.ndarray) -> np.ndarray:
    """Vectorised 1/r with 1/0 = inf and 1/inf = 0"""
    r = np.asarray(r, dtype=float)
    with np.errstate(divide="ignore"):
        return np.where(r == 0, INF, 1.0 / r)


def resistances(g: np.ndarray) -> np.ndarray:
    """Vectorised inverse of :func:`conductances`"""
    g = np.asarray(g, dtype=float)
    with np.errstate(divide="ignore"):
        return np.where(g == 0, INF, 1.0 / g)


def format_resistance(r: ExtResistance) -> str:
    if math.isinf(r):
        return "inf"
    return f"{r:.12g}"


def parse_resistance(token: str) -> ExtResistance:
    token = token.strip().lower()
    if token in ("inf", "infinity", "+inf"):
        return INF
    return check(float(token))
