"""
Edge resistance distributions F and offspring laws.

Distribution spec grammar (command line and reports):
    point:c | uniform:a,b | exp:rate | discrete:x1:p1,x2:p2,...
"""

import math
from abc import ABC, abstractmethod
from dataclasses import dataclass
from typing import Tuple

import numpy as np
from scipy import stats

from app.core.exceptions import ParamOutOfRange

PMF_TOL = 1e-9


class EdgeDistribution(ABC):
    """A law F on [0, inf) for conducting edge resistances"""

    @abstractmethod
    def cdf(self, x: float) -> float:
        ...

    @abstractmethod
    def sample(self, rng: np.random.Generator, size: int) -> np.ndarray:
        ...

    @abstractmethod
    def inverse_mean(self) -> float:
        """Integral of 1/x dF, inf when divergent"""

    @property
    @abstractmethod
    def spec(self) -> str:
        ...

    @property
    def atom_at_zero(self) -> float:
        return self.cdf(0.0)

    @property
    def upper_bound(self) -> float:
        """Smallest K with F(K) = 1, inf for unbounded support"""
        return math.inf

    def __repr__(self) -> str:
        return f"{type(self).__name__}({self.spec})"


@dataclass(frozen=True, repr=False)
class PointMass(EdgeDistribution):
    c: float

    def __post_init__(self):
        if not (self.c >= 0 and math.isfinite(self.c)):
            raise ParamOutOfRange(f"point mass must be finite and >= 0, got {self.c}")

    def cdf(self, x: float) -> float:
        return 1.0 if x >= self.c else 0.0

    def sample(self, rng, size):
        return np.full(size, float(self.c))

    def inverse_mean(self) -> float:
        return math.inf if self.c == 0 else 1.0 / self.c

    @property
    def upper_bound(self) -> float:
        return float(self.c)

    @property
    def spec(self) -> str:
        return f"point:{self.c:g}"


@dataclass(frozen=True, repr=False)
class Uniform(EdgeDistribution):
    a: float
    b: float

    def __post_init__(self):
        if not (0 <= self.a < self.b < math.inf):
            raise ParamOutOfRange(f"uniform needs 0 <= a < b < inf, got ({self.a}, {self.b})")

    def cdf(self, x: float) -> float:
        return float(min(1.0, max(0.0, (x - self.a) / (self.b - self.a))))

    def sample(self, rng, size):
        return rng.uniform(self.a, self.b, size)

    def inverse_mean(self) -> float:
        if self.a == 0:
            return math.inf
        return (math.log(self.b) - math.log(self.a)) / (self.b - self.a)

    @property
    def upper_bound(self) -> float:
        return float(self.b)

    @property
    def spec(self) -> str:
        return f"uniform:{self.a:g},{self.b:g}"


@dataclass(frozen=True, repr=False)
class Exponential(EdgeDistribution):
    rate: float

    def __post_init__(self):
        if not (0 < self.rate < math.inf):
            raise ParamOutOfRange(f"exponential rate must be positive, got {self.rate}")

    def cdf(self, x: float) -> float:
        return 0.0 if x < 0 else -math.expm1(-self.rate * x)

    def sample(self, rng, size):
        return rng.exponential(1.0 / self.rate, size)

    def inverse_mean(self) -> float:
        # density is positive at 0
        return math.inf

    @property
    def spec(self) -> str:
        return f"exp:{self.rate:g}"


@dataclass(frozen=True, repr=False)
class Discrete(EdgeDistribution):
    values: Tuple[float, ...]
    probs: Tuple[float, ...]

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        probs = np.asarray(self.probs, dtype=float)
        if values.size == 0 or values.shape != probs.shape:
            raise ParamOutOfRange("discrete law needs matching nonempty values and probabilities")
        if np.any(values < 0) or not np.all(np.isfinite(values)):
            raise ParamOutOfRange("discrete support must be finite and >= 0")
        if np.any(probs < 0) or abs(probs.sum() - 1.0) > PMF_TOL:
            raise ParamOutOfRange(f"discrete probabilities must be >= 0 and sum to 1, got {probs.sum()}")
        order = np.argsort(values, kind="stable")
        object.__setattr__(self, "values", tuple(values[order].tolist()))
        object.__setattr__(self, "probs", tuple(probs[order].tolist()))

    def cdf(self, x: float) -> float:
        return float(sum(p for v, p in zip(self.values, self.probs) if v <= x))

    def sample(self, rng, size):
        return rng.choice(np.asarray(self.values), size=size, p=np.asarray(self.probs))

    def inverse_mean(self) -> float:
        total = 0.0
        for v, p in zip(self.values, self.probs):
            if p == 0:
                continue
            if v == 0:
                return math.inf
            total += p / v
        return total

    @property
    def upper_bound(self) -> float:
        return max(v for v, p in zip(self.values, self.probs) if p > 0)

    @property
    def spec(self) -> str:
        return "discrete:" + ",".join(f"{v:g}:{p:g}" for v, p in zip(self.values, self.probs))


def parse_dist_spec(text: str) -> EdgeDistribution:
    """Parse ``point:c``, ``uniform:a,b``, ``exp:rate`` or ``discrete:x1:p1,...``"""
    kind, _, body = text.strip().partition(":")
    kind = kind.lower()
    try:
        if kind == "point":
            return PointMass(float(body))
        if kind == "uniform":
            a, b = body.split(",")
            return Uniform(float(a), float(b))
        if kind in ("exp", "exponential"):
            return Exponential(float(body))
        if kind == "discrete":
            pairs = [item.split(":") for item in body.split(",") if item]
            if any(len(pair) != 2 for pair in pairs):
                raise ParamOutOfRange(f"discrete atoms must be value:prob, got '{body}'")
            return Discrete(
                tuple(float(v) for v, _ in pairs), tuple(float(p) for _, p in pairs)
            )
    except ValueError as e:
        if isinstance(e, ParamOutOfRange):
            raise
        raise ParamOutOfRange(f"malformed distribution spec '{text}': {e}") from e
    raise ParamOutOfRange(f"unknown distribution family '{kind}' in '{text}'")


# ==================== OFFSPRING LAWS ====================


@dataclass(frozen=True)
class OffspringLaw:
    """Poisson(mean) or an explicit pmf p_0, p_1, ... over offspring counts"""

    kind: str
    mean: float
    pmf: Tuple[float, ...] = ()

    def __post_init__(self):
        if self.kind not in ("poisson", "pmf"):
            raise ParamOutOfRange(f"unknown offspring law kind '{self.kind}'")
        if not (0 <= self.mean < math.inf):
            raise ParamOutOfRange(f"offspring mean must be finite and >= 0, got {self.mean}")

    @classmethod
    def poisson(cls, gamma: float) -> "OffspringLaw":
        return cls("poisson", float(gamma))

    @classmethod
    def from_pmf(cls, pmf) -> "OffspringLaw":
        probs = np.asarray(pmf, dtype=float)
        if probs.size == 0 or np.any(probs < 0) or abs(probs.sum() - 1.0) > PMF_TOL:
            raise ParamOutOfRange("offspring pmf must be nonnegative and sum to 1")
        mean = float(np.dot(np.arange(probs.size), probs))
        return cls("pmf", mean, tuple(probs.tolist()))

    @classmethod
    def point(cls, children: int) -> "OffspringLaw":
        pmf = [0.0] * children + [1.0]
        return cls.from_pmf(pmf)

    @property
    def is_degenerate_one(self) -> bool:
        """Every individual has exactly one child"""
        return self.kind == "pmf" and len(self.pmf) > 1 and self.pmf[1] == 1.0

    def sample(self, rng: np.random.Generator, size: int) -> np.ndarray:
        if self.kind == "poisson":
            return rng.poisson(self.mean, size)
        return rng.choice(len(self.pmf), size=size, p=np.asarray(self.pmf))

    def generating_function(self, s: float) -> float:
        """f(s) = sum_l p_l s^l"""
        if self.kind == "poisson":
            return math.exp(-self.mean * (1.0 - s))
        return float(np.polynomial.polynomial.polyval(s, self.pmf))

    def pmf_at(self, k: int) -> float:
        if self.kind == "poisson":
            return float(stats.poisson.pmf(k, self.mean))
        return self.pmf[k] if 0 <= k < len(self.pmf) else 0.0

    @property
    def spec(self) -> str:
        if self.kind == "poisson":
            return f"poisson:{self.mean:g}"
        return "pmf:" + ",".join(f"{p:g}" for p in self.pmf)
