"""
Empirical laws on [0, inf] with a separate atom at infinity.
"""

import math
from dataclasses import dataclass
from typing import Iterable, Optional

import numpy as np

from app.core.exceptions import EmptyLaw, ParamOutOfRange


@dataclass(frozen=True, eq=False)
class EmpiricalLaw:
    finite_samples: np.ndarray  # sorted
    infinity_count: int
    trial_values: Optional[np.ndarray] = None  # trial order, inf kept
    censored: Optional[np.ndarray] = None  # per trial, aligned with trial_values

    @classmethod
    def from_values(cls, values: Iterable[float], censored: Iterable[bool] | None = None) -> "EmpiricalLaw":
        values = np.asarray(list(values), dtype=float)
        if np.any(np.isnan(values)) or np.any(values < 0):
            raise ParamOutOfRange("empirical law values must lie in [0, inf]")
        flags = None
        if censored is not None:
            flags = np.asarray(list(censored), dtype=bool)
            if flags.shape != values.shape:
                raise ParamOutOfRange("censored flags must align with values")
        finite = np.sort(values[np.isfinite(values)])
        return cls(
            finite_samples=finite,
            infinity_count=int(np.count_nonzero(np.isinf(values))),
            trial_values=values,
            censored=flags,
        )

    @property
    def total(self) -> int:
        return int(self.finite_samples.size + self.infinity_count)

    @property
    def finite_count(self) -> int:
        return int(self.finite_samples.size)

    @property
    def censored_count(self) -> int:
        return 0 if self.censored is None else int(np.count_nonzero(self.censored))

    @property
    def censored_fraction(self) -> float:
        return self.censored_count / self.total if self.total else 0.0

    def _require_samples(self):
        if self.total == 0:
            raise EmptyLaw("empirical law has no samples")

    @property
    def atom_at_infinity(self) -> float:
        self._require_samples()
        return self.infinity_count / self.total

    @property
    def atom_stderr(self) -> float:
        """Binomial standard error of the atom estimate"""
        p = self.atom_at_infinity
        return math.sqrt(p * (1.0 - p) / self.total)

    def cdf(self, x: float) -> float:
        """P{X <= x} for the full law; x = inf gives 1"""
        self._require_samples()
        if math.isinf(x):
            return 1.0
        return np.searchsorted(self.finite_samples, x, side="right") / self.total

    def finite_cdf(self, x) -> np.ndarray:
        """CDF of the law conditioned on finiteness"""
        if self.finite_count == 0:
            raise EmptyLaw("no finite samples")
        return np.searchsorted(self.finite_samples, x, side="right") / self.finite_count

    def quantile(self, p: float) -> float:
        """Smallest x with P{X <= x} >= p; inf when p exceeds the finite mass"""
        self._require_samples()
        if not 0 < p <= 1:
            raise ParamOutOfRange(f"quantile level must lie in (0, 1], got {p}")
        k = math.ceil(p * self.total)
        if k > self.finite_count:
            return math.inf
        return float(self.finite_samples[k - 1])

    @property
    def median(self) -> float:
        return self.quantile(0.5)

    def scaled(self, factor: float) -> "EmpiricalLaw":
        """Law of factor * X with inf preserved"""
        if not 0 < factor < math.inf:
            raise ParamOutOfRange(f"scale factor must be positive and finite, got {factor}")
        values = None if self.trial_values is None else self.trial_values * factor
        return EmpiricalLaw(self.finite_samples * factor, self.infinity_count, values, self.censored)

    def summary(self) -> dict:
        out = {
            "total": self.total,
            "finite": self.finite_count,
            "infinite": self.infinity_count,
            "censored": self.censored_count,
        }
        if self.total:
            out["atom_at_infinity"] = self.atom_at_infinity
            out["median"] = self.median
            if self.finite_count:
                out["finite_mean"] = float(self.finite_samples.mean())
                out["finite_quantiles"] = {
                    str(q): float(np.quantile(self.finite_samples, q)) for q in (0.1, 0.25, 0.5, 0.75, 0.9)
                }
        return out
