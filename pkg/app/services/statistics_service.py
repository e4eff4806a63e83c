"""
Statistics Service - distribution comparisons for the experiments
"""

import logging
import math
from collections import Counter
from dataclasses import dataclass
from typing import Callable, Hashable, Iterable, Sequence, Tuple

import numpy as np
from scipy import stats

from app.core.exceptions import EmptyLaw, ParamOutOfRange
from app.models.empirical import EmpiricalLaw

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class KSResult:
    ks_finite: float
    atom_gap: float
    defined: bool  # both laws have finite samples

    def to_dict(self) -> dict:
        return {"ks_finite": self.ks_finite, "atom_gap": self.atom_gap, "ks_defined": self.defined}


@dataclass(frozen=True)
class GoodnessOfFit:
    statistic: float
    p_value: float
    dof: int
    nodes: int

    def passes(self, level: float = 0.01) -> bool:
        return self.p_value > level


class StatisticsService:
    """Two-sample and goodness-of-fit comparisons"""

    # ==================== EMPIRICAL LAWS ====================

    def ks_distance(self, a: EmpiricalLaw, b: EmpiricalLaw) -> KSResult:
        """Sup CDF gap between the finite parts, plus the gap between atoms at inf"""
        if a.total == 0 or b.total == 0:
            raise EmptyLaw("both laws need at least one sample")
        atom_gap = abs(a.atom_at_infinity - b.atom_at_infinity)
        if a.finite_count == 0 or b.finite_count == 0:
            return KSResult(0.0, atom_gap, False)

        gap = stats.ks_2samp(a.finite_samples, b.finite_samples).statistic
        return KSResult(float(gap), atom_gap, True)

    def ks_critical_value(self, n_a: int, n_b: int, alpha: float = 0.05) -> float:
        """Asymptotic two-sample KS threshold c(alpha) sqrt((n_a + n_b) / (n_a n_b))"""
        c = math.sqrt(-0.5 * math.log(alpha / 2))
        return c * math.sqrt((n_a + n_b) / (n_a * n_b))

    # ==================== DISCRETE LAWS ====================

    def total_variation(
        self,
        samples: Iterable[Hashable],
        reference: Callable[[Hashable], float],
    ) -> float:
        """TV between the empirical law of ``samples`` and an exact pmf.

        Mass the reference puts outside the observed support counts in full.
        """
        counts = Counter(samples)
        total = sum(counts.values())
        if total == 0:
            raise EmptyLaw("no samples for total variation")
        seen_mass = 0.0
        gap = 0.0
        for outcome, count in counts.items():
            p = reference(outcome)
            seen_mass += p
            gap += abs(count / total - p)
        return 0.5 * (gap + max(0.0, 1.0 - seen_mass))

    def empirical_total_variation(self, a: Sequence[Hashable], b: Sequence[Hashable]) -> float:
        """TV between two empirical laws"""
        ca, cb = Counter(a), Counter(b)
        na, nb = sum(ca.values()), sum(cb.values())
        if na == 0 or nb == 0:
            raise EmptyLaw("no samples for total variation")
        return 0.5 * sum(abs(ca[k] / na - cb[k] / nb) for k in set(ca) | set(cb))

    def gw_profile_probability(self, profile: Tuple[int, ...], gamma: float) -> float:
        """P{(|T_1|, ..., |T_k|) = profile} for Poisson(gamma) offspring"""
        previous = 1
        prob = 1.0
        for size in profile:
            prob *= float(stats.poisson.pmf(size, gamma * previous))
            previous = size
        return prob

    def binomial_poisson_tv(self, trials: int, p: float, mean: float) -> float:
        """Exact TV between Binomial(trials, p) and Poisson(mean)"""
        upper = int(max(trials, mean + 40 * math.sqrt(mean + 1) + 40))
        k = np.arange(upper + 1)
        binom = stats.binom.pmf(k, trials, p)
        poisson = stats.poisson.pmf(k, mean)
        return float(0.5 * (np.sum(np.abs(binom - poisson)) + stats.poisson.sf(upper, mean)))

    # ==================== TESTS ====================

    def poisson_goodness_of_fit(self, counts: Sequence[int], mean: float) -> GoodnessOfFit:
        """Chi-square test of offspring counts against Poisson(mean), pooling sparse cells"""
        counts = np.asarray(counts, dtype=np.int64)
        if counts.size == 0:
            raise EmptyLaw("no offspring counts")
        total = counts.size

        # cells 0..top-1 plus a tail cell, each with expected count >= 5
        top = 1
        while total * stats.poisson.pmf(top, mean) >= 5 and total * stats.poisson.sf(top, mean) >= 5:
            top += 1
        expected = np.append(stats.poisson.pmf(np.arange(top), mean), stats.poisson.sf(top - 1, mean)) * total
        observed = np.bincount(np.minimum(counts, top), minlength=top + 1)
        result = stats.chisquare(observed, expected)
        return GoodnessOfFit(float(result.statistic), float(result.pvalue), int(top), int(total))

    def binomial_stderr(self, p: float, n: int) -> float:
        if n <= 0:
            raise ParamOutOfRange("standard error needs n >= 1")
        return math.sqrt(max(p * (1.0 - p), 0.0) / n)

    def mean_within_sigma(self, values: Sequence[float], expected: float, sigmas: float = 3.0) -> bool:
        """Sample mean within ``sigmas`` standard errors of ``expected``"""
        values = np.asarray(values, dtype=float)
        se = values.std(ddof=1) / math.sqrt(values.size) if values.size > 1 else 0.0
        return abs(values.mean() - expected) <= sigmas * se + 1e-12


# Global statistics service instance
statistics_service = StatisticsService()


def get_statistics_service() -> StatisticsService:
    """Get statistics service instance"""
    return statistics_service
