"""
Coupling Service - exploration tree and Poisson(delta) tree on one probability space

The exploration tree grows stage by stage over conducting edges of the
complete network while a Poisson(delta) family tree is grown alongside it by
an inverse-CDF step, so that with high probability the family tree is a
labeled subtree of the exploration tree.
"""

import logging
import math
from dataclasses import dataclass
from typing import Dict, Hashable, List, Tuple

import numpy as np
from scipy import stats

from app.core.exceptions import ParamOutOfRange
from app.models.edge_law import INFINITY_VERTEX, EdgeLaw, ExplorationLayers

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class CouplingResult:
    tau_tilde: ExplorationLayers
    T_tilde: ExplorationLayers
    inclusion: bool
    overflow: int  # children placed on fresh labels
    next_label: int

    @property
    def offspring_counts(self) -> List[int]:
        """Child counts of every T_tilde node above the last generation"""
        counts: Dict[Hashable, int] = {v: 0 for layer in self.T_tilde.layers[:-1] for v in layer}
        for parent, _, _ in self.T_tilde.tree_edges:
            counts[parent] += 1
        return list(counts.values())


@dataclass
class _Stage:
    """What the exploration stage recorded for one frontier vertex"""

    q: int
    candidates: int
    children: np.ndarray
    resistances: np.ndarray


class PoissonTable:
    """Cumulative Poisson(delta) probabilities with an inverse lookup"""

    def __init__(self, delta: float):
        self.delta = delta
        self._extend(int(delta + 20 * math.sqrt(delta) + 50))

    def _extend(self, size: int):
        self.cdf = stats.poisson.cdf(np.arange(size), self.delta)

    def inverse(self, v: float) -> int:
        """Smallest m with pi(m) >= v"""
        while v > self.cdf[-1] and self.cdf[-1] < 1.0:
            self._extend(2 * self.cdf.size)
        return int(np.searchsorted(self.cdf, v, side="left"))


def binomial_cdf(x: int, trials: int, p: float) -> float:
    """beta(x) with beta(-1) = 0"""
    if x < 0:
        return 0.0
    return float(stats.binom.cdf(x, trials, p))


class CouplingService:
    """Joint growth of exploration trees and Poisson family trees"""

    # ==================== GROWTH ====================

    def coupled_growth(
        self,
        law: EdgeLaw,
        delta: float,
        m: int,
        rng: np.random.Generator,
    ) -> CouplingResult:
        """Grow tau_tilde from 0 (never entering inf) together with T_tilde"""
        self._validate(law, delta, m)
        blocked = np.zeros(law.size, dtype=bool)
        blocked[law.infinity] = True
        return self._grow(law, 0, blocked, delta, m, rng, next_label=law.n + 1)

    def coupled_pair(
        self,
        law: EdgeLaw,
        delta: float,
        m: int,
        rng: np.random.Generator,
    ) -> Tuple[CouplingResult, CouplingResult]:
        """The coupling from 0, then a second one from inf that avoids every vertex of the first.

        Auxiliary variables of the second run are fresh draws and its fresh
        labels continue after those of the first.
        """
        self._validate(law, delta, m)
        first = self.coupled_growth(law, delta, m, rng)

        blocked = np.zeros(law.size, dtype=bool)
        blocked[[law.index(v) for v in first.tau_tilde.vertices]] = True
        second = self._grow(law, law.infinity, blocked, delta, m, rng, next_label=first.next_label)

        if first.tau_tilde.vertices & second.tau_tilde.vertices:
            raise AssertionError("coupled exploration trees share a vertex")
        return first, second

    @staticmethod
    def _validate(law: EdgeLaw, delta: float, m: int):
        if not 1 < delta < law.gamma_n:
            raise ParamOutOfRange(f"coupling needs 1 < delta < gamma_n={law.gamma_n}, got {delta}")
        if m < 1:
            raise ParamOutOfRange(f"m must be >= 1, got {m}")

    def _grow(
        self,
        law: EdgeLaw,
        root: int,
        blocked: np.ndarray,
        delta: float,
        m: int,
        rng: np.random.Generator,
        next_label: int,
    ) -> CouplingResult:
        table = PoissonTable(delta)
        root_label = law.label(root)

        chosen = blocked.copy()  # C: vertices no longer available as children
        chosen[root] = True

        tau_layers: List[List[int]] = [[root]]
        tau_edges: List[Tuple[Hashable, Hashable, float]] = []
        T_layers: List[List[Hashable]] = [[root_label]]
        T_edges: List[Tuple[Hashable, Hashable, float]] = []
        overflow = 0

        for level in range(m):
            # exploration stage, frontier in ascending label order
            stage: Dict[int, _Stage] = {}
            found: List[int] = []
            for i in sorted(tau_layers[level]):
                available = ~chosen
                children, resistances = law.conducting_neighbors(i, available)
                stage[i] = _Stage(children.size, int(np.count_nonzero(available)), children, resistances)
                chosen[children] = True
                found.extend(children.tolist())
                tau_edges.extend(
                    (law.label(i), law.label(w), r) for w, r in zip(children.tolist(), resistances.tolist())
                )
            tau_layers.append(sorted(found))

            # family tree stage
            born: List[Hashable] = []
            for j in sorted(T_layers[level], key=_label_key):
                if _is_model_vertex(j, law):
                    record = stage[law.index(j)]
                    u = self._inverse_step(record, law.p, table, rng)
                    take = min(u, record.q)
                    kids = [
                        (law.label(w), r)
                        for w, r in zip(record.children[:take].tolist(), record.resistances[:take].tolist())
                    ]
                    extra = u - take
                    overflow += extra
                else:
                    kids = []
                    extra = int(rng.poisson(delta))

                if extra:
                    fresh = list(range(next_label, next_label + extra))
                    next_label += extra
                    kids.extend(zip(fresh, np.asarray(law.F.sample(rng, extra), dtype=float).tolist()))

                for child, r in kids:
                    T_edges.append((j, child, r))
                    born.append(child)
            T_layers.append(sorted(born, key=_label_key))

        tau = ExplorationLayers(
            root=root_label,
            layers=tuple(tuple(law.label(v) for v in layer) for layer in tau_layers),
            tree_edges=tuple(tau_edges),
        )
        T = ExplorationLayers(root=root_label, layers=tuple(map(tuple, T_layers)), tree_edges=tuple(T_edges))
        tau_pairs = {(p, c) for p, c, _ in tau_edges}
        inclusion = all((p, c) in tau_pairs for p, c, _ in T_edges)
        logger.debug(f"Coupled growth from {root_label}: inclusion={inclusion}, overflow={overflow}")
        return CouplingResult(tau, T, inclusion, overflow, next_label)

    @staticmethod
    def _inverse_step(record: _Stage, p: float, table: PoissonTable, rng: np.random.Generator) -> int:
        """u = pi^-1(V) with V uniform on [beta(q-1), beta(q)]"""
        low = binomial_cdf(record.q - 1, record.candidates, p)
        high = binomial_cdf(record.q, record.candidates, p)
        v = low + rng.random() * (high - low)
        return table.inverse(v)

    # ==================== DIAGNOSTICS ====================

    def marginal_identity(self, candidates: int, p: float, delta: float, r: int) -> float:
        """sum_q P{Binomial = q} * P{pi^-1(V) <= r | q}; equals pi(r) exactly in theory"""
        target = float(stats.poisson.cdf(r, delta))
        beta = stats.binom.cdf(np.arange(candidates + 1), candidates, p)
        previous = np.concatenate([[0.0], beta[:-1]])
        mass = beta - previous
        total = 0.0
        for lo, w in zip(previous, mass):
            if w <= 0:
                continue
            conditional = min(1.0, max(0.0, (target - lo) / w))
            total += w * conditional
        return total


def _is_model_vertex(label: Hashable, law: EdgeLaw) -> bool:
    return label == INFINITY_VERTEX or (isinstance(label, int) and label <= law.n)


def _label_key(label: Hashable):
    # inf only ever appears as a root
    return (1, 0) if label == INFINITY_VERTEX else (0, label)


# Global coupling service instance
coupling_service = CouplingService()


def get_coupling_service() -> CouplingService:
    """Get coupling service instance"""
    return coupling_service
