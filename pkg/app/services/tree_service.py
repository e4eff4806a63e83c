"""
Tree Service - Galton-Watson family trees with resistor edges
Sampling, the series/parallel resistance recursion, limits and filtering
"""

import dataclasses
import logging
import math
from dataclasses import dataclass
from typing import List, Optional, Sequence

import numpy as np

from app.core import extended
from app.core.config import Settings, get_settings
from app.core.exceptions import NoDescendants, ParamOutOfRange, TreeTruncatedBeforeN
from app.models.distributions import EdgeDistribution, OffspringLaw
from app.models.network import ResistorNetwork
from app.models.tree import UNBOUNDED_DEPTH, FamilyTree

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class LimitEstimate:
    """R(T_[depth]) with the extrapolated remaining increase toward R(T)"""

    value: float
    converged: bool
    depth: int
    extinct: bool = False
    truncated: bool = False
    tail: float = 0.0
    censored: bool = False  # stopped by a cap with a tail above LIMIT_TAIL_TOL


class TreeGrower:
    """Grows one family tree generation by generation"""

    def __init__(self, law: OffspringLaw, F: EdgeDistribution, rng: np.random.Generator, node_cap: int):
        if node_cap < 1:
            raise ParamOutOfRange(f"node_cap must be positive, got {node_cap}")
        self.law = law
        self.F = F
        self.rng = rng
        self.node_cap = node_cap
        self._parent: List[np.ndarray] = [np.array([-1], dtype=np.int64)]
        self._rank: List[np.ndarray] = [np.array([0], dtype=np.int64)]
        self._resistance: List[np.ndarray] = [np.array([0.0])]
        self._sizes: List[int] = [1]
        self.count = 1
        self.extinct = False
        self.truncated = False
        self.partial = False  # last generation cut short by the cap

    @property
    def depth(self) -> int:
        return len(self._sizes) - 1

    @property
    def complete_depth(self) -> int:
        if self.extinct:
            return UNBOUNDED_DEPTH
        return self.depth - 1 if self.partial else self.depth

    def grow(self) -> bool:
        """Add the next generation; False once extinct or capped"""
        if self.extinct or self.truncated:
            return False

        current = self._sizes[-1]
        start = self.count - current
        counts = np.asarray(self.law.sample(self.rng, current), dtype=np.int64)
        total = int(counts.sum())
        if total == 0:
            self.extinct = True
            return False

        parents = np.repeat(np.arange(start, start + current), counts)
        ranks = np.arange(total) - np.repeat(np.cumsum(counts) - counts, counts) + 1
        resistance = np.asarray(self.F.sample(self.rng, total), dtype=float)

        keep = total
        if self.count + total > self.node_cap:
            keep = self.node_cap - self.count
            self.truncated = True
            logger.debug(f"Node cap {self.node_cap} reached in generation {self.depth + 1}")
            if keep == 0:
                return False
            self.partial = True

        self._parent.append(parents[:keep])
        self._rank.append(ranks[:keep])
        self._resistance.append(resistance[:keep])
        self._sizes.append(keep)
        self.count += keep
        return not self.truncated

    def tree(self) -> FamilyTree:
        return FamilyTree(
            parent=np.concatenate(self._parent),
            rank=np.concatenate(self._rank),
            resistance=np.concatenate(self._resistance),
            offsets=np.concatenate([[0], np.cumsum(self._sizes)]),
            complete_depth=self.complete_depth,
            truncated=self.truncated,
        )


class TreeService:
    """Family tree sampling and resistance evaluation"""

    def __init__(self, settings: Optional[Settings] = None):
        self.settings = settings or get_settings()

    # ==================== SAMPLING ====================

    def sample_tree(
        self,
        law: OffspringLaw,
        F: EdgeDistribution,
        rng: np.random.Generator,
        depth_cap: Optional[int] = None,
        node_cap: Optional[int] = None,
    ) -> FamilyTree:
        """Breadth-first tree with independent offspring counts and edge resistances"""
        depth_cap = self.settings.DEPTH_CAP if depth_cap is None else depth_cap
        node_cap = self.settings.NODE_CAP if node_cap is None else node_cap
        if depth_cap < 0:
            raise ParamOutOfRange(f"depth_cap must be >= 0, got {depth_cap}")

        grower = TreeGrower(law, F, rng, node_cap)
        while grower.depth < depth_cap and grower.grow():
            pass
        return grower.tree()

    # ==================== EXTINCTION ====================

    def generating_function(self, law: OffspringLaw, s: float) -> float:
        if not 0 <= s <= 1:
            raise ParamOutOfRange(f"generating function argument must lie in [0, 1], got {s}")
        return law.generating_function(s)

    def extinction_probability(self, law: OffspringLaw) -> float:
        """Smallest fixed point of f in [0, 1], by monotone iteration from 0"""
        if law.is_degenerate_one:
            return 0.0
        if law.mean <= 1:
            return 1.0

        q = 0.0
        for _ in range(self.settings.EXTINCTION_MAX_ITER):
            nxt = law.generating_function(q)
            if abs(nxt - q) <= self.settings.EXTINCTION_TOL:
                return nxt
            q = nxt
        logger.warning(f"⚠️ Extinction iteration for {law.spec} stopped at the iteration cap")
        return q

    # ==================== RESISTANCE ====================

    def _values_to_generation(self, tree: FamilyTree, n: int) -> np.ndarray:
        """Per node, resistance down to its generation-n descendants (inf if none)"""
        values = np.full(int(tree.offsets[n + 1]), extended.INF)
        values[tree.nodes_at(n)] = 0.0
        for g in range(n - 1, -1, -1):
            children = tree.nodes_at(g + 1)
            if children.size == 0:
                continue
            g_children = extended.conductances(tree.resistance[children] + values[children])
            start = int(tree.offsets[g])
            sums = np.bincount(
                tree.parent[children] - start,
                weights=g_children,
                minlength=tree.generation_size(g),
            )
            values[start:start + sums.size] = extended.resistances(sums)
        return values

    def generation_empty(self, tree: FamilyTree, n: int) -> bool:
        """True when T_n is known to be empty"""
        if n < 0:
            raise ParamOutOfRange(f"generation must be >= 0, got {n}")
        extinct_at = tree.extinct_at
        if extinct_at is not None and extinct_at <= n:
            return True
        if n > tree.complete_depth:
            raise TreeTruncatedBeforeN(n, tree.complete_depth)
        return False

    def truncated_resistance(self, tree: FamilyTree, n: int) -> float:
        """R(T_[n]): resistance between the root and generation n"""
        if self.generation_empty(tree, n):
            return extended.INF
        return float(self._values_to_generation(tree, n)[0])

    def resistance_profile(self, tree: FamilyTree, max_depth: Optional[int] = None) -> List[float]:
        """R(T_[d]) for d = 1..max_depth (default: every complete generation)"""
        limit = min(tree.complete_depth, tree.depth + 1) if max_depth is None else max_depth
        return [self.truncated_resistance(tree, d) for d in range(1, limit + 1)]

    def subtree_resistance(self, tree: FamilyTree, node: int, n: int) -> float:
        """Resistance from ``node`` to its generation-n descendants inside its subtree"""
        if self.generation_empty(tree, n):
            raise NoDescendants(node, n)
        value = float(self._values_to_generation(tree, n)[node])
        if math.isinf(value):
            raise NoDescendants(node, n)
        return value

    def epsilon_resistance(self, tree: FamilyTree, n: int, eps: float) -> float:
        """R(T_[n]) with every edge resistance raised by eps"""
        return self.truncated_resistance(self.apply_truncation(tree, eps, extended.INF), n)

    def has_descendants_at(self, tree: FamilyTree, m: int) -> np.ndarray:
        """Boolean mask over nodes of generations <= m with a descendant in generation m"""
        empty = self.generation_empty(tree, m)
        top = min(m, tree.depth)
        mark = np.zeros(int(tree.offsets[top + 1]), dtype=bool)
        if empty:
            return mark
        mark[tree.nodes_at(m)] = True
        for g in range(m - 1, -1, -1):
            children = tree.nodes_at(g + 1)
            mark[tree.parent[children[mark[children]]]] = True
        return mark

    def limit_resistance_estimate(
        self,
        law: OffspringLaw,
        F: EdgeDistribution,
        rng: np.random.Generator,
        depth_cap: Optional[int] = None,
        node_cap: Optional[int] = None,
        eps: Optional[float] = None,
    ) -> LimitEstimate:
        """
        Lower bound for R(T) from R(T_[d]) at the last feasible depth

        A tree stopped by the node or depth cap before the stabilization rule
        fires keeps R(T_[d]) as its value. It is censored only when the
        geometric extrapolation of its last increments leaves more than
        LIMIT_TAIL_TOL unaccounted for.
        """
        depth_cap = self.settings.DEPTH_CAP if depth_cap is None else depth_cap
        node_cap = self.settings.NODE_CAP if node_cap is None else node_cap
        eps = self.settings.STABILIZATION_EPS if eps is None else eps

        grower = TreeGrower(law, F, rng, node_cap)
        history: List[float] = []
        while grower.depth < depth_cap and grower.grow():
            history.append(self.truncated_resistance(grower.tree(), grower.depth))
            if len(history) >= 3:
                steps = np.diff(history[-3:])
                if np.all(np.isfinite(history[-3:])) and np.all(np.abs(steps) < eps):
                    return LimitEstimate(history[-1], True, grower.depth, tail=geometric_tail(history))

        if grower.extinct:
            return LimitEstimate(extended.INF, True, grower.depth, extinct=True)

        value = history[-1] if history else 0.0
        tail = geometric_tail(history)
        censored = not tail <= self.settings.LIMIT_TAIL_TOL
        if censored:
            logger.debug(f"Limit estimate censored at depth {len(history)}: tail {tail:.3g}")
        return LimitEstimate(
            value, False, len(history), truncated=grower.truncated, tail=tail, censored=censored
        )

    # ==================== TRANSFORMS ====================

    def filter_tree(self, tree: FamilyTree, K: float) -> FamilyTree:
        """Subtree reachable from the root through edges with r <= K"""
        kept = tree.resistance <= K
        kept[0] = True
        for g in range(1, tree.depth + 1):
            nodes = tree.nodes_at(g)
            kept[nodes] &= kept[tree.parent[nodes]]
        return _subtree(tree, kept)

    def apply_truncation(self, tree: FamilyTree, eps: float, K: float) -> FamilyTree:
        """r -> r + eps when r + eps <= K, else inf"""
        if not 0 <= eps < K:
            raise ParamOutOfRange(f"truncation needs 0 <= eps < K, got eps={eps}, K={K}")
        raised = tree.resistance + eps
        resistance = np.where(raised <= K, raised, extended.INF)
        resistance[0] = 0.0
        return dataclasses.replace(tree, resistance=resistance)

    def tree_to_network(self, tree: FamilyTree, n: int) -> ResistorNetwork:
        """T_[n] as a network with A0 = {root}, A1 = generation n; vertices are node indices"""
        if n < 1:
            raise ParamOutOfRange(f"tree network needs n >= 1, got {n}")
        if self.generation_empty(tree, n):
            raise ParamOutOfRange(f"generation {n} is empty")
        count = int(tree.offsets[n + 1])
        edges = [
            (int(tree.parent[i]), i, float(tree.resistance[i])) for i in range(1, count)
        ]
        return ResistorNetwork.build(
            edges, a0=[0], a1=tree.nodes_at(n).tolist(), vertices=range(count)
        )


def geometric_tail(history: Sequence[float], window: int = 3) -> float:
    """
    Remaining increase of a nondecreasing sequence whose last ``window``
    increments shrink by a common ratio; inf when they do not shrink
    """
    recent = np.asarray(history[-(window + 1):], dtype=float)
    if recent.size < 3 or not np.all(np.isfinite(recent)):
        return extended.INF
    steps = np.diff(recent)
    if steps[-1] <= 0:
        return 0.0
    if steps[0] <= 0:
        return extended.INF
    ratio = (steps[-1] / steps[0]) ** (1.0 / (steps.size - 1))
    if ratio >= 1:
        return extended.INF
    return float(steps[-1] * ratio / (1 - ratio))


def _subtree(tree: FamilyTree, kept: np.ndarray) -> FamilyTree:
    """Restrict to a root-closed node mask, renumbering indices and child ranks"""
    old = np.flatnonzero(kept)
    new_index = np.full(tree.size, -1, dtype=np.int64)
    new_index[old] = np.arange(old.size)

    parent = np.where(old == 0, -1, new_index[tree.parent[old]])
    parent[0] = -1
    rank = np.zeros(old.size, dtype=np.int64)
    if old.size > 1:
        children = parent[1:]
        order = np.argsort(children, kind="stable")
        sorted_parents = children[order]
        starts = np.r_[0, np.flatnonzero(np.diff(sorted_parents)) + 1]
        lengths = np.diff(np.r_[starts, sorted_parents.size])
        within = np.arange(sorted_parents.size) - np.repeat(starts, lengths) + 1
        rank[1:][order] = within

    sizes = np.bincount(tree.generation[old])
    return FamilyTree(
        parent=parent,
        rank=rank,
        resistance=tree.resistance[old],
        offsets=np.concatenate([[0], np.cumsum(sizes)]),
        complete_depth=tree.complete_depth,
        truncated=tree.truncated,
    )


# Global tree service instance
tree_service = TreeService()


def get_tree_service() -> TreeService:
    """Get tree service instance"""
    return tree_service
