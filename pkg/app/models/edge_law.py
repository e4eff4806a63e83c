"""
The random complete network on {0, 1, ..., n, inf} with lazily sampled edges,
and the breadth-first exploration layers grown over its conducting edges.

Internally vertices are indices 0..n+1 with index n+1 standing for inf.
"""

import math
from collections import defaultdict
from dataclasses import dataclass, field
from typing import Dict, Hashable, List, Optional, Set, Tuple

import numpy as np

from app.core.exceptions import ParamOutOfRange
from app.models.distributions import EdgeDistribution
from app.models.network import ResistorNetwork
from app.models.tree import FamilyTree, tree_from_parents

INFINITY_VERTEX = "inf"


class _RowStore:
    """Bulk-decided rows: owner vertex plus the mask of partners decided with it"""

    def __init__(self, width: int):
        self.width = width
        self.owners: List[int] = []
        self._rows = np.zeros((8, width), dtype=bool)
        self._slot: Dict[int, int] = {}

    def add(self, owner: int, mask: np.ndarray):
        slot = self._slot.get(owner)
        if slot is None:
            slot = len(self.owners)
            if slot == self._rows.shape[0]:
                self._rows = np.concatenate([self._rows, np.zeros_like(self._rows)])
            self.owners.append(owner)
            self._slot[owner] = slot
        self._rows[slot] |= mask

    def row(self, owner: int) -> Optional[np.ndarray]:
        slot = self._slot.get(owner)
        return None if slot is None else self._rows[slot]

    def owners_covering(self, vertex: int) -> np.ndarray:
        """Owners whose decided row contains ``vertex``"""
        used = len(self.owners)
        if used == 0:
            return np.empty(0, dtype=np.int64)
        hit = self._rows[:used, vertex]
        return np.asarray(self.owners, dtype=np.int64)[hit]


class EdgeLaw:
    """Edge states of K_{n+2}: conducting with probability gamma_n / n and r ~ F, else inf.

    Each unordered pair is sampled at most once; later queries return the
    stored state. Owned by a single trial.
    """

    def __init__(self, n: int, gamma_n: float, F: EdgeDistribution, rng: np.random.Generator):
        if n < 1:
            raise ParamOutOfRange(f"n must be >= 1, got {n}")
        if not 0 <= gamma_n <= n:
            raise ParamOutOfRange(f"gamma_n must lie in [0, n], got {gamma_n}")
        self.n = n
        self.gamma_n = float(gamma_n)
        self.p = self.gamma_n / n
        self.F = F
        self.rng = rng
        self.size = n + 2
        self.infinity = n + 1
        self._conducting: Dict[int, Dict[int, float]] = defaultdict(dict)
        self._refused: Dict[int, Set[int]] = defaultdict(set)
        self._rows = _RowStore(self.size)
        self._complete = False
        self.fresh_pairs = 0

    # ==================== LABELS ====================

    def label(self, index: int) -> Hashable:
        return INFINITY_VERTEX if index == self.infinity else int(index)

    def index(self, label: Hashable) -> int:
        if label == INFINITY_VERTEX:
            return self.infinity
        if not (isinstance(label, (int, np.integer)) and 0 <= label <= self.n):
            raise ParamOutOfRange(f"unknown vertex {label!r}")
        return int(label)

    # ==================== QUERIES ====================

    def _decided(self, u: int) -> np.ndarray:
        if self._complete:
            return np.ones(self.size, dtype=bool)
        mask = np.zeros(self.size, dtype=bool)
        own = self._rows.row(u)
        if own is not None:
            mask |= own
        mask[self._rows.owners_covering(u)] = True
        if self._conducting.get(u):
            mask[list(self._conducting[u])] = True
        if self._refused.get(u):
            mask[list(self._refused[u])] = True
        mask[u] = True
        return mask

    def resistance(self, u: Hashable, v: Hashable) -> float:
        """State of the edge {u, v}, sampled on first use"""
        i, j = self.index(u), self.index(v)
        if i == j:
            raise ParamOutOfRange("no self-loops in the complete network")
        known = self._conducting.get(i, {}).get(j)
        if known is not None:
            return known
        if self._complete or j in self._refused.get(i, ()):
            return math.inf
        row_i, row_j = self._rows.row(i), self._rows.row(j)
        if (row_i is not None and row_i[j]) or (row_j is not None and row_j[i]):
            return math.inf

        self.fresh_pairs += 1
        if self.rng.random() < self.p:
            r = float(self.F.sample(self.rng, 1)[0])
            self._conducting[i][j] = r
            self._conducting[j][i] = r
            return r
        self._refused[i].add(j)
        self._refused[j].add(i)
        return math.inf

    def conducting_neighbors(self, u: int, candidates: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        """Conducting partners of index ``u`` within a boolean candidate mask.

        Returns ascending indices and their resistances. Undecided pairs are
        settled in bulk: a Binomial count of conducting edges, then a uniform
        subset of that size.
        """
        candidates = candidates.copy()
        candidates[u] = False
        decided = self._decided(u)
        fresh = np.flatnonzero(candidates & ~decided)

        if fresh.size:
            self.fresh_pairs += int(fresh.size)
            k = int(self.rng.binomial(fresh.size, self.p))
            if k:
                chosen = self.rng.choice(fresh, size=k, replace=False)
                values = np.asarray(self.F.sample(self.rng, k), dtype=float)
                for w, r in zip(chosen.tolist(), values.tolist()):
                    self._conducting[u][w] = r
                    self._conducting[w][u] = r
            row = np.zeros(self.size, dtype=bool)
            row[fresh] = True
            self._rows.add(u, row)

        partners = self._conducting.get(u, {})
        hits = sorted(w for w in partners if candidates[w])
        return (
            np.asarray(hits, dtype=np.int64),
            np.asarray([partners[w] for w in hits], dtype=float),
        )

    def sample_cross(self, count: int) -> Tuple[np.ndarray, np.ndarray]:
        """Independent edges outside K_{n+2} drawn from the same law: (positions, resistances)"""
        k = int(self.rng.binomial(count, self.p)) if count else 0
        if k == 0:
            return np.empty(0, dtype=np.int64), np.empty(0)
        positions = np.sort(self.rng.choice(count, size=k, replace=False))
        return positions, np.asarray(self.F.sample(self.rng, k), dtype=float)

    # ==================== MATERIALIZATION ====================

    def materialize(self) -> ResistorNetwork:
        """Decide every pair and return the conducting network with A0 = {0}, A1 = {inf}.

        Non-conducting edges have infinite resistance and are left out.
        """
        if not self._complete:
            if not self.fresh_pairs:
                self._sample_all()
            else:
                everyone = np.ones(self.size, dtype=bool)
                for u in range(self.size):
                    self.conducting_neighbors(u, everyone)
            self._complete = True

        edges = [
            (self.label(u), self.label(w), r)
            for u in sorted(self._conducting)
            for w, r in sorted(self._conducting[u].items())
            if u < w
        ]
        return ResistorNetwork.build(
            edges,
            a0=[0],
            a1=[INFINITY_VERTEX],
            vertices=[self.label(i) for i in range(self.size)],
        )

    def _sample_all(self):
        """One pass over all pairs via a Binomial count and distinct pair codes"""
        m = self.size
        total_pairs = m * (m - 1) // 2
        self.fresh_pairs = total_pairs
        k = int(self.rng.binomial(total_pairs, self.p))
        if k == 0:
            return
        codes = np.sort(self.rng.choice(total_pairs, size=k, replace=False))
        values = np.asarray(self.F.sample(self.rng, k), dtype=float)

        # row i holds pairs (i, j > i); starts[i] is its first code
        row_lengths = np.arange(m - 1, 0, -1, dtype=np.int64)
        starts = np.concatenate([[0], np.cumsum(row_lengths)[:-1]])
        rows = np.searchsorted(starts, codes, side="right") - 1
        cols = rows + 1 + (codes - starts[rows])
        for i, j, r in zip(rows.tolist(), cols.tolist(), values.tolist()):
            self._conducting[i][j] = r
            self._conducting[j][i] = r


@dataclass(frozen=True)
class ExplorationLayers:
    """Breadth-first layers over conducting edges from one root"""

    root: Hashable
    layers: Tuple[Tuple[Hashable, ...], ...]
    tree_edges: Tuple[Tuple[Hashable, Hashable, float], ...]  # (parent, child, r)
    complete: bool = True  # exploration ran all requested steps

    @property
    def k(self) -> int:
        return len(self.layers) - 1

    @property
    def profile(self) -> Tuple[int, ...]:
        """(|tau_1|, ..., |tau_k|)"""
        return tuple(len(layer) for layer in self.layers[1:])

    @property
    def vertices(self) -> frozenset:
        return frozenset(v for layer in self.layers for v in layer)

    @property
    def order(self) -> List[Hashable]:
        return [v for layer in self.layers for v in layer]

    def as_tree(self) -> FamilyTree:
        """The discovery tree as a FamilyTree in breadth-first vertex order"""
        order = self.order
        position = {v: i for i, v in enumerate(order)}
        parent_of = {child: (parent, r) for parent, child, r in self.tree_edges}

        parents = np.full(len(order), -1, dtype=np.int64)
        resistance = np.zeros(len(order))
        for i, v in enumerate(order[1:], start=1):
            parent, r = parent_of[v]
            parents[i] = position[parent]
            resistance[i] = r

        return tree_from_parents(parents, resistance, complete_depth=self.k)

    def to_dict(self) -> dict:
        return {
            "root": str(self.root),
            "layers": [[str(v) for v in layer] for layer in self.layers],
            "tree_edges": [[str(p), str(c), r] for p, c, r in self.tree_edges],
        }
