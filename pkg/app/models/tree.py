"""
Family tree model.

Nodes are stored breadth-first, so each generation is a contiguous block
``offsets[g]:offsets[g + 1]``. A node is identified by its index; its label
<i_1, ..., i_n> is recovered from ``parent`` and ``rank``.
"""

from dataclasses import dataclass
from typing import List, Tuple

import numpy as np

from app.core.exceptions import ParamOutOfRange

# complete_depth of a tree given in full, with nothing left to grow
UNBOUNDED_DEPTH = 2**31 - 1


@dataclass(frozen=True, eq=False)
class FamilyTree:
    parent: np.ndarray  # -1 at the root
    rank: np.ndarray  # 1-based child rank, 0 at the root
    resistance: np.ndarray  # edge to parent, 0 at the root
    offsets: np.ndarray  # generation g occupies offsets[g]:offsets[g + 1]
    complete_depth: int  # generations 0..complete_depth are fully present
    truncated: bool = False  # node cap stopped growth

    def __post_init__(self):
        if self.parent.size == 0 or self.parent[0] != -1:
            raise ParamOutOfRange("a family tree has exactly one root at index 0")
        if self.offsets[0] != 0 or self.offsets[1] != 1:
            raise ParamOutOfRange("generation 0 must hold exactly the root")

    @property
    def size(self) -> int:
        return int(self.parent.size)

    @property
    def depth(self) -> int:
        """Deepest generation holding at least one node"""
        return int(self.offsets.size - 2)

    @property
    def generation(self) -> np.ndarray:
        sizes = np.diff(self.offsets)
        return np.repeat(np.arange(sizes.size), sizes)

    @property
    def generation_sizes(self) -> np.ndarray:
        """Z_0, Z_1, ... over realized generations"""
        return np.diff(self.offsets)

    def generation_size(self, g: int) -> int:
        if g < 0:
            raise ParamOutOfRange(f"generation must be >= 0, got {g}")
        if g > self.depth:
            return 0
        return int(self.offsets[g + 1] - self.offsets[g])

    def nodes_at(self, g: int) -> np.ndarray:
        if g > self.depth:
            return np.empty(0, dtype=np.int64)
        return np.arange(self.offsets[g], self.offsets[g + 1])

    @property
    def extinct_at(self) -> int | None:
        """First known empty generation, if any"""
        if self.depth < self.complete_depth:
            return self.depth + 1
        return None

    @property
    def child_count(self) -> np.ndarray:
        return np.bincount(self.parent[1:], minlength=self.size)

    def label(self, node: int) -> Tuple[int, ...]:
        """The integer sequence <0> or <i_1, ..., i_n>"""
        seq: List[int] = []
        while node > 0:
            seq.append(int(self.rank[node]))
            node = int(self.parent[node])
        return tuple(reversed(seq)) if seq else (0,)

    def path_resistance(self, node: int) -> float:
        """Resistance of the unique root-to-node path"""
        total = 0.0
        while node > 0:
            total += float(self.resistance[node])
            node = int(self.parent[node])
        return total

    def to_dict(self) -> dict:
        return {
            "nodes": self.size,
            "depth": self.depth,
            "complete_depth": self.complete_depth,
            "truncated": self.truncated,
            "generation_sizes": self.generation_sizes.tolist(),
        }


def tree_from_parents(parents, resistances, complete_depth: int | None = None) -> FamilyTree:
    """Build a FamilyTree from a parent list (root first, -1) in any breadth-first order.

    Children of one parent are ranked in the order they appear. Without
    ``complete_depth`` the tree is taken as given in full.
    """
    parents = np.asarray(parents, dtype=np.int64)
    resistances = np.asarray(resistances, dtype=float)
    if parents.size != resistances.size:
        raise ParamOutOfRange("parents and resistances must have equal length")

    generation = np.zeros(parents.size, dtype=np.int64)
    rank = np.zeros(parents.size, dtype=np.int64)
    seen = np.zeros(parents.size, dtype=np.int64)
    for node in range(1, parents.size):
        p = parents[node]
        if not 0 <= p < node:
            raise ParamOutOfRange(f"node {node} must come after its parent, got parent {p}")
        generation[node] = generation[p] + 1
        if node > 1 and generation[node] < generation[node - 1]:
            raise ParamOutOfRange("nodes must be listed breadth-first")
        seen[p] += 1
        rank[node] = seen[p]

    sizes = np.bincount(generation)
    offsets = np.concatenate([[0], np.cumsum(sizes)])
    return FamilyTree(
        parent=parents,
        rank=rank,
        resistance=np.where(parents < 0, 0.0, resistances),
        offsets=offsets,
        complete_depth=UNBOUNDED_DEPTH if complete_depth is None else complete_depth,
    )
