"""
Complete Model Service - the random network on K_{n+2}
Sampling, exact R_n, conducting-layer exploration, and the two-tree
networks N(n, k) and M(n)
"""

import logging
import math
from typing import Hashable, List, Optional, Tuple

import numpy as np

from app.core import extended
from app.core.exceptions import ParamOutOfRange
from app.models.distributions import EdgeDistribution
from app.models.edge_law import EdgeLaw, ExplorationLayers
from app.models.network import ResistorNetwork
from app.models.tree import FamilyTree
from app.services.resistor_service import ResistorService, get_resistor_service
from app.services.tree_service import TreeService, get_tree_service

logger = logging.getLogger(__name__)

TreePair = Tuple[FamilyTree, FamilyTree]


class CompleteModelService:
    """Random complete networks and their local tree structure"""

    def __init__(self, resistor: Optional[ResistorService] = None, trees: Optional[TreeService] = None):
        self.resistor = resistor or get_resistor_service()
        self.trees = trees or get_tree_service()

    # ==================== SAMPLING ====================

    def sample_complete_network(
        self, n: int, gamma_n: float, F: EdgeDistribution, rng: np.random.Generator
    ) -> ResistorNetwork:
        """Conducting edges of K_{n+2} on {0, ..., n, inf}; A0 = {0}, A1 = {inf}"""
        return EdgeLaw(n, gamma_n, F, rng).materialize()

    def compute_Rn(self, net: ResistorNetwork) -> float:
        return self.resistor.effective_resistance(net)

    # ==================== EXPLORATION ====================

    def explore_layers(self, law: EdgeLaw, root: Hashable, k: int) -> ExplorationLayers:
        """Breadth-first layers tau_0..tau_k over conducting edges, edges queried lazily"""
        if k < 0:
            raise ParamOutOfRange(f"k must be >= 0, got {k}")
        start = law.index(root)
        explored = np.zeros(law.size, dtype=bool)
        explored[start] = True

        layers: List[List[int]] = [[start]]
        edges: List[Tuple[Hashable, Hashable, float]] = []
        for _ in range(k):
            found: List[int] = []
            for u in sorted(layers[-1]):
                children, resistances = law.conducting_neighbors(u, ~explored)
                explored[children] = True
                found.extend(children.tolist())
                edges.extend(
                    (law.label(u), law.label(w), r)
                    for w, r in zip(children.tolist(), resistances.tolist())
                )
            layers.append(sorted(found))

        return ExplorationLayers(
            root=root,
            layers=tuple(tuple(law.label(v) for v in layer) for layer in layers),
            tree_edges=tuple(edges),
        )

    def m_n(self, n: int, gamma: float) -> int:
        """floor(3/4 log n / log gamma)"""
        if n < 2:
            raise ParamOutOfRange(f"m_n needs n >= 2, got {n}")
        if not gamma > 1:
            raise ParamOutOfRange(f"m_n needs gamma > 1, got {gamma}")
        return int(math.floor(0.75 * math.log(n) / math.log(gamma) + 1e-12))

    # ==================== TWO-TREE NETWORKS ====================

    @staticmethod
    def _tree_part(tree: FamilyTree, depth: int, tag: str):
        count = int(tree.offsets[min(depth, tree.depth) + 1])
        vertices = [f"{tag}{i}" for i in range(count)]
        edges = [
            (f"{tag}{int(tree.parent[i])}", f"{tag}{i}", float(tree.resistance[i]))
            for i in range(1, count)
        ]
        return vertices, edges

    def build_N(self, law: EdgeLaw, k: int, trees: TreePair) -> ResistorNetwork:
        """T'_[k] and T''_[k] joined by an independent model edge for every pair of generation-k nodes.

        An empty generation k leaves no cross edges, so the roots are disconnected.
        """
        first, second = trees
        for tree in trees:
            self.trees.generation_empty(tree, k)  # raises on trees censored before k
        last_first, last_second = first.nodes_at(k), second.nodes_at(k)

        v1, e1 = self._tree_part(first, k, "a")
        v2, e2 = self._tree_part(second, k, "b")
        positions, resistances = law.sample_cross(last_first.size * last_second.size)
        cross = [
            (f"a{int(last_first[p // last_second.size])}", f"b{int(last_second[p % last_second.size])}", r)
            for p, r in zip(positions.tolist(), resistances.tolist())
        ]
        return ResistorNetwork.build(e1 + e2 + cross, a0=["a0"], a1=["b0"], vertices=v1 + v2)

    def rho(self, law: EdgeLaw, k: int, trees: TreePair) -> float:
        """Root-to-root resistance of N(n, k); inf when either generation k is empty"""
        return self.resistor.effective_resistance(self.build_N(law, k, trees))

    def connected_N(self, law: EdgeLaw, k: int, trees: TreePair) -> bool:
        """Whether N(n, k) has a conducting root-to-root path"""
        return self.resistor.connected(self.build_N(law, k, trees))

    def build_M(self, n: int, K: float, trees: TreePair, s: int, gamma: float) -> Optional[ResistorNetwork]:
        """T'_[m_n] and T''_[m_n] with fixed cross edges between surviving generation-s nodes.

        Returns None when either side has no generation-s node with
        descendants in generation m_n.
        """
        m = self.m_n(n, gamma)
        if not 0 <= s <= m:
            raise ParamOutOfRange(f"s must lie in [0, m_n={m}], got {s}")
        if not 0 < K < math.inf:
            raise ParamOutOfRange(f"K must be positive and finite, got {K}")

        first, second = trees
        anchors = []
        for tree in trees:
            alive = self.trees.has_descendants_at(tree, m)
            level = tree.nodes_at(s)
            anchors.append(level[alive[level]] if alive.size else level[:0])
        if anchors[0].size == 0 or anchors[1].size == 0:
            return None

        cross_r = (first.generation_size(s) + second.generation_size(s)) * K * math.log(n) / math.log(gamma)
        v1, e1 = self._tree_part(first, m, "a")
        v2, e2 = self._tree_part(second, m, "b")
        cross = [(f"a{int(x)}", f"b{int(y)}", cross_r) for x in anchors[0] for y in anchors[1]]
        return ResistorNetwork.build(e1 + e2 + cross, a0=["a0"], a1=["b0"], vertices=v1 + v2)

    def s_n(self, n: int) -> int:
        """floor(sqrt(log n))"""
        if n < 2:
            raise ParamOutOfRange(f"s_n needs n >= 2, got {n}")
        return int(math.floor(math.sqrt(math.log(n))))

    def script_R(self, n: int, K: float, trees: TreePair, s: int, gamma: float) -> float:
        net = self.build_M(n, K, trees, s, gamma)
        if net is None:
            return extended.INF
        return self.resistor.effective_resistance(net)


# Global complete model service instance
complete_model_service = CompleteModelService()


def get_complete_model_service() -> CompleteModelService:
    """Get complete model service instance"""
    return complete_model_service
