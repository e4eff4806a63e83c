"""
Resistor network models: the source multigraph, its zero-class quotient,
potential solutions and random-walk transition matrices.
"""

from dataclasses import dataclass, field
from typing import Dict, Hashable, Iterable, List, Mapping, Optional, Tuple

import numpy as np
from scipy import sparse

from app.core import extended
from app.core.exceptions import InvalidNetwork

Vertex = Hashable


@dataclass(frozen=True)
class Edge:
    u: Vertex
    v: Vertex
    r: float


@dataclass(frozen=True, eq=False)
class ResistorNetwork:
    """Multigraph with resistances in [0, inf] and two disjoint terminal sets"""

    vertices: Tuple[Vertex, ...]
    edges: Tuple[Edge, ...]
    a0: frozenset
    a1: frozenset

    def __post_init__(self):
        object.__setattr__(self, "vertices", tuple(dict.fromkeys(self.vertices)))
        object.__setattr__(self, "a0", frozenset(self.a0))
        object.__setattr__(self, "a1", frozenset(self.a1))
        object.__setattr__(self, "edges", tuple(self.edges))

        known = set(self.vertices)
        if not self.a0 or not self.a1:
            raise InvalidNetwork("both terminal sets must be nonempty")
        if self.a0 & self.a1:
            raise InvalidNetwork(f"terminal sets intersect: {sorted(map(str, self.a0 & self.a1))}")
        if not (self.a0 | self.a1) <= known:
            raise InvalidNetwork("terminals must be declared vertices")
        for edge in self.edges:
            if edge.u not in known or edge.v not in known:
                raise InvalidNetwork(f"edge ({edge.u}, {edge.v}) has an undeclared endpoint")
            if edge.u == edge.v:
                raise InvalidNetwork(f"self-loop at {edge.u}")
            extended.check(edge.r)

    @classmethod
    def build(
        cls,
        edges: Iterable[Tuple[Vertex, Vertex, float]],
        a0: Iterable[Vertex],
        a1: Iterable[Vertex],
        vertices: Optional[Iterable[Vertex]] = None,
    ) -> "ResistorNetwork":
        """Build from (u, v, r) triples; vertices default to terminals plus edge endpoints"""
        edge_list = [Edge(u, v, float(r)) for u, v, r in edges]
        a0, a1 = list(a0), list(a1)
        if vertices is None:
            ordered: List[Vertex] = a0 + a1
            for edge in edge_list:
                ordered.extend((edge.u, edge.v))
            vertices = ordered
        return cls(tuple(vertices), tuple(edge_list), frozenset(a0), frozenset(a1))

    @property
    def index(self) -> Dict[Vertex, int]:
        return {v: i for i, v in enumerate(self.vertices)}

    def with_edges(self, edges: Iterable[Edge]) -> "ResistorNetwork":
        return ResistorNetwork(self.vertices, tuple(edges), self.a0, self.a1)

    def to_dict(self) -> dict:
        return {
            "vertices": len(self.vertices),
            "edges": len(self.edges),
            "a0": sorted(map(str, self.a0)),
            "a1": sorted(map(str, self.a1)),
        }


@dataclass(frozen=True, eq=False)
class QuotientNetwork:
    """Network contracted along zero-resistance edges and terminal sets.

    Edge arrays are parallel: ``tails[e] -- heads[e]`` with resistance
    ``resistances[e] > 0`` (possibly inf). No edge is internal to a class.
    """

    class_of: Mapping[Vertex, int]
    n_classes: int
    tails: np.ndarray
    heads: np.ndarray
    resistances: np.ndarray
    a0_class: int
    a1_class: int

    @property
    def edges(self) -> List[Tuple[int, int, float]]:
        return [
            (int(t), int(h), float(r))
            for t, h, r in zip(self.tails, self.heads, self.resistances)
        ]

    @property
    def terminals_merged(self) -> bool:
        return self.a0_class == self.a1_class

    def conductance_matrix(self) -> sparse.csr_matrix:
        """Symmetric matrix of summed finite conductances between classes"""
        g = extended.conductances(self.resistances)
        keep = g > 0
        rows = np.concatenate([self.tails[keep], self.heads[keep]])
        cols = np.concatenate([self.heads[keep], self.tails[keep]])
        data = np.concatenate([g[keep], g[keep]])
        return sparse.csr_matrix(
            (data, (rows, cols)), shape=(self.n_classes, self.n_classes)
        )


@dataclass(frozen=True, eq=False)
class PotentialSolution:
    """Class potentials with V(A0) = 0 and V(A1) = 1; floating classes are NaN"""

    values: np.ndarray
    residual: float
    floating: frozenset = field(default_factory=frozenset)

    @property
    def potential(self) -> Dict[int, float]:
        return {c: float(v) for c, v in enumerate(self.values) if c not in self.floating}

    def __getitem__(self, class_id: int) -> float:
        return float(self.values[class_id])


@dataclass(frozen=True, eq=False)
class TransitionMatrix:
    """Row-stochastic walk on quotient classes, weights proportional to conductance"""

    states: Tuple[int, ...]
    matrix: sparse.csr_matrix
    absorbing: frozenset = field(default_factory=frozenset)

    def row(self, state: int) -> List[Tuple[int, float]]:
        start, stop = self.matrix.indptr[state], self.matrix.indptr[state + 1]
        cols = self.matrix.indices[start:stop]
        probs = self.matrix.data[start:stop]
        order = np.argsort(cols)
        return [(int(cols[i]), float(probs[i])) for i in order]

    @property
    def row_sums(self) -> np.ndarray:
        return np.asarray(self.matrix.sum(axis=1)).ravel()
