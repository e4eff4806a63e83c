"""
Resistor Service - exact effective resistance on [0, inf] networks
Zero-class contraction, reduced Laplacian solve, network text format
"""

import logging
from pathlib import Path
from typing import Dict, Hashable, List, Optional, Tuple

import numpy as np
from scipy import sparse
from scipy.sparse import csgraph
from scipy.sparse import linalg as spla

from app.core import extended
from app.core.config import Settings, get_settings
from app.core.exceptions import InvalidNetwork, NetworkFormatError, SameTerminalClass, SingularSystem
from app.models.network import Edge, PotentialSolution, QuotientNetwork, ResistorNetwork

logger = logging.getLogger(__name__)


class ResistorService:
    """Kirchhoff solver for two-terminal networks"""

    def __init__(self, settings: Optional[Settings] = None):
        self.settings = settings or get_settings()

    # ==================== QUOTIENT ====================

    def quotient(self, net: ResistorNetwork) -> QuotientNetwork:
        """Contract terminal sets and zero-resistance components into classes"""
        index = net.index
        size = len(net.vertices)

        rows: List[int] = []
        cols: List[int] = []
        for terminals in (net.a0, net.a1):
            anchor, *rest = [index[v] for v in terminals]
            for other in rest:
                rows.append(anchor)
                cols.append(other)

        tails = np.fromiter((index[e.u] for e in net.edges), dtype=np.int64, count=len(net.edges))
        heads = np.fromiter((index[e.v] for e in net.edges), dtype=np.int64, count=len(net.edges))
        r = np.fromiter((e.r for e in net.edges), dtype=float, count=len(net.edges))

        zero = r == 0
        rows.extend(tails[zero].tolist())
        cols.extend(heads[zero].tolist())

        links = sparse.coo_matrix(
            (np.ones(len(rows)), (rows, cols)), shape=(size, size)
        )
        n_classes, labels = csgraph.connected_components(links, directed=False)

        keep = ~zero & (labels[tails] != labels[heads])
        qnet = QuotientNetwork(
            class_of={v: int(labels[i]) for v, i in index.items()},
            n_classes=int(n_classes),
            tails=labels[tails[keep]],
            heads=labels[heads[keep]],
            resistances=r[keep],
            a0_class=int(labels[index[next(iter(net.a0))]]),
            a1_class=int(labels[index[next(iter(net.a1))]]),
        )
        logger.debug(f"Quotient: {size} vertices -> {n_classes} classes, {int(keep.sum())} edges")
        return qnet

    # ==================== POTENTIALS ====================

    def solve_potentials(self, qnet: QuotientNetwork) -> PotentialSolution:
        """Harmonic potentials with V = 0 on A0 and V = 1 on A1"""
        if qnet.terminals_merged:
            raise SameTerminalClass("terminals share one zero-resistance class")

        conductance = qnet.conductance_matrix()
        _, component = csgraph.connected_components(conductance, directed=False)
        comp0 = component[qnet.a0_class]
        comp1 = component[qnet.a1_class]

        values = np.full(qnet.n_classes, np.nan)
        touched = (component == comp0) | (component == comp1)
        floating = frozenset(np.flatnonzero(~touched).tolist())

        if comp0 != comp1:
            # no finite path between terminals: no current anywhere
            values[component == comp0] = 0.0
            values[component == comp1] = 1.0
            return PotentialSolution(values=values, residual=0.0, floating=floating)

        values[component == comp0] = 0.0
        values[qnet.a1_class] = 1.0
        interior = np.flatnonzero(component == comp0)
        interior = interior[(interior != qnet.a0_class) & (interior != qnet.a1_class)]
        if interior.size == 0:
            return PotentialSolution(values=values, residual=0.0, floating=floating)

        conductance = conductance.tocsr()
        degree = np.asarray(conductance.sum(axis=1)).ravel()
        block = conductance[interior][:, interior]
        laplacian = (sparse.diags(degree[interior]) - block).tocsc()
        rhs = np.asarray(conductance[interior][:, [qnet.a1_class]].todense()).ravel()

        solution = self._solve(laplacian, rhs)
        values[interior] = solution

        # relative violation of V(v) = sum_w g(v,w) V(w) / sum_w g(v,w)
        known = np.nan_to_num(values, nan=0.0)
        averaged = (conductance[interior] @ known) / degree[interior]
        residual = float(np.max(np.abs(solution - averaged)))
        if not residual <= self.settings.RESIDUAL_TOL:
            logger.error(f"Kirchhoff residual {residual:.3e} above tolerance")
            raise SingularSystem(f"residual {residual:.3e} exceeds {self.settings.RESIDUAL_TOL:.1e}")
        return PotentialSolution(values=values, residual=residual, floating=floating)

    def _solve(self, matrix: sparse.csc_matrix, rhs: np.ndarray) -> np.ndarray:
        size = matrix.shape[0]
        try:
            if size <= self.settings.DIRECT_SOLVE_MAX_CLASSES:
                return spla.splu(matrix).solve(rhs)

            logger.debug(f"Iterative solve on {size} classes")
            solution, info = spla.cg(
                matrix,
                rhs,
                rtol=self.settings.ITERATIVE_RTOL,
                atol=0.0,
                maxiter=self.settings.ITERATIVE_MAX_ITER,
            )
            if info != 0:
                raise SingularSystem(f"conjugate gradient did not converge (info={info})")
            return solution
        except RuntimeError as e:
            logger.error(f"Direct factorization failed: {str(e)}")
            raise SingularSystem(str(e)) from e

    # ==================== RESISTANCE ====================

    def effective_resistance(self, net: ResistorNetwork) -> float:
        """Two-terminal resistance in [0, inf]"""
        qnet = self.quotient(net)
        return self.quotient_resistance(qnet)

    def quotient_resistance(self, qnet: QuotientNetwork) -> float:
        if qnet.terminals_merged:
            return 0.0
        solution = self.solve_potentials(qnet)
        g = extended.conductances(qnet.resistances)

        current = 0.0
        for side, other in ((qnet.tails, qnet.heads), (qnet.heads, qnet.tails)):
            leaving = (side == qnet.a0_class) & (g > 0)
            current += float(np.sum(g[leaving] * solution.values[other[leaving]]))
        return extended.from_conductance(current)

    def connected(self, net: ResistorNetwork) -> bool:
        """Whether a finite-resistance path joins the terminal sets"""
        qnet = self.quotient(net)
        if qnet.terminals_merged:
            return True
        _, component = csgraph.connected_components(qnet.conductance_matrix(), directed=False)
        return bool(component[qnet.a0_class] == component[qnet.a1_class])

    def merge_parallel(self, net: ResistorNetwork) -> ResistorNetwork:
        """Combine multi-edges between the same vertex pair by the parallel rule"""
        merged: Dict[Tuple[Hashable, Hashable], float] = {}
        order: List[Tuple[Hashable, Hashable]] = []
        for edge in net.edges:
            key = (edge.u, edge.v) if (edge.v, edge.u) not in merged else (edge.v, edge.u)
            if key in merged:
                merged[key] = extended.parallel(merged[key], edge.r)
            else:
                merged[key] = edge.r
                order.append(key)
        return net.with_edges(Edge(u, v, merged[(u, v)]) for u, v in order)

    # ==================== FILE FORMAT ====================

    def parse_network(self, text: str) -> ResistorNetwork:
        """Parse ``terminals A0: ... A1: ...`` followed by ``edge u v r`` records"""
        a0: Optional[List[Hashable]] = None
        a1: List[Hashable] = []
        edges: List[Tuple[Hashable, Hashable, float]] = []

        for line_number, raw in enumerate(text.splitlines(), start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            tokens = line.split()
            keyword = tokens[0].lower()
            if keyword == "terminals":
                if a0 is not None:
                    raise NetworkFormatError("duplicate terminals header", line_number)
                a0, a1 = self._parse_terminals(tokens[1:], line_number)
            elif keyword == "edge":
                if a0 is None:
                    raise NetworkFormatError("edge before terminals header", line_number)
                if len(tokens) != 4:
                    raise NetworkFormatError("expected 'edge <u> <v> <r>'", line_number)
                try:
                    r = extended.parse_resistance(tokens[3])
                except ValueError as e:
                    raise NetworkFormatError(f"bad resistance '{tokens[3]}'", line_number) from e
                edges.append((_vertex_id(tokens[1]), _vertex_id(tokens[2]), r))
            else:
                raise NetworkFormatError(f"unknown record '{tokens[0]}'", line_number)

        if a0 is None:
            raise NetworkFormatError("missing terminals header")
        try:
            return ResistorNetwork.build(edges, a0, a1)
        except InvalidNetwork as e:
            raise NetworkFormatError(str(e)) from e

    @staticmethod
    def _parse_terminals(tokens: List[str], line_number: int):
        try:
            split = [t.upper() for t in tokens].index("A1:")
        except ValueError as e:
            raise NetworkFormatError("terminals header needs 'A1:'", line_number) from e
        if not tokens or tokens[0].upper() != "A0:":
            raise NetworkFormatError("terminals header must start with 'A0:'", line_number)
        a0 = [_vertex_id(t) for t in tokens[1:split]]
        a1 = [_vertex_id(t) for t in tokens[split + 1:]]
        if not a0 or not a1:
            raise NetworkFormatError("both terminal sets must be nonempty", line_number)
        return a0, a1

    def read_network(self, path: str | Path) -> ResistorNetwork:
        return self.parse_network(Path(path).read_text(encoding="utf-8"))

    def format_network(self, net: ResistorNetwork) -> str:
        a0 = " ".join(str(v) for v in _ordered(net.a0, net))
        a1 = " ".join(str(v) for v in _ordered(net.a1, net))
        lines = [f"terminals A0: {a0} A1: {a1}"]
        lines.extend(
            f"edge {e.u} {e.v} {extended.format_resistance(e.r)}" for e in net.edges
        )
        return "\n".join(lines) + "\n"

    def write_network(self, net: ResistorNetwork, path: str | Path) -> Path:
        path = Path(path)
        path.write_text(self.format_network(net), encoding="utf-8")
        logger.info(f"📝 Network written to {path} ({len(net.edges)} edges)")
        return path


def _vertex_id(token: str) -> Hashable:
    try:
        return int(token)
    except ValueError:
        return token


def _ordered(terminals: frozenset, net: ResistorNetwork) -> List[Hashable]:
    position = net.index
    return sorted(terminals, key=position.__getitem__)


# Global resistor service instance
resistor_service = ResistorService()


def get_resistor_service() -> ResistorService:
    """Get resistor service instance"""
    return resistor_service
