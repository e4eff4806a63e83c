"""
Walk Service - random walks on quotient networks
Transition matrices, exact hitting probabilities, Monte Carlo walks
and the escape bound for walks on family trees
"""

import logging
import math
from dataclasses import dataclass
from typing import Iterable, Optional

import numpy as np
from scipy import sparse
from scipy.sparse import csgraph
from scipy.sparse import linalg as spla

from app.core import extended
from app.core.config import Settings, get_settings
from app.core.exceptions import IsolatedState, NoDescendants, ParamOutOfRange, SingularSystem
from app.models.network import QuotientNetwork, TransitionMatrix
from app.models.tree import FamilyTree
from app.services.resistor_service import ResistorService, get_resistor_service
from app.services.tree_service import TreeService, get_tree_service

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class WalkEstimate:
    estimate: float
    stderr: float
    trials: int
    resolved: int
    cap_hits: int

    @property
    def valid(self) -> bool:
        return self.resolved > 0

    @property
    def cap_hit_fraction(self) -> float:
        return self.cap_hits / self.trials if self.trials else 0.0


@dataclass(frozen=True)
class EscapeBound:
    lhs: float
    rhs: float
    path_resistance: float
    descendant_resistance: float

    @property
    def holds(self) -> bool:
        return self.lhs >= self.rhs - 1e-12


class WalkService:
    """Markov chain view of potentials"""

    def __init__(
        self,
        resistor: Optional[ResistorService] = None,
        trees: Optional[TreeService] = None,
        settings: Optional[Settings] = None,
    ):
        self.settings = settings or get_settings()
        self.resistor = resistor or get_resistor_service()
        self.trees = trees or get_tree_service()

    # ==================== TRANSITIONS ====================

    def transition_matrix(self, qnet: QuotientNetwork, strict: bool = False) -> TransitionMatrix:
        """P(y, z) proportional to the summed conductance between classes y and z.

        Classes without a finite incident edge become absorbing; with
        ``strict`` they raise IsolatedState instead.
        """
        conductance = qnet.conductance_matrix()
        degree = np.asarray(conductance.sum(axis=1)).ravel()
        isolated = np.flatnonzero(degree == 0)
        if strict and isolated.size:
            raise IsolatedState(int(isolated[0]))

        scale = np.where(degree > 0, 1.0 / np.where(degree > 0, degree, 1.0), 0.0)
        matrix = sparse.diags(scale) @ conductance
        if isolated.size:
            logger.debug(f"{isolated.size} isolated classes marked absorbing")
            matrix = matrix + sparse.coo_matrix(
                (np.ones(isolated.size), (isolated, isolated)), shape=matrix.shape
            )
        matrix = sparse.csr_matrix(matrix)

        sums = np.asarray(matrix.sum(axis=1)).ravel()
        if np.any(np.abs(sums - 1.0) > self.settings.ROW_SUM_TOL):
            raise SingularSystem("transition rows do not sum to 1")
        return TransitionMatrix(
            states=tuple(range(qnet.n_classes)),
            matrix=matrix,
            absorbing=frozenset(isolated.tolist()),
        )

    def hitting_probability(
        self,
        qnet: QuotientNetwork,
        start: int,
        target: Iterable[int],
        avoid: Iterable[int],
    ) -> float:
        """P(walk from start reaches target before avoid), by an absorbing-chain solve"""
        target, avoid = set(target), set(avoid)
        if target & avoid:
            raise ParamOutOfRange("target and avoid sets must be disjoint")
        if start in target:
            return 1.0
        if start in avoid:
            return 0.0

        chain = self.transition_matrix(qnet).matrix
        stopped = np.zeros(qnet.n_classes, dtype=bool)
        stopped[list(target | avoid)] = True

        # classes that cannot reach a stopping class keep probability 0
        _, component = csgraph.connected_components(qnet.conductance_matrix(), directed=False)
        live = np.isin(component, np.unique(component[stopped])) & ~stopped
        if not live[start]:
            return 0.0

        transient = np.flatnonzero(live)
        position = np.full(qnet.n_classes, -1)
        position[transient] = np.arange(transient.size)

        chain = chain.tocsr()
        q = chain[transient][:, transient]
        to_target = np.asarray(chain[transient][:, sorted(target)].sum(axis=1)).ravel()
        system = (sparse.identity(transient.size) - q).tocsc()
        try:
            h = spla.splu(system).solve(to_target)
        except RuntimeError as e:
            logger.error(f"Absorbing chain solve failed: {str(e)}")
            raise SingularSystem(str(e)) from e

        residual = float(np.max(np.abs(system @ h - to_target))) if h.size else 0.0
        if residual > self.settings.RESIDUAL_TOL:
            raise SingularSystem(f"absorbing chain residual {residual:.3e}")
        return float(h[position[start]])

    # ==================== SIMULATION ====================

    def monte_carlo_walk(
        self,
        qnet: QuotientNetwork,
        start: int,
        target: Iterable[int],
        avoid: Iterable[int],
        trials: int,
        rng: np.random.Generator,
        step_cap: Optional[int] = None,
    ) -> WalkEstimate:
        """Frequency of reaching target before avoid over independent walks run in lockstep"""
        step_cap = self.settings.WALK_STEP_CAP if step_cap is None else step_cap
        target, avoid = set(target), set(avoid)
        if trials < 0 or step_cap < 1:
            raise ParamOutOfRange("trials must be >= 0 and step_cap >= 1")
        if trials == 0:
            return WalkEstimate(math.nan, math.nan, 0, 0, 0)
        if start in target or start in avoid:
            value = 1.0 if start in target else 0.0
            return WalkEstimate(value, 0.0, trials, trials, 0)

        chain = self.transition_matrix(qnet).matrix.tocsr()
        width = int(np.max(np.diff(chain.indptr)))
        neighbours = np.zeros((qnet.n_classes, width), dtype=np.int64)
        cumulative = np.ones((qnet.n_classes, width))
        for state in range(qnet.n_classes):
            lo, hi = chain.indptr[state], chain.indptr[state + 1]
            k = hi - lo
            neighbours[state, :k] = chain.indices[lo:hi]
            neighbours[state, k:] = chain.indices[hi - 1] if k else state
            cumulative[state, :k] = np.cumsum(chain.data[lo:hi])
        cumulative[:, -1] = 1.0

        is_target = np.zeros(qnet.n_classes, dtype=bool)
        is_target[list(target)] = True
        is_stop = is_target.copy()
        is_stop[list(avoid)] = True

        position = np.full(trials, start, dtype=np.int64)
        active = np.ones(trials, dtype=bool)
        for _ in range(step_cap):
            idx = np.flatnonzero(active)
            if idx.size == 0:
                break
            u = rng.random(idx.size)
            here = position[idx]
            choice = np.sum(u[:, None] > cumulative[here], axis=1)
            position[idx] = neighbours[here, np.minimum(choice, width - 1)]
            active[idx] = ~is_stop[position[idx]]

        cap_hits = int(np.count_nonzero(active))
        resolved = trials - cap_hits
        if cap_hits:
            logger.warning(f"⚠️ {cap_hits}/{trials} walks hit the step cap {step_cap}")
        if resolved == 0:
            return WalkEstimate(math.nan, math.nan, trials, 0, cap_hits)

        hits = int(np.count_nonzero(is_target[position[~active]]))
        p = hits / resolved
        return WalkEstimate(p, math.sqrt(p * (1.0 - p) / resolved), trials, resolved, cap_hits)

    # ==================== ESCAPE BOUND ====================

    def lemma3_bound_check(self, tree: FamilyTree, x: int, horizon: int) -> EscapeBound:
        """Exact P(walk from x on T_[m] reaches generation m before the root) against rho/(rho + r_m).

        rho is the root-to-x path resistance and r_m the resistance from x to
        its generation-m descendants inside the subtree of x.
        """
        generation = int(tree.generation[x])
        if not generation < horizon:
            raise ParamOutOfRange(f"horizon {horizon} must exceed the generation of node {x}")

        rho = tree.path_resistance(x)
        try:
            r_m = self.trees.subtree_resistance(tree, x, horizon)
        except NoDescendants:
            return EscapeBound(0.0, 0.0, rho, extended.INF)
        if rho == 0 and r_m == 0:
            raise ParamOutOfRange("path and descendant resistances are both zero")

        if math.isinf(rho):
            rhs = 0.0 if math.isinf(r_m) else 1.0
        else:
            rhs = rho / (rho + r_m)

        net = self.trees.tree_to_network(tree, horizon)
        qnet = self.resistor.quotient(net)
        lhs = self.hitting_probability(
            qnet, qnet.class_of[x], target={qnet.a1_class}, avoid={qnet.a0_class}
        )
        return EscapeBound(lhs, rhs, rho, r_m)


# Global walk service instance
walk_service = WalkService()


def get_walk_service() -> WalkService:
    """Get walk service instance"""
    return walk_service
