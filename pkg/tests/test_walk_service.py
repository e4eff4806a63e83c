"""
Random walks on quotient networks
"""

import math

import numpy as np
import pytest

from app.core.exceptions import IsolatedState, ParamOutOfRange
from app.models.distributions import OffspringLaw, Uniform
from app.models.network import ResistorNetwork
from app.models.tree import tree_from_parents

from .conftest import path_network, random_network


def star() -> ResistorNetwork:
    """Centre c with leaves l1, l2 (r = 1) and l3 (r = 2)"""
    return ResistorNetwork.build(
        [("c", "l1", 1.0), ("c", "l2", 1.0), ("c", "l3", 2.0)], ["l1"], ["l2"]
    )


class TestTransitionMatrix:
    def test_row_proportional_to_conductance(self, resistor, walks):
        qnet = resistor.quotient(star())
        chain = walks.transition_matrix(qnet)
        row = dict(chain.row(qnet.class_of["c"]))
        assert row[qnet.class_of["l1"]] == pytest.approx(0.4)
        assert row[qnet.class_of["l2"]] == pytest.approx(0.4)
        assert row[qnet.class_of["l3"]] == pytest.approx(0.2)
        assert np.allclose(chain.row_sums, 1.0, atol=1e-12)

    def test_two_neighbours(self, resistor, walks):
        """Conductances 1 and 1/2 split the walk 2/3 to 1/3"""
        qnet = resistor.quotient(path_network(1.0, 2.0))
        row = dict(walks.transition_matrix(qnet).row(qnet.class_of["v1"]))
        assert row[qnet.class_of["v0"]] == pytest.approx(2 / 3)
        assert row[qnet.class_of["v2"]] == pytest.approx(1 / 3)

    def test_open_edge_never_used(self, resistor, walks):
        net = ResistorNetwork.build([("a", "x", 1.0), ("x", "b", 1.0), ("x", "c", math.inf)], ["a"], ["b"])
        qnet = resistor.quotient(net)
        chain = walks.transition_matrix(qnet)
        assert qnet.class_of["c"] not in dict(chain.row(qnet.class_of["x"]))
        assert qnet.class_of["c"] in chain.absorbing
        assert chain.row(qnet.class_of["c"]) == [(qnet.class_of["c"], 1.0)]

    def test_strict_mode_rejects_isolated_class(self, resistor, walks):
        net = ResistorNetwork.build([("a", "b", 1.0), ("b", "c", math.inf)], ["a"], ["b"])
        with pytest.raises(IsolatedState):
            walks.transition_matrix(resistor.quotient(net), strict=True)


class TestHittingProbability:
    def test_symmetric_path(self, resistor, walks):
        qnet = resistor.quotient(path_network(1.0, 1.0))
        p = walks.hitting_probability(qnet, qnet.class_of["v1"], {qnet.a1_class}, {qnet.a0_class})
        assert p == pytest.approx(0.5, abs=1e-12)

    def test_unequal_path(self, resistor, walks):
        qnet = resistor.quotient(path_network(1.0, 2.0))
        p = walks.hitting_probability(qnet, qnet.class_of["v1"], {qnet.a1_class}, {qnet.a0_class})
        assert p == pytest.approx(1 / 3, abs=1e-12)

    def test_start_inside_stopping_sets(self, resistor, walks):
        qnet = resistor.quotient(path_network(1.0, 1.0))
        assert walks.hitting_probability(qnet, qnet.a1_class, {qnet.a1_class}, {qnet.a0_class}) == 1.0
        assert walks.hitting_probability(qnet, qnet.a0_class, {qnet.a1_class}, {qnet.a0_class}) == 0.0

    def test_overlapping_sets_rejected(self, resistor, walks):
        qnet = resistor.quotient(path_network(1.0, 1.0))
        with pytest.raises(ParamOutOfRange):
            walks.hitting_probability(qnet, 1, {qnet.a1_class}, {qnet.a1_class})

    def test_equals_potential_on_random_networks(self, resistor, walks):
        """Hitting A1 before A0 is the harmonic potential"""
        rng = np.random.default_rng(21)
        compared = 0
        for _ in range(25):
            qnet = resistor.quotient(random_network(rng))
            if qnet.terminals_merged:
                continue
            solution = resistor.solve_potentials(qnet)
            for c in range(qnet.n_classes):
                if c in solution.floating:
                    continue
                p = walks.hitting_probability(qnet, c, {qnet.a1_class}, {qnet.a0_class})
                assert p == pytest.approx(solution[c], abs=1e-9)
                compared += 1
        assert compared > 50


class TestMonteCarloWalk:
    def test_agrees_with_exact_value(self, resistor, walks, rng):
        qnet = resistor.quotient(path_network(1.0, 2.0))
        est = walks.monte_carlo_walk(qnet, qnet.class_of["v1"], {qnet.a1_class}, {qnet.a0_class}, 4000, rng)
        assert est.valid and est.cap_hits == 0
        assert abs(est.estimate - 1 / 3) <= 4 * est.stderr

    def test_step_cap_leaves_walks_unresolved(self, resistor, walks, rng):
        qnet = resistor.quotient(path_network(1.0, 1.0, 1.0, 1.0))
        est = walks.monte_carlo_walk(
            qnet, qnet.class_of["v2"], {qnet.a1_class}, {qnet.a0_class}, 50, rng, step_cap=1
        )
        assert est.cap_hits == 50
        assert not est.valid
        assert math.isnan(est.estimate)
        assert est.cap_hit_fraction == 1.0

    def test_zero_trials(self, resistor, walks, rng):
        qnet = resistor.quotient(path_network(1.0, 1.0))
        est = walks.monte_carlo_walk(qnet, 1, {qnet.a1_class}, {qnet.a0_class}, 0, rng)
        assert est.trials == 0 and math.isnan(est.estimate)


class TestEscapeBound:
    def test_equality_on_a_path(self, walks):
        """Root -1- x -2- y -3- z: from x, P(z before root) = 1 / (1 + 5)"""
        tree = tree_from_parents([-1, 0, 1, 2], [0.0, 1.0, 2.0, 3.0])
        bound = walks.lemma3_bound_check(tree, x=1, horizon=3)
        assert bound.path_resistance == pytest.approx(1.0)
        assert bound.descendant_resistance == pytest.approx(5.0)
        assert bound.lhs == pytest.approx(1 / 6, abs=1e-12)
        assert bound.rhs == pytest.approx(1 / 6, abs=1e-12)
        assert bound.holds

    def test_holds_on_random_trees(self, trees, walks):
        rng = np.random.default_rng(5)
        law = OffspringLaw.poisson(2.0)
        checked = 0
        for _ in range(30):
            tree = trees.sample_tree(law, Uniform(0.5, 1.5), rng, depth_cap=4)
            if tree.depth < 4:
                continue
            for x in tree.nodes_at(2)[:3]:
                bound = walks.lemma3_bound_check(tree, int(x), 4)
                assert bound.holds
                checked += 1
        assert checked > 0

    def test_horizon_must_exceed_generation(self, walks):
        tree = tree_from_parents([-1, 0, 1], [0.0, 1.0, 1.0])
        with pytest.raises(ParamOutOfRange):
            walks.lemma3_bound_check(tree, x=2, horizon=2)
