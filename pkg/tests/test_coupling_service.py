"""
Coupled exploration and Poisson family trees
"""

import numpy as np
import pytest
from scipy import stats

from app.core.exceptions import ParamOutOfRange
from app.models.edge_law import INFINITY_VERTEX, EdgeLaw
from app.services.coupling_service import PoissonTable, binomial_cdf


class TestInverseStep:
    def test_poisson_table_inverse(self):
        table = PoissonTable(2.0)
        cdf = stats.poisson.cdf(np.arange(6), 2.0)
        assert table.inverse(0.0) == 0
        assert table.inverse(cdf[2]) == 2
        assert table.inverse(cdf[2] + 1e-9) == 3

    def test_binomial_cdf_below_zero(self):
        assert binomial_cdf(-1, 10, 0.3) == 0.0
        assert binomial_cdf(10, 10, 0.3) == pytest.approx(1.0)

    @pytest.mark.parametrize(
        "candidates, p, delta, r",
        [(100, 0.03, 2.0, 0), (100, 0.03, 2.0, 3), (2000, 0.0015, 2.5, 5), (10, 0.5, 4.0, 12)],
    )
    def test_marginal_identity(self, coupling, candidates, p, delta, r):
        value = coupling.marginal_identity(candidates, p, delta, r)
        assert value == pytest.approx(stats.poisson.cdf(r, delta), abs=1e-12)


class TestCoupledGrowth:
    def test_inclusion_is_typical(self, coupling, unit):
        included = 0
        for seed in range(20):
            rng = np.random.default_rng(seed)
            law = EdgeLaw(2000, 3.0, unit, rng)
            result = coupling.coupled_growth(law, 2.0, 3, rng)
            assert result.tau_tilde.root == 0
            assert INFINITY_VERTEX not in result.tau_tilde.vertices
            included += result.inclusion
        assert included >= 18

    def test_included_tree_uses_model_edges(self, coupling, bounded, rng):
        law = EdgeLaw(1000, 3.0, bounded, rng)
        result = coupling.coupled_growth(law, 2.0, 2, rng)
        if result.inclusion:
            for parent, child, r in result.T_tilde.tree_edges:
                assert law.resistance(parent, child) == r

    def test_overflow_uses_fresh_labels(self, coupling, unit):
        overflowed = 0
        for seed in range(10):
            rng = np.random.default_rng(seed)
            law = EdgeLaw(6, 5.5, unit, rng)
            result = coupling.coupled_growth(law, 5.0, 2, rng)
            fresh = [v for v in result.T_tilde.vertices if v != INFINITY_VERTEX and v > law.n]
            if result.overflow:
                overflowed += 1
                assert fresh
                assert not result.inclusion
            assert result.next_label == law.n + 1 + len(fresh)
        assert overflowed > 0

    def test_offspring_counts_cover_inner_nodes(self, coupling, unit, rng):
        law = EdgeLaw(500, 3.0, unit, rng)
        result = coupling.coupled_growth(law, 2.0, 3, rng)
        inner = sum(len(layer) for layer in result.T_tilde.layers[:-1])
        assert len(result.offspring_counts) == inner
        assert sum(result.offspring_counts) == len(result.T_tilde.tree_edges)

    def test_parameter_checks(self, coupling, unit, rng):
        law = EdgeLaw(100, 3.0, unit, rng)
        with pytest.raises(ParamOutOfRange):
            coupling.coupled_growth(law, 3.0, 2, rng)
        with pytest.raises(ParamOutOfRange):
            coupling.coupled_growth(law, 1.0, 2, rng)
        with pytest.raises(ParamOutOfRange):
            coupling.coupled_growth(law, 2.0, 0, rng)


class TestCoupledPair:
    def test_second_tree_avoids_the_first(self, coupling, unit):
        for seed in range(5):
            rng = np.random.default_rng(100 + seed)
            law = EdgeLaw(500, 3.0, unit, rng)
            first, second = coupling.coupled_pair(law, 2.0, 2, rng)
            assert second.tau_tilde.root == INFINITY_VERTEX
            assert not first.tau_tilde.vertices & second.tau_tilde.vertices
            assert second.next_label >= first.next_label

    def test_fresh_labels_continue(self, coupling, unit):
        rng = np.random.default_rng(7)
        law = EdgeLaw(6, 5.5, unit, rng)
        first, second = coupling.coupled_pair(law, 5.0, 2, rng)
        first_fresh = {v for v in first.T_tilde.vertices if v != INFINITY_VERTEX and v > law.n}
        second_fresh = {v for v in second.T_tilde.vertices if v != INFINITY_VERTEX and v > law.n}
        assert not first_fresh & second_fresh
