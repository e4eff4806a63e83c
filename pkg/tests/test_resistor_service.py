"""
Effective resistance: quotient, potentials, closed forms and monotonicity
"""

import math

import numpy as np
import pytest

from app.core.config import Settings
from app.core.exceptions import NetworkFormatError, SameTerminalClass
from app.models.network import Edge, ResistorNetwork
from app.services.experiment_service import laplacian_oracle
from app.services.resistor_service import ResistorService

from .conftest import path_network, random_network


def complete_graph(m: int) -> ResistorNetwork:
    edges = [(i, j, 1.0) for i in range(m) for j in range(i + 1, m)]
    return ResistorNetwork.build(edges, [0], [1], vertices=range(m))


def assert_not_lower(after: float, before: float) -> None:
    """after >= before up to solver tolerance; an open network stays open"""
    if math.isinf(before):
        assert math.isinf(after)
    else:
        assert after >= before - 1e-10 * max(1.0, before)


class TestQuotient:
    def test_zero_edge_merges_endpoints(self, resistor):
        """a-b with r=0 and b-c with r=1 give classes {a, b} and {c} joined by one edge"""
        net = ResistorNetwork.build([("a", "b", 0.0), ("b", "c", 1.0)], ["a"], ["c"])
        qnet = resistor.quotient(net)
        assert qnet.n_classes == 2
        assert qnet.class_of["a"] == qnet.class_of["b"] != qnet.class_of["c"]
        assert [r for _, _, r in qnet.edges] == [1.0]

    def test_no_zero_edges_is_identity(self, resistor):
        net = path_network(1.0, 2.0, 3.0)
        qnet = resistor.quotient(net)
        assert qnet.n_classes == 4
        assert sorted(r for _, _, r in qnet.edges) == [1.0, 2.0, 3.0]

    def test_terminal_sets_merged_first(self, resistor):
        net = ResistorNetwork.build([("a", "x", 1.0), ("b", "x", 1.0), ("x", "z", 1.0)], ["a", "b"], ["z"])
        qnet = resistor.quotient(net)
        assert qnet.class_of["a"] == qnet.class_of["b"] == qnet.a0_class
        assert resistor.effective_resistance(net) == pytest.approx(1.5, abs=1e-12)

    def test_zero_edge_between_terminals(self, resistor):
        net = ResistorNetwork.build([(0, 1, 0.0)], [0], [1])
        qnet = resistor.quotient(net)
        assert qnet.terminals_merged
        assert resistor.effective_resistance(net) == 0.0
        with pytest.raises(SameTerminalClass):
            resistor.solve_potentials(qnet)


class TestPotentials:
    def test_symmetric_path(self, resistor):
        """Unit path A0 - x - A1: V(x) = 1/2"""
        net = path_network(1.0, 1.0)
        qnet = resistor.quotient(net)
        assert resistor.solve_potentials(qnet)[qnet.class_of["v1"]] == pytest.approx(0.5, abs=1e-12)

    def test_unequal_path(self, resistor):
        """r = 1 then r = 2: V(x) = (0/1 + 1/2) / (1/1 + 1/2) = 1/3"""
        net = path_network(1.0, 2.0)
        qnet = resistor.quotient(net)
        solution = resistor.solve_potentials(qnet)
        assert solution[qnet.class_of["v1"]] == pytest.approx(1 / 3, abs=1e-12)
        assert solution[qnet.a0_class] == 0.0
        assert solution[qnet.a1_class] == 1.0
        assert solution.residual <= 1e-10

    def test_unreachable_target(self, resistor):
        net = path_network(1.0, math.inf)
        qnet = resistor.quotient(net)
        solution = resistor.solve_potentials(qnet)
        assert solution[qnet.class_of["v1"]] == 0.0
        assert resistor.effective_resistance(net) == math.inf

    def test_floating_component(self, resistor):
        net = ResistorNetwork.build([("a", "b", 1.0), ("c", "d", 1.0)], ["a"], ["b"])
        qnet = resistor.quotient(net)
        solution = resistor.solve_potentials(qnet)
        assert {qnet.class_of["c"], qnet.class_of["d"]} == set(solution.floating)
        assert math.isnan(solution[qnet.class_of["c"]])
        assert qnet.class_of["c"] not in solution.potential


class TestClosedForms:
    def test_single_edge(self, resistor):
        assert resistor.effective_resistance(path_network(5.0)) == pytest.approx(5.0, abs=1e-12)

    def test_parallel_pair(self, resistor):
        net = ResistorNetwork.build([("a", "b", 2.0), ("a", "b", 2.0)], ["a"], ["b"])
        assert resistor.effective_resistance(net) == pytest.approx(1.0, abs=1e-12)

    def test_series_chain(self, resistor):
        assert resistor.effective_resistance(path_network(1.0, 2.0)) == pytest.approx(3.0, abs=1e-12)

    def test_disconnected(self, resistor):
        net = ResistorNetwork.build([("a", "x", 1.0)], ["a"], ["b"])
        assert resistor.effective_resistance(net) == math.inf

    @pytest.mark.parametrize(
        "name, expected", [("k4_unit.net", 0.5), ("series_parallel.net", 5.0), ("bridge.net", 2.0)]
    )
    def test_fixture_files(self, resistor, fixtures_dir, name, expected):
        net = resistor.read_network(fixtures_dir / name)
        assert resistor.effective_resistance(net) == pytest.approx(expected, abs=1e-10)

    @pytest.mark.parametrize("m", range(4, 11))
    def test_complete_graph(self, resistor, m):
        """K_m with unit resistors: 2/m between two vertices"""
        net = complete_graph(m)
        value = resistor.effective_resistance(net)
        assert value == pytest.approx(2.0 / m, abs=1e-10)
        assert value == pytest.approx(laplacian_oracle(net), abs=1e-10)

    def test_iterative_solver_branch(self):
        """Forcing the conjugate gradient path still gives 2/m"""
        service = ResistorService(Settings(DIRECT_SOLVE_MAX_CLASSES=2))
        assert service.effective_resistance(complete_graph(7)) == pytest.approx(2.0 / 7, abs=1e-10)

    def test_random_networks_match_dense_oracle(self, resistor):
        rng = np.random.default_rng(3)
        checked = 0
        for _ in range(40):
            net = random_network(rng, zero_and_open=False)
            if not resistor.connected(net):
                continue
            assert resistor.effective_resistance(net) == pytest.approx(laplacian_oracle(net), rel=1e-9)
            checked += 1
        assert checked > 20


class TestMonotonicity:
    def test_open_network_stays_open_when_an_edge_is_raised(self, resistor):
        net = ResistorNetwork.build([(0, 2, 1.0)], [0], [1], vertices=range(3))
        raised = net.with_edges([Edge(0, 2, 5.0)])
        before = resistor.effective_resistance(net)
        assert math.isinf(before)
        assert_not_lower(resistor.effective_resistance(raised), before)

    def test_raising_an_edge_never_lowers_resistance(self, resistor):
        rng = np.random.default_rng(11)
        for _ in range(60):
            net = random_network(rng)
            if not net.edges:
                continue
            before = resistor.effective_resistance(net)
            i = int(rng.integers(len(net.edges)))
            edges = list(net.edges)
            edge = edges[i]
            edges[i] = type(edge)(edge.u, edge.v, edge.r + float(rng.uniform(0.1, 3.0)))
            after = resistor.effective_resistance(net.with_edges(edges))
            assert_not_lower(after, before)

    def test_deleting_an_edge_never_lowers_resistance(self, resistor):
        rng = np.random.default_rng(12)
        for _ in range(60):
            net = random_network(rng)
            if not net.edges:
                continue
            before = resistor.effective_resistance(net)
            drop = int(rng.integers(len(net.edges)))
            after = resistor.effective_resistance(net.with_edges(e for k, e in enumerate(net.edges) if k != drop))
            assert_not_lower(after, before)

    def test_shorting_two_vertices_never_raises_resistance(self, resistor):
        rng = np.random.default_rng(13)
        for _ in range(60):
            net = random_network(rng)
            before = resistor.effective_resistance(net)
            u, v = rng.choice(np.arange(1, 8), size=2, replace=False).tolist()
            shorted = ResistorNetwork.build(
                [(e.u, e.v, e.r) for e in net.edges] + [(u, v, 0.0)], net.a0, net.a1, vertices=net.vertices
            )
            after = resistor.effective_resistance(shorted)
            assert after <= before + 1e-10 * max(1.0, before) or math.isinf(before)

    def test_quotient_network_solved_directly(self, resistor):
        rng = np.random.default_rng(14)
        for _ in range(30):
            net = random_network(rng)
            qnet = resistor.quotient(net)
            if qnet.terminals_merged:
                continue
            rebuilt = ResistorNetwork.build(
                qnet.edges, [qnet.a0_class], [qnet.a1_class], vertices=range(qnet.n_classes)
            )
            assert resistor.effective_resistance(rebuilt) == pytest.approx(
                resistor.effective_resistance(net), rel=1e-10
            )


class TestNetworkFormat:
    def test_read_write(self, resistor, fixtures_dir, tmp_path):
        net = resistor.read_network(fixtures_dir / "series_parallel.net")
        path = resistor.write_network(net, tmp_path / "copy.net")
        again = resistor.read_network(path)
        assert again.a0 == net.a0 and again.a1 == net.a1
        assert [(e.u, e.v, e.r) for e in again.edges] == [(e.u, e.v, e.r) for e in net.edges]

    def test_infinite_edge_written_as_token(self, resistor):
        text = resistor.format_network(path_network(math.inf))
        assert text.splitlines()[1] == "edge v0 v1 inf"

    def test_missing_header(self, resistor):
        with pytest.raises(NetworkFormatError):
            resistor.parse_network("edge 0 1 1\n")

    def test_bad_resistance_reports_line(self, resistor):
        with pytest.raises(NetworkFormatError) as info:
            resistor.parse_network("terminals A0: 0 A1: 1\n\nedge 0 1 -2\n")
        assert info.value.line_number == 3

    def test_unknown_record(self, resistor):
        with pytest.raises(NetworkFormatError):
            resistor.parse_network("terminals A0: 0 A1: 1\nwire 0 1 1\n")

    def test_overlapping_terminals(self, resistor):
        with pytest.raises(NetworkFormatError):
            resistor.parse_network("terminals A0: 0 A1: 0\nedge 0 1 1\n")

    def test_merge_parallel(self, resistor):
        net = ResistorNetwork.build([("a", "b", 2.0), ("b", "a", 2.0), ("b", "c", 1.0)], ["a"], ["c"])
        merged = resistor.merge_parallel(net)
        assert len(merged.edges) == 2
        assert merged.edges[0].r == pytest.approx(1.0)
        assert resistor.effective_resistance(merged) == pytest.approx(resistor.effective_resistance(net))
