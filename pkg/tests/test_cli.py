"""
Command line surface
"""

import orjson
import pytest

from app.api import build_parser, config_from_args
from app.core.exceptions import UsageError
from app.models.distributions import PointMass
from app.models.edge_law import INFINITY_VERTEX
from app.services.experiment_service import RnTask, rn_trial
from app.services.resistor_service import ResistorService
from main import run


@pytest.fixture
def k4(fixtures_dir):
    return str(fixtures_dir / "k4_unit.net")


class TestResistanceCommand:
    def test_prints_value(self, k4, capsys):
        assert run(["resistance", k4]) == 0
        assert capsys.readouterr().out == "0.5\n"

    def test_json_output(self, k4, capsys):
        assert run(["resistance", k4, "--format", "json"]) == 0
        data = orjson.loads(capsys.readouterr().out)
        assert data["resistance"] == 0.5
        assert data["classes"] == 4

    def test_open_network_prints_inf(self, tmp_path, capsys):
        path = tmp_path / "open.net"
        path.write_text("terminals A0: a A1: b\nedge a x 1\n")
        assert run(["resistance", str(path)]) == 0
        assert capsys.readouterr().out == "inf\n"

    def test_malformed_file(self, tmp_path, capsys):
        path = tmp_path / "bad.net"
        path.write_text("edge a b 1\n")
        assert run(["resistance", str(path)]) == 1
        assert "terminals" in capsys.readouterr().err

    def test_missing_file(self, tmp_path):
        assert run(["resistance", str(tmp_path / "nope.net")]) == 1


class TestUsage:
    def test_no_subcommand(self, capsys):
        assert run([]) == 1
        assert "usage" in capsys.readouterr().err

    def test_unknown_experiment(self):
        assert run(["experiment", "t9"]) == 1

    def test_missing_required_flag(self, capsys):
        assert run(["experiment", "lemma7", "--n", "50"]) == 1
        assert "--gamma" in capsys.readouterr().err

    def test_gamma_above_n(self):
        assert run(["experiment", "t3", "--n", "5", "--gamma", "6"]) == 1

    def test_delta_must_stay_below_gamma(self):
        assert run(["experiment", "coupling", "--n", "100", "--gamma", "2", "--delta", "3"]) == 1

    def test_bad_distribution(self):
        assert run(["gw", "--gamma", "2", "--dist", "gauss:1"]) == 1

    def test_version(self, capsys):
        assert run(["--version"]) == 0
        assert "rescircuit" in capsys.readouterr().out


class TestConfig:
    def test_defaults_fill_seed_and_format(self):
        args = build_parser().parse_args(["experiment", "t2", "--gamma", "0.5", "--n-list", "20", "40"])
        config = config_from_args(args)
        assert config.format == "json"
        assert config.sizes == [20, 40]
        assert config.seed >= 0

    def test_format_default_does_not_leak_between_commands(self):
        parser = build_parser()
        assert parser.parse_args(["selftest"]).format is None
        assert config_from_args(parser.parse_args(["gw", "--gamma", "2"])).format == "json"

    def test_gamma_schedules(self):
        parser = build_parser()
        config = config_from_args(parser.parse_args(["experiment", "t1", "--n", "100", "--gamma-schedule", "sqrt_n"]))
        assert config.gamma_n(100) == pytest.approx(10.0)

    def test_validation_errors_become_usage_errors(self):
        args = build_parser().parse_args(["experiment", "t1", "--n", "0"])
        with pytest.raises(UsageError):
            config_from_args(args)


class TestRuns:
    def test_gw_profile(self, capsys, tmp_path):
        export = tmp_path / "tree.net"
        code = run(["gw", "--gamma", "2", "--depth", "4", "--seed", "3", "--export", str(export)])
        assert code == 0
        data = orjson.loads(capsys.readouterr().out)
        assert data["extinction_probability"] == pytest.approx(0.203188, abs=1e-6)
        rows = data["resistance_by_depth"]
        values = [row["resistance"] for row in rows]
        finite = [v for v in values if v != "inf"]
        assert finite == sorted(finite)
        if rows and rows[-1]["resistance"] != "inf" and rows[-1]["depth"] == 4:
            assert export.exists()

    def test_experiment_exit_code_and_csv(self, capsys, tmp_path):
        csv_path = tmp_path / "samples.csv"
        code = run(
            [
                "experiment", "t1", "--n", "30", "--gamma", "30", "--trials", "3",
                "--seed", "1", "--csv", str(csv_path), "--no-timestamp",
            ]
        )
        assert code == 0
        data = orjson.loads(capsys.readouterr().out)
        assert data["verdict"] == "pass"
        assert "created_at" not in data
        assert csv_path.read_text().startswith("trial,value_or_inf,censored")

    def test_report_to_file(self, tmp_path):
        target = tmp_path / "report.json"
        code = run(["experiment", "lemma3", "--gamma", "2", "--trials", "10", "--output", str(target)])
        assert code == 0
        assert orjson.loads(target.read_bytes())["experiment"] == "lemma3"

    def test_same_seed_same_bytes(self, capsys):
        argv = ["experiment", "t2", "--gamma", "0.5", "--n-list", "20", "--trials", "10", "--seed", "5", "--no-timestamp"]
        run(argv)
        first = capsys.readouterr().out
        run(argv)
        assert capsys.readouterr().out == first

    def test_selftest(self, capsys):
        assert run(["selftest", "--seed", "20240101"]) == 0
        assert orjson.loads(capsys.readouterr().out)["verdict"] == "pass"


class TestExports:
    def test_t3_exports_the_first_network(self, tmp_path, capsys):
        path = tmp_path / "trial0.net"
        argv = ["experiment", "t3", "--n", "20", "--gamma", "3", "--trials", "2", "--seed", "7", "--node-cap", "2000"]
        argv += ["--export", str(path)]
        run(argv)
        capsys.readouterr()
        net = ResistorService().read_network(path)
        assert net.a0 == frozenset({0})
        assert net.a1 == frozenset({INFINITY_VERTEX})
        expected = rn_trial(RnTask(0, 7, 20, 3.0, PointMass(1.0)))
        assert ResistorService().effective_resistance(net) == pytest.approx(expected, rel=1e-9)

    def test_lemma7_exports_layers(self, tmp_path, capsys):
        path = tmp_path / "layers.json"
        argv = ["experiment", "lemma7", "--n", "40", "--gamma", "2", "--k", "3", "--trials", "2", "--seed", "7"]
        run(argv + ["--export", str(path)])
        capsys.readouterr()
        data = orjson.loads(path.read_bytes())
        assert data["k"] == 3
        assert set(data["explorations"]) == {"0", INFINITY_VERTEX}
        assert data["explorations"]["0"]["layers"][0] == ["0"]
        assert all(len(e["layers"]) == 4 for e in data["explorations"].values())

    def test_export_ignored_elsewhere(self, tmp_path, capsys):
        path = tmp_path / "none.json"
        run(["experiment", "lemma3", "--gamma", "2", "--trials", "5", "--export", str(path)])
        capsys.readouterr()
        assert not path.exists()


class TestExplicitZeros:
    def test_zero_layers_is_not_replaced_by_the_default(self, capsys):
        """--k 0 reaches the experiment, which rejects it"""
        assert run(["experiment", "lemma7", "--n", "40", "--gamma", "2", "--k", "0", "--trials", "2"]) == 1
        assert "k must be >= 1" in capsys.readouterr().err

    def test_zero_depth_reaches_prop1(self, capsys):
        run(["experiment", "prop1", "--gamma", "2", "--dist", "uniform:0.5,1.5", "--depth", "0", "--trials", "2"])
        assert orjson.loads(capsys.readouterr().out)["params"]["depth"] == 0
