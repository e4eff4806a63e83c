"""
Report serialization: JSON, text and CSV
"""

import io
import math

import numpy as np
import orjson

from app.models.empirical import EmpiricalLaw
from app.models.report import Criterion, ExperimentReport, Verdict
from app.services.report_service import jsonable


def make_report(runtime: float = 1.5, created_at: str = "2024-01-01T00:00:00", **fields) -> ExperimentReport:
    defaults = {
        "experiment": "t3",
        "master_seed": 7,
        "params": {"n": 100, "gamma": 2.0},
        "statistics": {"atom": 0.36, "limit": {"median": math.inf}},
        "criteria": [Criterion.check("atom_gap", 0.01, 0.03)],
    }
    defaults.update(fields)
    return ExperimentReport(runtime_seconds=runtime, created_at=created_at, **defaults)


class TestVerdicts:
    def test_exit_codes(self):
        assert make_report().exit_code == 0
        failing = make_report(criteria=[Criterion.check("atom_gap", 0.5, 0.03)])
        assert failing.verdict == Verdict.FAIL and failing.exit_code == 2
        assert make_report(abstained=True).exit_code == 3

    def test_unasserted_failure_is_reported_only(self):
        report = make_report(criteria=[Criterion.check("limit_gap", 0.5, 0.03, asserted=False)])
        assert report.criteria[0].verdict == Verdict.REPORTED
        assert report.verdict == Verdict.PASS

    def test_strict_comparator(self):
        assert not Criterion.check("positive", 0.0, 0.0, ">").passed
        assert Criterion.check("positive", 0.1, 0.0, ">").passed


class TestJson:
    def test_jsonable(self):
        value = {"a": math.inf, "b": math.nan, "c": np.float64(2.0), "d": (1, np.int64(3)), 4: -math.inf}
        assert jsonable(value) == {"a": "inf", "b": None, "c": 2.0, "d": [1, 3], "4": "-inf"}

    def test_payload(self, reports):
        payload = reports.report_payload(make_report())
        assert payload["verdict"] == "pass"
        assert payload["exit_code"] == 0
        assert payload["criteria"][0]["verdict"] == "pass"
        assert payload["statistics"]["limit"]["median"] == "inf"

    def test_byte_identical_without_timestamps(self, reports):
        a = reports.report_json(make_report(runtime=1.0, created_at="2024-01-01T00:00:00"), no_timestamp=True)
        b = reports.report_json(make_report(runtime=9.0, created_at="2025-06-30T12:00:00"), no_timestamp=True)
        assert a == b
        assert b"runtime_seconds" not in a
        assert a.endswith(b"\n")

    def test_timestamps_kept_by_default(self, reports):
        data = orjson.loads(reports.report_json(make_report()))
        assert data["runtime_seconds"] == 1.5
        assert data["created_at"] == "2024-01-01T00:00:00"

    def test_keys_sorted(self, reports):
        text = reports.to_json({"b": 1, "a": 2}).decode()
        assert text.index('"a"') < text.index('"b"')


class TestText:
    def test_report_text(self, reports):
        text = reports.report_text(make_report(criteria=[Criterion.check("atom_gap", 0.5, 0.03)]))
        assert "verdict: fail" in text
        assert "atom_gap" in text
        assert "limit.median" in text
        assert "runtime_seconds: 1.5" in text

    def test_report_text_without_timestamp(self, reports):
        assert "runtime_seconds" not in reports.report_text(make_report(), no_timestamp=True)

    def test_render_switches_format(self, reports):
        report = make_report()
        assert reports.render(report, "text").startswith(b"experiment: t3")
        assert reports.render(report, "json").startswith(b"{")

    def test_table_text(self, reports):
        text = reports.table_text([{"depth": 1, "resistance": 0.5}, {"depth": 2, "resistance": math.inf}])
        assert "inf" in text.splitlines()[2]


class TestSamples:
    def test_samples_frame(self, reports):
        law = EmpiricalLaw.from_values([0.5, math.inf, 2.0], censored=[False, False, True])
        frame = reports.samples_frame(law)
        assert list(frame.columns) == ["trial", "value_or_inf", "censored"]
        assert frame["value_or_inf"].tolist() == ["0.5", "inf", "2"]
        assert frame["censored"].tolist() == [False, False, True]

    def test_write_csv(self, reports, tmp_path):
        law = EmpiricalLaw.from_values([1.0, math.inf])
        path = reports.write_csv(law, tmp_path / "samples.csv")
        lines = path.read_text().splitlines()
        assert lines == ["trial,value_or_inf,censored", "0,1,False", "1,inf,False"]


class TestEmit:
    def test_to_stream(self, reports):
        stream = io.StringIO()
        reports.emit(b"0.5\n", None, stream)
        assert stream.getvalue() == "0.5\n"

    def test_to_file(self, reports, tmp_path):
        target = tmp_path / "report.json"
        reports.emit(b"{}\n", str(target))
        assert target.read_bytes() == b"{}\n"
