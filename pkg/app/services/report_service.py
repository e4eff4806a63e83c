"""
Report Service - JSON, aligned text and CSV emission
Reports are byte-identical for identical inputs once timestamps are dropped
"""

import logging
import math
import sys
from pathlib import Path
from typing import Any, Dict, List, Optional

import numpy as np
import orjson
import pandas as pd

from app.core import extended
from app.models.empirical import EmpiricalLaw
from app.models.report import ExperimentReport

logger = logging.getLogger(__name__)

TIMING_FIELDS = ("runtime_seconds", "created_at")


def jsonable(value: Any) -> Any:
    """Replace inf by the string "inf" (nan by null) and numpy scalars by Python ones"""
    if isinstance(value, dict):
        return {str(k): jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple, np.ndarray)):
        return [jsonable(v) for v in value]
    if isinstance(value, np.generic):
        value = value.item()
    if isinstance(value, float):
        if math.isnan(value):
            return None
        if math.isinf(value):
            return "inf" if value > 0 else "-inf"
    return value


class ReportService:
    """Serializes experiment reports and raw samples"""

    # ==================== JSON ====================

    def report_payload(self, report: ExperimentReport, no_timestamp: bool = False) -> Dict[str, Any]:
        data = report.to_dict()
        if no_timestamp:
            for key in TIMING_FIELDS:
                data.pop(key, None)
        data["exit_code"] = report.exit_code
        return jsonable(data)

    def to_json(self, payload: Dict[str, Any]) -> bytes:
        return orjson.dumps(jsonable(payload), option=orjson.OPT_INDENT_2 | orjson.OPT_SORT_KEYS) + b"\n"

    def report_json(self, report: ExperimentReport, no_timestamp: bool = False) -> bytes:
        return self.to_json(self.report_payload(report, no_timestamp))

    # ==================== TEXT ====================

    def criteria_frame(self, report: ExperimentReport) -> pd.DataFrame:
        rows = [
            {
                "criterion": c.name,
                "value": _cell(c.value),
                "comparator": c.comparator,
                "threshold": _cell(c.threshold),
                "verdict": c.verdict.value,
            }
            for c in report.criteria
        ]
        return pd.DataFrame(rows, columns=["criterion", "value", "comparator", "threshold", "verdict"])

    def statistics_frame(self, statistics: Dict[str, Any]) -> pd.DataFrame:
        rows = [{"statistic": key, "value": _cell(value)} for key, value in _flatten(statistics)]
        return pd.DataFrame(rows, columns=["statistic", "value"])

    def report_text(self, report: ExperimentReport, no_timestamp: bool = False) -> str:
        lines = [
            f"experiment: {report.experiment}",
            f"master_seed: {report.master_seed}",
            f"verdict: {report.verdict.value}",
        ]
        if report.abstain_reason:
            lines.append(f"abstain_reason: {report.abstain_reason}")
        if not no_timestamp and report.runtime_seconds is not None:
            lines.append(f"runtime_seconds: {report.runtime_seconds}")
        lines.append("")
        lines.append(self.statistics_frame({"params": report.params}).to_string(index=False))
        lines.append("")
        lines.append(self.statistics_frame(report.statistics).to_string(index=False))
        if report.criteria:
            lines.append("")
            lines.append(self.criteria_frame(report).to_string(index=False))
        return "\n".join(lines) + "\n"

    def table_text(self, rows: List[Dict[str, Any]]) -> str:
        """Aligned table for ad hoc rows (e.g. resistance by depth)"""
        frame = pd.DataFrame([{k: _cell(v) for k, v in row.items()} for row in rows])
        return frame.to_string(index=False) + "\n"

    # ==================== CSV ====================

    def samples_frame(self, law: EmpiricalLaw) -> pd.DataFrame:
        """trial, value_or_inf, censored in trial order"""
        values = law.trial_values if law.trial_values is not None else np.concatenate(
            [law.finite_samples, np.full(law.infinity_count, math.inf)]
        )
        censored = law.censored if law.censored is not None else np.zeros(values.size, dtype=bool)
        return pd.DataFrame(
            {
                "trial": np.arange(values.size),
                "value_or_inf": [extended.format_resistance(float(v)) for v in values],
                "censored": censored.astype(bool),
            }
        )

    def write_csv(self, law: EmpiricalLaw, path: str | Path) -> Path:
        path = Path(path)
        self.samples_frame(law).to_csv(path, index=False)
        logger.info(f"📝 {law.total} samples written to {path}")
        return path

    def write_json(self, payload: Dict[str, Any], path: str | Path) -> Path:
        path = Path(path)
        path.write_bytes(self.to_json(payload))
        logger.info(f"📝 Export written to {path}")
        return path

    # ==================== OUTPUT ====================

    def render(self, report: ExperimentReport, fmt: str = "json", no_timestamp: bool = False) -> bytes:
        if fmt == "text":
            return self.report_text(report, no_timestamp).encode("utf-8")
        return self.report_json(report, no_timestamp)

    def emit(self, content: bytes, output: Optional[str] = None, stream=None) -> None:
        """Write to ``output`` if given, else to ``stream`` (stdout)"""
        if output:
            Path(output).write_bytes(content)
            logger.info(f"📝 Report written to {output}")
            return
        stream = stream or sys.stdout
        stream.write(content.decode("utf-8"))
        stream.flush()


def _cell(value: Any) -> Any:
    if isinstance(value, float):
        return extended.format_resistance(value) if value >= 0 else f"{value:.12g}"
    return value


def _flatten(data: Dict[str, Any], prefix: str = ""):
    for key, value in data.items():
        name = f"{prefix}{key}"
        if isinstance(value, dict):
            yield from _flatten(value, f"{name}.")
        elif isinstance(value, (list, tuple)) and value and isinstance(value[0], dict):
            for i, item in enumerate(value):
                yield from _flatten(item, f"{name}[{i}].")
        else:
            yield name, value


# Global report service instance
report_service = ReportService()


def get_report_service() -> ReportService:
    """Get report service instance"""
    return report_service
