"""
Experiment reports
"""

from enum import Enum
from typing import Any, Dict, List, Optional

from pydantic import BaseModel, Field


class Verdict(str, Enum):
    """Outcome of an experiment or a criterion"""

    PASS = "pass"
    FAIL = "fail"
    ABSTAIN = "abstain"
    REPORTED = "reported"  # diagnostic, nothing asserted

    @property
    def exit_code(self) -> int:
        return {Verdict.FAIL: 2, Verdict.ABSTAIN: 3}.get(self, 0)


class Criterion(BaseModel):
    name: str
    value: Optional[float] = None
    threshold: Optional[float] = None
    comparator: str = "<="
    asserted: bool = True
    passed: Optional[bool] = None

    @classmethod
    def check(cls, name: str, value: float, threshold: float, comparator: str = "<=", asserted: bool = True):
        ops = {
            "<=": lambda a, b: a <= b,
            ">=": lambda a, b: a >= b,
            ">": lambda a, b: a > b,
            "==": lambda a, b: a == b,
        }
        return cls(
            name=name,
            value=value,
            threshold=threshold,
            comparator=comparator,
            asserted=asserted,
            passed=bool(ops[comparator](value, threshold)),
        )

    @property
    def verdict(self) -> Verdict:
        if not self.asserted:
            return Verdict.REPORTED
        return Verdict.PASS if self.passed else Verdict.FAIL


class ExperimentReport(BaseModel):
    """Parameters, statistics and per-criterion verdicts of one experiment run"""

    experiment: str
    master_seed: int
    params: Dict[str, Any] = Field(default_factory=dict)
    statistics: Dict[str, Any] = Field(default_factory=dict)
    criteria: List[Criterion] = Field(default_factory=list)
    abstained: bool = False
    abstain_reason: Optional[str] = None
    runtime_seconds: Optional[float] = None
    created_at: Optional[str] = None

    @property
    def verdict(self) -> Verdict:
        if self.abstained:
            return Verdict.ABSTAIN
        if any(c.asserted and not c.passed for c in self.criteria):
            return Verdict.FAIL
        return Verdict.PASS

    @property
    def exit_code(self) -> int:
        return self.verdict.exit_code

    def to_dict(self) -> Dict[str, Any]:
        data = self.model_dump(mode="python")
        data["verdict"] = self.verdict.value
        for criterion, raw in zip(self.criteria, data["criteria"]):
            raw["verdict"] = criterion.verdict.value
        return data
