"""
Validated run configuration for the command line
"""

import math
from typing import List, Literal, Optional

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from app.models.distributions import EdgeDistribution, parse_dist_spec

Schedule = Literal["constant", "log_n", "sqrt_n"]
ExperimentName = Literal["t1", "t2", "t3", "lemma7", "coupling", "lemma11", "lemma2", "lemma3", "prop1"]


class RunConfig(BaseModel):
    """Every numeric parameter is checked here before any sampling starts"""

    model_config = ConfigDict(extra="forbid")

    subcommand: Literal["resistance", "gw", "experiment", "selftest"]
    experiment: Optional[ExperimentName] = None
    network_file: Optional[str] = None

    n: Optional[int] = Field(default=None, ge=1)
    n_list: Optional[List[int]] = None
    gamma: Optional[float] = Field(default=None, ge=0)
    gamma_schedule: Schedule = "constant"
    delta: Optional[float] = Field(default=None, gt=1)
    dist: str = "point:1"
    K: Optional[float] = Field(default=None, gt=0)
    k: Optional[int] = Field(default=None, ge=0)
    trials: int = Field(default=100, ge=1)
    depth: Optional[int] = Field(default=None, ge=0)
    depth_cap: Optional[int] = Field(default=None, ge=1)
    node_cap: Optional[int] = Field(default=None, ge=1)
    seed: int = Field(ge=0)
    workers: int = Field(default=1, ge=1)

    format: Literal["json", "text"] = "json"
    output: Optional[str] = None
    csv: Optional[str] = None
    export: Optional[str] = None
    no_timestamp: bool = False

    @field_validator("dist")
    @classmethod
    def dist_parses(cls, v: str) -> str:
        parse_dist_spec(v)
        return v

    @field_validator("n_list")
    @classmethod
    def n_list_positive(cls, v):
        if v is not None and (not v or any(n < 1 for n in v)):
            raise ValueError("n_list needs at least one n >= 1")
        return v

    @model_validator(mode="after")
    def check_preconditions(self):
        if self.subcommand == "resistance" and not self.network_file:
            raise ValueError("resistance needs a network file")
        if self.subcommand == "experiment" and self.experiment is None:
            raise ValueError("experiment needs a name")
        if self.gamma_schedule == "constant" and self.gamma is not None:
            for n in self.sizes:
                if self.gamma > n:
                    raise ValueError(f"gamma={self.gamma} exceeds n={n}")
        if self.delta is not None and self.gamma is not None and self.gamma_schedule == "constant":
            if not self.delta < self.gamma:
                raise ValueError(f"delta={self.delta} must be below gamma={self.gamma}")
        return self

    @property
    def sizes(self) -> List[int]:
        if self.n_list:
            return list(self.n_list)
        return [self.n] if self.n is not None else []

    @property
    def distribution(self) -> EdgeDistribution:
        return parse_dist_spec(self.dist)

    def gamma_n(self, n: int) -> float:
        """gamma(n) under the configured schedule"""
        if self.gamma_schedule == "log_n":
            return math.log(n)
        if self.gamma_schedule == "sqrt_n":
            return math.sqrt(n)
        if self.gamma is None:
            raise ValueError("a constant schedule needs --gamma")
        return self.gamma
