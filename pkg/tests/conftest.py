"""
Shared fixtures
"""

import math
from pathlib import Path

import numpy as np
import pytest

from app.core.config import Settings
from app.models.distributions import Discrete, PointMass, Uniform
from app.models.network import ResistorNetwork
from app.services.complete_model_service import CompleteModelService
from app.services.coupling_service import CouplingService
from app.services.experiment_service import ExperimentService
from app.services.report_service import ReportService
from app.services.resistor_service import ResistorService
from app.services.statistics_service import StatisticsService
from app.services.tree_service import TreeService
from app.services.walk_service import WalkService

FIXTURES = Path(__file__).parent / "fixtures"


@pytest.fixture
def fixtures_dir() -> Path:
    return FIXTURES


@pytest.fixture
def settings() -> Settings:
    return Settings()


@pytest.fixture
def resistor(settings) -> ResistorService:
    return ResistorService(settings)


@pytest.fixture
def trees(settings) -> TreeService:
    return TreeService(settings)


@pytest.fixture
def walks(resistor, trees, settings) -> WalkService:
    return WalkService(resistor, trees, settings)


@pytest.fixture
def model(resistor, trees) -> CompleteModelService:
    return CompleteModelService(resistor, trees)


@pytest.fixture
def coupling() -> CouplingService:
    return CouplingService()


@pytest.fixture
def statistics() -> StatisticsService:
    return StatisticsService()


@pytest.fixture
def experiments(settings) -> ExperimentService:
    return ExperimentService(settings)


@pytest.fixture
def reports() -> ReportService:
    return ReportService()


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(12345)


@pytest.fixture
def unit() -> PointMass:
    return PointMass(1.0)


@pytest.fixture
def bounded() -> Uniform:
    return Uniform(0.5, 1.5)


@pytest.fixture
def with_zero_atom() -> Discrete:
    return Discrete((0.0, 1.0, 2.0), (0.2, 0.5, 0.3))


def path_network(*resistances, a0="v0", a1=None) -> ResistorNetwork:
    """v0 - v1 - ... - vk with the given edge resistances"""
    edges = [(f"v{i}", f"v{i + 1}", r) for i, r in enumerate(resistances)]
    return ResistorNetwork.build(edges, [a0], [a1 or f"v{len(resistances)}"])


def random_network(rng: np.random.Generator, size: int = 9, zero_and_open: bool = True) -> ResistorNetwork:
    """Erdos-Renyi(1/2) graph on 0..size-1 with A0 = {0}, A1 = {size - 1}"""
    edges = []
    for i in range(size):
        for j in range(i + 1, size):
            if rng.random() < 0.5:
                kind = rng.random()
                if zero_and_open and kind < 0.08:
                    r = 0.0
                elif zero_and_open and kind < 0.16:
                    r = math.inf
                else:
                    r = float(rng.uniform(0.2, 4.0))
                edges.append((i, j, r))
    return ResistorNetwork.build(edges, [0], [size - 1], vertices=range(size))
