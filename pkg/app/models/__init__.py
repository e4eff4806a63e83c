"""
Models Package
Networks, family trees, edge laws and report records
"""

from app.models.distributions import EdgeDistribution, OffspringLaw, parse_dist_spec
from app.models.network import QuotientNetwork, ResistorNetwork
from app.models.tree import FamilyTree
from app.models.edge_law import EdgeLaw, ExplorationLayers
from app.models.empirical import EmpiricalLaw
from app.models.report import Criterion, ExperimentReport, Verdict
from app.models.run_config import RunConfig

__all__ = [
    "EdgeDistribution",
    "OffspringLaw",
    "parse_dist_spec",
    "QuotientNetwork",
    "ResistorNetwork",
    "FamilyTree",
    "EdgeLaw",
    "ExplorationLayers",
    "EmpiricalLaw",
    "Criterion",
    "ExperimentReport",
    "Verdict",
    "RunConfig",
]
