"""
Services Package
Solvers, samplers and experiment harnesses
"""

from app.services.resistor_service import ResistorService, get_resistor_service
from app.services.tree_service import TreeService, get_tree_service
from app.services.walk_service import WalkService, get_walk_service
from app.services.complete_model_service import CompleteModelService, get_complete_model_service
from app.services.coupling_service import CouplingService, get_coupling_service
from app.services.statistics_service import StatisticsService, get_statistics_service
from app.services.report_service import ReportService, get_report_service
from app.services.experiment_service import ExperimentService, get_experiment_service

__all__ = [
    "ResistorService",
    "get_resistor_service",
    "TreeService",
    "get_tree_service",
    "WalkService",
    "get_walk_service",
    "CompleteModelService",
    "get_complete_model_service",
    "CouplingService",
    "get_coupling_service",
    "StatisticsService",
    "get_statistics_service",
    "ReportService",
    "get_report_service",
    "ExperimentService",
    "get_experiment_service",
]
