"""
selftest - deterministic identity suite
"""

import sys

from app.models.run_config import RunConfig
from app.services.experiment_service import get_experiment_service
from app.services.report_service import get_report_service


def register(subparsers, common):
    parser = subparsers.add_parser("selftest", parents=[common], help="closed forms, oracles and duality checks")
    parser.set_defaults(handler=handle)


def handle(config: RunConfig, args) -> int:
    reports = get_report_service()
    report = get_experiment_service().selftest(config.seed)
    reports.emit(reports.render(report, config.format, config.no_timestamp), config.output, sys.stdout)
    return report.exit_code
