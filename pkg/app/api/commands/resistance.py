"""
resistance <file> - effective resistance of a network file
"""

import sys

from app.core import extended
from app.models.run_config import RunConfig
from app.services.report_service import get_report_service
from app.services.resistor_service import get_resistor_service


def register(subparsers, common):
    parser = subparsers.add_parser("resistance", parents=[common], help="effective resistance of a network file")
    parser.add_argument("network_file", help="network in the 'terminals' / 'edge' text format")
    parser.add_argument("--merge-parallel", dest="merge_parallel", action="store_true")
    parser.set_defaults(handler=handle)


def handle(config: RunConfig, args) -> int:
    resistor = get_resistor_service()
    reports = get_report_service()

    net = resistor.read_network(config.network_file)
    if args.merge_parallel:
        net = resistor.merge_parallel(net)
    value = resistor.effective_resistance(net)

    if (args.format or "text") == "text":
        content = (extended.format_resistance(value) + "\n").encode("utf-8")
    else:
        qnet = resistor.quotient(net)
        content = reports.to_json(
            {
                "network": config.network_file,
                "vertices": len(net.vertices),
                "edges": len(net.edges),
                "classes": qnet.n_classes,
                "resistance": value,
            }
        )
    reports.emit(content, config.output, sys.stdout)
    return 0
