"""
gw - sample a Poisson family tree and print R(T_[d]) by depth
"""

import sys

from app.core.seeding import STREAM_TREE_PRIMARY, trial_rng
from app.models.distributions import OffspringLaw
from app.models.run_config import RunConfig
from app.services.report_service import get_report_service
from app.services.resistor_service import get_resistor_service
from app.services.tree_service import get_tree_service

from . import require

DEFAULT_DEPTH = 10


def register(subparsers, common):
    parser = subparsers.add_parser("gw", parents=[common], help="sample a Galton-Watson tree")
    parser.add_argument("--gamma", type=float, help="Poisson offspring mean")
    parser.add_argument("--dist", help="edge law: point:c | uniform:a,b | exp:rate | discrete:x:p,...")
    parser.add_argument("--depth", type=int, help=f"generations to grow (default {DEFAULT_DEPTH})")
    parser.add_argument("--node-cap", dest="node_cap", type=int)
    parser.add_argument("--export", help="write T_[depth] as a network file")
    parser.set_defaults(handler=handle)


def handle(config: RunConfig, args) -> int:
    require(config, "gamma")
    trees = get_tree_service()
    reports = get_report_service()

    law = OffspringLaw.poisson(config.gamma)
    depth = DEFAULT_DEPTH if config.depth is None else config.depth
    tree = trees.sample_tree(
        law, config.distribution, trial_rng(config.seed, 0, STREAM_TREE_PRIMARY),
        depth_cap=depth, node_cap=config.node_cap,
    )
    last = min(depth, tree.complete_depth)
    profile = trees.resistance_profile(tree, last)
    rows = [
        {"depth": d, "generation_size": tree.generation_size(d), "resistance": r}
        for d, r in enumerate(profile, start=1)
    ]

    if config.export and last >= 1 and not trees.generation_empty(tree, last):
        get_resistor_service().write_network(trees.tree_to_network(tree, last), config.export)

    payload = {
        "gamma": config.gamma,
        "F": config.distribution.spec,
        "seed": config.seed,
        "extinction_probability": trees.extinction_probability(law),
        "tree": tree.to_dict(),
        "resistance_by_depth": rows,
    }
    if config.format == "text":
        head = (
            f"gamma: {config.gamma}\nF: {payload['F']}\nseed: {config.seed}\n"
            f"extinction_probability: {payload['extinction_probability']:.12g}\n"
            f"nodes: {tree.size}  truncated: {tree.truncated}\n\n"
        )
        content = (head + (reports.table_text(rows) if rows else "(root only)\n")).encode("utf-8")
    else:
        content = reports.to_json(payload)
    reports.emit(content, config.output, sys.stdout)
    return 0
