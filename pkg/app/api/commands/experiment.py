"""
experiment {t1|t2|t3|lemma7|coupling|lemma11|lemma2|lemma3|prop1}
"""

import logging
import sys
from typing import get_args

from app.models.run_config import ExperimentName, RunConfig
from app.services.experiment_service import get_experiment_service
from app.services.report_service import get_report_service
from app.services.resistor_service import get_resistor_service

from . import require

logger = logging.getLogger(__name__)

DEFAULT_LAYERS = 2


def register(subparsers, common):
    parser = subparsers.add_parser("experiment", parents=[common], help="run a Monte Carlo experiment")
    parser.add_argument("experiment", choices=get_args(ExperimentName))
    parser.add_argument("--n", type=int)
    parser.add_argument("--n-list", dest="n_list", type=int, nargs="+", help="sizes for t2")
    parser.add_argument("--gamma", type=float)
    parser.add_argument("--gamma-schedule", dest="gamma_schedule", choices=["constant", "log_n", "sqrt_n"])
    parser.add_argument("--delta", type=float)
    parser.add_argument("--dist", help="edge law: point:c | uniform:a,b | exp:rate | discrete:x:p,...")
    parser.add_argument("--trials", type=int)
    parser.add_argument("--k", type=int, help="layer depth (lemma7) or N(n, k) depth (lemma11)")
    parser.add_argument("--K", type=float, help="resistance bound (lemma11, lemma2)")
    parser.add_argument("--depth", type=int, help="coupling depth m, or tree depth for lemma2/lemma3/prop1")
    parser.add_argument("--depth-cap", dest="depth_cap", type=int)
    parser.add_argument("--node-cap", dest="node_cap", type=int)
    parser.add_argument("--csv", help="raw samples as trial,value_or_inf,censored (t1, t3)")
    parser.add_argument(
        "--export", help="network of trial 0 (t1, t2, t3) or its exploration layers as JSON (lemma7)"
    )
    parser.set_defaults(handler=handle)


def _default(value, fallback):
    return fallback if value is None else value


def handle(config: RunConfig, args) -> int:
    experiments = get_experiment_service()
    reports = get_report_service()
    F = config.distribution
    seed, workers = config.seed, config.workers
    samples = None

    name = config.experiment
    if name == "t1":
        require(config, "n")
        report, samples = experiments.theorem1_experiment(
            config.n, config.gamma_n(config.n), F, config.trials, seed,
            schedule=config.gamma_schedule, workers=workers,
        )
    elif name == "t2":
        require(config, "gamma")
        if not config.sizes:
            require(config, "n_list")
        report = experiments.theorem2_experiment(config.sizes, config.gamma, F, config.trials, seed, workers=workers)
    elif name == "t3":
        require(config, "n")
        report, samples, _ = experiments.theorem3_experiment(
            config.n, config.gamma_n(config.n), F, config.trials, seed,
            depth_cap=config.depth_cap, node_cap=config.node_cap, workers=workers,
        )
    elif name == "lemma7":
        require(config, "n", "gamma")
        report = experiments.lemma7_experiment(
            config.n, config.gamma, _default(config.k, DEFAULT_LAYERS), config.trials, seed, F=F, workers=workers
        )
    elif name == "coupling":
        require(config, "n", "gamma", "delta")
        report = experiments.coupling_experiment(
            config.n, config.gamma, config.delta, config.trials, seed, m=config.depth, F=F, workers=workers
        )
    elif name == "lemma11":
        require(config, "n", "gamma", "delta")
        report = experiments.lemma11_experiment(
            config.n, config.gamma, config.delta, F, config.trials, seed, K=config.K, k=config.k, workers=workers
        )
    elif name == "lemma2":
        require(config, "gamma")
        report = experiments.lemma2_experiment(
            config.gamma, F, config.trials, seed,
            K=_default(config.K, 1.0), depth=_default(config.depth, 30), workers=workers,
        )
    elif name == "lemma3":
        require(config, "gamma")
        report = experiments.lemma3_experiment(
            config.gamma, F, config.trials, seed, horizon=_default(config.depth, 4), workers=workers
        )
    else:
        require(config, "gamma")
        report = experiments.prop1_experiment(
            config.gamma, F, config.trials, seed, depth=_default(config.depth, 6), workers=workers
        )

    if config.csv:
        if samples is None:
            logger.warning(f"⚠️ --csv is ignored for experiment {name}")
        else:
            reports.write_csv(samples, config.csv)
    if config.export:
        export_trial(config)

    reports.emit(reports.render(report, config.format, config.no_timestamp), config.output, sys.stdout)
    return report.exit_code


def export_trial(config: RunConfig) -> None:
    """Write what trial 0 sampled: the network for t1/t2/t3, the layers from 0 and inf for lemma7"""
    experiments = get_experiment_service()
    name = config.experiment
    if name in ("t1", "t3"):
        net = experiments.trial_network(config.n, config.gamma_n(config.n), config.distribution, config.seed)
        get_resistor_service().write_network(net, config.export)
    elif name == "t2":
        n = config.sizes[-1]
        net = experiments.trial_network(n, config.gamma, config.distribution, config.seed)
        get_resistor_service().write_network(net, config.export)
    elif name == "lemma7":
        k = _default(config.k, DEFAULT_LAYERS)
        layers = experiments.trial_layers(config.n, config.gamma, k, config.distribution, config.seed)
        payload = {
            "n": config.n,
            "gamma": config.gamma,
            "k": k,
            "seed": config.seed,
            "explorations": {root: exploration.to_dict() for root, exploration in layers.items()},
        }
        get_report_service().write_json(payload, config.export)
    else:
        logger.warning(f"⚠️ --export is ignored for experiment {name}")
