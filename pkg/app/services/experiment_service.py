"""
Experiment Service - Monte Carlo harnesses with pass/fail verdicts
Each trial draws from its own (master_seed, trial_index, stream) generator and
results are reduced in trial order, so reports do not depend on worker count.
"""

import functools
import logging
import math
import time
from datetime import datetime, timezone
from typing import Callable, Dict, List, NamedTuple, Optional, Sequence, Tuple

import numpy as np
from scipy import stats

from app.core import extended
from app.core.config import Settings, get_settings
from app.core.exceptions import ParamOutOfRange, TrialFailed
from app.core.seeding import (
    STREAM_AUXILIARY,
    STREAM_NETWORK,
    STREAM_TREE_PRIMARY,
    STREAM_TREE_SECONDARY,
    parallel_map,
    trial_rng,
)
from app.models.distributions import Discrete, EdgeDistribution, OffspringLaw, Uniform
from app.models.edge_law import INFINITY_VERTEX, EdgeLaw, ExplorationLayers
from app.models.empirical import EmpiricalLaw
from app.models.network import ResistorNetwork
from app.models.report import Criterion, ExperimentReport
from app.services.complete_model_service import get_complete_model_service
from app.services.coupling_service import get_coupling_service
from app.services.resistor_service import get_resistor_service
from app.services.statistics_service import get_statistics_service
from app.services.tree_service import get_tree_service
from app.services.walk_service import get_walk_service

logger = logging.getLogger(__name__)

EPS_GRID = (1e-1, 1e-2, 1e-3)  # descending; the last one is held to the 0.05 gap
SURVIVAL_NODE_CAP = 5000  # a tree this large dies out with negligible probability


# ==================== TRIAL TASKS ====================


class RnTask(NamedTuple):
    trial: int
    seed: int
    n: int
    gamma_n: float
    F: EdgeDistribution


class LimitTask(NamedTuple):
    trial: int
    seed: int
    law: OffspringLaw
    F: EdgeDistribution
    depth_cap: Optional[int]
    node_cap: Optional[int]
    eps: Optional[float]


class LayerTask(NamedTuple):
    trial: int
    seed: int
    n: int
    gamma: float
    k: int
    F: EdgeDistribution


class CouplingTask(NamedTuple):
    trial: int
    seed: int
    n: int
    gamma: float
    delta: float
    m: int
    F: EdgeDistribution


class TwoTreeTask(NamedTuple):
    trial: int
    seed: int
    n: int
    gamma: float
    delta: float
    F: EdgeDistribution
    k: int
    m: int
    s: int
    K: float


class TreeTask(NamedTuple):
    trial: int
    seed: int
    law: OffspringLaw
    F: EdgeDistribution
    depth: int
    node_cap: Optional[int]
    K: float = math.inf


def _guarded(fn: Callable):
    """Re-raise any failure inside a trial as TrialFailed carrying the trial index"""

    @functools.wraps(fn)
    def wrapper(task):
        try:
            return fn(task)
        except Exception as e:
            logger.error(f"❌ Trial {task.trial} failed: {str(e)}")
            raise TrialFailed(task.trial, e) from e

    return wrapper


# ==================== TRIAL FUNCTIONS ====================


@_guarded
def rn_trial(task: RnTask) -> float:
    model = get_complete_model_service()
    rng = trial_rng(task.seed, task.trial, STREAM_NETWORK)
    return model.compute_Rn(model.sample_complete_network(task.n, task.gamma_n, task.F, rng))


@_guarded
def limit_trial(task: LimitTask) -> Tuple[float, bool]:
    """R' + R'' from two independent trees; censored when a finite sum rests on a censored estimate"""
    trees = get_tree_service()
    estimates = [
        trees.limit_resistance_estimate(
            task.law,
            task.F,
            trial_rng(task.seed, task.trial, stream),
            depth_cap=task.depth_cap,
            node_cap=task.node_cap,
            eps=task.eps,
        )
        for stream in (STREAM_TREE_PRIMARY, STREAM_TREE_SECONDARY)
    ]
    value = extended.series(estimates[0].value, estimates[1].value)
    censored = math.isfinite(value) and any(e.censored for e in estimates)
    return value, censored


@_guarded
def layer_trial(task: LayerTask) -> Tuple[Tuple[int, ...], bool]:
    """Layer profile from 0 and whether the layers from 0 and from inf are disjoint"""
    model = get_complete_model_service()
    law = EdgeLaw(task.n, task.gamma, task.F, trial_rng(task.seed, task.trial, STREAM_NETWORK))
    zero = model.explore_layers(law, 0, task.k)
    infinity = model.explore_layers(law, INFINITY_VERTEX, task.k)
    return zero.profile, not (zero.vertices & infinity.vertices)


@_guarded
def coupling_trial(task: CouplingTask) -> dict:
    rng = trial_rng(task.seed, task.trial, STREAM_AUXILIARY)
    law = EdgeLaw(task.n, task.gamma, task.F, rng)
    first, second = get_coupling_service().coupled_pair(law, task.delta, task.m, rng)
    explored = get_complete_model_service().explore_layers(law, 0, task.m)
    return {
        "inclusion": first.inclusion,
        "pair_inclusion": first.inclusion and second.inclusion,
        "overflow": first.overflow,
        "within_exploration": first.tau_tilde.vertices <= explored.vertices,
        "offspring": first.offspring_counts,
    }


@_guarded
def two_tree_trial(task: TwoTreeTask) -> dict:
    """Connection of N(n, k) and the comparison of rho(n, m_n) with the script-R bound"""
    trees = get_tree_service()
    model = get_complete_model_service()
    law = EdgeLaw(task.n, task.gamma, task.F, trial_rng(task.seed, task.trial, STREAM_NETWORK))
    offspring = OffspringLaw.poisson(task.delta)
    depth = max(task.k, task.m)
    pair = tuple(
        trees.sample_tree(offspring, task.F, trial_rng(task.seed, task.trial, stream), depth_cap=depth)
        for stream in (STREAM_TREE_PRIMARY, STREAM_TREE_SECONDARY)
    )

    survived = not any(trees.generation_empty(tree, task.k) for tree in pair)
    result = {
        "survived": survived,
        "connected": survived and model.connected_N(law, task.k, pair),
        "rho": None,
        "script_R": None,
    }
    if math.isfinite(task.K):
        result["rho"] = model.rho(law, task.m, pair)
        result["script_R"] = model.script_R(task.n, task.K, pair, task.s, task.gamma)
    return result


@_guarded
def prop1_trial(task: TreeTask) -> dict:
    trees = get_tree_service()
    tree = trees.sample_tree(
        task.law, task.F, trial_rng(task.seed, task.trial, STREAM_TREE_PRIMARY),
        depth_cap=task.depth, node_cap=task.node_cap,
    )
    if trees.generation_empty(tree, task.depth):
        return {"alive": False, "monotone": True, "gap": 0.0}

    base = trees.truncated_resistance(tree, task.depth)
    raised = [trees.epsilon_resistance(tree, task.depth, eps) for eps in EPS_GRID]
    chain = raised + [base]
    return {
        "alive": True,
        "monotone": all(a >= b - 1e-12 for a, b in zip(chain, chain[1:])),
        "gap": raised[-1] - base,
    }


@_guarded
def lemma3_trial(task: TreeTask) -> Optional[dict]:
    trees = get_tree_service()
    rng = trial_rng(task.seed, task.trial, STREAM_TREE_PRIMARY)
    tree = trees.sample_tree(task.law, task.F, rng, depth_cap=task.depth, node_cap=task.node_cap)
    generation = tree.generation
    candidates = np.flatnonzero((generation >= 1) & (generation < task.depth))
    if candidates.size == 0:
        return None

    x = int(rng.choice(candidates))
    try:
        bound = get_walk_service().lemma3_bound_check(tree, x, task.depth)
    except ParamOutOfRange:
        return None  # zero path and zero descendant resistance: the bound is undefined
    return {"lhs": bound.lhs, "rhs": bound.rhs, "holds": bound.holds}


@_guarded
def survival_trial(task: TreeTask) -> dict:
    trees = get_tree_service()
    tree = trees.sample_tree(
        task.law, task.F, trial_rng(task.seed, task.trial, STREAM_TREE_PRIMARY),
        depth_cap=task.depth, node_cap=task.node_cap,
    )
    filtered = trees.filter_tree(tree, task.K)
    extinct_at = tree.extinct_at
    return {
        "extinct": extinct_at is not None and extinct_at <= task.depth,
        "filtered_children": filtered.generation_size(1),
        "filtered_reaches_last": filtered.depth == tree.depth and tree.depth > 0,
    }


# ==================== HELPERS ====================


def laplacian_oracle(net: ResistorNetwork) -> float:
    """Dense pseudo-inverse resistance for networks with positive finite edges and singleton terminals"""
    index = net.index
    size = len(net.vertices)
    laplacian = np.zeros((size, size))
    for edge in net.edges:
        g = extended.conductance(edge.r)
        i, j = index[edge.u], index[edge.v]
        laplacian[i, i] += g
        laplacian[j, j] += g
        laplacian[i, j] -= g
        laplacian[j, i] -= g
    x = np.zeros(size)
    x[index[next(iter(net.a0))]] = 1.0
    x[index[next(iter(net.a1))]] = -1.0
    return float(x @ np.linalg.pinv(laplacian) @ x)


def _complete_graph(m: int) -> ResistorNetwork:
    edges = [(i, j, 1.0) for i in range(m) for j in range(i + 1, m)]
    return ResistorNetwork.build(edges, a0=[0], a1=[1], vertices=range(m))


def _random_network(rng: np.random.Generator, size: int = 8) -> ResistorNetwork:
    """Sparse random network with some zero and some infinite edges"""
    edges = []
    for i in range(size):
        for j in range(i + 1, size):
            if rng.random() < 0.45:
                kind = rng.random()
                r = 0.0 if kind < 0.1 else math.inf if kind < 0.2 else float(rng.uniform(0.5, 3.0))
                edges.append((i, j, r))
    return ResistorNetwork.build(edges, a0=[0], a1=[size - 1], vertices=range(size))


class ExperimentService:
    """Desk-scale experiments for the limit theorems and their lemmas"""

    def __init__(self, settings: Optional[Settings] = None):
        self.settings = settings or get_settings()
        self.resistor = get_resistor_service()
        self.trees = get_tree_service()
        self.model = get_complete_model_service()
        self.coupling = get_coupling_service()
        self.walks = get_walk_service()
        self.stats = get_statistics_service()

    def _workers(self, workers: Optional[int]) -> int:
        return self.settings.WORKERS if workers is None else workers

    @staticmethod
    def _report(name: str, seed: int, params: dict, started: float, **fields) -> ExperimentReport:
        report = ExperimentReport(
            experiment=name,
            master_seed=seed,
            params=params,
            runtime_seconds=round(time.perf_counter() - started, 3),
            created_at=datetime.now(timezone.utc).isoformat(timespec="seconds"),
            **fields,
        )
        logger.info(f"🏁 Experiment {name} finished: {report.verdict.value}")
        return report

    # ==================== SAMPLED LAWS ====================

    def sample_Rn_law(
        self,
        n: int,
        gamma_n: float,
        F: EdgeDistribution,
        trials: int,
        seed: int,
        workers: Optional[int] = None,
    ) -> EmpiricalLaw:
        """Law of R_n over independent networks"""
        if trials < 1:
            raise ParamOutOfRange(f"trials must be >= 1, got {trials}")
        if not 0 <= gamma_n <= n:
            raise ParamOutOfRange(f"gamma_n must lie in [0, n], got {gamma_n}")
        tasks = [RnTask(i, seed, n, gamma_n, F) for i in range(trials)]
        values = parallel_map(rn_trial, tasks, self._workers(workers))
        law = EmpiricalLaw.from_values(values)
        logger.debug(f"R_n law at n={n}: atom {law.atom_at_infinity:.4f}")
        return law

    def sample_limit_law(
        self,
        gamma: float,
        F: EdgeDistribution,
        trials: int,
        seed: int,
        depth_cap: Optional[int] = None,
        node_cap: Optional[int] = None,
        eps: Optional[float] = None,
        workers: Optional[int] = None,
    ) -> EmpiricalLaw:
        """Law of R'(gamma) + R''(gamma) with per-trial censoring flags"""
        if trials < 1:
            raise ParamOutOfRange(f"trials must be >= 1, got {trials}")
        law = OffspringLaw.poisson(gamma)
        tasks = [LimitTask(i, seed, law, F, depth_cap, node_cap, eps) for i in range(trials)]
        results = parallel_map(limit_trial, tasks, self._workers(workers))
        empirical = EmpiricalLaw.from_values([v for v, _ in results], censored=[c for _, c in results])
        if empirical.censored_count:
            logger.warning(f"⚠️ {empirical.censored_count}/{trials} limit samples censored")
        return empirical

    # ==================== THEOREMS ====================

    def theorem2_experiment(
        self,
        n_list: Sequence[int],
        gamma: float,
        F: EdgeDistribution,
        trials: int,
        seed: int,
        threshold: float = 0.93,
        workers: Optional[int] = None,
    ) -> ExperimentReport:
        """P{R_n = inf} for gamma <= 1 across growing n"""
        started = time.perf_counter()
        sizes = sorted(n_list)
        if not sizes:
            raise ParamOutOfRange("theorem 2 needs at least one n")
        logger.info(f"🔬 Theorem 2 experiment: gamma={gamma}, n={sizes}, trials={trials}")

        per_n = []
        for n in sizes:
            law = self.sample_Rn_law(n, gamma, F, trials, seed, workers)
            per_n.append({"n": n, "atom": law.atom_at_infinity, "stderr": law.atom_stderr})

        criteria: List[Criterion] = []
        asserted = gamma < 1
        criteria.append(
            Criterion.check(f"atom_at_n={sizes[-1]}", per_n[-1]["atom"], threshold, ">=", asserted=asserted)
        )
        for prev, cur in zip(per_n, per_n[1:]):
            sigma = math.hypot(prev["stderr"], cur["stderr"])
            criteria.append(
                Criterion.check(
                    f"atom_nondecreasing_{prev['n']}_to_{cur['n']}",
                    cur["atom"] - prev["atom"],
                    -2 * sigma,
                    ">=",
                    asserted=asserted,
                )
            )
        params = {"n_list": sizes, "gamma": gamma, "F": F.spec, "trials": trials}
        return self._report("t2", seed, params, started, statistics={"per_n": per_n}, criteria=criteria)

    def theorem3_experiment(
        self,
        n: int,
        gamma: float,
        F: EdgeDistribution,
        trials: int,
        seed: int,
        tol_atom: float = 0.03,
        tol_ks: float = 0.08,
        depth_cap: Optional[int] = None,
        node_cap: Optional[int] = None,
        workers: Optional[int] = None,
    ) -> Tuple[ExperimentReport, EmpiricalLaw, EmpiricalLaw]:
        """R_n against R' + R'': atom at inf and finiteness-conditioned KS"""
        started = time.perf_counter()
        logger.info(f"🔬 Theorem 3 experiment: n={n}, gamma={gamma}, F={F.spec}, trials={trials}")
        rn = self.sample_Rn_law(n, gamma, F, trials, seed, workers)
        limit = self.sample_limit_law(gamma, F, trials, seed, depth_cap, node_cap, workers=workers)

        q = self.trees.extinction_probability(OffspringLaw.poisson(gamma))
        target = 2 * q - q * q
        ks = self.stats.ks_distance(rn, limit)
        statistics = {
            "q": q,
            "target_atom": target,
            "rn": rn.summary(),
            "limit": limit.summary(),
            "censored_fraction": limit.censored_fraction,
            **ks.to_dict(),
        }
        if ks.defined:
            statistics["ks_pvalue"] = float(stats.ks_2samp(rn.finite_samples, limit.finite_samples).pvalue)

        criteria = [
            Criterion.check("atom_gap_to_2q_minus_q2", abs(rn.atom_at_infinity - target), tol_atom),
            Criterion.check("ks_finite", ks.ks_finite, tol_ks, asserted=ks.defined),
            Criterion.check("limit_atom_gap", abs(limit.atom_at_infinity - target), tol_atom, asserted=False),
        ]
        abstained = limit.censored_fraction >= self.settings.CENSOR_ABSTAIN_FRACTION
        reason = None
        if abstained:
            reason = f"censored fraction {limit.censored_fraction:.4f} >= {self.settings.CENSOR_ABSTAIN_FRACTION}"
            logger.warning(f"⚠️ Theorem 3 abstains: {reason}")

        params = {
            "n": n, "gamma": gamma, "F": F.spec, "trials": trials,
            "depth_cap": depth_cap or self.settings.DEPTH_CAP,
            "node_cap": node_cap or self.settings.NODE_CAP,
        }
        report = self._report(
            "t3", seed, params, started,
            statistics=statistics, criteria=criteria, abstained=abstained, abstain_reason=reason,
        )
        return report, rn, limit

    def theorem1_target(self, F: EdgeDistribution) -> float:
        """2 / integral(1/x dF), 0 when the integral diverges"""
        inverse_mean = F.inverse_mean()
        return 0.0 if math.isinf(inverse_mean) else 2.0 / inverse_mean

    def theorem1_experiment(
        self,
        n: int,
        gamma_n: float,
        F: EdgeDistribution,
        trials: int,
        seed: int,
        band: float = 0.2,
        schedule: str = "constant",
        workers: Optional[int] = None,
    ) -> Tuple[ExperimentReport, EmpiricalLaw]:
        """Median of gamma(n) R_n against 2 / integral(1/x dF)"""
        started = time.perf_counter()
        if not gamma_n > 0:
            raise ParamOutOfRange(f"theorem 1 needs gamma(n) > 0, got {gamma_n}")
        logger.info(f"🔬 Theorem 1 experiment: n={n}, gamma(n)={gamma_n:.4f}, F={F.spec}")

        scaled = self.sample_Rn_law(n, gamma_n, F, trials, seed, workers).scaled(gamma_n)
        target = self.theorem1_target(F)
        low, high = (0.0, 2 * band) if target == 0 else (target * (1 - band), target * (1 + band))
        median = scaled.median
        criteria = [
            Criterion.check("median_above_band_low", median, low, ">="),
            Criterion.check("median_below_band_high", median, high, "<="),
        ]
        statistics = {"target": target, "band": [low, high], "median": median, "scaled": scaled.summary()}
        params = {"n": n, "gamma_n": gamma_n, "gamma_schedule": schedule, "F": F.spec, "trials": trials}
        report = self._report("t1", seed, params, started, statistics=statistics, criteria=criteria)
        return report, scaled

    # ==================== LEMMAS ====================

    def lemma7_experiment(
        self,
        n: int,
        gamma: float,
        k: int,
        trials: int,
        seed: int,
        F: Optional[EdgeDistribution] = None,
        tv_threshold: float = 0.05,
        disjoint_threshold: float = 0.98,
        assert_thresholds: Optional[bool] = None,
        workers: Optional[int] = None,
    ) -> ExperimentReport:
        """Layer profiles from 0 against the Poisson(gamma) family tree profile law"""
        started = time.perf_counter()
        if k < 1:
            raise ParamOutOfRange(f"k must be >= 1, got {k}")
        F = F or Uniform(0.5, 1.5)
        asserted = n >= 100 if assert_thresholds is None else assert_thresholds
        logger.info(f"🔬 Layer experiment: n={n}, gamma={gamma}, k={k}, trials={trials}")

        tasks = [LayerTask(i, seed, n, gamma, k, F) for i in range(trials)]
        results = parallel_map(layer_trial, tasks, self._workers(workers))
        profiles = [profile for profile, _ in results]
        disjoint = sum(1 for _, d in results if d) / trials

        tv = self.stats.total_variation(profiles, lambda p: self.stats.gw_profile_probability(p, gamma))
        first_layer_tv = self.stats.binomial_poisson_tv(n + 1, gamma / n, gamma)
        statistics = {
            "tv_profile": tv,
            "disjoint_frequency": disjoint,
            "first_layer_tv_exact": first_layer_tv,
            "first_layer_tv_bound": gamma * gamma / n,
            "distinct_profiles": len(set(profiles)),
        }
        criteria = [
            Criterion.check("tv_profile", tv, tv_threshold, asserted=asserted),
            Criterion.check("disjoint_frequency", disjoint, disjoint_threshold, ">=", asserted=asserted),
        ]
        params = {"n": n, "gamma": gamma, "k": k, "trials": trials}
        return self._report("lemma7", seed, params, started, statistics=statistics, criteria=criteria)

    def coupling_experiment(
        self,
        n: int,
        gamma: float,
        delta: float,
        runs: int,
        seed: int,
        m: Optional[int] = None,
        F: Optional[EdgeDistribution] = None,
        inclusion_threshold: float = 0.9,
        gof_level: float = 0.01,
        workers: Optional[int] = None,
    ) -> ExperimentReport:
        """Marginal identity, Poisson(delta) offspring of the coupled tree, and inclusion frequency"""
        started = time.perf_counter()
        F = F or Uniform(0.5, 1.5)
        m = self.model.m_n(n, gamma) if m is None else m
        logger.info(f"🔬 Coupling experiment: n={n}, gamma={gamma}, delta={delta}, m={m}, runs={runs}")

        identity_gap = self.marginal_identity_gap(n + 1, gamma / n, delta)
        tasks = [CouplingTask(i, seed, n, gamma, delta, m, F) for i in range(runs)]
        results = parallel_map(coupling_trial, tasks, self._workers(workers))

        offspring = [c for r in results for c in r["offspring"]]
        inclusion = sum(r["inclusion"] for r in results) / runs
        within = all(r["within_exploration"] for r in results)
        statistics = {
            "m": m,
            "marginal_identity_gap": identity_gap,
            "inclusion_frequency": inclusion,
            "pair_inclusion_frequency": sum(r["pair_inclusion"] for r in results) / runs,
            "mean_overflow": float(np.mean([r["overflow"] for r in results])),
            "offspring_nodes": len(offspring),
        }
        criteria = [
            Criterion.check("marginal_identity_gap", identity_gap, 1e-12),
            Criterion.check("inclusion_frequency", inclusion, inclusion_threshold, ">="),
            Criterion.check("coupled_tree_within_exploration", float(within), 1.0, "=="),
        ]
        if offspring:
            gof = self.stats.poisson_goodness_of_fit(offspring, delta)
            statistics.update({"gof_statistic": gof.statistic, "gof_pvalue": gof.p_value, "gof_cells": gof.dof})
            criteria.append(Criterion.check("offspring_gof_pvalue", gof.p_value, gof_level, ">="))

        params = {"n": n, "gamma": gamma, "delta": delta, "m": m, "runs": runs, "F": F.spec}
        return self._report("coupling", seed, params, started, statistics=statistics, criteria=criteria)

    def marginal_identity_gap(self, candidates: int, p: float, delta: float, r_max: int = 10) -> float:
        """Largest |sum_q P{q} P{u <= r | q} - pi(r)| over r = 0..r_max"""
        gaps = [
            abs(self.coupling.marginal_identity(candidates, p, delta, r) - float(stats.poisson.cdf(r, delta)))
            for r in range(r_max + 1)
        ]
        return max(gaps)

    def lemma11_experiment(
        self,
        n: int,
        gamma: float,
        delta: float,
        F: EdgeDistribution,
        runs: int,
        seed: int,
        K: Optional[float] = None,
        k: Optional[int] = None,
        eps: float = 0.125,
        threshold: float = 0.9,
        workers: Optional[int] = None,
    ) -> ExperimentReport:
        """Conducting connection of N(n, k) given survival, and P{rho(n, m_n) <= script-R(n, K)}"""
        started = time.perf_counter()
        if not 1 < delta < gamma:
            raise ParamOutOfRange(f"needs 1 < delta < gamma, got delta={delta}, gamma={gamma}")
        if k is None:
            k = math.ceil((1 + 2 * eps) / (2 * math.log(delta)) * math.log(n))
        m = self.model.m_n(n, gamma)
        s = min(self.model.s_n(n), m)
        K = F.upper_bound if K is None else K
        bounded = 0 < K < math.inf
        logger.info(f"🔬 Two-tree experiment: n={n}, gamma={gamma}, delta={delta}, k={k}, m={m}")

        tasks = [TwoTreeTask(i, seed, n, gamma, delta, F, k, m, s, K if bounded else math.inf) for i in range(runs)]
        results = parallel_map(two_tree_trial, tasks, self._workers(workers))

        survived = [r for r in results if r["survived"]]
        statistics: Dict[str, object] = {"k": k, "m": m, "s": s, "K": K, "survived": len(survived)}
        criteria: List[Criterion] = []
        abstained, reason = False, None
        if survived:
            connection = sum(r["connected"] for r in survived) / len(survived)
            statistics["connection_probability"] = connection
            criteria.append(Criterion.check("connection_given_survival", connection, threshold, ">="))
        else:
            abstained, reason = True, "no run had both trees surviving to generation k"
            logger.warning(f"⚠️ Two-tree experiment abstains: {reason}")

        if bounded:
            dominated = sum(1 for r in results if r["rho"] <= r["script_R"]) / runs
            statistics["rho_below_script_R"] = dominated
            criteria.append(Criterion.check("rho_below_script_R", dominated, threshold, ">="))

        params = {"n": n, "gamma": gamma, "delta": delta, "F": F.spec, "runs": runs, "eps": eps}
        return self._report(
            "lemma11", seed, params, started,
            statistics=statistics, criteria=criteria, abstained=abstained, abstain_reason=reason,
        )

    def lemma2_experiment(
        self,
        gamma: float,
        F: EdgeDistribution,
        trials: int,
        seed: int,
        K: float = 1.0,
        depth: int = 30,
        tolerance: float = 0.02,
        workers: Optional[int] = None,
    ) -> ExperimentReport:
        """Extinct fraction against q, and the offspring mean gamma F(K) of filtered trees"""
        started = time.perf_counter()
        law = OffspringLaw.poisson(gamma)
        q = self.trees.extinction_probability(law)
        filtered_mean = gamma * F.cdf(K)
        logger.info(f"🔬 Survival experiment: gamma={gamma}, K={K}, trials={trials}")

        tasks = [TreeTask(i, seed, law, F, depth, SURVIVAL_NODE_CAP, K) for i in range(trials)]
        results = parallel_map(survival_trial, tasks, self._workers(workers))
        extinct = sum(r["extinct"] for r in results) / trials
        children = [r["filtered_children"] for r in results]
        reaching = sum(r["filtered_reaches_last"] for r in results) / trials

        statistics = {
            "q": q,
            "extinct_fraction": extinct,
            "filtered_offspring_mean": float(np.mean(children)),
            "expected_filtered_mean": filtered_mean,
            "filtered_reaching_last_generation": reaching,
        }
        criteria = [
            Criterion.check("extinct_fraction_gap", abs(extinct - q), tolerance),
            Criterion.check(
                "filtered_mean_within_3_sigma",
                float(self.stats.mean_within_sigma(children, filtered_mean)),
                1.0,
                "==",
            ),
        ]
        if filtered_mean > 1:
            criteria.append(Criterion.check("filtered_survival_positive", reaching, 0.0, ">"))
        params = {"gamma": gamma, "F": F.spec, "K": K, "depth": depth, "trials": trials}
        return self._report("lemma2", seed, params, started, statistics=statistics, criteria=criteria)

    def prop1_experiment(
        self,
        gamma: float,
        F: EdgeDistribution,
        trials: int,
        seed: int,
        depth: int = 6,
        gap_threshold: float = 0.05,
        workers: Optional[int] = None,
    ) -> ExperimentReport:
        """R^eps(T_[d]) decreases to R(T_[d]) as eps decreases"""
        started = time.perf_counter()
        if math.isinf(F.upper_bound):
            raise ParamOutOfRange("the epsilon check needs a bounded edge distribution")
        law = OffspringLaw.poisson(gamma)
        tasks = [TreeTask(i, seed, law, F, depth, None) for i in range(trials)]
        results = parallel_map(prop1_trial, tasks, self._workers(workers))
        alive = [r for r in results if r["alive"]]
        max_gap = max((r["gap"] for r in alive), default=0.0)
        monotone = sum(r["monotone"] for r in results) / trials

        statistics = {"alive": len(alive), "max_gap": max_gap, "monotone_fraction": monotone, "eps_grid": list(EPS_GRID)}
        criteria = [
            Criterion.check("monotone_fraction", monotone, 1.0, "=="),
            Criterion.check("max_gap_at_smallest_eps", max_gap, gap_threshold),
        ]
        params = {"gamma": gamma, "F": F.spec, "depth": depth, "trials": trials}
        return self._report("prop1", seed, params, started, statistics=statistics, criteria=criteria)

    def lemma3_experiment(
        self,
        gamma: float,
        F: EdgeDistribution,
        trials: int,
        seed: int,
        horizon: int = 4,
        workers: Optional[int] = None,
    ) -> ExperimentReport:
        """Exact escape probability against rho / (rho + r_m) on random truncations"""
        started = time.perf_counter()
        law = OffspringLaw.poisson(gamma)
        tasks = [TreeTask(i, seed, law, F, horizon, None) for i in range(trials)]
        results = [r for r in parallel_map(lemma3_trial, tasks, self._workers(workers)) if r is not None]
        violations = sum(1 for r in results if not r["holds"])
        slack = min((r["lhs"] - r["rhs"] for r in results), default=0.0)

        statistics = {"checked": len(results), "violations": violations, "min_slack": slack}
        criteria = [Criterion.check("violations", float(violations), 0.0, "==")]
        params = {"gamma": gamma, "F": F.spec, "horizon": horizon, "trials": trials}
        return self._report("lemma3", seed, params, started, statistics=statistics, criteria=criteria)

    # ==================== EXPORTS ====================

    def trial_network(
        self, n: int, gamma_n: float, F: EdgeDistribution, seed: int, trial: int = 0
    ) -> ResistorNetwork:
        """The complete network behind R_n in trial ``trial`` of sample_Rn_law"""
        if not 0 <= gamma_n <= n:
            raise ParamOutOfRange(f"gamma_n must lie in [0, n], got {gamma_n}")
        rng = trial_rng(seed, trial, STREAM_NETWORK)
        return self.model.sample_complete_network(n, gamma_n, F, rng)

    def trial_layers(
        self, n: int, gamma: float, k: int, F: EdgeDistribution, seed: int, trial: int = 0
    ) -> Dict[str, ExplorationLayers]:
        """Layers from 0 and from inf as explored in trial ``trial`` of lemma7_experiment"""
        if k < 0:
            raise ParamOutOfRange(f"k must be >= 0, got {k}")
        law = EdgeLaw(n, gamma, F, trial_rng(seed, trial, STREAM_NETWORK))
        return {str(root): self.model.explore_layers(law, root, k) for root in (0, INFINITY_VERTEX)}

    # ==================== SELF TEST ====================

    def selftest(self, seed: int) -> ExperimentReport:
        """Deterministic identities: closed forms, oracles, duality and the coupling marginal"""
        started = time.perf_counter()
        logger.info("🧪 Running self test")
        statistics: Dict[str, object] = {}
        criteria: List[Criterion] = []

        closed_forms = [
            (ResistorNetwork.build([("a", "b", 5.0)], ["a"], ["b"]), 5.0),
            (ResistorNetwork.build([("a", "b", 2.0), ("a", "b", 2.0)], ["a"], ["b"]), 1.0),
            (ResistorNetwork.build([("a", "x", 1.0), ("x", "b", 2.0)], ["a"], ["b"]), 3.0),
            (
                ResistorNetwork.build(
                    [("a", "c", 1.0), ("c", "b", 2.0), ("a", "d", 2.0), ("d", "b", 4.0), ("c", "d", 7.0)],
                    ["a"],
                    ["b"],
                ),
                2.0,
            ),
        ]
        sp_error = max(abs(self.resistor.effective_resistance(net) - value) for net, value in closed_forms)
        criteria.append(Criterion.check("series_parallel_error", sp_error, 1e-10))

        km_error = 0.0
        for m in range(4, 11):
            net = _complete_graph(m)
            value = self.resistor.effective_resistance(net)
            km_error = max(km_error, abs(value - 2.0 / m), abs(value - laplacian_oracle(net)))
        criteria.append(Criterion.check("complete_graph_error", km_error, 1e-10))

        rng = trial_rng(seed, 0, STREAM_AUXILIARY)
        duality_gap = 0.0
        for _ in range(20):
            qnet = self.resistor.quotient(_random_network(rng))
            if qnet.terminals_merged:
                continue
            solution = self.resistor.solve_potentials(qnet)
            for c in range(qnet.n_classes):
                if c in solution.floating or c in (qnet.a0_class, qnet.a1_class):
                    continue
                h = self.walks.hitting_probability(qnet, c, {qnet.a1_class}, {qnet.a0_class})
                duality_gap = max(duality_gap, abs(h - solution.values[c]))
        criteria.append(Criterion.check("duality_gap", duality_gap, 1e-10))

        q2 = self.trees.extinction_probability(OffspringLaw.poisson(2.0))
        residual = max(
            abs(q - math.exp(-g * (1 - q)))
            for g in (1.2, 2.0, 4.0)
            for q in [self.trees.extinction_probability(OffspringLaw.poisson(g))]
        )
        statistics["q2"] = q2
        criteria.append(Criterion.check("q2_error", abs(q2 - 0.203188), 1e-6))
        criteria.append(Criterion.check("extinction_residual", residual, 1e-12))

        criteria.append(Criterion.check("marginal_identity_gap", self.marginal_identity_gap(10001, 2e-4, 1.5), 1e-12))

        F = Discrete((0.0, 1.0, 2.0), (0.2, 0.5, 0.3))
        law = OffspringLaw.poisson(1.5)
        tree_gap = 0.0
        for i in range(50):
            tree = self.trees.sample_tree(law, F, trial_rng(seed, i, STREAM_TREE_PRIMARY), depth_cap=6)
            for d in range(1, min(tree.depth, 6) + 1):
                recursion = self.trees.truncated_resistance(tree, d)
                direct = self.resistor.effective_resistance(self.trees.tree_to_network(tree, d))
                tree_gap = max(tree_gap, abs(recursion - direct) / max(1.0, recursion))
        criteria.append(Criterion.check("tree_recursion_gap", tree_gap, 1e-9))

        for sub in (
            self.lemma3_experiment(2.0, Uniform(0.5, 1.5), 100, seed, workers=1),
            self.prop1_experiment(2.0, Uniform(0.5, 1.5), 100, seed, workers=1),
        ):
            statistics[sub.experiment] = sub.statistics
            criteria.extend(c.model_copy(update={"name": f"{sub.experiment}.{c.name}"}) for c in sub.criteria)

        return self._report("selftest", seed, {"seed": seed}, started, statistics=statistics, criteria=criteria)


# Global experiment service instance
experiment_service = ExperimentService()


def get_experiment_service() -> ExperimentService:
    """Get experiment service instance"""
    return experiment_service
