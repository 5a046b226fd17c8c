"""Two-phase causal structure discovery over variable groups.

Phase I learns a causal order by repeatedly finding a sink: each remaining
group is regressed (multi-output neural network) on all other remaining
groups, and the group whose residuals are least dependent on the rest —
by HSIC statistic or gamma p-value — is placed last among the remaining
positions.

Phase II prunes the full DAG implied by the order, either by multi-response
group-sparse regression of each group on its order-predecessors (keeping
the groups selected as active) or by greedy parent removal driven by
residual-independence tests on a held-out partition.  A random-order
baseline runs the same pruner on a uniformly drawn order.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field, replace
from typing import Optional, Sequence

import numpy as np

from ._seeds import derive_seed
from .data import GroupedDataset
from .graphs import CausalOrder, GroupDag, super_dag_from_order
from .hsic import hsic_gamma_pvalue, hsic_statistic
from .mlp import RegressorConfig, fit, predict, residuals
from .murgs import MurgsFit, backfit, select_lambda

__all__ = [
    "DiscoveryConfig",
    "IterationScores",
    "MurgsSelection",
    "DiscoveryResult",
    "learn_order",
    "murgs_parent_selection",
    "prune_murgs",
    "prune_greedy_ind",
    "discover",
    "random_order_baseline",
]

SINK_CRITERIA = ("statistic", "p_value")
PRUNING_METHODS = ("murgs", "greedy_ind", "none")

# Seed-path tags for the independent random streams of a discovery run.
_PATH_ORDER_FIT = 101
_PATH_GREEDY_SPLIT = 102
_PATH_GREEDY_FIT = 103
_PATH_BASELINE_ORDER = 104


@dataclass(frozen=True)
class DiscoveryConfig:
    """Settings for a full discovery run."""

    regressor: RegressorConfig = field(default_factory=RegressorConfig)
    sink_criterion: str = "statistic"
    pruning: str = "murgs"
    alpha: float = 0.01
    test_fraction: float = 0.25
    seed: int = 0

    def __post_init__(self):
        if self.sink_criterion not in SINK_CRITERIA:
            raise ValueError(
                f"sink_criterion must be one of {SINK_CRITERIA}, "
                f"got {self.sink_criterion!r}"
            )
        if self.pruning not in PRUNING_METHODS:
            raise ValueError(
                f"pruning must be one of {PRUNING_METHODS}, got {self.pruning!r}"
            )
        if not (0.0 < self.alpha < 1.0):
            raise ValueError("alpha must lie in (0, 1)")
        if not (0.0 < self.test_fraction < 1.0):
            raise ValueError("test_fraction must lie in (0, 1)")


@dataclass(frozen=True)
class IterationScores:
    """One sink-search round: every candidate's dependence score.

    ``scores[i]`` belongs to ``candidates[i]``; lower is more independent
    under the ``statistic`` criterion, higher under ``p_value``.
    """

    candidates: tuple[int, ...]
    scores: tuple[float, ...]
    chosen: int

    def to_dict(self) -> dict:
        return {
            "candidates": list(self.candidates),
            "scores": list(self.scores),
            "chosen": self.chosen,
        }


@dataclass(frozen=True)
class MurgsSelection:
    """Outcome of group-sparse parent selection for one response group."""

    response: int
    candidates: tuple[int, ...]
    lam: float
    parents: tuple[int, ...]
    fit: Optional[MurgsFit] = field(repr=False, default=None, compare=False)


@dataclass(frozen=True)
class DiscoveryResult:
    """Order, pruned graph, and diagnostics of one discovery run.

    ``timings`` (seconds per phase) is excluded from equality so that
    results of identical seeded runs compare equal.
    """

    order: CausalOrder
    graph: GroupDag
    per_iteration_scores: tuple[IterationScores, ...]
    lambdas: tuple[tuple[int, float], ...] = ()
    timings: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        super_edges = super_dag_from_order(self.order).edges
        if not self.graph.edges <= super_edges:
            raise ValueError("graph must be a subgraph of the order's super-DAG")

    def to_dict(self) -> dict:
        return {
            "order": list(self.order.sequence),
            "edges": sorted(map(list, self.graph.edges)),
            "per_iteration_scores": [
                s.to_dict() for s in self.per_iteration_scores
            ],
            "lambdas": [[node, lam] for node, lam in self.lambdas],
        }


def _dependence_score(
    residual_matrix: np.ndarray, rest: np.ndarray, criterion: str
) -> float:
    if criterion == "statistic":
        return float(hsic_statistic(residual_matrix, rest).statistic)
    return float(hsic_gamma_pvalue(residual_matrix, rest).p_value)


def learn_order(
    ds: GroupedDataset, cfg: Optional[DiscoveryConfig] = None
) -> tuple[CausalOrder, tuple[IterationScores, ...]]:
    """Sink-elimination order search (discovery Phase I).

    While more than one group remains, each remaining group is regressed
    on the others and scored by the dependence between its residuals and
    the other groups' values; the least dependent group becomes the
    latest remaining position in the order.
    """
    cfg = cfg or DiscoveryConfig()
    p = ds.spec.p
    if p < 1:
        raise ValueError("dataset must contain at least one group")
    remaining = list(range(p))
    order_tail: list[int] = []
    iterations: list[IterationScores] = []
    round_index = 0
    while len(remaining) > 1:
        scores: list[float] = []
        for g in remaining:
            rest = ds.groups_view([j for j in remaining if j != g])
            own = ds.group_view(g)
            reg_cfg = replace(
                cfg.regressor,
                seed=derive_seed(cfg.seed, _PATH_ORDER_FIT, round_index, g),
            )
            model = fit(rest, own, reg_cfg)
            resid = residuals(model, rest, own)
            scores.append(_dependence_score(resid, rest, cfg.sink_criterion))
        if cfg.sink_criterion == "statistic":
            best = min(range(len(remaining)), key=lambda i: (scores[i], remaining[i]))
        else:
            best = min(range(len(remaining)), key=lambda i: (-scores[i], remaining[i]))
        sink = remaining[best]
        iterations.append(
            IterationScores(tuple(remaining), tuple(scores), sink)
        )
        order_tail.insert(0, sink)
        remaining.remove(sink)
        round_index += 1
    sequence = tuple(remaining + order_tail)
    return CausalOrder(sequence), tuple(iterations)


def murgs_parent_selection(
    ds: GroupedDataset,
    response: int,
    candidates: Sequence[int],
    *,
    lam: Optional[float] = None,
    grid_size: int = 10,
) -> MurgsSelection:
    """Group-sparse selection of ``response``'s parents among ``candidates``.

    With ``lam=None`` the penalty is chosen by generalized cross
    validation along the standard grid; otherwise the given penalty is
    used directly.
    """
    candidates = tuple(candidates)
    if response in candidates:
        raise ValueError("response group cannot be its own candidate parent")
    if len(set(candidates)) != len(candidates):
        raise ValueError("candidate groups must be distinct")
    Y = ds.group_view(response)
    if not candidates:
        return MurgsSelection(response, (), 0.0, (), None)
    X_groups = [ds.group_view(g) for g in candidates]
    if lam is None:
        lam, fitted = select_lambda(X_groups, Y, grid_size=grid_size)
    else:
        fitted = backfit(X_groups, Y, lam)
    parents = tuple(
        candidates[idx] for idx in sorted(fitted.active_groups)
    )
    return MurgsSelection(response, candidates, float(lam), parents, fitted)


def prune_murgs(
    ds: GroupedDataset,
    order: CausalOrder,
    *,
    grid_size: int = 10,
) -> tuple[GroupDag, tuple[tuple[int, float], ...]]:
    """Keep, for each group, the order-predecessors its group-sparse
    regression marks active.  Returns the graph and per-node penalties."""
    _check_order_matches(ds, order)
    edges: set[tuple[int, int]] = set()
    lambdas: list[tuple[int, float]] = []
    for position, j in enumerate(order.sequence):
        if position == 0:
            continue
        selection = murgs_parent_selection(
            ds, j, order.sequence[:position], grid_size=grid_size
        )
        lambdas.append((j, selection.lam))
        edges.update((parent, j) for parent in selection.parents)
    return GroupDag(ds.spec.p, frozenset(edges)), tuple(lambdas)


def _mean_model_residuals(
    train: np.ndarray, evaluate: np.ndarray
) -> np.ndarray:
    return evaluate - train.mean(axis=0)


def prune_greedy_ind(
    ds: GroupedDataset,
    order: CausalOrder,
    *,
    alpha: float = 0.01,
    test_fraction: float = 0.25,
    regressor: Optional[RegressorConfig] = None,
    seed: int = 0,
    passes: int = 1,
) -> GroupDag:
    """Greedy parent removal guided by held-out residual independence.

    Rows are split once (seeded shuffle; the last ``ceil(test_fraction*n)``
    shuffled rows form the test partition).  For each group, parents are
    visited in ascending order position: a parent is dropped for good if,
    after refitting the regressor without it on the fit partition, the
    residuals on the test partition still look independent of all the
    group's candidate parents (gamma p-value above ``alpha``).
    """
    _check_order_matches(ds, order)
    if not (alpha > 0.0):
        raise ValueError("alpha must be positive")
    if not (0.0 < test_fraction < 1.0):
        raise ValueError("test_fraction must lie in (0, 1)")
    if passes < 1:
        raise ValueError("passes must be at least 1")
    regressor = regressor or RegressorConfig()
    n = ds.n
    n_test = int(np.ceil(test_fraction * n))
    n_fit = n - n_test
    if n_fit < 10:
        raise ValueError(
            f"fit partition has {n_fit} rows; at least 10 are required"
        )
    if n_test < 4:
        raise ValueError(
            f"test partition has {n_test} rows; at least 4 are required"
        )
    shuffle = np.random.default_rng(
        derive_seed(seed, _PATH_GREEDY_SPLIT)
    ).permutation(n)
    fit_rows, test_rows = shuffle[:n_fit], shuffle[n_fit:]

    edges: set[tuple[int, int]] = set()
    for position, j in enumerate(order.sequence):
        candidates = list(order.sequence[:position])
        if not candidates:
            continue
        own_fit = ds.group_view(j)[fit_rows]
        own_test = ds.group_view(j)[test_rows]
        all_candidates_test = ds.groups_view(candidates)[test_rows]
        current = list(candidates)
        attempt = 0
        for _ in range(passes):
            for parent in candidates:
                if parent not in current:
                    continue
                trial = [g for g in current if g != parent]
                if trial:
                    X = ds.groups_view(trial)
                    reg_cfg = replace(
                        regressor,
                        seed=derive_seed(seed, _PATH_GREEDY_FIT, j, attempt),
                    )
                    model = fit(X[fit_rows], own_fit, reg_cfg)
                    resid = own_test - predict(model, X[test_rows])
                else:
                    resid = _mean_model_residuals(own_fit, own_test)
                attempt += 1
                p_value = hsic_gamma_pvalue(resid, all_candidates_test).p_value
                if p_value > alpha:
                    current = trial
        edges.update((parent, j) for parent in current)
    return GroupDag(ds.spec.p, frozenset(edges))


def _check_order_matches(ds: GroupedDataset, order: CausalOrder) -> None:
    if order.p != ds.spec.p:
        raise ValueError(
            f"order covers {order.p} groups but dataset has {ds.spec.p}"
        )


def discover(
    ds: GroupedDataset, cfg: Optional[DiscoveryConfig] = None
) -> DiscoveryResult:
    """Full pipeline: learn an order, then prune its super-DAG."""
    cfg = cfg or DiscoveryConfig()
    start = time.perf_counter()
    order, iterations = learn_order(ds, cfg)
    after_order = time.perf_counter()
    lambdas: tuple[tuple[int, float], ...] = ()
    if cfg.pruning == "murgs":
        graph, lambdas = prune_murgs(ds, order)
    elif cfg.pruning == "greedy_ind":
        graph = prune_greedy_ind(
            ds,
            order,
            alpha=cfg.alpha,
            test_fraction=cfg.test_fraction,
            regressor=cfg.regressor,
            seed=cfg.seed,
        )
    else:
        graph = super_dag_from_order(order)
    end = time.perf_counter()
    return DiscoveryResult(
        order=order,
        graph=graph,
        per_iteration_scores=iterations,
        lambdas=lambdas,
        timings={
            "phase1_seconds": after_order - start,
            "phase2_seconds": end - after_order,
        },
    )


def random_order_baseline(
    ds: GroupedDataset, seed: int, *, grid_size: int = 10
) -> DiscoveryResult:
    """Uniformly random order followed by group-sparse pruning."""
    start = time.perf_counter()
    rng = np.random.default_rng(derive_seed(seed, _PATH_BASELINE_ORDER))
    order = CausalOrder(tuple(int(g) for g in rng.permutation(ds.spec.p)))
    after_order = time.perf_counter()
    graph, lambdas = prune_murgs(ds, order, grid_size=grid_size)
    end = time.perf_counter()
    return DiscoveryResult(
        order=order,
        graph=graph,
        per_iteration_scores=(),
        lambdas=lambdas,
        timings={
            "phase1_seconds": after_order - start,
            "phase2_seconds": end - after_order,
        },
    )
