"""Graph-comparison metrics for estimated versus true group DAGs.

Edge-set metrics (precision/recall/F1, structural Hamming distance) treat
the graphs purely combinatorially.  The interventional distances count,
over all ordered node pairs, how many causal effects would be identified
incorrectly when adjustment sets are read off the estimated graph but the
data follows the true one:

- ``sid`` adjusts for the estimated parents of the cause,
- ``aaid`` adjusts for the estimated ancestors of the cause,
- ``oaid`` scores a causal order by applying ``aaid`` to its full
  super-DAG.

Validity of an adjustment set is decided against the true DAG with the
generalized adjustment criterion (forbidden-node check plus d-separation
in the back-door graph).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Optional

from .graphs import CausalOrder, GroupDag, d_separated, super_dag_from_order

__all__ = [
    "MetricsReport",
    "precision_recall_f1",
    "shd",
    "valid_adjustment",
    "sid",
    "aaid",
    "oaid",
    "compute_metrics",
]


@dataclass(frozen=True)
class MetricsReport:
    """All graph metrics for one estimated graph against the truth."""

    p: int
    precision: float
    recall: float
    f1: float
    shd: int
    sid: int
    aaid: int
    oaid: int

    def to_dict(self) -> dict:
        return {
            "p": self.p,
            "precision": self.precision,
            "recall": self.recall,
            "f1": self.f1,
            "shd": self.shd,
            "sid": self.sid,
            "aaid": self.aaid,
            "oaid": self.oaid,
        }


def _check_same_p(est: GroupDag, truth: GroupDag) -> None:
    if est.p != truth.p:
        raise ValueError(f"node counts differ: {est.p} vs {truth.p}")


def precision_recall_f1(
    est: GroupDag, truth: GroupDag
) -> tuple[float, float, float]:
    """Directed-edge precision, recall, and their harmonic mean.

    Conventions: with no estimated edges, precision is 1 if the truth is
    also empty and 0 otherwise; with no true edges, recall is 1.  F1 is 0
    when precision + recall is 0.
    """
    _check_same_p(est, truth)
    true_positives = len(est.edges & truth.edges)
    if est.edges:
        precision = true_positives / len(est.edges)
    else:
        precision = 1.0 if not truth.edges else 0.0
    recall = true_positives / len(truth.edges) if truth.edges else 1.0
    denom = precision + recall
    f1 = 2.0 * precision * recall / denom if denom > 0.0 else 0.0
    return precision, recall, f1


def shd(est: GroupDag, truth: GroupDag) -> int:
    """Number of node pairs whose edge status differs.

    Each pair is in one of three states (no edge, forward, backward); a
    reversal therefore costs 1, as does one missing or one extra edge.
    """
    _check_same_p(est, truth)
    count = 0
    for a in range(est.p):
        for b in range(a + 1, est.p):
            status_est = ((a, b) in est.edges, (b, a) in est.edges)
            status_truth = ((a, b) in truth.edges, (b, a) in truth.edges)
            count += status_est != status_truth
    return count


def _proper_causal_nodes(truth: GroupDag, x: int, y: int) -> set[int]:
    """Nodes other than ``x`` on some directed path from ``x`` to ``y``."""
    return {
        w
        for w in truth.descendants(x)
        if w == y or y in truth.descendants(w)
    }


def valid_adjustment(
    truth: GroupDag, x: int, y: int, z: Iterable[int]
) -> bool:
    """Generalized adjustment criterion for the effect of ``x`` on ``y``.

    ``z`` must avoid every node on a proper causal path from ``x`` to
    ``y`` (and their descendants), and must d-separate ``x`` from ``y``
    once the edges out of ``x`` that start such a path are removed.
    """
    z = frozenset(z)
    truth._check_node(x)
    truth._check_node(y)
    if x == y:
        raise ValueError("x and y must differ")
    if x in z or y in z:
        raise ValueError("z must not contain x or y")
    causal_nodes = _proper_causal_nodes(truth, x, y)
    forbidden = set(causal_nodes)
    for w in causal_nodes:
        forbidden |= truth.descendants(w)
    if z & forbidden:
        return False
    backdoor_edges = frozenset(
        (j, g) for (j, g) in truth.edges if not (j == x and g in causal_nodes)
    )
    backdoor = GroupDag(truth.p, backdoor_edges)
    return d_separated(backdoor, x, y, z)


def _interventional_errors(
    est: GroupDag, truth: GroupDag, adjustment_of: dict[int, set[int]]
) -> int:
    """Ordered pairs (x, y) whose effect the adjustment sets get wrong.

    When ``y`` sits inside the adjustment set for ``x``, the estimated
    graph claims ``x`` has no effect on ``y``; that claim is wrong exactly
    when ``y`` descends from ``x`` in the truth.  Otherwise the set must
    satisfy the generalized adjustment criterion in the truth.
    """
    errors = 0
    for x in range(est.p):
        adjustment = adjustment_of[x]
        descendants_truth = truth.descendants(x)
        for y in range(est.p):
            if y == x:
                continue
            if y in adjustment:
                errors += y in descendants_truth
            elif not valid_adjustment(truth, x, y, adjustment):
                errors += 1
    return errors


def sid(est: GroupDag, truth: GroupDag) -> int:
    """Structural interventional distance: parent-set adjustment errors."""
    _check_same_p(est, truth)
    return _interventional_errors(
        est, truth, {x: est.parents(x) for x in range(est.p)}
    )


def aaid(est: GroupDag, truth: GroupDag) -> int:
    """Ancestor adjustment identification distance.

    Like ``sid`` but adjusting for the proper ancestors of the cause in
    the estimated graph; zero whenever the two graphs share all causal
    orders.
    """
    _check_same_p(est, truth)
    return _interventional_errors(
        est, truth, {x: est.ancestors(x) for x in range(est.p)}
    )


def oaid(order: CausalOrder, truth: GroupDag) -> int:
    """Order adjustment identification distance of a causal order."""
    if order.p != truth.p:
        raise ValueError(f"node counts differ: {order.p} vs {truth.p}")
    return aaid(super_dag_from_order(order), truth)


def compute_metrics(
    est: GroupDag, truth: GroupDag, order: Optional[CausalOrder] = None
) -> MetricsReport:
    """All metrics at once; ``order`` defaults to a topological order of
    the estimated graph (the deterministic min-index one)."""
    _check_same_p(est, truth)
    if order is None:
        order = est.topological_order()
    precision, recall, f1 = precision_recall_f1(est, truth)
    return MetricsReport(
        p=est.p,
        precision=precision,
        recall=recall,
        f1=f1,
        shd=shd(est, truth),
        sid=sid(est, truth),
        aaid=aaid(est, truth),
        oaid=oaid(order, truth),
    )
