"""Directed acyclic graphs over group indices.

Nodes are integers ``0..p-1``, each standing for one group of variables.
An edge ``(j, g)`` means ``j -> g``.  Provides reachability queries,
causal-order handling, super-DAG construction from an order, and a
Bayes-ball d-separation test.  External JSON uses group names; the
integer indexing stays internal.
"""

from __future__ import annotations

import json
from collections import deque
from dataclasses import dataclass, field
from typing import Iterable, Sequence


@dataclass(frozen=True)
class GroupDag:
    """Immutable DAG on ``p`` nodes with edge set ``{(j, g): j -> g}``."""

    p: int
    edges: frozenset[tuple[int, int]] = field(default_factory=frozenset)

    def __post_init__(self):
        if self.p < 0:
            raise ValueError(f"node count must be >= 0, got {self.p}")
        object.__setattr__(self, "edges", frozenset(self.edges))
        for j, g in self.edges:
            if not (0 <= j < self.p and 0 <= g < self.p):
                raise IndexError(f"edge ({j}, {g}) out of range for p={self.p}")
            if j == g:
                raise ValueError(f"self-loop at node {j}")
        if self.topological_order() is None:
            raise ValueError("edge set contains a directed cycle")

    def _check_node(self, g: int) -> None:
        if not (0 <= g < self.p):
            raise IndexError(f"node {g} out of range for p={self.p}")

    def parents(self, g: int) -> set[int]:
        self._check_node(g)
        return {j for (j, w) in self.edges if w == g}

    def children(self, g: int) -> set[int]:
        self._check_node(g)
        return {w for (j, w) in self.edges if j == g}

    def descendants(self, g: int) -> set[int]:
        """Nodes reachable from ``g`` by a directed path (excluding ``g``)."""
        self._check_node(g)
        seen: set[int] = set()
        frontier = deque(self.children(g))
        while frontier:
            w = frontier.popleft()
            if w in seen:
                continue
            seen.add(w)
            frontier.extend(self.children(w))
        seen.discard(g)
        return seen

    def ancestors(self, g: int) -> set[int]:
        """Nodes with a directed path to ``g`` (excluding ``g``)."""
        self._check_node(g)
        seen: set[int] = set()
        frontier = deque(self.parents(g))
        while frontier:
            w = frontier.popleft()
            if w in seen:
                continue
            seen.add(w)
            frontier.extend(self.parents(w))
        seen.discard(g)
        return seen

    def non_descendants(self, g: int) -> set[int]:
        self._check_node(g)
        return set(range(self.p)) - {g} - self.descendants(g)

    def topological_order(self) -> CausalOrder | None:
        """Deterministic (min-index) topological order, or None if cyclic."""
        indeg = [0] * self.p
        for _, g in self.edges:
            indeg[g] += 1
        ready = sorted(g for g in range(self.p) if indeg[g] == 0)
        out: list[int] = []
        while ready:
            w = ready.pop(0)
            out.append(w)
            for c in sorted(self.children(w)):
                indeg[c] -= 1
                if indeg[c] == 0:
                    ready.append(c)
            ready.sort()
        if len(out) != self.p:
            return None
        return CausalOrder(tuple(out))


@dataclass(frozen=True)
class CausalOrder:
    """Permutation of the nodes, listed from first (source side) to last."""

    sequence: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "sequence", tuple(self.sequence))
        p = len(self.sequence)
        if sorted(self.sequence) != list(range(p)):
            raise ValueError(f"not a permutation of 0..{p - 1}: {self.sequence}")

    @property
    def p(self) -> int:
        return len(self.sequence)

    def position(self, g: int) -> int:
        """0-based position of node ``g`` in the order."""
        return self.sequence.index(g)

    def positions(self) -> list[int]:
        """positions[g] = position of node g."""
        pos = [0] * self.p
        for i, g in enumerate(self.sequence):
            pos[g] = i
        return pos


def is_valid_order(dag: GroupDag, order: CausalOrder) -> bool:
    """True iff every edge ``j -> g`` has ``j`` earlier than ``g`` in the order."""
    if order.p != dag.p:
        raise ValueError(f"order length {order.p} != node count {dag.p}")
    pos = order.positions()
    return all(pos[j] < pos[g] for (j, g) in dag.edges)


def super_dag_from_order(order: CausalOrder) -> GroupDag:
    """Fully connected DAG where each node's parents are all its predecessors."""
    seq = order.sequence
    edges = {(seq[i], seq[j]) for i in range(len(seq)) for j in range(i + 1, len(seq))}
    return GroupDag(order.p, frozenset(edges))


def d_separated(dag: GroupDag, x: int, y: int, z: Iterable[int]) -> bool:
    """Bayes-ball test: are ``x`` and ``y`` d-separated given ``z``?

    Walks the graph tracking the direction of arrival; a node is passable
    downwards unless conditioned on, and re-openable upwards at colliders
    whose descendants meet ``z``.
    """
    zset = set(z)
    dag._check_node(x)
    dag._check_node(y)
    for w in zset:
        dag._check_node(w)
    if x == y:
        raise ValueError("x and y must be distinct")
    if x in zset or y in zset:
        raise ValueError("conditioning set must not contain x or y")

    # ancestors of z (including z itself) open colliders
    anc_z: set[int] = set(zset)
    frontier = deque(zset)
    while frontier:
        w = frontier.popleft()
        for q in dag.parents(w):
            if q not in anc_z:
                anc_z.add(q)
                frontier.append(q)

    UP, DOWN = 0, 1  # direction of travel when arriving at a node
    visited: set[tuple[int, int]] = set()
    queue: deque[tuple[int, int]] = deque([(x, UP)])
    while queue:
        w, d = queue.popleft()
        if (w, d) in visited:
            continue
        visited.add((w, d))
        if w == y and w not in zset:
            return False
        if d == UP and w not in zset:
            for q in dag.parents(w):
                queue.append((q, UP))
            for q in dag.children(w):
                queue.append((q, DOWN))
        elif d == DOWN:
            if w not in zset:
                for q in dag.children(w):
                    queue.append((q, DOWN))
            if w in anc_z:
                for q in dag.parents(w):
                    queue.append((q, UP))
    return True


def graph_to_dict(dag: GroupDag, names: Sequence[str]) -> dict:
    """JSON-ready mapping ``{"nodes": [...], "edges": [[src, tgt], ...]}``."""
    if len(names) != dag.p:
        raise ValueError(f"{len(names)} names for {dag.p} nodes")
    edges = sorted(dag.edges)
    return {
        "nodes": list(names),
        "edges": [[names[j], names[g]] for (j, g) in edges],
    }


def graph_from_dict(obj: dict, names: Sequence[str] | None = None) -> tuple[GroupDag, list[str]]:
    """Parse the graph JSON mapping; ``names``, when given, pins node identity."""
    node_names = list(obj["nodes"])
    if len(set(node_names)) != len(node_names):
        raise ValueError("duplicate node names in graph JSON")
    if names is not None and list(names) != node_names:
        raise ValueError(f"graph nodes {node_names} do not match expected {list(names)}")
    index = {name: i for i, name in enumerate(node_names)}
    edges = set()
    for src, tgt in obj["edges"]:
        if src not in index or tgt not in index:
            raise ValueError(f"edge [{src!r}, {tgt!r}] references unknown node")
        edges.add((index[src], index[tgt]))
    return GroupDag(len(node_names), frozenset(edges)), node_names


def save_graph(dag: GroupDag, names: Sequence[str], path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(graph_to_dict(dag, names), fh, indent=2, sort_keys=True)
        fh.write("\n")


def load_graph(path, names: Sequence[str] | None = None) -> tuple[GroupDag, list[str]]:
    with open(path, "r", encoding="utf-8") as fh:
        return graph_from_dict(json.load(fh), names)
