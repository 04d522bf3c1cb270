"""Learning-task labels and dataset splits for generated families."""

from __future__ import annotations

import numpy as np

from .core import DeterministicStream, GraphInstance


def community_labels(instance: GraphInstance) -> np.ndarray:
    """Per-node universe community ids.  Labels are global: two graphs sharing
    a universe community use the same id for it."""
    return instance.universe_labels()


def adjacency_sets(n: int, edges: np.ndarray) -> list[set[int]]:
    adj: list[set[int]] = [set() for _ in range(n)]
    for u, v in edges:
        adj[int(u)].add(int(v))
        adj[int(v)].add(int(u))
    return adj


def triangle_count(instance: GraphInstance) -> int:
    """Exact number of node triples with all three edges present.

    Node-iterator over adjacency intersections restricted to higher-numbered
    neighbors, so each triangle is counted once.
    """
    n = instance.n
    forward: list[set[int]] = [set() for _ in range(n)]
    for u, v in instance.edges:
        forward[int(u)].add(int(v))
    total = 0
    for u, v in instance.edges:
        total += len(forward[int(u)] & forward[int(v)])
    return total


def make_splits(
    stream: DeterministicStream,
    graph_count: int,
    fractions: tuple[float, float, float] = (0.7, 0.15, 0.15),
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Random permutation of graph indices partitioned by rounded cumulative
    fractions into train/val/test."""
    if graph_count < 3:
        raise ValueError(f"need at least 3 graphs for three nonempty splits, got {graph_count}")
    if any(f <= 0 for f in fractions) or abs(sum(fractions) - 1.0) > 1e-9:
        raise ValueError(f"fractions must be positive and sum to 1, got {fractions}")
    order = stream.permutation(graph_count)
    c1 = round(fractions[0] * graph_count)
    c2 = round((fractions[0] + fractions[1]) * graph_count)
    c1 = max(1, min(c1, graph_count - 2))
    c2 = max(c1 + 1, min(c2, graph_count - 1))
    return order[:c1], order[c1:c2], order[c2:]


def make_node_splits(
    stream: DeterministicStream,
    labels: np.ndarray,
    fractions: tuple[float, float, float] = (0.7, 0.15, 0.15),
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Node-level splits for single-graph (transductive) datasets, stratified
    by community: every community lands in every split whenever its size
    permits."""
    if any(f <= 0 for f in fractions) or abs(sum(fractions) - 1.0) > 1e-9:
        raise ValueError(f"fractions must be positive and sum to 1, got {fractions}")
    labels = np.asarray(labels)
    if len(labels) < 3:
        raise ValueError("need at least 3 nodes for three nonempty splits")
    parts: list[list[np.ndarray]] = [[], [], []]
    for value in np.unique(labels):
        members = np.flatnonzero(labels == value)
        members = members[stream.permutation(len(members))]
        m = len(members)
        c1 = round(fractions[0] * m)
        c2 = round((fractions[0] + fractions[1]) * m)
        if m >= 3:
            c1 = max(1, min(c1, m - 2))
            c2 = max(c1 + 1, min(c2, m - 1))
        parts[0].append(members[:c1])
        parts[1].append(members[c1:c2])
        parts[2].append(members[c2:])
    return tuple(np.sort(np.concatenate(p)).astype(np.int64) for p in parts)
