"""Per-graph and cross-graph validation metrics plus the family report.

Three metric groups certify a generated family:

* graph properties (homophily, average degree, degree tail ratio, deviation
  of realized block rates from the target matrix, generation time),
* signal strength (can a decision forest recover community labels from node
  features, degree, or multi-hop neighborhood composition),
* cross-graph consistency (do communities keep the same structural role,
  degree ranking, and feature centroid across graphs of one family).

Metric failures never abort a report: a metric whose preconditions fail is
recorded as missing and logged.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
from sklearn.ensemble import RandomForestClassifier

from .core import DeterministicStream, GraphInstance, Universe, rng_for_metrics
from .sampler import blockwise_edge_counts
from .stats import average_ranks, macro_f1, spearman_correlation, stratified_split

logger = logging.getLogger(__name__)

PER_GRAPH_METRICS = (
    "homophily",
    "avg_degree",
    "degree_tail_ratio_99",
    "generation_time_sec",
    "prob_matrix_deviation",
    "feature_signal_f1",
    "degree_signal_f1",
    "structure_signal_f1",
    "structure_consistency",
    "degree_consistency",
)

FOREST_CONFIG = {
    "n_estimators": 100,
    "criterion": "gini",
    "max_depth": None,
    "min_samples_split": 2,
    "min_samples_leaf": 1,
    "max_features": "sqrt",
}


# ---------------------------------------------------------------------------
# Graph property metrics
# ---------------------------------------------------------------------------


def graph_homophily(instance: GraphInstance) -> float | None:
    """Fraction of edges whose endpoints share a community; None when the
    graph has no edges."""
    if instance.edge_count == 0:
        logger.warning("graph %d has no edges; homophily undefined", instance.graph_index)
        return None
    cm = instance.node_community
    same = cm[instance.edges[:, 0]] == cm[instance.edges[:, 1]]
    return float(same.mean())


def average_degree(instance: GraphInstance) -> float:
    return 2.0 * instance.edge_count / instance.n


def degree_tail_ratio_99(instance: GraphInstance) -> float | None:
    """99th-percentile degree (nearest rank) over mean degree."""
    degrees = np.sort(instance.degrees())
    mean = degrees.mean()
    if mean == 0:
        return None
    rank = int(np.ceil(0.99 * instance.n))
    return float(degrees[rank - 1] / mean)


def actual_probability_matrix(instance: GraphInstance) -> np.ndarray:
    """Realized per-community-pair connection rates.

    Diagonal cells divide doubled intra-edge counts by the ordered-pair count
    n_i * (n_i - 1); off-diagonal cells divide by n_i * n_j.  Communities too
    small for a denominator contribute 0 (logged).
    """
    sizes = instance.community_sizes().astype(float)
    counts = blockwise_edge_counts(instance.edges, instance.node_community, instance.k)
    denom = np.outer(sizes, sizes)
    np.fill_diagonal(denom, sizes * (sizes - 1.0))
    if (denom <= 0).any():
        logger.warning(
            "graph %d has single-node communities; their intra rates default to 0",
            instance.graph_index,
        )
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.where(denom > 0, counts / denom, 0.0)


def prob_matrix_deviation(instance: GraphInstance, target: str = "pstar") -> float:
    """Mean absolute difference between realized block rates and the target.

    ``pstar`` compares against the rescaled Bernoulli target (the matrix the
    edges were actually drawn from); ``psub`` compares against the raw
    propensity submatrix, the literal unscaled reading.
    """
    actual = actual_probability_matrix(instance)
    if target == "pstar":
        expected = instance.scaled.p_star
    elif target == "psub":
        expected = instance.scaled.p_sub
    else:
        raise ValueError(f"unknown deviation target {target!r}")
    k = instance.k
    return float(np.abs(actual - expected).sum() / (k * k))


# ---------------------------------------------------------------------------
# Signal strength metrics
# ---------------------------------------------------------------------------


def structure_features(instance: GraphInstance) -> np.ndarray:
    """Per-node counts of neighbors in each community at exact distances 1-3,
    concatenated into a 3k-dim vector per node."""
    n, k = instance.n, instance.k
    onehot = np.zeros((n, k), dtype=np.float32)
    onehot[np.arange(n), instance.node_community] = 1.0

    if instance.edge_count == 0:
        return np.zeros((n, 3 * k), dtype=np.float32)

    e = instance.edges
    data = np.ones(2 * len(e), dtype=np.float32)
    rows = np.concatenate([e[:, 0], e[:, 1]])
    cols = np.concatenate([e[:, 1], e[:, 0]])
    adj = sp.csr_matrix((data, (rows, cols)), shape=(n, n))

    # mask[v, s] == True iff v sits at the current exact distance from s
    dist1 = adj.toarray() > 0
    visited = dist1 | np.eye(n, dtype=bool)
    dist2 = (adj @ dist1.astype(np.float32)) > 0
    dist2 &= ~visited
    visited |= dist2
    dist3 = (adj @ dist2.astype(np.float32)) > 0
    dist3 &= ~visited

    blocks = [mask.T.astype(np.float32) @ onehot for mask in (dist1, dist2, dist3)]
    return np.hstack(blocks)


def _signal_matrix(instance: GraphInstance, signal: str) -> np.ndarray:
    if signal == "feature":
        return np.asarray(instance.features, dtype=float)
    if signal == "degree":
        return instance.degrees().astype(float).reshape(-1, 1)
    if signal == "structure":
        return structure_features(instance).astype(float)
    raise ValueError(f"unknown signal {signal!r}")


def signal_strength(
    instance: GraphInstance, signal: str, stream: DeterministicStream
) -> float | None:
    """Macro-F1 of a 100-tree decision forest predicting community labels from
    the chosen per-node signal, on a stratified 70/30 split.

    Returns None when some community has fewer than 2 nodes (no stratified
    split exists); returns 1.0 for the degenerate single-community graph.
    """
    labels = instance.node_community
    if instance.k == 1:
        logger.warning(
            "graph %d has a single community; %s signal trivially 1.0",
            instance.graph_index,
            signal,
        )
        return 1.0
    if np.bincount(labels, minlength=instance.k).min() < 2:
        logger.warning(
            "graph %d has a community with < 2 nodes; %s signal skipped",
            instance.graph_index,
            signal,
        )
        return None

    x = _signal_matrix(instance, signal)
    train_idx, test_idx = stratified_split(stream, labels, 0.7)
    forest = RandomForestClassifier(
        **FOREST_CONFIG,
        bootstrap=True,
        random_state=int(stream.integers(0, 2**32)),
        n_jobs=1,
    )
    forest.fit(x[train_idx], labels[train_idx])
    predicted = forest.predict(x[test_idx])
    return macro_f1(labels[test_idx], predicted, labels=np.arange(instance.k))


# ---------------------------------------------------------------------------
# Cross-graph consistency metrics
# ---------------------------------------------------------------------------


def structure_consistency(instance: GraphInstance, universe: Universe) -> float | None:
    """Mean Spearman correlation between rows of the universe propensity
    matrix (restricted to participating communities) and rows of the realized
    rate matrix.  Needs k >= 3; zero-variance rows are excluded."""
    if instance.k < 3:
        return None
    p_rows = universe.propensity_matrix[np.ix_(instance.communities, instance.communities)]
    a_rows = actual_probability_matrix(instance)
    correlations = []
    for i in range(instance.k):
        rho = spearman_correlation(p_rows[i], a_rows[i])
        if np.isfinite(rho):
            correlations.append(rho)
        else:
            logger.warning(
                "graph %d row %d has zero variance; excluded from structure consistency",
                instance.graph_index,
                i,
            )
    return float(np.mean(correlations)) if correlations else None


def community_mean_degrees(instance: GraphInstance) -> np.ndarray:
    degrees = instance.degrees().astype(float)
    sums = np.bincount(instance.node_community, weights=degrees, minlength=instance.k)
    return sums / instance.community_sizes()


def percentile_signature(instance: GraphInstance, universe_size: int) -> np.ndarray:
    """Length-K vector of per-community degree-rank percentiles; NaN for
    communities absent from the graph."""
    signature = np.full(universe_size, np.nan)
    mean_degrees = community_mean_degrees(instance)
    if instance.k >= 2:
        ranks = average_ranks(mean_degrees)
        signature[instance.communities] = (ranks - 1.0) / (instance.k - 1)
    elif instance.k == 1:
        signature[instance.communities] = 0.0
    return signature


def degree_consistency(
    instances: list[GraphInstance], universe: Universe
) -> list[float | None]:
    """Per-graph blend of within-graph and cross-graph degree-order agreement.

    Within: Spearman between per-community mean degree and the universe degree
    centers.  Cross: overlap-weighted mean Spearman between percentile
    signatures over shared communities (pairs sharing < 3 are skipped; a graph
    with no usable pair falls back to the within term alone).
    """
    total = universe.community_count
    signatures = [percentile_signature(inst, total) for inst in instances]
    results: list[float | None] = []
    for gi, inst in enumerate(instances):
        if inst.k < 2:
            results.append(None)
            continue
        within = spearman_correlation(
            community_mean_degrees(inst), universe.degree_centers[inst.communities]
        )
        weighted, weight_total = 0.0, 0.0
        for gj, other in enumerate(instances):
            if gj == gi:
                continue
            shared = np.flatnonzero(
                np.isfinite(signatures[gi]) & np.isfinite(signatures[gj])
            )
            if len(shared) < 3:
                continue
            rho = spearman_correlation(signatures[gi][shared], signatures[gj][shared])
            if not np.isfinite(rho):
                logger.warning(
                    "degenerate signature overlap between graphs %d and %d; pair skipped",
                    inst.graph_index,
                    other.graph_index,
                )
                continue
            weighted += len(shared) * rho
            weight_total += len(shared)
        if weight_total > 0:
            cross = weighted / weight_total
            results.append(float((within + cross) / 2.0) if np.isfinite(within) else None)
        else:
            logger.warning(
                "graph %d shares < 3 communities with every other graph; "
                "falling back to within-graph term",
                inst.graph_index,
            )
            results.append(float(within) if np.isfinite(within) else None)
    return results


def empirical_centroids(instance: GraphInstance) -> dict[int, np.ndarray]:
    """Mean feature vector per participating universe community."""
    out = {}
    for local, universe_id in enumerate(instance.communities):
        members = instance.node_community == local
        out[int(universe_id)] = instance.features[members].mean(axis=0)
    return out


def feature_consistency(instances: list[GraphInstance]) -> float | None:
    """Average pairwise cosine similarity between empirical community
    centroids, averaged over the communities shared by each graph pair."""
    if len(instances) < 2:
        return None
    centroids = [empirical_centroids(inst) for inst in instances]
    pair_values = []
    for gi in range(len(instances)):
        for gj in range(gi + 1, len(instances)):
            shared = sorted(centroids[gi].keys() & centroids[gj].keys())
            cosines = []
            for community in shared:
                a, b = centroids[gi][community], centroids[gj][community]
                na, nb = np.linalg.norm(a), np.linalg.norm(b)
                if na == 0 or nb == 0:
                    logger.warning(
                        "zero-norm centroid for community %d; term skipped", community
                    )
                    continue
                cosines.append(float(a @ b / (na * nb)))
            if cosines:
                pair_values.append(float(np.mean(cosines)))
    return float(np.mean(pair_values)) if pair_values else None


# ---------------------------------------------------------------------------
# Family report
# ---------------------------------------------------------------------------


@dataclass
class ValidationReport:
    """Per-graph metric records plus family-level aggregates."""

    graph_indices: list[int]
    per_graph: dict[str, list[float | None]]
    family: dict[str, float | None]
    deviation_target: str = "pstar"
    forest_config: dict = field(default_factory=lambda: dict(FOREST_CONFIG))

    def to_json_dict(self) -> dict:
        return {
            "deviation_target": self.deviation_target,
            "forest_config": {k: v for k, v in self.forest_config.items()},
            "graphs": [
                {
                    "graph_index": self.graph_indices[i],
                    **{name: self.per_graph[name][i] for name in PER_GRAPH_METRICS},
                }
                for i in range(len(self.graph_indices))
            ],
            "family": self.family,
        }

    def to_csv_text(self) -> str:
        header = ["graph_index", *PER_GRAPH_METRICS]
        lines = [",".join(header)]

        def cell(value):
            return "" if value is None else repr(float(value))

        for i in range(len(self.graph_indices)):
            row = [str(self.graph_indices[i])]
            row += [cell(self.per_graph[name][i]) for name in PER_GRAPH_METRICS]
            lines.append(",".join(row))
        for label in ("mean", "std"):
            row = [label]
            row += [cell(self.family.get(f"{name}_{label}")) for name in PER_GRAPH_METRICS]
            lines.append(",".join(row))
        return "\n".join(lines) + "\n"


def _aggregate(values: list[float | None]) -> tuple[float | None, float | None]:
    present = [v for v in values if v is not None and np.isfinite(v)]
    if not present:
        return None, None
    arr = np.asarray(present, dtype=float)
    return float(arr.mean()), float(arr.std())


def validate_family(
    instances: list[GraphInstance],
    universe: Universe,
    deviation_target: str = "pstar",
) -> ValidationReport:
    """Run every metric over a family.  Per-metric failures become missing
    values; the report itself always completes."""
    if not instances:
        raise ValueError("cannot validate an empty family")
    seed = universe.config.seed
    per_graph: dict[str, list[float | None]] = {name: [] for name in PER_GRAPH_METRICS}

    for inst in instances:
        stream = rng_for_metrics(seed, inst.graph_index)
        per_graph["homophily"].append(_safe(graph_homophily, inst))
        per_graph["avg_degree"].append(_safe(average_degree, inst))
        per_graph["degree_tail_ratio_99"].append(_safe(degree_tail_ratio_99, inst))
        per_graph["generation_time_sec"].append(inst.generation_time_sec)
        per_graph["prob_matrix_deviation"].append(
            _safe(prob_matrix_deviation, inst, deviation_target)
        )
        for signal in ("feature", "degree", "structure"):
            per_graph[f"{signal}_signal_f1"].append(_safe(signal_strength, inst, signal, stream))
        per_graph["structure_consistency"].append(_safe(structure_consistency, inst, universe))

    per_graph["degree_consistency"] = _safe_list(
        degree_consistency, instances, universe, length=len(instances)
    )

    family: dict[str, float | None] = {}
    family["feature_consistency"] = _safe(feature_consistency, instances)
    for name in PER_GRAPH_METRICS:
        mean, std = _aggregate(per_graph[name])
        family[f"{name}_mean"] = mean
        family[f"{name}_std"] = std

    return ValidationReport(
        graph_indices=[inst.graph_index for inst in instances],
        per_graph=per_graph,
        family=family,
        deviation_target=deviation_target,
    )


def _safe(fn, *args):
    try:
        return fn(*args)
    except Exception as exc:  # noqa: BLE001 - metric failures become missing values
        logger.warning("%s failed: %s", fn.__name__, exc)
        return None


def _safe_list(fn, *args, length: int):
    try:
        return fn(*args)
    except Exception as exc:  # noqa: BLE001
        logger.warning("%s failed: %s", fn.__name__, exc)
        return [None] * length
