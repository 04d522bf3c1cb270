"""Realizing graphs from a universe and a family config.

One graph is produced in four phases, all fed from a single per-graph stream
(``rng_for_graph``) in a fixed, documented draw order:

1. parameter sampling (n, k, h, d, rho, alpha),
2. community selection,
3. node assignment, then propensity-to-probability rescaling
   (the rescale itself is deterministic; it needs the realized community
   sizes, which is why assignment happens first),
4. degree factors, a degree-factor-aware recalibration of the probability
   matrix (restores the exact expected-degree identity), edge sampling,
   connectivity repair, node features.

Graph generation is embarrassingly parallel across ``graph_index``: each index
derives an independent stream, so any execution order or thread count yields
bit-identical families.
"""

from __future__ import annotations

import bisect
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import replace

import numpy as np

from .core import (
    DeterministicStream,
    FamilyConfig,
    GraphInstance,
    GraphParams,
    ScaledMatrixDerivation,
    Universe,
    UnsatisfiableHomophilyError,
    rng_for_graph,
    sample_pareto,
    sample_truncated_gaussian_array,
)


class FamilyGenerationError(RuntimeError):
    """More than 1% of a family's graphs failed to generate."""

    def __init__(self, failures: list[tuple[int, str]], graph_count: int):
        self.failures = failures
        self.graph_count = graph_count
        preview = "; ".join(f"#{i}: {msg}" for i, msg in failures[:5])
        super().__init__(
            f"{len(failures)}/{graph_count} graphs failed (budget is 1%): {preview}"
        )


def sample_graph_params(stream: DeterministicStream, family: FamilyConfig) -> GraphParams:
    """Per-graph parameters, each uniform over its closed range.

    Integer parameters are uniform over the integer lattice points of their
    range.  Draw order: n, k, h, d, rho, alpha.
    """
    n = int(stream.integers(family.node_range[0], family.node_range[1] + 1))
    k = int(stream.integers(family.community_range[0], family.community_range[1] + 1))
    h = float(stream.uniform(*family.homophily_range))
    d = float(stream.uniform(*family.degree_range))
    rho = float(stream.uniform(*family.degree_separation_range))
    alpha = float(stream.uniform(*family.power_law_range))
    return GraphParams(n=n, k=k, h=h, d=d, rho=rho, alpha=alpha)


def select_communities(stream: DeterministicStream, total: int, k: int) -> np.ndarray:
    """Uniformly random k-subset of the universe's community ids, sorted ascending."""
    if k > total:
        raise ValueError(f"cannot select {k} communities from {total}")
    return np.sort(stream.choice(total, size=k, replace=False))


def assign_nodes(stream: DeterministicStream, n: int, k: int) -> np.ndarray:
    """Balanced community assignment: sizes differ by at most one, the
    (n mod k) oversized communities are chosen at random, node order is a
    random permutation."""
    if n < k:
        raise ValueError(f"need at least one node per community: n={n} < k={k}")
    sizes = np.full(k, n // k, dtype=np.int64)
    remainder = n % k
    if remainder:
        sizes[stream.choice(k, size=remainder, replace=False)] += 1
    return stream.permutation(np.repeat(np.arange(k), sizes))


def scale_probability_matrix(
    p_sub: np.ndarray, h: float, d: float, n: int, community_sizes: np.ndarray
) -> ScaledMatrixDerivation:
    """Two-stage rescale of a propensity submatrix into Bernoulli probabilities.

    Stage 1 splits the matrix mass so the diagonal holds exactly fraction ``h``
    (``alpha_diag = h / S_diag``, ``alpha_off = (1 - h) / S_off``, well defined
    at h in {0, 1}).  Stage 2 applies a global ``beta`` chosen so the average
    connection probability over ordered node pairs (self-pairs included, node
    counts taken from the realized community sizes) equals ``d / (n - 1)``.
    Entries are then clipped to [0, 1] and the clip count recorded.
    """
    p_sub = np.asarray(p_sub, dtype=float)
    k = p_sub.shape[0]
    diag = np.eye(k, dtype=bool)
    s_diag = float(p_sub[diag].sum())
    s_off = float(p_sub[~diag].sum())

    if h > 0.0 and s_diag == 0.0:
        raise UnsatisfiableHomophilyError(
            f"target homophily {h} > 0 but all within-community propensities are zero"
        )
    if h < 1.0 and s_off == 0.0:
        raise UnsatisfiableHomophilyError(
            f"target homophily {h} < 1 but all cross-community propensities are zero"
        )

    alpha_diag = 0.0 if h == 0.0 else h / s_diag
    alpha_off = 0.0 if h == 1.0 else (1.0 - h) / s_off
    p_prime = np.where(diag, alpha_diag * p_sub, alpha_off * p_sub)

    sizes = np.asarray(community_sizes, dtype=float)
    rho_target = d / (n - 1)
    pair_weighted_mass = float((np.outer(sizes, sizes) * p_prime).sum())
    beta = n * n * rho_target / pair_weighted_mass
    if not np.isfinite(beta):
        raise UnsatisfiableHomophilyError(
            f"density scaling diverged (beta={beta}) for h={h}, d={d}"
        )

    raw = beta * p_prime
    clip_count = int((raw > 1.0).sum())
    return ScaledMatrixDerivation(
        p_sub=p_sub,
        s_diag=s_diag,
        s_off=s_off,
        alpha_diag=alpha_diag,
        alpha_off=alpha_off,
        beta=beta,
        p_star=np.minimum(raw, 1.0),
        clip_count=clip_count,
    )


def recalibrate_for_degree_factors(
    scaled: ScaledMatrixDerivation,
    theta: np.ndarray,
    node_community: np.ndarray,
    n: int,
    d: float,
) -> ScaledMatrixDerivation:
    """Rescale the probability matrix so the analytic expected edge count
    ``sum_{i<j} theta_i theta_j P*`` equals exactly n*d/2.

    The size-based stage-2 scaling assumes unit pair weights, but degree
    separation concentrates theta mass in particular communities and skews the
    realized block masses; this global factor restores the degree target.  The
    returned derivation stores the effective beta, so
    ``P* = clip(beta * alpha_rs * P_sub, 0, 1)`` keeps holding exactly.
    """
    if n < 2:
        return scaled
    k = scaled.p_sub.shape[0]
    raw = scaled.beta * np.where(
        np.eye(k, dtype=bool), scaled.alpha_diag * scaled.p_sub, scaled.alpha_off * scaled.p_sub
    )
    mass = np.zeros(k)
    square_mass = np.zeros(k)
    np.add.at(mass, node_community, theta)
    np.add.at(square_mass, node_community, theta * theta)
    pair_weighted = 0.5 * (
        float((np.outer(mass, mass) * raw).sum()) - float((square_mass * np.diag(raw)).sum())
    )
    if pair_weighted <= 0:
        raise UnsatisfiableHomophilyError(
            "expected edge mass is zero; cannot reach the degree target"
        )
    gamma = (n * d / 2.0) / pair_weighted
    adjusted = gamma * raw
    return ScaledMatrixDerivation(
        p_sub=scaled.p_sub,
        s_diag=scaled.s_diag,
        s_off=scaled.s_off,
        alpha_diag=scaled.alpha_diag,
        alpha_off=scaled.alpha_off,
        beta=scaled.beta * gamma,
        p_star=np.minimum(adjusted, 1.0),
        clip_count=int((adjusted > 1.0).sum()),
    )


def assign_degree_factors(
    stream: DeterministicStream,
    n: int,
    node_community: np.ndarray,
    degree_centers: np.ndarray,
    rho: float,
    alpha: float,
) -> np.ndarray:
    """Community-coupled degree factors.

    Draws n power-law factors, sorts them, and hands them out by sampling each
    node's rank from a truncated Gaussian centered on its community's preferred
    rank ``1 + (1 + center)/2 * (n - 1)``.  The Gaussian's variance
    interpolates between a separation floor and n^2 as ``rho`` goes 1 -> 0.
    Ranks are drawn independently with replacement (collisions share a value)
    and rounded to the nearest integer.  The result is rescaled to mean 1.
    """
    if n == 1:
        sample_pareto(stream, alpha, 1)
        return np.ones(1)

    theta_sorted = np.sort(sample_pareto(stream, alpha, n))

    rank_centers = 1.0 + (1.0 + np.asarray(degree_centers, dtype=float)) / 2.0 * (n - 1)
    if len(rank_centers) >= 2:
        gaps = np.abs(rank_centers[:, None] - rank_centers[None, :])
        min_gap = float(gaps[~np.eye(len(rank_centers), dtype=bool)].min())
        sigma_min = max(1.0, min_gap / 6.0)
    else:
        sigma_min = 1.0
    sigma_sq = sigma_min**2 + (1.0 - rho) * (float(n) ** 2 - sigma_min**2)
    sigma = np.sqrt(sigma_sq)

    ranks = sample_truncated_gaussian_array(
        stream, rank_centers[node_community], sigma, 1.0, float(n)
    )
    idx = np.clip(np.rint(ranks).astype(np.int64) - 1, 0, n - 1)
    theta = theta_sorted[idx]
    return theta / theta.mean()


def generate_edges(
    stream: DeterministicStream,
    theta: np.ndarray,
    node_community: np.ndarray,
    p_star: np.ndarray,
) -> np.ndarray:
    """Independent Bernoulli edges: pair (i, j) connects with probability
    ``min(1, theta_i * theta_j * p_star[c(i), c(j)])``.  Returns an (m, 2)
    array with u < v, lexicographically sorted."""
    n = len(theta)
    out_u: list[np.ndarray] = []
    out_v: list[np.ndarray] = []
    # weighted[r, j] = theta_j * p_star[r, c_j], so row i only needs a slice
    weighted = theta * p_star[:, node_community]
    for i in range(n - 1):
        # u < 1 always, so comparing against the unclipped product realizes
        # the min(1, .) cap without materializing it.
        p = theta[i] * weighted[node_community[i], i + 1 :]
        u = stream.random(n - 1 - i)
        hits = np.flatnonzero(u < p)
        if hits.size:
            out_u.append(np.full(hits.size, i, dtype=np.int64))
            out_v.append(hits.astype(np.int64) + i + 1)
    if not out_u:
        return np.empty((0, 2), dtype=np.int64)
    return np.column_stack([np.concatenate(out_u), np.concatenate(out_v)])


def _union_find_components(n: int, edges: np.ndarray) -> list[np.ndarray]:
    parent = np.arange(n, dtype=np.int64)

    def find(x: int) -> int:
        root = x
        while parent[root] != root:
            root = parent[root]
        while parent[x] != root:
            parent[x], x = root, parent[x]
        return root

    for u, v in edges:
        ru, rv = find(int(u)), find(int(v))
        if ru != rv:
            parent[rv] = ru
    roots = np.array([find(i) for i in range(n)])
    return [np.flatnonzero(roots == r) for r in np.unique(roots)]


def blockwise_edge_counts(edges: np.ndarray, node_community: np.ndarray, k: int) -> np.ndarray:
    """Symmetric per-community-pair edge counts; intra edges count twice on the
    diagonal so they pair with the ordered n_r*(n_r - 1) denominator."""
    counts = np.zeros((k, k), dtype=float)
    if len(edges):
        r = node_community[edges[:, 0]]
        s = node_community[edges[:, 1]]
        np.add.at(counts, (r, s), 1.0)
        np.add.at(counts, (s, r), 1.0)
    return counts


def repair_connectivity(
    stream: DeterministicStream,
    n: int,
    edges: np.ndarray,
    node_community: np.ndarray,
    p_sub: np.ndarray,
) -> tuple[np.ndarray, int]:
    """Greedy edge additions until the graph is connected.

    Each round joins the smallest component to the largest.  Among community
    pairs with a candidate node on each side, the most under-connected pair is
    chosen: minimum deviation between the mass-normalized realized block rates
    and the target propensities (ties broken lexicographically).  Endpoints
    are uniform within the chosen communities.  Adds exactly
    (component count - 1) edges and never removes any.
    """
    k = p_sub.shape[0]
    components = _union_find_components(n, edges)
    if len(components) <= 1:
        return edges, 0

    sizes = np.bincount(node_community, minlength=k).astype(float)
    counts = blockwise_edge_counts(edges, node_community, k)
    p_mass = float(p_sub.sum())
    denom = np.outer(sizes, sizes)
    np.fill_diagonal(denom, sizes * (sizes - 1.0))
    valid = denom > 0

    # Components stay in a list sorted by (size, smallest node id); merging the
    # two ends and re-inserting keeps the order identical to a full re-sort.
    entries = [(np.unique(node_community[c]), c) for c in components]
    keys = [(len(c), int(c[0])) for _, c in entries]
    paired = sorted(zip(keys, entries), key=lambda item: item[0])
    keys = [key for key, _ in paired]
    entries = [entry for _, entry in paired]
    added: list[tuple[int, int]] = []

    while len(entries) > 1:
        small_comms, small = entries[0]
        main_comms, main = entries[-1]

        with np.errstate(divide="ignore", invalid="ignore"):
            ratio = np.where(valid, counts / denom, 0.0)
        total = ratio.sum()
        a_norm = ratio * (p_mass / total) if total > 0 else np.zeros_like(ratio)
        deviation = a_norm - p_sub

        best = None
        for r in small_comms:
            for s in main_comms:
                score = (float(deviation[r, s]), int(r), int(s))
                if best is None or score < best:
                    best = score
        _, r, s = best

        candidates_u = small[node_community[small] == r]
        candidates_v = main[node_community[main] == s]
        u = int(candidates_u[stream.integers(len(candidates_u))])
        v = int(candidates_v[stream.integers(len(candidates_v))])
        added.append((min(u, v), max(u, v)))
        # r == s hits the same cell twice, preserving the intra double count.
        counts[r, s] += 1.0
        counts[s, r] += 1.0

        merged = np.sort(np.concatenate([small, main]))
        merged_key = (len(merged), int(merged[0]))
        entries = entries[1:-1]
        keys = keys[1:-1]
        pos = bisect.bisect_right(keys, merged_key)
        keys.insert(pos, merged_key)
        entries.insert(pos, (np.union1d(small_comms, main_comms), merged))

    all_edges = np.vstack([edges, np.array(added, dtype=np.int64)])
    order = np.lexsort((all_edges[:, 1], all_edges[:, 0]))
    return all_edges[order], len(added)


def generate_graph(universe: Universe, family: FamilyConfig, graph_index: int) -> GraphInstance:
    """Realize one graph instance; all randomness comes from ``rng_for_graph``."""
    started = time.perf_counter()
    family.check_against_universe(universe.community_count)
    universe_seed = universe.config.seed
    family_seed = family.resolved_seed(universe_seed)
    stream = rng_for_graph(universe_seed, family_seed, graph_index)

    params = sample_graph_params(stream, family)
    communities = select_communities(stream, universe.community_count, params.k)
    node_community = assign_nodes(stream, params.n, params.k)
    sizes = np.bincount(node_community, minlength=params.k)

    p_sub = universe.propensity_matrix[np.ix_(communities, communities)]
    scaled = scale_probability_matrix(p_sub, params.h, params.d, params.n, sizes)

    theta = assign_degree_factors(
        stream,
        params.n,
        node_community,
        universe.degree_centers[communities],
        params.rho,
        params.alpha,
    )
    scaled = recalibrate_for_degree_factors(scaled, theta, node_community, params.n, params.d)
    edges = generate_edges(stream, theta, node_community, scaled.p_star)
    edges, repair_count = repair_connectivity(stream, params.n, edges, node_community, p_sub)

    labels = communities[node_community]
    noise = np.sqrt(universe.config.cluster_variance) * stream.standard_normal(
        (params.n, universe.config.feature_dim)
    )
    features = universe.feature_centroids[labels] + noise

    return GraphInstance(
        graph_index=graph_index,
        params=params,
        communities=communities,
        node_community=node_community,
        edges=edges,
        degree_factors=theta,
        features=features,
        scaled=scaled,
        repair_edge_count=repair_count,
        generation_time_sec=time.perf_counter() - started,
    )


def generate_family(
    universe: Universe,
    family: FamilyConfig,
    threads: int = 1,
    on_progress=None,
) -> list[GraphInstance]:
    """All graphs of a family, ordered by index regardless of execution order.

    Individual graph failures are tolerated up to a 1% budget (a single
    pathological parameter draw must not kill a large family); beyond that the
    whole family fails with the collected diagnostics.
    """
    indices = range(family.graph_count)

    def build(i: int):
        try:
            instance = generate_graph(universe, family, i)
        except Exception as exc:  # noqa: BLE001 - aggregated into the family report
            return i, None, f"{type(exc).__name__}: {exc}"
        if on_progress is not None:
            on_progress(i)
        return i, instance, None

    if threads > 1 and family.graph_count > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(build, indices))
    else:
        results = [build(i) for i in indices]

    results.sort(key=lambda r: r[0])
    failures = [(i, msg) for i, inst, msg in results if inst is None]
    if len(failures) > 0.01 * family.graph_count:
        raise FamilyGenerationError(failures, family.graph_count)
    return [inst for _, inst, _ in results if inst is not None]


def derive_shifted_family(
    base: FamilyConfig, dh: float = 0.0, dd: float = 0.0, dn: int = 0
) -> FamilyConfig:
    """Copy of a family config with the homophily, degree and node ranges
    translated; homophily is clamped into [0, 1], other invalid results are
    rejected."""
    h_lo = min(max(base.homophily_range[0] + dh, 0.0), 1.0)
    h_hi = min(max(base.homophily_range[1] + dh, 0.0), 1.0)
    d_lo = base.degree_range[0] + dd
    d_hi = base.degree_range[1] + dd
    n_lo = base.node_range[0] + dn
    n_hi = base.node_range[1] + dn
    return replace(
        base,
        homophily_range=(h_lo, h_hi),
        degree_range=(d_lo, d_hi),
        node_range=(n_lo, n_hi),
    )
