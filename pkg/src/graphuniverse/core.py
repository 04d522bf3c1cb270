"""Shared domain types, the deterministic RNG contract, and primitive samplers.

Every random draw in the generator flows through a ``numpy.random.Generator``
backed by the Philox (4x64) counter-based bit generator.  Streams are derived
by hashing ``(domain_tag, universe_seed, family_seed, index)`` with SHA-256 and
using the first 128 bits as the Philox key, so

* the same inputs always produce the same stream,
* streams for different graphs are statistically independent, and
* graphs can be generated in any order or in parallel with identical output.

The algorithm identifier below is recorded in every dataset manifest and must
never change for format version 1.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field

import numpy as np
from scipy.special import ndtr, ndtri

RNG_ALGORITHM = "philox4x64-sha256/v1"

# Domain tags keep independently purposed streams from ever colliding.
_DOMAIN_UNIVERSE = 0
_DOMAIN_GRAPH = 1
_DOMAIN_SPLITS = 2
_DOMAIN_LAYOUT = 3
_DOMAIN_SENSITIVITY = 4
_DOMAIN_METRICS = 5

DeterministicStream = np.random.Generator


class ConfigError(ValueError):
    """A configuration value violates its documented invariant."""


class UnsatisfiableHomophilyError(ValueError):
    """The requested homophily cannot be realized from the given propensities."""


def _derive_stream(*parts: int) -> DeterministicStream:
    h = hashlib.sha256()
    for p in parts:
        h.update(int(p).to_bytes(8, "little", signed=False))
    key = np.frombuffer(h.digest()[:16], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))


def rng_for_graph(universe_seed: int, family_seed: int, graph_index: int) -> DeterministicStream:
    """Independent deterministic stream for one graph of one family."""
    if graph_index < 0:
        raise ValueError(f"graph_index must be >= 0, got {graph_index}")
    return _derive_stream(_DOMAIN_GRAPH, universe_seed, family_seed, graph_index)


def rng_for_universe(universe_seed: int) -> DeterministicStream:
    """Stream used only while realizing the universe-level draws."""
    return _derive_stream(_DOMAIN_UNIVERSE, universe_seed)


def rng_for_splits(universe_seed: int, family_seed: int) -> DeterministicStream:
    return _derive_stream(_DOMAIN_SPLITS, universe_seed, family_seed)


def rng_for_layout(universe_seed: int, family_seed: int, graph_index: int) -> DeterministicStream:
    return _derive_stream(_DOMAIN_LAYOUT, universe_seed, family_seed, graph_index)


def rng_for_sensitivity(base_seed: int, family_index: int) -> DeterministicStream:
    return _derive_stream(_DOMAIN_SENSITIVITY, base_seed, family_index)


def rng_for_metrics(universe_seed: int, graph_index: int) -> DeterministicStream:
    """Stream for the randomized parts of per-graph validation metrics,
    independent of the generation streams."""
    return _derive_stream(_DOMAIN_METRICS, universe_seed, graph_index)


# ---------------------------------------------------------------------------
# Configuration types
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class UniverseConfig:
    """Global parameters defining a persistent set of communities.

    ``edge_propensity_variance`` controls the spread of the community-pair
    connection propensities, ``center_variance`` the separation between
    community feature centroids, and ``cluster_variance`` the within-community
    feature noise.
    """

    community_count: int
    edge_propensity_variance: float = 0.5
    feature_dim: int = 15
    center_variance: float = 0.2
    cluster_variance: float = 0.5
    seed: int = 42

    def __post_init__(self):
        if self.community_count < 2:
            raise ConfigError(f"community_count must be >= 2, got {self.community_count}")
        if not 0.0 <= self.edge_propensity_variance <= 1.0:
            raise ConfigError(
                f"edge_propensity_variance must be in [0, 1], got {self.edge_propensity_variance}"
            )
        if self.feature_dim < 1:
            raise ConfigError(f"feature_dim must be >= 1, got {self.feature_dim}")
        if self.center_variance <= 0:
            raise ConfigError(f"center_variance must be > 0, got {self.center_variance}")
        if self.cluster_variance <= 0:
            raise ConfigError(f"cluster_variance must be > 0, got {self.cluster_variance}")
        if not 0 <= self.seed < 2**64:
            raise ConfigError("seed must be a 64-bit unsigned integer")


def _check_range(name: str, lo, hi, *, min_allowed=None, max_allowed=None, strict_min=False):
    if lo > hi:
        raise ConfigError(f"{name} range has min {lo} > max {hi}")
    if min_allowed is not None:
        if strict_min and lo <= min_allowed:
            raise ConfigError(f"{name} range must be > {min_allowed}, got min {lo}")
        if not strict_min and lo < min_allowed:
            raise ConfigError(f"{name} range must be >= {min_allowed}, got min {lo}")
    if max_allowed is not None and hi > max_allowed:
        raise ConfigError(f"{name} range must be <= {max_allowed}, got max {hi}")


@dataclass(frozen=True)
class FamilyConfig:
    """Sampling ranges for per-graph parameters plus the family size.

    ``seed`` defaults to the owning universe's seed when graphs are generated
    (``seed=None`` means "inherit").
    """

    graph_count: int
    node_range: tuple[int, int] = (50, 200)
    community_range: tuple[int, int] = (4, 6)
    homophily_range: tuple[float, float] = (0.4, 0.6)
    degree_range: tuple[float, float] = (1.0, 5.0)
    degree_separation_range: tuple[float, float] = (0.5, 0.8)
    power_law_range: tuple[float, float] = (2.0, 2.5)
    seed: int | None = None

    def __post_init__(self):
        if self.graph_count < 0:
            raise ConfigError(f"graph_count must be >= 0, got {self.graph_count}")
        _check_range("node", *self.node_range, min_allowed=1)
        _check_range("community", *self.community_range, min_allowed=1)
        _check_range("homophily", *self.homophily_range, min_allowed=0.0, max_allowed=1.0)
        _check_range("degree", *self.degree_range, min_allowed=0.0, strict_min=True)
        _check_range(
            "degree_separation", *self.degree_separation_range, min_allowed=0.0, max_allowed=1.0
        )
        _check_range("power_law", *self.power_law_range, min_allowed=1.0, strict_min=True)
        if self.node_range[0] < self.community_range[1]:
            raise ConfigError(
                f"min node count {self.node_range[0]} is below max participating "
                f"communities {self.community_range[1]}"
            )
        if self.seed is not None and not 0 <= self.seed < 2**64:
            raise ConfigError("seed must be a 64-bit unsigned integer")

    def resolved_seed(self, universe_seed: int) -> int:
        return universe_seed if self.seed is None else self.seed

    def check_against_universe(self, community_count: int) -> None:
        if self.community_range[1] > community_count:
            raise ConfigError(
                f"community range max {self.community_range[1]} exceeds the "
                f"universe's {community_count} communities"
            )


@dataclass(frozen=True)
class Universe:
    """The persistent world shared by every graph of every family.

    ``propensity_matrix`` holds relative community-pair connection strengths in
    [0, 2]; ``degree_centers`` anchor each community in the degree spectrum in
    [-1, 1]; ``feature_centroids`` is the K x feature_dim matrix of community
    feature means.  Rebuilding from the same config is bit-identical.
    """

    config: UniverseConfig
    propensity_matrix: np.ndarray
    degree_centers: np.ndarray
    feature_centroids: np.ndarray

    @property
    def community_count(self) -> int:
        return self.config.community_count


@dataclass(frozen=True)
class GraphParams:
    """One graph's sampled parameters: size, communities, homophily target,
    average-degree target, degree separation and power-law exponent."""

    n: int
    k: int
    h: float
    d: float
    rho: float
    alpha: float

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "k": self.k,
            "h": self.h,
            "d": self.d,
            "rho": self.rho,
            "alpha": self.alpha,
        }

    @classmethod
    def from_dict(cls, obj: dict) -> "GraphParams":
        return cls(
            n=int(obj["n"]),
            k=int(obj["k"]),
            h=float(obj["h"]),
            d=float(obj["d"]),
            rho=float(obj["rho"]),
            alpha=float(obj["alpha"]),
        )


@dataclass(frozen=True)
class ScaledMatrixDerivation:
    """Intermediate quantities of the propensity -> probability rescaling."""

    p_sub: np.ndarray
    s_diag: float
    s_off: float
    alpha_diag: float
    alpha_off: float
    beta: float
    p_star: np.ndarray
    clip_count: int


@dataclass(frozen=True)
class GraphInstance:
    """One realized graph.

    ``communities`` lists the participating universe community ids (sorted);
    ``node_community`` maps each node to an index into that list.  ``edges``
    is an (m, 2) array with u < v, lexicographically sorted, no duplicates.
    """

    graph_index: int
    params: GraphParams
    communities: np.ndarray
    node_community: np.ndarray
    edges: np.ndarray
    degree_factors: np.ndarray
    features: np.ndarray
    scaled: ScaledMatrixDerivation
    repair_edge_count: int
    generation_time_sec: float = field(default=0.0, compare=False)

    @property
    def n(self) -> int:
        return len(self.node_community)

    @property
    def k(self) -> int:
        return len(self.communities)

    @property
    def edge_count(self) -> int:
        return len(self.edges)

    def degrees(self) -> np.ndarray:
        deg = np.zeros(self.n, dtype=np.int64)
        if len(self.edges):
            np.add.at(deg, self.edges[:, 0], 1)
            np.add.at(deg, self.edges[:, 1], 1)
        return deg

    def community_sizes(self) -> np.ndarray:
        return np.bincount(self.node_community, minlength=self.k)

    def universe_labels(self) -> np.ndarray:
        """Per-node universe community ids (persistent across graphs)."""
        return self.communities[self.node_community]


# ---------------------------------------------------------------------------
# Primitive samplers
# ---------------------------------------------------------------------------


def pareto_from_uniform(u, alpha: float):
    """Inverse-transform map from uniform [0, 1) draws to Pareto(min 1, tail alpha)."""
    return (1.0 - u) ** (-1.0 / (alpha - 1.0))


def sample_pareto(stream: DeterministicStream, alpha: float, size: int | None = None):
    """Pareto values >= 1 whose density falls off as x**-alpha; requires alpha > 1."""
    if alpha <= 1.0:
        raise ValueError(f"power-law exponent must be > 1, got {alpha}")
    u = stream.random() if size is None else stream.random(size)
    return pareto_from_uniform(u, alpha)


def sample_truncated_gaussian(
    stream: DeterministicStream, mean: float, sd: float, lo: float, hi: float
) -> float:
    """One draw from N(mean, sd^2) restricted to [lo, hi].

    Rejection sampling, falling back to inverse-CDF when the acceptance
    probability drops below 1%.
    """
    return float(
        sample_truncated_gaussian_array(
            stream, np.asarray([mean], dtype=float), sd, lo, hi
        )[0]
    )


def sample_truncated_gaussian_array(
    stream: DeterministicStream, means: np.ndarray, sd: float, lo: float, hi: float
) -> np.ndarray:
    """Vectorized truncated-Gaussian draws, one per entry of ``means``.

    Entries whose acceptance probability is below 1% use the inverse-CDF path;
    the rest use rejection with resampling restricted to still-pending entries,
    which keeps the draw sequence a pure function of the inputs.
    """
    if sd <= 0:
        raise ValueError(f"sd must be > 0, got {sd}")
    if not lo < hi:
        raise ValueError(f"invalid truncation interval [{lo}, {hi}]")

    means = np.asarray(means, dtype=float)
    a = ndtr((lo - means) / sd)
    b = ndtr((hi - means) / sd)
    accept_prob = b - a

    out = np.empty_like(means)
    direct = accept_prob < 0.01
    if direct.any():
        u = stream.random(int(direct.sum()))
        m = means[direct]
        z = np.empty_like(m)
        # Intervals above the mean lose all precision in CDF space (values
        # cluster at 1), so those use the survival function instead.
        upper = (lo - m) > 0
        if (~upper).any():
            c_lo = a[direct][~upper]
            c_hi = b[direct][~upper]
            q = np.clip(c_lo + u[~upper] * (c_hi - c_lo), 1e-300, 1.0 - 1e-16)
            z[~upper] = ndtri(q)
        if upper.any():
            s_lo = ndtr(-(lo - m[upper]) / sd)
            s_hi = ndtr(-(hi - m[upper]) / sd)
            q = np.clip(s_lo + u[upper] * (s_hi - s_lo), 1e-300, 1.0 - 1e-16)
            z[upper] = -ndtri(q)
        out[direct] = np.clip(m + sd * z, lo, hi)

    pending = np.flatnonzero(~direct)
    while pending.size:
        draws = means[pending] + sd * stream.standard_normal(pending.size)
        ok = (draws >= lo) & (draws <= hi)
        out[pending[ok]] = draws[ok]
        pending = pending[~ok]
    return out
