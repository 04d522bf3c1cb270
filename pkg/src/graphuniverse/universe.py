"""Universe construction: propensity matrix, degree centers, feature centroids.

Draw order is fixed and documented so rebuilding a universe from the same
config is always bit-identical: (1) propensity perturbations for the upper
triangle including the diagonal, row-major; (2) degree centers; (3) feature
centroids row-major.  Any future field must consume from a separately derived
stream so these draws never shift.
"""

from __future__ import annotations

import numpy as np

from .core import DeterministicStream, Universe, UniverseConfig, rng_for_universe


def build_universe(config: UniverseConfig) -> Universe:
    """Realize a universe from its config.

    Propensities are ``clip(1 + xi, 0, 2)`` with ``xi ~ N(0, (2*eps)^2)`` drawn
    for r <= s and mirrored by assignment; degree centers are iid Uniform(-1, 1);
    centroids are iid N(0, center_variance * I).
    """
    stream = rng_for_universe(config.seed)
    k = config.community_count

    propensity = np.empty((k, k), dtype=float)
    sd = 2.0 * config.edge_propensity_variance
    for r in range(k):
        row = 1.0 + sd * stream.standard_normal(k - r)
        propensity[r, r:] = np.clip(row, 0.0, 2.0)
        propensity[r:, r] = propensity[r, r:]

    degree_centers = stream.uniform(-1.0, 1.0, size=k)
    centroids = np.sqrt(config.center_variance) * stream.standard_normal(
        (k, config.feature_dim)
    )
    return Universe(
        config=config,
        propensity_matrix=propensity,
        degree_centers=degree_centers,
        feature_centroids=centroids,
    )


def sample_node_features(
    stream: DeterministicStream, universe: Universe, community_id: int, count: int = 1
) -> np.ndarray:
    """Features for ``count`` nodes of one community: centroid plus isotropic
    Gaussian noise with per-coordinate variance ``cluster_variance``."""
    if not 0 <= community_id < universe.community_count:
        raise ValueError(
            f"community id {community_id} out of range [0, {universe.community_count})"
        )
    cfg = universe.config
    noise = np.sqrt(cfg.cluster_variance) * stream.standard_normal((count, cfg.feature_dim))
    out = universe.feature_centroids[community_id] + noise
    return out[0] if count == 1 else out
