import numpy as np
import pytest

from graphuniverse import (
    FamilyConfig,
    GraphInstance,
    GraphParams,
    ScaledMatrixDerivation,
    UniverseConfig,
)
from graphuniverse.universe import build_universe


@pytest.fixture(scope="session")
def universe10():
    return build_universe(UniverseConfig(community_count=10, seed=42))


@pytest.fixture(scope="session")
def universe15():
    return build_universe(UniverseConfig(community_count=15, seed=7))


@pytest.fixture
def small_family():
    return FamilyConfig(
        graph_count=6,
        node_range=(40, 80),
        community_range=(3, 5),
        homophily_range=(0.4, 0.6),
        degree_range=(3.0, 6.0),
        degree_separation_range=(0.5, 0.8),
        power_law_range=(2.5, 3.0),
    )


def synthetic_instance(
    node_community,
    communities=None,
    edges=(),
    features=None,
    theta=None,
    p_star=None,
    p_sub=None,
    graph_index=0,
    h=0.5,
    d=2.0,
):
    """Hand-built GraphInstance for metric-level tests (bypasses generation)."""
    node_community = np.asarray(node_community, dtype=np.int64)
    n = len(node_community)
    k = int(node_community.max()) + 1 if n else 0
    if communities is None:
        communities = np.arange(k, dtype=np.int64)
    else:
        communities = np.asarray(communities, dtype=np.int64)
        k = len(communities)
    edges = np.asarray(edges, dtype=np.int64).reshape(-1, 2)
    if len(edges):
        edges = edges[np.lexsort((edges[:, 1], edges[:, 0]))]
    if features is None:
        features = np.zeros((n, 2))
    if theta is None:
        theta = np.ones(n)
    if p_star is None:
        p_star = np.full((k, k), 0.5)
    if p_sub is None:
        p_sub = np.ones((k, k))
    scaled = ScaledMatrixDerivation(
        p_sub=np.asarray(p_sub, dtype=float),
        s_diag=float(np.trace(np.asarray(p_sub, dtype=float))),
        s_off=float(np.asarray(p_sub, dtype=float).sum() - np.trace(np.asarray(p_sub, dtype=float))),
        alpha_diag=1.0,
        alpha_off=1.0,
        beta=1.0,
        p_star=np.asarray(p_star, dtype=float),
        clip_count=0,
    )
    return GraphInstance(
        graph_index=graph_index,
        params=GraphParams(n=n, k=k, h=h, d=d, rho=0.5, alpha=3.0),
        communities=communities,
        node_community=node_community,
        edges=edges,
        degree_factors=np.asarray(theta, dtype=float),
        features=np.asarray(features, dtype=float),
        scaled=scaled,
        repair_edge_count=0,
    )
