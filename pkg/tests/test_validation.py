import numpy as np
import pytest

from graphuniverse import FamilyConfig, UniverseConfig, generate_family
from graphuniverse.core import Universe, rng_for_graph, rng_for_metrics
from graphuniverse.validation import (
    actual_probability_matrix,
    degree_consistency,
    degree_tail_ratio_99,
    feature_consistency,
    graph_homophily,
    percentile_signature,
    prob_matrix_deviation,
    signal_strength,
    structure_consistency,
    structure_features,
    validate_family,
)

from conftest import synthetic_instance


class TestGraphHomophily:
    def test_all_intra(self):
        inst = synthetic_instance([0, 0, 1, 1], edges=[[0, 1], [2, 3]])
        assert graph_homophily(inst) == 1.0

    def test_bipartite_cross(self):
        inst = synthetic_instance([0, 1, 0, 1], edges=[[0, 1], [1, 2], [2, 3]])
        assert graph_homophily(inst) == 0.0

    def test_hand_counted(self):
        inst = synthetic_instance([0, 0, 1, 1], edges=[[0, 1], [0, 2], [2, 3]])
        assert graph_homophily(inst) == pytest.approx(2 / 3)

    def test_empty_graph_missing(self):
        inst = synthetic_instance([0, 0])
        assert graph_homophily(inst) is None


class TestDegreeTailRatio:
    def test_regular_graph(self):
        n = 10
        edges = [[i, (i + 1) % n] for i in range(n)]
        edges = [[min(e), max(e)] for e in edges]
        inst = synthetic_instance(np.zeros(n, dtype=np.int64), edges=edges)
        assert degree_tail_ratio_99(inst) == 1.0

    def test_star_hand_value(self):
        # K_{1,11}: degrees are eleven 1s and one 11; nearest-rank 99th
        # percentile of 12 values is the 12th, mean is 22/12
        edges = [[0, i] for i in range(1, 12)]
        inst = synthetic_instance(np.zeros(12, dtype=np.int64), edges=edges)
        assert degree_tail_ratio_99(inst) == pytest.approx(11 / (22 / 12))

    def test_matches_brute_force(self):
        stream = rng_for_graph(41, 41, 0)
        for _ in range(20):
            n = int(stream.integers(5, 40))
            pairs = np.array([(u, v) for u in range(n) for v in range(u + 1, n)])
            edges = pairs[stream.random(len(pairs)) < 0.2]
            inst = synthetic_instance(np.zeros(n, dtype=np.int64), edges=edges)
            degrees = np.zeros(n, dtype=int)
            for u, v in inst.edges:
                degrees[u] += 1
                degrees[v] += 1
            if degrees.mean() == 0:
                assert degree_tail_ratio_99(inst) is None
                continue
            expected = sorted(degrees)[int(np.ceil(0.99 * n)) - 1] / degrees.mean()
            assert degree_tail_ratio_99(inst) == pytest.approx(expected)


class TestProbMatrixDeviation:
    def test_exact_expectation_is_zero(self):
        # communities {0,1} and {2,3}; intra rate 1, cross rate 0.5 realized exactly
        p_star = np.array([[1.0, 0.5], [0.5, 1.0]])
        inst = synthetic_instance(
            [0, 0, 1, 1],
            edges=[[0, 1], [2, 3], [0, 2], [1, 3]],
            p_star=p_star,
        )
        assert prob_matrix_deviation(inst) == pytest.approx(0.0)

    def test_empty_graph_gives_target_mass(self):
        p_star = np.array([[0.2, 0.4], [0.4, 0.8]])
        inst = synthetic_instance([0, 0, 1, 1], p_star=p_star)
        assert prob_matrix_deviation(inst) == pytest.approx(np.abs(p_star).mean())

    def test_matches_brute_force(self):
        stream = rng_for_graph(42, 0, 1)
        for _ in range(30):
            k = int(stream.integers(2, 4))
            sizes = stream.integers(2, 6, size=k)
            cm = np.repeat(np.arange(k), sizes)
            n = len(cm)
            pairs = np.array([(u, v) for u in range(n) for v in range(u + 1, n)])
            edges = pairs[stream.random(len(pairs)) < 0.4]
            p_star = stream.random((k, k))
            p_star = (p_star + p_star.T) / 2
            inst = synthetic_instance(cm, edges=edges, p_star=p_star)

            counts = np.zeros((k, k))
            for u, v in inst.edges:
                r, s = cm[u], cm[v]
                if r == s:
                    counts[r, r] += 2
                else:
                    counts[r, s] += 1
                    counts[s, r] += 1
            actual = np.zeros((k, k))
            for r in range(k):
                for s in range(k):
                    denom = sizes[r] * (sizes[r] - 1) if r == s else sizes[r] * sizes[s]
                    actual[r, s] = counts[r, s] / denom if denom > 0 else 0.0
            expected = np.abs(actual - p_star).sum() / (k * k)
            assert prob_matrix_deviation(inst) == pytest.approx(expected, abs=1e-12)

    def test_psub_target(self):
        inst = synthetic_instance([0, 0, 1, 1], edges=[[0, 1]], p_sub=np.ones((2, 2)))
        actual = actual_probability_matrix(inst)
        expected = np.abs(actual - np.ones((2, 2))).sum() / 4
        assert prob_matrix_deviation(inst, target="psub") == pytest.approx(expected)


class TestStructureFeatures:
    def test_worked_neighborhood_example(self):
        # five communities; node 0 sees locals [0,0,1,3,3,3] at distance 1,
        # [1,1,2,4,4,4,4] at distance 2, [0,3,3] at distance 3
        node_community = np.array(
            [0, 0, 0, 1, 3, 3, 3, 1, 1, 2, 4, 4, 4, 4, 0, 3, 3], dtype=np.int64
        )
        edges = [[0, i] for i in range(1, 7)]
        edges += [[1, j] for j in range(7, 14)]
        edges += [[7, j] for j in range(14, 17)]
        inst = synthetic_instance(node_community, communities=np.arange(5), edges=edges)
        vector = structure_features(inst)[0]
        assert vector.tolist() == [2, 1, 0, 3, 0, 0, 2, 1, 0, 4, 1, 0, 0, 2, 0]

    def test_isolated_node_all_zero(self):
        inst = synthetic_instance([0, 0, 1], edges=[[0, 1]])
        assert np.all(structure_features(inst)[2] == 0)


class TestSignalStrength:
    def test_separable_features_reach_perfect_f1(self):
        stream = rng_for_graph(43, 0, 0)
        cm = np.repeat([0, 1, 2], 30)
        centroids = np.array([[0.0, 0.0], [10.0, 0.0], [0.0, 10.0]])
        features = centroids[cm] + 0.01 * stream.normal(size=(90, 2))
        inst = synthetic_instance(cm, features=features)
        assert signal_strength(inst, "feature", rng_for_metrics(0, 0)) == 1.0

    def test_noise_features_near_chance(self):
        stream = rng_for_graph(44, 0, 0)
        cm = np.repeat([0, 1, 2, 3], 100)
        features = stream.normal(size=(400, 8))
        inst = synthetic_instance(cm, features=features)
        values = [
            signal_strength(inst, "feature", rng_for_metrics(seed, 0)) for seed in range(3)
        ]
        assert 0.05 < float(np.mean(values)) < 0.45

    def test_single_community_flagged_perfect(self):
        inst = synthetic_instance([0, 0, 0, 0], edges=[[0, 1], [1, 2], [2, 3]])
        assert signal_strength(inst, "degree", rng_for_metrics(1, 0)) == 1.0

    def test_tiny_community_missing(self):
        inst = synthetic_instance([0, 0, 1], edges=[[0, 1], [1, 2]])
        assert signal_strength(inst, "feature", rng_for_metrics(2, 0)) is None

    def test_unknown_signal_rejected(self):
        inst = synthetic_instance([0, 0, 1, 1])
        with pytest.raises(ValueError):
            signal_strength(inst, "nonsense", rng_for_metrics(3, 0))


def _universe_with(propensity, degree_centers=None, centroids=None, seed=0):
    k = len(propensity)
    config = UniverseConfig(community_count=k, seed=seed)
    return Universe(
        config=config,
        propensity_matrix=np.asarray(propensity, dtype=float),
        degree_centers=(
            np.asarray(degree_centers, dtype=float)
            if degree_centers is not None
            else np.zeros(k)
        ),
        feature_centroids=(
            np.asarray(centroids, dtype=float)
            if centroids is not None
            else np.zeros((k, config.feature_dim))
        ),
    )


def _edges_for_counts(sizes, want):
    """Edge list whose per-block pair counts equal ``want`` (upper triangle)."""
    k = len(sizes)
    starts = np.concatenate([[0], np.cumsum(sizes)])
    members = [list(range(starts[i], starts[i + 1])) for i in range(k)]
    edges = []
    for r in range(k):
        for s in range(r, k):
            pairs = (
                [(u, v) for i, u in enumerate(members[r]) for v in members[r][i + 1 :]]
                if r == s
                else [(u, v) for u in members[r] for v in members[s]]
            )
            assert want[r][s] <= len(pairs)
            edges += pairs[: want[r][s]]
    return edges


class TestStructureConsistency:
    PROPENSITY = np.array([[2.0, 1.0, 0.5], [1.0, 1.5, 2.0], [0.5, 2.0, 1.0]])

    def test_rank_preserving_counts_give_one(self):
        universe = _universe_with(self.PROPENSITY)
        sizes = [4, 4, 4]
        # realized rates (diag 2w/12, off w/16) ordered like each propensity row
        want = [[6, 4, 2], [0, 3, 14], [0, 0, 3]]
        inst = synthetic_instance(
            np.repeat([0, 1, 2], 4), edges=_edges_for_counts(sizes, want)
        )
        rates = actual_probability_matrix(inst)
        for i in range(3):
            assert np.array_equal(np.argsort(rates[i]), np.argsort(self.PROPENSITY[i]))
        assert structure_consistency(inst, universe) == pytest.approx(1.0)

    def test_reversed_counts_give_minus_one(self):
        universe = _universe_with(self.PROPENSITY)
        sizes = [4, 4, 4]
        # realized rates ordered opposite to each propensity row
        want = [[0, 5, 8], [0, 1, 2], [0, 0, 1]]
        inst = synthetic_instance(
            np.repeat([0, 1, 2], 4), edges=_edges_for_counts(sizes, want)
        )
        rates = actual_probability_matrix(inst)
        for i in range(3):
            assert np.array_equal(
                np.argsort(rates[i]), np.argsort(self.PROPENSITY[i])[::-1]
            )
        assert structure_consistency(inst, universe) == pytest.approx(-1.0)

    def test_small_k_missing(self, universe10):
        inst = synthetic_instance([0, 0, 1, 1], communities=[2, 5])
        assert structure_consistency(inst, universe10) is None

    def test_matches_spearman_oracle(self, universe10):
        from test_stats import oracle_pearson, oracle_ranks

        family = FamilyConfig(graph_count=3, node_range=(60, 80), community_range=(4, 5))
        for inst in generate_family(universe10, family):
            rows_p = universe10.propensity_matrix[np.ix_(inst.communities, inst.communities)]
            rows_a = actual_probability_matrix(inst)
            expected = []
            for i in range(inst.k):
                rho = oracle_pearson(
                    list(oracle_ranks(rows_p[i])), list(oracle_ranks(rows_a[i]))
                )
                if not np.isnan(rho):
                    expected.append(rho)
            assert structure_consistency(inst, universe10) == pytest.approx(
                float(np.mean(expected)), abs=1e-12
            )

    def test_relabel_invariance(self):
        base_p = np.array([[2.0, 1.0, 0.5], [1.0, 1.5, 2.0], [0.5, 2.0, 1.0]])
        universe = _universe_with(base_p)
        sizes = [4, 4, 4]
        want = [[6, 4, 2], [0, 5, 8], [0, 0, 3]]
        inst = synthetic_instance(
            np.repeat([0, 1, 2], 4), edges=_edges_for_counts(sizes, want)
        )
        value = structure_consistency(inst, universe)

        # relabel community ids with a permutation applied consistently
        perm = np.array([2, 0, 1])  # old id -> new id
        new_p = np.empty_like(base_p)
        for i in range(3):
            for j in range(3):
                new_p[perm[i], perm[j]] = base_p[i, j]
        relabeled_universe = _universe_with(new_p)
        new_ids = perm[inst.communities]
        order = np.argsort(new_ids)
        local_map = np.empty(3, dtype=np.int64)
        local_map[order] = np.arange(3)
        relabeled = synthetic_instance(
            local_map[inst.node_community],
            communities=np.sort(new_ids),
            edges=inst.edges,
        )
        assert structure_consistency(relabeled, relabeled_universe) == pytest.approx(value)


class TestDegreeConsistency:
    def _universe(self):
        return _universe_with(
            np.ones((4, 4)), degree_centers=np.array([0.9, 0.5, 0.2, -0.8])
        )

    def test_identical_orderings_cross_one(self):
        universe = self._universe()
        # one node per community, degrees (3, 2, 2, 1)
        edges = [[0, 1], [0, 2], [0, 3], [1, 2]]
        graphs = [
            synthetic_instance([0, 1, 2, 3], edges=edges, graph_index=i) for i in range(3)
        ]
        values = degree_consistency(graphs, universe)
        # within: Spearman((3, 2, 2, 1), (0.9, 0.5, 0.2, -0.8)) with one tie
        expected_within = 4.5 / np.sqrt(4.5 * 5.0)
        for v in values:
            assert v == pytest.approx((expected_within + 1.0) / 2.0)

    def test_single_graph_falls_back_to_within(self):
        universe = self._universe()
        edges = [[0, 1], [0, 2], [0, 3], [1, 2]]
        graphs = [synthetic_instance([0, 1, 2, 3], edges=edges)]
        values = degree_consistency(graphs, universe)
        expected_within = 4.5 / np.sqrt(4.5 * 5.0)
        assert values[0] == pytest.approx(expected_within)

    def test_hand_built_weighted_average(self):
        universe = _universe_with(
            np.ones((5, 5)), degree_centers=np.array([0.8, 0.4, 0.0, -0.4, -0.8])
        )
        # graph A on communities {0,1,2,3}: degrees 3,2,2,1 (sig ranks known)
        a = synthetic_instance(
            [0, 1, 2, 3],
            communities=[0, 1, 2, 3],
            edges=[[0, 1], [0, 2], [0, 3], [1, 2]],
            graph_index=0,
        )
        # graph B on communities {0,1,2,4}: same degree pattern
        b = synthetic_instance(
            [0, 1, 2, 3],
            communities=[0, 1, 2, 4],
            edges=[[0, 1], [0, 2], [0, 3], [1, 2]],
            graph_index=1,
        )
        sig_a = percentile_signature(a, 5)
        sig_b = percentile_signature(b, 5)
        shared = np.flatnonzero(np.isfinite(sig_a) & np.isfinite(sig_b))
        assert shared.tolist() == [0, 1, 2]
        values = degree_consistency([a, b], universe)
        from graphuniverse.stats import spearman_correlation

        expected_cross = spearman_correlation(sig_a[shared], sig_b[shared])
        within_a = spearman_correlation(
            np.array([3.0, 2.0, 2.0, 1.0]), universe.degree_centers[a.communities]
        )
        assert values[0] == pytest.approx((within_a + expected_cross) / 2.0)


class TestFeatureConsistency:
    def test_identical_features_give_one(self):
        stream = rng_for_graph(45, 0, 0)
        features = stream.normal(size=(8, 3))
        graphs = [
            synthetic_instance([0, 0, 1, 1, 2, 2, 3, 3], features=features, graph_index=i)
            for i in range(3)
        ]
        assert feature_consistency(graphs) == pytest.approx(1.0)

    def test_negated_features_give_minus_one(self):
        stream = rng_for_graph(46, 0, 0)
        features = stream.normal(size=(6, 3))
        a = synthetic_instance([0, 0, 1, 1, 2, 2], features=features, graph_index=0)
        b = synthetic_instance([0, 0, 1, 1, 2, 2], features=-features, graph_index=1)
        assert feature_consistency([a, b]) == pytest.approx(-1.0)

    def test_single_graph_missing(self):
        a = synthetic_instance([0, 0], features=np.ones((2, 2)))
        assert feature_consistency([a]) is None

    def test_lower_cluster_noise_more_consistent(self):
        stream = rng_for_graph(47, 0, 0)
        centroids = stream.normal(size=(4, 6))
        cm = np.repeat([0, 1, 2, 3], 25)

        def family(noise_scale, offset):
            graphs = []
            for g in range(4):
                noise = stream.normal(size=(100, 6))
                graphs.append(
                    synthetic_instance(
                        cm, features=centroids[cm] + noise_scale * noise, graph_index=offset + g
                    )
                )
            return graphs

        tight = feature_consistency(family(0.3, 0))
        loose = feature_consistency(family(3.0, 10))
        assert tight > loose

    def test_orthogonal_rotation_invariance(self):
        stream = rng_for_graph(48, 0, 0)
        cm = np.repeat([0, 1, 2], 10)
        graphs = [
            synthetic_instance(cm, features=stream.normal(size=(30, 5)), graph_index=i)
            for i in range(3)
        ]
        value = feature_consistency(graphs)
        q, _ = np.linalg.qr(stream.normal(size=(5, 5)))
        rotated = [
            synthetic_instance(cm, features=g.features @ q, graph_index=g.graph_index)
            for g in graphs
        ]
        assert feature_consistency(rotated) == pytest.approx(value, abs=1e-9)


class TestValidateFamily:
    def test_full_report_populated(self, universe10):
        family = FamilyConfig(
            graph_count=5,
            node_range=(60, 90),
            community_range=(3, 5),
            homophily_range=(0.4, 0.6),
            degree_range=(4.0, 6.0),
            power_law_range=(3.0, 3.5),
        )
        instances = generate_family(universe10, family)
        report = validate_family(instances, universe10)
        for name in (
            "homophily",
            "avg_degree",
            "degree_tail_ratio_99",
            "prob_matrix_deviation",
            "feature_signal_f1",
            "degree_signal_f1",
            "structure_signal_f1",
            "degree_consistency",
        ):
            assert all(v is not None for v in report.per_graph[name]), name
        assert report.family["feature_consistency"] is not None
        assert report.family["homophily_mean"] is not None
        # bounds
        for v in report.per_graph["homophily"]:
            assert 0.0 <= v <= 1.0
        for name in ("feature_signal_f1", "degree_signal_f1", "structure_signal_f1"):
            assert all(0.0 <= v <= 1.0 for v in report.per_graph[name])
        for v in report.per_graph["degree_consistency"]:
            assert -1.0 <= v <= 1.0

    def test_deterministic_report(self, universe10, small_family):
        instances = generate_family(universe10, small_family)
        a = validate_family(instances, universe10).to_json_dict()
        b = validate_family(instances, universe10).to_json_dict()
        assert a == b

    def test_serialization_roundtrip(self, universe10, small_family):
        instances = generate_family(universe10, small_family)
        report = validate_family(instances, universe10)
        doc = report.to_json_dict()
        assert len(doc["graphs"]) == len(instances)
        csv_text = report.to_csv_text()
        lines = csv_text.strip().split("\n")
        assert lines[0].startswith("graph_index,homophily,")
        assert len(lines) == 1 + len(instances) + 2  # header + rows + mean/std
