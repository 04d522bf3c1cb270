"""Correlation and F1 implementations checked against independent oracles.

The oracles deliberately avoid the library's code paths: ranks by O(n^2)
comparison counting, Pearson by explicit loops, p-values through mpmath's
regularized incomplete beta, macro-F1 from a hand-built confusion matrix.
"""

import mpmath
import numpy as np
import pytest

from graphuniverse.core import rng_for_graph
from graphuniverse.stats import (
    average_ranks,
    macro_f1,
    pearson_correlation,
    pearson_with_pvalue,
    spearman_correlation,
    stratified_split,
)


def oracle_ranks(values):
    n = len(values)
    ranks = []
    for i in range(n):
        less = sum(1 for j in range(n) if values[j] < values[i])
        equal = sum(1 for j in range(n) if values[j] == values[i])
        # average of ranks less+1 .. less+equal
        ranks.append(less + (equal + 1) / 2.0)
    return np.array(ranks)


def oracle_pearson(x, y):
    n = len(x)
    mx = sum(x) / n
    my = sum(y) / n
    num = sum((a - mx) * (b - my) for a, b in zip(x, y))
    dx = sum((a - mx) ** 2 for a in x)
    dy = sum((b - my) ** 2 for b in y)
    if dx == 0 or dy == 0:
        return float("nan")
    return num / (dx**0.5 * dy**0.5)


def oracle_student_t_two_sided_p(t_stat, dof):
    # survival of |t| via the regularized incomplete beta
    t = abs(float(t_stat))
    x = dof / (dof + t * t)
    p = mpmath.betainc(dof / 2.0, 0.5, 0, x, regularized=True)
    return float(p)


def oracle_macro_f1(y_true, y_pred, labels):
    scores = []
    for c in labels:
        tp = sum(1 for t, p in zip(y_true, y_pred) if t == c and p == c)
        fp = sum(1 for t, p in zip(y_true, y_pred) if t != c and p == c)
        fn = sum(1 for t, p in zip(y_true, y_pred) if t == c and p != c)
        precision = tp / (tp + fp) if tp + fp else 0.0
        recall = tp / (tp + fn) if tp + fn else 0.0
        scores.append(
            2 * precision * recall / (precision + recall) if precision + recall else 0.0
        )
    return sum(scores) / len(scores)


def random_vector_pairs(count=100):
    stream = rng_for_graph(31, 31, 0)
    for _ in range(count):
        n = int(stream.integers(3, 51))
        # mix continuous values and coarse ties
        x = np.round(stream.normal(size=n), int(stream.integers(0, 3)))
        y = np.round(stream.normal(size=n), int(stream.integers(0, 3)))
        yield x, y


class TestRanksAndCorrelations:
    def test_average_ranks_with_ties(self):
        assert average_ranks(np.array([3.0, 1.0, 3.0, 2.0])).tolist() == [3.5, 1.0, 3.5, 2.0]

    def test_ranks_match_oracle(self):
        for x, _ in random_vector_pairs(100):
            assert np.allclose(average_ranks(x), oracle_ranks(x), atol=1e-12)

    def test_pearson_matches_oracle(self):
        for x, y in random_vector_pairs(100):
            ours = pearson_correlation(x, y)
            ref = oracle_pearson(list(x), list(y))
            if np.isnan(ref):
                assert np.isnan(ours)
            else:
                assert ours == pytest.approx(ref, abs=1e-12)

    def test_spearman_matches_oracle(self):
        for x, y in random_vector_pairs(100):
            ours = spearman_correlation(x, y)
            ref = oracle_pearson(list(oracle_ranks(x)), list(oracle_ranks(y)))
            if np.isnan(ref):
                assert np.isnan(ours)
            else:
                assert ours == pytest.approx(ref, abs=1e-12)

    def test_spearman_perfect_orders(self):
        x = np.array([1.0, 2.0, 5.0, 9.0])
        assert spearman_correlation(x, x * 3.0 + 1) == pytest.approx(1.0)
        assert spearman_correlation(x, -x) == pytest.approx(-1.0)


class TestPearsonPValue:
    def test_p_matches_beta_oracle(self):
        for x, y in random_vector_pairs(60):
            r, p = pearson_with_pvalue(x, y)
            if not np.isfinite(r) or abs(r) >= 1.0:
                continue
            n = len(x)
            t = r * np.sqrt((n - 2) / (1 - r * r))
            assert p == pytest.approx(oracle_student_t_two_sided_p(t, n - 2), abs=1e-12)

    def test_known_point(self):
        # r = 0.5 with N = 100 gives p around 1.2e-7
        stream = rng_for_graph(32, 32, 0)
        n = 100
        t = 0.5 * np.sqrt((n - 2) / (1 - 0.25))
        p = oracle_student_t_two_sided_p(t, n - 2)
        assert p == pytest.approx(1.2e-7, rel=0.2)
        x = stream.normal(size=n)
        # construct y with exact empirical correlation 0.5 against x
        resid = stream.normal(size=n)
        resid -= resid.mean()
        x_c = x - x.mean()
        resid -= x_c * (resid @ x_c) / (x_c @ x_c)
        y = 0.5 * x_c / np.linalg.norm(x_c) + np.sqrt(0.75) * resid / np.linalg.norm(resid)
        r, p_ours = pearson_with_pvalue(x, y)
        assert r == pytest.approx(0.5, abs=1e-12)
        assert p_ours == pytest.approx(p, rel=1e-9)

    def test_degenerate_inputs(self):
        r, p = pearson_with_pvalue(np.ones(10), np.arange(10.0))
        assert np.isnan(r) and np.isnan(p)


class TestMacroF1:
    def test_hand_confusion_matrix(self):
        y_true = np.array([0, 0, 0, 1, 1, 2])
        y_pred = np.array([0, 1, 0, 1, 1, 0])
        # class 0: tp=2 fp=1 fn=1 -> f1 = 4/6; class 1: tp=2 fp=1 fn=0 -> 4/5
        # class 2: tp=0 -> 0
        expected = (4 / 6 + 4 / 5 + 0.0) / 3
        assert macro_f1(y_true, y_pred, labels=[0, 1, 2]) == pytest.approx(expected)

    def test_perfect_prediction(self):
        y = np.array([0, 1, 2, 1, 0])
        assert macro_f1(y, y) == 1.0

    def test_matches_oracle_on_random_labelings(self):
        stream = rng_for_graph(33, 33, 0)
        for _ in range(100):
            k = int(stream.integers(2, 6))
            n = int(stream.integers(5, 60))
            y_true = stream.integers(0, k, size=n)
            y_pred = stream.integers(0, k, size=n)
            labels = list(range(k))
            assert macro_f1(y_true, y_pred, labels) == pytest.approx(
                oracle_macro_f1(y_true, y_pred, labels), abs=1e-12
            )


class TestStratifiedSplit:
    def test_every_class_on_both_sides(self):
        labels = np.repeat([0, 1, 2, 3], [2, 3, 50, 7])
        train, test = stratified_split(rng_for_graph(34, 34, 0), labels)
        for c in range(4):
            assert c in labels[train] and c in labels[test]
        assert len(np.intersect1d(train, test)) == 0
        assert len(train) + len(test) == len(labels)

    def test_fraction(self):
        labels = np.repeat([0, 1], 100)
        train, _ = stratified_split(rng_for_graph(35, 35, 0), labels, 0.7)
        assert len(train) == 140

    def test_rejects_singleton_class(self):
        with pytest.raises(ValueError):
            stratified_split(rng_for_graph(0, 0, 0), np.array([0, 1, 1]))
