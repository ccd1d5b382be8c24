import numpy as np
import pytest

from voiceface.core.errors import DimensionMismatch, InvalidConfig, ZeroVector
from voiceface.core.metric_space import (
    MetricSpaceConfig,
    best_match,
    euclidean_distance,
    inner_product_similarity,
    l2_normalize_scale,
    nearest_by_distance,
    rank_by_similarity,
    similarity_matrix,
)


class TestMetricSpaceConfig:
    def test_defaults(self):
        cfg = MetricSpaceConfig()
        assert cfg.dim == 128
        assert cfg.scale == 128.0

    @pytest.mark.parametrize("dim,scale", [(0, 1.0), (3, 0.0), (3, -2.0)])
    def test_rejects_invalid(self, dim, scale):
        with pytest.raises(InvalidConfig):
            MetricSpaceConfig(dim=dim, scale=scale)

    def test_dict_round_trip(self):
        cfg = MetricSpaceConfig(dim=7, scale=3.5)
        assert MetricSpaceConfig.from_dict(cfg.to_dict()) == cfg


class TestNormalize:
    def test_unit_scale(self):
        np.testing.assert_allclose(l2_normalize_scale([3.0, 4.0], MetricSpaceConfig(2, 1.0)), [0.6, 0.8])

    def test_scale_128(self):
        np.testing.assert_allclose(l2_normalize_scale([3.0, 4.0], MetricSpaceConfig(2, 128.0)), [76.8, 102.4])

    def test_zero_vector(self):
        with pytest.raises(ZeroVector):
            l2_normalize_scale([0.0, 0.0], MetricSpaceConfig(2, 128.0))

    def test_norm_equals_scale(self):
        rng = np.random.default_rng(0)
        cfg = MetricSpaceConfig(16, 128.0)
        rows = l2_normalize_scale(rng.standard_normal((200, 16)), cfg)
        np.testing.assert_allclose(np.linalg.norm(rows, axis=1), 128.0, rtol=1e-6)

    def test_normalizing_twice_changes_nothing(self):
        rng = np.random.default_rng(2)
        cfg = MetricSpaceConfig(16, 128.0)
        once = l2_normalize_scale(rng.standard_normal((50, 16)), cfg)
        np.testing.assert_allclose(l2_normalize_scale(once, cfg), once, rtol=1e-12)

    def test_one_zero_row_fails_whole_matrix(self):
        with pytest.raises(ZeroVector):
            l2_normalize_scale(np.array([[1.0, 0.0], [0.0, 0.0]]), MetricSpaceConfig(2, 1.0))


class TestSimilarityAndDistance:
    def test_self_similarity(self):
        a = l2_normalize_scale([1.0, 2.0, 3.0], MetricSpaceConfig(3, 5.0))
        assert inner_product_similarity(a, a) == pytest.approx(25.0)

    def test_orthogonal(self):
        assert inner_product_similarity([2.0, 0.0], [0.0, 3.0]) == 0.0

    def test_hand_computed_dot(self):
        assert inner_product_similarity([0.6, 0.8], [0.8, 0.6]) == pytest.approx(0.96)

    def test_distance_to_self(self):
        assert euclidean_distance([1.0, -2.0], [1.0, -2.0]) == 0.0

    def test_distance(self):
        assert euclidean_distance([0.0, 0.0], [3.0, 4.0]) == pytest.approx(5.0)

    def test_distance_and_similarity_identity(self):
        # d(a, b)^2 + 2<a, b> = 2 s^2 on the sphere of radius s
        rng = np.random.default_rng(3)
        for scale in (1.0, 4.0, 128.0):
            cfg = MetricSpaceConfig(8, scale)
            a = l2_normalize_scale(rng.standard_normal((20, 8)), cfg)
            b = l2_normalize_scale(rng.standard_normal((20, 8)), cfg)
            for x, y in zip(a, b):
                total = euclidean_distance(x, y) ** 2 + 2 * inner_product_similarity(x, y)
                assert total == pytest.approx(2 * scale ** 2, rel=1e-9)

    def test_antipodal_distance(self):
        cfg = MetricSpaceConfig(2, 3.0)
        a = l2_normalize_scale([1.0, 0.0], cfg)
        assert euclidean_distance(a, -a) == pytest.approx(6.0)
        assert inner_product_similarity(a, -a) == pytest.approx(-9.0)

    def test_dimension_mismatch(self):
        with pytest.raises(DimensionMismatch):
            inner_product_similarity([1.0, 2.0], [1.0, 2.0, 3.0])
        with pytest.raises(DimensionMismatch):
            euclidean_distance([1.0], [1.0, 2.0])
        with pytest.raises(DimensionMismatch):
            similarity_matrix(np.ones((2, 3)), np.ones((4, 2)))

    def test_similarity_bounded_by_squared_scale(self):
        rng = np.random.default_rng(1)
        cfg = MetricSpaceConfig(8, 4.0)
        a = l2_normalize_scale(rng.standard_normal((50, 8)), cfg)
        b = l2_normalize_scale(rng.standard_normal((50, 8)), cfg)
        sims = similarity_matrix(a, b)
        assert np.all(np.abs(sims) <= 16.0 + 1e-9)
        np.testing.assert_allclose(sims, similarity_matrix(b, a).T)


class TestRanking:
    def test_argmax_similarity_equals_argmin_distance(self):
        rng = np.random.default_rng(2)
        cfg = MetricSpaceConfig(6, 128.0)
        for _ in range(100):
            query = l2_normalize_scale(rng.standard_normal(6), cfg)
            candidates = l2_normalize_scale(rng.standard_normal((9, 6)), cfg)
            assert best_match(query, candidates) == nearest_by_distance(query, candidates)

    def test_ties_go_to_lowest_index(self):
        query = np.array([1.0, 0.0])
        candidates = np.array([[0.0, 1.0], [1.0, 0.0], [1.0, 0.0]])
        assert best_match(query, candidates) == 1
        assert nearest_by_distance(query, candidates) == 1
        assert rank_by_similarity(query, candidates).tolist() == [1, 2, 0]

    def test_rank_matches_brute_force_sort(self):
        rng = np.random.default_rng(0)
        query = rng.standard_normal(4)
        candidates = rng.standard_normal((12, 4))
        scores = [float(np.dot(query, c)) for c in candidates]
        expected = sorted(range(12), key=lambda i: (-scores[i], i))
        assert rank_by_similarity(query, candidates).tolist() == expected
