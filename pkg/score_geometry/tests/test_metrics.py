"""Tests for one-dimensional, sliced and max-sliced Wasserstein-2 distances."""

import numpy as np
import pytest

from score_geometry.errors import DimensionError, PreconditionError
from score_geometry.metrics import msw2, projected_w2, random_projections, sw2, w2_1d
from score_geometry.numerics import RngStream


class TestW21d:
    """Exact W2 on the line."""

    def test_shifted_point_masses(self):
        assert w2_1d([0.0, 0.0], [1.0, 1.0]) == pytest.approx(1.0)

    def test_identical(self):
        assert w2_1d([1.0, 2.0, 3.0], [3.0, 1.0, 2.0]) == 0.0

    def test_symmetric(self):
        a = np.random.default_rng(0).standard_normal(50)
        b = np.random.default_rng(1).standard_normal(50) + 0.5
        assert w2_1d(a, b) == pytest.approx(w2_1d(b, a))

    def test_unequal_sizes_of_same_point_mass(self):
        assert w2_1d([2.0], [2.0, 2.0, 2.0]) == pytest.approx(0.0)

    def test_unequal_sizes_shift(self):
        assert w2_1d([0.0], [3.0, 3.0]) == pytest.approx(3.0)

    def test_empty(self):
        with pytest.raises(PreconditionError):
            w2_1d([], [1.0])

    def test_metric_axioms_on_random_cases(self):
        rng = np.random.default_rng(7)
        for _ in range(10000):
            n = int(rng.integers(1, 9))
            a, b, c = rng.standard_normal((3, n)) * rng.uniform(0.1, 3.0, size=(3, 1))
            ab, bc, ac = w2_1d(a, b), w2_1d(b, c), w2_1d(a, c)
            assert ab > 0.0
            assert ab == w2_1d(b, a)
            assert w2_1d(a, rng.permutation(a)) == 0.0
            assert ac <= ab + bc + 1e-12

    def test_symmetric_for_unequal_sizes(self):
        rng = np.random.default_rng(8)
        for n, m in [(1, 4), (3, 7), (10, 6)]:
            a, b = rng.standard_normal(n), rng.standard_normal(m)
            assert w2_1d(a, b) == pytest.approx(w2_1d(b, a), rel=1e-12)
            assert w2_1d(a, b) >= 0.0

    @pytest.mark.parametrize("m1,s1,m2,s2", [(0.0, 1.0, 0.0, 2.0), (0.5, 1.0, -1.0, 1.5)])
    def test_gaussian_closed_form(self, m1, s1, m2, s2):
        rng = np.random.default_rng(9)
        a = rng.normal(m1, s1, size=100000)
        b = rng.normal(m2, s2, size=100000)
        assert w2_1d(a, b) == pytest.approx(np.hypot(m1 - m2, s1 - s2), rel=0.02)


class TestSliced:
    """Random-projection distances."""

    def test_projections_are_unit_and_nested(self):
        many = random_projections(3, 10, RngStream(0))
        few = random_projections(3, 4, RngStream(0))
        np.testing.assert_allclose(np.linalg.norm(many.directions, axis=1), 1.0)
        np.testing.assert_array_equal(few.directions, many.directions[:4])

    def test_zero_for_identical_sets(self):
        x = np.random.default_rng(0).standard_normal((20, 3))
        assert sw2(x, x, stream=RngStream(1)) == 0.0
        assert msw2(x, x, stream=RngStream(1)) == 0.0

    def test_point_masses_sphere_moment(self):
        """E[(theta . u)^2] = 1 / D on the unit sphere."""
        dim = 4
        u = np.zeros(dim)
        u[0] = 1.0
        x, y = np.zeros((5, dim)), np.tile(u, (5, 1))
        assert sw2(x, y, l=20000, stream=RngStream(2)) ** 2 == pytest.approx(1.0 / dim, rel=0.1)
        value = msw2(x, y, l=20000, stream=RngStream(2))
        assert 0.95 < value <= 1.0

    def test_max_dominates_mean(self):
        rng = np.random.default_rng(3)
        x, y = rng.standard_normal((50, 3)), rng.standard_normal((50, 3)) * 2.0
        projections = random_projections(3, 200, RngStream(4))
        assert msw2(x, y, projections=projections) >= sw2(x, y, projections=projections)

    def test_default_projection_count(self):
        x = np.zeros((3, 2))
        distances = projected_w2(x, x + 1.0, random_projections(2, 128, RngStream(5)))
        assert distances.shape == (128,)

    def test_unequal_sizes_match_quantile_evaluation(self):
        """Hazen quantiles of both projections, compared at the union of plotting positions."""
        rng = np.random.default_rng(10)
        x, y = rng.standard_normal((7, 3)), rng.standard_normal((5, 3)) * 1.5 + 0.2
        projections = random_projections(3, 6, RngStream(11))
        positions = np.union1d((np.arange(7) + 0.5) / 7, (np.arange(5) + 0.5) / 5)
        expected = []
        for direction in projections.directions:
            qx = np.quantile(x @ direction, positions, method="hazen")
            qy = np.quantile(y @ direction, positions, method="hazen")
            expected.append(np.sqrt(np.mean((qx - qy) ** 2)))
        np.testing.assert_allclose(projected_w2(x, y, projections), expected, rtol=1e-12)

    def test_requires_stream_or_projections(self):
        with pytest.raises(PreconditionError):
            sw2(np.zeros((2, 2)), np.zeros((2, 2)))

    def test_dimension_mismatch(self):
        with pytest.raises(DimensionError):
            sw2(np.zeros((2, 2)), np.zeros((2, 3)), stream=RngStream(0))

    def test_invalid_projection_count(self):
        with pytest.raises(PreconditionError):
            random_projections(2, 0, RngStream(0))
