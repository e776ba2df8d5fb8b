"""Tests for geometry estimation, closed-form geometries, SAD extraction and export."""

import numpy as np
import pytest
from artifact_store import ArtifactStore

from score_geometry.core import FamilyRegistry
from score_geometry.errors import ConfigError, EstimationError, NotUnitError, PreconditionError
from score_geometry.geometry import (
    ProbeDistribution,
    analytic_geometry,
    chunk_size,
    distinct_eigenvalue_count,
    encode_pgm,
    estimate_geometry,
    extract_sads,
    markov_bound,
    read_geometry_matrix,
    sad_strip,
    to_gray,
    write_geometry,
)
from score_geometry.numerics import RngStream, gaussian

LEVELS = (0.5, 1.0, 2.0)


def _within_se(estimate, expected, k=5.0, floor=1e-3):
    assert np.all(np.abs(estimate.g - expected) <= k * estimate.standard_error + floor)


class TestProbeDistribution:
    """Probe input draws."""

    def test_delta_zero_inputs(self):
        x, sigmas = ProbeDistribution.delta_zero(LEVELS).draw(RngStream(0), 100, 3)
        assert np.all(x == 0.0)
        assert set(np.unique(sigmas)) <= set(LEVELS)

    def test_isotropic_scale(self):
        x, _ = ProbeDistribution.isotropic_gaussian(2.0, LEVELS).draw(RngStream(0), 20000, 2)
        assert np.std(x) == pytest.approx(2.0, rel=0.02)

    def test_around_sample_requires_samples(self):
        with pytest.raises(ConfigError):
            ProbeDistribution("around_sample", LEVELS)

    def test_unknown_kind(self):
        with pytest.raises(ConfigError):
            ProbeDistribution("uniform_box", LEVELS)

    def test_from_config_defaults_to_schedule(self):
        probe = ProbeDistribution.from_config({"KIND": "delta_zero"})
        assert len(probe.sigma_levels) == 1000


class TestEstimateGeometry:
    """Monte Carlo average of network outer products."""

    def test_linear_isotropic_is_scaled_identity(self):
        family = FamilyRegistry.create("linear", {"dim": 3})
        estimate = estimate_geometry(family, ProbeDistribution.isotropic_gaussian(1.0, LEVELS), 4000, RngStream(1))
        assert estimate.n_samples == 4000
        _within_se(estimate, 3.0 * np.eye(3))

    def test_linear_with_fixed_phi(self):
        """G = E||x||^2 Phi Phi^T for Theta with iid standard normal entries."""
        family = FamilyRegistry.create("linear", phi=np.diag([2.0, 1.0]))
        estimate = estimate_geometry(family, ProbeDistribution.isotropic_gaussian(1.0, LEVELS), 10000, RngStream(12))
        _within_se(estimate, np.diag([8.0, 2.0]))

    def test_mlp_bias_only_at_zero_input(self):
        family = FamilyRegistry.create(
            "mlp",
            {"dim": 3, "depth": 0, "activation": "tanh", "sigma_embedding": False, "bias_mean": 0.3, "bias_std": 0.5},
        )
        estimate = estimate_geometry(family, ProbeDistribution.delta_zero(LEVELS), 4000, RngStream(2))
        expected = analytic_geometry(
            "mlp_last_layer",
            {"dim": 3, "activation": "tanh", "h_samples": [[0.0, 0.0, 0.0]], "bias_mean": 0.3, "bias_var": 0.25},
        )
        _within_se(estimate, expected)

    def test_independent_of_worker_count(self):
        family = FamilyRegistry.create("mlp", {"dim": 3, "width": 4, "n_frequencies": 2})
        probe = ProbeDistribution.isotropic_gaussian(1.0, LEVELS)
        serial = estimate_geometry(family, probe, 2500, RngStream(3), workers=1)
        parallel = estimate_geometry(family, probe, 2500, RngStream(3), workers=4)
        np.testing.assert_array_equal(serial.g, parallel.g)
        np.testing.assert_array_equal(serial.standard_error, parallel.standard_error)

    def test_symmetric_output(self):
        family = FamilyRegistry.create("mlp", {"dim": 4, "width": 6})
        estimate = estimate_geometry(family, ProbeDistribution.isotropic_gaussian(1.0, LEVELS), 50, RngStream(4))
        np.testing.assert_array_equal(estimate.g, estimate.g.T)
        assert estimate.summary()["dim"] == 4

    def test_rejects_non_positive_samples(self):
        family = FamilyRegistry.create("linear", {"dim": 2})
        with pytest.raises(PreconditionError):
            estimate_geometry(family, ProbeDistribution.delta_zero(LEVELS), 0, RngStream(0))

    def test_non_finite_outputs_raise(self):
        family = FamilyRegistry.create("linear", {"dim": 2, "theta_mean": 1e300, "theta_std": 0.0})
        probe = ProbeDistribution.isotropic_gaussian(1e10, LEVELS)
        with pytest.raises(EstimationError):
            estimate_geometry(family, probe, 20, RngStream(0))

    def test_chunk_size_depends_on_dimension_only(self):
        assert chunk_size(2) == 1000
        assert chunk_size(4096) == 1


class TestAnalyticGeometry:
    """Closed-form geometries match Monte Carlo estimates."""

    def test_mlp_identity_formula(self):
        g = analytic_geometry(
            "mlp_last_layer",
            {"dim": 2, "h_samples": [[1.0, 1.0]], "weight_mean": 0.5, "weight_var": 2.0, "bias_var": 1.0},
        )
        # mean 0.5 * 2 = 1, variance 2 * 2 + 1 = 5
        np.testing.assert_allclose(g, 5.0 * np.eye(2) + np.ones((2, 2)))

    def test_token_matches_estimate(self):
        family = FamilyRegistry.create("token_linear", {"height": 4, "width": 4, "patch": 2, "bias_std": 0.5})
        estimate = estimate_geometry(family, ProbeDistribution.isotropic_gaussian(1.0, LEVELS), 6000, RngStream(6))
        expected = analytic_geometry(
            "token_linear",
            {
                "token_gram": 4.0 * np.eye(4),
                "l_out": 4,
                "weight_var": 0.25,
                "bias_var": 0.25,
                "shared_bias": True,
                "q": family.unpatchify_matrix(),
            },
        )
        _within_se(estimate, expected)

    @pytest.mark.slow
    def test_conv_matches_estimate(self):
        family = FamilyRegistry.create(
            "conv_unet_mini", {"height": 4, "width": 4, "levels": 0, "weight_std": 1.0 / 3.0, "bias_std": 0.5}
        )
        probe = ProbeDistribution.isotropic_gaussian(1.0, LEVELS)
        estimate = estimate_geometry(family, probe, 20000, RngStream(7))
        h = gaussian(RngStream(8), 20000 * 16).reshape(20000, 1, 4, 4)
        expected = analytic_geometry(
            "conv_last_layer", {"h_samples": h, "c_out": 1, "weight_var": 1.0 / 9.0, "bias_var": 0.25}
        )
        np.testing.assert_allclose(estimate.g, expected, atol=0.08)

    def test_token_without_shared_bias_is_block_diagonal(self):
        g = analytic_geometry("token_linear", {"token_gram": np.eye(2), "l_out": 1, "bias_var": 1.0})
        np.testing.assert_allclose(g, 2.0 * np.eye(2))

    def test_unknown_kind(self):
        with pytest.raises(ConfigError):
            analytic_geometry("attention", {})


class TestSads:
    """Eigenvectors of the geometry ranked by ascending eigenvalue."""

    def test_ascending_order(self):
        sads = extract_sads(np.diag([3.0, 1.0, 2.0]))
        np.testing.assert_allclose(sads.eigenvalues, [1.0, 2.0, 3.0])
        np.testing.assert_allclose(np.abs(sads.directions), np.eye(3)[:, [1, 2, 0]])

    def test_identity_gives_canonical_basis(self):
        sads = extract_sads(np.eye(4))
        np.testing.assert_allclose(sads.directions, np.eye(4), atol=1e-12)

    def test_rank_one_update(self):
        sads = extract_sads(2.0 * np.eye(3) + np.ones((3, 3)))
        np.testing.assert_allclose(sads.eigenvalues, [2.0, 2.0, 5.0], atol=1e-12)
        np.testing.assert_allclose(sads.direction(2), np.ones(3) / np.sqrt(3.0), atol=1e-12)
        np.testing.assert_allclose(sads.directions[:, :2].T @ np.ones(3), 0.0, atol=1e-12)

    @pytest.mark.slow
    def test_token_geometry_has_few_distinct_eigenvalues(self):
        """A shared token map has at most T distinct eigenvalues (T = 4 tokens here)."""
        family = FamilyRegistry.create("token_linear", {"height": 4, "width": 4, "patch": 2})
        estimate = estimate_geometry(family, ProbeDistribution.isotropic_gaussian(1.0, LEVELS), 100000, RngStream(13))
        assert distinct_eigenvalue_count(extract_sads(estimate).eigenvalues, rel_tol=1e-2) <= 4

    def test_orthonormal(self):
        a = np.random.default_rng(0).standard_normal((6, 6))
        sads = extract_sads(a @ a.T)
        np.testing.assert_allclose(sads.directions.T @ sads.directions, np.eye(6), atol=1e-10)
        assert np.all(np.diff(sads.eigenvalues) >= 0)

    def test_not_psd_rejected(self):
        with pytest.raises(EstimationError):
            extract_sads(np.diag([1.0, -1.0]))

    def test_tiny_negative_clamped(self):
        sads = extract_sads(np.diag([1.0, -1e-12]))
        assert sads.eigenvalues[0] == 0.0

    def test_distinct_eigenvalue_count(self):
        assert distinct_eigenvalue_count([1.0, 1.0 + 1e-9, 2.0, 3.0]) == 3
        assert distinct_eigenvalue_count([1.0, 1.005, 2.0], rel_tol=1e-2) == 2
        assert distinct_eigenvalue_count([]) == 0

    def test_markov_bound(self):
        g = np.diag([4.0, 1.0])
        assert markov_bound(np.array([1.0, 0.0]), g, 2.0) == pytest.approx(1.0)
        bounds = extract_sads(g).markov_bounds(g, 1.0)
        np.testing.assert_allclose(bounds, [1.0, 4.0])

    def test_markov_bound_preconditions(self):
        with pytest.raises(NotUnitError):
            markov_bound(np.array([1.0, 1.0]), np.eye(2), 1.0)
        with pytest.raises(PreconditionError):
            markov_bound(np.array([1.0, 0.0]), np.eye(2), 0.0)


class TestExport:
    """CSV, JSON sidecar and PGM output."""

    def test_geometry_round_trip(self, tmp_path):
        family = FamilyRegistry.create("linear", {"dim": 2})
        estimate = estimate_geometry(family, ProbeDistribution.isotropic_gaussian(1.0, LEVELS), 100, RngStream(0))
        store = ArtifactStore(str(tmp_path))
        write_geometry(store, "geometry", estimate)
        np.testing.assert_array_equal(read_geometry_matrix(store, "geometry"), estimate.g)
        assert store.read_json("geometry.json")["n_samples"] == 100
        assert store.exists("geometry_se.csv")

    def test_to_gray(self):
        np.testing.assert_array_equal(to_gray(np.array([[0.0, 1.0]])), [[0, 255]])
        np.testing.assert_array_equal(to_gray(np.ones((2, 2))), np.full((2, 2), 128))

    def test_encode_pgm(self):
        text = encode_pgm(np.array([[0, 255, 7]], dtype=np.uint8))
        assert text == "P2\n3 1\n255\n0 255 7\n"

    def test_sad_strip_layout(self):
        strip = sad_strip(extract_sads(np.eye(4)), (2, 2), [0, 1, 2])
        assert strip.shape == (2, 3 * 2 + 2)
        assert np.all(strip[:, 2] == 0)
