"""Tests for the noise schedule, DSM loss, training and samplers."""

import numpy as np
import pytest

from score_geometry.core import FamilyRegistry, ParamSet
from score_geometry.diffusion import (
    TrainConfig,
    dsm_loss,
    epsilon_to_score,
    make_schedule,
    mid_sigma,
    sample_ancestral,
    sample_langevin,
    score_function,
    train,
)
from score_geometry.errors import ConfigError, DimensionError, DivergenceError, PreconditionError
from score_geometry.numerics import RngStream, gaussian


def _standard_normal(n, dim, seed=0):
    return gaussian(RngStream(seed, 1), n * dim).reshape(n, dim)


class TestSchedule:
    """Linear DDPM schedule."""

    def test_default_range(self):
        schedule = make_schedule()
        assert schedule.n_steps == 1000
        assert schedule.sigma_min == pytest.approx(np.sqrt(1e-4 / (1 - 1e-4)))
        assert np.all(np.diff(schedule.sigmas) > 0)
        assert schedule.sigma(1) == schedule.sigma_min

    def test_invalid_ranges(self):
        with pytest.raises(PreconditionError):
            make_schedule(1)
        with pytest.raises(PreconditionError):
            make_schedule(10, 0.02, 0.01)

    def test_mid_sigma(self):
        assert mid_sigma(0.01, 100.0) == pytest.approx(1.0)


class TestDsmLoss:
    """Monte Carlo DSM objective."""

    def test_zero_predictor_loss_is_dimension(self):
        family = FamilyRegistry.create("linear", {"dim": 3})
        params = family.params_from_theta(np.zeros((3, 3)))
        result = dsm_loss(family, params, _standard_normal(20000, 3), make_schedule(), RngStream(2))
        assert result.loss == pytest.approx(3.0, rel=0.03)
        assert result.cotangent.shape == (20000, 3)

    def test_oracle_beats_zero_predictor(self):
        data = _standard_normal(5000, 2) * np.array([2.0, 0.5])
        oracle = FamilyRegistry.create("gaussian_oracle", covariance=np.diag([4.0, 0.25]))
        oracle_loss = dsm_loss(oracle, oracle.sample_params(RngStream(0)), data, make_schedule(), RngStream(5)).loss
        assert oracle_loss < 2.0

    def test_dimension_mismatch(self):
        family = FamilyRegistry.create("linear", {"dim": 3})
        with pytest.raises(DimensionError):
            dsm_loss(family, family.sample_params(RngStream(0)), np.zeros((4, 2)), make_schedule(), RngStream(0))

    def test_empty_batch(self):
        family = FamilyRegistry.create("linear", {"dim": 2})
        with pytest.raises(PreconditionError):
            dsm_loss(family, family.sample_params(RngStream(0)), np.zeros((0, 2)), make_schedule(), RngStream(0))

    def test_unknown_parameterization(self):
        family = FamilyRegistry.create("linear", {"dim": 2})
        with pytest.raises(ConfigError):
            dsm_loss(
                family, family.sample_params(RngStream(0)), np.zeros((4, 2)), make_schedule(), RngStream(0), "velocity"
            )


class TestTrainConfig:
    """Validation of optimization settings."""

    def test_from_config_lowercases_and_sets_seed(self):
        config = TrainConfig.from_config({"BATCH_SIZE": 8, "iterations": 3}, seed=12)
        assert (config.batch_size, config.iterations, config.seed) == (8, 3, 12)

    def test_unknown_key(self):
        with pytest.raises(ConfigError, match="Unexpected TRAIN"):
            TrainConfig.from_config({"epochs": 3})

    def test_invalid_values(self):
        with pytest.raises(ConfigError):
            TrainConfig(learning_rate=0.0)
        with pytest.raises(ConfigError):
            TrainConfig(optimizer="lbfgs")


class TestTrain:
    """Minibatch DSM training."""

    def test_linear_score_converges_to_optimum(self):
        """For N(0, I) data at sigma = 1 the optimal linear score is -x / 2."""
        family = FamilyRegistry.create("linear", {"dim": 2})
        config = TrainConfig(
            batch_size=64,
            iterations=3000,
            learning_rate=0.01,
            seed=4,
            parameterization="score",
            fixed_sigma=1.0,
            log_every=500,
        )
        trace = train(family, _standard_normal(2000, 2), config)
        np.testing.assert_allclose(trace.params["theta"], -0.5 * np.eye(2), atol=0.1)
        assert trace.losses[-1] < trace.losses[0]
        assert list(trace.to_frame().columns) == ["step", "loss"]

    def test_reproducible(self):
        family = FamilyRegistry.create("mlp", {"dim": 2, "width": 4, "n_frequencies": 2})
        config = TrainConfig(batch_size=8, iterations=5, seed=3, log_every=1)
        data = _standard_normal(32, 2)
        first, second = train(family, data, config), train(family, data, config)
        np.testing.assert_array_equal(first.params.flat(), second.params.flat())
        assert first.losses == second.losses

    def test_divergence_carries_trace(self):
        family = FamilyRegistry.create("linear", {"dim": 2})
        config = TrainConfig(batch_size=16, iterations=200, learning_rate=50.0, optimizer="sgd", log_every=1)
        with pytest.raises(DivergenceError) as info:
            train(family, _standard_normal(64, 2) * 10.0, config)
        assert info.value.trace is not None
        assert info.value.step is not None

    def test_empty_dataset(self):
        family = FamilyRegistry.create("linear", {"dim": 2})
        with pytest.raises(PreconditionError):
            train(family, np.zeros((0, 2)), TrainConfig(iterations=1))


class TestSamplers:
    """Ancestral and Langevin sampling."""

    def test_epsilon_to_score(self):
        np.testing.assert_allclose(epsilon_to_score(np.array([2.0, -4.0]), 2.0), [-1.0, 2.0])
        with pytest.raises(PreconditionError):
            epsilon_to_score(np.ones(2), 0.0)

    def test_ancestral_with_oracle_matches_covariance(self):
        oracle = FamilyRegistry.create("gaussian_oracle", covariance=np.diag([4.0, 0.25]))
        samples = sample_ancestral(oracle, oracle.sample_params(RngStream(0)), make_schedule(), 4000, RngStream(9))
        cov = np.cov(samples.samples.T)
        assert cov[0, 0] == pytest.approx(4.0, rel=0.15)
        assert cov[1, 1] == pytest.approx(0.25, rel=0.15)
        assert abs(cov[0, 1]) < 0.1

    def test_ancestral_zero_samples(self):
        oracle = FamilyRegistry.create("gaussian_oracle", {"dim": 3})
        assert sample_ancestral(oracle, oracle.sample_params(RngStream(0)), make_schedule(), 0, RngStream(1)).n == 0

    def test_ancestral_divergence(self):
        family = FamilyRegistry.create("linear", {"dim": 2})
        params = ParamSet("linear", {"theta": np.full((2, 2), 1e200)})
        with pytest.raises(DivergenceError) as info:
            sample_ancestral(family, params, make_schedule(10), 4, RngStream(1))
        assert info.value.step is not None

    def test_langevin_stationary_variance(self):
        trajectory = sample_langevin(lambda x: -x, np.zeros(50), 0.01, 20000, RngStream(3))
        assert trajectory.shape == (20001, 50)
        assert np.var(trajectory[2000:]) == pytest.approx(1.0, abs=0.1)

    def test_langevin_with_oracle_score(self):
        oracle = FamilyRegistry.create("gaussian_oracle", {"dim": 2})
        score = score_function(oracle, oracle.sample_params(RngStream(0)), 0.5)
        # for N(0, I) data the score at level sigma is -x / (1 + sigma^2)
        np.testing.assert_allclose(score(np.array([1.0, -2.0])), np.array([-1.0, 2.0]) / 1.25)

    def test_langevin_rejects_bad_step(self):
        with pytest.raises(PreconditionError):
            sample_langevin(lambda x: -x, np.zeros(2), 0.0, 10, RngStream(0))
