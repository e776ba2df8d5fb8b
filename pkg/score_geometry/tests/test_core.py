"""Tests for the function registry, parameter sets and the family registry."""

import numpy as np
import pytest

from score_geometry.core import FamilyRegistry, FunctionRegistry, ParamSet, draw_normal, zeros_like
from score_geometry.errors import ConfigError, DimensionError
from score_geometry.numerics import RngStream


def _recipe(config, run_info):
    return "ok"


class TestFunctionRegistry:
    """Generic registry with signature validation."""

    def test_register_and_get(self):
        registry = FunctionRegistry("recipe", {"config", "run_info"})
        registry.register("mine", _recipe)
        assert registry.get("mine") is _recipe
        assert registry.list() == ["mine"]

    def test_signature_validation(self):
        registry = FunctionRegistry("recipe", {"config", "run_info"})

        def bad(config):
            return None

        with pytest.raises(ValueError, match="must have parameters"):
            registry.register("bad", bad)

    def test_unknown_name(self):
        registry = FunctionRegistry("recipe", {"config"})
        with pytest.raises(KeyError, match="not registered"):
            registry.get("missing")

    def test_default_loader_runs_once_lazily(self):
        calls = []

        def loader(registry):
            calls.append(1)
            registry.register("default", _recipe)

        registry = FunctionRegistry("recipe", {"config", "run_info"}, loader)
        assert calls == []
        assert registry.list() == ["default"]
        registry.get("default")
        assert calls == [1]

    def test_clear_reloads_defaults(self):
        registry = FunctionRegistry("recipe", {"config", "run_info"}, lambda r: r.register("default", _recipe))
        registry.register("extra", _recipe)
        registry.clear()
        assert registry.list() == ["default"]

    def test_register_from_module(self):
        registry = FunctionRegistry("recipe", {"config", "run_info"})
        names = registry.register_from_module("experiments.recipes", prefix="x_")
        assert "x_basis_sweep" in names
        assert "x_load_dataset" not in names


class TestParamSet:
    """Immutable parameter tensors and their binary format."""

    def test_tensors_are_read_only(self):
        params = ParamSet("linear", {"theta": np.eye(2)})
        with pytest.raises(ValueError):
            params["theta"][0, 0] = 5.0

    def test_non_finite_rejected(self):
        with pytest.raises(ValueError):
            ParamSet("linear", {"theta": np.array([np.inf])})

    def test_bytes_round_trip_preserves_stream(self):
        params = ParamSet("mlp", {"w0": np.arange(6.0).reshape(2, 3), "b0": np.array([0.5, -1.0])}, RngStream(1, 2, 3))
        restored = ParamSet.from_bytes(params.to_bytes())
        assert restored.names() == ("w0", "b0")
        assert restored.stream == RngStream(1, 2, 3)
        np.testing.assert_array_equal(restored.flat(), params.flat())

    def test_truncated_blob_rejected(self):
        blob = ParamSet("linear", {"theta": np.eye(3)}).to_bytes()
        with pytest.raises(ValueError):
            ParamSet.from_bytes(blob[:-8])

    def test_replace_checks_shape(self):
        params = ParamSet("linear", {"theta": np.eye(2)})
        with pytest.raises(DimensionError):
            params.replace(theta=np.eye(3))
        with pytest.raises(KeyError):
            params.replace(phi=np.eye(2))

    def test_apply_update(self):
        params = ParamSet("linear", {"theta": np.ones((2, 2))})
        updated = params.apply_update({"theta": np.ones((2, 2))}, 0.25)
        np.testing.assert_allclose(updated["theta"], 0.75)
        assert params.count() == 4
        assert zeros_like(params)["theta"].shape == (2, 2)


class TestFamilyRegistry:
    """Family plugins are looked up by kind."""

    def test_builtin_kinds(self):
        assert {"linear", "mlp", "conv_unet_mini", "token_linear"} <= set(FamilyRegistry.list())

    def test_from_config(self):
        family = FamilyRegistry.from_config({"KIND": "linear", "PARAMS": {"dim": 3}})
        assert family.dim == 3
        assert family.describe()["kind"] == "linear"

    def test_unknown_kind(self):
        with pytest.raises(KeyError, match="not registered"):
            FamilyRegistry.get("transformer")

    def test_missing_kind(self):
        with pytest.raises(ConfigError):
            FamilyRegistry.from_config({"PARAMS": {}})

    def test_unexpected_params(self):
        with pytest.raises(ConfigError, match="Unexpected parameters"):
            FamilyRegistry.create("linear", {"dim": 2, "depth": 3})

    def test_forward_checks_dimension(self):
        family = FamilyRegistry.create("linear", {"dim": 2})
        params = family.sample_params(RngStream(0))
        with pytest.raises(DimensionError):
            family.forward(params, np.zeros(3), 1.0)

    def test_draw_normal_zero_std_is_constant(self):
        np.testing.assert_array_equal(draw_normal(RngStream(0), (2, 2), mean=0.3, std=0.0), np.full((2, 2), 0.3))
