"""Tests for configuration loading, merging, overrides and validation."""

import json

import pytest

from score_geometry.config_processor import (
    apply_overrides,
    deep_merge,
    get_recipe_defaults,
    load_defaults,
    parse_override,
    process_config,
    read_config_file,
    recipe_params,
    validate_config,
)
from score_geometry.errors import ConfigError


def test_defaults_load_and_validate():
    config = process_config()
    assert config["SEED"] == 0
    assert config["FAMILY"]["KIND"] == "mlp"
    assert config["THEORY"]["PHI_EIGENVALUES"] == [5.0, 4.0, 3.0, 2.0, 1.0]


def test_recipe_defaults():
    assert get_recipe_defaults("geometry_report") == {"markov_eta": 0.1, "strip_count": 8}
    assert get_recipe_defaults("no_such_recipe") == {}


def test_deep_merge_keeps_untouched_keys():
    merged = deep_merge({"A": {"x": 1, "y": 2}, "B": 3}, {"A": {"y": 5}})
    assert merged == {"A": {"x": 1, "y": 5}, "B": 3}


def test_recipe_params_merges_over_defaults():
    config = {"RECIPE": {"FUNCTION": "sad_sweep", "PARAMS": {"seeds": 1}}}
    params = recipe_params(config)
    assert params["seeds"] == 1
    assert params["groups"] == ["first", "middle", "last"]


class TestOverrides:
    """KEY.PATH=value strings."""

    def test_float_in_scientific_notation(self):
        assert parse_override("A.B=1e-3") == (("A", "B"), 0.001)

    def test_yaml_scalars(self):
        assert parse_override("SEED=4")[1] == 4
        assert parse_override("RECIPE.FUNCTION=basis_sweep")[1] == "basis_sweep"
        assert parse_override("PROBE.SIGMA_LEVELS=[0.5, 1.0]")[1] == [0.5, 1.0]

    def test_missing_equals(self):
        with pytest.raises(ConfigError):
            parse_override("SEED")

    @pytest.mark.parametrize("raw", ["nan", "inf", "-inf", ".nan", "-.inf"])
    def test_rejects_non_finite_numbers(self, raw):
        with pytest.raises(ConfigError, match="finite"):
            parse_override(f"TRAIN.LR={raw}")

    def test_apply_creates_nested_sections(self):
        config = apply_overrides({"SEED": 0}, ["GEOMETRY.N_SAMPLES=10", "SEED=2"])
        assert config == {"SEED": 2, "GEOMETRY": {"N_SAMPLES": 10}}

    def test_overrides_win_over_file(self, tmp_path):
        path = tmp_path / "config.yaml"
        path.write_text("SEED: 3\n")
        assert process_config(str(path), overrides=["SEED=9"])["SEED"] == 9


class TestReadConfigFile:
    """YAML, JSON and TOML inputs."""

    def test_yaml(self, tmp_path):
        path = tmp_path / "config.yml"
        path.write_text("SEED: 5\nFAMILY:\n  KIND: linear\n")
        assert read_config_file(str(path)) == {"SEED": 5, "FAMILY": {"KIND": "linear"}}

    def test_json(self, tmp_path):
        path = tmp_path / "config.json"
        path.write_text(json.dumps({"SEED": 6}))
        assert read_config_file(str(path)) == {"SEED": 6}

    def test_toml(self, tmp_path):
        path = tmp_path / "config.toml"
        path.write_text('SEED = 7\n\n[RECIPE]\nFUNCTION = "theory_fig4"\n')
        assert read_config_file(str(path)) == {"SEED": 7, "RECIPE": {"FUNCTION": "theory_fig4"}}

    def test_invalid_toml(self, tmp_path):
        path = tmp_path / "config.toml"
        path.write_text("SEED = = 7\n")
        with pytest.raises(ConfigError, match="Invalid TOML"):
            read_config_file(str(path))

    def test_missing_file(self, tmp_path):
        with pytest.raises(FileNotFoundError):
            read_config_file(str(tmp_path / "missing.yaml"))

    def test_non_mapping(self, tmp_path):
        path = tmp_path / "config.yaml"
        path.write_text("- 1\n- 2\n")
        with pytest.raises(ConfigError):
            read_config_file(str(path))


class TestValidation:
    """Errors surface before any run starts."""

    @pytest.fixture
    def config(self):
        return load_defaults()

    def test_unknown_recipe_parameter(self, config):
        config["RECIPE"] = {"FUNCTION": "basis_sweep", "PARAMS": {"bassis": "dct"}}
        with pytest.raises(ConfigError, match="Unexpected parameters for recipe basis_sweep"):
            validate_config(config)

    @pytest.mark.parametrize("seed", [None, -1, 1.5, True, "0"])
    def test_bad_seed(self, config, seed):
        config["SEED"] = seed
        with pytest.raises(ConfigError, match="SEED"):
            validate_config(config)

    def test_bad_workers(self, config):
        config["WORKERS"] = 0
        with pytest.raises(ConfigError):
            validate_config(config)

    def test_unknown_probe_kind(self, config):
        config["PROBE"]["KIND"] = "uniform_box"
        with pytest.raises(ConfigError, match="PROBE.KIND"):
            validate_config(config)

    def test_unknown_data_kind(self, config):
        config["DATA"]["KIND"] = "cifar"
        with pytest.raises(ConfigError, match="DATA.KIND"):
            validate_config(config)

    def test_idx_requires_images(self, config):
        config["DATA"]["KIND"] = "idx"
        with pytest.raises(ConfigError, match="IDX_IMAGES"):
            validate_config(config)

    def test_unknown_family(self, config):
        config["FAMILY"] = {"KIND": "transformer"}
        with pytest.raises(ConfigError):
            validate_config(config)

    def test_unknown_family_parameter(self, config):
        config["FAMILY"] = {"KIND": "linear", "PARAMS": {"dimension": 3}}
        with pytest.raises(ConfigError, match="Unexpected parameters for family linear"):
            validate_config(config)

    def test_bad_train_block(self, config):
        config["TRAIN"]["batch_size"] = 0
        with pytest.raises(ConfigError):
            validate_config(config)

    def test_non_positive_phi_eigenvalues(self, config):
        config["THEORY"]["PHI_EIGENVALUES"] = [1.0, 0.0]
        with pytest.raises(ConfigError):
            validate_config(config)

    def test_storage_requires_path(self, config):
        config["STORAGE"] = {"PATH": ""}
        with pytest.raises(ConfigError, match="STORAGE.PATH"):
            validate_config(config)

    def test_require_recipe(self, config):
        with pytest.raises(ConfigError, match="RECIPE.FUNCTION is required"):
            validate_config(config, require_recipe=True)

    def test_unregistered_recipe(self, config):
        config["RECIPE"] = {"FUNCTION": "figure_nine", "PARAMS": {}}
        with pytest.raises(ConfigError, match="not registered"):
            validate_config(config, require_recipe=True)

    def test_custom_recipe_params_are_not_checked(self, config):
        config["RECIPE"] = {"FUNCTION": "my_recipe", "PARAMS": {"anything": 1}}
        validate_config(config)
