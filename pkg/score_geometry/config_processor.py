"""Configuration processing with defaults and validation."""

import copy
import math
import tomllib
from pathlib import Path
from typing import Any, Dict, Iterable, Optional, Tuple

import yaml
from artifact_store import ArtifactStore

from .core import FamilyRegistry
from .diffusion.training import TrainConfig
from .errors import ConfigError
from .geometry.probe import PROBE_KINDS

DATA_KINDS = ("gaussian", "idx")


def _extract_param_schemas_from_defaults() -> Dict[str, Any]:
    """Extract recipe parameter schemas from config defaults."""
    defaults = load_defaults()
    return {name: set(params.keys()) for name, params in defaults.get("RECIPES", {}).items()}


def _get_param_schemas() -> Dict[str, Any]:
    """Get parameter schemas, cached for performance."""
    if not hasattr(_get_param_schemas, "_cache"):
        _get_param_schemas._cache = _extract_param_schemas_from_defaults()
    return _get_param_schemas._cache


def load_defaults() -> Dict[str, Any]:
    """Load default configuration from package."""
    defaults_path = str(Path(__file__).parent / "config_defaults.yaml")
    store, filename = ArtifactStore.from_file_path(defaults_path)
    return store.read_yaml(filename)


def get_recipe_defaults(function_name: str) -> Dict[str, Any]:
    """
    Get default parameters for a recipe.

    Args:
        function_name: Name of the recipe (e.g., "sad_sweep")

    Returns:
        Dictionary of default parameters for the recipe, or empty dict if not found
    """
    defaults = load_defaults()
    return copy.deepcopy(defaults.get("RECIPES", {}).get(function_name, {}))


def deep_merge(base: Dict, override: Dict) -> Dict:
    """
    Deep merge two dictionaries, with override values taking precedence.

    Args:
        base: Base dictionary (defaults)
        override: Override dictionary (user config)

    Returns:
        Merged dictionary
    """
    result = copy.deepcopy(base)

    for key, value in override.items():
        if key in result and isinstance(result[key], dict) and isinstance(value, dict):
            result[key] = deep_merge(result[key], value)
        else:
            result[key] = copy.deepcopy(value)

    return result


def recipe_params(config: Dict[str, Any]) -> Dict[str, Any]:
    """RECIPE.PARAMS merged over the defaults of RECIPE.FUNCTION."""
    recipe = config.get("RECIPE", {})
    return deep_merge(get_recipe_defaults(recipe.get("FUNCTION")), recipe.get("PARAMS") or {})


def _require(config: Dict[str, Any], path: str, message: str) -> None:
    parts = path.split(".")
    cur: Any = config
    for part in parts:
        if not isinstance(cur, dict) or part not in cur or cur[part] in (None, ""):
            raise ConfigError(message)
        cur = cur[part]


def _validate_params(function_name: str, params: Dict[str, Any]) -> None:
    """Validate recipe parameters against expected schema.

    Built-in recipes defined in config_defaults.yaml get strict validation so
    typos surface early. Recipes registered via register_recipe() skip it since
    their parameter schemas are not known at config processing time.
    """
    schemas = _get_param_schemas()

    if function_name not in schemas:
        # Custom recipe - skip validation, trust the registry and runtime
        return

    expected_params = schemas[function_name]
    extra_params = set(params.keys()) - expected_params
    if extra_params:
        raise ConfigError(
            f"Unexpected parameters for recipe {function_name}: "
            f"{sorted(extra_params)}. Expected: {sorted(expected_params)}"
        )


def _validate_family(family: Dict[str, Any]) -> None:
    _require({"FAMILY": family}, "FAMILY.KIND", "FAMILY block must include KIND")
    try:
        family_cls = FamilyRegistry.get(family["KIND"])
    except KeyError as error:
        raise ConfigError(str(error.args[0])) from error
    extra_params = set(family.get("PARAMS") or {}) - set(family_cls.DEFAULTS)
    if extra_params:
        raise ConfigError(
            f"Unexpected parameters for family {family['KIND']}: "
            f"{sorted(extra_params)}. Expected: {sorted(family_cls.DEFAULTS)}"
        )


def _is_int(value: Any) -> bool:
    return isinstance(value, int) and not isinstance(value, bool)


def validate_config(config: Dict[str, Any], require_recipe: bool = False) -> None:
    """Validate configuration has required fields and valid parameters."""

    # STORAGE is optional - if present, PATH is required
    if "STORAGE" in config:
        _require(config, "STORAGE.PATH", "Configuration with STORAGE must include STORAGE.PATH")

    seed = config.get("SEED")
    if not _is_int(seed) or seed < 0:
        raise ConfigError(f"SEED must be a non-negative integer, got {seed!r}")
    workers = config.get("WORKERS", 1)
    if not _is_int(workers) or workers < 1:
        raise ConfigError(f"WORKERS must be a positive integer, got {workers!r}")

    if "FAMILY" in config:
        _validate_family(config["FAMILY"])

    probe_kind = config.get("PROBE", {}).get("KIND", "delta_zero")
    if probe_kind not in PROBE_KINDS:
        raise ConfigError(f"Unknown PROBE.KIND '{probe_kind}'. Available: {list(PROBE_KINDS)}")

    data = config.get("DATA", {})
    if data.get("KIND", "gaussian") not in DATA_KINDS:
        raise ConfigError(f"Unknown DATA.KIND '{data.get('KIND')}'. Available: {list(DATA_KINDS)}")
    if data.get("KIND") == "idx":
        _require(config, "DATA.IDX_IMAGES", "DATA.KIND idx requires DATA.IDX_IMAGES")

    if "TRAIN" in config:
        TrainConfig.from_config(config["TRAIN"], seed=seed)

    eigenvalues = config.get("THEORY", {}).get("PHI_EIGENVALUES")
    if eigenvalues is not None and any(float(lam) <= 0 for lam in eigenvalues):
        raise ConfigError("THEORY.PHI_EIGENVALUES must be positive")

    recipe = config.get("RECIPE", {})
    function_name = recipe.get("FUNCTION")
    if require_recipe:
        if not function_name:
            raise ConfigError("RECIPE.FUNCTION is required")
        from .experiments.registry import list_recipes

        if function_name not in list_recipes():
            raise ConfigError(f"Recipe '{function_name}' not registered. Available: {list_recipes()}")
    if function_name:
        _validate_params(function_name, recipe.get("PARAMS") or {})


def read_config_file(config_path: str) -> Dict[str, Any]:
    """
    Read a user configuration file (YAML, JSON or TOML).

    Raises:
        FileNotFoundError: If config file doesn't exist
    """
    store, filename = ArtifactStore.from_file_path(config_path)

    if not store.exists(filename):
        raise FileNotFoundError(f"Configuration file not found: {config_path}")

    lower = filename.lower()
    if lower.endswith((".yaml", ".yml")):
        user_config = store.read_yaml(filename)
    elif lower.endswith(".toml"):
        try:
            user_config = tomllib.loads(store.read_text(filename))
        except tomllib.TOMLDecodeError as error:
            raise ConfigError(f"Invalid TOML in {config_path}: {error}") from error
    else:
        user_config = store.read_json(filename)

    if not isinstance(user_config, dict):
        raise ConfigError(f"Configuration in {config_path} must be a mapping")
    return user_config


def parse_override(override: str) -> Tuple[Tuple[str, ...], Any]:
    """Split ``SECTION.KEY=value``; the value is parsed as a YAML scalar."""
    if "=" not in override:
        raise ConfigError(f"Override must look like KEY.PATH=value, got '{override}'")
    path, raw = override.split("=", 1)
    keys = tuple(part for part in path.strip().split(".") if part)
    if not keys:
        raise ConfigError(f"Override has an empty key path: '{override}'")
    value = yaml.safe_load(raw) if raw.strip() else None
    # PyYAML reads 1e-3 as a string
    if isinstance(value, str):
        try:
            value = float(value)
        except ValueError:
            pass
    if isinstance(value, float) and not math.isfinite(value):
        raise ConfigError(f"Override value must be a finite number, got '{raw.strip()}' for {'.'.join(keys)}")
    return keys, value


def apply_overrides(config: Dict[str, Any], overrides: Iterable[str]) -> Dict[str, Any]:
    result = copy.deepcopy(config)
    for override in overrides:
        keys, value = parse_override(override)
        cur = result
        for key in keys[:-1]:
            if not isinstance(cur.get(key), dict):
                cur[key] = {}
            cur = cur[key]
        cur[keys[-1]] = value
    return result


def process_config(
    config_path: Optional[str] = None,
    overrides: Iterable[str] = (),
    require_recipe: bool = False,
    user_config: Optional[Dict[str, Any]] = None,
) -> Dict[str, Any]:
    """
    Load, merge with defaults, apply overrides and validate configuration.

    Args:
        config_path: Path to user configuration file (YAML, JSON or TOML); defaults only when omitted
        overrides: ``KEY.PATH=value`` strings applied after the merge
        require_recipe: Whether RECIPE.FUNCTION must be set
        user_config: In-memory user configuration, merged after the file

    Returns:
        Complete validated configuration

    Raises:
        FileNotFoundError: If config file doesn't exist
        ConfigError: If configuration is invalid
    """
    config = load_defaults()
    if config_path is not None:
        config = deep_merge(config, read_config_file(config_path))
    if user_config:
        config = deep_merge(config, user_config)
    config = apply_overrides(config, overrides)

    validate_config(config, require_recipe=require_recipe)
    return config
