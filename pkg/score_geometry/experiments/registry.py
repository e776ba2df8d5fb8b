"""
Recipe registry.

A recipe is a function ``recipe(config, run_info) -> RecipeResult`` that runs
one named experiment. Users can register their own recipes next to the built-in ones.
"""

from typing import Callable, List

from ..core import FunctionRegistry


def _load_recipe_defaults(registry: FunctionRegistry) -> None:
    """Load built-in recipes."""
    from .recipes import (
        alignment_study,
        basis_sweep,
        geometry_report,
        impulse_probe,
        sad_sweep,
        sphere_study,
        theory_fig4,
    )

    registry.register("basis_sweep", basis_sweep)
    registry.register("sad_sweep", sad_sweep)
    registry.register("alignment_study", alignment_study)
    registry.register("theory_fig4", theory_fig4)
    registry.register("impulse_probe", impulse_probe)
    registry.register("geometry_report", geometry_report)
    registry.register("sphere_study", sphere_study)


_recipe_registry = FunctionRegistry(
    name="recipe",
    required_params={"config", "run_info"},
    default_loader=_load_recipe_defaults,
)


def register_recipe(name: str, func: Callable) -> None:
    """Register a recipe function."""
    _recipe_registry.register(name, func)


def register_recipe_module(module_name: str) -> List[str]:
    """Register all compatible functions from a module."""
    return _recipe_registry.register_from_module(module_name)


def list_recipes() -> List[str]:
    """List all registered recipes."""
    return _recipe_registry.list()


def get_recipe(name: str) -> Callable:
    return _recipe_registry.get(name)


def clear_recipe_registry() -> None:
    """Clear all registered recipes."""
    _recipe_registry.clear()
