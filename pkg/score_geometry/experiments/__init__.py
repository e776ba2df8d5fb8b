"""Experiment recipes, the sweep runner and heat-map rendering."""

from .recipes import select_sad_indices
from .registry import clear_recipe_registry, get_recipe, list_recipes, register_recipe, register_recipe_module
from .render import render_heatmap_grid
from .runner import (
    ExperimentReport,
    RecipeResult,
    Task,
    audit_row,
    run_experiment,
    run_from_file,
    run_tasks,
    score_samples,
    unit_stream,
)

__all__ = [
    "ExperimentReport",
    "RecipeResult",
    "Task",
    "audit_row",
    "clear_recipe_registry",
    "get_recipe",
    "list_recipes",
    "register_recipe",
    "register_recipe_module",
    "render_heatmap_grid",
    "run_experiment",
    "run_from_file",
    "run_tasks",
    "score_samples",
    "select_sad_indices",
    "unit_stream",
]
