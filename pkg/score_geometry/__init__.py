"""Score Geometry - average geometry of score networks and directional generalization of DSM."""

from . import networks  # noqa: F401  registers the built-in families
from .alignment import alignment_report, alpha, extremal_transforms
from .bases import OrthoTransform, build_basis, random_orthogonal
from .config_processor import process_config
from .core import FamilyRegistry, NetworkFamily, ParamSet
from .data import Dataset, load_idx, sample_rank_one, sphere_dataset
from .diffusion import TrainConfig, make_schedule, sample_ancestral, sample_langevin, train
from .experiments import (
    audit_row,
    clear_recipe_registry,
    list_recipes,
    register_recipe,
    register_recipe_module,
    render_heatmap_grid,
    run_experiment,
)
from .geometry import ProbeDistribution, estimate_geometry, extract_sads, markov_bound
from .manage import RunInfo
from .metrics import msw2, sw2, w2_1d
from .numerics import RngStream, sym_eig
from .theory import gd_mean_trace, optimal_score, predicted_rate, sgd_simulate, stochastic_grad_covariance

__version__ = "0.1.0"
__all__ = [
    # Geometry
    "ProbeDistribution",
    "estimate_geometry",
    "extract_sads",
    "markov_bound",
    # Families
    "FamilyRegistry",
    "NetworkFamily",
    "ParamSet",
    # Data and bases
    "Dataset",
    "OrthoTransform",
    "build_basis",
    "load_idx",
    "random_orthogonal",
    "sample_rank_one",
    "sphere_dataset",
    # Diffusion
    "TrainConfig",
    "make_schedule",
    "sample_ancestral",
    "sample_langevin",
    "train",
    # Metrics and alignment
    "alignment_report",
    "alpha",
    "extremal_transforms",
    "msw2",
    "sw2",
    "w2_1d",
    # Theory
    "gd_mean_trace",
    "optimal_score",
    "predicted_rate",
    "sgd_simulate",
    "stochastic_grad_covariance",
    # Experiments
    "RunInfo",
    "audit_row",
    "clear_recipe_registry",
    "list_recipes",
    "process_config",
    "register_recipe",
    "register_recipe_module",
    "render_heatmap_grid",
    "run_experiment",
    # Numerics
    "RngStream",
    "sym_eig",
]
