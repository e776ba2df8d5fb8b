"""
Example sweeping rank-one datasets over a DCT basis, plus a custom recipe.

This script shows:
1. A basis sweep with one rank-one dataset per DCT vector
2. The MSW2 heat map on the centred frequency grid
3. Registering a custom recipe next to the built-in ones
"""

import numpy as np

from score_geometry import register_recipe, run_experiment
from score_geometry.config_processor import process_config
from score_geometry.experiments import RecipeResult, Task, run_tasks
from score_geometry.numerics import gaussian


def noise_norms(config, run_info):
    """Custom recipe: norms of Gaussian draws per seed."""

    def run(stream, store):
        return {"norm": float(np.linalg.norm(gaussian(stream, 64)))}

    return RecipeResult(run_tasks(config, run_info, [Task("gaussian", seed, run) for seed in range(3)]))


def main():
    print("\n" + "=" * 60)
    print("BASIS SWEEP DEMO")
    print("=" * 60)

    report = run_experiment(process_config("config_basis_sweep.yaml", require_recipe=True))
    print(f"✓ {len(report.rows)} rows, {len(report.failures)} failed")
    best = report.rows.sort_values("msw2").iloc[0]
    print(f"✓ Best-learned DCT vector: index {int(best['index'])} (MSW2 {best['msw2']:.4f})")
    print(f"✓ Heat map: {report.run_info.run_path}/{report.extras.get('heatmap')}")

    print("\nCustom recipe:")
    register_recipe("noise_norms", noise_norms)
    custom = run_experiment(
        process_config("config_basis_sweep.yaml", overrides=["RECIPE.FUNCTION=noise_norms"], require_recipe=True)
    )
    print(custom.rows[["unit", "seed", "norm"]].to_string(index=False))


if __name__ == "__main__":
    main()
