"""
Experiment runner: executes (unit, seed) tasks of a recipe with per-task failure
isolation and assembles the report in task order.
"""

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Any, Callable, Dict, List, Optional, Sequence

import numpy as np
import pandas as pd
from artifact_store import ArtifactStore

from ..config_processor import process_config
from ..manage import RunInfo, create_run, environment_metadata, load_config, save_run_metadata
from ..metrics import msw2, random_projections, sw2
from ..numerics import RngStream
from .registry import get_recipe

logger = logging.getLogger(__name__)

TaskFn = Callable[[RngStream, ArtifactStore], Dict[str, Any]]


@dataclass(frozen=True)
class Task:
    """One (unit, seed) cell of a sweep."""

    unit: str
    seed: int
    run: TaskFn = field(compare=False, repr=False)


@dataclass
class RecipeResult:
    rows: List[Dict[str, Any]]
    extras: Dict[str, Any] = field(default_factory=dict)


@dataclass
class ExperimentReport:
    """Config echo, one row per (unit, seed), environment metadata and failures."""

    recipe: str
    config: Dict[str, Any]
    rows: pd.DataFrame
    environment: Dict[str, str]
    extras: Dict[str, Any] = field(default_factory=dict)
    run_info: Optional[RunInfo] = None

    @property
    def failures(self) -> pd.DataFrame:
        if self.rows.empty or "status" not in self.rows:
            return self.rows.iloc[0:0]
        return self.rows[self.rows["status"] == "failed"]

    @property
    def ok(self) -> bool:
        return self.failures.empty


def unit_stream(config: Dict[str, Any], recipe: str, unit: str, seed: int) -> RngStream:
    return RngStream.derive(config["SEED"], recipe, unit, seed)


def metric_projections(config: Dict[str, Any], stream: RngStream, dim: int):
    return random_projections(dim, int(config["METRICS"]["L_PER_DIM"]) * dim, stream.spawn("metric"))


def score_samples(
    config: Dict[str, Any], stream: RngStream, generated: np.ndarray, reference: np.ndarray
) -> Dict[str, float]:
    """MSW2 and SW2 between generated and reference samples over one shared projection set."""
    projections = metric_projections(config, stream, reference.shape[1])
    return {
        "msw2": msw2(generated, reference, projections=projections),
        "sw2": sw2(generated, reference, projections=projections),
    }


def _run_task(config: Dict[str, Any], run_info: RunInfo, task: Task) -> Dict[str, Any]:
    row = {"unit": task.unit, "seed": task.seed}
    try:
        stream = unit_stream(config, run_info.recipe, task.unit, task.seed)
        result = task.run(stream, run_info.unit_store(task.unit, task.seed))
        logger.info("Finished %s/%s/%s", run_info.recipe, task.unit, task.seed)
        return {**row, "status": "ok", "error": "", **result}
    except Exception as error:
        logger.exception("Unit %s/%s/%s failed", run_info.recipe, task.unit, task.seed)
        return {**row, "status": "failed", "error": f"{type(error).__name__}: {error}"}


def run_tasks(config: Dict[str, Any], run_info: RunInfo, tasks: Sequence[Task]) -> List[Dict[str, Any]]:
    """
    Run tasks on ``WORKERS`` threads.

    A failing task yields a ``status == "failed"`` row and the remaining tasks
    continue. Rows come back in the order of ``tasks``.
    """
    workers = int(config.get("WORKERS", 1))
    logger.info("Running %d tasks of %s on %d worker(s)", len(tasks), run_info.recipe, workers)
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(lambda task: _run_task(config, run_info, task), tasks))
    return [_run_task(config, run_info, task) for task in tasks]


def run_experiment(config: Dict[str, Any]) -> ExperimentReport:
    """
    Execute the recipe named in RECIPE.FUNCTION and write its report.

    Writes ``config.yaml``, ``report.csv``, ``summary.json`` and ``metadata.json``
    under ``<STORAGE.PATH>/<recipe>/``.

    Returns:
        ExperimentReport; failed units are rows with ``status == "failed"``
    """
    name = config["RECIPE"]["FUNCTION"]
    recipe = get_recipe(name)
    run_info = create_run(config, name)
    logger.info("Starting recipe %s in %s", name, run_info.run_path)

    result = recipe(config=config, run_info=run_info)
    rows = pd.DataFrame(result.rows)
    run_info.save_df("report", rows)
    run_info.get_store().write_json("summary.json", result.extras)

    report = ExperimentReport(
        recipe=name,
        config=config,
        rows=rows,
        environment=environment_metadata(),
        extras=result.extras,
        run_info=run_info,
    )
    save_run_metadata(run_info, n_rows=len(rows), n_failures=len(report.failures))
    if not report.ok:
        logger.warning("Recipe %s finished with %d failed unit(s)", name, len(report.failures))
    return report


def audit_row(run_info: RunInfo, row: Dict[str, Any], config: Optional[Dict[str, Any]] = None) -> Dict[str, float]:
    """
    Recompute the metrics of one report row from its archived samples.

    Args:
        run_info: Run the row belongs to
        row: Report row with ``unit`` and ``seed``
        config: Effective config; read from the run's ``config.yaml`` when omitted

    Returns:
        Recomputed ``msw2`` and ``sw2``
    """
    config = load_config(run_info) if config is None else config
    unit, seed = str(row["unit"]), int(row["seed"])
    generated = run_info.load_matrix("samples", unit, seed)
    reference = run_info.load_matrix("reference", unit, seed)
    return score_samples(config, unit_stream(config, run_info.recipe, unit, seed), generated, reference)


def run_from_file(config_path: Optional[str], overrides: Sequence[str] = ()) -> ExperimentReport:
    return run_experiment(process_config(config_path, overrides, require_recipe=True))
