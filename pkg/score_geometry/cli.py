"""
Command-line entry point.

Every subcommand reads the same configuration (packaged defaults, then
``--config``, then ``--override`` flags) and writes into ``<out>/<subcommand>/``.

Exit codes: 0 success, 1 configuration error, 2 runtime failure (partial report).
"""

import argparse
import json
import logging
import sys
from typing import Any, Dict, List, Optional

import numpy as np
import pandas as pd
from artifact_store import ArtifactStore

from .alignment import alignment_report, extremal_transforms, second_moment
from .bases import build_basis, identity_transform
from .config_processor import process_config
from .core import FamilyRegistry
from .diffusion import TrainConfig, make_schedule, sample_ancestral, train
from .errors import ConfigError
from .experiments import render_heatmap_grid, run_experiment
from .experiments.recipes import load_dataset
from .geometry import ProbeDistribution, estimate_geometry, extract_sads, write_geometry
from .manage import RunInfo, create_run, read_params, save_run_metadata, write_params
from .metrics import msw2, random_projections, sw2
from .numerics import RngStream, matrix_from_csv
from .theory import LinearDsmConfig, closed_form_grad_cov_trace, gd_mean_trace, predicted_rate

logger = logging.getLogger("score_geometry")

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_RUNTIME = 2


def _read_matrix(path: str) -> np.ndarray:
    with open(path) as handle:
        return matrix_from_csv(handle.read())


def _family(config: Dict[str, Any]):
    return FamilyRegistry.from_config(config["FAMILY"])


def _schedule(config: Dict[str, Any]):
    block = config["SCHEDULE"]
    return make_schedule(int(block["N_STEPS"]), float(block["BETA_MIN"]), float(block["BETA_MAX"]))


def cmd_geometry(config: Dict[str, Any], run_info: RunInfo, args: argparse.Namespace) -> int:
    family = _family(config)
    samples = None
    if config["PROBE"]["KIND"] == "around_sample":
        samples = load_dataset(config, family.dim, RngStream.derive(config["SEED"], "geometry", "data")).samples
    estimate = estimate_geometry(
        family,
        ProbeDistribution.from_config(config["PROBE"], samples=samples),
        int(config["GEOMETRY"]["N_SAMPLES"]),
        RngStream.derive(config["SEED"], "geometry"),
        workers=int(config["WORKERS"]),
    )
    write_geometry(run_info.get_store(), "geometry", estimate)
    return EXIT_OK


def cmd_sads(config: Dict[str, Any], run_info: RunInfo, args: argparse.Namespace) -> int:
    g = _read_matrix(args.geometry)
    sads = extract_sads(g)
    frame = pd.DataFrame(
        {
            "sad_index": np.arange(sads.dim),
            "eigenvalue": sads.eigenvalues,
            "markov_bound": sads.markov_bounds(g, args.eta),
        }
    )
    run_info.save_df("spectrum", frame)
    run_info.save_matrix("sads", sads.directions)
    return EXIT_OK


def cmd_train(config: Dict[str, Any], run_info: RunInfo, args: argparse.Namespace) -> int:
    family = _family(config)
    data = load_dataset(config, family.dim, RngStream.derive(config["SEED"], "train", "data"))
    trace = train(family, data, TrainConfig.from_config(config["TRAIN"], seed=config["SEED"]), _schedule(config))
    run_info.save_df("trace", trace.to_frame())
    write_params(run_info.get_store(), trace.params)
    return EXIT_OK


def cmd_sample(config: Dict[str, Any], run_info: RunInfo, args: argparse.Namespace) -> int:
    family = _family(config)
    if args.params:
        store, filename = ArtifactStore.from_file_path(args.params)
        params = read_params(store, filename)
    else:
        params = read_params(RunInfo("train", run_info.storage_path).get_store())
    n = args.n if args.n is not None else int(config["METRICS"]["N_GENERATED"])
    generated = sample_ancestral(family, params, _schedule(config), n, RngStream.derive(config["SEED"], "sample"))
    run_info.save_matrix("samples", generated.samples)
    return EXIT_OK


def cmd_metrics(config: Dict[str, Any], run_info: RunInfo, args: argparse.Namespace) -> int:
    x, y = _read_matrix(args.x), _read_matrix(args.y)
    projections = random_projections(
        x.shape[1], int(config["METRICS"]["L_PER_DIM"]) * x.shape[1], RngStream.derive(config["SEED"], "metrics")
    )
    result = {"msw2": msw2(x, y, projections=projections), "sw2": sw2(x, y, projections=projections)}
    run_info.get_store().write_json("metrics.json", result)
    print(json.dumps(result))
    return EXIT_OK


def cmd_align(config: Dict[str, Any], run_info: RunInfo, args: argparse.Namespace) -> int:
    g = _read_matrix(args.geometry)
    data = load_dataset(config, g.shape[0], RngStream.derive(config["SEED"], "align", "data"))
    c = second_moment(data)
    w_min, w_max = extremal_transforms(g, c)
    rows = [alignment_report(w, g, c, data).to_row() for w in (w_min, identity_transform(g.shape[0]), w_max)]
    run_info.save_df("alignment", pd.DataFrame(rows))
    run_info.save_matrix("w_min", w_min.matrix)
    run_info.save_matrix("w_max", w_max.matrix)
    return EXIT_OK


def cmd_theory(config: Dict[str, Any], run_info: RunInfo, args: argparse.Namespace) -> int:
    block = config["THEORY"]
    eigenvalues = np.asarray(block["PHI_EIGENVALUES"], dtype=np.float64)
    phi = np.diag(np.sqrt(eigenvalues))
    sigma, eta = float(block["SIGMA"]), float(block["ETA"])
    rates = {}
    for i in range(1, eigenvalues.size + 1):
        v = np.eye(eigenvalues.size)[:, i - 1]
        trace = gd_mean_trace(LinearDsmConfig(phi=phi, v=v, sigma=sigma, eta=eta, steps=int(block["GD_STEPS"])))
        run_info.save_df("trace", trace.to_frame(), f"u{i}")
        rates[f"u{i}"] = {
            "predicted_rate": predicted_rate(eigenvalues, i, sigma),
            "fitted_rate": trace.fitted_rate,
            "grad_cov_closed_form": closed_form_grad_cov_trace(phi, v, sigma),
        }
    run_info.get_store().write_json("rates.json", rates)
    return EXIT_OK


def cmd_run(config: Dict[str, Any], run_info: Optional[RunInfo], args: argparse.Namespace) -> int:
    report = run_experiment(config)
    return EXIT_OK if report.ok else EXIT_RUNTIME


def cmd_render(config: Dict[str, Any], run_info: RunInfo, args: argparse.Namespace) -> int:
    report = pd.read_csv(args.report)
    basis = build_basis(args.basis, args.height, args.width)
    render_heatmap_grid(report, basis, args.value, store=run_info.get_store(), name=args.name)
    return EXIT_OK


COMMANDS = {
    "geometry": cmd_geometry,
    "sads": cmd_sads,
    "train": cmd_train,
    "sample": cmd_sample,
    "metrics": cmd_metrics,
    "align": cmd_align,
    "theory": cmd_theory,
    "run": cmd_run,
    "render": cmd_render,
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="YAML, JSON or TOML configuration file")
    common.add_argument("--out", help="Output directory (STORAGE.PATH)")
    common.add_argument("--seed", type=int, help="Master seed (SEED)")
    common.add_argument("--workers", type=int, help="Worker threads (WORKERS)")
    common.add_argument(
        "--override", action="append", default=[], metavar="KEY=VALUE", help="e.g. GEOMETRY.N_SAMPLES=1000"
    )
    common.add_argument("--log-level", default="INFO", choices=["DEBUG", "INFO", "WARNING", "ERROR"])

    parser = argparse.ArgumentParser(prog="score-geometry", description=__doc__.strip().splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    sub.add_parser("geometry", parents=[common], help="Estimate the average geometry of a family")
    sads = sub.add_parser("sads", parents=[common], help="Extract SADs from a geometry CSV")
    sads.add_argument("--geometry", required=True)
    sads.add_argument("--eta", type=float, default=0.1)
    sub.add_parser("train", parents=[common], help="Train a family on the DATA dataset")
    sample = sub.add_parser("sample", parents=[common], help="Ancestral sampling from trained parameters")
    sample.add_argument("--params", help="params.bin (default: <out>/train/params.bin)")
    sample.add_argument("--n", type=int)
    metrics = sub.add_parser("metrics", parents=[common], help="MSW2 and SW2 between two sample CSVs")
    metrics.add_argument("--x", required=True)
    metrics.add_argument("--y", required=True)
    align = sub.add_parser("align", parents=[common], help="Alignment of DATA with a geometry")
    align.add_argument("--geometry", required=True)
    sub.add_parser("theory", parents=[common], help="Linear DSM decay rates")
    sub.add_parser("run", parents=[common], help="Run the recipe in RECIPE.FUNCTION")
    render = sub.add_parser("render", parents=[common], help="Heat map of a basis sweep report")
    render.add_argument("--report", required=True)
    render.add_argument("--basis", required=True)
    render.add_argument("--height", type=int, required=True)
    render.add_argument("--width", type=int, required=True)
    render.add_argument("--value", default="msw2")
    render.add_argument("--name", default="heatmap")
    return parser


def _flag_config(args: argparse.Namespace) -> Dict[str, Any]:
    flags: Dict[str, Any] = {}
    if args.out is not None:
        flags["STORAGE"] = {"PATH": args.out}
    if args.seed is not None:
        flags["SEED"] = args.seed
    if args.workers is not None:
        flags["WORKERS"] = args.workers
    return flags


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=args.log_level, format="%(asctime)s %(levelname)s %(name)s: %(message)s")

    try:
        config = process_config(
            args.config, args.override, require_recipe=args.command == "run", user_config=_flag_config(args)
        )
    except (ConfigError, FileNotFoundError) as error:
        logger.error("Configuration error: %s", error)
        return EXIT_CONFIG

    run_info = None
    try:
        if args.command != "run":
            run_info = create_run(config, args.command)
        code = COMMANDS[args.command](config, run_info, args)
    except (ConfigError, FileNotFoundError) as error:
        logger.error("Configuration error: %s", error)
        return EXIT_CONFIG
    except Exception:
        logger.exception("Command %s failed", args.command)
        return EXIT_RUNTIME

    if run_info is not None:
        save_run_metadata(run_info, command=args.command)
    return code


if __name__ == "__main__":
    sys.exit(main())
