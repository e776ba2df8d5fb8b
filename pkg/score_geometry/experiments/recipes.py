"""
Built-in experiment recipes.

Every recipe estimates what it needs once per run (geometry, SADs, extremal
transforms), then fans out into (unit, seed) tasks that train a score network,
draw samples and compare them with fresh ground-truth draws.
"""

import logging
import math
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd
from artifact_store import ArtifactStore
from scipy.stats import spearmanr

from ..alignment import alignment_report, extremal_transforms, geometry_hash, second_moment
from ..bases import build_basis, identity_transform, random_orthogonal
from ..config_processor import recipe_params
from ..core import FamilyRegistry, NetworkFamily
from ..data import (
    Dataset,
    anisotropic_gaussian,
    apply_transform,
    downscale,
    holdout_split,
    load_idx,
    power_law_spectrum,
    sample_rank_one,
    sphere_dataset,
)
from ..diffusion import NoiseSchedule, TrainConfig, make_schedule, sample_ancestral, train
from ..errors import ConfigError, PreconditionError
from ..geometry import (
    GeometryEstimate,
    ProbeDistribution,
    distinct_eigenvalue_count,
    encode_pgm,
    estimate_geometry,
    extract_sads,
    to_gray,
    write_geometry,
    write_sad_strip,
)
from ..manage import RunInfo, write_params
from ..networks import impulse_response
from ..numerics import RngStream, matrix_to_csv
from ..theory import LinearDsmConfig, gd_mean_trace, predicted_rate, sgd_simulate, stochastic_grad_covariance
from .render import render_heatmap_grid
from .runner import RecipeResult, Task, run_tasks, score_samples

logger = logging.getLogger(__name__)

SAD_GROUPS = ("first", "middle", "last")


# Shared building blocks


def _schedule(config: Dict[str, Any]) -> NoiseSchedule:
    block = config["SCHEDULE"]
    return make_schedule(int(block["N_STEPS"]), float(block["BETA_MIN"]), float(block["BETA_MAX"]))


def _family(config: Dict[str, Any], **param_overrides) -> NetworkFamily:
    block = config["FAMILY"]
    return FamilyRegistry.create(block["KIND"], {**(block.get("PARAMS") or {}), **param_overrides})


def _image_hw(family: NetworkFamily) -> Optional[Tuple[int, int]]:
    """Spatial shape for drawing direction images; square vectors are drawn as squares."""
    if family.image_shape is not None:
        return family.image_shape[1], family.image_shape[2]
    side = math.isqrt(family.dim)
    return (side, side) if side * side == family.dim else None


def _seeds(params: Dict[str, Any]) -> List[int]:
    count = int(params["seeds"])
    if count < 1:
        raise ConfigError(f"seeds must be at least 1, got {count}")
    return list(range(count))


def load_dataset(config: Dict[str, Any], dim: int, stream: RngStream, n: Optional[int] = None) -> Dataset:
    """Dataset described by the DATA block, checked against the family dimension."""
    block = config["DATA"]
    n = int(block["N_TRAIN"]) if n is None else n
    if block["KIND"] == "gaussian":
        rotation = random_orthogonal(dim, stream.spawn("rotation"))
        return anisotropic_gaussian(
            power_law_spectrum(dim, float(block["SPECTRUM_DECAY"])), rotation, n, stream.spawn("samples")
        )

    dataset = load_idx(block["IDX_IMAGES"], block.get("IDX_LABELS"))
    if block.get("MAX_SAMPLES"):
        m = int(block["MAX_SAMPLES"])
        labels = dataset.labels[:m] if dataset.labels is not None else None
        dataset = Dataset(dataset.samples[:m], dataset.layout, dataset.provenance, labels)
    if int(block.get("DOWNSCALE") or 1) > 1:
        dataset = downscale(dataset, int(block["DOWNSCALE"]))
    if dataset.dim != dim:
        raise ConfigError(f"DATA has dimension {dataset.dim} but FAMILY has dimension {dim}")
    return dataset


def _data_stream(config: Dict[str, Any], run_info: RunInfo) -> RngStream:
    return RngStream.derive(config["SEED"], run_info.recipe, "data")


def _estimate(
    config: Dict[str, Any], run_info: RunInfo, family: NetworkFamily, samples: Optional[np.ndarray] = None
) -> GeometryEstimate:
    """Run-level geometry estimate, written to ``geometry.csv`` in the run directory."""
    if config["PROBE"].get("KIND") == "around_sample" and samples is None:
        samples = load_dataset(config, family.dim, _data_stream(config, run_info)).samples
    probe = ProbeDistribution.from_config(config["PROBE"], samples=samples)
    estimate = estimate_geometry(
        family,
        probe,
        int(config["GEOMETRY"]["N_SAMPLES"]),
        RngStream.derive(config["SEED"], run_info.recipe, "geometry"),
        workers=int(config.get("WORKERS", 1)),
    )
    write_geometry(run_info.get_store(), "geometry", estimate)
    return estimate


def _write_direction(store: ArtifactStore, name: str, vector: np.ndarray, hw: Optional[Tuple[int, int]]) -> None:
    if hw is None:
        return
    height, width = hw
    store.write_text(f"{name}.pgm", encode_pgm(to_gray(vector[: height * width].reshape(height, width))))


def _train_sample_score(
    config: Dict[str, Any],
    family: NetworkFamily,
    schedule: NoiseSchedule,
    data: Dataset,
    reference: np.ndarray,
    stream: RngStream,
    store: ArtifactStore,
) -> Tuple[Dict[str, Any], np.ndarray]:
    """Train on ``data``, sample, and score the samples against ``reference``."""
    train_config = TrainConfig.from_config(config["TRAIN"], seed=stream.spawn("train").stream_id)
    trace = train(family, data, train_config, schedule)
    store.write_csv("trace.csv", trace.to_frame())
    write_params(store, trace.params)

    generated = sample_ancestral(
        family, trace.params, schedule, int(config["METRICS"]["N_GENERATED"]), stream.spawn("sample")
    ).samples
    store.write_text("samples.csv", matrix_to_csv(generated))
    store.write_text("reference.csv", matrix_to_csv(reference))
    return {"final_loss": trace.final_loss, **score_samples(config, stream, generated, reference)}, generated


def _rank_one_task(
    config: Dict[str, Any], family: NetworkFamily, schedule: NoiseSchedule, v: np.ndarray, extras: Dict[str, Any]
):
    n_train = int(config["DATA"]["N_TRAIN"])
    n_reference = int(config["METRICS"]["N_REFERENCE"])

    def run(stream: RngStream, store: ArtifactStore) -> Dict[str, Any]:
        data = sample_rank_one(v, family.dim, n_train, stream.spawn("data"), family.image_shape)
        reference = sample_rank_one(v, family.dim, n_reference, stream.spawn("reference")).samples
        metrics, _ = _train_sample_score(config, family, schedule, data, reference, stream, store)
        return {**extras, **metrics}

    return run


def _mean_by(rows: Sequence[Dict[str, Any]], key: str, value: str) -> pd.Series:
    frame = pd.DataFrame([row for row in rows if row.get("status") == "ok"])
    if frame.empty or value not in frame:
        return pd.Series(dtype=float)
    return frame.groupby(key)[value].mean()


def _spearman(x: Sequence[float], y: Sequence[float]) -> Optional[float]:
    if len(x) < 2:
        return None
    rho = spearmanr(x, y)[0]
    return None if np.isnan(rho) else float(rho)


def select_sad_indices(dim: int, groups: Sequence[str], per_group: int) -> List[int]:
    """0-based SAD indices for the first, middle and last ``per_group`` directions."""
    per_group = min(int(per_group), dim)
    middle = max(0, (dim - per_group) // 2)
    ranges = {
        "first": range(per_group),
        "middle": range(middle, middle + per_group),
        "last": range(dim - per_group, dim),
    }
    unknown = set(groups) - set(ranges)
    if unknown:
        raise ConfigError(f"Unknown SAD groups {sorted(unknown)}. Available: {list(SAD_GROUPS)}")
    return sorted({i for group in groups for i in ranges[group]})


# Recipes


def basis_sweep(config: Dict[str, Any], run_info: RunInfo) -> RecipeResult:
    """Rank-one datasets along every column of a named basis; heat map of MSW2 per basis vector."""
    params = recipe_params(config)
    basis = build_basis(params["basis"], int(params["height"]), int(params["width"]))
    family = _family(config)
    if family.dim != basis.dim:
        raise ConfigError(f"Basis dimension {basis.dim} does not match family dimension {family.dim}")
    schedule = _schedule(config)
    hw = (int(params["height"]), int(params["width"]))

    indices = list(range(basis.dim)) if params.get("indices") is None else [int(k) for k in params["indices"]]
    layout = {entry["index"]: entry for entry in basis.index_layout}
    tasks = []
    for k in indices:
        unit = f"col_{k:04d}"
        _write_direction(run_info.get_store(unit), "direction", basis.column(k), hw)
        extras = {**layout[k], "index": k}
        for seed in _seeds(params):
            tasks.append(Task(unit, seed, _rank_one_task(config, family, schedule, basis.column(k), extras)))

    rows = run_tasks(config, run_info, tasks)
    extras = {"basis": basis.provenance, "dim": basis.dim, "n_units": len(indices)}
    try:
        render_heatmap_grid(pd.DataFrame(rows), basis, "msw2", store=run_info.get_store())
        extras["heatmap"] = "heatmap.pgm"
    except PreconditionError as error:
        logger.warning("Skipping heat map: %s", error)
    return RecipeResult(rows, extras)


def sad_sweep(config: Dict[str, Any], run_info: RunInfo) -> RecipeResult:
    """Rank-one datasets along selected SADs of the family's geometry."""
    params = recipe_params(config)
    family = _family(config)
    schedule = _schedule(config)
    estimate = _estimate(config, run_info, family)
    sads = extract_sads(estimate)
    run_info.save_df("spectrum", pd.DataFrame({"sad_index": np.arange(sads.dim), "eigenvalue": sads.eigenvalues}))

    hw = _image_hw(family)
    indices = select_sad_indices(sads.dim, params["groups"], params["per_group"])
    tasks = []
    for i in indices:
        unit = f"sad_{i:04d}"
        _write_direction(run_info.get_store(unit), "sad", sads.direction(i), hw)
        extras = {"sad_index": i, "eigenvalue": float(sads.eigenvalues[i])}
        for seed in _seeds(params):
            tasks.append(Task(unit, seed, _rank_one_task(config, family, schedule, sads.direction(i), extras)))

    rows = run_tasks(config, run_info, tasks)
    means = _mean_by(rows, "sad_index", "msw2")
    return RecipeResult(
        rows,
        {
            "n_geometry_samples": estimate.n_samples,
            "distinct_eigenvalues": distinct_eigenvalue_count(sads.eigenvalues),
            "sad_indices": indices,
            "spearman_eigenvalue_msw2": _spearman(sads.eigenvalues[means.index.to_numpy(dtype=int)], means.to_numpy()),
        },
    )


def alignment_study(config: Dict[str, Any], run_info: RunInfo) -> RecipeResult:
    """Train on orthogonally transformed data with minimal, identity and maximal alignment."""
    params = recipe_params(config)
    family = _family(config)
    schedule = _schedule(config)
    data_stream = _data_stream(config, run_info)
    n_reference = int(config["METRICS"]["N_REFERENCE"])
    if config["DATA"]["KIND"] == "gaussian":
        data = load_dataset(config, family.dim, data_stream)
        # same rotation as the training data, fresh samples
        reference_data = anisotropic_gaussian(
            power_law_spectrum(family.dim, float(config["DATA"]["SPECTRUM_DECAY"])),
            random_orthogonal(family.dim, data_stream.spawn("rotation")),
            n_reference,
            data_stream.spawn("reference"),
        )
    else:
        data, reference_data = holdout_split(
            load_dataset(config, family.dim, data_stream), int(config["DATA"]["N_TRAIN"]), n_reference
        )
    estimate = _estimate(config, run_info, family, samples=data.samples)

    c = second_moment(data)
    w_min, w_max = extremal_transforms(estimate.g, c)
    transforms = {
        "w_min": w_min,
        "w_max": w_max,
        "identity": identity_transform(family.dim),
        "random": random_orthogonal(family.dim, RngStream.derive(config["SEED"], run_info.recipe, "random_transform")),
    }
    unknown = set(params["transforms"]) - set(transforms)
    if unknown:
        raise ConfigError(f"Unknown transforms {sorted(unknown)}. Available: {sorted(transforms)}")

    alphas = {}
    tasks = []
    for name in params["transforms"]:
        w = transforms[name]
        report = alignment_report(w, estimate.g, c, data)
        alphas[name] = report.alpha
        transformed = apply_transform(data, w)
        reference = apply_transform(reference_data, w).samples
        extras = {"transform": name, "alpha": report.alpha, "tied_spectrum": report.tied_spectrum}

        def run(stream, store, transformed=transformed, reference=reference, extras=extras):
            metrics, _ = _train_sample_score(config, family, schedule, transformed, reference, stream, store)
            return {**extras, **metrics}

        for seed in _seeds(params):
            tasks.append(Task(name, seed, run))

    rows = run_tasks(config, run_info, tasks)
    means = _mean_by(rows, "transform", "msw2")
    extras = {
        "alphas": alphas,
        "geometry_hash": geometry_hash(estimate.g),
        "mean_msw2": {key: float(value) for key, value in means.items()},
    }
    if "rows" in reference_data.provenance:
        extras["train_rows"] = data.provenance["rows"]
        extras["reference_rows"] = reference_data.provenance["rows"]
    if {"w_min", "identity", "w_max"} <= set(alphas):
        extras["alpha_ordering_holds"] = bool(alphas["w_min"] <= alphas["identity"] <= alphas["w_max"])
    return RecipeResult(rows, extras)


def theory_fig4(config: Dict[str, Any], run_info: RunInfo) -> RecipeResult:
    """Linear DSM in the eigenbasis of Phi Phi^T: mean-error decay rates and SGD plateaus per eigenvector."""
    params = recipe_params(config)
    block = config["THEORY"]
    eigenvalues = np.asarray(block["PHI_EIGENVALUES"], dtype=np.float64)
    if np.any(np.diff(eigenvalues) > 0):
        raise ConfigError("THEORY.PHI_EIGENVALUES must be sorted in descending order")
    phi = np.diag(np.sqrt(eigenvalues))
    sigma, eta = float(block["SIGMA"]), float(block["ETA"])
    dim = eigenvalues.size

    rates = {}
    for i in range(1, dim + 1):
        v = np.eye(dim)[:, i - 1]
        trace = gd_mean_trace(LinearDsmConfig(phi=phi, v=v, sigma=sigma, eta=eta, steps=int(block["GD_STEPS"])))
        run_info.get_store(f"u{i}").write_csv("trace.csv", trace.to_frame())
        rho = predicted_rate(eigenvalues, i, sigma)
        expected_decay = 1.0 - 2.0 * eta * rho
        rates[f"u{i}"] = {
            "predicted_rate": rho,
            "fitted_rate": trace.fitted_rate,
            "fitted_decay": trace.fitted_decay,
            "predicted_decay": expected_decay,
            "fit_window": list(trace.fit_window),
        }
    run_info.get_store().write_json("rates.json", rates)

    def make_run(i: int):
        v = np.eye(dim)[:, i - 1]

        def run(stream: RngStream, store: ArtifactStore) -> Dict[str, Any]:
            sgd_config = LinearDsmConfig(
                phi=phi,
                v=v,
                sigma=sigma,
                eta=eta,
                steps=int(block["SGD_STEPS"]),
                mode="sgd",
                batch=int(block["BATCH"]),
                init_std=float(block["INIT_STD"]),
                seed=stream.spawn("sgd").stream_id,
                burn_in=float(block["BURN_IN"]),
            )
            trace = sgd_simulate(sgd_config)
            store.write_csv("trace.csv", trace.to_frame())
            cov = stochastic_grad_covariance(phi, v, sigma, int(block["N_COV_SAMPLES"]), stream.spawn("covariance"))
            return {
                "direction": i,
                "eigenvalue": float(eigenvalues[i - 1]),
                "predicted_rate": rates[f"u{i}"]["predicted_rate"],
                "fitted_rate": rates[f"u{i}"]["fitted_rate"],
                "stationary_error": trace.stationary_error,
                "sgd_grad_cov_trace": trace.grad_cov_trace,
                "grad_cov_trace": cov.trace,
                "grad_cov_se": cov.standard_error,
                "grad_cov_closed_form": cov.closed_form,
            }

        return run

    tasks = [Task(f"u{i}", seed, make_run(i)) for i in range(1, dim + 1) for seed in _seeds(params)]
    rows = run_tasks(config, run_info, tasks)
    plateaus = _mean_by(rows, "direction", "stationary_error")
    return RecipeResult(
        rows,
        {
            "rates": rates,
            "spearman_eigenvalue_stationary_error": _spearman(
                eigenvalues[plateaus.index.to_numpy(dtype=int) - 1], plateaus.to_numpy()
            ),
        },
    )


def impulse_probe(config: Dict[str, Any], run_info: RunInfo) -> RecipeResult:
    """Asymmetry of impulse responses of a convolutional family per resampling mode."""
    params = recipe_params(config)
    kind = config["FAMILY"]["KIND"]
    if "resampling" not in FamilyRegistry.get(kind).DEFAULTS:
        raise ConfigError(f"impulse_probe needs a family with a resampling option, got '{kind}'")

    tasks = []
    for resampling in params["resamplings"]:
        family = _family(config, resampling=resampling)

        def run(stream, store, family=family, resampling=resampling):
            response = impulse_response(
                family, family.sample_params(stream.spawn("params")), symmetrize=bool(params["symmetrize"])
            )
            store.write_text("response.pgm", encode_pgm(to_gray(response.response[0])))
            store.write_text("response.csv", matrix_to_csv(response.response[0]))
            return {"resampling": resampling, "asymmetry": response.asymmetry_score, "sigma": response.sigma}

        for seed in _seeds(params):
            tasks.append(Task(f"resampling_{resampling}", seed, run))

    rows = run_tasks(config, run_info, tasks)
    means = _mean_by(rows, "resampling", "asymmetry")
    return RecipeResult(rows, {"mean_asymmetry": {key: float(value) for key, value in means.items()}})


def geometry_report(config: Dict[str, Any], run_info: RunInfo) -> RecipeResult:
    """Geometry, SAD spectrum with Markov bounds, distinct-eigenvalue counts and SAD strips."""
    params = recipe_params(config)
    family = _family(config)
    estimate = _estimate(config, run_info, family)
    sads = extract_sads(estimate)

    eta = float(params["markov_eta"])
    spectrum = pd.DataFrame(
        {
            "sad_index": np.arange(sads.dim),
            "eigenvalue": sads.eigenvalues,
            "markov_bound": sads.markov_bounds(estimate, eta),
        }
    )
    run_info.save_df("spectrum", spectrum)

    hw = _image_hw(family)
    count = min(int(params["strip_count"]), sads.dim)
    if hw is not None:
        store = run_info.get_store()
        write_sad_strip(store, "sads_first", sads, hw, range(count))
        write_sad_strip(store, "sads_last", sads, hw, range(sads.dim - count, sads.dim))

    row = {
        "unit": "geometry",
        "seed": 0,
        "status": "ok",
        "error": "",
        "family": family.get_key(),
        "dim": family.dim,
        "n_samples": estimate.n_samples,
        "n_rejected": estimate.n_rejected,
        "eigenvalue_min": float(sads.eigenvalues[0]),
        "eigenvalue_max": float(sads.eigenvalues[-1]),
        "trace": float(np.trace(estimate.g)),
        "distinct_eigenvalues": distinct_eigenvalue_count(sads.eigenvalues),
        "distinct_eigenvalues_coarse": distinct_eigenvalue_count(sads.eigenvalues, rel_tol=1e-2),
    }
    return RecipeResult([row], {"markov_eta": eta, "strip_count": count})


def sphere_study(config: Dict[str, Any], run_info: RunInfo) -> RecipeResult:
    """Spheres in the span of the first three versus the last three SADs."""
    params = recipe_params(config)
    family = _family(config)
    if family.dim < 6:
        raise ConfigError(f"sphere_study needs dimension >= 6, got {family.dim}")
    schedule = _schedule(config)
    sads = extract_sads(_estimate(config, run_info, family))
    radius = float(params["radius"])
    n_train = int(config["DATA"]["N_TRAIN"])
    n_reference = int(config["METRICS"]["N_REFERENCE"])

    subspaces = {"first3": [0, 1, 2], "last3": [family.dim - 3, family.dim - 2, family.dim - 1]}
    tasks = []
    for name, indices in subspaces.items():
        basis3 = sads.directions[:, indices]

        def run(stream, store, basis3=basis3, name=name):
            data = sphere_dataset(basis3, radius, n_train, stream.spawn("data"))
            reference = sphere_dataset(basis3, radius, n_reference, stream.spawn("reference")).samples
            metrics, generated = _train_sample_score(config, family, schedule, data, reference, stream, store)
            inside = generated @ basis3
            return {
                "subspace": name,
                **metrics,
                "radius_error": float(np.mean(np.abs(np.linalg.norm(inside, axis=1) - radius))),
                "off_subspace_norm": float(np.mean(np.linalg.norm(generated - inside @ basis3.T, axis=1))),
            }

        for seed in _seeds(params):
            tasks.append(Task(name, seed, run))

    rows = run_tasks(config, run_info, tasks)
    means = _mean_by(rows, "subspace", "msw2")
    return RecipeResult(rows, {"mean_msw2": {key: float(value) for key, value in means.items()}})
