"""End-to-end tests for experiment recipes on small configurations."""

import os

import numpy as np
import pandas as pd
import pytest
from artifact_store import ArtifactStore

from score_geometry.bases import build_basis
from score_geometry.config_processor import deep_merge, process_config
from score_geometry.data import encode_idx_images
from score_geometry.errors import ConfigError, PreconditionError
from score_geometry.experiments import (
    RecipeResult,
    Task,
    audit_row,
    list_recipes,
    register_recipe,
    render_heatmap_grid,
    run_experiment,
    run_tasks,
    select_sad_indices,
)
from score_geometry.manage import create_run, load_run_metadata


def _config(fixture, path, **sections):
    user_config = deep_merge(fixture, {"STORAGE": {"PATH": str(path)}, **sections})
    return process_config(user_config=user_config, require_recipe=True)


def test_builtin_recipes_registered():
    for name in ["basis_sweep", "sad_sweep", "alignment_study", "theory_fig4", "impulse_probe", "geometry_report"]:
        assert name in list_recipes()
    assert "sphere_study" in list_recipes()


class TestBasisSweep:
    """Rank-one sweeps over the canonical basis of 2x2 images."""

    def test_rows_and_artifacts(self, config_basis_sweep, tmp_path):
        report = run_experiment(_config(config_basis_sweep, tmp_path))
        assert report.ok
        assert len(report.rows) == 8
        assert sorted(report.rows["unit"].unique()) == ["col_0000", "col_0001", "col_0002", "col_0003"]
        assert np.all(report.rows["msw2"] >= report.rows["sw2"] - 1e-12)

        run_path = report.run_info.run_path
        for name in ["config.yaml", "report.csv", "summary.json", "metadata.json", "heatmap.pgm"]:
            assert os.path.exists(os.path.join(run_path, name))
        assert os.path.exists(os.path.join(run_path, "col_0002", "1", "samples.csv"))
        assert os.path.exists(os.path.join(run_path, "col_0002", "direction.pgm"))
        assert load_run_metadata(report.run_info)["n_rows"] == 8

    def test_deterministic(self, config_basis_sweep, tmp_path):
        first = run_experiment(_config(config_basis_sweep, tmp_path / "a"))
        second = run_experiment(_config(config_basis_sweep, tmp_path / "b"))
        pd.testing.assert_frame_equal(first.rows, second.rows)

    def test_audit_reproduces_metrics(self, config_basis_sweep, tmp_path):
        config = _config(config_basis_sweep, tmp_path)
        report = run_experiment(config)
        row = report.rows.iloc[3].to_dict()
        audited = audit_row(report.run_info, row, config)
        assert audited["msw2"] == row["msw2"]
        assert audited["sw2"] == row["sw2"]

    def test_basis_must_match_family(self, config_basis_sweep, tmp_path):
        config = _config(config_basis_sweep, tmp_path, FAMILY={"KIND": "linear", "PARAMS": {"dim": 9}})
        with pytest.raises(ConfigError, match="does not match"):
            run_experiment(config)


class TestSadSweep:
    """Rank-one sweeps along selected SADs."""

    def test_rows_and_spectrum(self, config_sad_sweep, tmp_path):
        report = run_experiment(_config(config_sad_sweep, tmp_path))
        assert report.ok
        assert report.extras["sad_indices"] == [0, 3]
        assert sorted(report.rows["sad_index"]) == [0, 3]
        spectrum = report.run_info.load_df("spectrum")
        assert np.all(np.diff(spectrum["eigenvalue"]) >= 0)
        assert os.path.exists(os.path.join(report.run_info.run_path, "geometry.csv"))

    def test_select_sad_indices(self):
        assert select_sad_indices(10, ["first", "last"], 2) == [0, 1, 8, 9]
        assert select_sad_indices(10, ["middle"], 2) == [4, 5]
        assert select_sad_indices(3, ["first"], 8) == [0, 1, 2]

    def test_unknown_group(self):
        with pytest.raises(ConfigError):
            select_sad_indices(4, ["center"], 1)

    @pytest.mark.slow
    def test_low_eigenvalue_sads_sample_better(self, tmp_path):
        """Zero-padded convolutions fit border-localized SADs better than interior ones."""
        fixture = {
            "SEED": 0,
            "FAMILY": {"KIND": "conv_unet_mini", "PARAMS": {"levels": 1, "hidden_channels": 8, "padding": "zero"}},
            "PROBE": {"KIND": "isotropic_gaussian", "SIGMA_P": 1.0},
            "GEOMETRY": {"N_SAMPLES": 2000},
            "TRAIN": {"batch_size": 64, "iterations": 1500, "learning_rate": 0.002, "log_every": 500},
            "METRICS": {"L_PER_DIM": 16, "N_GENERATED": 500, "N_REFERENCE": 500},
            "DATA": {"N_TRAIN": 1000},
            "RECIPE": {"FUNCTION": "sad_sweep", "PARAMS": {"groups": ["first", "last"], "per_group": 2, "seeds": 3}},
        }
        report = run_experiment(_config(fixture, tmp_path))
        assert report.ok
        assert report.extras["sad_indices"] == [0, 1, 62, 63]
        assert report.extras["spearman_eigenvalue_msw2"] > 0.0


class TestAlignmentStudy:
    """Training on data moved by w_min, identity and w_max."""

    def test_alpha_ordering(self, config_alignment, tmp_path):
        report = run_experiment(_config(config_alignment, tmp_path))
        assert report.ok
        assert list(report.rows["transform"]) == ["w_min", "identity", "w_max"]
        assert report.extras["alpha_ordering_holds"]
        assert set(report.extras["mean_msw2"]) == {"w_min", "identity", "w_max"}

    def test_unknown_transform(self, config_alignment, tmp_path):
        config = _config(config_alignment, tmp_path, RECIPE={"PARAMS": {"transforms": ["w_median"]}})
        with pytest.raises(ConfigError):
            run_experiment(config)

    def _idx_data(self, path, count):
        images = np.random.default_rng(0).integers(0, 256, size=(count, 4, 4), dtype=np.uint8)
        (path / "images.idx").write_bytes(encode_idx_images(images))
        return {"KIND": "idx", "IDX_IMAGES": str(path / "images.idx"), "N_TRAIN": 64, "DOWNSCALE": 2}

    def test_idx_reference_is_held_out(self, config_alignment, tmp_path):
        report = run_experiment(_config(config_alignment, tmp_path, DATA=self._idx_data(tmp_path, 160)))
        assert report.ok
        train_start, train_stop = report.extras["train_rows"]
        reference_start, reference_stop = report.extras["reference_rows"]
        assert (train_start, train_stop) == (0, 64)
        assert (reference_start, reference_stop) == (64, 128)
        assert not set(range(train_start, train_stop)) & set(range(reference_start, reference_stop))

    def test_idx_split_too_small(self, config_alignment, tmp_path):
        config = _config(config_alignment, tmp_path, DATA=self._idx_data(tmp_path, 100))
        with pytest.raises(PreconditionError, match="held out"):
            run_experiment(config)


class TestTheoryRecipe:
    """Mean-error rates and SGD plateaus per eigenvector of Phi Phi^T."""

    def test_traces_and_rates(self, config_theory, tmp_path):
        report = run_experiment(_config(config_theory, tmp_path))
        assert report.ok
        assert len(report.rows) == 5
        run_path = report.run_info.run_path
        for i in range(1, 6):
            assert os.path.exists(os.path.join(run_path, f"u{i}", "trace.csv"))
        rates = report.run_info.get_store().read_json("rates.json")
        assert rates["u1"]["fitted_rate"] == pytest.approx(1.0, rel=0.02)
        assert rates["u5"]["fitted_rate"] == pytest.approx(2.0, rel=0.02)
        closed = report.rows.set_index("direction")["grad_cov_closed_form"]
        assert closed[1] / closed[5] == pytest.approx(5.0)

    def test_eigenvalues_must_descend(self, config_theory, tmp_path):
        config = _config(config_theory, tmp_path, THEORY={"PHI_EIGENVALUES": [1.0, 2.0]})
        with pytest.raises(ConfigError):
            run_experiment(config)


class TestImpulseProbe:
    """Impulse-response asymmetry per resampling mode."""

    def test_area_is_symmetric(self, tmp_path):
        fixture = {
            "SEED": 2,
            "FAMILY": {"KIND": "conv_unet_mini", "PARAMS": {"height": 5, "width": 5, "hidden_channels": 3}},
            "RECIPE": {"FUNCTION": "impulse_probe", "PARAMS": {"seeds": 2}},
        }
        report = run_experiment(_config(fixture, tmp_path))
        assert report.ok
        assert len(report.rows) == 4
        asymmetry = report.extras["mean_asymmetry"]
        assert asymmetry["area"] < 1e-10
        assert asymmetry["nearest"] > 1e-6

    def test_requires_resampling_family(self, tmp_path):
        fixture = {"SEED": 0, "RECIPE": {"FUNCTION": "impulse_probe"}}
        with pytest.raises(ConfigError):
            run_experiment(_config(fixture, tmp_path))


class TestGeometryReport:
    """Spectrum, Markov bounds and distinct-eigenvalue counts."""

    def test_single_row(self, config_geometry_report, tmp_path):
        report = run_experiment(_config(config_geometry_report, tmp_path))
        assert len(report.rows) == 1
        row = report.rows.iloc[0]
        assert row["dim"] == 6
        assert row["n_samples"] == 300
        assert row["eigenvalue_min"] <= row["eigenvalue_max"]
        spectrum = report.run_info.load_df("spectrum")
        assert list(spectrum.columns) == ["sad_index", "eigenvalue", "markov_bound"]
        assert report.extras["strip_count"] == 2

    def test_square_dimension_writes_strips(self, config_geometry_report, tmp_path):
        config = _config(config_geometry_report, tmp_path, FAMILY={"KIND": "mlp", "PARAMS": {"dim": 4}})
        report = run_experiment(config)
        for name in ["sads_first.pgm", "sads_last.pgm"]:
            assert os.path.exists(os.path.join(report.run_info.run_path, name))


class TestFailureIsolation:
    """A failing unit yields a failed row and the rest of the sweep continues."""

    def test_failed_row(self, tmp_path):
        def flaky_recipe(config, run_info):
            def good(stream, store):
                return {"value": 1.0}

            def bad(stream, store):
                raise RuntimeError("boom")

            tasks = [Task("good", 0, good), Task("bad", 0, bad), Task("good", 1, good)]
            return RecipeResult(run_tasks(config, run_info, tasks))

        register_recipe("flaky_recipe", flaky_recipe)
        report = run_experiment(_config({"SEED": 0, "RECIPE": {"FUNCTION": "flaky_recipe"}}, tmp_path))
        assert not report.ok
        assert list(report.rows["status"]) == ["ok", "failed", "ok"]
        assert report.failures.iloc[0]["error"] == "RuntimeError: boom"
        assert load_run_metadata(report.run_info)["n_failures"] == 1

    def test_rows_keep_task_order_with_threads(self, tmp_path):
        config = _config({"SEED": 0, "WORKERS": 4, "RECIPE": {"FUNCTION": "theory_fig4"}}, tmp_path)
        run_info = create_run(config, "ordered")
        tasks = [Task(f"unit_{k}", 0, lambda stream, store, k=k: {"k": k}) for k in range(12)]
        rows = run_tasks(config, run_info, tasks)
        assert [row["k"] for row in rows] == list(range(12))


class TestRender:
    """Heat maps on frequency and position grids."""

    def _report(self, basis, values):
        return pd.DataFrame({"index": np.arange(basis.dim), "msw2": values, "status": "ok"})

    def test_hadamard_quadrants_are_mirrored(self):
        basis = build_basis("hadamard", 4, 4)
        grid = render_heatmap_grid(self._report(basis, np.arange(16.0)), basis)
        assert grid.shape == (7, 7)
        np.testing.assert_array_equal(grid, grid[::-1, :])
        np.testing.assert_array_equal(grid, grid[:, ::-1])
        assert grid[3, 3] == 0.0

    def test_constant_values_render_mid_gray(self, tmp_path):
        basis = build_basis("dct", 2, 2)
        store = ArtifactStore(str(tmp_path))
        render_heatmap_grid(self._report(basis, np.full(4, 0.7)), basis, store=store)
        lines = store.read_text("heatmap.pgm").splitlines()
        assert lines[:3] == ["P2", "3 3", "255"]
        assert set(" ".join(lines[3:]).split()) == {"128"}

    def test_canonical_uses_pixel_positions(self):
        basis = build_basis("canonical", 2, 2)
        grid = render_heatmap_grid(self._report(basis, [1.0, 2.0, 3.0, 4.0]), basis)
        np.testing.assert_array_equal(grid, [[1.0, 2.0], [3.0, 4.0]])

    def test_missing_rows(self):
        basis = build_basis("dct", 2, 2)
        with pytest.raises(PreconditionError, match="missing rows"):
            render_heatmap_grid(self._report(basis, np.ones(4)).iloc[:2], basis)
