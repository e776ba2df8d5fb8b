"""Heat maps of per-basis-vector metrics laid out on the basis' index grid."""

import logging
from typing import Optional

import numpy as np
import pandas as pd
from artifact_store import ArtifactStore

from ..bases import OrthoTransform
from ..errors import PreconditionError
from ..geometry import encode_pgm, to_gray
from ..numerics import matrix_to_csv

logger = logging.getLogger(__name__)

FREQUENCY_KEYS = ("freq", "seq")


def _frequency_grid(layout: pd.DataFrame, values: pd.Series, key: str) -> np.ndarray:
    """Centre the zero frequency and mirror the first quadrant into the other three."""
    rows = layout[f"{key}_row"].to_numpy()
    cols = layout[f"{key}_col"].to_numpy()
    height, width = rows.max() + 1, cols.max() + 1
    grid = np.full((2 * height - 1, 2 * width - 1), np.nan)
    for index, r, c in zip(layout["index"], rows, cols):
        value = values[index]
        for sr in (-1, 1):
            for sc in (-1, 1):
                grid[height - 1 + sr * r, width - 1 + sc * c] = value
    return grid


def _position_grid(layout: pd.DataFrame, values: pd.Series) -> np.ndarray:
    rows = layout["grid_row"].to_numpy()
    cols = layout["grid_col"].to_numpy()
    grid = np.full((rows.max() + 1, cols.max() + 1), np.nan)
    for index, r, c in zip(layout["index"], rows, cols):
        grid[r, c] = values[index]
    return grid


def render_heatmap_grid(
    report: pd.DataFrame,
    basis: OrthoTransform,
    value: str = "msw2",
    store: Optional[ArtifactStore] = None,
    name: str = "heatmap",
) -> np.ndarray:
    """
    Lay out per-basis-vector metric values (mean over seeds) on the basis grid.

    Frequency-type bases (dct, dst, hadamard) use a (2H - 1) x (2W - 1) grid with
    the zero frequency at the centre and mirrored quadrants; canonical and haar2d
    bases are drawn at their pixel or coefficient position.

    Args:
        report: Report rows with an ``index`` column naming the basis column
        basis: Basis the sweep ran over
        value: Column to draw
        store: When given, ``{name}.pgm`` and ``{name}.csv`` are written to it

    Raises:
        PreconditionError: If some basis column has no successful row
    """
    if not basis.index_layout:
        raise PreconditionError(f"Basis {basis.provenance} has no index layout")
    rows = report
    if "status" in rows:
        rows = rows[rows["status"] == "ok"]
    if "index" not in rows or value not in rows:
        raise PreconditionError(f"Report needs 'index' and '{value}' columns")
    values = rows.groupby(rows["index"].astype(int))[value].mean()

    layout = basis.layout_frame()
    missing = sorted(set(layout["index"]) - set(values.index))
    if missing:
        raise PreconditionError(f"Report is missing rows for basis columns {missing[:10]} ({len(missing)} total)")

    key = next((k for k in FREQUENCY_KEYS if f"{k}_row" in layout), None)
    grid = _frequency_grid(layout, values, key) if key else _position_grid(layout, values)

    if store is not None:
        store.write_text(f"{name}.pgm", encode_pgm(to_gray(grid)))
        store.write_text(f"{name}.csv", matrix_to_csv(grid))
        logger.info("Wrote heat map %s to %s", name, store.base_path)
    return grid
