"""
Run management: output tree ``<storage>/<recipe>/<unit>/<seed>/`` for experiment recipes.
"""

import platform
import sys
from dataclasses import dataclass
from datetime import datetime
from pathlib import Path
from typing import Any, Dict, List, Optional

import numpy as np
import pandas as pd
import yaml
from artifact_store import ArtifactStore

from ..core import ParamSet
from ..numerics import matrix_from_csv, matrix_to_csv


@dataclass
class RunInfo:
    """Information about a recipe run and its storage location."""

    recipe: str
    storage_path: str

    def __str__(self) -> str:
        return self.recipe

    @property
    def run_path(self) -> str:
        return f"{self.storage_path}/{self.recipe}"

    def get_store(self, *parts: Any) -> ArtifactStore:
        """Get an ArtifactStore for the run directory or a subdirectory of it."""
        suffix = "/".join(str(part) for part in parts)
        return ArtifactStore(f"{self.run_path}/{suffix}" if suffix else self.run_path)

    def unit_store(self, unit: str, seed: int) -> ArtifactStore:
        return self.get_store(unit, seed)

    def save_df(self, name: str, df: pd.DataFrame, *parts: Any) -> None:
        """Save a DataFrame to the run directory (or a subdirectory)."""
        self.get_store(*parts).write_csv(f"{name}.csv", df)

    def load_df(self, name: str, *parts: Any) -> Optional[pd.DataFrame]:
        """Load a DataFrame from the run directory (or a subdirectory)."""
        store = self.get_store(*parts)
        file_path = f"{name}.csv"
        if not store.exists(file_path):
            return None
        return store.read_csv(file_path)

    def save_matrix(self, name: str, matrix: np.ndarray, *parts: Any) -> None:
        """Write a matrix as row-major CSV with full float precision."""
        self.get_store(*parts).write_text(f"{name}.csv", matrix_to_csv(matrix))

    def load_matrix(self, name: str, *parts: Any) -> np.ndarray:
        store = self.get_store(*parts)
        file_path = f"{name}.csv"
        if not store.exists(file_path):
            raise FileNotFoundError(f"Matrix file not found: {store.full_path(file_path)}")
        return matrix_from_csv(store.read_text(file_path))

    def save_params(self, params: ParamSet, *parts: Any) -> Path:
        return write_params(self.get_store(*parts), params)

    def load_params(self, *parts: Any) -> ParamSet:
        return read_params(self.get_store(*parts))


def write_params(store: ArtifactStore, params: ParamSet, name: str = "params.bin") -> Path:
    """Write a parameter blob next to the store's other artifacts."""
    path = Path(store.full_path(name))
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_bytes(params.to_bytes())
    return path


def read_params(store: ArtifactStore, name: str = "params.bin") -> ParamSet:
    path = Path(store.full_path(name))
    if not path.exists():
        raise FileNotFoundError(f"Parameter file not found: {path}")
    return ParamSet.from_bytes(path.read_bytes())


def environment_metadata() -> Dict[str, str]:
    return {
        "python": sys.version.split()[0],
        "numpy": np.__version__,
        "pandas": pd.__version__,
        "platform": platform.platform(),
    }


def create_run(config: Dict, recipe: str) -> RunInfo:
    """
    Create a run directory and echo the effective config into it.

    Args:
        config: Effective configuration (expects STORAGE.PATH)
        recipe: Recipe name

    Returns:
        RunInfo: Information about the created run
    """
    storage_path = config.get("STORAGE", {}).get("PATH", ".")
    run_info = RunInfo(recipe=recipe, storage_path=storage_path)
    write_config(run_info, config)
    return run_info


def write_config(run_info: RunInfo, config: Dict) -> None:
    run_info.get_store().write_text("config.yaml", yaml.safe_dump(config, sort_keys=False))


def load_config(run_info: RunInfo) -> Dict:
    store = run_info.get_store()
    if not store.exists("config.yaml"):
        raise FileNotFoundError(f"Config echo not found: {store.full_path('config.yaml')}")
    return store.read_yaml("config.yaml")


def save_run_metadata(run_info: RunInfo, **extra) -> None:
    """
    Save/update run metadata.

    Args:
        run_info: RunInfo for the run
        **extra: Additional metadata fields (e.g., n_rows=36, n_failures=0)
    """
    store = run_info.get_store()

    if store.exists("metadata.json"):
        metadata = store.read_json("metadata.json")
    else:
        metadata = {
            "recipe": run_info.recipe,
            "storage_path": run_info.storage_path,
            "environment": environment_metadata(),
        }

    metadata.update(extra)
    metadata["timestamp"] = datetime.now().isoformat()

    store.write_json("metadata.json", metadata)


def load_run_metadata(run_info: RunInfo) -> Dict:
    """
    Load metadata for a run.

    Raises:
        FileNotFoundError: If the metadata file doesn't exist
    """
    store = run_info.get_store()

    if not store.exists("metadata.json"):
        raise FileNotFoundError(f"Metadata file not found: {store.full_path('metadata.json')}")

    return store.read_json("metadata.json")


def list_units(run_info: RunInfo) -> List[str]:
    """Unit directories of a run, sorted by name."""
    run_dir = Path(run_info.run_path)
    if not run_dir.exists():
        return []
    return sorted(entry.name for entry in run_dir.iterdir() if entry.is_dir())
