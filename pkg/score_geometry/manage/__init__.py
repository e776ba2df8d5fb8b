"""Run storage for experiment recipes."""

from .runs import (
    RunInfo,
    create_run,
    environment_metadata,
    list_units,
    load_config,
    load_run_metadata,
    read_params,
    save_run_metadata,
    write_config,
    write_params,
)

__all__ = [
    "RunInfo",
    "create_run",
    "environment_metadata",
    "list_units",
    "load_config",
    "load_run_metadata",
    "read_params",
    "save_run_metadata",
    "write_config",
    "write_params",
]
