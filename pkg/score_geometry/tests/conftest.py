"""Shared pytest fixtures for test configuration."""

from pathlib import Path

import numpy as np
import pytest
import yaml

from score_geometry.numerics import RngStream

FIXTURES_DIR = Path(__file__).parent / "fixtures"


def load_fixture(name: str) -> dict:
    """Load a YAML fixture by name."""
    with open(FIXTURES_DIR / name) as f:
        return yaml.safe_load(f)


@pytest.fixture
def stream():
    """Root random stream with a fixed seed."""
    return RngStream(7)


@pytest.fixture
def config_basis_sweep():
    """Small canonical-basis sweep on 2x2 images."""
    return load_fixture("config_basis_sweep.yaml")


@pytest.fixture
def config_sad_sweep():
    """Small SAD sweep with a linear family."""
    return load_fixture("config_sad_sweep.yaml")


@pytest.fixture
def config_alignment():
    """Alignment study on an anisotropic Gaussian."""
    return load_fixture("config_alignment.yaml")


@pytest.fixture
def config_theory():
    """Linear DSM decay-rate study."""
    return load_fixture("config_theory.yaml")


@pytest.fixture
def config_geometry_report():
    """Geometry report for a small MLP."""
    return load_fixture("config_geometry_report.yaml")


def random_symmetric(rng: np.random.Generator, n: int) -> np.ndarray:
    a = rng.standard_normal((n, n))
    return 0.5 * (a + a.T)
