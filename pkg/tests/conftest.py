"""Shared fixtures."""

# Standard library imports
from typing import Tuple

# Third party imports
import numpy as np
import pytest

from src.models.data import (
    DataMatrix,
    GroupAssignment,
    HiddenSignals,
    NoiseVariances,
    PrecisionMatrix,
)
from src.models.simulation import SimulationSpec


def random_precision(k: int, rng: np.random.Generator) -> PrecisionMatrix:
    """A well-conditioned, exactly symmetric positive definite matrix."""
    b = rng.standard_normal((k, k))
    m = b @ b.T / k + np.eye(k)
    return PrecisionMatrix(omega=(m + m.T) / 2.0)


def separated_data(
    n: int = 30, k: int = 3, per_group: int = 4, noise: float = 0.05, seed: int = 0
) -> Tuple[DataMatrix, GroupAssignment]:
    """Columns are tight noisy copies of k random centers."""
    rng = np.random.default_rng(seed)
    centers = rng.standard_normal((n, k))
    labels = np.repeat(np.arange(k), per_group)
    x = centers[:, labels] + noise * rng.standard_normal((n, k * per_group))
    return DataMatrix(values=x), GroupAssignment(labels=labels, k=k)


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(20240601)


@pytest.fixture
def instance(rng):
    """A small random (X, Z, G, Omega, Phi) tuple with n = 8, p = 7, K = 3."""
    x = DataMatrix(values=rng.standard_normal((8, 7)))
    g = GroupAssignment(labels=[0, 1, 2, 0, 1, 2, 0], k=3)
    z = HiddenSignals(values=rng.standard_normal((8, 3)))
    omega = random_precision(3, rng)
    phi = NoiseVariances(phi=rng.uniform(0.5, 2.0, size=3))
    return x, z, g, omega, phi


@pytest.fixture
def separated():
    return separated_data()


@pytest.fixture
def tiny_spec() -> SimulationSpec:
    return SimulationSpec(n=40, k=4, block_size=2, replicates_per_node=5, noise_sd=0.1, seed=3)
