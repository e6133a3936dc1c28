"""Models for the precision-matrix estimators."""

# Standard library imports
from typing import Annotated, Any, List

# Third party imports
import numpy as np
from pydantic import Field, field_validator

from src.models.core import CoreModel, frozen_array
from src.models.data import HiddenSignals

SYMMETRY_TOL = 1e-10


class GramMatrix(CoreModel):
    """A = (1/n) Z^T Z, the latent-layer second-moment matrix."""

    a: np.ndarray

    @field_validator("a", mode="before")
    @classmethod
    def as_gram(cls, value: Any) -> np.ndarray:
        """Copy into a read-only square matrix, symmetric to rounding."""
        array = frozen_array(value, ndim=2)
        if array.shape[0] != array.shape[1]:
            raise ValueError(f"Gram matrix must be square, got {array.shape}")
        if not np.all(np.isfinite(array)):
            raise ValueError("Gram matrix contains non-finite values")
        scale = max(1.0, float(np.abs(array).max(initial=0.0)))
        if np.abs(array - array.T).max(initial=0.0) > SYMMETRY_TOL * scale:
            raise ValueError("Gram matrix must be symmetric")
        if np.any(np.diag(array) < 0):
            raise ValueError("Gram matrix diagonal must be non-negative")
        return array

    @classmethod
    def from_signals(cls, z: HiddenSignals) -> "GramMatrix":
        """Gram matrix of the current latent signals."""
        a = z.values.T @ z.values / z.n
        return cls(a=(a + a.T) / 2.0)

    @property
    def k(self) -> int:
        """Node count."""
        return self.a.shape[0]


class SolverReport(CoreModel):
    """Diagnostics of one precision-estimator call."""

    iterations: Annotated[int, Field(ge=0)] = 0
    kkt_residual: Annotated[float, Field(ge=0)] = 0.0
    duality_or_objective_gap: float = 0.0
    refit_applied: bool = False
    ridge_added: Annotated[float, Field(ge=0)] = 0.0
    dual_path: List[float] = []
