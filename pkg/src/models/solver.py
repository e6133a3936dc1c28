"""Models for the alternating solver."""

# Standard library imports
import math
from enum import Enum
from typing import Annotated, List, Tuple

# Third party imports
from pydantic import Field, field_validator

from src.core.config import (
    E_TOL,
    MAX_ITER,
    PRECISION_MAX_ITER,
    PRECISION_TOL,
    RESTARTS,
    THREADS,
)
from src.models.core import CoreModel


class Estimator(str, Enum):
    """Estimator used for the Omega update."""

    GLASSO = "glasso"
    SCIO = "scio"


class ReassignMetric(str, Enum):
    """Distance used by the group update."""

    EUCLIDEAN = "euclidean"
    PHI_WEIGHTED = "phi_weighted"


class SolverConfig(CoreModel):
    """Everything one fit needs besides the data."""

    k: Annotated[int, Field(ge=1)]
    lam: Annotated[float, Field(gt=0)]
    e_tol: Annotated[float, Field(gt=0)] = E_TOL
    max_iter: Annotated[int, Field(ge=0)] = MAX_ITER
    restarts: Annotated[int, Field(ge=1)] = RESTARTS
    seed: int = 0
    estimator: Estimator = Estimator.SCIO
    reassign_metric: ReassignMetric = ReassignMetric.EUCLIDEAN
    update_groups: bool = True
    precision_tol: Annotated[float, Field(gt=0)] = PRECISION_TOL
    precision_max_iter: Annotated[int, Field(ge=1)] = PRECISION_MAX_ITER
    threads: Annotated[int, Field(ge=1)] = THREADS


class IterationRecord(CoreModel):
    """One pass of the Z, Phi, Omega and group updates.

    ``step_objectives`` holds the penalized objective after the Z, Phi and
    Omega updates, all evaluated with the groups the iteration started from.
    ``omega_rejected`` marks a glasso update that was discarded because it
    raised the objective; Omega then keeps its previous value.
    """

    iteration: Annotated[int, Field(ge=0)]
    objective: float
    neg_log_lik: float
    groups_changed: Annotated[int, Field(ge=0)] = 0
    z_delta: Annotated[float, Field(ge=0)] = 0.0
    step_objectives: Tuple[float, float, float] = (0.0, 0.0, 0.0)
    omega_rejected: bool = False

    @field_validator("objective", "neg_log_lik")
    @classmethod
    def finite(cls, value: float) -> float:
        """Objectives stay finite."""
        if not math.isfinite(value):
            raise ValueError("objective must be finite")
        return value


class FitTrace(CoreModel):
    """Per-iteration history of one restart; record 0 is the initialization."""

    restart_seed: int
    records: List[IterationRecord] = []
    stop_reason: str = "max_iter"
