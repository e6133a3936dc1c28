"""Model for BIC records."""

# Standard library imports
import math
from typing import Annotated

# Third party imports
from pydantic import Field, model_validator

from src.models.core import CoreModel


class BicRecord(CoreModel):
    """BIC of one (K, lambda) fit."""

    k: Annotated[int, Field(ge=1)]
    lam: Annotated[float, Field(gt=0)]
    bic: float
    neg_log_lik: float
    s: Annotated[int, Field(ge=0)]
    converged: bool

    @model_validator(mode="after")
    def check_counts(self) -> "BicRecord":
        """s is even and bounded by K(K-1); bic is finite."""
        if self.s % 2 or self.s > self.k * (self.k - 1):
            raise ValueError(f"invalid off-diagonal count {self.s} for K = {self.k}")
        if not math.isfinite(self.bic):
            raise ValueError("BIC must be finite")
        return self


class GridFailure(CoreModel):
    """A (K, lambda) point whose fit raised; it is missing from the BIC path."""

    k: Annotated[int, Field(ge=1)]
    lam: Annotated[float, Field(gt=0)]
    error: str
