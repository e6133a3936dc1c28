"""Model for k-means output."""

# Standard library imports
from typing import Annotated, Any

# Third party imports
import numpy as np
from pydantic import Field, field_validator

from src.models.core import CoreModel, frozen_array
from src.models.data import GroupAssignment


class KmeansResult(CoreModel):
    """Best k-means partition of the columns of X."""

    centers: np.ndarray
    labels: GroupAssignment
    within_ss: Annotated[float, Field(ge=0)]
    restarts_used: Annotated[int, Field(ge=1)]

    @field_validator("centers", mode="before")
    @classmethod
    def as_centers(cls, value: Any) -> np.ndarray:
        """n x K matrix whose columns are cluster centers."""
        array = frozen_array(value, ndim=2)
        if not np.all(np.isfinite(array)):
            raise ValueError("cluster centers must be finite")
        return array
