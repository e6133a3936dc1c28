"""Core data that exist in all Models."""

# Standard library imports
from datetime import datetime
from typing import Any, Optional

# Third party imports
import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator


class CoreModel(BaseModel):
    """Any common logic to be shared by all models.

    Models are frozen and may hold numpy arrays; arrays stored on a model are
    private copies flagged read-only, so values can be shared across threads.
    """

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)


class DateTimeModelMixin(BaseModel):
    """Datetime model data."""

    created_at: Optional[datetime] = Field(default=None, validate_default=True)

    @field_validator("created_at", mode="before")
    @classmethod
    def default_datetime(cls, value: Optional[datetime]) -> datetime:
        """Stamp the creation time when none is given."""
        return value or datetime.now()


def frozen_array(value: Any, *, ndim: int, dtype: Any = float) -> np.ndarray:
    """Copy ``value`` into a read-only array of the given rank."""
    array = np.array(value, dtype=dtype, copy=True)
    if array.ndim != ndim:
        raise ValueError(f"expected a {ndim}-d array, got shape {array.shape}")
    array.flags.writeable = False
    return array
