"""Parsing of comma-separated tuning grids shared by the CLI and the HTTP API."""

# Standard library imports
import math
from typing import List, Union

from src.core.errors import InvalidParameter

LambdaGrid = Union[int, List[float]]


def parse_int_list(raw: str) -> List[int]:
    """``"2,3,5"`` -> [2, 3, 5]; every value must be a positive integer."""
    tokens = [token.strip() for token in raw.split(",") if token.strip()]
    if not tokens:
        raise InvalidParameter("empty integer list")
    try:
        values = [int(token) for token in tokens]
    except ValueError:
        raise InvalidParameter(f"expected comma-separated integers, got {raw!r}")
    if min(values) < 1:
        raise InvalidParameter(f"values must be positive, got {raw!r}")
    return values


def parse_lambda_grid(raw: str) -> LambdaGrid:
    """A lone integer is a point count for the default grid; anything else is a list of values."""
    tokens = [token.strip() for token in raw.split(",") if token.strip()]
    if not tokens:
        raise InvalidParameter("empty lambda grid")
    if len(tokens) == 1 and tokens[0].isdigit():
        count = int(tokens[0])
        if count < 1:
            raise InvalidParameter("a lambda grid needs at least one point")
        return count
    try:
        values = [float(token) for token in tokens]
    except ValueError:
        raise InvalidParameter(f"expected comma-separated numbers, got {raw!r}")
    if not all(math.isfinite(v) and v > 0 for v in values):
        raise InvalidParameter(f"lambda values must be positive, got {raw!r}")
    return values
