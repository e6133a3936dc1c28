"""Run manifest written next to every CLI artifact."""

# Standard library imports
from typing import Any, Dict, List

# Third party imports
from pydantic import Field

from src.models.core import CoreModel, DateTimeModelMixin


class RunManifest(CoreModel, DateTimeModelMixin):
    """Everything needed to reproduce a run.

    ``run_id`` depends only on the command, the resolved configuration and the
    input digests, so equal manifests identify byte-identical artifacts.
    ``timings`` and ``created_at`` vary between runs.
    """

    run_id: str
    command: str
    tool: str
    version: str
    config: Dict[str, Any]
    seeds: List[int] = []
    generator: str
    inputs: Dict[str, str] = {}
    timings: Dict[str, float] = Field(default_factory=dict)
