"""Functions associated with uuid"""

# Standard library imports
import json
import uuid
from typing import Any, Mapping

RUN_NAMESPACE = uuid.uuid5(uuid.NAMESPACE_URL, "hgm-network/run")


def generate_run_id(command: str, payload: Mapping[str, Any]) -> str:
    """Deterministic run id: uuid5 of the command and its canonical JSON payload."""
    canonical = json.dumps(payload, sort_keys=True, default=str)
    return str(uuid.uuid5(RUN_NAMESPACE, f"{command}:{canonical}"))
