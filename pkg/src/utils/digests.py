"""File digests recorded in run manifests."""

# Standard library imports
import hashlib
from pathlib import Path
from typing import Union

CHUNK_SIZE = 1 << 20


def file_digest(path: Union[str, Path]) -> str:
    """Hex sha256 of a file's bytes."""
    digest = hashlib.sha256()
    with open(path, "rb") as handle:
        for chunk in iter(lambda: handle.read(CHUNK_SIZE), b""):
            digest.update(chunk)
    return digest.hexdigest()
