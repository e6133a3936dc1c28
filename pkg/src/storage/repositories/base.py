"""Base Repository."""

# Standard library imports
from pathlib import Path
from typing import Union


class BaseRepository:
    """Base class: a directory that artifacts are read from and written to."""

    def __init__(self, root: Union[str, Path]) -> None:
        """Initialize. root (Path): directory the relative names resolve against"""
        self.root = Path(root)

    def path(self, name: Union[str, Path]) -> Path:
        """Resolve a file name; absolute names are returned unchanged."""
        return self.root / name

    def ensure(self) -> None:
        """Create the root directory if needed."""
        self.root.mkdir(parents=True, exist_ok=True)
