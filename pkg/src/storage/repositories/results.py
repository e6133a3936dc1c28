"""Result files: groups, edge lists, vectors, tables and JSON documents.

Group labels and node indices are written 1-based.
"""

# Standard library imports
import csv
import json
import logging
from pathlib import Path
from typing import Any, Dict, Iterable, List, Mapping, Sequence, Union

# Third party imports
import numpy as np
from pydantic import BaseModel

from src.core.errors import ParseError
from src.models.data import GroupAssignment, PrecisionMatrix
from src.storage.repositories.base import BaseRepository

log = logging.getLogger(__name__)

Name = Union[str, Path]


def format_cell(value: Any) -> str:
    """Floats in shortest round-trip form, booleans lower-case."""
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    if isinstance(value, np.integer):
        return str(int(value))
    return str(value)


def dump_json(payload: Union[BaseModel, Mapping[str, Any]]) -> str:
    """Sorted keys, two-space indent, trailing newline."""
    if isinstance(payload, BaseModel):
        payload = payload.model_dump(mode="json")
    return json.dumps(payload, sort_keys=True, indent=2) + "\n"


class ResultRepository(BaseRepository):
    """Reads and writes the tabular artifacts of one run directory."""

    def write_table(
        self, name: Name, fieldnames: Sequence[str], rows: Iterable[Sequence[Any]]
    ) -> Path:
        """Csv with a header row."""
        path = self.path(name)
        with path.open("w", encoding="utf-8", newline="") as handle:
            writer = csv.writer(handle, lineterminator="\n")
            writer.writerow(fieldnames)
            for row in rows:
                writer.writerow([format_cell(v) for v in row])
        log.info("Wrote %s", path)
        return path

    def read_table(self, name: Name) -> List[Dict[str, str]]:
        """Rows of a headed csv as dicts of strings."""
        with self.path(name).open(encoding="utf-8", newline="") as handle:
            return list(csv.DictReader(handle))

    def write_json(self, name: Name, payload: Union[BaseModel, Mapping[str, Any]]) -> Path:
        """Deterministic JSON document."""
        path = self.path(name)
        path.write_text(dump_json(payload), encoding="utf-8")
        log.info("Wrote %s", path)
        return path

    def read_json(self, name: Name) -> Dict[str, Any]:
        """Parse a JSON document."""
        try:
            return json.loads(self.path(name).read_text(encoding="utf-8"))
        except json.JSONDecodeError as e:
            raise ParseError(f"invalid JSON in {name}: {e.msg}", location=e.lineno)

    def write_groups(self, name: Name, groups: GroupAssignment) -> Path:
        """``variable,group`` rows, one per variable."""
        rows = ((j + 1, label) for j, label in enumerate(groups.one_based()))
        return self.write_table(name, ("variable", "group"), rows)

    def read_groups(self, name: Name, k: int = 0) -> GroupAssignment:
        """Inverse of ``write_groups``; rows may come in any variable order."""
        table = self.read_table(name)
        if not table:
            raise ParseError(f"{name} has no rows", location=1)
        try:
            pairs = sorted((int(r["variable"]), int(r["group"])) for r in table)
        except (KeyError, TypeError, ValueError):
            raise ParseError(f"{name} needs integer variable and group columns", location=1)
        if [v for v, _ in pairs] != list(range(1, len(pairs) + 1)):
            raise ParseError(f"{name} must list variables 1..{len(pairs)} once each", location=1)
        try:
            return GroupAssignment.from_one_based([g for _, g in pairs], k=k)
        except ValueError as e:
            raise ParseError(f"{name}: {e}", location=1)

    def write_edges(self, name: Name, omega: PrecisionMatrix) -> Path:
        """``i,j,value`` rows for the upper-triangle nonzeros, diagonal included."""
        rows = ((i + 1, j + 1, value) for i, j, value in omega.edges())
        return self.write_table(name, ("i", "j", "value"), rows)

    def read_edges(self, name: Name, k: int) -> PrecisionMatrix:
        """Rebuild the symmetric K x K matrix from an edge list."""
        omega = np.zeros((k, k))
        for line, row in enumerate(self.read_table(name), start=2):
            try:
                i, j, value = int(row["i"]) - 1, int(row["j"]) - 1, float(row["value"])
            except (KeyError, TypeError, ValueError):
                raise ParseError(f"{name}: malformed edge", location=line)
            if not (0 <= i < k and 0 <= j < k):
                raise ParseError(f"{name}: node index outside 1..{k}", location=line)
            omega[i, j] = omega[j, i] = value
        return PrecisionMatrix(omega=omega)

    def write_vector(
        self, name: Name, fieldnames: Sequence[str], values: Iterable[Any], start: int = 1
    ) -> Path:
        """Two-column table of (1-based index, value)."""
        return self.write_table(name, fieldnames, enumerate(values, start=start))
