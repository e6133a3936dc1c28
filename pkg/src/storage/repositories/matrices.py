"""Dense matrix files: decimal csv and the little-endian binary layout.

The binary layout is the 8-byte magic ``HGMMAT01``, two little-endian
unsigned 64-bit dimensions (n, p), then n * p little-endian float64 values
in row-major order.
"""

# Standard library imports
import csv
import io
import logging
from enum import Enum
from pathlib import Path
from typing import List, Union

# Third party imports
import numpy as np

from src.core.config import MATRIX_MAGIC
from src.core.errors import NonFinite, NonRectangular, ParseError
from src.models.data import DataMatrix
from src.storage.repositories.base import BaseRepository

log = logging.getLogger(__name__)

HEADER_SIZE = len(MATRIX_MAGIC) + 16


class MatrixFormat(str, Enum):
    """On-disk matrix encodings."""

    CSV = "csv"
    BIN = "bin"


def _is_number(field: str) -> bool:
    try:
        float(field)
    except ValueError:
        return False
    return True


def parse_csv(text: str) -> np.ndarray:
    """Parse csv text into a float matrix; a non-numeric first row is a header.

    Blank lines are skipped. Locations in errors are 1-based file lines.
    """
    rows: List[List[float]] = []
    width = 0
    reader = csv.reader(io.StringIO(text))
    for fields in reader:
        line = reader.line_num
        if not fields or all(not f.strip() for f in fields):
            continue
        if not rows and not width and not all(_is_number(f) for f in fields):
            width = len(fields)
            continue
        if width and len(fields) != width:
            raise NonRectangular(line, width, len(fields))
        width = len(fields)
        try:
            values = [float(f) for f in fields]
        except ValueError:
            raise ParseError("non-numeric field", location=line)
        for column, value in enumerate(values, start=1):
            if not np.isfinite(value):
                raise NonFinite(line, column)
        rows.append(values)
    if not rows:
        raise ParseError("no data rows", location=reader.line_num)
    return np.array(rows, dtype=float)


def format_csv(values: np.ndarray) -> str:
    """Header-less csv with shortest round-trip float formatting."""
    lines = [",".join(repr(float(v)) for v in row) for row in np.atleast_2d(values)]
    return "\n".join(lines) + "\n"


def parse_bin(data: bytes) -> np.ndarray:
    """Decode the binary layout."""
    if len(data) < HEADER_SIZE:
        raise ParseError("truncated header", location=len(data))
    if data[: len(MATRIX_MAGIC)] != MATRIX_MAGIC:
        raise ParseError("bad magic", location=0)
    n, p = (int(d) for d in np.frombuffer(data, dtype="<u8", count=2, offset=len(MATRIX_MAGIC)))
    expected = HEADER_SIZE + 8 * n * p
    if len(data) != expected:
        raise ParseError(f"expected {expected} bytes for a {n} x {p} matrix", location=len(data))
    values = np.frombuffer(data, dtype="<f8", offset=HEADER_SIZE).reshape(n, p).astype(float)
    bad = np.argwhere(~np.isfinite(values))
    if bad.size:
        row, column = bad[0]
        raise NonFinite(int(row) + 1, int(column) + 1)
    return values


def format_bin(values: np.ndarray) -> bytes:
    """Encode a matrix in the binary layout."""
    values = np.atleast_2d(np.asarray(values, dtype=float))
    dims = np.array(values.shape, dtype="<u8").tobytes()
    return MATRIX_MAGIC + dims + np.ascontiguousarray(values, dtype="<f8").tobytes()


def read_matrix(path: Union[str, Path], fmt: MatrixFormat = MatrixFormat.CSV) -> np.ndarray:
    """Read any matrix file as a float array."""
    path = Path(path)
    if MatrixFormat(fmt) is MatrixFormat.BIN:
        return parse_bin(path.read_bytes())
    return parse_csv(path.read_text(encoding="utf-8"))


def write_matrix(
    path: Union[str, Path], values: np.ndarray, fmt: MatrixFormat = MatrixFormat.CSV
) -> None:
    """Write a float array in the requested format."""
    path = Path(path)
    if MatrixFormat(fmt) is MatrixFormat.BIN:
        path.write_bytes(format_bin(values))
    else:
        path.write_text(format_csv(values), encoding="utf-8")
    log.info("Wrote %s", path)


def load_matrix(path: Union[str, Path], fmt: MatrixFormat = MatrixFormat.CSV) -> DataMatrix:
    """Read an n x p data matrix (rows observations, columns variables)."""
    return _as_data(read_matrix(path, fmt), str(path))


def load_csv_text(text: str) -> DataMatrix:
    """``load_matrix`` for csv content already in memory."""
    return _as_data(parse_csv(text), "upload")


def _as_data(values: np.ndarray, source: str) -> DataMatrix:
    try:
        return DataMatrix(values=values)
    except ValueError as e:
        raise ParseError(f"{source} is not a data matrix: {e}")


def save_matrix(
    path: Union[str, Path], matrix: DataMatrix, fmt: MatrixFormat = MatrixFormat.CSV
) -> None:
    """Inverse of ``load_matrix``."""
    write_matrix(path, matrix.values, fmt)


class MatrixRepository(BaseRepository):
    """Matrix files under one directory."""

    def load(self, name: Union[str, Path], fmt: MatrixFormat = MatrixFormat.CSV) -> DataMatrix:
        """Load a data matrix."""
        return load_matrix(self.path(name), fmt)

    def save(
        self, name: Union[str, Path], values: np.ndarray, fmt: MatrixFormat = MatrixFormat.CSV
    ) -> Path:
        """Write a raw matrix and return its path."""
        path = self.path(name)
        write_matrix(path, values, fmt)
        return path
