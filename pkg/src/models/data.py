"""Value types of the hierarchical graphical model."""

# Standard library imports
from typing import Annotated, Any, List, Tuple

# Third party imports
import numpy as np
from pydantic import Field, field_validator, model_validator
from scipy import linalg

from src.core.errors import NotPositiveDefinite
from src.models.core import CoreModel, frozen_array

STANDARDIZED_MEAN_TOL = 1e-10
STANDARDIZED_SD_TOL = 1e-8


class DataMatrix(CoreModel):
    """The observed n x p matrix; rows are observations, columns variables."""

    values: np.ndarray
    standardized: bool = False

    @field_validator("values", mode="before")
    @classmethod
    def as_matrix(cls, value: Any) -> np.ndarray:
        """Copy into a read-only float matrix."""
        return frozen_array(value, ndim=2)

    @model_validator(mode="after")
    def check_values(self) -> "DataMatrix":
        """Enforce shape, finiteness and the standardization contract."""
        n, p = self.values.shape
        if n < 2 or p < 1:
            raise ValueError(f"need n >= 2 and p >= 1, got {n} x {p}")
        if not np.all(np.isfinite(self.values)):
            raise ValueError("data matrix contains non-finite values")
        if self.standardized:
            means = self.values.mean(axis=0)
            sds = self.values.std(axis=0, ddof=1)
            if np.max(np.abs(means)) > STANDARDIZED_MEAN_TOL:
                raise ValueError("standardized columns must have mean 0")
            if np.max(np.abs(sds - 1.0)) > STANDARDIZED_SD_TOL:
                raise ValueError("standardized columns must have sd 1")
        return self

    @property
    def n(self) -> int:
        """Observation count."""
        return self.values.shape[0]

    @property
    def p(self) -> int:
        """Variable count."""
        return self.values.shape[1]


class GroupAssignment(CoreModel):
    """Partition of the p variables into K disjoint non-empty groups.

    Labels are 0-based; files and HTTP payloads present them 1-based.
    """

    labels: np.ndarray
    k: Annotated[int, Field(ge=1)]
    repairs: Annotated[int, Field(ge=0)] = 0

    @field_validator("labels", mode="before")
    @classmethod
    def as_labels(cls, value: Any) -> np.ndarray:
        """Copy into a read-only integer vector."""
        raw = np.asarray(value)
        if raw.size and raw.dtype.kind not in "iu":
            if not np.all(np.mod(raw, 1) == 0):
                raise ValueError("group labels must be integers")
        return frozen_array(raw, ndim=1, dtype=np.intp)

    @model_validator(mode="after")
    def check_partition(self) -> "GroupAssignment":
        """Every label in range and every group non-empty."""
        if self.labels.size == 0:
            raise ValueError("a group assignment needs at least one variable")
        if self.labels.min() < 0 or self.labels.max() >= self.k:
            raise ValueError(f"labels must lie in 0..{self.k - 1}")
        empty = np.flatnonzero(self.sizes == 0)
        if empty.size:
            raise ValueError(f"groups {empty.tolist()} are empty")
        return self

    @classmethod
    def from_one_based(cls, labels: Any, k: int = 0) -> "GroupAssignment":
        """Build from file-style labels in 1..K."""
        shifted = np.asarray(labels, dtype=np.intp) - 1
        return cls(labels=shifted, k=k or int(shifted.max()) + 1)

    @property
    def p(self) -> int:
        """Variable count."""
        return self.labels.shape[0]

    @property
    def sizes(self) -> np.ndarray:
        """|G_1|, ..., |G_K|, the diagonal of D_G."""
        return np.bincount(self.labels, minlength=self.k)

    def members(self, group: int) -> np.ndarray:
        """Variable indices of one group, ascending."""
        return np.flatnonzero(self.labels == group)

    def same_partition_as(self, other: "GroupAssignment") -> bool:
        """Label-for-label equality, the G clause of the convergence test."""
        return self.k == other.k and np.array_equal(self.labels, other.labels)

    def one_based(self) -> List[int]:
        """Labels as presented outside the library."""
        return (self.labels + 1).tolist()


class HiddenSignals(CoreModel):
    """n x K latent signals; group means Z-bar share this type."""

    values: np.ndarray

    @field_validator("values", mode="before")
    @classmethod
    def as_matrix(cls, value: Any) -> np.ndarray:
        """Copy into a read-only float matrix."""
        array = frozen_array(value, ndim=2)
        if not np.all(np.isfinite(array)):
            raise ValueError("hidden signals contain non-finite values")
        return array

    @property
    def n(self) -> int:
        """Observation count."""
        return self.values.shape[0]

    @property
    def k(self) -> int:
        """Group count."""
        return self.values.shape[1]


class NoiseVariances(CoreModel):
    """Per-group noise variances phi_k; ``floored`` records any flooring."""

    phi: np.ndarray
    floored: bool = False

    @field_validator("phi", mode="before")
    @classmethod
    def as_vector(cls, value: Any) -> np.ndarray:
        """Copy into a read-only vector of finite non-negative values."""
        array = frozen_array(value, ndim=1)
        if not np.all(np.isfinite(array)) or np.any(array < 0):
            raise ValueError("noise variances must be finite and non-negative")
        return array

    @property
    def k(self) -> int:
        """Group count."""
        return self.phi.shape[0]


class PrecisionMatrix(CoreModel):
    """K x K symmetric precision matrix of the latent layer.

    Symmetry is exact and checked on construction; positive definiteness is
    checked lazily by the operations that need a factorization.
    """

    omega: np.ndarray

    @field_validator("omega", mode="before")
    @classmethod
    def as_symmetric(cls, value: Any) -> np.ndarray:
        """Copy into a read-only, exactly symmetric, finite square matrix."""
        array = frozen_array(value, ndim=2)
        if array.shape[0] != array.shape[1]:
            raise ValueError(f"precision matrix must be square, got {array.shape}")
        if not np.all(np.isfinite(array)):
            raise ValueError("precision matrix contains non-finite values")
        if not np.array_equal(array, array.T):
            raise ValueError("precision matrix must be exactly symmetric")
        return array

    @property
    def k(self) -> int:
        """Node count."""
        return self.omega.shape[0]

    @property
    def support(self) -> np.ndarray:
        """Boolean nonzero mask."""
        return np.abs(self.omega) > 0

    @property
    def off_diagonal_nonzeros(self) -> int:
        """s: the number of nonzero off-diagonal entries (always even)."""
        return int(self.support.sum() - np.count_nonzero(np.diag(self.omega)))

    @property
    def l1_norm(self) -> float:
        """Sum of absolute entries, diagonal included."""
        return float(np.abs(self.omega).sum())

    def cholesky(self) -> Tuple[np.ndarray, bool]:
        """Cholesky factor in scipy's ``cho_factor`` form."""
        try:
            return linalg.cho_factor(self.omega, lower=True)
        except linalg.LinAlgError as e:
            raise NotPositiveDefinite(f"precision matrix is not positive definite: {e}")

    def is_positive_definite(self) -> bool:
        """Whether the Cholesky factorization succeeds."""
        try:
            self.cholesky()
        except NotPositiveDefinite:
            return False
        return True

    def log_det(self) -> float:
        """log det Omega through the Cholesky factor."""
        factor, _ = self.cholesky()
        return float(2.0 * np.log(np.diag(factor)).sum())

    def covariance(self) -> np.ndarray:
        """Sigma = Omega^-1, symmetrized."""
        factor = self.cholesky()
        sigma = linalg.cho_solve(factor, np.eye(self.k))
        return (sigma + sigma.T) / 2.0

    def edges(self) -> List[Tuple[int, int, float]]:
        """Upper-triangle nonzeros (i <= j), 0-based, row-major order."""
        rows, cols = np.nonzero(np.triu(self.support))
        return [(int(i), int(j), float(self.omega[i, j])) for i, j in zip(rows, cols)]


class HgmState(CoreModel):
    """The parameter tuple (Z, G, Omega, Phi) plus objective and iteration metadata."""

    z: HiddenSignals
    g: GroupAssignment
    omega: PrecisionMatrix
    phi: NoiseVariances
    lam: Annotated[float, Field(ge=0)]
    objective: float
    neg_log_lik: float
    iterations: Annotated[int, Field(ge=0)] = 0
    converged: bool = False
