"""Models returned by the fit and scan front ends."""

# Standard library imports
from typing import List

from src.models.core import CoreModel
from src.models.data import HgmState
from src.models.selection import BicRecord, GridFailure
from src.models.solver import Estimator


class Edge(CoreModel):
    """One upper-triangle nonzero of Omega, 1-based."""

    i: int
    j: int
    value: float


class FitSummary(CoreModel):
    """Scalars describing one fit."""

    k: int
    lam: float
    estimator: Estimator
    n: int
    p: int
    objective: float
    neg_log_lik: float
    iterations: int
    converged: bool
    restarts: int
    seed: int


class FitResponse(CoreModel):
    """Fit result with 1-based group labels."""

    summary: FitSummary
    groups: List[int]
    phi: List[float]
    edges: List[Edge]

    @classmethod
    def from_state(cls, state: HgmState, summary: FitSummary) -> "FitResponse":
        """Flatten a fitted state for serialization."""
        return cls(
            summary=summary,
            groups=state.g.one_based(),
            phi=state.phi.phi.tolist(),
            edges=[Edge(i=i + 1, j=j + 1, value=v) for i, j, v in state.omega.edges()],
        )


class ScanResponse(CoreModel):
    """BIC path of a (K, lambda) scan, the selected record and the failed points."""

    selected: BicRecord
    path: List[BicRecord]
    failures: List[GridFailure] = []
