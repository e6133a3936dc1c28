"""BIC and the two-stage grid search over lambda, then K."""

# Standard library imports
import logging
import math
from typing import List, Optional, Sequence, Tuple

# Third party imports
import numpy as np

from src.core.config import LAMBDA_GRID_RATIO, LAMBDA_GRID_SIZE
from src.core.errors import AllGridPointsFailed, HgmError, InvalidParameter
from src.models.data import DataMatrix, HgmState, PrecisionMatrix
from src.models.precision import GramMatrix
from src.models.selection import BicRecord, GridFailure
from src.models.solver import SolverConfig
from src.services.clustering import kmeans_init
from src.services.precision import default_lambda_grid
from src.services.solver import HgmSolver

log = logging.getLogger(__name__)

TIE_TOL = 1e-12


def bic(state: HgmState, x: DataMatrix, k: int) -> float:
    """L + (log p / n)(s/2 + p + K(n + 2) - 1), with L the stored negative log-likelihood."""
    s = state.omega.off_diagonal_nonzeros
    complexity = s / 2 + x.p + k * (x.n + 2) - 1
    return state.neg_log_lik + math.log(x.p) / x.n * complexity


def record_for(state: HgmState, x: DataMatrix, k: int, lam: float) -> BicRecord:
    """Summarize one fit as a BIC record."""
    return BicRecord(
        k=k,
        lam=lam,
        bic=bic(state, x, k),
        neg_log_lik=state.neg_log_lik,
        s=state.omega.off_diagonal_nonzeros,
        converged=state.converged,
    )


def _better(candidate: BicRecord, incumbent: Optional[BicRecord]) -> bool:
    if incumbent is None:
        return True
    slack = TIE_TOL * max(1.0, abs(incumbent.bic))
    return candidate.bic < incumbent.bic - slack


def initial_lambda_grid(
    x: DataMatrix,
    k: int,
    cfg: SolverConfig,
    count: int = LAMBDA_GRID_SIZE,
    ratio: float = LAMBDA_GRID_RATIO,
) -> np.ndarray:
    """Default grid anchored at lambda_max of the k-means initialization's Gram matrix."""
    start = kmeans_init(x, k, seed=cfg.seed)
    gram = GramMatrix(a=start.centers.T @ start.centers / x.n)
    return default_lambda_grid(gram, count, ratio)


def select_lambda(
    x: DataMatrix, k: int, grid: Sequence[float], cfg: SolverConfig
) -> Tuple[BicRecord, List[BicRecord], List[GridFailure]]:
    """Fit every lambda (largest first) and keep the smallest BIC.

    Each fit is warm-started from the previous grid point's precision matrix.
    Ties go to the larger lambda. A failing grid point is left out of the path
    and returned in the failure list; the next point then starts from the last
    successful precision matrix.
    """
    if len(grid) == 0 or any(not lam > 0 for lam in grid):
        raise InvalidParameter("lambda grid must be non-empty and positive")
    path: List[BicRecord] = []
    failures: List[GridFailure] = []
    best: Optional[BicRecord] = None
    warm_start: Optional[PrecisionMatrix] = None
    for lam in sorted(grid, reverse=True):
        solver = HgmSolver(cfg.model_copy(update={"k": k, "lam": float(lam)}))
        try:
            state, _ = solver.fit(x, warm_start=warm_start)
        except HgmError as e:
            log.warning("Grid point K=%d lambda=%g failed: %s", k, lam, e)
            failures.append(GridFailure(k=k, lam=float(lam), error=str(e)))
            continue
        warm_start = state.omega
        record = record_for(state, x, k, float(lam))
        log.info("K=%d lambda=%g: BIC %.10g (s = %d)", k, lam, record.bic, record.s)
        path.append(record)
        if _better(record, best):
            best = record
    if best is None:
        raise AllGridPointsFailed(f"every lambda failed for K = {k}", failures)
    return best, path, failures


def scan(
    x: DataMatrix,
    k_grid: Sequence[int],
    lambda_grid: Optional[Sequence[float]],
    cfg: SolverConfig,
    *,
    grid_size: int = LAMBDA_GRID_SIZE,
) -> Tuple[BicRecord, List[BicRecord], List[GridFailure]]:
    """Two-stage search; returns the selected record, every record fitted and every failed point.

    With ``lambda_grid`` None each K gets its default grid of ``grid_size`` points.
    """
    if len(k_grid) == 0:
        raise InvalidParameter("K grid must be non-empty")
    selected: Optional[BicRecord] = None
    path: List[BicRecord] = []
    failures: List[GridFailure] = []
    for k in sorted(k_grid):
        if lambda_grid is not None:
            grid = lambda_grid
        else:
            grid = initial_lambda_grid(x, k, cfg, count=grid_size)
        try:
            best, records, failed = select_lambda(x, k, list(grid), cfg)
        except AllGridPointsFailed as e:
            log.warning("%s", e)
            failures.extend(e.failures)
            continue
        path.extend(records)
        failures.extend(failed)
        if _better(best, selected):
            selected = best
    if selected is None:
        raise AllGridPointsFailed("every (K, lambda) pair failed", failures)
    if failures:
        log.warning("%d grid point(s) failed and are missing from the path", len(failures))
    return selected, path, failures


def select_k(
    x: DataMatrix,
    k_grid: Sequence[int],
    lambda_grid: Optional[Sequence[float]],
    cfg: SolverConfig,
) -> BicRecord:
    """The K whose best lambda has the smallest BIC; ties go to the smaller K."""
    selected, _, _ = scan(x, k_grid, lambda_grid, cfg)
    return selected
