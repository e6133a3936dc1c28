"""Sparse precision-matrix estimation for the latent layer.

Both estimators penalize the diagonal, following the l1 norm of the objective
(sum over all entries). Results therefore differ from implementations that
only penalize off-diagonal entries.
"""

# Standard library imports
import logging
from typing import Optional, Tuple

# Third party imports
import numpy as np
from scipy import linalg

from src.core.config import (
    LAMBDA_GRID_RATIO,
    LAMBDA_GRID_SIZE,
    PRECISION_MAX_ITER,
    PRECISION_TOL,
    REFIT_EPSILON,
)
from src.core.errors import (
    InvalidParameter,
    MaxIterExceeded,
    NotPositiveDefinite,
    ZeroDiagonal,
)
from src.models.data import PrecisionMatrix
from src.models.precision import GramMatrix, SolverReport

log = logging.getLogger(__name__)

INNER_TOL_RATIO = 1e-3
INNER_MAX_SWEEPS = 1000
WARM_START_SHRINK = 0.95


def soft_threshold(x: np.ndarray, t: float) -> np.ndarray:
    """S(x, t) = sign(x) max(|x| - t, 0)."""
    return np.sign(x) * np.maximum(np.abs(x) - t, 0.0)


def _check_lambda(lam: float) -> None:
    if not lam > 0:
        raise InvalidParameter(f"lambda must be positive, got {lam}")


def glasso_objective(a: GramMatrix, omega: PrecisionMatrix, lam: float) -> float:
    """L_Omega = tr(A Omega) - log det Omega + lam ||Omega||_1."""
    return float(np.sum(a.a * omega.omega) - omega.log_det() + lam * omega.l1_norm)


def kkt_residual(a: GramMatrix, omega: PrecisionMatrix, lam: float) -> float:
    """Largest violation of the glasso stationarity condition.

    At nonzeros the residual is |A - Omega^-1 + lam sign(Omega)|; at zeros it
    is the excess of |A - Omega^-1| over lam.
    """
    gradient = a.a - omega.covariance()
    active = omega.support
    violation = np.where(
        active,
        np.abs(gradient + lam * np.sign(omega.omega)),
        np.maximum(np.abs(gradient) - lam, 0.0),
    )
    return float(violation.max(initial=0.0))


def _lasso_cd(
    w11: np.ndarray, s12: np.ndarray, lam: float, beta: np.ndarray, tol: float
) -> np.ndarray:
    """Coordinate descent on 1/2 b^T W11 b - b^T s12 + lam ||b||_1."""
    fitted = w11 @ beta
    for _ in range(INNER_MAX_SWEEPS):
        largest = 0.0
        for j in range(beta.shape[0]):
            old = beta[j]
            curvature = w11[j, j]
            new = soft_threshold(s12[j] - fitted[j] + curvature * old, lam) / curvature
            if new != old:
                delta = new - old
                fitted += delta * w11[:, j]
                beta[j] = new
                largest = max(largest, abs(delta) * curvature)
        if largest < tol:
            break
    return beta


def _initial_covariance(
    s: np.ndarray, lam: float, warm_start: Optional[PrecisionMatrix]
) -> np.ndarray:
    cold = s + lam * np.eye(s.shape[0])
    if warm_start is None or warm_start.k != s.shape[0]:
        return cold
    try:
        covariance = WARM_START_SHRINK * warm_start.covariance()
    except NotPositiveDefinite:
        return cold
    np.fill_diagonal(covariance, np.diag(s) + lam)
    try:
        linalg.cholesky(covariance, lower=True)
    except linalg.LinAlgError:
        log.debug("Warm start is not positive definite; starting cold")
        return cold
    return covariance


def _precision_from_blocks(w: np.ndarray, beta: np.ndarray) -> np.ndarray:
    k = w.shape[0]
    omega = np.zeros((k, k))
    for j in range(k):
        others = np.arange(k) != j
        omega[j, j] = 1.0 / (w[j, j] - w[others, j] @ beta[others, j])
        omega[others, j] = -beta[others, j] * omega[j, j]
    return (omega + omega.T) / 2.0


def _dual_value(w: np.ndarray) -> float:
    try:
        factor = linalg.cholesky(w, lower=True)
    except linalg.LinAlgError:
        return float("-inf")
    return float(2.0 * np.log(np.diag(factor)).sum() + w.shape[0])


def glasso(
    a: GramMatrix,
    lam: float,
    *,
    tol: float = PRECISION_TOL,
    max_iter: int = PRECISION_MAX_ITER,
    warm_start: Optional[PrecisionMatrix] = None,
) -> Tuple[PrecisionMatrix, SolverReport]:
    """Minimize tr(A Omega) - log det Omega + lam ||Omega||_1 by block coordinate descent.

    Each sweep solves, for every column, the lasso subproblem on the working
    covariance W (whose diagonal is pinned at A_ii + lam). The sweep loop stops
    once the KKT residual of the implied precision matrix is at most ``tol``.
    """
    _check_lambda(lam)
    s = a.a
    k = a.k
    w = _initial_covariance(s, lam, warm_start)
    beta = np.zeros((k, k))
    if warm_start is not None and warm_start.k == k:
        # column j of Omega is -beta_j * omega_jj
        diagonal = np.diag(warm_start.omega)
        safe = np.where(diagonal > 0, diagonal, 1.0)
        beta = np.where(diagonal > 0, -warm_start.omega / safe, 0.0)
        np.fill_diagonal(beta, 0.0)
    inner_tol = tol * INNER_TOL_RATIO
    dual_path = []
    best: Optional[Tuple[float, PrecisionMatrix, int]] = None

    for sweep in range(1, max_iter + 1):
        for j in range(k):
            others = np.arange(k) != j
            w11 = w[np.ix_(others, others)]
            coefficients = _lasso_cd(w11, s[others, j], lam, beta[others, j].copy(), inner_tol)
            beta[others, j] = coefficients
            w12 = w11 @ coefficients
            w[others, j] = w12
            w[j, others] = w12
        dual_path.append(_dual_value(w))

        omega = PrecisionMatrix(omega=_precision_from_blocks(w, beta))
        try:
            residual = kkt_residual(a, omega, lam)
        except NotPositiveDefinite:
            residual = float("inf")
        log.debug("glasso sweep %d: kkt residual %.3e", sweep, residual)
        if best is None or residual < best[0]:
            best = (residual, omega, sweep)
        if residual <= tol:
            return omega, _glasso_report(a, omega, lam, sweep, residual, dual_path)

    residual, omega, sweep = best  # type: ignore[misc]
    report = _glasso_report(a, omega, lam, max_iter, residual, dual_path)
    raise MaxIterExceeded(
        f"glasso did not reach tol {tol:g} in {max_iter} sweeps (residual {residual:.3e})",
        estimate=omega,
        report=report,
    )


def _glasso_report(
    a: GramMatrix,
    omega: PrecisionMatrix,
    lam: float,
    sweeps: int,
    residual: float,
    dual_path: list,
) -> SolverReport:
    try:
        gap = glasso_objective(a, omega, lam) - dual_path[-1]
    except NotPositiveDefinite:
        gap = float("inf")
    return SolverReport(
        iterations=sweeps,
        kkt_residual=residual,
        duality_or_objective_gap=gap,
        dual_path=dual_path,
    )


def _scio_residual(s: np.ndarray, beta: np.ndarray, lam: float) -> np.ndarray:
    """Per-column KKT violation of 1/2 b^T A b - b_i + lam ||b||_1."""
    gradient = s @ beta - np.eye(s.shape[0])
    violation = np.where(
        beta != 0,
        np.abs(gradient + lam * np.sign(beta)),
        np.maximum(np.abs(gradient) - lam, 0.0),
    )
    return violation.max(axis=0, initial=0.0)


def scio_objective(a: GramMatrix, beta: np.ndarray, column: int, lam: float) -> float:
    """Column objective 1/2 b^T A b - b_i + lam ||b||_1."""
    return float(0.5 * beta @ a.a @ beta - beta[column] + lam * np.abs(beta).sum())


def scio(
    a: GramMatrix,
    lam: float,
    *,
    tol: float = PRECISION_TOL,
    max_iter: int = PRECISION_MAX_ITER,
) -> Tuple[np.ndarray, SolverReport]:
    """Column-wise sparse inverse by coordinate descent; the result is generally asymmetric.

    Column i minimizes 1/2 b^T A b - b_i + lam ||b||_1. All K columns are swept
    together, coordinate by coordinate in index order; each column only reads
    its own coefficients, so the result equals solving the columns one by one.
    """
    _check_lambda(lam)
    s = a.a
    k = a.k
    zero = np.flatnonzero(np.diag(s) <= 0)
    if zero.size:
        raise ZeroDiagonal(int(zero[0]))
    target = np.eye(k)
    beta = np.zeros((k, k))
    residual = np.full(k, np.inf)

    for sweep in range(1, max_iter + 1):
        for j in range(k):
            partial = target[j] - s[j] @ beta + s[j, j] * beta[j]
            beta[j] = soft_threshold(partial, lam) / s[j, j]
        residual = _scio_residual(s, beta, lam)
        worst = float(residual.max(initial=0.0))
        log.debug("scio sweep %d: kkt residual %.3e", sweep, worst)
        if worst <= tol:
            return beta, SolverReport(iterations=sweep, kkt_residual=worst)

    worst = float(residual.max(initial=0.0))
    raise MaxIterExceeded(
        f"scio did not reach tol {tol:g} in {max_iter} sweeps (residual {worst:.3e})",
        estimate=beta,
        report=SolverReport(iterations=max_iter, kkt_residual=worst),
    )


def symmetrize_and_refit(raw: np.ndarray) -> Tuple[PrecisionMatrix, SolverReport]:
    """Keep the smaller-magnitude entry of each (i, j)/(j, i) pair, then ridge to PD.

    Ties take the average. If the smallest eigenvalue is not positive,
    (|sigma_min| + 1e-6) I is added, which leaves the off-diagonal support intact.
    """
    raw = np.asarray(raw, dtype=float)
    if raw.ndim != 2 or raw.shape[0] != raw.shape[1] or not np.all(np.isfinite(raw)):
        raise InvalidParameter("raw estimate must be a finite square matrix")
    magnitude = np.abs(raw)
    symmetric = np.where(magnitude < magnitude.T, raw, raw.T)
    ties = magnitude == magnitude.T
    symmetric = np.where(ties, (raw + raw.T) / 2.0, symmetric)

    smallest = float(linalg.eigvalsh(symmetric)[0]) if symmetric.size else 1.0
    ridge = 0.0
    if smallest <= 0:
        ridge = abs(smallest) + REFIT_EPSILON
        symmetric = symmetric + ridge * np.eye(symmetric.shape[0])
        log.debug("Refit added ridge %.3e", ridge)
    report = SolverReport(refit_applied=ridge > 0, ridge_added=ridge)
    return PrecisionMatrix(omega=symmetric), report


def lambda_max(a: GramMatrix) -> float:
    """Smallest lambda at which glasso returns a diagonal precision matrix."""
    if a.k < 2:
        return float(a.a[0, 0]) or 1.0
    off_diagonal = np.abs(a.a[~np.eye(a.k, dtype=bool)])
    return float(off_diagonal.max()) or float(np.diag(a.a).max()) or 1.0


def default_lambda_grid(
    a: GramMatrix, count: int = LAMBDA_GRID_SIZE, ratio: float = LAMBDA_GRID_RATIO
) -> np.ndarray:
    """``count`` log-spaced values from lambda_max down to ratio * lambda_max."""
    if count < 1:
        raise InvalidParameter("a lambda grid needs at least one point")
    top = lambda_max(a)
    return np.geomspace(top, top * ratio, count)
