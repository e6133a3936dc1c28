"""Likelihood, objective and closed-form conditional updates of the HGM."""

# Standard library imports
import logging
import math
from typing import Tuple

# Third party imports
import numpy as np
from scipy import linalg, sparse

from src.core.config import PHI_FLOOR
from src.core.errors import (
    ConstantColumn,
    DimensionMismatch,
    InvalidParameter,
    SingularSystem,
)
from src.models.data import (
    DataMatrix,
    GroupAssignment,
    HgmState,
    HiddenSignals,
    NoiseVariances,
    PrecisionMatrix,
)

log = logging.getLogger(__name__)

LOG_2PI = math.log(2.0 * math.pi)


def standardize(x: DataMatrix) -> DataMatrix:
    """Center every column and scale it to unit sample sd (denominator n - 1)."""
    values = x.values
    spread = np.ptp(values, axis=0)
    constant = np.flatnonzero(spread == 0)
    if constant.size:
        raise ConstantColumn(int(constant[0]))
    # second centering pass: a large column offset leaves rounding residue in the first
    centered = values - values.mean(axis=0)
    centered -= centered.mean(axis=0)
    scaled = centered / centered.std(axis=0, ddof=1)
    return DataMatrix(values=scaled - scaled.mean(axis=0), standardized=True)


def _check_groups(x: DataMatrix, g: GroupAssignment) -> None:
    if g.p != x.p:
        raise DimensionMismatch(f"{g.p} labels for {x.p} variables")


def _check_signals(x: DataMatrix, z: HiddenSignals, g: GroupAssignment) -> None:
    _check_groups(x, g)
    if z.n != x.n or z.k != g.k:
        raise DimensionMismatch(
            f"signals are {z.n} x {z.k}, expected {x.n} x {g.k}"
        )


def membership(g: GroupAssignment) -> sparse.csr_matrix:
    """p x K indicator matrix of the partition."""
    ones = np.ones(g.p)
    return sparse.csr_matrix((ones, (np.arange(g.p), g.labels)), shape=(g.p, g.k))


def group_means(x: DataMatrix, g: GroupAssignment) -> HiddenSignals:
    """Z-bar: the arithmetic mean of the columns of each group."""
    _check_groups(x, g)
    sums = np.asarray(membership(g).T @ x.values.T).T
    return HiddenSignals(values=sums / g.sizes)


def group_residuals(x: DataMatrix, z: HiddenSignals, g: GroupAssignment) -> np.ndarray:
    """Per-group sum over members of ||X_j - Z_k||^2."""
    _check_signals(x, z, g)
    residual = x.values - z.values[:, g.labels]
    column_ss = np.einsum("ij,ij->j", residual, residual)
    return np.bincount(g.labels, weights=column_ss, minlength=g.k)


def penalized_likelihood(
    x: DataMatrix,
    z: HiddenSignals,
    g: GroupAssignment,
    omega: PrecisionMatrix,
    phi: NoiseVariances,
    lam: float,
) -> Tuple[float, float]:
    """Negative log-likelihood and penalized objective for explicit parameters."""
    if omega.k != g.k or phi.k != g.k:
        raise DimensionMismatch(f"omega is {omega.k} x {omega.k}, phi has {phi.k}, K = {g.k}")
    if np.any(phi.phi <= 0):
        raise InvalidParameter("noise variances must be strictly positive")
    n = x.n
    sizes = g.sizes
    fit = group_residuals(x, z, g) / (n * phi.phi) + sizes * np.log(phi.phi)
    quadratic = np.einsum("ij,ij->", z.values @ omega.omega, z.values) / n
    neg_log_lik = float(fit.sum() + quadratic - omega.log_det() + g.k * LOG_2PI)
    return neg_log_lik, neg_log_lik + lam * omega.l1_norm


def neg_log_likelihood(x: DataMatrix, s: HgmState, lam: float) -> Tuple[float, float]:
    """Return (L, L + lam * ||Omega||_1) for a state.

    L is the negative log-likelihood in the displayed form, ignoring constants
    and scaling factors; the l1 norm includes the diagonal.
    """
    return penalized_likelihood(x, s.z, s.g, s.omega, s.phi, lam)


def update_z(
    z_bar: HiddenSignals,
    g: GroupAssignment,
    omega: PrecisionMatrix,
    phi: NoiseVariances,
) -> HiddenSignals:
    """Conditional minimizer Z* = Z-bar D_G [D_G + Omega Phi]^-1.

    Solved as (D_G + Omega Phi)^T Z*^T = (Z-bar D_G)^T with a dense LU factorization.
    """
    if z_bar.k != g.k or omega.k != g.k or phi.k != g.k:
        raise DimensionMismatch("Z-bar, groups, omega and phi disagree on K")
    sizes = g.sizes.astype(float)
    system = np.diag(sizes) + omega.omega * phi.phi
    try:
        lu, piv = linalg.lu_factor(system.T, check_finite=True)
    except (linalg.LinAlgError, ValueError) as e:
        raise SingularSystem(f"cannot factor D_G + Omega Phi: {e}")
    if np.any(np.diag(lu) == 0):
        raise SingularSystem("D_G + Omega Phi is singular")
    rhs = (z_bar.values * sizes).T
    z_star = linalg.lu_solve((lu, piv), rhs).T
    if not np.all(np.isfinite(z_star)):
        raise SingularSystem("Z update produced non-finite values")
    return HiddenSignals(values=z_star)


def update_phi(
    x: DataMatrix,
    z: HiddenSignals,
    g: GroupAssignment,
    *,
    floor: float = PHI_FLOOR,
) -> NoiseVariances:
    """Conditional minimizer phi_k* = sum_j ||Z_k - X_j||^2 / (n |G_k|), floored."""
    raw = group_residuals(x, z, g) / (x.n * g.sizes)
    floored = bool(np.any(raw < floor))
    if floored:
        log.warning(
            "Flooring %d noise variance(s) at %g", int(np.sum(raw < floor)), floor
        )
    return NoiseVariances(phi=np.maximum(raw, floor), floored=floored)


def lz_objective(
    x: DataMatrix,
    z: HiddenSignals,
    g: GroupAssignment,
    omega: PrecisionMatrix,
    phi: NoiseVariances,
) -> float:
    """L_Z: the Z-dependent part of the penalized objective."""
    fit = group_residuals(x, z, g) / (x.n * phi.phi)
    quadratic = np.einsum("ij,ij->", z.values @ omega.omega, z.values) / x.n
    return float(fit.sum() + quadratic)


def lphi_objective(
    x: DataMatrix, z: HiddenSignals, g: GroupAssignment, phi: NoiseVariances
) -> float:
    """L_{Phi^-1}: the Phi-dependent part of the objective, parameterized through phi_k^-1."""
    precision = 1.0 / phi.phi
    terms = precision * group_residuals(x, z, g) / x.n - g.sizes * np.log(precision)
    return float(terms.sum())


def grad_lz(
    x: DataMatrix,
    z: HiddenSignals,
    g: GroupAssignment,
    omega: PrecisionMatrix,
    phi: NoiseVariances,
) -> np.ndarray:
    """Exact gradient of L_Z: (2/n)(Z D_G Phi^-1 + Z Omega - Z-bar D_G Phi^-1)."""
    _check_signals(x, z, g)
    if np.any(phi.phi <= 0):
        raise InvalidParameter("noise variances must be strictly positive")
    weights = g.sizes / phi.phi
    z_bar = group_means(x, g).values
    return 2.0 / x.n * ((z.values - z_bar) * weights + z.values @ omega.omega)
