"""Alternating update algorithm for the HGM parameters."""

# Standard library imports
import logging
from concurrent.futures import ThreadPoolExecutor
from functools import partial
from typing import List, Optional, Tuple, Union

# Third party imports
import numpy as np

from src.core.config import OSCILLATION_PATIENCE
from src.core.errors import (
    AllRestartsFailed,
    HgmError,
    InvalidParameter,
    MaxIterExceeded,
)
from src.models.data import (
    DataMatrix,
    GroupAssignment,
    HgmState,
    HiddenSignals,
    NoiseVariances,
    PrecisionMatrix,
)
from src.models.precision import GramMatrix, SolverReport
from src.models.solver import Estimator, FitTrace, IterationRecord, SolverConfig
from src.services.clustering import kmeans_init, reassign_groups
from src.services.model import (
    group_means,
    penalized_likelihood,
    update_phi,
    update_z,
)
from src.services.precision import glasso, scio, symmetrize_and_refit

log = logging.getLogger(__name__)

Outcome = Union[Tuple[HgmState, FitTrace], HgmError]


def relative_change(z_prev: HiddenSignals, z_curr: HiddenSignals) -> float:
    """||Z_prev - Z_curr||_F / max(1, ||Z_prev||_F)."""
    numerator = np.linalg.norm(z_prev.values - z_curr.values)
    return float(numerator / max(1.0, np.linalg.norm(z_prev.values)))


def converged(
    z_prev: HiddenSignals,
    z_curr: HiddenSignals,
    g_prev: GroupAssignment,
    g_curr: GroupAssignment,
    e_tol: float,
) -> bool:
    """Stopping rule: small relative change of Z and unchanged groups."""
    return relative_change(z_prev, z_curr) < e_tol and g_curr.same_partition_as(g_prev)


class HgmSolver:
    """Fit (Z, G, Omega, Phi) by alternating conditional minimization."""

    def __init__(self, config: SolverConfig) -> None:
        """Keep the run configuration."""
        self.config = config

    def estimate_precision(
        self, z: HiddenSignals, *, warm_start: Optional[PrecisionMatrix] = None
    ) -> Tuple[PrecisionMatrix, SolverReport]:
        """Sparse precision matrix of the latent layer."""
        cfg = self.config
        gram = GramMatrix.from_signals(z)
        try:
            if cfg.estimator is Estimator.GLASSO:
                return glasso(
                    gram,
                    cfg.lam,
                    tol=cfg.precision_tol,
                    max_iter=cfg.precision_max_iter,
                    warm_start=warm_start,
                )
            raw, report = scio(
                gram, cfg.lam, tol=cfg.precision_tol, max_iter=cfg.precision_max_iter
            )
        except MaxIterExceeded as e:
            log.warning("%s; keeping the best iterate", e)
            if cfg.estimator is Estimator.GLASSO:
                return e.estimate, e.report
            raw, report = e.estimate, e.report
        omega, refit = symmetrize_and_refit(raw)
        return omega, report.model_copy(
            update={"refit_applied": refit.refit_applied, "ridge_added": refit.ridge_added}
        )

    def _objective(
        self,
        x: DataMatrix,
        z: HiddenSignals,
        g: GroupAssignment,
        omega: PrecisionMatrix,
        phi: NoiseVariances,
    ) -> Tuple[float, float]:
        return penalized_likelihood(x, z, g, omega, phi, self.config.lam)

    def fit_once(
        self,
        x: DataMatrix,
        *,
        restart_seed: int,
        initial_groups: Optional[GroupAssignment] = None,
        warm_start: Optional[PrecisionMatrix] = None,
    ) -> Tuple[HgmState, FitTrace]:
        """One run of the alternating algorithm from one initialization.

        Without ``initial_groups`` the start is Hartigan k-means seeded by
        ``restart_seed``; with them, Z starts at the group means. Phi is
        initialized before Omega because the Omega step consumes the new Phi.
        """
        cfg = self.config
        if not x.standardized:
            log.debug("Fitting unstandardized data")
        if initial_groups is not None:
            if initial_groups.k != cfg.k or initial_groups.p != x.p:
                raise InvalidParameter(
                    f"initial groups cover {initial_groups.p} variables in {initial_groups.k} "
                    f"groups, expected {x.p} in {cfg.k}"
                )
            g = initial_groups
            z = group_means(x, g)
        else:
            start = kmeans_init(x, cfg.k, seed=restart_seed)
            g = start.labels
            z = HiddenSignals(values=start.centers)
        phi = update_phi(x, z, g)
        omega, _ = self.estimate_precision(z, warm_start=warm_start)
        neg_log_lik, objective = self._objective(x, z, g, omega, phi)

        state = HgmState(
            z=z, g=g, omega=omega, phi=phi, lam=cfg.lam,
            objective=objective, neg_log_lik=neg_log_lik,
        )
        records = [IterationRecord(iteration=0, objective=objective, neg_log_lik=neg_log_lik)]
        best, previous = state, state
        history = [g]
        oscillations = 0
        stop_reason = "max_iter"

        for t in range(1, cfg.max_iter + 1):
            z_new = update_z(group_means(x, g), g, omega, phi)
            after_z = self._objective(x, z_new, g, omega, phi)[1]
            phi = update_phi(x, z_new, g)
            after_phi = self._objective(x, z_new, g, omega, phi)[1]
            candidate, _ = self.estimate_precision(z_new, warm_start=omega)
            after_omega = self._objective(x, z_new, g, candidate, phi)[1]
            rejected = cfg.estimator is Estimator.GLASSO and after_omega > after_phi
            if rejected:
                log.warning(
                    "Iteration %d: glasso update rejected (%.12g > %.12g)",
                    t, after_omega, after_phi,
                )
                after_omega = after_phi
            else:
                omega = candidate

            if cfg.update_groups:
                g_new = reassign_groups(x, z_new, metric=cfg.reassign_metric, phi=phi)
            else:
                g_new = g
            neg_log_lik, objective = self._objective(x, z_new, g_new, omega, phi)
            records.append(
                IterationRecord(
                    iteration=t,
                    objective=objective,
                    neg_log_lik=neg_log_lik,
                    groups_changed=int(np.count_nonzero(g_new.labels != g.labels)),
                    z_delta=relative_change(z, z_new),
                    step_objectives=(after_z, after_phi, after_omega),
                    omega_rejected=rejected,
                )
            )
            log.debug(
                "Iteration %d: objective %.10g, %d group change(s)",
                t, objective, records[-1].groups_changed,
            )
            state = HgmState(
                z=z_new, g=g_new, omega=omega, phi=phi, lam=cfg.lam,
                objective=objective, neg_log_lik=neg_log_lik, iterations=t,
            )
            if converged(z, z_new, g, g_new, cfg.e_tol):
                state = state.model_copy(update={"converged": True})
                stop_reason = "converged"
                break

            history.append(g_new)
            cycling = (
                len(history) >= 3
                and g_new.same_partition_as(history[-3])
                and not g_new.same_partition_as(history[-2])
            )
            oscillations = oscillations + 1 if cycling else 0
            if oscillations >= OSCILLATION_PATIENCE:
                log.warning("Group assignment oscillates; stopping after %d iterations", t)
                state = min((previous, state), key=lambda s: s.objective)
                stop_reason = "oscillation"
                break

            if objective < best.objective:
                best = state
            previous = state
            z, g = z_new, g_new
        else:
            if cfg.max_iter > 0:
                log.warning("No convergence within %d iterations", cfg.max_iter)
                state = best if best.objective < state.objective else state

        return state, FitTrace(restart_seed=restart_seed, records=records, stop_reason=stop_reason)

    def _attempt(
        self,
        restart_seed: int,
        *,
        x: DataMatrix,
        initial_groups: Optional[GroupAssignment],
        warm_start: Optional[PrecisionMatrix],
    ) -> Outcome:
        try:
            return self.fit_once(
                x, restart_seed=restart_seed, initial_groups=initial_groups, warm_start=warm_start
            )
        except HgmError as e:
            log.warning("Restart with seed %d failed: %s", restart_seed, e)
            return e

    def fit(
        self,
        x: DataMatrix,
        *,
        initial_groups: Optional[GroupAssignment] = None,
        warm_start: Optional[PrecisionMatrix] = None,
    ) -> Tuple[HgmState, List[FitTrace]]:
        """Run the restarts (seeds seed, seed + 1, ...) and keep the smallest negative log-likelihood.

        Ties go to the earliest restart. A fixed initialization is deterministic,
        so it runs once regardless of ``restarts``.
        """
        cfg = self.config
        count = 1 if initial_groups is not None else cfg.restarts
        seeds = [cfg.seed + r for r in range(count)]
        run = partial(self._attempt, x=x, initial_groups=initial_groups, warm_start=warm_start)
        if cfg.threads > 1 and count > 1:
            with ThreadPoolExecutor(max_workers=cfg.threads) as pool:
                outcomes = list(pool.map(run, seeds))
        else:
            outcomes = [run(seed) for seed in seeds]

        errors = [o for o in outcomes if isinstance(o, HgmError)]
        fits = [o for o in outcomes if not isinstance(o, HgmError)]
        if not fits:
            raise AllRestartsFailed(errors)
        best_state, _ = fits[0]
        for state, _ in fits[1:]:
            if state.neg_log_lik < best_state.neg_log_lik:
                best_state = state
        log.info(
            "Fit K=%d lambda=%g: %d/%d restart(s) succeeded, best -loglik %.10g",
            cfg.k, cfg.lam, len(fits), count, best_state.neg_log_lik,
        )
        return best_state, [trace for _, trace in fits]
