# Standard library imports
import math

# Third party imports
import numpy as np
import pytest

from src.core.errors import AllGridPointsFailed, InvalidParameter, SingularSystem
from src.models.data import (
    DataMatrix,
    GroupAssignment,
    HgmState,
    HiddenSignals,
    NoiseVariances,
    PrecisionMatrix,
)
from src.models.selection import BicRecord, GridFailure
from src.models.solver import Estimator, SolverConfig
from src.services.model import standardize
from src.services.selection import _better, bic, initial_lambda_grid, scan, select_k, select_lambda
from src.services.solver import HgmSolver


def make_state(omega: np.ndarray, *, n: int, p: int, neg_log_lik: float) -> HgmState:
    k = omega.shape[0]
    labels = np.arange(p) % k
    return HgmState(
        z=HiddenSignals(values=np.zeros((n, k))),
        g=GroupAssignment(labels=labels, k=k),
        omega=PrecisionMatrix(omega=omega),
        phi=NoiseVariances(phi=np.ones(k)),
        lam=0.1,
        objective=neg_log_lik,
        neg_log_lik=neg_log_lik,
    )


def record(k: int, lam: float, value: float) -> BicRecord:
    return BicRecord(k=k, lam=lam, bic=value, neg_log_lik=value, s=0, converged=True)


class TestBic:
    def test_worked_example(self):
        x = DataMatrix(values=np.eye(10))
        state = make_state(np.eye(1), n=10, p=10, neg_log_lik=100.0)
        assert bic(state, x, 1) == pytest.approx(104.835, abs=1e-3)
        assert bic(state, x, 1) == pytest.approx(100.0 + math.log(10) / 10 * 21)

    def test_each_edge_costs_log_p_over_n(self):
        x = DataMatrix(values=np.eye(10))
        sparse = make_state(np.eye(3), n=10, p=10, neg_log_lik=50.0)
        dense_omega = np.eye(3)
        dense_omega[0, 1] = dense_omega[1, 0] = 0.2
        dense = make_state(dense_omega, n=10, p=10, neg_log_lik=50.0)
        assert bic(dense, x, 3) - bic(sparse, x, 3) == pytest.approx(math.log(10) / 10)


def test_ties_keep_the_incumbent():
    incumbent = record(2, 0.5, 10.0)
    assert _better(incumbent, None)
    assert not _better(record(2, 0.1, 10.0), incumbent)
    assert not _better(record(2, 0.1, 10.0 - 1e-13), incumbent)
    assert _better(record(2, 0.1, 9.9), incumbent)


class TestGridSearch:
    @pytest.fixture
    def x(self, separated):
        data, _ = separated
        return standardize(data)

    def test_singleton_grid(self, x):
        cfg = SolverConfig(k=3, lam=1.0, restarts=1)
        best, path, _ = select_lambda(x, 3, [0.2], cfg)
        assert len(path) == 1
        assert best == path[0]
        assert (best.k, best.lam) == (3, 0.2)

    def test_path_runs_from_the_largest_lambda(self, x):
        cfg = SolverConfig(k=3, lam=1.0, restarts=1)
        best, path, _ = select_lambda(x, 3, [0.05, 0.5, 0.2], cfg)
        assert [r.lam for r in path] == [0.5, 0.2, 0.05]
        assert best.bic == min(r.bic for r in path)

    @pytest.mark.parametrize("grid", [[], [0.1, 0.0]])
    def test_rejects_bad_grids(self, x, grid):
        with pytest.raises(InvalidParameter):
            select_lambda(x, 3, grid, SolverConfig(k=3, lam=1.0))

    def test_scan_covers_every_pair(self, x):
        cfg = SolverConfig(k=1, lam=1.0, restarts=1)
        selected, path, _ = scan(x, [3, 2], [0.3, 0.1], cfg)
        assert [(r.k, r.lam) for r in path] == [(2, 0.3), (2, 0.1), (3, 0.3), (3, 0.1)]
        assert selected.bic == min(r.bic for r in path)
        assert select_k(x, [3, 2], [0.3, 0.1], cfg) == selected

    def test_scan_default_grid(self, x):
        cfg = SolverConfig(k=1, lam=1.0, restarts=1)
        _, path, _ = scan(x, [3], None, cfg, grid_size=4)
        assert len(path) == 4
        expected = initial_lambda_grid(x, 3, cfg, count=4)
        assert [r.lam for r in path] == pytest.approx(sorted(expected, reverse=True))

    def test_scan_rejects_an_empty_k_grid(self, x):
        with pytest.raises(InvalidParameter):
            scan(x, [], [0.1], SolverConfig(k=1, lam=1.0))

    def test_every_pair_failing(self, x):
        with pytest.raises(AllGridPointsFailed):
            scan(x, [50], [0.1], SolverConfig(k=1, lam=1.0, restarts=1))

    def test_failed_points_are_reported(self, x, monkeypatch):
        fit = HgmSolver.fit

        def failing(solver, data, **kwargs):
            if solver.config.lam == 0.5:
                raise SingularSystem("latent system is singular")
            return fit(solver, data, **kwargs)

        monkeypatch.setattr(HgmSolver, "fit", failing)
        cfg = SolverConfig(k=3, lam=1.0, restarts=1)
        best, path, failures = select_lambda(x, 3, [0.5, 0.2], cfg)
        assert [r.lam for r in path] == [0.2]
        assert failures == [GridFailure(k=3, lam=0.5, error="latent system is singular")]
        selected, _, scanned = scan(x, [2, 3], [0.5, 0.2], cfg)
        assert [(f.k, f.lam) for f in scanned] == [(2, 0.5), (3, 0.5)]
        assert selected.lam == 0.2

    def test_failures_survive_a_k_with_no_successful_fit(self, x):
        cfg = SolverConfig(k=1, lam=1.0, restarts=1)
        _, path, failures = scan(x, [3, 50], [0.3, 0.1], cfg)
        assert {r.k for r in path} == {3}
        assert [(f.k, f.lam) for f in failures] == [(50, 0.3), (50, 0.1)]
        with pytest.raises(AllGridPointsFailed) as e:
            select_lambda(x, 50, [0.1], cfg)
        assert [f.lam for f in e.value.failures] == [0.1]


def test_select_k_finds_the_number_of_signals(rng):
    # exact replicates: extra groups cannot lower the fit term, merged groups raise it
    signals = rng.standard_normal((30, 5))
    labels = np.repeat(np.arange(5), 4)
    x = standardize(DataMatrix(values=signals[:, labels]))
    cfg = SolverConfig(k=5, lam=0.2, restarts=1, estimator=Estimator.GLASSO)
    selected = select_k(x, [3, 5, 8], [0.2], cfg)
    assert selected.k == 5
