# Third party imports
import numpy as np
import pytest
from numpy.testing import assert_allclose
from pydantic import ValidationError
from scipy import optimize

from src.core.errors import ConstantColumn, SingularSystem
from src.models.data import (
    DataMatrix,
    GroupAssignment,
    HgmState,
    HiddenSignals,
    NoiseVariances,
    PrecisionMatrix,
)
from src.services.model import (
    grad_lz,
    group_means,
    group_residuals,
    lphi_objective,
    lz_objective,
    neg_log_likelihood,
    penalized_likelihood,
    standardize,
    update_phi,
    update_z,
)
from tests.conftest import random_precision


class TestValueTypes:
    def test_group_assignment_rejects_empty_group(self):
        with pytest.raises(ValidationError):
            GroupAssignment(labels=[0, 0, 2], k=3)

    def test_group_assignment_rejects_out_of_range(self):
        with pytest.raises(ValidationError):
            GroupAssignment(labels=[0, 1, 3], k=3)

    def test_one_based_round_trip(self):
        g = GroupAssignment.from_one_based([2, 1, 2, 3])
        assert g.k == 3
        assert g.labels.tolist() == [1, 0, 1, 2]
        assert g.one_based() == [2, 1, 2, 3]

    def test_arrays_are_read_only_copies(self):
        values = np.ones((3, 2))
        x = DataMatrix(values=values)
        values[0, 0] = 5.0
        assert x.values[0, 0] == 1.0
        with pytest.raises(ValueError):
            x.values[0, 0] = 2.0

    def test_precision_matrix_must_be_symmetric(self):
        with pytest.raises(ValidationError):
            PrecisionMatrix(omega=[[1.0, 0.1], [0.2, 1.0]])

    def test_off_diagonal_nonzeros(self):
        omega = PrecisionMatrix(omega=[[1.0, 0.3, 0.0], [0.3, 1.0, 0.0], [0.0, 0.0, 1.0]])
        assert omega.off_diagonal_nonzeros == 2
        assert omega.edges() == [(0, 0, 1.0), (0, 1, 0.3), (1, 1, 1.0), (2, 2, 1.0)]

    def test_data_matrix_rejects_non_finite(self):
        with pytest.raises(ValidationError):
            DataMatrix(values=[[1.0, np.nan], [0.0, 1.0]])


class TestStandardize:
    def test_columns_have_mean_zero_and_unit_sd(self, rng):
        x = standardize(DataMatrix(values=rng.normal(3.0, 2.0, size=(20, 4))))
        assert x.standardized
        assert_allclose(x.values.mean(axis=0), 0.0, atol=1e-12)
        assert_allclose(x.values.std(axis=0, ddof=1), 1.0, atol=1e-12)

    def test_constant_column(self):
        with pytest.raises(ConstantColumn) as e:
            standardize(DataMatrix(values=[[1.0, 2.0], [3.0, 2.0], [4.0, 2.0]]))
        assert e.value.column == 1

    def test_three_points(self):
        x = standardize(DataMatrix(values=[[1.0], [2.0], [3.0]]))
        assert_allclose(x.values[:, 0], [-1.0, 0.0, 1.0], atol=1e-15)

    def test_large_offset_keeps_the_invariant(self, rng):
        raw = DataMatrix(values=1e8 + 1e-2 * rng.standard_normal((50, 3)))
        x = standardize(raw)
        assert np.all(np.abs(x.values.mean(axis=0)) <= 1e-10)
        assert_allclose(x.values.std(axis=0, ddof=1), 1.0, atol=1e-8)

    def test_is_idempotent(self, rng):
        once = standardize(DataMatrix(values=rng.normal(-4.0, 0.5, size=(15, 3))))
        twice = standardize(once)
        assert_allclose(twice.values, once.values, atol=1e-12)


def test_group_means(instance):
    x, _, g, _, _ = instance
    z_bar = group_means(x, g)
    assert_allclose(z_bar.values[:, 0], x.values[:, [0, 3, 6]].mean(axis=1))
    assert_allclose(z_bar.values[:, 2], x.values[:, [2, 5]].mean(axis=1))


def test_group_residuals(instance):
    x, z, g, _, _ = instance
    expected = [
        sum(np.sum((x.values[:, j] - z.values[:, k]) ** 2) for j in g.members(k))
        for k in range(3)
    ]
    assert_allclose(group_residuals(x, z, g), expected)


class TestUpdateZ:
    def test_solves_the_normal_equations(self, instance):
        x, _, g, omega, phi = instance
        z_bar = group_means(x, g)
        z_star = update_z(z_bar, g, omega, phi)
        weights = np.diag(g.sizes / phi.phi)
        expected = np.linalg.solve(weights + omega.omega, weights @ z_bar.values.T).T
        assert_allclose(z_star.values, expected, atol=1e-10)

    def test_matches_numerical_minimization(self, rng):
        for _ in range(10):
            n, k = 10, 3
            labels = np.concatenate([np.arange(k), rng.integers(0, k, size=6)])
            g = GroupAssignment(labels=labels, k=k)
            x = DataMatrix(values=rng.standard_normal((n, g.p)))
            omega = random_precision(k, rng)
            phi = NoiseVariances(phi=rng.uniform(0.5, 2.0, size=k))

            def objective(flat):
                return lz_objective(x, HiddenSignals(values=flat.reshape(n, k)), g, omega, phi)

            def gradient(flat):
                z = HiddenSignals(values=flat.reshape(n, k))
                return grad_lz(x, z, g, omega, phi).ravel()

            result = optimize.minimize(
                objective, np.zeros(n * k), jac=gradient, method="BFGS", options={"gtol": 1e-12}
            )
            z_star = update_z(group_means(x, g), g, omega, phi)
            assert_allclose(z_star.values, result.x.reshape(n, k), atol=1e-6)

    def test_never_increases_lz(self, instance, rng):
        x, z, g, omega, phi = instance
        z_star = update_z(group_means(x, g), g, omega, phi)
        best = lz_objective(x, z_star, g, omega, phi)
        assert best <= lz_objective(x, z, g, omega, phi) + 1e-10
        for _ in range(20):
            perturbed = HiddenSignals(values=z_star.values + 0.1 * rng.standard_normal(z.values.shape))
            assert best <= lz_objective(x, perturbed, g, omega, phi) + 1e-10

    def test_zero_noise_returns_group_means(self, instance):
        x, _, g, omega, _ = instance
        z_bar = group_means(x, g)
        z_star = update_z(z_bar, g, omega, NoiseVariances(phi=np.zeros(3)))
        assert_allclose(z_star.values, z_bar.values, atol=1e-12)

    def test_single_group_shrinks_by_four_fifths(self, rng):
        g = GroupAssignment(labels=[0, 0, 0, 0], k=1)
        z_bar = HiddenSignals(values=rng.standard_normal((6, 1)))
        z_star = update_z(
            z_bar, g, PrecisionMatrix(omega=[[1.0]]), NoiseVariances(phi=[1.0])
        )
        assert_allclose(z_star.values, 0.8 * z_bar.values, rtol=1e-14)

    def test_singular_system(self):
        g = GroupAssignment(labels=[0, 1], k=2)
        z_bar = HiddenSignals(values=np.ones((3, 2)))
        omega = PrecisionMatrix(omega=[[-1.0, 0.0], [0.0, 1.0]])
        with pytest.raises(SingularSystem):
            update_z(z_bar, g, omega, NoiseVariances(phi=[1.0, 1.0]))


class TestUpdatePhi:
    def test_closed_form(self, instance):
        x, z, g, _, _ = instance
        phi = update_phi(x, z, g)
        assert_allclose(phi.phi, group_residuals(x, z, g) / (x.n * g.sizes))
        assert not phi.floored

    def test_minimizes_lphi(self, instance, rng):
        x, z, g, _, _ = instance
        phi = update_phi(x, z, g)
        best = lphi_objective(x, z, g, phi)
        for _ in range(50):
            perturbed = NoiseVariances(phi=phi.phi * rng.uniform(0.2, 5.0, size=3))
            assert best <= lphi_objective(x, z, g, perturbed) + 1e-12

    def test_matches_numerical_minimization(self, instance):
        x, z, g, _, _ = instance
        phi = update_phi(x, z, g)
        for k in range(g.k):
            def objective(log_phi, k=k):
                values = phi.phi.copy()
                values[k] = np.exp(log_phi)
                return lphi_objective(x, z, g, NoiseVariances(phi=values))

            result = optimize.minimize_scalar(objective, bounds=(-10, 10), method="bounded",
                                              options={"xatol": 1e-12})
            assert np.exp(result.x) == pytest.approx(phi.phi[k], rel=1e-6)

    def test_two_rows_by_hand(self):
        x = DataMatrix(values=[[1.0, 1.0], [1.0, -1.0]])
        g = GroupAssignment(labels=[0, 0], k=1)
        phi = update_phi(x, HiddenSignals(values=np.zeros((2, 1))), g)
        assert_allclose(phi.phi, [1.0])

    def test_scales_with_the_square_of_the_residuals(self, instance):
        x, z, g, _, _ = instance
        scaled = update_phi(
            DataMatrix(values=3.0 * x.values), HiddenSignals(values=3.0 * z.values), g
        )
        assert_allclose(scaled.phi, 9.0 * update_phi(x, z, g).phi, rtol=1e-12)

    def test_floor(self):
        x = DataMatrix(values=[[1.0, 1.0, 0.0], [2.0, 2.0, 1.0]])
        g = GroupAssignment(labels=[0, 0, 1], k=2)
        phi = update_phi(x, group_means(x, g), g, floor=1e-6)
        assert phi.floored
        assert_allclose(phi.phi, [1e-6, 1e-6])


def test_grad_lz_matches_finite_differences(rng):
    for _ in range(20):
        n, k = 6, 3
        g = GroupAssignment(labels=[0, 1, 2, 2, 1, 0, 0], k=k)
        x = DataMatrix(values=rng.standard_normal((n, g.p)))
        z = rng.standard_normal((n, k))
        omega = random_precision(k, rng)
        phi = NoiseVariances(phi=rng.uniform(0.5, 2.0, size=k))
        analytic = grad_lz(x, HiddenSignals(values=z), g, omega, phi)
        numeric = np.zeros_like(z)
        step = 1e-5
        for index in np.ndindex(z.shape):
            up, down = z.copy(), z.copy()
            up[index] += step
            down[index] -= step
            numeric[index] = (
                lz_objective(x, HiddenSignals(values=up), g, omega, phi)
                - lz_objective(x, HiddenSignals(values=down), g, omega, phi)
            ) / (2 * step)
        error = np.linalg.norm(numeric - analytic) / np.linalg.norm(analytic)
        assert error <= 1e-5


def test_penalty_is_the_l1_norm(instance):
    x, z, g, omega, phi = instance
    neg_log_lik, objective = penalized_likelihood(x, z, g, omega, phi, 0.3)
    assert objective - neg_log_lik == pytest.approx(0.3 * omega.l1_norm)
    state = HgmState(
        z=z, g=g, omega=omega, phi=phi, lam=0.3, objective=objective, neg_log_lik=neg_log_lik
    )
    assert neg_log_likelihood(x, state, 0.3) == (neg_log_lik, objective)


def test_likelihood_decomposes_into_lz_and_lphi(instance):
    x, z, g, omega, phi = instance
    neg_log_lik, _ = penalized_likelihood(x, z, g, omega, phi, 0.1)
    fit = group_residuals(x, z, g) / (x.n * phi.phi)
    rest = neg_log_lik - lz_objective(x, z, g, omega, phi)
    assert rest == pytest.approx(
        np.sum(g.sizes * np.log(phi.phi)) - omega.log_det() + g.k * np.log(2 * np.pi)
    )
    assert lphi_objective(x, z, g, phi) == pytest.approx(
        np.sum(fit + g.sizes * np.log(phi.phi))
    )


def test_group_means_commute_with_row_permutation(instance, rng):
    x, _, g, _, _ = instance
    rows = rng.permutation(x.n)
    shuffled = group_means(DataMatrix(values=x.values[rows]), g)
    assert_allclose(shuffled.values, group_means(x, g).values[rows], atol=1e-14)


class TestConvexity:
    """Each block of the penalized likelihood is convex with the others held fixed."""

    def test_in_z(self, instance, rng):
        x, _, g, omega, phi = instance
        for _ in range(20):
            a, b = rng.standard_normal((2, x.n, g.k))
            ends = [
                penalized_likelihood(x, HiddenSignals(values=v), g, omega, phi, 0.2)[1]
                for v in (a, b)
            ]
            middle = penalized_likelihood(
                x, HiddenSignals(values=(a + b) / 2.0), g, omega, phi, 0.2
            )[1]
            assert middle <= sum(ends) / 2.0 + 1e-10

    def test_in_the_inverse_noise_variances(self, instance, rng):
        x, z, g, omega, _ = instance
        for _ in range(20):
            a, b = rng.uniform(0.2, 5.0, size=(2, g.k))
            ends = [
                penalized_likelihood(x, z, g, omega, NoiseVariances(phi=1.0 / t), 0.2)[1]
                for t in (a, b)
            ]
            middle = penalized_likelihood(
                x, z, g, omega, NoiseVariances(phi=2.0 / (a + b)), 0.2
            )[1]
            assert middle <= sum(ends) / 2.0 + 1e-10

    def test_in_omega(self, instance, rng):
        x, z, g, _, phi = instance
        for _ in range(20):
            a, b = random_precision(g.k, rng), random_precision(g.k, rng)
            ends = [penalized_likelihood(x, z, g, o, phi, 0.2)[1] for o in (a, b)]
            middle = PrecisionMatrix(omega=(a.omega + b.omega) / 2.0)
            assert penalized_likelihood(x, z, g, middle, phi, 0.2)[1] <= sum(ends) / 2.0 + 1e-10
