import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from repmkkm.kernels import KernelBank
from repmkkm.selection import (dissimilarity_matrix, kkt_residual, project_columns, project_columns_weighted,
                               project_simplex, residual_costs, solve_y_subproblem, transport_polish,
                               y_gradient, y_objective)

from oracles import central_difference_gradient, grid_y_objective_min


def random_instance(rng, m, lam_choices=(0.0, 0.1, 10.0)):
    C = rng.uniform(size=(m, m))
    C = 0.5 * (C + C.T)
    d = rng.uniform(size=m)
    return C, d, float(rng.choice(lam_choices))


def random_feasible(rng, m):
    return rng.dirichlet(np.ones(m), size=m).T


def orthonormal(rng, n, k):
    return np.linalg.qr(rng.normal(size=(n, k)))[0]


class TestDissimilarity:
    def test_identical_kernels_constant(self):
        K = np.array([[1.0, 0.4], [0.4, 1.0]])
        C = dissimilarity_matrix(KernelBank(np.stack([K] * 4)))
        assert np.all(C == C[0, 0])

    def test_identity_kernels(self):
        assert np.all(dissimilarity_matrix(KernelBank(np.stack([np.eye(5)] * 2))) == 5.0)

    def test_identity_vs_ones(self):
        C = dissimilarity_matrix(KernelBank(np.stack([np.eye(2), np.ones((2, 2))])))
        assert C[0, 1] == 2.0 and C[1, 0] == 2.0


class TestResidualCosts:
    @pytest.mark.parametrize("n,k", [(5, 2), (8, 3), (4, 4)])
    def test_identity_kernel(self, n, k):
        rng = np.random.default_rng(n + k)
        d = residual_costs(KernelBank(np.eye(n)), orthonormal(rng, n, k))
        assert d[0] == pytest.approx(n - k, abs=1e-12)

    def test_range_absorbed(self):
        rng = np.random.default_rng(0)
        B = rng.normal(size=(6, 2))
        H = orthonormal(rng, 6, 3)
        H[:, :2] = np.linalg.qr(B)[0]
        H = np.linalg.qr(H)[0]
        d = residual_costs(KernelBank(B @ B.T), H)
        assert abs(d[0]) < 1e-10

    def test_rejects_non_orthonormal(self):
        with pytest.raises(ValueError, match="orthonormal"):
            residual_costs(KernelBank(np.eye(3)), np.ones((3, 2)))


class TestProjection:
    def test_feasible_unchanged(self):
        np.testing.assert_allclose(project_simplex([0.3, 0.7]), [0.3, 0.7], atol=1e-15)

    def test_vertex(self):
        np.testing.assert_array_equal(project_simplex([2.0, 0.0]), [1.0, 0.0])

    def test_symmetric(self):
        np.testing.assert_allclose(project_simplex([0.5, 0.5, 0.5]), [1 / 3] * 3, atol=1e-15)

    @settings(max_examples=60, deadline=None)
    @given(st.integers(1, 6), st.integers(0, 2**31))
    def test_optimal_against_feasible_points(self, m, seed):
        rng = np.random.default_rng(seed)
        v = rng.normal(scale=3.0, size=m)
        p = project_simplex(v)
        assert p.min() >= 0 and p.sum() == pytest.approx(1.0, abs=1e-12)
        best = np.sum((p - v) ** 2)
        for u in rng.dirichlet(np.ones(m), size=50):
            assert np.sum((u - v) ** 2) >= best - 1e-12

    @settings(max_examples=60, deadline=None)
    @given(st.integers(1, 6), st.integers(0, 2**31))
    def test_weighted_projection_optimal(self, m, seed):
        rng = np.random.default_rng(seed)
        A = rng.normal(size=(m, 3))
        w = rng.uniform(0.1, 5.0, size=m)
        P = project_columns_weighted(A, w)
        np.testing.assert_allclose(P.sum(axis=0), 1.0, atol=1e-12)
        assert P.min() >= 0
        for col in range(3):
            best = np.dot(w, (P[:, col] - A[:, col]) ** 2)
            for u in rng.dirichlet(np.ones(m), size=50):
                assert np.dot(w, (u - A[:, col]) ** 2) >= best - 1e-12

    def test_unit_weights_match_euclidean(self):
        A = np.random.default_rng(1).normal(size=(5, 7))
        np.testing.assert_allclose(project_columns_weighted(A, np.ones(5)), project_columns(A), atol=1e-14)


@settings(max_examples=50, deadline=None)
@given(st.integers(1, 5), st.integers(0, 2**31))
def test_gradient_matches_finite_differences(m, seed):
    rng = np.random.default_rng(seed)
    C, d, lam = random_instance(rng, m, (0.0, 0.1, 1.0, 10.0))
    Y = random_feasible(rng, m)
    G = y_gradient(Y, C, d, lam)
    num = central_difference_gradient(lambda Z: y_objective(Z, C, d, lam), Y, h=1e-6)
    assert np.linalg.norm(G - num) <= 1e-4 * max(np.linalg.norm(G), 1e-12)


@settings(max_examples=50, deadline=None)
@given(st.integers(1, 5), st.integers(0, 2**31), st.floats(0, 1))
def test_objective_convex(m, seed, t):
    rng = np.random.default_rng(seed)
    C, d, lam = random_instance(rng, m)
    Ya, Yb = random_feasible(rng, m), random_feasible(rng, m)
    lhs = y_objective(t * Ya + (1 - t) * Yb, C, d, lam)
    rhs = t * y_objective(Ya, C, d, lam) + (1 - t) * y_objective(Yb, C, d, lam)
    assert lhs <= rhs + 1e-10


class TestKKT:
    def test_single_kernel_zero(self):
        assert kkt_residual(np.ones((1, 1)), np.array([[3.0]]), np.array([2.0]), 1.0) == 0.0

    def test_hand_built_nonoptimal(self):
        # r = (0, 2): gradient [[0, 1], [2, 1]]; column 0 moves to (1, 0)
        C = np.array([[0.0, 1.0], [1.0, 0.0]])
        Y = np.array([[0.0, 0.0], [1.0, 1.0]])
        assert kkt_residual(Y, C, np.ones(2), 1.0) == pytest.approx(math.sqrt(2), abs=1e-15)

    def test_uniform_optimal_when_costs_equal(self):
        m = 4
        Y = np.full((m, m), 1 / m)
        assert kkt_residual(Y, np.zeros((m, m)), np.full(m, 0.7), 0.0) < 1e-15
        sol = solve_y_subproblem(np.zeros((m, m)), np.full(m, 0.7), 0.0, Y0=np.eye(m)[:, [0, 0, 1, 2]])
        np.testing.assert_allclose(sol.Y.sum(axis=1), 1.0, atol=1e-6)


class TestSolve:
    def test_single_kernel(self):
        sol = solve_y_subproblem(np.array([[5.0]]), np.array([0.3]), 2.0)
        assert sol.Y.tolist() == [[1.0]] and sol.converged

    @pytest.mark.parametrize("seed", range(5))
    def test_tight_tolerance(self, seed):
        C, d, lam = random_instance(np.random.default_rng(seed), 4)
        sol = solve_y_subproblem(C, d, lam, tol=1e-8)
        assert sol.converged and sol.kkt <= 1e-8
        assert kkt_residual(sol.Y, C, d, lam) == pytest.approx(sol.kkt, abs=1e-15)

    @pytest.mark.parametrize("seed", range(5))
    def test_large_lambda_concentrates_on_column_argmin(self, seed):
        rng = np.random.default_rng(seed)
        m = 5
        C, d, _ = random_instance(rng, m)
        gaps = np.diff(np.sort(C, axis=0), axis=0)
        lam = 1e6 * d.max() / gaps[gaps > 0].min()
        sol = solve_y_subproblem(C, d, lam)
        target = np.argmin(C, axis=0)
        assert np.all(sol.Y[target, np.arange(m)] >= 1 - 1e-6)

    @pytest.mark.parametrize("seed", range(20))
    def test_grid_oracle(self, seed):
        rng = np.random.default_rng(1000 + seed)
        m = 2 + seed % 2
        C, d, lam = random_instance(rng, m)
        sol = solve_y_subproblem(C, d, lam)
        assert abs(sol.objective - grid_y_objective_min(C, d, lam)) <= 1e-5
        assert sol.kkt <= 1e-7

    @pytest.mark.parametrize("seed", range(10))
    def test_history_monotone(self, seed):
        rng = np.random.default_rng(seed)
        C, d, lam = random_instance(rng, 6, (0.01, 0.1, 1.0))
        sol = solve_y_subproblem(C, d, lam, Y0=np.eye(6), record=True)
        h = np.array(sol.history)
        assert h.size >= 1
        assert np.all(np.diff(h) <= 1e-12 * np.maximum(1.0, np.abs(h[:-1])))

    @pytest.mark.parametrize("s", [0.01, 3.0, 250.0])
    def test_scaling(self, s):
        rng = np.random.default_rng(7)
        C, d, lam = random_instance(rng, 3, (0.1,))
        base = solve_y_subproblem(C, d, lam, tol=1e-9)
        scaled = solve_y_subproblem(s * C, s * d, lam, tol=1e-9)
        assert scaled.objective == pytest.approx(s * base.objective, rel=1e-6, abs=1e-9)
        # the base optimum stays stationary for the scaled problem
        assert kkt_residual(base.Y, s * C, s * d, lam) <= 1e-6 * max(1.0, s)

    def test_negative_costs_clamped(self):
        C = np.array([[1.0, 0.5], [0.5, 1.0]])
        a = solve_y_subproblem(C, np.array([-1e-13, 0.2]), 0.1)
        b = solve_y_subproblem(C, np.array([0.0, 0.2]), 0.1)
        np.testing.assert_array_equal(a.Y, b.Y)

    def test_infeasible_start_rejected(self):
        with pytest.raises(ValueError, match="column-stochastic"):
            solve_y_subproblem(np.eye(2), np.ones(2), 1.0, Y0=np.ones((2, 2)))

    def test_output_feasible(self):
        rng = np.random.default_rng(11)
        C, d, lam = random_instance(rng, 8, (0.5,))
        Y = solve_y_subproblem(C, d, lam).Y
        assert Y.min() >= 0
        np.testing.assert_allclose(Y.sum(axis=0), 1.0, atol=1e-12)

    def test_near_duplicate_kernels_converge(self):
        # zero-curvature directions: many rows share cost and curvature
        rng = np.random.default_rng(3)
        base = rng.uniform(size=(3, 3))
        C = np.kron(np.ones((3, 3)), base + base.T) + 1e-9 * rng.uniform(size=(9, 9))
        C = 0.5 * (C + C.T)
        d = np.repeat(rng.uniform(size=3), 3)
        sol = solve_y_subproblem(C, d, 0.01)
        assert sol.converged and sol.kkt <= 1e-7


def test_transport_polish_solves_linear_problem():
    rng = np.random.default_rng(5)
    C = rng.uniform(size=(4, 4))
    Y = random_feasible(rng, 4)
    P = transport_polish(Y, C, 1.0)
    np.testing.assert_allclose(P.sum(axis=1), Y.sum(axis=1), atol=1e-8)
    np.testing.assert_allclose(P.sum(axis=0), 1.0, atol=1e-12)
    assert np.sum(C * P) <= np.sum(C * Y) + 1e-9
