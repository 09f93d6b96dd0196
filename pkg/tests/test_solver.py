import numpy as np
import pytest

from cmnrec.cmn import CmnParams, cmn_value, phi_weight_oracle, surrogate_value
from cmnrec.experiments import gen_gaussian_matrix, gen_sparse_signal, snr_db
from cmnrec.solver import (
    Problem,
    SolverConfig,
    SolverDivergenceError,
    SolverState,
    eta_update,
    residuals,
    resolve_lambda0,
    solve_cmn_alm,
    solve_lp_admm,
    x_update,
    z_update_q1,
    z_update_q2,
)
from cmnrec.stable_noise import StableNoiseParams, sample_sas


def small_instance(seed, m=8, n=12, k=2, alpha=1.0, gamma=1e-2):
    rng_key = seed
    x = gen_sparse_signal(n, k, rng_key)
    A = gen_gaussian_matrix(m, n, "unit_spectral", rng_key + 1)
    noise = sample_sas(StableNoiseParams(alpha, gamma), m, rng_key + 2)
    return x, A, A @ x + noise


def make_state(problem, mu=0.1, seed=0):
    rng = np.random.default_rng(seed)
    m, n = problem.shape
    return SolverState(
        x=rng.standard_normal(n),
        z=rng.standard_normal(m),
        eta=rng.standard_normal(m),
        mu=mu,
    )


def subproblem_v(state, problem, config):
    return (problem.A @ state.x - problem.y) / problem.sigma_n + state.eta / config.sigma


class TestProblemValidation:
    def test_dimension_mismatch(self):
        with pytest.raises(ValueError):
            Problem(np.eye(3), np.ones(2))

    def test_sigma_n_positive(self):
        with pytest.raises(ValueError):
            Problem(np.eye(2), np.ones(2), sigma_n=0.0)

    def test_nonfinite_rejected(self):
        with pytest.raises(ValueError):
            Problem(np.array([[np.inf, 0.0]]), np.ones(1))


class TestZUpdates:
    def test_q1_zero_weight_is_identity(self):
        # degenerate range p_s = p_f = 0 makes every threshold (0/q) t^(-q) = 0
        _, A, y = small_instance(1)
        problem = Problem(A, y)
        config = SolverConfig(cmn=CmnParams(0.0, 0.0, 1.0, eps=1e-2))
        state = make_state(problem)
        v = subproblem_v(state, problem, config)
        np.testing.assert_allclose(z_update_q1(state, problem, config), v)

    def test_q1_scalar_threshold_matches_oracle(self):
        # m = 1 with z = 0: threshold is phi(eps)/sigma, then plain shrinkage
        params = CmnParams(0.0, 1.0, 1.0, eps=1e-2)
        sigma = 2.0
        problem = Problem(np.array([[1.0]]), np.array([-3.0]))
        config = SolverConfig(cmn=params, sigma=sigma)
        state = SolverState(x=np.zeros(1), z=np.zeros(1), eta=np.zeros(1), mu=0.0)
        expected_t = phi_weight_oracle(0.0, params) / sigma
        v = 3.0  # (A 0 - y)/sigma_n = 3
        got = z_update_q1(state, problem, config)[0]
        assert got == pytest.approx(np.sign(v) * max(abs(v) - expected_t, 0.0), rel=1e-8)

    def test_q1_minimizes_surrogate_objective_per_coordinate(self):
        _, A, y = small_instance(2)
        problem = Problem(A, y)
        config = SolverConfig(cmn=CmnParams(0.0, 1.0, 1.0, eps=1e-2), sigma=0.7)
        state = make_state(problem, seed=3)
        z_new = z_update_q1(state, problem, config)
        v = subproblem_v(state, problem, config)
        for i in range(len(v)):
            best = _grid_min_scalar(
                lambda zi, i=i: float(
                    surrogate_value([zi], [state.z[i]], config.cmn)
                    + 0.5 * config.sigma * (v[i] - zi) ** 2
                ),
                center=v[i],
                span=abs(v[i]) + 1.0,
            )
            assert z_new[i] == pytest.approx(best, abs=2e-6)

    def test_q2_unit_weight_halves_at_sigma_two(self):
        # degenerate p = q = 2 gives W = I; with sigma = 2 the solve is v / 2
        _, A, y = small_instance(4)
        problem = Problem(A, y)
        config = SolverConfig(cmn=CmnParams(2.0, 2.0, 2.0, eps=1e-2), sigma=2.0)
        state = make_state(problem, seed=5)
        v = subproblem_v(state, problem, config)
        np.testing.assert_allclose(z_update_q2(state, problem, config), v / 2.0)

    def test_q2_zero_weight_is_identity(self):
        _, A, y = small_instance(6)
        problem = Problem(A, y)
        config = SolverConfig(cmn=CmnParams(0.0, 0.0, 2.0, eps=1e-2))
        state = make_state(problem, seed=7)
        v = subproblem_v(state, problem, config)
        np.testing.assert_allclose(z_update_q2(state, problem, config), v)

    def test_q2_minimizes_quadratic_per_coordinate(self):
        _, A, y = small_instance(8)
        problem = Problem(A, y)
        config = SolverConfig(cmn=CmnParams(0.0, 2.0, 2.0, eps=1e-2), sigma=1.3)
        state = make_state(problem, seed=9)
        z_new = z_update_q2(state, problem, config)
        v = subproblem_v(state, problem, config)
        from cmnrec.cmn import phi_weight

        w = phi_weight(np.abs(state.z), config.cmn)
        for i in range(len(v)):
            best = _grid_min_scalar(
                lambda zi, i=i: float(w[i] * zi**2 + 0.5 * config.sigma * (v[i] - zi) ** 2),
                center=v[i],
                span=abs(v[i]) + 1.0,
            )
            assert z_new[i] == pytest.approx(best, abs=2e-6)

    def test_wrong_q_raises(self):
        _, A, y = small_instance(10)
        problem = Problem(A, y)
        state = make_state(problem)
        with pytest.raises(ValueError):
            z_update_q1(state, problem, SolverConfig(cmn=CmnParams(0, 2, 2)))
        with pytest.raises(ValueError):
            z_update_q2(state, problem, SolverConfig(cmn=CmnParams(0, 1, 1)))


def _grid_min_scalar(obj, center, span):
    best = center
    width = span
    for _ in range(8):
        grid = np.linspace(best - width, best + width, 41)
        best = grid[int(np.argmin([obj(g) for g in grid]))]
        width /= 10.0
    return best


class TestXUpdate:
    def test_fixed_point_when_residual_zero_and_mu_zero(self):
        _, A, y = small_instance(11)
        problem = Problem(A, y)
        config = SolverConfig(cmn=CmnParams(0, 1, 1))
        state = make_state(problem, mu=0.0, seed=12)
        # choose z so the x-gradient residual vanishes
        z = (A @ state.x - y) / problem.sigma_n + state.eta / config.sigma
        out = x_update(state, z, problem, config, lambda0=2.0)
        np.testing.assert_allclose(out, state.x)

    def test_identity_operator_hand_expansion(self):
        # A = I, sigma_n = 1, x = 0, eta = 0, z = 0: one step is S_{mu/(s l)}(y / l)
        y = np.array([1.5, -0.4])
        problem = Problem(np.eye(2), y)
        config = SolverConfig(cmn=CmnParams(0, 1, 1), sigma=2.0)
        state = SolverState(x=np.zeros(2), z=np.zeros(2), eta=np.zeros(2), mu=0.6)
        lam0 = 3.0
        got = x_update(state, np.zeros(2), problem, config, lambda0=lam0)
        thresh = 0.6 / (2.0 * lam0)
        expected = np.sign(y / lam0) * np.maximum(np.abs(y / lam0) - thresh, 0.0)
        np.testing.assert_allclose(got, expected)

    def test_never_increases_lasso_subobjective(self):
        rng = np.random.default_rng(13)
        for trial in range(10):
            _, A, y = small_instance(20 + trial, m=12, n=20, k=3)
            problem = Problem(A, y)
            config = SolverConfig(cmn=CmnParams(0, 1, 1), sigma=1.0)
            state = make_state(problem, mu=0.3, seed=30 + trial)
            z = rng.standard_normal(12)
            lam0 = resolve_lambda0(problem, config)

            def sub_obj(x):
                r = (A @ x - y) / problem.sigma_n - z + state.eta / config.sigma
                return 0.5 * config.sigma * float(r @ r) + state.mu * float(np.sum(np.abs(x)))

            x_new = x_update(state, z, problem, config, lambda0=lam0)
            assert sub_obj(x_new) <= sub_obj(state.x) + 1e-10


class TestEtaAndResiduals:
    def test_eta_unchanged_at_feasibility(self):
        _, A, y = small_instance(14)
        problem = Problem(A, y)
        config = SolverConfig(cmn=CmnParams(0, 1, 1))
        state = make_state(problem, seed=15)
        z_feas = (A @ state.x - y) / problem.sigma_n
        np.testing.assert_allclose(
            eta_update(state, z_feas, state.x, problem, config), state.eta
        )

    def test_eta_matches_direct_recomputation(self):
        _, A, y = small_instance(16)
        problem = Problem(A, y, sigma_n=2.0)
        config = SolverConfig(cmn=CmnParams(0, 1, 1), sigma=1.7)
        state = make_state(problem, seed=17)
        rng = np.random.default_rng(18)
        z_new = rng.standard_normal(8)
        x_new = rng.standard_normal(12)
        expected = state.eta + 1.7 * ((A @ x_new - y) / 2.0 - z_new)
        np.testing.assert_allclose(
            eta_update(state, z_new, x_new, problem, config), expected
        )

    def test_residuals_zero_at_feasible_stationary_pair(self):
        _, A, y = small_instance(19)
        problem = Problem(A, y)
        config = SolverConfig(cmn=CmnParams(0, 1, 1))
        state = make_state(problem, seed=20)
        z_feas = (A @ state.x - y) / problem.sigma_n
        s1 = SolverState(x=state.x, z=z_feas, eta=state.eta, mu=0.1)
        s2 = SolverState(x=state.x, z=z_feas.copy(), eta=state.eta, mu=0.1)
        primal, dual = residuals(s1, s2, problem, config)
        assert primal == pytest.approx(0.0, abs=1e-12)
        assert dual == pytest.approx(0.0, abs=1e-12)

    def test_first_iteration_primal_positive(self):
        _, A, y = small_instance(21)
        problem = Problem(A, y)
        config = SolverConfig(cmn=CmnParams(0, 1, 1), max_iter=1, mu_min=1e-4)
        report = solve_cmn_alm(problem, config)
        assert report.history[0].primal > 0.0

    def test_residuals_match_recomputation(self):
        _, A, y = small_instance(22)
        problem = Problem(A, y, sigma_n=1.5)
        config = SolverConfig(cmn=CmnParams(0, 1, 1), sigma=0.8)
        sp = make_state(problem, seed=23)
        sn = make_state(problem, seed=24)
        primal, dual = residuals(sp, sn, problem, config)
        assert primal == pytest.approx(
            float(np.linalg.norm((A @ sn.x - y) / 1.5 - sn.z))
        )
        assert dual == pytest.approx(
            0.8 / 1.5 * float(np.linalg.norm(A.T @ (sn.z - sp.z)))
        )


class TestResolvers:
    def test_lambda0_auto_exceeds_bound(self):
        _, A, y = small_instance(25)
        problem = Problem(A, y)
        config = SolverConfig(cmn=CmnParams(0, 1, 1), lambda0="auto")
        from cmnrec.linalg import spectral_norm_sq

        assert resolve_lambda0(problem, config) > spectral_norm_sq(A)

    def test_lambda0_autoraise_warns(self):
        A = 3.0 * np.eye(4)
        problem = Problem(A, np.ones(4))
        config = SolverConfig(cmn=CmnParams(0, 1, 1), lambda0=1.0)
        with pytest.warns(RuntimeWarning):
            lam = resolve_lambda0(problem, config)
        assert lam > 9.0

    def test_lambda0_keep_invalid_when_autoraise_off(self):
        A = 3.0 * np.eye(4)
        problem = Problem(A, np.ones(4))
        config = SolverConfig(cmn=CmnParams(0, 1, 1), lambda0=1.0, lambda0_autoraise=False)
        with pytest.warns(RuntimeWarning):
            assert resolve_lambda0(problem, config) == 1.0


class TestSolve:
    def test_zero_observation_returns_zero(self):
        A = gen_gaussian_matrix(6, 10, "unit_spectral", 1)
        problem = Problem(A, np.zeros(6))
        report = solve_cmn_alm(problem, SolverConfig(cmn=CmnParams(0, 1, 1)))
        assert report.converged
        assert report.iterations <= 3
        np.testing.assert_allclose(report.x_hat, 0.0)

    @pytest.mark.parametrize("q", [1.0, 2.0])
    def test_noiseless_recovery_both_paths(self, q):
        hits = 0
        for seed in range(3):
            x = gen_sparse_signal(64, 4, 100 + seed)
            A = gen_gaussian_matrix(32, 64, "unit_spectral", 200 + seed)
            problem = Problem(A, A @ x)
            config = SolverConfig(
                cmn=CmnParams(0.0, 1.0, q),
                sigma=1.0,
                mu_init=0.2,
                mu_min=1e-6,
                zeta=0.93,
                lambda0="auto",
            )
            report = solve_cmn_alm(problem, config)
            if snr_db(x, report.x_hat) >= 40.0:
                hits += 1
        assert hits >= 2

    def test_matches_independent_l1_l1_admm(self):
        # hand-written l1-l1 ADMM: constant unit threshold on z, ISTA on x
        for seed in (0, 1, 2):
            x_true = gen_sparse_signal(40, 3, 300 + seed)
            A = gen_gaussian_matrix(24, 40, "unit_spectral", 400 + seed)
            noise = sample_sas(StableNoiseParams(1.0, 1e-3), 24, 500 + seed)
            y = A @ x_true + noise
            sigma, mu0, mu_min, zeta, lam0, iters = 1.0, 0.05, 1e-3, 0.95, 1.4, 80

            xo = np.zeros(40)
            zo = -y.copy()
            eta = np.zeros(24)
            mu = mu0
            for _ in range(iters):
                v = A @ xo - y + eta / sigma
                zo = np.sign(v) * np.maximum(np.abs(v) - 1.0 / sigma, 0.0)
                r = A @ xo - y - zo + eta / sigma
                g = xo - A.T @ r / lam0
                xo = np.sign(g) * np.maximum(np.abs(g) - mu / (sigma * lam0), 0.0)
                eta = eta + sigma * (A @ xo - y - zo)
                mu = max(zeta * mu, mu_min)

            config = SolverConfig(
                cmn=CmnParams(1.0, 1.0, 1.0, eps=1e-2),
                sigma=sigma,
                mu_init=mu0,
                mu_min=mu_min,
                zeta=zeta,
                lambda0=lam0,
                max_iter=iters,
                tol=1e-14,
            )
            report = solve_cmn_alm(Problem(A, y), config)
            rel = np.linalg.norm(report.x_hat - xo) / max(np.linalg.norm(xo), 1e-30)
            assert rel <= 1e-3

    def test_lp_baseline_equals_degenerate_range(self):
        _, A, y = small_instance(26, m=16, n=24, k=3)
        problem = Problem(A, y)
        config = SolverConfig(cmn=CmnParams(0, 1, 1, eps=1e-2), mu_min=1e-3)
        rep_lp = solve_lp_admm(problem, 1.0, config)
        rep_cmn = solve_cmn_alm(
            problem, SolverConfig(cmn=CmnParams(1, 1, 1, eps=1e-2), mu_min=1e-3)
        )
        np.testing.assert_array_equal(rep_lp.x_hat, rep_cmn.x_hat)

    def test_lp_p_out_of_range(self):
        _, A, y = small_instance(27)
        with pytest.raises(ValueError):
            solve_lp_admm(Problem(A, y), 0.0, SolverConfig(cmn=CmnParams(0, 1, 1)))
        with pytest.raises(ValueError):
            solve_lp_admm(Problem(A, y), 2.5, SolverConfig(cmn=CmnParams(0, 1, 1)))

    def test_scale_consistency_under_joint_rescaling(self):
        # measurement-unit change (cA, cy, c sigma_n) leaves iterates untouched
        x, A, y = small_instance(28, m=10, n=16, k=2)
        c = 10.0
        conf = SolverConfig(cmn=CmnParams(0, 1, 1), mu_min=1e-3, max_iter=40)
        r1 = solve_cmn_alm(Problem(A, y, 1.0), conf)
        r2 = solve_cmn_alm(Problem(c * A, c * y, c), conf)
        np.testing.assert_allclose(r2.x_hat, r1.x_hat, rtol=1e-12, atol=1e-14)
        for a, b in zip(r1.history, r2.history):
            assert b.primal == pytest.approx(a.primal, rel=1e-10, abs=1e-12)
            assert b.objective == pytest.approx(a.objective, rel=1e-10)

    def test_deterministic(self):
        _, A, y = small_instance(29)
        problem = Problem(A, y)
        config = SolverConfig(cmn=CmnParams(0, 1, 2), mu_min=1e-3)
        r1 = solve_cmn_alm(problem, config)
        r2 = solve_cmn_alm(problem, config)
        np.testing.assert_array_equal(r1.x_hat, r2.x_hat)
        assert r1.history == r2.history

    def test_divergence_raises_with_iteration_number(self):
        _, A, y = small_instance(30)
        # force instability: tiny lambda0 kept as-is makes the x-step explode
        config = SolverConfig(
            cmn=CmnParams(0, 1, 1),
            lambda0=1e-6,
            lambda0_autoraise=False,
            mu_min=1e-3,
            max_iter=100,
        )
        with pytest.warns(RuntimeWarning):
            with pytest.raises(SolverDivergenceError, match="iteration"):
                solve_cmn_alm(Problem(100.0 * A, 100.0 * y), config)

    def test_frozen_mu_converges_on_well_conditioned_instance(self):
        x, A, y = small_instance(31, m=24, n=32, k=3, gamma=1e-3)
        problem = Problem(A, y)
        config = SolverConfig(
            cmn=CmnParams(0, 1, 1),
            mu_init=0.02,
            mu_min=0.02,
            zeta=1.0,
            tol=1e-5,
            max_iter=500,
        )
        report = solve_cmn_alm(problem, config)
        assert report.history[-1].primal <= 1e-5

    def test_report_invariants(self):
        _, A, y = small_instance(32)
        report = solve_cmn_alm(Problem(A, y), SolverConfig(cmn=CmnParams(0, 2, 2)))
        assert len(report.history) == report.iterations
        assert all(np.isfinite(rec.objective) for rec in report.history)

    def test_objective_is_regularized_cmn_plus_l1(self):
        x, A, y = small_instance(33)
        problem = Problem(A, y)
        params = CmnParams(0, 1, 1, eps=1e-2)
        config = SolverConfig(cmn=params, max_iter=5, mu_min=1e-3)
        report = solve_cmn_alm(problem, config)
        # recompute the last objective from the returned iterate
        rec = report.history[-1]
        expected = cmn_value(A @ report.x_hat - y, params) + rec.mu * np.sum(
            np.abs(report.x_hat)
        )
        assert rec.objective == pytest.approx(expected, rel=1e-12)
