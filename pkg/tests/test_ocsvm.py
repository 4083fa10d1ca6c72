import numpy as np
import pytest

from nnc.ocsvm import (ConvergenceError, brute_force_qp, decision,
                       dual_objective, nu_property_report, train_ocsvm)


def offset_cloud(seed, n=12, m=2, offset=2.5):
    r = np.random.default_rng(seed)
    return r.normal(size=(n, m)) + offset


def constraint_violation(model):
    n = model.n_train
    upper = 1.0 / (model.nu * n)
    a = model.alphas
    return max(abs(a.sum() - 1.0),
               float(max(0.0, (a - upper).max())),
               float(max(0.0, (-a).max())))


class TestTrainOcsvm:
    def test_two_identical_unit_points_nu_one(self):
        point = np.array([0.6, 0.8])
        model = train_ocsvm(np.stack([point, point]), nu=1.0)
        np.testing.assert_allclose(model.alphas, [0.5, 0.5])
        np.testing.assert_allclose(model.w, point, atol=1e-7)
        assert float(model.rho) == pytest.approx(1.0, abs=1e-6)
        assert decision(model, point) == pytest.approx(0.0, abs=1e-6)

    def test_alphas_match_brute_force(self):
        X = offset_cloud(seed=3)
        smo = train_ocsvm(X, nu=0.25, tol=1e-8)
        ref = brute_force_qp(X, nu=0.25, tol=1e-8)
        np.testing.assert_allclose(smo.alphas, ref.alphas, atol=1e-4)

    def test_low_nu_limits_negative_training_scores(self):
        X = offset_cloud(seed=9, n=500, m=4)
        model = train_ocsvm(X, nu=0.01)
        scores = X @ model.w.astype(np.float64) - float(model.rho)
        assert (scores < -2 * model.tol).sum() <= int(np.ceil(0.01 * 500))

    def test_nu_clamped_when_too_small(self):
        X = offset_cloud(seed=1, n=50)
        with pytest.warns(UserWarning, match="clamping nu"):
            model = train_ocsvm(X, nu=0.01)
        assert model.nu == pytest.approx(1 / 50)

    def test_w_is_alpha_combination(self):
        X = offset_cloud(seed=4, n=30, m=3)
        model = train_ocsvm(X, nu=0.2)
        np.testing.assert_allclose(model.w, X.T @ model.alphas, atol=1e-6)

    def test_dual_feasibility_tight(self):
        for seed in range(10):
            X = offset_cloud(seed, n=40, m=3)
            model = train_ocsvm(X, nu=0.15)
            assert constraint_violation(model) < 1e-9

    def test_invalid_inputs(self):
        with pytest.raises(ValueError):
            train_ocsvm(np.zeros((1, 3)), nu=0.5)
        with pytest.raises(ValueError):
            train_ocsvm(np.array([[np.nan, 0.0], [0.0, 1.0]]), nu=0.5)
        with pytest.raises(ValueError):
            train_ocsvm(offset_cloud(0), nu=0.0)

    def test_update_budget_enforced(self):
        X = offset_cloud(seed=2, n=60, m=4)
        with pytest.raises(ConvergenceError):
            train_ocsvm(X, nu=0.2, tol=1e-12, max_iter=3)

    def test_scaling_preserves_training_sign_pattern(self):
        X = offset_cloud(seed=11, n=40, m=3)
        base = train_ocsvm(X, nu=0.2, tol=1e-8)
        scaled = train_ocsvm(3.0 * X, nu=0.2, tol=1e-8)
        sb = X @ base.w.astype(np.float64) - float(base.rho)
        sc = 3.0 * X @ scaled.w.astype(np.float64) - float(scaled.rho)
        keep = np.abs(sb) > 1e-5  # boundary scores carry no stable sign
        np.testing.assert_array_equal(np.sign(sb[keep]), np.sign(sc[keep]))


class TestDecision:
    def test_free_support_vector_scores_zero(self):
        # nu * n deliberately non-integer, so a free support vector must exist.
        X = offset_cloud(seed=6, n=40, m=3)
        model = train_ocsvm(X, nu=0.22, tol=1e-8)
        upper = 1.0 / (model.nu * 40)
        free = (model.alphas > 1e-12) & (model.alphas < upper - 1e-12)
        assert free.any()
        for idx in np.nonzero(free)[0]:
            assert decision(model, X[idx]) == pytest.approx(0.0, abs=1e-5)

    def test_centroid_not_below_training_minimum(self):
        X = offset_cloud(seed=7, n=60, m=4)
        model = train_ocsvm(X, nu=0.1)
        train_scores = X @ model.w.astype(np.float64) - float(model.rho)
        assert decision(model, X.mean(axis=0)) >= train_scores.min() - 1e-9

    def test_affine_in_input(self):
        X = offset_cloud(seed=8, n=30, m=5)
        model = train_ocsvm(X, nu=0.2)
        a, b = X[0], X[1]
        mid = decision(model, (a + b) / 2.0)
        assert mid == pytest.approx((decision(model, a) + decision(model, b)) / 2,
                                    abs=1e-9)

    def test_dimension_mismatch_rejected(self):
        model = train_ocsvm(offset_cloud(0, n=10, m=3), nu=0.2)
        with pytest.raises(ValueError):
            decision(model, np.zeros(4))

    def test_batch_rows_match_scalar_calls(self):
        X = offset_cloud(seed=12, n=15, m=3)
        model = train_ocsvm(X, nu=0.3)
        batch = decision(model, X)
        for i in range(len(X)):
            assert batch[i] == pytest.approx(decision(model, X[i]), abs=1e-12)


class TestBruteForceOracle:
    def test_objectives_agree_over_seeds(self):
        for seed in range(50):
            r = np.random.default_rng(seed)
            n, m = int(r.integers(5, 21)), int(r.integers(2, 6))
            nu = [0.1, 0.25, 0.5, 1.0][seed % 4]
            X = r.normal(size=(n, m)) + 2.0
            smo = train_ocsvm(X, nu=nu, tol=1e-8)
            ref = brute_force_qp(X, nu=nu, tol=1e-8)
            assert abs(dual_objective(X, smo.alphas)
                       - dual_objective(X, ref.alphas)) < 1e-6

    def test_oracle_not_worse_than_smo(self):
        for seed in range(50):
            r = np.random.default_rng(1000 + seed)
            X = r.normal(size=(10, 3)) + 1.5
            smo = train_ocsvm(X, nu=0.3, tol=1e-8)
            ref = brute_force_qp(X, nu=0.3, tol=1e-8)
            assert (dual_objective(X, ref.alphas)
                    <= dual_objective(X, smo.alphas) + 1e-6)

    def test_closed_form_two_points(self):
        point = np.array([0.6, 0.8])
        ref = brute_force_qp(np.stack([point, point]), nu=1.0)
        np.testing.assert_allclose(ref.alphas, [0.5, 0.5])

    def test_large_n_guarded(self):
        with pytest.raises(ValueError, match="n <= 20"):
            brute_force_qp(np.zeros((21, 2)), nu=0.5)


class TestNuProperty:
    def test_bounds_hold_across_nu(self):
        for nu in (0.05, 0.1, 0.25, 0.5):
            for seed in range(5):
                X = offset_cloud(seed=seed, n=120, m=4)
                model = train_ocsvm(X, nu=nu)
                outliers, svs = nu_property_report(model, X)
                n = len(X)
                assert outliers <= nu + 1.0 / n
                assert svs >= nu - 1.0 / n

    def test_loaded_model_rejected(self):
        X = offset_cloud(0, n=20, m=2)
        model = train_ocsvm(X, nu=0.2)
        model.alphas = None
        with pytest.raises(ValueError):
            nu_property_report(model, X)
