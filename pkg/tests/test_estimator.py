import math

import numpy as np
import pytest

from rcdp.environment import logistic
from rcdp.estimator import (NewtonDivergenceError, PreferenceEstimator,
                            confidence_radius)


def bisect_scalar(func, lo, hi, tol=1e-12):
    """1-D bisection oracle for a monotone root."""
    flo = func(lo)
    assert flo * func(hi) <= 0
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if func(mid) * flo <= 0:
            hi = mid
        else:
            lo = mid
        if hi - lo < tol:
            break
    return 0.5 * (lo + hi)


class TestWeights:
    def test_norm_below_threshold(self):
        est = PreferenceEstimator(2, alpha=0.5)
        # V = I, dz with ||dz|| = 0.1
        assert est.compute_weight(np.array([0.1, 0.0])) == 1.0

    def test_clipped_weight(self):
        est = PreferenceEstimator(2, alpha=0.25)
        assert est.compute_weight(np.array([0.5, 0.0])) == pytest.approx(0.5)

    def test_zero_direction(self):
        est = PreferenceEstimator(3, alpha=0.1)
        assert est.compute_weight(np.zeros(3)) == 1.0

    def test_unweighted_limit(self):
        est = PreferenceEstimator(2, alpha=math.inf)
        assert est.compute_weight(np.array([100.0, 0.0])) == 1.0

    def test_soft_constraint_identity_on_random_inputs(self):
        rng = np.random.default_rng(0)
        for _ in range(200):
            d = int(rng.integers(1, 8))
            est = PreferenceEstimator(d, alpha=float(rng.uniform(0.05, 2.0)))
            for _ in range(int(rng.integers(0, 10))):
                est.observe_selection(len(est.records) + 1, rng.standard_normal(d))
            dz = rng.standard_normal(d)
            norm = est.V.mahalanobis_inv(dz)
            w = est.compute_weight(dz)
            # the weighted norm equals min(norm, sqrt(alpha * norm)) and is
            # capped by max(alpha, norm); when clipped, w * norm == alpha
            assert math.sqrt(w) * norm == pytest.approx(
                min(norm, math.sqrt(est.alpha * norm)), abs=1e-9)
            assert math.sqrt(w) * norm <= max(est.alpha, norm) + 1e-9
            if w < 1.0:
                assert w * norm == pytest.approx(est.alpha, abs=1e-9)


class TestDesignMatrices:
    def test_phantom_diagonal_example(self):
        est = PreferenceEstimator(2, lam=1.0, kappa=0.1, alpha=math.inf)
        est.observe_selection(1, np.array([1.0, 0.0]))
        np.testing.assert_allclose(est.V.mat, np.diag([1.1, 1.0]))

    def test_zero_direction_leaves_v_unchanged(self):
        est = PreferenceEstimator(2)
        est.observe_selection(1, np.zeros(2))
        np.testing.assert_allclose(est.V.mat, np.eye(2))

    def test_trace_accounting_oracle(self):
        rng = np.random.default_rng(1)
        d, lam, kappa = 5, 0.7, 0.1966
        est = PreferenceEstimator(d, lam=lam, kappa=kappa, alpha=0.4)
        acc = 0.0
        for t in range(1, 80):
            dz = rng.standard_normal(d) * 0.5
            w = est.observe_selection(t, dz)
            acc += w * float(dz @ dz)
        assert np.trace(est.V.mat) == pytest.approx(d * lam + kappa * acc, rel=1e-10)

    def test_w_unchanged_without_arrivals(self):
        est = PreferenceEstimator(3)
        est.observe_selection(1, np.ones(3))
        np.testing.assert_allclose(est.W.mat, np.eye(3))

    def test_zero_delay_world_w_equals_v(self):
        rng = np.random.default_rng(2)
        est = PreferenceEstimator(4, kappa=0.2, alpha=0.5)
        for t in range(1, 60):
            est.observe_selection(t, rng.standard_normal(4))
            est.arrival_update(t, int(rng.integers(0, 2)))
        assert np.max(np.abs(est.V.mat - est.W.mat)) <= 1e-9

    def test_starvation_keeps_w_at_prior(self):
        rng = np.random.default_rng(3)
        est = PreferenceEstimator(3, lam=1.5)
        for t in range(1, 40):
            est.observe_selection(t, rng.standard_normal(3))
        np.testing.assert_allclose(est.W.mat, 1.5 * np.eye(3))
        assert est.min_eig_v_minus_w() >= -1e-9

    def test_psd_ordering_along_random_run(self):
        rng = np.random.default_rng(4)
        est = PreferenceEstimator(4, alpha=0.3)
        pending = []
        for t in range(1, 120):
            est.observe_selection(t, rng.standard_normal(4))
            pending.append(t)
            if rng.random() < 0.4 and pending:
                est.arrival_update(pending.pop(0), int(rng.integers(0, 2)))
            assert est.min_eig_v_minus_w() >= -1e-9

    def test_double_arrival_rejected(self):
        est = PreferenceEstimator(2)
        est.observe_selection(1, np.ones(2))
        est.arrival_update(1, 1)
        with pytest.raises(ValueError):
            est.arrival_update(1, 1)

    def test_non_phantom_grows_both_on_arrival(self):
        est = PreferenceEstimator(2, kappa=0.1, alpha=math.inf, phantom=False)
        est.observe_selection(1, np.array([1.0, 0.0]))
        np.testing.assert_allclose(est.V.mat, np.eye(2))
        est.arrival_update(1, 1)
        np.testing.assert_allclose(est.V.mat, np.diag([1.1, 1.0]))
        np.testing.assert_allclose(est.W.mat, np.diag([1.1, 1.0]))


class TestMle:
    def test_no_feedback_gives_zero(self):
        est = PreferenceEstimator(3)
        est.observe_selection(1, np.ones(3))
        np.testing.assert_array_equal(est.solve_newton(), np.zeros(3))

    def test_matches_scalar_bisection_oracle(self):
        est = PreferenceEstimator(1, lam=1.0, kappa=0.25, alpha=math.inf)
        est.observe_selection(1, np.array([0.4]))
        est.arrival_update(1, 1)
        theta = est.solve_newton()
        root = bisect_scalar(lambda th: th + (logistic(0.4 * th) - 1.0) * 0.4, 0.0, 1.0)
        assert theta[0] == pytest.approx(root, abs=1e-8)

    def test_estimating_equation_residual_on_random_instances(self):
        rng = np.random.default_rng(5)
        for trial in range(100):
            d = int(rng.integers(1, 11))
            n = int(rng.integers(1, 201))
            est = PreferenceEstimator(d, lam=1.0, alpha=float(rng.uniform(0.2, 5.0)))
            theta_true = rng.standard_normal(d)
            theta_true /= np.linalg.norm(theta_true)
            for t in range(1, n + 1):
                dz = rng.standard_normal(d) * 0.5
                est.observe_selection(t, dz)
                est.arrival_update(t, int(rng.random() < logistic(theta_true @ dz)))
            theta = est.solve_newton()
            recs = [r for r in est.records.values() if r.arrived]
            resid = est.lam * theta + sum(
                r.weight * (logistic(theta @ r.dz) - r.outcome) * r.dz for r in recs)
            assert np.linalg.norm(resid) <= 1e-8

    def test_newton_divergence_error_carries_residual(self):
        err = NewtonDivergenceError(0.5, 100)
        assert err.residual == 0.5

    def test_streaming_close_to_batch_on_clean_instance(self):
        diffs = []
        for seed in range(10):
            rng = np.random.default_rng(seed)
            d = 5
            stream = PreferenceEstimator(d, kappa=0.1966, alpha=math.inf)
            batch = PreferenceEstimator(d, kappa=0.1966, alpha=math.inf)
            theta_true = rng.standard_normal(d)
            theta_true /= np.linalg.norm(theta_true)
            for t in range(1, 401):
                dz = rng.standard_normal(d) * 0.4
                o = int(rng.random() < logistic(theta_true @ dz))
                for est in (stream, batch):
                    est.observe_selection(t, dz)
                rec = stream.arrival_update(t, o)
                stream.streaming_step(rec)
                batch.arrival_update(t, o)
            batch.solve_newton()
            diffs.append(float(np.linalg.norm(stream.theta - batch.theta)))
        assert float(np.mean(diffs)) <= 0.2


class TestConfidenceRadius:
    def test_formula_oracle_at_unit_scale(self):
        beta = confidence_radius(t=1, d=1, lam=1.0, delta=1.0 / math.e,
                                 m_bound=1.0, alpha=0.0, c_budget=0.0, d_budget=0.0)
        assert beta == pytest.approx(0.5 * math.sqrt(1.0 + math.log(2.0)) + 1.0, abs=1e-9)
        assert beta == pytest.approx(1.6506, abs=5e-4)

    def test_monotone_in_t(self):
        vals = [confidence_radius(t, 4, 1.0, 0.05, 1.0, 0.1, 5.0, 10.0)
                for t in range(1, 500)]
        assert all(b >= a for a, b in zip(vals, vals[1:]))

    def test_budget_cancellation(self):
        d, c, dd = 9, 25.0, 100.0
        alpha = math.sqrt(d) / (c + dd)
        with_budgets = confidence_radius(10, d, 1.0, 0.05, 1.0, alpha, c, dd)
        without = confidence_radius(10, d, 1.0, 0.05, 1.0, 0.0, 0.0, 0.0)
        assert with_budgets - without == pytest.approx(math.sqrt(d), abs=1e-12)

    def test_invalid_inputs(self):
        with pytest.raises(ValueError):
            confidence_radius(0, 1, 1.0, 0.05, 1.0, 0.0, 0.0, 0.0)
        with pytest.raises(ValueError):
            confidence_radius(1, 1, 1.0, 1.5, 1.0, 0.0, 0.0, 0.0)
