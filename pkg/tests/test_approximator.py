import math

import numpy as np
import pytest

from rcdp import rng as rngmod
from rcdp.approximator import (FourierRidgeApproximator, MlpApproximator,
                               ReplayBuffer, RidgeApproximator,
                               make_approximator, sup_error)
from rcdp.linalg import direct_inverse


def fill_buffer(buf, X, Y):
    for x, y in zip(X, Y):
        buf.add(x, y)


class TestReplayBuffer:
    def test_shape_validation(self):
        buf = ReplayBuffer(2, 3)
        with pytest.raises(ValueError):
            buf.add(np.ones(3), np.ones(3))
        with pytest.raises(ValueError):
            buf.add(np.ones(2), np.ones(2))

    def test_append_only_growth(self):
        buf = ReplayBuffer(2, 1)
        for i in range(4):
            buf.add(np.ones(2), np.ones(1))
            assert len(buf) == i + 1


class TestRidge:
    def test_recovers_linear_map(self):
        rng = np.random.default_rng(0)
        phi = rng.standard_normal((4, 2))
        X = rng.uniform(-1, 1, size=(400, 4))
        Y = X @ phi
        ap = RidgeApproximator(4, 2, reg=1e-8)
        buf = ReplayBuffer(4, 2)
        fill_buffer(buf, X, Y)
        ap.fit_step(buf)
        np.testing.assert_allclose(ap._coef, phi, atol=1e-6)

    def test_single_pair_closed_form(self):
        x = np.array([0.5, -1.0])
        y = np.array([2.0])
        ap = RidgeApproximator(2, 1, reg=1.0)
        buf = ReplayBuffer(2, 1)
        buf.add(x, y)
        ap.fit_step(buf)
        oracle = direct_inverse(np.outer(x, x) + np.eye(2)) @ np.outer(x, y)
        np.testing.assert_allclose(ap._coef, oracle, atol=1e-10)

    def test_shrinkage_on_scalar_doubling_map(self):
        rng = np.random.default_rng(1)
        X = rng.uniform(-1, 1, size=(100, 1))
        Y = 2.0 * X
        ap = RidgeApproximator(1, 1, reg=1.0)
        buf = ReplayBuffer(1, 1)
        fill_buffer(buf, X, Y)
        ap.fit_step(buf)
        xtx = float(np.sum(X * X))
        shrink = xtx / (xtx + 1.0)
        assert ap.predict(np.array([3.0]))[0, 0] == pytest.approx(6.0 * shrink, abs=1e-8)
        assert ap.predict(np.array([3.0]))[0, 0] == pytest.approx(6.0, abs=0.2)

    def test_cold_start_predicts_zero(self):
        ap = RidgeApproximator(3, 2)
        np.testing.assert_array_equal(ap.predict(np.ones(3)), np.zeros((1, 2)))

    def test_incremental_matches_batch(self):
        rng = np.random.default_rng(2)
        X = rng.uniform(-1, 1, size=(60, 3))
        Y = rng.standard_normal((60, 2))
        incremental = RidgeApproximator(3, 2, reg=0.5)
        buf = ReplayBuffer(3, 2)
        for i in range(60):
            buf.add(X[i], Y[i])
            incremental.fit_step(buf)
        batch = direct_inverse(X.T @ X + 0.5 * np.eye(3)) @ X.T @ Y
        np.testing.assert_allclose(incremental._coef, batch, atol=1e-8)

    def test_empty_buffer_rejected(self):
        ap = RidgeApproximator(2, 1)
        with pytest.raises(ValueError):
            ap.fit_step(ReplayBuffer(2, 1))


class TestFourierRidge:
    def test_beats_plain_ridge_on_absolute_value(self):
        rng = np.random.default_rng(3)
        X = rng.uniform(-1, 1, size=(500, 1))
        Y = np.abs(X)
        ridge = RidgeApproximator(1, 1, reg=1.0)
        fourier = FourierRidgeApproximator(1, 1, reg=1.0,
                                           rng=np.random.default_rng(0))
        for ap in (ridge, fourier):
            buf = ReplayBuffer(1, 1)
            fill_buffer(buf, X, Y)
            ap.fit_step(buf)
        rmse = {type(ap).__name__: float(np.sqrt(np.mean((ap.predict(X) - Y) ** 2)))
                for ap in (ridge, fourier)}
        assert rmse["FourierRidgeApproximator"] < rmse["RidgeApproximator"]

    def test_lengthscale_frozen_after_first_fit(self):
        ap = FourierRidgeApproximator(2, 1, rng=np.random.default_rng(0))
        buf = ReplayBuffer(2, 1)
        buf.add(np.array([0.1, 0.1]), np.ones(1))
        ap.fit_step(buf)
        scale = ap._input_scale
        buf.add(np.array([100.0, 100.0]), np.ones(1))
        ap.fit_step(buf)
        assert ap._input_scale == scale

    def test_requires_enough_features(self):
        with pytest.raises(ValueError):
            FourierRidgeApproximator(10, 1, num_features=5)

    def test_deterministic_given_rng(self):
        preds = []
        for _ in range(2):
            ap = FourierRidgeApproximator(2, 1, rng=np.random.default_rng(7))
            buf = ReplayBuffer(2, 1)
            buf.add(np.array([0.2, -0.1]), np.array([0.5]))
            ap.fit_step(buf)
            preds.append(ap.predict(np.array([0.15, 0.05])))
        np.testing.assert_array_equal(preds[0], preds[1])


class TestMlp:
    def test_cold_start_predicts_zero(self):
        ap = MlpApproximator(3, 2, rng=np.random.default_rng(0))
        np.testing.assert_array_equal(ap.predict(np.ones(3)), np.zeros((1, 2)))

    def test_fits_small_linear_problem(self):
        rng = np.random.default_rng(4)
        X = rng.uniform(-1, 1, size=(64, 2))
        Y = X @ np.array([[1.0], [-0.5]])
        ap = MlpApproximator(2, 1, lr=1e-2, epochs_per_round=1,
                             rng=np.random.default_rng(0))
        buf = ReplayBuffer(2, 1)
        fill_buffer(buf, X, Y)
        before = float(np.mean((ap.predict(X) - Y) ** 2))
        for _ in range(300):
            ap.fit_step(buf)
        after = float(np.mean((ap.predict(X) - Y) ** 2))
        assert after < 0.1 * before

    def test_parameters_stay_finite(self):
        ap = MlpApproximator(2, 1, rng=np.random.default_rng(0))
        buf = ReplayBuffer(2, 1)
        buf.add(np.ones(2), np.ones(1))
        for _ in range(50):
            ap.fit_step(buf)
        for v in ap._params.values():
            assert np.all(np.isfinite(v))


class TestSupError:
    def test_self_comparison_is_zero(self):
        ap = RidgeApproximator(1, 1)
        grid = np.linspace(-1, 1, 11)[:, None]
        assert sup_error(ap, lambda g: ap.predict(g), grid) == 0.0

    def test_linear_truth_small_error(self):
        rng = np.random.default_rng(5)
        phi = np.array([[0.7], [-0.3]])
        X = rng.uniform(-math.pi, math.pi, size=(1000, 2))
        Y = X @ phi + rng.normal(0, 0.01, size=(1000, 1))
        ap = RidgeApproximator(2, 1, reg=1.0)
        buf = ReplayBuffer(2, 1)
        fill_buffer(buf, X, Y)
        ap.fit_step(buf)
        grid = rng.uniform(-math.pi, math.pi, size=(200, 2))
        assert sup_error(ap, lambda g: g @ phi, grid) < 0.05

    def test_empty_grid_rejected(self):
        ap = RidgeApproximator(1, 1)
        with pytest.raises(ValueError):
            sup_error(ap, lambda g: g, np.zeros((0, 1)))

    def test_error_shrinks_as_samples_double(self):
        # root-t decay signature: quadrupling the sample count should
        # roughly halve the error of ridge on a noisy linear target
        ratios = []
        for seed in range(20):
            rng = np.random.default_rng(seed)
            phi = rng.standard_normal((5, 3))
            grid = rng.uniform(-math.pi, math.pi, size=(100, 5))
            errs = []
            for n in (400, 1600):
                X = rng.uniform(-math.pi, math.pi, size=(n, 5))
                Y = X @ phi + rng.normal(0, 1.0, size=(n, 3))
                ap = RidgeApproximator(5, 3, reg=1.0)
                buf = ReplayBuffer(5, 3)
                fill_buffer(buf, X, Y)
                ap.fit_step(buf)
                errs.append(sup_error(ap, lambda g: g @ phi, grid))
            ratios.append(errs[0] / errs[1])
        assert 1.5 <= float(np.mean(ratios)) <= 3.0


class TestFactory:
    def test_known_kinds(self):
        assert isinstance(make_approximator("ridge", 2, 1), RidgeApproximator)
        assert isinstance(make_approximator("fourier_ridge", 2, 1),
                          FourierRidgeApproximator)
        assert isinstance(make_approximator("mlp", 2, 1), MlpApproximator)

    def test_unknown_kind(self):
        with pytest.raises(ValueError):
            make_approximator("spline", 2, 1)

    def test_get_params_echoes_constructor(self):
        ap = FourierRidgeApproximator(3, 2, reg=0.5, num_features=64)
        params = ap.get_params()
        assert params["num_features"] == 64
        assert params["reg"] == 0.5
        assert params["dx"] == 3 and params["dy"] == 2
