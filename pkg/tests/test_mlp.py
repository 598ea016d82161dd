import math

import numpy as np
import pytest

from enose import mlp
from enose.preprocess import Standardizer


def identity_standardizer(d):
    return Standardizer(mean=np.zeros(d), std=np.ones(d),
                        constant=np.zeros(d, dtype=bool))


def hand_model(weights, biases, d, t_min=0.0, t_scale=1.0):
    ws = tuple(np.asarray(w, dtype=float) for w in weights)
    bs = tuple(np.asarray(b, dtype=float) for b in biases)
    cfg = mlp.MlpConfig(input_dim=d, hidden_layers=tuple(w.shape[1] for w in ws[:-1]))
    return mlp.MlpModel(weights=ws, biases=bs,
                        standardizer=identity_standardizer(d),
                        target_min=t_min, target_scale=t_scale,
                        loss_trace=np.array([]), config=cfg)


class TestForward:
    def test_zero_network_with_zero_offset(self):
        model = hand_model(
            weights=[np.zeros((3, 4)), np.zeros((4, 1))],
            biases=[np.zeros(4), np.zeros(1)],
            d=3, t_min=0.0, t_scale=7.5)
        assert mlp.mlp_forward(model, np.zeros((1, 3)))[0] == 0.0

    def test_hand_computed_sigmoid_chain(self):
        w1, b1, w2, b2 = 0.7, -0.2, 1.3, 0.4
        model = hand_model(
            weights=[np.array([[w1]]), np.array([[w2]])],
            biases=[np.array([b1]), np.array([b2])],
            d=1, t_min=1.0, t_scale=2.0)
        x = 0.5
        hidden = 1.0 / (1.0 + math.exp(-(w1 * x + b1)))
        expected = (w2 * hidden + b2) * 2.0 + 1.0
        assert mlp.mlp_forward(model, [[x]])[0] == pytest.approx(expected, abs=1e-12)

    def test_pure_function(self):
        rng = np.random.default_rng(0)
        x = rng.normal(0, 1, (6, 4))
        t = rng.uniform(0, 10, 6)
        model = mlp.mlp_train(x, t, mlp.MlpConfig(input_dim=4, epochs=5, seed=1))
        assert np.array_equal(mlp.mlp_forward(model, x), mlp.mlp_forward(model, x))

    def test_dimension_mismatch_rejected(self):
        model = hand_model([np.zeros((2, 1))], [np.zeros(1)], d=2)
        with pytest.raises(ValueError):
            mlp.mlp_forward(model, np.zeros((1, 3)))


class TestTraining:
    def test_constant_target_converges(self):
        rng = np.random.default_rng(2)
        x = rng.normal(0, 1, (10, 2))
        t = np.full(10, 42.0)
        model = mlp.mlp_train(x, t, mlp.MlpConfig(input_dim=2, hidden_layers=(16,),
                                                  lr=0.3, epochs=2000, seed=0))
        preds = mlp.mlp_forward(model, x)
        assert float(np.mean((preds - t) ** 2)) < 1e-6

    def test_noiseless_linear_map(self):
        x = np.linspace(0.0, 1.0, 16).reshape(-1, 1)
        t = 2.0 * x[:, 0]
        cfg = mlp.MlpConfig(input_dim=1, hidden_layers=(16,), lr=0.05,
                            epochs=5000, seed=3)
        model = mlp.mlp_train(x, t, cfg)
        err = np.abs(mlp.mlp_forward(model, x) - t)
        assert err.max() < 0.02 * (t.max() - t.min())

    def test_bit_identical_reproducibility(self):
        rng = np.random.default_rng(4)
        x = rng.normal(0, 1, (25, 5))
        t = rng.uniform(0, 100, 25)
        cfg = mlp.MlpConfig(input_dim=5, epochs=40, seed=9)
        a = mlp.mlp_train(x, t, cfg)
        b = mlp.mlp_train(x, t, cfg)
        for wa, wb in zip(a.weights, b.weights):
            assert np.array_equal(wa, wb)
        for ba, bb in zip(a.biases, b.biases):
            assert np.array_equal(ba, bb)
        assert np.array_equal(a.loss_trace, b.loss_trace)

    def test_loss_trace_finite_and_non_increasing_when_gentle(self):
        x = np.linspace(-1.0, 1.0, 40).reshape(-1, 1)
        t = 3.0 * x[:, 0] + 5.0
        cfg = mlp.MlpConfig(input_dim=1, lr=1e-3, epochs=120, seed=0)
        model = mlp.mlp_train(x, t, cfg)
        trace = model.loss_trace
        assert np.all(np.isfinite(trace))
        tail = trace[10:]
        assert np.all(np.diff(tail) <= 1e-9)

    def test_divergence_aborts_with_diagnostics(self):
        rng = np.random.default_rng(5)
        x = rng.normal(0, 1, (10, 2))
        t = rng.uniform(0, 1, 10)
        with pytest.raises(RuntimeError, match="non-finite"):
            mlp.mlp_train(x, t, mlp.MlpConfig(input_dim=2, lr=1e12, epochs=50,
                                              seed=0))

    def test_shape_validation(self):
        with pytest.raises(ValueError):
            mlp.mlp_train(np.zeros((4, 3)), np.zeros(5),
                          mlp.MlpConfig(input_dim=3))
        with pytest.raises(ValueError):
            mlp.mlp_train(np.zeros((4, 3)), np.zeros(4),
                          mlp.MlpConfig(input_dim=2))
        with pytest.raises(ValueError):
            mlp.MlpConfig(input_dim=3, lr=0.0)


class TestGradients:
    @pytest.mark.parametrize("seed", range(5))
    def test_analytic_matches_central_differences(self, seed):
        rng = np.random.default_rng(seed)
        sizes = (4, 6, 1)
        weights = [rng.normal(0, 0.5, (a, b))
                   for a, b in zip(sizes, sizes[1:])]
        biases = [rng.normal(0, 0.2, b) for b in sizes[1:]]
        x = rng.normal(0, 1, (3, 4))
        y = rng.uniform(0, 1, 3)

        _, gw, gb = mlp.loss_and_grads(weights, biases, x, y)
        h = 1e-5
        worst = 0.0
        for layer in range(len(weights)):
            for arr, grads in ((weights, gw), (biases, gb)):
                flat = arr[layer].reshape(-1)
                gflat = grads[layer].reshape(-1)
                for idx in range(flat.size):
                    orig = flat[idx]
                    flat[idx] = orig + h
                    lp, _, _ = mlp.loss_and_grads(weights, biases, x, y)
                    flat[idx] = orig - h
                    lm, _, _ = mlp.loss_and_grads(weights, biases, x, y)
                    flat[idx] = orig
                    numeric = (lp - lm) / (2 * h)
                    denom = max(abs(numeric) + abs(gflat[idx]), 1e-8)
                    worst = max(worst, abs(numeric - gflat[idx]) / denom)
        assert worst < 1e-4


class TestEvaluate:
    def test_perfect_predictor(self):
        model = hand_model([np.array([[1.0]])], [np.zeros(1)], d=1)
        x = np.array([[1.0], [2.0], [3.0]])
        out = mlp.evaluate_regression(model, x, [1.0, 2.0, 3.0])
        assert out == {"rmse_ppm": 0.0, "mae_ppm": 0.0, "r2": 1.0}

    def test_mean_predictor_scores_zero_r2(self):
        targets = np.array([1.0, 2.0, 3.0])
        model = hand_model(
            weights=[np.zeros((1, 2)), np.zeros((2, 1))],
            biases=[np.zeros(2), np.zeros(1)],
            d=1, t_min=float(targets.mean()), t_scale=1.0)
        out = mlp.evaluate_regression(model, np.zeros((3, 1)), targets)
        assert out["r2"] == pytest.approx(0.0, abs=1e-12)

    def test_hand_three_point_example(self):
        model = hand_model([np.array([[1.0]])], [np.zeros(1)], d=1)
        x = np.array([[1.0], [2.0], [4.0]])
        out = mlp.evaluate_regression(model, x, [1.0, 2.0, 3.0])
        assert out["rmse_ppm"] == pytest.approx(math.sqrt(1.0 / 3.0), abs=1e-12)
        assert out["mae_ppm"] == pytest.approx(1.0 / 3.0, abs=1e-12)

    def test_zero_variance_targets_leave_r2_undefined(self):
        model = hand_model([np.array([[1.0]])], [np.zeros(1)], d=1)
        out = mlp.evaluate_regression(model, [[1.0], [2.0]], [5.0, 5.0])
        assert out["r2"] is None

    def test_empty_test_set_rejected(self):
        model = hand_model([np.array([[1.0]])], [np.zeros(1)], d=1)
        with pytest.raises(ValueError):
            mlp.evaluate_regression(model, np.zeros((0, 1)), [])
