import numpy as np
import pytest

from enose import features as ft
from enose import mlp
from enose.modelio import load_model, save_model
from enose.preprocess import fit_standardizer
from enose.svm import SvmParams, svm_predict, svm_train_multiclass


def test_header_and_unknown_kind(tmp_path):
    path = tmp_path / "junk.model"
    path.write_text("not a model\n")
    with pytest.raises(ValueError, match="not a model file"):
        load_model(path)
    path.write_text("enose-model v9 pca\n")
    with pytest.raises(ValueError, match="version"):
        load_model(path)
    with pytest.raises(TypeError):
        save_model(object(), path)


def test_standardizer_round_trip(tmp_path):
    rng = np.random.default_rng(0)
    x = rng.normal(3, 2, (10, 4))
    x[:, 2] = 7.0
    std = fit_standardizer(x)
    path = tmp_path / "std.model"
    save_model(std, path)
    again = load_model(path)
    assert np.array_equal(std.mean, again.mean)
    assert np.array_equal(std.std, again.std)
    assert np.array_equal(std.constant, again.constant)
    assert np.array_equal(std.transform(x), again.transform(x))


def test_pca_round_trip(tmp_path):
    rng = np.random.default_rng(1)
    x = rng.normal(0, 1, (20, 5))
    model = ft.pca_fit(x)
    path = tmp_path / "pca.model"
    save_model(model, path)
    again = load_model(path)
    assert again.retained_k == model.retained_k
    assert np.array_equal(again.eigenvalues, model.eigenvalues)
    assert np.array_equal(ft.pca_transform(model, x), ft.pca_transform(again, x))
    assert path.read_text().startswith("enose-model v1 pca\n")


def test_kpca_round_trip(tmp_path):
    rng = np.random.default_rng(2)
    x = rng.normal(0, 1, (12, 3))
    model = ft.kpca_fit(x)
    path = tmp_path / "kpca.model"
    save_model(model, path)
    again = load_model(path)
    probe = rng.normal(0, 1, (4, 3))
    assert np.array_equal(ft.kpca_transform(model, probe),
                          ft.kpca_transform(again, probe))


def test_svm_round_trip(tmp_path):
    rng = np.random.default_rng(3)
    x = np.vstack([rng.normal(0, 0.4, (10, 2)), rng.normal(3, 0.4, (10, 2)),
                   rng.normal((0, 3), 0.4, (10, 2))])
    y = np.repeat([1, 2, 3], 10)
    model = svm_train_multiclass(x, y, SvmParams())
    path = tmp_path / "svm.model"
    save_model(model, path)
    again = load_model(path)
    probe = rng.normal(1.5, 2.0, (30, 2))
    assert np.array_equal(svm_predict(model, probe), svm_predict(again, probe))
    for (pa, ma), (pb, mb) in zip(model.machines, again.machines):
        assert pa == pb
        assert ma.bias == mb.bias
        assert np.array_equal(ma.dual_coef, mb.dual_coef)


def test_mlp_round_trip(tmp_path):
    rng = np.random.default_rng(4)
    x = rng.normal(0, 1, (15, 3))
    t = rng.uniform(0, 50, 15)
    model = mlp.mlp_train(x, t, mlp.MlpConfig(input_dim=3, epochs=20, seed=2))
    path = tmp_path / "mlp.model"
    save_model(model, path)
    again = load_model(path)
    assert np.array_equal(mlp.mlp_forward(model, x), mlp.mlp_forward(again, x))
    assert np.array_equal(model.loss_trace, again.loss_trace)
    assert again.config == model.config
