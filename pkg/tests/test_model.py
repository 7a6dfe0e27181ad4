"""MLP training, prediction, gradients, and JSON serialization."""

import dataclasses
import json

import numpy as np
import pytest

import beamsec as bs
from beamsec.autodiff import finite_difference_gradient
from beamsec.model import (ModelFormatError, ModelSpec, TrainConfig,
                           TrainingDivergedError, fit, init_model)


def small_spec():
    return ModelSpec(input_dim=6, hidden_dims=(8, 4), output_dim=3)


def test_init_model_shapes_and_determinism():
    m1 = init_model(small_spec(), seed=3)
    m2 = init_model(small_spec(), seed=3)
    assert m1.layer_dims == [6, 8, 4, 3]
    for a, b in zip(m1.weights, m2.weights):
        assert np.array_equal(a, b)
    m3 = init_model(small_spec(), seed=4)
    assert not np.array_equal(m1.weights[0], m3.weights[0])


def test_init_bounds_scale_with_fan_in():
    m = init_model(small_spec(), seed=0)
    for W, d_in in zip(m.weights, [6, 8, 4]):
        assert np.max(np.abs(W)) <= 1.0 / np.sqrt(d_in)
    for b in m.biases:
        assert np.all(b == 0.0)


def test_spec_validation():
    with pytest.raises(ValueError, match="output mode"):
        ModelSpec(4, (8,), 2, output="sigmoid")
    with pytest.raises(ValueError, match="temperature"):
        ModelSpec(4, (8,), 2, output="temperature-softmax", temperature=0.5)
    with pytest.raises(ValueError, match="activation"):
        ModelSpec(4, (8,), 2, hidden_activations=("gelu",))
    with pytest.raises(ValueError, match="activation tags"):
        ModelSpec(4, (8, 8), 2, hidden_activations=("relu",))


def test_hidden_activation_tags_change_outputs(rng):
    x = rng.uniform(-1, 1, (5, 6))
    relu_m = init_model(small_spec(), seed=1)
    tanh_m = init_model(dataclasses.replace(
        small_spec(), hidden_activations=("tanh", "tanh")), seed=1)
    assert not np.allclose(bs.predict(relu_m, x), bs.predict(tanh_m, x))


def test_predict_feature_width_mismatch():
    m = init_model(small_spec(), seed=0)
    with pytest.raises(ValueError, match="feature width"):
        bs.predict(m, np.ones((2, 5)))


def test_training_reduces_loss(tiny_dataset, tiny_model):
    X, Y = tiny_dataset.test_rows()
    mean, _ = bs.mse(Y, bs.predict(tiny_model, X))
    base = init_model(tiny_model.spec, seed=11)
    base_mean, _ = bs.mse(Y, bs.predict(base, X))
    assert mean < base_mean


def test_training_is_deterministic(tiny_dataset):
    spec = ModelSpec(tiny_dataset.X.shape[1], (16,), tiny_dataset.Y.shape[1])
    cfg = TrainConfig(epochs=3, seed=9)
    m1, h1 = bs.train(spec, tiny_dataset, cfg)
    m2, h2 = bs.train(spec, tiny_dataset, cfg)
    assert h1 == h2
    for a, b in zip(m1.weights, m2.weights):
        assert np.array_equal(a, b)


def test_sgd_optimizer_also_trains(tiny_dataset):
    spec = ModelSpec(tiny_dataset.X.shape[1], (16,), tiny_dataset.Y.shape[1])
    cfg = TrainConfig(epochs=5, seed=9, optimizer="sgd", learning_rate=0.05)
    _, history = bs.train(spec, tiny_dataset, cfg)
    assert history[-1] < history[0]


def test_divergence_raises(tiny_dataset):
    spec = ModelSpec(tiny_dataset.X.shape[1], (16,), tiny_dataset.Y.shape[1])
    cfg = TrainConfig(epochs=30, seed=9, optimizer="sgd", learning_rate=1e6)
    with pytest.raises(TrainingDivergedError, match="non-finite"):
        bs.train(spec, tiny_dataset, cfg)


def test_fit_does_not_mutate_input_model(tiny_dataset):
    model = init_model(ModelSpec(tiny_dataset.X.shape[1], (8,),
                                 tiny_dataset.Y.shape[1]), seed=2)
    before = [W.copy() for W in model.weights]
    X, Y = tiny_dataset.train_rows()
    fit(model, X, Y, TrainConfig(epochs=1, seed=2))
    for a, b in zip(model.weights, before):
        assert np.array_equal(a, b)


def test_train_requires_split():
    ds = bs.generate_scenario(dataclasses.replace(
        bs.PRESETS["I3_60-mini"], num_users=50, name="nosplit"))
    spec = ModelSpec(ds.X.shape[1], (8,), ds.Y.shape[1])
    with pytest.raises(ValueError, match="split"):
        bs.train(spec, ds, TrainConfig(epochs=1))


def test_input_gradient_matches_finite_differences(tiny_model, tiny_dataset):
    X, Y = tiny_dataset.test_rows()
    x, y = X[:1], Y[:1]
    grad = bs.loss_gradient_wrt_input(tiny_model, x, y)

    def f(xv):
        pred = bs.predict(tiny_model, xv.reshape(1, -1))
        return float(np.mean((pred - y) ** 2))

    numeric = finite_difference_gradient(f, x)
    denom = np.maximum(np.abs(numeric), 1e-8)
    assert np.max(np.abs(grad - numeric) / denom) < 1e-5


def test_batch_gradient_is_scaled_row_gradient(tiny_model, tiny_dataset):
    """Batch loss averages over rows, so each row's gradient is the
    single-sample gradient divided by the batch size."""
    X, Y = tiny_dataset.test_rows()
    batch = bs.loss_gradient_wrt_input(tiny_model, X[:4], Y[:4])
    single = bs.loss_gradient_wrt_input(tiny_model, X[:1], Y[:1])
    assert np.allclose(batch[0] * 4, single[0], rtol=1e-12)


def test_model_json_round_trip(tiny_model, tmp_path):
    p1 = tmp_path / "m1.json"
    p2 = tmp_path / "m2.json"
    bs.save_model(tiny_model, p1)
    loaded = bs.load_model(p1)
    for a, b in zip(loaded.weights, tiny_model.weights):
        assert np.array_equal(a, b)
    assert loaded.activations == tiny_model.activations
    bs.save_model(loaded, p2)
    assert p1.read_bytes() == p2.read_bytes()


def test_load_model_rejects_truncated(tiny_model, tmp_path):
    p = tmp_path / "m.json"
    bs.save_model(tiny_model, p)
    p.write_text(p.read_text()[:100])
    with pytest.raises(ModelFormatError, match="not valid model JSON"):
        bs.load_model(p)


def test_load_model_rejects_wrong_schema(tiny_model, tmp_path):
    p = tmp_path / "m.json"
    bs.save_model(tiny_model, p)
    doc = json.loads(p.read_text())
    doc["schema_version"] = 99
    p.write_text(json.dumps(doc))
    with pytest.raises(ModelFormatError, match="schema version"):
        bs.load_model(p)


def test_load_model_rejects_missing_fields(tmp_path):
    p = tmp_path / "m.json"
    p.write_text(json.dumps({"schema_version": 1, "layer_dims": [2, 2]}))
    with pytest.raises(ModelFormatError, match="malformed"):
        bs.load_model(p)


def test_train_config_validation():
    with pytest.raises(ValueError):
        TrainConfig(epochs=0)
    with pytest.raises(ValueError, match="optimizer"):
        TrainConfig(optimizer="lbfgs")
