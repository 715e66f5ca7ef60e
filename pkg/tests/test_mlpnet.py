import numpy as np
import pytest
from numpy.testing import assert_allclose

from interpcp import mlpnet
from interpcp.data import Dataset
from interpcp.exprdsl import complexity
from interpcp.mlpnet import MlpSpec


@pytest.mark.parametrize("widths, total", [((3, 60, 60, 1), 3961), ((3, 2, 1), 11), ((3, 60, 60, 2), 4022),
                                           ((3, 2, 2), 14)])
def test_param_counts(widths, total):
    spec = MlpSpec(widths)
    assert spec.param_count == total
    assert mlpnet.init_state(spec).param_count == total


def test_average_params_per_layer():
    c = complexity(MlpSpec((3, 60, 60, 2)), "avg_params_per_layer")
    assert_allclose(c.value, 4022 / 3)
    assert c.display == 1341
    assert complexity(MlpSpec((3, 2, 2)), "avg_params_per_layer").value == 7


@pytest.mark.parametrize("bad", [dict(layer_widths=(3, 1)), dict(layer_widths=(3, 0, 1)),
                                 dict(layer_widths=(3, 4, 1), dropout_rate=1.0),
                                 dict(layer_widths=(3, 4, 1), output_activation="tanh"),
                                 dict(layer_widths=(3, 4, 1), optimizer="rmsprop")])
def test_spec_validation(bad):
    with pytest.raises(ValueError):
        MlpSpec(**bad)


def test_zero_weight_network_outputs():
    for head, expect in (("sigmoid", [0.5]), ("softmax", [0.5, 0.5])):
        spec = MlpSpec((3, 4, len(expect)), output_activation=head)
        st = mlpnet.init_state(spec)
        for w in st.weights:
            w[:] = 0.0
        assert_allclose(mlpnet.predict(st, np.array([0.3, -2.0, 5.0])), expect)


@pytest.mark.parametrize("head, widths", [("sigmoid", (3, 6, 5, 1)), ("softmax", (4, 7, 2)),
                                          ("softmax", (2, 5, 5, 5, 2))])
def test_backprop_matches_finite_differences(head, widths):
    rng = np.random.default_rng(3)
    spec = MlpSpec(widths, output_activation=head)
    st = mlpnet.init_state(spec, rng)
    for b in st.biases:
        b[:] = rng.normal(0, 0.1, b.shape)
    n = 9
    X = rng.normal(size=(n, widths[0]))
    y = rng.uniform(size=n) if head == "sigmoid" else np.eye(2)[rng.integers(0, 2, n)]
    masks = [(rng.random((n, h)) < 0.8) / 0.8 for h in widths[1:-1]]
    _, gw, gb = mlpnet.loss_and_grads(st, X, y, masks)
    worst = 0.0
    for arrs, grads in ((st.weights, gw), (st.biases, gb)):
        for p, g in zip(arrs, grads):
            for idx in np.ndindex(p.shape):
                old = p[idx]
                p[idx] = old + 1e-6
                lp = mlpnet.loss_and_grads(st, X, y, masks)[0]
                p[idx] = old - 1e-6
                lm = mlpnet.loss_and_grads(st, X, y, masks)[0]
                p[idx] = old
                fd = (lp - lm) / 2e-6
                worst = max(worst, abs(g[idx] - fd) / max(1e-3, abs(fd)))
    assert worst <= 1e-4


def test_constant_target_is_learned():
    rng = np.random.default_rng(0)
    data = Dataset(rng.uniform(size=(200, 3)), np.full(200, 0.3), ("a", "b", "c"))
    st = mlpnet.train(MlpSpec((3, 8, 1), epochs=100), data)
    pred = mlpnet.predict(st, data.X)[:, 0]
    assert np.mean((pred - 0.3) ** 2) <= 1e-3
    assert np.all(np.isfinite(pred))


def test_training_is_deterministic():
    rng = np.random.default_rng(1)
    data = Dataset(rng.uniform(size=(50, 3)), rng.uniform(size=50), ("a", "b", "c"))
    s1 = mlpnet.train(MlpSpec((3, 5, 1), epochs=3, seed=9), data)
    s2 = mlpnet.train(MlpSpec((3, 5, 1), epochs=3, seed=9), data)
    for a, b in zip(s1.weights + s1.biases, s2.weights + s2.biases):
        assert np.array_equal(a, b)
    s3 = mlpnet.train(MlpSpec((3, 5, 1), epochs=3, seed=10), data)
    assert not np.array_equal(s1.weights[0], s3.weights[0])


def test_sgd_option_trains():
    rng = np.random.default_rng(2)
    x = rng.uniform(size=(200, 2))
    data = Dataset(x, 0.2 + 0.5 * x[:, 0], ("a", "b"))
    st = mlpnet.train(MlpSpec((2, 8, 1), epochs=50, optimizer="sgd", learning_rate=0.1, dropout_rate=0.0), data)
    assert st.history[-1] < st.history[0]


def test_softmax_classifier_separates_classes():
    rng = np.random.default_rng(4)
    x = rng.normal(size=(300, 2))
    y = np.eye(2)[(x[:, 0] + x[:, 1] > 0).astype(int)]
    st = mlpnet.train(MlpSpec((2, 16, 2), output_activation="softmax", epochs=30), Dataset(x, y, ("a", "b"), ("y0", "y1")))
    pred = mlpnet.predict(st, x)
    assert_allclose(pred.sum(axis=1), 1.0, atol=1e-12)
    assert np.mean(pred.argmax(1) == y.argmax(1)) > 0.95


def test_state_file_round_trip(tmp_path):
    spec = MlpSpec((3, 4, 2), output_activation="softmax", seed=5, optimizer="sgd")
    st = mlpnet.init_state(spec)
    st.biases[0][:] = [0.1, -0.2, 1 / 3, 1e-17]
    mlpnet.save_state(st, tmp_path / "m.txt")
    back = mlpnet.load_state(tmp_path / "m.txt")
    assert back.spec == spec
    for a, b in zip(st.weights + st.biases, back.weights + back.biases):
        assert np.array_equal(a, b)


def test_width_mismatch_raises():
    st = mlpnet.init_state(MlpSpec((3, 4, 1)))
    with pytest.raises(ValueError):
        mlpnet.predict(st, np.ones((2, 4)))
