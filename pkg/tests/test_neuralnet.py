import numpy as np
import pytest

from ringfit import neuralnet as nn
from ringfit.errors import InvalidInputError, InvalidParameterError


def random_network(rng, max_layers=4, max_units=10, dropout=0.0):
    n_layers = int(rng.integers(1, max_layers + 1))
    sizes = [int(rng.integers(1, max_units + 1)) for _ in range(n_layers + 1)]
    acts = tuple(rng.choice([nn.TANH, nn.LINEAR]) for _ in range(n_layers))
    model = nn.init(nn.NetworkSpec(tuple(sizes), acts, dropout_rate=dropout), rng)
    for b in model.biases:
        b[:] = rng.normal(scale=0.3, size=b.shape)
    return model


def finite_difference(model, x, y, h=1e-6, train=False, seed=None):
    """Central differences of the loss w.r.t. every parameter coordinate."""

    def loss():
        rng = None if seed is None else np.random.default_rng(seed)
        return nn.loss_and_gradients(model, x, y, train=train, rng=rng)[0]

    out = []
    for p in model.parameters():
        g = np.zeros_like(p)
        for idx in np.ndindex(p.shape):
            old = p[idx]
            p[idx] = old + h
            up = loss()
            p[idx] = old - h
            down = loss()
            p[idx] = old
            g[idx] = (up - down) / (2 * h)
        out.append(g)
    return out


class TestSpec:
    def test_registered_architectures(self):
        enc = nn.NetworkSpec.mlp([1000, 200, 100, 20, 8], final=nn.LINEAR)
        dec = nn.NetworkSpec.mlp([8, 20, 100, 200, 1000], final=nn.TANH)
        assert enc.activations == ("tanh", "tanh", "tanh", "linear")
        assert dec.activations == ("tanh",) * 4

    def test_invalid(self):
        with pytest.raises(InvalidParameterError):
            nn.NetworkSpec((5,), ())
        with pytest.raises(InvalidParameterError):
            nn.NetworkSpec((5, 0), ("tanh",))
        with pytest.raises(InvalidParameterError):
            nn.NetworkSpec((5, 3), ("tanh",), dropout_rate=1.0)
        with pytest.raises(InvalidParameterError):
            nn.TrainingConfig(adam_beta1=1.0)


class TestInit:
    def test_zero_input_gives_zero(self):
        model = nn.init(nn.NetworkSpec.mlp([6, 5, 4, 3], final=nn.TANH), np.random.default_rng(0))
        assert np.all(model.predict(np.zeros(6)) == 0.0)

    def test_deterministic(self):
        spec = nn.NetworkSpec.mlp([10, 7, 3])
        a = nn.init(spec, np.random.default_rng(1))
        b = nn.init(spec, np.random.default_rng(1))
        assert all(np.array_equal(p, q) for p, q in zip(a.parameters(), b.parameters()))
        assert all(np.all(bias == 0) for bias in a.biases)
        assert a.step == 0 and all(np.all(m == 0) for m in a.m)

    def test_glorot_scale(self):
        model = nn.init(nn.NetworkSpec.mlp([1000, 200, 100]), np.random.default_rng(2))
        target = np.sqrt(6.0 / 1200) / np.sqrt(3.0)
        assert abs(model.weights[0].std() - target) < 0.1 * target
        assert abs(model.weights[0].mean()) < 0.05 * target


class TestForward:
    def test_identity_layer(self):
        spec = nn.NetworkSpec((4, 4), (nn.LINEAR,))
        model = nn.NetworkModel(spec, [np.eye(4)], [np.zeros(4)])
        x = np.array([1.0, -2.0, 3.5, 0.25])
        assert np.array_equal(model.predict(x), x)

    def test_eval_ignores_rng_and_dropout(self):
        rng = np.random.default_rng(3)
        a = nn.init(nn.NetworkSpec.mlp([5, 8, 8, 2], dropout_rate=0.5), rng)
        b = nn.NetworkModel(nn.NetworkSpec.mlp([5, 8, 8, 2], dropout_rate=0.0), a.weights, a.biases)
        x = rng.normal(size=(3, 5))
        out1, _ = nn.forward(a, x, train=False, rng=np.random.default_rng(0))
        out2, _ = nn.forward(a, x, train=False, rng=np.random.default_rng(99))
        assert np.array_equal(out1, out2)
        assert np.array_equal(out1, b.predict(x))

    def test_inverted_dropout_expectation(self):
        rng = np.random.default_rng(4)
        model = nn.init(nn.NetworkSpec.mlp([3, 6, 1], dropout_rate=0.1), rng)
        x = rng.normal(size=3)
        hidden_eval = np.tanh(x @ model.weights[0] + model.biases[0])
        # the output is linear in the dropped hidden layer, so its mean over masks
        # must match eval mode
        xs = np.tile(x, (10_000, 1))
        out, cache = nn.forward(model, xs, train=True, rng=rng)
        dropped = cache["acts"][0] * cache["masks"][1]
        se = dropped.std(axis=0) / np.sqrt(len(xs))
        assert np.all(np.abs(dropped.mean(axis=0) - hidden_eval) < 3 * se + 1e-12)
        se_out = out.std() / np.sqrt(len(xs))
        assert abs(out.mean() - model.predict(x)[0]) < 3 * se_out

    def test_dimension_mismatch(self):
        model = nn.init(nn.NetworkSpec.mlp([4, 2]), np.random.default_rng(0))
        with pytest.raises(InvalidInputError):
            model.predict(np.zeros(5))
        with pytest.raises(InvalidInputError):
            nn.loss_and_gradients(model, np.zeros(4), np.zeros(3))


class TestGradients:
    def test_zero_at_minimum(self):
        model = random_network(np.random.default_rng(5))
        x = np.random.default_rng(6).normal(size=model.spec.layer_sizes[0])
        loss, grads = nn.loss_and_gradients(model, x, model.predict(x))
        assert loss == 0.0
        assert all(np.all(g == 0) for g in grads)

    @pytest.mark.parametrize("seed", range(50))
    def test_random_networks_match_finite_differences(self, seed):
        rng = np.random.default_rng(1000 + seed)
        model = random_network(rng)
        batch = int(rng.integers(1, 6))
        x = rng.normal(size=(batch, model.spec.layer_sizes[0]))
        y = rng.normal(size=(batch, model.spec.layer_sizes[-1]))
        _, grads = nn.loss_and_gradients(model, x, y)
        for g, fd in zip(grads, finite_difference(model, x, y)):
            np.testing.assert_allclose(g, fd, rtol=1e-5, atol=1e-8)

    def test_5_3_2_network(self):
        rng = np.random.default_rng(7)
        model = nn.init(nn.NetworkSpec.mlp([5, 3, 2]), rng)
        x, y = rng.normal(size=(4, 5)), rng.normal(size=(4, 2))
        _, grads = nn.loss_and_gradients(model, x, y)
        for g, fd in zip(grads, finite_difference(model, x, y)):
            np.testing.assert_allclose(g, fd, rtol=1e-5, atol=1e-8)

    def test_train_mode_uses_forward_mask(self):
        rng = np.random.default_rng(8)
        model = nn.init(nn.NetworkSpec.mlp([4, 6, 5, 3], dropout_rate=0.3), rng)
        x, y = rng.normal(size=(5, 4)), rng.normal(size=(5, 3))
        _, grads = nn.loss_and_gradients(model, x, y, train=True, rng=np.random.default_rng(123))
        fd = finite_difference(model, x, y, train=True, seed=123)
        for g, f in zip(grads, fd):
            np.testing.assert_allclose(g, f, rtol=1e-5, atol=1e-8)

    def test_quadratic_scaling_linear_net(self):
        rng = np.random.default_rng(9)
        model = nn.init(nn.NetworkSpec((3, 2), (nn.LINEAR,)), rng)
        x = rng.normal(size=(6, 3))
        out = model.predict(x)
        err = rng.normal(size=out.shape)
        base, _ = nn.loss_and_gradients(model, x, out + err)
        for c in (0.5, 2.0, 7.0):
            loss, _ = nn.loss_and_gradients(model, x, out + c * err)
            assert loss == pytest.approx(c * c * base, rel=1e-12)


class TestAdam:
    def test_zero_gradient(self):
        model = nn.init(nn.NetworkSpec.mlp([3, 2]), np.random.default_rng(0))
        before = [p.copy() for p in model.parameters()]
        nn.adam_step(model, [np.zeros_like(p) for p in model.parameters()], nn.TrainingConfig())
        assert all(np.array_equal(p, q) for p, q in zip(model.parameters(), before))
        assert model.step == 1

    def test_first_step_closed_form(self):
        spec = nn.NetworkSpec((1, 1), (nn.LINEAR,))
        for g in (3.0, -0.02, 1e-4):
            model = nn.NetworkModel(spec, [np.array([[0.5]])], [np.zeros(1)])
            cfg = nn.TrainingConfig(learning_rate=0.01)
            nn.adam_step(model, [np.array([[g]]), np.zeros(1)], cfg)
            expected = 0.5 - 0.01 * g / (abs(g) + 1e-8)
            assert model.weights[0][0, 0] == pytest.approx(expected, rel=1e-12)

    def test_symmetric_updates(self):
        spec = nn.NetworkSpec((2, 1), (nn.LINEAR,))
        model = nn.NetworkModel(spec, [np.array([[0.1], [0.1]])], [np.zeros(1)])
        rng = np.random.default_rng(1)
        for _ in range(10):
            g = rng.normal()
            nn.adam_step(model, [np.array([[g], [g]]), np.zeros(1)], nn.TrainingConfig())
        assert model.weights[0][0, 0] == model.weights[0][1, 0]


class TestTrain:
    @staticmethod
    def toy(seed=0):
        rng = np.random.default_rng(seed)
        x = rng.normal(size=(20, 4))
        w = rng.normal(size=(4, 1))
        return x, x @ w + 0.3

    def test_zero_epochs(self):
        model = nn.init(nn.NetworkSpec((4, 1), (nn.LINEAR,)), np.random.default_rng(0))
        before = model.copy()
        x, y = self.toy()
        _, losses, _ = nn.train(model, x, y, nn.TrainingConfig(epochs=0), np.random.default_rng(0))
        assert losses == []
        assert all(np.array_equal(p, q) for p, q in zip(model.parameters(), before.parameters()))

    @pytest.mark.parametrize("seed", [0, 1, 2, 3])
    def test_linear_regression_converges(self, seed):
        x, y = self.toy(seed)
        # closed-form least squares reaches zero residual on this noiseless toy
        design = np.hstack([x, np.ones((20, 1))])
        coef, *_ = np.linalg.lstsq(design, y, rcond=None)
        assert np.mean((design @ coef - y) ** 2) < 1e-20
        model = nn.init(nn.NetworkSpec((4, 1), (nn.LINEAR,), dropout_rate=0.0), np.random.default_rng(seed))
        cfg = nn.TrainingConfig(learning_rate=0.01, epochs=2000, batch_size=64)
        _, losses, _ = nn.train(model, x, y, cfg, np.random.default_rng(seed))
        assert losses[-1] < 1e-4
        assert losses[-1] < losses[0]
        np.testing.assert_allclose(model.weights[0], coef[:4], atol=1e-2)

    def test_deterministic(self):
        x, y = self.toy()
        spec = nn.NetworkSpec.mlp([4, 8, 1], dropout_rate=0.1)
        runs = []
        for _ in range(2):
            m = nn.init(spec, np.random.default_rng(5))
            nn.train(m, x, y, nn.TrainingConfig(epochs=20, batch_size=7), np.random.default_rng(6))
            runs.append(m)
        assert all(np.array_equal(p, q) for p, q in zip(runs[0].parameters(), runs[1].parameters()))

    def test_empty(self):
        model = nn.init(nn.NetworkSpec((4, 1), (nn.LINEAR,)), np.random.default_rng(0))
        with pytest.raises(InvalidInputError):
            nn.train(model, np.zeros((0, 4)), np.zeros((0, 1)), nn.TrainingConfig(), np.random.default_rng(0))
