import numpy as np
import pytest

from rislink.learn import (AdamState, Mlp, adam_step, backward, check_gradients,
                           forward, mlp_init, soft_update)


def _manual_net(weights, biases, activations):
    params = {}
    sizes = [weights[0].shape[0]]
    for i, (w, b) in enumerate(zip(weights, biases)):
        params[f"w{i}"] = np.asarray(w, dtype=float)
        params[f"b{i}"] = np.asarray(b, dtype=float)
        sizes.append(w.shape[1])
    return Mlp(tuple(sizes), tuple(activations), params)


def test_forward_zero_net_outputs_zero():
    net = _manual_net([np.zeros((3, 2))], [np.zeros(2)], ["identity"])
    y, _ = forward(net, np.ones(3))
    np.testing.assert_array_equal(y, np.zeros(2))


def test_forward_scalar_affine():
    net = _manual_net([np.array([[2.0]])], [np.array([1.0])], ["identity"])
    y, _ = forward(net, np.array([3.0]))
    assert y[0] == pytest.approx(7.0)


def test_forward_pure():
    net = mlp_init((4, 8, 2), ("relu", "tanh"), np.random.default_rng(0))
    x = np.random.default_rng(1).normal(0, 1, 4)
    y1, _ = forward(net, x)
    y2, _ = forward(net, x)
    np.testing.assert_array_equal(y1, y2)


def test_forward_rejects_bad_width():
    net = mlp_init((4, 2), ("identity",), np.random.default_rng(0))
    with pytest.raises(ValueError):
        forward(net, np.ones(3))


def test_backward_zero_upstream():
    net = mlp_init((3, 5, 2), ("relu", "identity"), np.random.default_rng(0))
    y, tape = forward(net, np.ones(3))
    grads, dx = backward(net, tape, np.zeros(2))
    assert all(np.all(g == 0) for g in grads.values())
    np.testing.assert_array_equal(dx, np.zeros(3))


def test_backward_linear_layer_exact():
    net = _manual_net([np.array([[1.0, 0.0], [0.0, 1.0]])], [np.zeros(2)], ["identity"])
    x = np.array([2.0, -1.0])
    _, tape = forward(net, x)
    upstream = np.array([0.5, 3.0])
    grads, dx = backward(net, tape, upstream)
    np.testing.assert_allclose(grads["w0"], np.outer(x, upstream))
    np.testing.assert_allclose(grads["b0"], upstream)
    np.testing.assert_allclose(dx, upstream)  # identity weights


def test_backward_matches_finite_differences():
    rng = np.random.default_rng(3)
    net = mlp_init((6, 10, 8, 3), ("relu", "tanh", "identity"), rng)
    x = rng.normal(0, 1, (5, 6))
    u = rng.normal(0, 1, (5, 3))
    _, tape = forward(net, x)
    grads, _ = backward(net, tape, u)

    def loss(params):
        y, _ = forward(Mlp(net.sizes, net.activations, params), x)
        return float((y * u).sum())

    assert check_gradients(loss, net.params, grads, n_samples=150, rng=0) < 1e-4


def test_backward_linearity_in_upstream():
    rng = np.random.default_rng(4)
    net = mlp_init((3, 4, 2), ("tanh", "identity"), rng)
    x = rng.normal(0, 1, 3)
    _, tape = forward(net, x)
    u = rng.normal(0, 1, 2)
    g1, _ = backward(net, tape, u)
    g2, _ = backward(net, tape, 2.0 * u)
    for k in g1:
        np.testing.assert_allclose(g2[k], 2.0 * g1[k], rtol=1e-12)


def test_adam_zero_grads_no_change():
    params = {"w": np.array([1.0, 2.0])}
    grads = {"w": np.zeros(2)}
    state = AdamState(lr=0.1)
    new, _ = adam_step(params, grads, state)
    np.testing.assert_array_equal(new["w"], params["w"])


def test_adam_first_step_closed_form():
    g = np.array([0.3, -2.0, 1e-4])
    params = {"w": np.zeros(3)}
    state = AdamState(lr=0.01)
    new, st = adam_step(params, {"w": g}, state)
    # bias-corrected first step: -lr * g / (|g| + eps)
    expected = -0.01 * g / (np.abs(g) + state.eps)
    np.testing.assert_allclose(new["w"], expected, rtol=1e-12)
    assert st.step == 1


def test_adam_deterministic_trajectories():
    rng = np.random.default_rng(5)
    g_seq = [{"w": rng.normal(0, 1, 4)} for _ in range(10)]

    def run():
        params = {"w": np.ones(4)}
        state = AdamState(lr=0.05, weight_decay=0.01)
        for g in g_seq:
            params, state = adam_step(params, g, state)
        return params["w"]

    np.testing.assert_array_equal(run(), run())


def test_adamw_decay_touches_only_grad_keys():
    params = {"a": np.ones(2), "b": np.ones(2)}
    state = AdamState(lr=0.1, weight_decay=0.5)
    new, _ = adam_step(params, {"a": np.zeros(2)}, state)
    assert np.all(new["a"] < 1.0)  # decayed
    np.testing.assert_array_equal(new["b"], params["b"])  # frozen


def test_soft_update_full_copy():
    rng = np.random.default_rng(6)
    a = mlp_init((2, 3, 1), ("relu", "identity"), rng)
    b = mlp_init((2, 3, 1), ("relu", "identity"), rng)
    merged = soft_update(a, b, 1.0)
    for k in merged.params:
        np.testing.assert_array_equal(merged.params[k], b.params[k])


def test_soft_update_rate():
    zeros = _manual_net([np.zeros((1, 1))], [np.zeros(1)], ["identity"])
    ones = _manual_net([np.ones((1, 1))], [np.ones(1)], ["identity"])
    out = soft_update(zeros, ones, 0.005)
    assert out.params["w0"][0, 0] == pytest.approx(0.005)


def test_soft_update_geometric_convergence():
    tau = 0.02
    target = _manual_net([np.zeros((1, 1))], [np.zeros(1)], ["identity"])
    online = _manual_net([np.ones((1, 1))], [np.ones(1)], ["identity"])
    half_life = np.log(2) / tau
    diffs = []
    for _ in range(400):
        diffs.append(abs(online.params["w0"][0, 0] - target.params["w0"][0, 0]))
        target = soft_update(target, online, tau)
    # distance halves every ln(2)/tau steps, within one step
    for start in (0, 50, 100):
        idx = start
        ref = diffs[idx]
        below = next(i for i in range(idx, len(diffs)) if diffs[i] <= ref / 2)
        assert abs((below - idx) - half_life) <= 1.0


def test_soft_update_validates_tau():
    net = mlp_init((2, 2), ("identity",), np.random.default_rng(0))
    with pytest.raises(ValueError):
        soft_update(net, net, 0.0)
