import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from sklearn.base import clone

from ccforce.posnet import (
    FCNPositionRegressor,
    GNNPositionRegressor,
    GraphSpec,
    PositionNormalizer,
    TrainingConfig,
    build_tool_graph,
    fine_tune,
    gradient_check,
    normalize_positions,
    position_dataset,
    predict,
    rescale_to_test_range,
    train_estimator,
)
from ccforce.posnet.graph import node_features
from ccforce.posnet.networks import fcn_forward, fcn_init, gnn_forward, gnn_forward_features, gnn_init
from ccforce.posnet.training import gradient_check_inits, init_params, objective


def test_normalize_examples():
    p = np.column_stack([[0.0, 2.0, 4.0], [1.0, 1.0, 1.0], [1.0, 2.0, 3.0]])
    s = normalize_positions(p)
    assert np.allclose(s.p_hat[:, 0], [0.0, 0.5, 1.0])
    assert np.all(s.p_hat[:, 1] == 0.0)
    assert np.allclose(normalize_positions(3.0 * p).p_hat, s.p_hat, rtol=1e-15)


@settings(max_examples=30)
@given(st.floats(1e-3, 1e3), st.integers(0, 2**31))
def test_normalize_scale_invariance_and_unit_range(a, seed):
    p = np.random.default_rng(seed).normal(0, 0.01, (25, 3))
    s = normalize_positions(p)
    assert np.allclose(normalize_positions(a * p).p_hat, s.p_hat, rtol=1e-12, atol=1e-12)
    assert np.allclose(np.ptp(s.p_hat, axis=0), 1.0)


def test_rescale_examples():
    assert np.allclose(rescale_to_test_range(np.full((1, 3), 0.5), [0.04, 0.04, 0.04]), 0.02)
    with pytest.raises(ValueError):
        rescale_to_test_range(np.zeros((1, 3)), [0.04, 0.0, 0.04])
    p = np.random.default_rng(0).normal(0, 0.01, (20, 3))
    norm = PositionNormalizer().fit(p)
    assert np.allclose(norm.inverse_transform(norm.transform(p)), p, rtol=1e-14)


def test_tool_graph_structure():
    g = build_tool_graph()
    assert g.n_nodes == 16 and g.feature_dim == 18 and g.n_cross_view == 8
    cross = [(s, t) for s, t in g.edges if (s < 8) != (t < 8)]
    assert len({frozenset(e) for e in cross}) == 8
    for node in range(8):
        assert [t for s, t in cross if s == node] == [node + 8]
    X = np.random.default_rng(0).random((5, 32))
    assert node_features(X).shape == (5, 16, 18)


def test_fcn_zero_weights_give_zero_output():
    params = {k: np.zeros_like(v) for k, v in fcn_init(np.random.default_rng(0)).items()}
    y, _ = fcn_forward(params, np.random.default_rng(1).random((4, 32)))
    assert np.all(y == 0.0)


def test_fcn_matches_layer_by_layer_oracle():
    params = fcn_init(np.random.default_rng(0))
    x = np.random.default_rng(1).normal(size=32)
    halves = []
    for side, h in (("L", list(x[:16])), ("R", list(x[16:]))):
        for i in range(4):
            W, b = params[f"{side}{i}_W"], params[f"{side}{i}_b"]
            h = [max(0.0, sum(h[r] * W[r, c] for r in range(len(h))) + b[c]) for c in range(W.shape[1])]
        halves.extend(h)
    W, b = params["F_W"], params["F_b"]
    expected = [sum(halves[r] * W[r, c] for r in range(32)) + b[c] for c in range(3)]
    y, _ = fcn_forward(params, x[None])
    assert np.allclose(y[0], expected, rtol=1e-12, atol=1e-14)


def test_fcn_view_swap_symmetry():
    params = fcn_init(np.random.default_rng(0))
    swapped = {}
    for k, v in params.items():
        if k[0] in "LR" and k[1].isdigit():
            swapped[("R" if k[0] == "L" else "L") + k[1:]] = v
    swapped["F_W"] = np.vstack([params["F_W"][16:], params["F_W"][:16]])
    swapped["F_b"] = params["F_b"]
    X = np.random.default_rng(2).normal(size=(6, 32))
    X_swap = np.hstack([X[:, 16:], X[:, :16]])
    # the fusion sum runs over the halves in the other order, so agreement is to rounding
    assert np.allclose(fcn_forward(swapped, X_swap)[0], fcn_forward(params, X)[0], rtol=1e-14, atol=1e-15)


def _gnn(hidden=16, seed=0):
    return gnn_init(np.random.default_rng(seed), hidden=hidden)


def test_gnn_zero_weights_give_zero_output():
    params = {k: np.zeros_like(v) for k, v in _gnn().items()}
    assert np.all(gnn_forward(params, np.random.default_rng(0).random((3, 32)))[0] == 0.0)


def test_gnn_neighbor_order_is_irrelevant():
    g = build_tool_graph()
    shuffled = GraphSpec(g.n_nodes, tuple(g.edges[::-1]), g.node_names, g.n_cross_view)
    params = _gnn()
    X = np.random.default_rng(0).random((4, 32))
    assert np.array_equal(gnn_forward(params, X, graph=g)[0], gnn_forward(params, X, graph=shuffled)[0])


def test_gnn_relabeling_invariance():
    g = build_tool_graph()
    params = _gnn()
    X = node_features(np.random.default_rng(0).random((4, 32)))
    perm = np.random.default_rng(1).permutation(16)
    moved = np.empty_like(X)
    moved[:, perm] = X
    y0 = gnn_forward_features(params, g.aggregation_matrix(), X)[0]
    y1 = gnn_forward_features(params, g.relabel(perm).aggregation_matrix(), moved)[0]
    assert np.max(np.abs(y0 - y1)) < 1e-12


def test_gnn_isolated_node_matches_hand_evaluation():
    params = _gnn(hidden=4)
    lone = GraphSpec(1, (), ("only",))
    x = np.random.default_rng(0).random((1, 1, 18))
    y, _ = gnn_forward_features(params, lone.aggregation_matrix(), x)
    relu = lambda z: np.maximum(z, 0)  # noqa: E731
    h1 = relu(x[0, 0] @ params["S1_self"] + params["S1_b"])
    h2 = relu(h1 @ params["D_W"] + params["D_b"])
    h3 = relu(h2 @ params["S2_self"] + params["S2_b"])
    assert np.allclose(y[0], h3 @ params["O_W"] + params["O_b"], rtol=1e-13)


def _toy_data(n=64, seed=0):
    rng = np.random.default_rng(seed)
    X = rng.random((n, 32))
    Y = np.column_stack([X[:, :3].mean(axis=1), X[:, 16:19].mean(axis=1), X[:, 5] - X[:, 21]])
    return X, Y


def test_memorizes_a_single_sample():
    X = np.tile(np.random.default_rng(0).random(32), (8, 1))
    Y = np.tile([0.3, -0.2, 0.5], (8, 1))
    cfg = TrainingConfig(learning_rate=0.01, l2_weight=0.0, epochs=400, batch_size=8)
    params = train_estimator("fcn", X, Y, cfg)
    assert np.mean((predict(params, X) - Y) ** 2) < 1e-6


@pytest.mark.parametrize("kind", ["fcn", "gnn"])
def test_zero_epochs_and_determinism(kind):
    X, Y = _toy_data()
    cfg0 = TrainingConfig(epochs=0, seed=3)
    init = init_params(kind, X, seed=3, hidden=8)
    p0 = train_estimator(kind, X, Y, cfg0, hidden=8)
    assert all(np.array_equal(p0.arrays[k], init.arrays[k]) for k in init.arrays)
    cfg = TrainingConfig(epochs=5, batch_size=16, seed=3, learning_rate=0.01)
    a = train_estimator(kind, X, Y, cfg, hidden=8)
    b = train_estimator(kind, X, Y, cfg, hidden=8)
    assert a.final_loss == b.final_loss
    assert a.final_loss == min(a.loss_history)


def test_fine_tune_on_same_data_does_not_regress():
    X, Y = _toy_data()
    cfg = TrainingConfig(epochs=40, batch_size=16, learning_rate=0.01)
    base = train_estimator("fcn", X, Y, cfg)
    pre = objective("fcn", base.arrays, _std(base, X), Y, cfg.l2_weight)[0]
    tuned = fine_tune(base, X, Y, TrainingConfig(epochs=10, batch_size=16, learning_rate=0.001))
    post = objective("fcn", tuned.arrays, _std(base, X), Y, cfg.l2_weight)[0]
    assert post <= 1.01 * pre
    same = fine_tune(base, X, Y, TrainingConfig(epochs=0))
    assert all(np.array_equal(same.arrays[k], base.arrays[k]) for k in base.arrays)
    with pytest.raises(ValueError):
        fine_tune(base, X, Y, kind="gnn")


def _std(params, X):
    return (X - params.input_mean) / params.input_scale


def test_smoothed_loss_history_decreases():
    X, Y = _toy_data(256)
    h = np.array(train_estimator("fcn", X, Y, TrainingConfig(epochs=60, batch_size=32, learning_rate=0.003)).loss_history)
    smooth = np.convolve(h, np.ones(10) / 10, mode="valid")
    assert np.all(np.diff(smooth) <= 1e-3 * smooth[0])


def test_training_rejects_bad_data():
    with pytest.raises(ValueError):
        train_estimator("fcn", np.zeros((0, 32)), np.zeros((0, 3)))
    with pytest.raises(ValueError):
        train_estimator("fcn", np.zeros((4, 31)), np.zeros((4, 3)))


@pytest.mark.parametrize("kind", ["fcn", "gnn"])
def test_gradient_check_linear_activation(kind):
    X, Y = _toy_data(4)
    params = init_params(kind, X, seed=0, hidden=4)
    res = gradient_check(kind, params, (X, Y), activation="linear", return_details=True)
    assert res.max_rel_error < 1e-8 and res.n_skipped == 0


def test_gradient_check_relu_small_models():
    for res in gradient_check_inits("fcn", n_inits=2, n_samples=4):
        assert res.max_rel_error < 1e-4
    with pytest.raises(ValueError):
        gradient_check("fcn", init_params("fcn", np.zeros((1, 32))), (np.zeros((1, 32)), np.zeros((1, 3))), eps=1.0)


def test_sklearn_wrappers(noisy_demos):
    X, Y = position_dataset(noisy_demos[:1], stride=10)
    for cls in (FCNPositionRegressor, GNNPositionRegressor):
        est = cls(hidden=8, epochs=2, batch_size=32)
        assert clone(est).get_params() == est.get_params()
        est.fit(X, Y)
        assert est.predict(X).shape == Y.shape
        assert np.isfinite(est.score(X, Y))
