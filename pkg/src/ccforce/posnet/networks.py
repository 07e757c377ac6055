"""Forward and backward passes for the two position regressors, written out by hand.

Parameters are plain ``dict[str, ndarray]``. Every ``forward`` returns the
prediction and a cache that the matching ``backward`` consumes to produce a
gradient dict with the same keys.
"""

import numpy as np

from .graph import build_tool_graph, node_features

FCN_VIEW_INPUTS = 16


def _glorot(rng, fan_in, fan_out):
    limit = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-limit, limit, (fan_in, fan_out))


def _act(z, activation):
    if activation == "relu":
        return np.maximum(z, 0.0)
    if activation == "linear":
        return z
    raise ValueError(f"unknown activation {activation!r}")


def _act_grad(z, activation):
    if activation == "relu":
        return (z > 0).astype(z.dtype)
    return np.ones_like(z)


# -- symmetric fully connected network -------------------------------------


def fcn_init(rng, hidden=16, depth=4):
    params = {}
    for side in ("L", "R"):
        fan_in = FCN_VIEW_INPUTS
        for i in range(depth):
            params[f"{side}{i}_W"] = _glorot(rng, fan_in, hidden)
            params[f"{side}{i}_b"] = np.zeros(hidden)
            fan_in = hidden
    params["F_W"] = _glorot(rng, 2 * hidden, 3)
    params["F_b"] = np.zeros(3)
    return params


def _fcn_depth(params):
    return sum(1 for k in params if k.startswith("L") and k.endswith("_W"))


def fcn_forward(params, X, activation="relu"):
    """X (n, 32) -> (n, 3). Each view runs through its own stack; a linear layer fuses them."""
    X = np.asarray(X)
    if X.ndim != 2 or X.shape[1] != 2 * FCN_VIEW_INPUTS:
        raise ValueError(f"FCN expects inputs of shape (n, 32), got {X.shape}")
    depth = _fcn_depth(params)
    cache = {"X": X, "activation": activation}
    outs = []
    for side, x in (("L", X[:, :FCN_VIEW_INPUTS]), ("R", X[:, FCN_VIEW_INPUTS:])):
        h = x
        for i in range(depth):
            W = params[f"{side}{i}_W"]
            if W.shape[0] != h.shape[1]:
                raise ValueError(f"{side}{i}_W expects {W.shape[0]} inputs, got {h.shape[1]}")
            cache[f"{side}{i}_in"] = h
            z = h @ W + params[f"{side}{i}_b"]
            cache[f"{side}{i}_z"] = z
            h = _act(z, activation)
        outs.append(h)
    cat = np.concatenate(outs, axis=1)
    cache["cat"] = cat
    return cat @ params["F_W"] + params["F_b"], cache


def fcn_backward(params, cache, dy):
    activation = cache["activation"]
    depth = _fcn_depth(params)
    grads = {"F_W": cache["cat"].T @ dy, "F_b": dy.sum(axis=0)}
    dcat = dy @ params["F_W"].T
    width = dcat.shape[1] // 2
    for side, dh in (("L", dcat[:, :width]), ("R", dcat[:, width:])):
        for i in reversed(range(depth)):
            dz = dh * _act_grad(cache[f"{side}{i}_z"], activation)
            grads[f"{side}{i}_W"] = cache[f"{side}{i}_in"].T @ dz
            grads[f"{side}{i}_b"] = dz.sum(axis=0)
            dh = dz @ params[f"{side}{i}_W"].T
    return grads


# -- GraphSAGE-style network -------------------------------------------------


def gnn_init(rng, hidden=512, feature_dim=18):
    return {
        "S1_self": _glorot(rng, feature_dim, hidden),
        "S1_neigh": _glorot(rng, feature_dim, hidden),
        "S1_b": np.zeros(hidden),
        "D_W": _glorot(rng, hidden, hidden),
        "D_b": np.zeros(hidden),
        "S2_self": _glorot(rng, hidden, hidden),
        "S2_neigh": _glorot(rng, hidden, hidden),
        "S2_b": np.zeros(hidden),
        "O_W": _glorot(rng, hidden, 3),
        "O_b": np.zeros(3),
    }


def _mm(H, W):
    """(n, nodes, a) @ (a, b) as one 2-D matmul."""
    n, m, a = H.shape
    return (H.reshape(n * m, a) @ W).reshape(n, m, W.shape[1])


def _wgrad(H, dZ):
    return H.reshape(-1, H.shape[2]).T @ dZ.reshape(-1, dZ.shape[2])


def gnn_forward_features(params, A, X, activation="relu"):
    """Node features X (n, nodes, d) and aggregation matrix A (nodes, nodes) -> (n, 3).

    SAGE -> dense -> SAGE, each with ReLU, then mean pooling over nodes and a
    linear head. A SAGE layer computes ``h W_self + mean(neighbour h) W_neigh + b``.
    """
    X = np.asarray(X)
    if X.ndim != 3 or X.shape[2] != params["S1_self"].shape[0]:
        raise ValueError(f"GNN expects node features (n, nodes, {params['S1_self'].shape[0]}), got {X.shape}")
    if A.shape != (X.shape[1], X.shape[1]):
        raise ValueError("aggregation matrix does not match the node count")
    N1 = np.matmul(A, X)
    Z1 = _mm(X, params["S1_self"]) + _mm(N1, params["S1_neigh"]) + params["S1_b"]
    H1 = _act(Z1, activation)
    Z2 = _mm(H1, params["D_W"]) + params["D_b"]
    H2 = _act(Z2, activation)
    N2 = np.matmul(A, H2)
    Z3 = _mm(H2, params["S2_self"]) + _mm(N2, params["S2_neigh"]) + params["S2_b"]
    H3 = _act(Z3, activation)
    g = H3.mean(axis=1)
    y = g @ params["O_W"] + params["O_b"]
    cache = dict(A=A, X=X, N1=N1, Z1=Z1, H1=H1, Z2=Z2, H2=H2, N2=N2, Z3=Z3, g=g, activation=activation)
    return y, cache


def gnn_backward(params, cache, dy):
    act = cache["activation"]
    A = cache["A"]
    n_nodes = cache["X"].shape[1]
    grads = {"O_W": cache["g"].T @ dy, "O_b": dy.sum(axis=0)}
    dg = dy @ params["O_W"].T
    dH3 = np.repeat(dg[:, None, :] / n_nodes, n_nodes, axis=1)
    dZ3 = dH3 * _act_grad(cache["Z3"], act)
    grads["S2_self"] = _wgrad(cache["H2"], dZ3)
    grads["S2_neigh"] = _wgrad(cache["N2"], dZ3)
    grads["S2_b"] = dZ3.sum(axis=(0, 1))
    dH2 = _mm(dZ3, params["S2_self"].T) + np.matmul(A.T, _mm(dZ3, params["S2_neigh"].T))
    dZ2 = dH2 * _act_grad(cache["Z2"], act)
    grads["D_W"] = _wgrad(cache["H1"], dZ2)
    grads["D_b"] = dZ2.sum(axis=(0, 1))
    dH1 = _mm(dZ2, params["D_W"].T)
    dZ1 = dH1 * _act_grad(cache["Z1"], act)
    grads["S1_self"] = _wgrad(cache["X"], dZ1)
    grads["S1_neigh"] = _wgrad(cache["N1"], dZ1)
    grads["S1_b"] = dZ1.sum(axis=(0, 1))
    return grads


_TOOL_GRAPH = build_tool_graph()
_TOOL_A = _TOOL_GRAPH.aggregation_matrix()


def gnn_forward(params, X, activation="relu", graph=None):
    """Keypoint vectors X (n, 32) -> (n, 3) over the stereo tool graph."""
    X = np.asarray(X)
    if X.ndim != 2 or X.shape[1] != 32:
        raise ValueError(f"GNN expects inputs of shape (n, 32), got {X.shape}")
    A = _TOOL_A if graph is None else graph.aggregation_matrix()
    return gnn_forward_features(params, A.astype(X.dtype), node_features(X), activation)


NETWORKS = {
    "fcn": (fcn_init, fcn_forward, fcn_backward),
    "gnn": (gnn_init, gnn_forward, gnn_backward),
}
