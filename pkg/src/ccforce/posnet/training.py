"""Adam training, fine-tuning and finite-difference gradient checks."""

import copy
from dataclasses import dataclass, field

import numpy as np

from .networks import NETWORKS

# Per-architecture defaults: (learning_rate, l2_weight, epochs, batch_size, hidden)
DEFAULTS = {
    "gnn": (1e-3, 1e-4, 200, 512, 512),
    "fcn": (1e-4, 1e-4, 200, 32, 16),
}


@dataclass(frozen=True)
class TrainingConfig:
    learning_rate: float = 1e-3
    l2_weight: float = 1e-4
    epochs: int = 200
    batch_size: int = 512
    seed: int = 0
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8

    def __post_init__(self):
        if not self.learning_rate > 0:
            raise ValueError("learning_rate must be > 0")
        if self.l2_weight < 0:
            raise ValueError("l2_weight must be >= 0")
        if int(self.epochs) != self.epochs or self.epochs < 0:
            raise ValueError("epochs must be an integer >= 0")
        if int(self.batch_size) != self.batch_size or self.batch_size < 1:
            raise ValueError("batch_size must be an integer >= 1")

    @classmethod
    def for_kind(cls, kind, **overrides):
        lr, l2, epochs, bs, _ = DEFAULTS[kind]
        base = dict(learning_rate=lr, l2_weight=l2, epochs=epochs, batch_size=bs)
        base.update({k: v for k, v in overrides.items() if v is not None})
        return cls(**base)


@dataclass
class PositionEstimatorParams:
    """Weights of a trained regressor plus the input standardization it expects."""

    model_kind: str
    arrays: dict
    input_mean: np.ndarray
    input_scale: np.ndarray
    hidden: int
    seed: int = 0
    epochs: int = 0
    final_loss: float = float("nan")
    loss_history: tuple = field(default_factory=tuple)

    def __post_init__(self):
        if self.model_kind not in NETWORKS:
            raise ValueError(f"model_kind must be one of {sorted(NETWORKS)}, got {self.model_kind!r}")
        init = NETWORKS[self.model_kind][0]
        expected = init(np.random.default_rng(0), hidden=self.hidden)
        for name, ref in expected.items():
            if name not in self.arrays:
                raise ValueError(f"{self.model_kind} parameters are missing {name}")
            if np.shape(self.arrays[name]) != ref.shape:
                raise ValueError(f"{name} has shape {np.shape(self.arrays[name])}, expected {ref.shape}")
        extra = set(self.arrays) - set(expected)
        if extra:
            raise ValueError(f"unexpected parameters {sorted(extra)}")
        self.arrays = {k: np.asarray(self.arrays[k], dtype=np.float64) for k in expected}
        self.input_mean = np.asarray(self.input_mean, dtype=np.float64).reshape(32)
        self.input_scale = np.asarray(self.input_scale, dtype=np.float64).reshape(32)

    @property
    def architecture(self):
        return (self.model_kind, self.hidden)

    def n_parameters(self):
        return int(sum(a.size for a in self.arrays.values()))

    def copy(self):
        return copy.deepcopy(self)


def is_weight(name):
    return not name.endswith("_b")


def _standardize(params, X):
    X = np.asarray(X, dtype=np.float64)
    if X.ndim == 1:
        X = X[None]
    if X.ndim == 4:
        X = X.reshape(X.shape[0], -1)
    if X.ndim != 2 or X.shape[1] != 32:
        raise ValueError(f"keypoint inputs must have shape (n, 32), got {X.shape}")
    return (X - params.input_mean) / params.input_scale


def loss_and_grads(kind, arrays, Xs, Y, l2_weight, activation="relu"):
    """Mean squared error over samples and outputs plus ``l2/2 * sum(W**2)`` over weights."""
    _, forward, backward = NETWORKS[kind]
    pred, cache = forward(arrays, Xs, activation=activation)
    err = pred - Y
    loss = np.mean(err**2)
    loss += 0.5 * l2_weight * sum(np.sum(w * w) for k, w in arrays.items() if is_weight(k))
    grads = backward(arrays, cache, 2.0 * err / err.size)
    for k in grads:
        if is_weight(k):
            grads[k] = grads[k] + l2_weight * arrays[k]
    return loss, grads


def objective(kind, arrays, Xs, Y, l2_weight, activation="relu", chunk=2048):
    _, forward, _ = NETWORKS[kind]
    sq = 0.0
    for start in range(0, Xs.shape[0], chunk):
        pred, _ = forward(arrays, Xs[start : start + chunk], activation=activation)
        sq += np.sum((pred - Y[start : start + chunk]) ** 2)
    mse = sq / Y.size
    return mse + 0.5 * l2_weight * sum(np.sum(w * w) for k, w in arrays.items() if is_weight(k)), mse


def init_params(kind, X, seed=0, hidden=None):
    """Seeded Glorot-uniform initialization and input standardization from ``X``."""
    if kind not in NETWORKS:
        raise ValueError(f"kind must be one of {sorted(NETWORKS)}, got {kind!r}")
    hidden = DEFAULTS[kind][4] if hidden is None else int(hidden)
    init_ss, _ = np.random.SeedSequence(seed).spawn(2)
    arrays = NETWORKS[kind][0](np.random.default_rng(init_ss), hidden=hidden)
    X = np.asarray(X, dtype=np.float64).reshape(len(X), -1)
    mean = X.mean(axis=0)
    scale = X.std(axis=0)
    scale = np.where(scale > 1e-12, scale, 1.0)
    return PositionEstimatorParams(kind, arrays, mean, scale, hidden, seed=seed)


def _check_dataset(X, Y):
    X = np.asarray(X, dtype=np.float64)
    Y = np.asarray(Y, dtype=np.float64)
    if X.ndim == 4:
        X = X.reshape(X.shape[0], -1)
    if len(X) == 0:
        raise ValueError("training dataset is empty")
    if Y.shape != (X.shape[0], 3):
        raise ValueError(f"targets must have shape ({X.shape[0]}, 3), got {Y.shape}")
    if not (np.all(np.isfinite(X)) and np.all(np.isfinite(Y))):
        raise ValueError("training data contains non-finite values")
    return X, Y


def _run_adam(params, X, Y, cfg):
    kind = params.model_kind
    Xs = _standardize(params, X)
    arrays = {k: v.copy() for k, v in params.arrays.items()}
    _, shuffle_ss = np.random.SeedSequence(cfg.seed).spawn(2)
    rng = np.random.default_rng(shuffle_ss)
    m = {k: np.zeros_like(v) for k, v in arrays.items()}
    v = {k: np.zeros_like(v) for k, v in arrays.items()}
    best_loss, _ = objective(kind, arrays, Xs, Y, cfg.l2_weight)
    best = {k: a.copy() for k, a in arrays.items()}
    history = [best_loss]
    n, step = Xs.shape[0], 0
    for _ in range(int(cfg.epochs)):
        order = rng.permutation(n)
        for start in range(0, n, cfg.batch_size):
            idx = order[start : start + cfg.batch_size]
            _, grads = loss_and_grads(kind, arrays, Xs[idx], Y[idx], cfg.l2_weight)
            step += 1
            c1 = 1.0 - cfg.beta1**step
            c2 = 1.0 - cfg.beta2**step
            for k, g in grads.items():
                m[k] = cfg.beta1 * m[k] + (1.0 - cfg.beta1) * g
                v[k] = cfg.beta2 * v[k] + (1.0 - cfg.beta2) * g * g
                arrays[k] -= cfg.learning_rate * (m[k] / c1) / (np.sqrt(v[k] / c2) + cfg.epsilon)
        loss, _ = objective(kind, arrays, Xs, Y, cfg.l2_weight)
        history.append(loss)
        if loss < best_loss:
            best_loss = loss
            best = {k: a.copy() for k, a in arrays.items()}
    out = params.copy()
    out.arrays = best
    out.seed = cfg.seed
    out.epochs = params.epochs + int(cfg.epochs)
    out.final_loss = best_loss
    out.loss_history = tuple(history)
    return out


def train_estimator(kind, X, Y, cfg=None, hidden=None):
    """Train a fresh FCN or GNN on keypoint vectors ``X`` (n, 32) and normalized positions ``Y``.

    Returns the parameters with the lowest full-dataset training objective
    seen at any epoch boundary, including the initialization.
    """
    X, Y = _check_dataset(X, Y)
    cfg = cfg or TrainingConfig.for_kind(kind)
    params = init_params(kind, X, seed=cfg.seed, hidden=hidden)
    return _run_adam(params, X, Y, cfg)


def fine_tune(params, X, Y, cfg=None, kind=None):
    """Continue training from ``params`` on new data with a fresh optimizer state.

    The input standardization learned on the original data is kept.
    """
    if kind is not None and kind != params.model_kind:
        raise ValueError(f"cannot fine-tune a {params.model_kind} model as {kind}")
    X, Y = _check_dataset(X, Y)
    cfg = cfg or TrainingConfig.for_kind(params.model_kind)
    return _run_adam(params, X, Y, cfg)


def predict(params, X):
    _, forward, _ = NETWORKS[params.model_kind]
    Xs = _standardize(params, X)
    out = [forward(params.arrays, Xs[i : i + 2048])[0] for i in range(0, Xs.shape[0], 2048)]
    return np.vstack(out)


def _relu_pattern(cache):
    keys = sorted(k for k in cache if k.endswith("_z") or k in ("Z1", "Z2", "Z3"))
    return np.concatenate([(cache[k] > 0).ravel() for k in keys])


@dataclass(frozen=True)
class GradientCheckResult:
    max_rel_error: float
    n_checked: int
    n_skipped: int

    def __float__(self):
        return self.max_rel_error


def gradient_check(
    kind,
    params,
    sample,
    eps=1e-5,
    l2_weight=1e-4,
    activation="relu",
    max_checks=None,
    seed=0,
    dtype=np.longdouble,
    return_details=False,
):
    """Largest relative disagreement between backprop and central differences.

    ``sample`` is ``(X, Y)``. Every parameter entry is perturbed unless
    ``max_checks`` caps the count, in which case a seeded subset is used.
    Both gradients are evaluated in ``dtype``; the extended default keeps
    rounding noise in the differences well below the check's tolerance.

    An entry whose two perturbations leave some ReLU on opposite sides of
    zero straddles a kink where the loss has no derivative. Such entries are
    skipped and counted; ``return_details=True`` exposes the counts.
    """
    if not (1e-7 <= eps <= 1e-3):
        raise ValueError("eps must lie in [1e-7, 1e-3]")
    if kind != params.model_kind:
        raise ValueError(f"parameters are for {params.model_kind}, not {kind}")
    _, forward, _ = NETWORKS[kind]
    X, Y = _check_dataset(*sample)
    Xs = _standardize(params, X).astype(dtype)
    Y = Y.astype(dtype)
    arrays = {k: v.astype(dtype) for k, v in params.arrays.items()}
    eps = dtype(eps)
    _, grads = loss_and_grads(kind, arrays, Xs, Y, l2_weight, activation)

    def loss_at():
        pred, cache = forward(arrays, Xs, activation=activation)
        loss = np.mean((pred - Y) ** 2)
        loss += 0.5 * l2_weight * sum(np.sum(w * w) for k, w in arrays.items() if is_weight(k))
        return loss, (_relu_pattern(cache) if activation == "relu" else None)

    entries = [(k, i) for k in arrays for i in range(arrays[k].size)]
    if max_checks is not None and max_checks < len(entries):
        rng = np.random.default_rng(seed)
        entries = [entries[j] for j in rng.choice(len(entries), size=max_checks, replace=False)]
    worst, checked, skipped = 0.0, 0, 0
    for k, i in entries:
        flat = arrays[k].reshape(-1)
        orig = flat[i]
        flat[i] = orig + eps
        lp, pat_p = loss_at()
        flat[i] = orig - eps
        lm, pat_m = loss_at()
        flat[i] = orig
        if pat_p is not None and not np.array_equal(pat_p, pat_m):
            skipped += 1
            continue
        g_fd = (lp - lm) / (2 * eps)
        g_a = grads[k].reshape(-1)[i]
        rel = abs(g_a - g_fd) / max(abs(g_a), abs(g_fd), 1e-12)
        worst = max(worst, float(rel))
        checked += 1
    if return_details:
        return GradientCheckResult(worst, checked, skipped)
    return worst


def gradient_check_inits(kind, n_inits=5, hidden=None, n_samples=8, seed=0, eps=1e-5, max_checks=None):
    """Gradient checks at ``n_inits`` seeded initializations on a random synthetic batch.

    Keypoints are uniform in the unit square and targets uniform in [0, 1];
    initialization ``i`` uses seed ``seed + i``. Returns one
    :class:`GradientCheckResult` per initialization.
    """
    if int(n_inits) != n_inits or n_inits < 1:
        raise ValueError("n_inits must be an integer >= 1")
    results = []
    for i in range(int(n_inits)):
        rng = np.random.default_rng([int(seed), i])
        X = rng.uniform(0.0, 1.0, size=(n_samples, 32))
        Y = rng.uniform(0.0, 1.0, size=(n_samples, 3))
        params = init_params(kind, X, seed=int(seed) + i, hidden=hidden)
        results.append(
            gradient_check(kind, params, (X, Y), eps=eps, max_checks=max_checks, seed=int(seed) + i, return_details=True)
        )
    return results
