"""scikit-learn wrappers and dataset helpers for the position regressors."""

import numpy as np
from sklearn.base import BaseEstimator, RegressorMixin
from sklearn.utils.validation import check_is_fitted

from .normalize import normalize_positions
from .training import TrainingConfig, fine_tune, predict, train_estimator


def position_dataset(demos, stride=1):
    """Stack keypoint vectors (n, 32) and normalized positions (n, 3) over demos.

    Positions are normalized per demonstration, so every target row is in
    the units the regressor is trained to emit.
    """
    if int(stride) != stride or stride < 1:
        raise ValueError("stride must be a positive integer")
    X, Y = [], []
    for demo in demos:
        X.append(demo.keypoint_vectors()[::stride])
        Y.append(normalize_positions(demo.p).p_hat[::stride])
    if not X:
        raise ValueError("no demonstrations given")
    return np.vstack(X), np.vstack(Y)


def subsample(X, Y, size, seed):
    """Seeded subset of ``size`` rows without replacement; the full set is returned unchanged."""
    n = len(X)
    if size > n:
        raise ValueError(f"requested {size} examples but the pool holds {n}")
    if size == n:
        return X, Y
    idx = np.sort(np.random.default_rng(seed).choice(n, size=size, replace=False))
    return X[idx], Y[idx]


class _PositionRegressor(RegressorMixin, BaseEstimator):
    _kind = None

    def __init__(self, hidden=None, learning_rate=None, l2_weight=None, epochs=None, batch_size=None, random_state=0):
        self.hidden = hidden
        self.learning_rate = learning_rate
        self.l2_weight = l2_weight
        self.epochs = epochs
        self.batch_size = batch_size
        self.random_state = random_state

    def _config(self):
        return TrainingConfig.for_kind(
            self._kind,
            learning_rate=self.learning_rate,
            l2_weight=self.l2_weight,
            epochs=self.epochs,
            batch_size=self.batch_size,
            seed=int(self.random_state or 0),
        )

    def fit(self, X, y):
        self.params_ = train_estimator(self._kind, X, y, self._config(), hidden=self.hidden)
        self.n_features_in_ = 32
        return self

    def fine_tune(self, X, y):
        """Continue from the fitted weights on new data with the same hyperparameters."""
        check_is_fitted(self, "params_")
        self.params_ = fine_tune(self.params_, X, y, self._config(), kind=self._kind)
        return self

    def predict(self, X):
        check_is_fitted(self, "params_")
        return predict(self.params_, X)

    def score(self, X, y, sample_weight=None):
        """Negative overall RMSE, so larger is better as sklearn expects."""
        err = self.predict(X) - np.asarray(y, dtype=np.float64)
        return -float(np.sqrt(np.mean(err**2)))


class FCNPositionRegressor(_PositionRegressor):
    """Two per-view fully connected stacks fused by a linear layer."""

    _kind = "fcn"


class GNNPositionRegressor(_PositionRegressor):
    """GraphSAGE-style regressor over the 16-node stereo tool graph."""

    _kind = "gnn"


REGRESSORS = {"fcn": FCNPositionRegressor, "gnn": GNNPositionRegressor}
