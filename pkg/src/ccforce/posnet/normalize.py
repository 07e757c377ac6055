"""Per-demonstration position normalization by range."""

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from .._validation import check_series
from ..types import NormalizedPositionSeries


def normalize_positions(p):
    """Divide each axis by its range over the series (no min subtraction).

    An axis that never moves maps to zeros.
    """
    p = check_series(p, "p", width=3)
    p_min, p_max = p.min(axis=0), p.max(axis=0)
    rng = p_max - p_min
    p_hat = np.divide(p, rng, out=np.zeros_like(p), where=rng > 0)
    return NormalizedPositionSeries(p_hat=p_hat, p_min=p_min, p_max=p_max)


def rescale_to_test_range(est, reference_range):
    """Normalized positions back to metres using a per-axis reference range."""
    ref = np.asarray(reference_range, dtype=np.float64).reshape(3)
    if not np.all(np.isfinite(ref)) or np.any(ref <= 0):
        raise ValueError(f"reference_range must be positive on every axis, got {ref}")
    p_hat = est.p_hat if isinstance(est, NormalizedPositionSeries) else check_series(est, "p_hat", width=3)
    return p_hat * ref


class PositionNormalizer(TransformerMixin, BaseEstimator):
    """Learn a demonstration's per-axis range; ``inverse_transform`` rescales to metres."""

    def fit(self, X, y=None):
        s = normalize_positions(X)
        self.p_min_, self.p_max_ = s.p_min, s.p_max
        self.range_ = s.range
        return self

    def transform(self, X):
        check_is_fitted(self, "range_")
        X = check_series(X, "p", width=3)
        return np.divide(X, self.range_, out=np.zeros_like(X), where=self.range_ > 0)

    def inverse_transform(self, X):
        check_is_fitted(self, "range_")
        return check_series(X, "p_hat", width=3) * self.range_
