"""Contact signals from force thresholds, crowd votes, or a keypoint classifier."""

from dataclasses import dataclass
from typing import Optional

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin
from sklearn.utils.validation import check_is_fitted

from ._validation import check_bool_series, check_finite_scalar, check_series
from .types import ContactSignal, segment_contacts

FEATURE_NAMES = (
    "height_proxy",
    "depth_proxy",
    "lateral_proxy",
    "keypoint_spread",
    "jaw_gap",
    "vertical_velocity",
)


def contact_from_force(f, threshold_n=0.2):
    """Contact wherever the force magnitude is strictly above ``threshold_n``."""
    threshold_n = check_finite_scalar(threshold_n, "threshold_n", low=0.0, low_inclusive=False)
    f = check_series(f, "force", width=3)
    return ContactSignal(contact=np.linalg.norm(f, axis=1) > threshold_n)


def aggregate_crowd_labels(labels, vote_threshold=0.5):
    """Average worker votes per frame; contact where the mean is strictly above the threshold.

    ``labels`` is an (n, workers) array or a per-frame sequence of vote lists,
    which may differ in length between frames.
    """
    vote_threshold = check_finite_scalar(vote_threshold, "vote_threshold", low=0.0, low_inclusive=False)
    if vote_threshold >= 1:
        raise ValueError("vote_threshold must be < 1")
    if isinstance(labels, np.ndarray) and labels.ndim == 2:
        if labels.shape[1] == 0:
            raise ValueError("every frame needs at least one worker label")
        prob = labels.astype(np.float64).mean(axis=1)
    else:
        frames = list(labels)
        if not frames:
            raise ValueError("labels is empty")
        prob = np.empty(len(frames))
        for i, votes in enumerate(frames):
            votes = np.asarray(votes, dtype=np.float64).ravel()
            if votes.size == 0:
                raise ValueError(f"frame {i} has no worker labels")
            prob[i] = votes.mean()
    if prob.size == 0:
        raise ValueError("labels is empty")
    return ContactSignal(contact=prob > vote_threshold, probability=prob)


def debounce(signal, min_frames):
    """Drop contact runs shorter than ``min_frames``, then fill interior gaps shorter than it.

    Leading and trailing no-contact stretches are never filled.
    """
    if int(min_frames) != min_frames or min_frames < 1:
        raise ValueError("min_frames must be an integer >= 1")
    c = np.array(signal.contact, dtype=bool)
    for a, b in segment_contacts(c):
        if b - a + 1 < min_frames:
            c[a : b + 1] = False
    gaps = segment_contacts(~c)
    for a, b in gaps:
        if a > 0 and b < len(c) - 1 and b - a + 1 < min_frames:
            c[a : b + 1] = True
    return ContactSignal(contact=c, probability=signal.probability)


def keypoint_features(keypoints, sample_rate_hz):
    """Engineered per-frame features from stereo keypoints (n, 2, 8, 2)."""
    kp = np.asarray(keypoints, dtype=np.float64)
    if kp.ndim != 4 or kp.shape[1:] != (2, 8, 2):
        raise ValueError(f"keypoints must have shape (n, 2, 8, 2), got {kp.shape}")
    left, right = kp[:, 0], kp[:, 1]
    height = left[:, :, 1].mean(axis=1)
    depth = (left[:, :, 0] - right[:, :, 0]).mean(axis=1)
    lateral = left[:, :, 0].mean(axis=1)
    spread = left.std(axis=1).mean(axis=1)
    # tip-to-tip distance in units of the shaft-to-wrist length, so it does not depend on zoom
    shaft_len = np.linalg.norm(left[:, 0] - left[:, 1], axis=1)
    jaw_gap = np.linalg.norm(left[:, 3] - left[:, 5], axis=1) / np.maximum(shaft_len, 1e-9)
    if len(height) > 1:
        velocity = np.gradient(height) * sample_rate_hz
    else:
        velocity = np.zeros_like(height)
    return np.column_stack([height, depth, lateral, spread, jaw_gap, velocity])


def demo_features(demo):
    if demo.keypoints is None:
        raise ValueError(f"demonstration {demo.id!r} lacks the keypoint channel needed for contact features")
    return keypoint_features(demo.keypoints, demo.sample_rate_hz)


def _sigmoid(z):
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def _log_loss(z, y):
    # Stable binary cross-entropy written in terms of the logit.
    return np.mean(np.logaddexp(0.0, z) - y * z)


class ContactClassifier(ClassifierMixin, BaseEstimator):
    """L2-regularized logistic regression trained by gradient descent.

    Targets may be soft (probabilities in [0, 1]). Features are standardized
    with statistics from the first fit; a warm-started refit keeps them, so
    fine-tuning only moves the weights.

    Parameters
    ----------
    learning_rate : float
    l2 : float
        Penalty ``l2 / 2 * ||w||^2``; the bias is not penalized.
    epochs : int
    batch_size : int or None
        None trains full-batch (deterministic, monotone loss for small steps).
    random_state : int
        Seeds mini-batch shuffling.
    warm_start : bool
        Continue from the current weights on refit.
    """

    def __init__(self, learning_rate=0.5, l2=1e-3, epochs=300, batch_size=None, random_state=0, warm_start=False):
        self.learning_rate = learning_rate
        self.l2 = l2
        self.epochs = epochs
        self.batch_size = batch_size
        self.random_state = random_state
        self.warm_start = warm_start

    def _init_state(self, X):
        self.feature_mean_ = X.mean(axis=0)
        scale = X.std(axis=0)
        self.feature_scale_ = np.where(scale > 0, scale, 1.0)
        self.coef_ = np.zeros(X.shape[1])
        self.intercept_ = 0.0

    def fit(self, X, y):
        X = np.asarray(X, dtype=np.float64)
        if X.ndim != 2 or X.shape[0] == 0 or not np.all(np.isfinite(X)):
            raise ValueError("X must be a non-empty finite 2-D array")
        y = np.asarray(y, dtype=np.float64).ravel()
        if y.shape[0] != X.shape[0]:
            raise ValueError("X and y have different lengths")
        if np.any((y < 0) | (y > 1)):
            raise ValueError("targets must lie in [0, 1]")
        if not (np.any(y > 0.5) and np.any(y < 0.5)):
            raise ValueError("training labels contain a single class")
        if not (self.warm_start and hasattr(self, "coef_")):
            self._init_state(X)
        elif self.coef_.shape[0] != X.shape[1]:
            raise ValueError("feature count differs from the warm-start model")
        self.classes_ = np.array([False, True])
        Z = (X - self.feature_mean_) / self.feature_scale_
        rng = np.random.default_rng(self.random_state)
        n = Z.shape[0]
        bs = n if self.batch_size is None else int(self.batch_size)
        history = []
        for _ in range(int(self.epochs)):
            order = np.arange(n) if bs >= n else rng.permutation(n)
            for start in range(0, n, bs):
                idx = order[start : start + bs]
                zb, yb = Z[idx], y[idx]
                err = _sigmoid(zb @ self.coef_ + self.intercept_) - yb
                grad_w = zb.T @ err / len(idx) + self.l2 * self.coef_
                grad_b = err.mean()
                self.coef_ = self.coef_ - self.learning_rate * grad_w
                self.intercept_ = self.intercept_ - self.learning_rate * grad_b
            history.append(self._objective(Z, y))
        self.loss_history_ = np.array(history)
        self.final_loss_ = history[-1] if history else self._objective(Z, y)
        return self

    def _objective(self, Z, y):
        return float(_log_loss(Z @ self.coef_ + self.intercept_, y) + 0.5 * self.l2 * self.coef_ @ self.coef_)

    def decision_function(self, X):
        check_is_fitted(self, "coef_")
        X = check_series(X, "X", width=self.coef_.shape[0])
        return ((X - self.feature_mean_) / self.feature_scale_) @ self.coef_ + self.intercept_

    def predict_proba(self, X):
        p = _sigmoid(self.decision_function(X))
        return np.column_stack([1.0 - p, p])

    def predict(self, X):
        return self.predict_proba(X)[:, 1] > 0.5

    def to_params(self, feature_spec=FEATURE_NAMES):
        check_is_fitted(self, "coef_")
        return ContactClassifierParams(
            weights=self.coef_ / self.feature_scale_,
            bias=float(self.intercept_ - (self.coef_ / self.feature_scale_) @ self.feature_mean_),
            feature_spec=tuple(feature_spec),
            final_loss=float(getattr(self, "final_loss_", float("nan"))),
            feature_mean=self.feature_mean_.copy(),
            feature_scale=self.feature_scale_.copy(),
        )

    @classmethod
    def from_params(cls, params, **kwargs):
        """Classifier whose fitted state reproduces ``params``, ready for a warm-started refit.

        Stored standardization statistics are reused when present; otherwise
        the features are taken as already standardized.
        """
        est = cls(**kwargs)
        n = len(params.weights)
        mean = np.zeros(n) if params.feature_mean is None else np.array(params.feature_mean, dtype=np.float64)
        scale = np.ones(n) if params.feature_scale is None else np.array(params.feature_scale, dtype=np.float64)
        est.feature_mean_ = mean
        est.feature_scale_ = scale
        est.coef_ = params.weights * scale
        est.intercept_ = float(params.bias + params.weights @ mean)
        est.classes_ = np.array([False, True])
        est.final_loss_ = params.final_loss
        return est


@dataclass(frozen=True)
class ContactClassifierParams:
    """Logistic model over raw (unstandardized) features: ``sigmoid(w . x + b)``.

    ``feature_mean`` and ``feature_scale`` record the training standardization
    so a later fine-tune can resume in the same coordinates; prediction does
    not use them.
    """

    weights: np.ndarray
    bias: float
    feature_spec: tuple = FEATURE_NAMES
    final_loss: float = float("nan")
    feature_mean: Optional[np.ndarray] = None
    feature_scale: Optional[np.ndarray] = None

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=np.float64).ravel()
        if w.shape[0] != len(self.feature_spec):
            raise ValueError(f"{w.shape[0]} weights for {len(self.feature_spec)} features")
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "feature_spec", tuple(self.feature_spec))
        object.__setattr__(self, "bias", float(self.bias))
        for name in ("feature_mean", "feature_scale"):
            v = getattr(self, name)
            if v is not None:
                v = np.asarray(v, dtype=np.float64).ravel()
                if v.shape != w.shape:
                    raise ValueError(f"{name} must have one entry per feature")
                object.__setattr__(self, name, v)


def _targets(label):
    if label.probability is not None:
        return np.asarray(label.probability, dtype=np.float64)
    return label.contact.astype(np.float64)


def stack_training_set(demos, labels):
    if len(demos) != len(labels):
        raise ValueError("one label signal is needed per demonstration")
    X, y = [], []
    for demo, label in zip(demos, labels):
        if len(label) != len(demo):
            raise ValueError(f"labels for {demo.id!r} do not align with its frames")
        X.append(demo_features(demo))
        y.append(_targets(label))
    return np.vstack(X), np.concatenate(y)


def train_contact_classifier(demos, labels, learning_rate=0.5, l2=1e-3, epochs=300, seed=0, batch_size=None):
    """Fit the logistic contact model on soft labels and return its parameters."""
    X, y = stack_training_set(demos, labels)
    clf = ContactClassifier(
        learning_rate=learning_rate, l2=l2, epochs=epochs, batch_size=batch_size, random_state=seed
    ).fit(X, y)
    return clf.to_params()


def predict_contact(params, demo):
    """Contact probability ``sigmoid(w . x + b)`` per frame; contact where it exceeds 0.5."""
    unknown = [f for f in params.feature_spec if f not in FEATURE_NAMES]
    if unknown:
        raise ValueError(f"cannot compute features {unknown} from demonstration channels")
    X = demo_features(demo)
    cols = [FEATURE_NAMES.index(f) for f in params.feature_spec]
    z = X[:, cols] @ params.weights + params.bias
    prob = _sigmoid(z)
    return ContactSignal(contact=prob > 0.5, probability=prob)


def crowd_contact(demo, vote_threshold=0.5):
    if demo.crowd_labels is None:
        raise ValueError(f"demonstration {demo.id!r} has no crowd labels")
    return aggregate_crowd_labels(demo.crowd_labels, vote_threshold)


def truth_contact(demo):
    if demo.contact_gt is None:
        raise ValueError(f"demonstration {demo.id!r} has no ground-truth contact channel")
    return ContactSignal(contact=check_bool_series(demo.contact_gt, "contact_gt"))
