"""Per-demonstration linear fits: contact stiffness, position-difference gain, vision scale.

The estimator classes take ``X`` with a trailing contact column
(``[x, y, z, contact]``) so they can be scored and cross-validated like any
other scikit-learn regressor.
"""

import numpy as np
from sklearn.base import BaseEstimator, RegressorMixin
from sklearn.utils.validation import check_is_fitted

from ._validation import check_aligned, check_bool_series, check_series
from .types import (
    NormalizedPositionSeries,
    PosDiffModel,
    StiffnessModel,
    onset_index,
)

REGIMES = ("x", "y", "z_plus", "z_minus")


class FitError(ValueError):
    """A regression could not be solved (too few samples or no spread)."""


def fit_line(s, f, label="axis"):
    """Least-squares ``f ~ k s + c`` in closed form.

    Returns ``(k, c, residual)``. Sums are centred first so millimetre
    displacements do not lose precision.
    """
    s = np.asarray(s, dtype=np.float64).ravel()
    f = np.asarray(f, dtype=np.float64).ravel()
    if s.shape != f.shape:
        raise ValueError(f"{label}: regressor and target lengths differ")
    if s.size < 2:
        raise FitError(f"{label}: need at least 2 samples, got {s.size}")
    if np.ptp(s) == 0:
        raise FitError(f"{label}: rank-deficient design, every displacement is identical")
    s_mean, f_mean = s.mean(), f.mean()
    ds = s - s_mean
    k = (ds @ (f - f_mean)) / (ds @ ds)
    c = f_mean - k * s_mean
    return k, c, f - (k * s + c)


def displacement_from_onset(p, contact):
    """Displacement from the onset of the enclosing contact episode; zero outside contact.

    ``p`` may be an (n, 3) array or a :class:`Demonstration` (its measured
    position is used).
    """
    p = getattr(p, "p", p)
    p = check_series(p, "p", width=3)
    c = contact.contact if hasattr(contact, "contact") else check_bool_series(contact, "contact")
    check_aligned(len(p), contact=c)
    onset = onset_index(c)
    s = np.zeros_like(p)
    inside = onset >= 0
    s[inside] = p[inside] - p[onset[inside]]
    return s


def _regime_masks(s, contact):
    return {
        "x": contact,
        "y": contact,
        "z_plus": contact & (s[:, 2] > 0),
        "z_minus": contact & (s[:, 2] < 0),
    }


def _prior_value(prior, regime):
    if prior is None:
        return None
    k = getattr(prior, "k_true", prior)
    return float(k[REGIMES.index(regime)])


def fit_stiffness_arrays(p, f, contact, min_frames=5, prior=None):
    """Fit the split-Z stiffness model from positions, forces and contact flags."""
    p = check_series(p, "p", width=3)
    f = check_series(f, "force", width=3)
    c = check_bool_series(contact, "contact")
    check_aligned(len(p), force=f, contact=c)
    s = displacement_from_onset(p, c)
    k, offs, residuals = {}, {}, []
    for regime, mask in _regime_masks(s, c).items():
        axis = 2 if regime.startswith("z") else REGIMES.index(regime)
        n = int(mask.sum())
        if n < min_frames:
            k_prior = _prior_value(prior, regime)
            if k_prior is None:
                raise FitError(f"stiffness regime {regime}: {n} contact frames, need {min_frames}")
            k[regime] = k_prior
            offs[regime] = float(np.mean(f[mask, axis] - k_prior * s[mask, axis])) if n else 0.0
            if n:
                residuals.append(f[mask, axis] - k_prior * s[mask, axis] - offs[regime])
            continue
        k[regime], offs[regime], res = fit_line(s[mask, axis], f[mask, axis], label=f"stiffness regime {regime}")
        residuals.append(res)
    res_all = np.concatenate(residuals) if residuals else np.zeros(1)
    return StiffnessModel(
        k_x=k["x"],
        k_y=k["y"],
        k_z_plus=k["z_plus"],
        k_z_minus=k["z_minus"],
        c=np.array([offs["x"], offs["y"], offs["z_plus"]]),
        c_z_minus=offs["z_minus"],
        fit_residual=float(np.sqrt(np.mean(res_all**2))),
    )


def fit_stiffness(demo, contact, force_source="gt", min_frames=5, prior=None):
    """Per-demonstration stiffness from a contact signal and a chosen force channel.

    ``force_source`` is ``"gt"`` (sensor force) or ``"psm"`` (joint-torque
    force). Regimes with fewer than ``min_frames`` frames fall back to
    ``prior`` (a :class:`MaterialProfile` or 4 stiffness values) when given.
    """
    if force_source in ("gt", "F_GT", "fs"):
        if demo.f_gt is None:
            raise ValueError(f"demonstration {demo.id!r} has no ground-truth force for a K_FS fit")
        f = demo.f_gt
    elif force_source in ("psm", "F_PSM"):
        f = demo.f_psm
    else:
        raise ValueError(f"force_source must be 'gt' or 'psm', got {force_source!r}")
    c = contact.contact if hasattr(contact, "contact") else contact
    return fit_stiffness_arrays(demo.p, f, c, min_frames=min_frames, prior=prior)


def fit_posdiff(demo):
    """Per-axis gain and offset mapping ``p_des - p`` onto the joint-torque force, over all frames."""
    defl = np.asarray(demo.p_des) - np.asarray(demo.p)
    if len(defl) < 2:
        raise FitError("PosDiff fit needs at least 2 frames")
    d, e = np.zeros(3), np.zeros(3)
    for axis in range(3):
        d[axis], e[axis], _ = fit_line(defl[:, axis], demo.f_psm[:, axis], label=f"PosDiff axis {'xyz'[axis]}")
    return PosDiffModel(d=d, e=e)


def normalized_displacement(p_hat, contact, mode="onset"):
    """Vision displacement used by FullVision: from episode onset, or to the next frame."""
    ph = p_hat.p_hat if isinstance(p_hat, NormalizedPositionSeries) else check_series(p_hat, "p_hat", width=3)
    c = contact.contact if hasattr(contact, "contact") else check_bool_series(contact, "contact")
    check_aligned(len(ph), contact=c)
    if mode == "onset":
        return displacement_from_onset(ph, c)
    if mode == "diff":
        step = np.zeros_like(ph)
        step[:-1] = ph[1:] - ph[:-1]
        # No successor for the final frame: hold the previous difference.
        if len(ph) > 1:
            step[-1] = step[-2]
        step[~c] = 0.0
        return step
    raise ValueError(f"mode must be 'onset' or 'diff', got {mode!r}")


def fit_fullvision_scale(p_hat, contact, f_gt, mode="onset"):
    """Per-axis least-squares scale (no offset) from normalized displacement to sensor force.

    Uses ground-truth force, so it is a benchmarking device only.
    """
    c = contact.contact if hasattr(contact, "contact") else check_bool_series(contact, "contact")
    f = check_series(f_gt, "f_gt", width=3)
    x = normalized_displacement(p_hat, c, mode=mode)
    check_aligned(len(x), f_gt=f)
    if not c.any():
        raise FitError("FullVision scale fit needs at least one contact frame")
    x, f = x[c], f[c]
    sxx = np.einsum("ij,ij->j", x, x)
    sxy = np.einsum("ij,ij->j", x, f)
    return np.divide(sxy, sxx, out=np.zeros(3), where=sxx > 0)


def _split_contact_column(X):
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[1] != 4:
        raise ValueError(f"X must have columns [x, y, z, contact], got shape {X.shape}")
    return check_series(X[:, :3], "X[:, :3]", width=3), check_bool_series(X[:, 3], "contact column")


class LocalStiffnessRegressor(RegressorMixin, BaseEstimator):
    """Contact-conditional linear stiffness model.

    ``fit(X, y)`` takes ``X = [p_x, p_y, p_z, contact]`` and force ``y``;
    ``predict`` returns ``k * s`` in contact and zero elsewhere, without the
    fitted offset.
    """

    def __init__(self, min_frames=5, prior=None):
        self.min_frames = min_frames
        self.prior = prior

    def fit(self, X, y):
        p, c = _split_contact_column(X)
        self.model_ = fit_stiffness_arrays(p, y, c, min_frames=self.min_frames, prior=self.prior)
        return self

    def predict(self, X):
        check_is_fitted(self, "model_")
        p, c = _split_contact_column(X)
        s = displacement_from_onset(p, c)
        out = self.model_.stiffness_for(s) * s
        out[~c] = 0.0
        return out


class PosDiffRegressor(RegressorMixin, BaseEstimator):
    """Per-axis affine map from servo deflection ``p_des - p`` to force."""

    def fit(self, X, y):
        X = check_series(X, "deflection", width=3)
        y = check_series(y, "force", width=3)
        check_aligned(len(X), force=y)
        d, e = np.zeros(3), np.zeros(3)
        for axis in range(3):
            d[axis], e[axis], _ = fit_line(X[:, axis], y[:, axis], label=f"PosDiff axis {'xyz'[axis]}")
        self.model_ = PosDiffModel(d=d, e=e)
        return self

    def predict(self, X):
        check_is_fitted(self, "model_")
        X = check_series(X, "deflection", width=3)
        return X * self.model_.d + self.model_.e


class FullVisionScaler(RegressorMixin, BaseEstimator):
    """Scale normalized vision displacement to force; ``X = [p_hat_x, p_hat_y, p_hat_z, contact]``."""

    def __init__(self, mode="onset"):
        self.mode = mode

    def fit(self, X, y):
        ph, c = _split_contact_column(X)
        self.scale_ = fit_fullvision_scale(ph, c, y, mode=self.mode)
        return self

    def predict(self, X):
        check_is_fitted(self, "scale_")
        ph, c = _split_contact_column(X)
        return normalized_displacement(ph, c, mode=self.mode) * self.scale_
