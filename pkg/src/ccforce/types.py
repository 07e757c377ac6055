"""Domain types and contact-episode segmentation.

A demonstration is stored column-wise (one array per channel) because every
consumer works on whole series; :class:`DemonstrationFrame` gives the
per-sample view when one is needed.
"""

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from ._validation import check_bool_series, frozen_copy

N_KEYPOINTS = 8

# Method tags. ASCII hyphens so they can be typed on a command line.
F_PSM = "F_PSM"
C_FS_K_FS = "C_FS-K_FS"
C_V_K_FS = "C_V-K_FS"
C_V_K_PSM = "C_V-K_PSM"
POSDIFF = "PosDiff"
FULLVISION = "FullVision"
METHOD_TAGS = (F_PSM, C_FS_K_FS, C_V_K_FS, C_V_K_PSM, POSDIFF, FULLVISION)


def canonical_tag(tag):
    """Map user spellings (en dash, lower case) onto a canonical method tag."""
    norm = str(tag).replace("\u2013", "-").replace("\u2014", "-").strip()
    for t in METHOD_TAGS:
        if norm.lower() == t.lower():
            return t
    # FullVision variants carry the position model in parentheses.
    if norm.lower().startswith("fullvision"):
        return norm
    raise ValueError(f"unknown method tag {tag!r}; expected one of {METHOD_TAGS}")


def segment_contacts(contact):
    """Split a boolean series into maximal runs of ``True``.

    Returns a list of ``(onset, release)`` index pairs, both inclusive.

    >>> segment_contacts([False, True, True, False, True])
    [(1, 2), (4, 4)]
    """
    c = check_bool_series(contact, "contact")
    if not c.any():
        return []
    padded = np.concatenate(([False], c, [False])).astype(np.int8)
    edges = np.diff(padded)
    onsets = np.flatnonzero(edges == 1)
    releases = np.flatnonzero(edges == -1) - 1
    return [(int(a), int(b)) for a, b in zip(onsets, releases)]


def episodes_to_mask(episodes, n):
    mask = np.zeros(n, dtype=bool)
    for a, b in episodes:
        mask[a : b + 1] = True
    return mask


def onset_index(contact):
    """Per-frame index of the onset of the enclosing episode, -1 outside contact."""
    c = check_bool_series(contact, "contact")
    out = np.full(c.shape[0], -1, dtype=np.int64)
    for a, b in segment_contacts(c):
        out[a : b + 1] = a
    return out


@dataclass(frozen=True)
class StereoKeypoints:
    """Eight tool keypoints seen by each camera, in normalized image coordinates."""

    left: np.ndarray
    right: np.ndarray

    def __post_init__(self):
        for name in ("left", "right"):
            arr = np.asarray(getattr(self, name), dtype=np.float64)
            if arr.shape != (N_KEYPOINTS, 2):
                raise ValueError(f"{name} keypoints must have shape (8, 2), got {arr.shape}")
            if not np.all(np.isfinite(arr)) or arr.min() < 0.0 or arr.max() > 1.0:
                raise ValueError(f"{name} keypoints must be finite and within [0, 1]")
            object.__setattr__(self, name, frozen_copy(arr))

    def as_vector(self):
        """Flatten to the 32-vector layout ``[left (u, v) x 8, right (u, v) x 8]``."""
        return np.concatenate([self.left.ravel(), self.right.ravel()])

    @classmethod
    def from_vector(cls, vec):
        v = np.asarray(vec, dtype=np.float64).reshape(2, N_KEYPOINTS, 2)
        return cls(left=v[0], right=v[1])


@dataclass(frozen=True)
class DemonstrationFrame:
    t: float
    p: np.ndarray
    p_des: np.ndarray
    f_psm: np.ndarray
    f_gt: Optional[np.ndarray] = None
    keypoints: Optional[StereoKeypoints] = None
    contact_gt: Optional[bool] = None
    crowd_labels: Optional[tuple] = None


@dataclass(frozen=True)
class Demonstration:
    """One recorded (or simulated) manipulation sequence.

    Array channels have one row per frame: ``t`` (n,), ``p``, ``p_des``,
    ``f_psm``, ``f_gt`` (n, 3), ``keypoints`` (n, 2, 8, 2) ordered
    view/keypoint/(u, v), ``contact_gt`` (n,), ``crowd_labels`` (n, workers).
    Optional channels are either present for every frame or absent.
    ``k_true`` records the generator stiffness for simulated data.
    """

    id: str
    material_profile: str
    sample_rate_hz: float
    t: np.ndarray
    p: np.ndarray
    p_des: np.ndarray
    f_psm: np.ndarray
    f_gt: Optional[np.ndarray] = None
    keypoints: Optional[np.ndarray] = None
    contact_gt: Optional[np.ndarray] = None
    crowd_labels: Optional[np.ndarray] = None
    k_true: Optional[tuple] = None

    def __post_init__(self):
        t = np.asarray(self.t, dtype=np.float64)
        if t.ndim != 1 or t.shape[0] == 0:
            raise ValueError("demonstration needs a non-empty 1-D time axis")
        n = t.shape[0]
        if np.any(np.diff(t) <= 0):
            raise ValueError(f"demonstration {self.id!r}: t must be strictly increasing")
        if not self.sample_rate_hz > 0:
            raise ValueError("sample_rate_hz must be positive")
        object.__setattr__(self, "t", frozen_copy(t))
        shapes = {
            "p": (n, 3),
            "p_des": (n, 3),
            "f_psm": (n, 3),
            "f_gt": (n, 3),
            "keypoints": (n, 2, N_KEYPOINTS, 2),
        }
        for name, shape in shapes.items():
            val = getattr(self, name)
            if val is None:
                if name in ("p", "p_des", "f_psm"):
                    raise ValueError(f"demonstration {self.id!r} is missing {name}")
                continue
            arr = np.asarray(val, dtype=np.float64)
            if arr.shape != shape:
                raise ValueError(f"demonstration {self.id!r}: {name} has shape {arr.shape}, expected {shape}")
            if not np.all(np.isfinite(arr)):
                raise ValueError(f"demonstration {self.id!r}: {name} contains non-finite values")
            object.__setattr__(self, name, frozen_copy(arr))
        if self.contact_gt is not None:
            c = check_bool_series(self.contact_gt, "contact_gt")
            if c.shape[0] != n:
                raise ValueError(f"demonstration {self.id!r}: contact_gt has length {c.shape[0]}, expected {n}")
            object.__setattr__(self, "contact_gt", frozen_copy(c))
        if self.crowd_labels is not None:
            cl = np.asarray(self.crowd_labels)
            if cl.ndim != 2 or cl.shape[0] != n or cl.shape[1] < 1:
                raise ValueError(f"demonstration {self.id!r}: crowd_labels must have shape (n, workers)")
            object.__setattr__(self, "crowd_labels", frozen_copy(cl.astype(bool)))
        if self.k_true is not None:
            object.__setattr__(self, "k_true", tuple(float(k) for k in self.k_true))

    def __len__(self):
        return self.t.shape[0]

    def frame(self, i):
        kp = None
        if self.keypoints is not None:
            kp = StereoKeypoints(left=self.keypoints[i, 0], right=self.keypoints[i, 1])
        return DemonstrationFrame(
            t=float(self.t[i]),
            p=self.p[i],
            p_des=self.p_des[i],
            f_psm=self.f_psm[i],
            f_gt=None if self.f_gt is None else self.f_gt[i],
            keypoints=kp,
            contact_gt=None if self.contact_gt is None else bool(self.contact_gt[i]),
            crowd_labels=None if self.crowd_labels is None else tuple(bool(b) for b in self.crowd_labels[i]),
        )

    @property
    def frames(self):
        return [self.frame(i) for i in range(len(self))]

    def keypoint_vectors(self):
        """Keypoints as an (n, 32) matrix in :meth:`StereoKeypoints.as_vector` layout."""
        if self.keypoints is None:
            raise ValueError(f"demonstration {self.id!r} has no keypoint channel")
        return self.keypoints.reshape(len(self), -1)


@dataclass(frozen=True)
class StiffnessModel:
    """Per-demonstration linear stiffness with the Z axis split by loading direction.

    ``k_z_plus`` applies to tension (positive Z displacement), ``k_z_minus``
    to compression. ``c`` holds the fitted offsets (x, y, z tension) and
    ``c_z_minus`` the compression offset; force prediction uses neither.
    """

    k_x: float
    k_y: float
    k_z_plus: float
    k_z_minus: float
    c: np.ndarray = field(default_factory=lambda: np.zeros(3))
    fit_residual: float = 0.0
    c_z_minus: float = 0.0

    def __post_init__(self):
        vals = [self.k_x, self.k_y, self.k_z_plus, self.k_z_minus, self.fit_residual, self.c_z_minus]
        if not np.all(np.isfinite(vals)):
            raise ValueError("stiffness values must be finite")
        if self.fit_residual < 0:
            raise ValueError("fit_residual must be >= 0")
        for name in ("k_x", "k_y", "k_z_plus", "k_z_minus", "fit_residual", "c_z_minus"):
            object.__setattr__(self, name, float(getattr(self, name)))
        c = np.asarray(self.c, dtype=np.float64)
        if c.shape != (3,) or not np.all(np.isfinite(c)):
            raise ValueError("c must be a finite 3-vector")
        object.__setattr__(self, "c", frozen_copy(c))

    @property
    def k(self):
        """(k_x, k_y, k_z_plus, k_z_minus) as an array."""
        return np.array([self.k_x, self.k_y, self.k_z_plus, self.k_z_minus])

    def stiffness_for(self, s):
        """Per-frame stiffness vectors, choosing the Z constant by the sign of ``s_z``."""
        s = np.asarray(s, dtype=np.float64).reshape(-1, 3)
        k = np.empty_like(s)
        k[:, 0] = self.k_x
        k[:, 1] = self.k_y
        k[:, 2] = np.where(s[:, 2] > 0, self.k_z_plus, self.k_z_minus)
        return k


@dataclass(frozen=True)
class PosDiffModel:
    d: np.ndarray
    e: np.ndarray

    def __post_init__(self):
        for name in ("d", "e"):
            arr = np.asarray(getattr(self, name), dtype=np.float64)
            if arr.shape != (3,) or not np.all(np.isfinite(arr)):
                raise ValueError(f"{name} must be a finite 3-vector")
            object.__setattr__(self, name, frozen_copy(arr))


@dataclass(frozen=True)
class ContactSignal:
    """Boolean contact series with an optional probability channel.

    ``episodes`` is derived from ``contact`` and cannot be set directly.
    """

    contact: np.ndarray
    probability: Optional[np.ndarray] = None
    episodes: tuple = field(init=False)

    def __post_init__(self):
        c = check_bool_series(self.contact, "contact")
        object.__setattr__(self, "contact", frozen_copy(c))
        if self.probability is not None:
            prob = np.asarray(self.probability, dtype=np.float64)
            if prob.shape != c.shape:
                raise ValueError("probability must align with contact")
            if not np.all(np.isfinite(prob)) or prob.min() < 0 or prob.max() > 1:
                raise ValueError("probability must lie in [0, 1]")
            object.__setattr__(self, "probability", frozen_copy(prob))
        object.__setattr__(self, "episodes", tuple(segment_contacts(c)))

    def __len__(self):
        return self.contact.shape[0]


@dataclass(frozen=True)
class NormalizedPositionSeries:
    p_hat: np.ndarray
    p_min: np.ndarray
    p_max: np.ndarray

    def __post_init__(self):
        p_hat = np.asarray(self.p_hat, dtype=np.float64)
        if p_hat.ndim != 2 or p_hat.shape[1] != 3:
            raise ValueError(f"p_hat must have shape (n, 3), got {p_hat.shape}")
        object.__setattr__(self, "p_hat", frozen_copy(p_hat))
        object.__setattr__(self, "p_min", frozen_copy(np.asarray(self.p_min, dtype=np.float64).reshape(3)))
        object.__setattr__(self, "p_max", frozen_copy(np.asarray(self.p_max, dtype=np.float64).reshape(3)))

    def __len__(self):
        return self.p_hat.shape[0]

    @property
    def range(self):
        return self.p_max - self.p_min


@dataclass(frozen=True)
class ForceSeries:
    """Force estimate for one demonstration, tagged with the producing method.

    ``unitless`` marks FullVision output that has not been rescaled.
    """

    f: np.ndarray
    source: str
    unitless: bool = False

    def __post_init__(self):
        f = np.asarray(self.f, dtype=np.float64)
        if f.ndim != 2 or f.shape[1] != 3:
            raise ValueError(f"force series must have shape (n, 3), got {f.shape}")
        object.__setattr__(self, "f", frozen_copy(f))

    def __len__(self):
        return self.f.shape[0]
