"""Force series for every compared method."""

from dataclasses import dataclass, field
from typing import Mapping, Optional

import numpy as np

from ._validation import check_aligned
from .stiffness import displacement_from_onset, normalized_displacement
from .types import (
    C_FS_K_FS,
    C_V_K_FS,
    C_V_K_PSM,
    F_PSM,
    FULLVISION,
    POSDIFF,
    ContactSignal,
    ForceSeries,
    canonical_tag,
)


def estimate_force_contact_conditional(demo, contact, model, source=C_V_K_PSM):
    """``k * s`` while in contact, zero otherwise; the fitted offset is not applied."""
    check_aligned(len(demo), contact=contact.contact)
    s = displacement_from_onset(demo.p, contact)
    f = model.stiffness_for(s) * s
    f[~contact.contact] = 0.0
    return ForceSeries(f=f, source=source)


def estimate_force_posdiff(demo, model):
    f = (np.asarray(demo.p_des) - np.asarray(demo.p)) * model.d + model.e
    return ForceSeries(f=f, source=POSDIFF)


def estimate_force_fullvision(p_hat, contact, k_scale, mode="onset", source=FULLVISION):
    """Scaled normalized-position displacement in contact; unitless until ``k_scale`` is fitted."""
    k = np.asarray(k_scale, dtype=np.float64).reshape(3)
    x = normalized_displacement(p_hat, contact, mode=mode)
    return ForceSeries(f=x * k, source=source, unitless=True)


def smooth_force(f, window_frames):
    """Centred moving average per axis; windows shrink at the edges."""
    if int(window_frames) != window_frames or window_frames < 1:
        raise ValueError("window_frames must be a positive integer")
    if window_frames % 2 == 0:
        raise ValueError(f"window_frames must be odd, got {window_frames}")
    arr = f.f if isinstance(f, ForceSeries) else np.asarray(f, dtype=np.float64)
    n, half = arr.shape[0], window_frames // 2
    # direct window sums over a zero-padded copy; the count excludes the padding
    padded = np.pad(arr, ((half, half), (0, 0)))
    sums = np.lib.stride_tricks.sliding_window_view(padded, window_frames, axis=0).sum(axis=-1)
    idx = np.arange(n)
    counts = np.minimum(idx + half, n - 1) - np.maximum(idx - half, 0) + 1
    out = sums / counts[:, None]
    if isinstance(f, ForceSeries):
        return ForceSeries(f=out, source=f.source, unitless=f.unitless)
    return ForceSeries(f=out, source="smoothed")


@dataclass
class MethodArtifacts:
    """Inputs the methods draw on for one demonstration.

    ``stiffness`` maps a contact-conditional method tag to the fit it uses
    (for example the ``C_V-K_PSM`` entry is fitted on F_PSM with vision
    contact).
    """

    contact_truth: Optional[ContactSignal] = None
    contact_vision: Optional[ContactSignal] = None
    stiffness: Mapping = field(default_factory=dict)
    posdiff: object = None
    p_hat: object = None
    fullvision_scale: Optional[np.ndarray] = None
    fullvision_mode: str = "onset"


_CC_CONTACT = {C_FS_K_FS: "contact_truth", C_V_K_FS: "contact_vision", C_V_K_PSM: "contact_vision"}


def run_method(method_tag, demo, artifacts):
    """Dispatch to the estimator for ``method_tag``; a missing prerequisite names the method."""
    tag = canonical_tag(method_tag)
    if tag == F_PSM:
        return ForceSeries(f=demo.f_psm, source=F_PSM)
    if tag in _CC_CONTACT:
        contact = getattr(artifacts, _CC_CONTACT[tag])
        if contact is None:
            raise ValueError(f"{tag} needs a {_CC_CONTACT[tag].replace('_', ' ')} signal")
        model = artifacts.stiffness.get(tag)
        if model is None:
            raise ValueError(f"{tag} needs a stiffness fit")
        return estimate_force_contact_conditional(demo, contact, model, source=tag)
    if tag == POSDIFF:
        if artifacts.posdiff is None:
            raise ValueError(f"{POSDIFF} needs a PosDiff model")
        return estimate_force_posdiff(demo, artifacts.posdiff)
    if tag.startswith(FULLVISION):
        missing = [
            name
            for name in ("p_hat", "contact_vision", "fullvision_scale")
            if getattr(artifacts, name) is None
        ]
        if missing:
            raise ValueError(f"{tag} needs {', '.join(missing)}")
        return estimate_force_fullvision(
            artifacts.p_hat, artifacts.contact_vision, artifacts.fullvision_scale, artifacts.fullvision_mode, source=tag
        )
    raise ValueError(f"no estimator for {tag}")
