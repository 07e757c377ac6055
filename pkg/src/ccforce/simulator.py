"""Synthetic teleoperation demonstrations with known ground truth.

The tool tip follows a seeded sum-of-sinusoids path over a horizontal tissue
plane at ``z = 0``. Crossing the plane grasps the tissue; the grasp holds
until the tip rises ``release_height`` above the plane. While grasped the
tissue pushes back linearly on the displacement from the grasp point, with
the Z constant chosen by loading direction. Plastic materials let that
anchor point creep toward the tip, so force relaxes while the grasp holds.
"""

from dataclasses import asdict, dataclass, field, replace

import numpy as np
from scipy.signal import lfilter

from ._validation import check_bool_series, check_finite_scalar
from .types import N_KEYPOINTS, Demonstration, StereoKeypoints, segment_contacts

KEYPOINT_NAMES = (
    "shaft",
    "wrist",
    "jaw_left_base",
    "jaw_left_tip",
    "jaw_right_base",
    "jaw_right_tip",
    "jaw_mid_1",
    "jaw_mid_2",
)

# Keypoint offsets from the tool tip in metres, tool pointing down at the tissue.
TOOL_MODEL = np.array(
    [
        [0.000, 0.004, 0.040],
        [0.000, 0.001, 0.016],
        [-0.0025, 0.000, 0.011],
        [-0.0035, -0.001, 0.001],
        [0.0025, 0.000, 0.011],
        [0.0035, -0.001, 0.001],
        [0.000, 0.000, 0.008],
        [0.000, -0.0005, 0.003],
    ]
)

# Extra keypoint offset per unit jaw aperture: fully open jaws splay the tips
# and, less so, the bases and the lower jaw midpoint.
JAW_OPENING = np.array(
    [
        [0.0, 0.0, 0.0],
        [0.0, 0.0, 0.0],
        [-0.0008, 0.0, 0.0],
        [-0.0030, 0.0, 0.0005],
        [0.0008, 0.0, 0.0],
        [0.0030, 0.0, 0.0005],
        [0.0, 0.0, 0.0],
        [0.0, -0.0015, 0.0],
    ]
)


@dataclass(frozen=True)
class MaterialProfile:
    """Tissue stiffness ``(k_x, k_y, k_z_plus, k_z_minus)`` in N/m.

    ``grasp_aperture`` is how far the jaws stay open while holding the
    tissue (0 closed, 1 fully open); thicker tissue keeps them apart.
    """

    name: str
    k_true: tuple
    stiffness_jitter: float = 0.0
    plastic: bool = False
    plastic_relaxation_time: float = 1.0
    grasp_aperture: float = 0.0

    def __post_init__(self):
        k = tuple(float(v) for v in self.k_true)
        if len(k) != 4:
            raise ValueError("material.k_true needs four values (k_x, k_y, k_z_plus, k_z_minus)")
        for name, v in zip(("k_x", "k_y", "k_z_plus", "k_z_minus"), k):
            check_finite_scalar(v, f"material.k_true.{name}", low=0.0, low_inclusive=False)
        object.__setattr__(self, "k_true", k)
        check_finite_scalar(self.stiffness_jitter, "material.stiffness_jitter", low=0.0)
        check_finite_scalar(self.plastic_relaxation_time, "material.plastic_relaxation_time", low=0.0, low_inclusive=False)
        check_finite_scalar(self.grasp_aperture, "material.grasp_aperture", low=0.0, high=1.0)


SILICONE = MaterialProfile("silicone", (168.0, 182.0, 108.0, 332.0))
REALISTIC = MaterialProfile(
    "realistic",
    (126.0, 131.0, 96.0, 245.0),
    stiffness_jitter=0.1,
    plastic=True,
    plastic_relaxation_time=0.8,
    grasp_aperture=0.35,
)
MATERIALS = {m.name: m for m in (SILICONE, REALISTIC)}


@dataclass(frozen=True)
class NoiseProfile:
    """Sensor and manipulator imperfections.

    ``f_psm_bias`` is the standard deviation of a constant per-demonstration
    offset on the joint-torque force and ``f_psm_gain_std`` that of a
    per-demonstration, per-axis calibration gain error. ``friction`` (N s/m) leaks tool velocity
    into that force and ``servo_lag_s`` adds a velocity-proportional tracking
    error to the desired position; both are unmodelled manipulator dynamics.
    ``servo_coulomb`` (N) is dry joint friction that the position servo must
    also push through, so it deflects ``p_des`` without any tissue force.
    A low-pass cutoff of 0 disables filtering.
    """

    f_psm_bias: float = 0.05
    f_psm_gain_std: float = 0.08
    f_psm_std: float = 0.15
    f_psm_lowpass_hz: float = 4.0
    encoder_std: float = 2e-5
    pixel_std: float = 0.001
    servo_compliance: float = 0.002
    servo_lag_s: float = 0.02
    friction: float = 4.0
    servo_coulomb: float = 0.2

    def __post_init__(self):
        for name, v in asdict(self).items():
            if name == "servo_compliance":
                check_finite_scalar(v, f"noise.{name}", low=0.0, low_inclusive=False)
            else:
                check_finite_scalar(v, f"noise.{name}", low=0.0)

    @classmethod
    def zero(cls, servo_compliance=0.002):
        return cls(0.0, 0.0, 0.0, 0.0, 0.0, 0.0, servo_compliance, 0.0, 0.0, 0.0)


@dataclass(frozen=True)
class CameraRig:
    """Pinhole stereo pair. The left camera sits at ``eye`` looking at ``target``;
    the right camera is displaced by ``baseline`` along the left camera's x axis.
    """

    focal: float = 600.0
    baseline: float = 0.005
    image_size: tuple = (960, 540)
    eye: tuple = (0.0, -0.075, 0.095)
    target: tuple = (0.0, 0.0, 0.02)
    up: tuple = (0.0, 0.0, 1.0)

    def __post_init__(self):
        check_finite_scalar(self.focal, "camera.focal", low=0.0, low_inclusive=False)
        # Zero baseline is allowed as a degenerate (monocular) rig.
        check_finite_scalar(self.baseline, "camera.baseline", low=0.0)
        for name in ("image_size", "eye", "target", "up"):
            vals = tuple(float(v) for v in getattr(self, name))
            if not np.all(np.isfinite(vals)):
                raise ValueError(f"camera.{name} must be finite")
            object.__setattr__(self, name, vals)
        if len(self.image_size) != 2 or min(self.image_size) <= 0:
            raise ValueError("camera.image_size must be two positive numbers")
        fwd = np.subtract(self.target, self.eye)
        if np.linalg.norm(fwd) == 0 or np.linalg.norm(np.cross(fwd, self.up)) < 1e-12:
            raise ValueError("camera.eye, camera.target and camera.up are degenerate")

    def rotation(self):
        """World-to-camera rotation; rows are the camera x (right), y (down), z (forward) axes."""
        z = np.subtract(self.target, self.eye)
        z = z / np.linalg.norm(z)
        x = np.cross(z, self.up)
        x /= np.linalg.norm(x)
        y = np.cross(z, x)
        return np.stack([x, y, z])

    def centers(self):
        R = self.rotation()
        left = np.asarray(self.eye, dtype=np.float64)
        return left, left + self.baseline * R[0]


SILICONE_RIG = CameraRig()
REALISTIC_RIG = CameraRig(eye=(0.03, -0.07, 0.085), target=(0.004, 0.0, 0.02), focal=560.0)


@dataclass(frozen=True)
class WorkerModel:
    n_workers: int = 5
    flip_rate: float = 0.05
    lag_frames: int = 2

    def __post_init__(self):
        if int(self.n_workers) != self.n_workers or self.n_workers < 1:
            raise ValueError("worker.n_workers must be an integer >= 1")
        check_finite_scalar(self.flip_rate, "worker.flip_rate", low=0.0, high=0.5)
        if int(self.lag_frames) != self.lag_frames or self.lag_frames < 0:
            raise ValueError("worker.lag_frames must be an integer >= 0")


@dataclass(frozen=True)
class TrajectoryProfile:
    """Sum-of-sinusoids tool path.

    ``vertical_offset`` is the mean tip height above the tissue plane; the
    vertical oscillation runs at ``pushes_per_min`` (drawn per demonstration
    from the given range) so each cycle makes one contact episode.
    """

    lateral_amplitude: float = 0.008
    vertical_amplitude: float = 0.010
    vertical_offset: float = 0.002
    release_height: float = 0.003
    pushes_per_min: tuple = (3.0, 8.0)
    amplitude_jitter: float = 0.05
    jaw_lead_s: tuple = (0.0, 0.05)
    jaw_lag_s: tuple = (0.0, 0.08)
    open_aperture: tuple = (0.5, 1.0)

    def __post_init__(self):
        check_finite_scalar(self.lateral_amplitude, "trajectory.lateral_amplitude", low=0.0)
        check_finite_scalar(self.vertical_amplitude, "trajectory.vertical_amplitude", low=0.0)
        check_finite_scalar(self.vertical_offset, "trajectory.vertical_offset")
        check_finite_scalar(self.release_height, "trajectory.release_height", low=0.0)
        check_finite_scalar(self.amplitude_jitter, "trajectory.amplitude_jitter", low=0.0, high=0.5)
        lo, hi = (float(v) for v in self.pushes_per_min)
        if not (0 < lo <= hi):
            raise ValueError("trajectory.pushes_per_min must be an increasing positive range")
        object.__setattr__(self, "pushes_per_min", (lo, hi))
        for name in ("jaw_lead_s", "jaw_lag_s", "open_aperture"):
            lo, hi = (float(v) for v in getattr(self, name))
            if not (0 <= lo <= hi):
                raise ValueError(f"trajectory.{name} must be an increasing non-negative range")
            object.__setattr__(self, name, (lo, hi))
        if self.open_aperture[1] > 1:
            raise ValueError("trajectory.open_aperture must lie within [0, 1]")


def _sample_path(traj, t, rng):
    n = t.shape[0]
    p = np.zeros((n, 3))
    for axis in range(2):
        n_terms = int(rng.integers(2, 4))
        weights = rng.uniform(0.5, 1.0, n_terms)
        weights /= weights.sum()
        amp = traj.lateral_amplitude * (1.0 + traj.amplitude_jitter * rng.uniform(-1, 1))
        for w in weights:
            freq = rng.uniform(0.03, 0.25)
            phase = rng.uniform(0, 2 * np.pi)
            p[:, axis] += amp * w * np.sin(2 * np.pi * freq * t + phase)
    push_freq = rng.uniform(*traj.pushes_per_min) / 60.0
    amp = traj.vertical_amplitude * (1.0 + traj.amplitude_jitter * rng.uniform(-1, 1))
    p[:, 2] = traj.vertical_offset + 0.85 * amp * np.sin(2 * np.pi * push_freq * t + rng.uniform(0, 2 * np.pi))
    wobble_freq = push_freq * rng.uniform(2.5, 4.0)
    p[:, 2] += 0.15 * amp * np.sin(2 * np.pi * wobble_freq * t + rng.uniform(0, 2 * np.pi))
    return p


def _tissue_response(p, k, traj, material, dt):
    """Grasp state and reaction force for a tip path ``p`` (n, 3)."""
    n = p.shape[0]
    contact = np.zeros(n, dtype=bool)
    f = np.zeros((n, 3))
    creep = 1.0 - np.exp(-dt / material.plastic_relaxation_time) if material.plastic else 0.0
    engaged = False
    anchor = np.zeros(3)
    kx, ky, kzp, kzm = k
    for i in range(n):
        if not engaged and p[i, 2] < 0.0:
            engaged = True
            anchor = p[i].copy()
        elif engaged and p[i, 2] > traj.release_height:
            engaged = False
        if engaged:
            contact[i] = True
            s = p[i] - anchor
            f[i, 0] = kx * s[0]
            f[i, 1] = ky * s[1]
            f[i, 2] = (kzp if s[2] > 0 else kzm) * s[2]
            if creep:
                anchor += creep * (p[i] - anchor)
    return contact, f


def _jaw_aperture(contact, traj, material, dt, rng):
    """Jaw opening per frame, 0 closed to 1 open.

    Jaws hold at the material's grasp aperture from a random lead before each
    grasp to a random lag after it; between grasps each opening is drawn from
    ``traj.open_aperture``.
    """
    n = contact.shape[0]
    closed = np.zeros(n, dtype=bool)
    for a, b in segment_contacts(contact):
        lead = int(round(rng.uniform(*traj.jaw_lead_s) / dt))
        lag = int(round(rng.uniform(*traj.jaw_lag_s) / dt))
        closed[max(a - lead, 0) : min(b + lag + 1, n)] = True
    aperture = np.full(n, float(material.grasp_aperture))
    for a, b in segment_contacts(~closed):
        aperture[a : b + 1] = rng.uniform(*traj.open_aperture)
    return aperture


def _lowpass(x, cutoff_hz, dt):
    if cutoff_hz <= 0:
        return x.copy()
    alpha = 1.0 - np.exp(-2 * np.pi * cutoff_hz * dt)
    zi = (1.0 - alpha) * x[:1]
    y, _ = lfilter([alpha], [1.0, alpha - 1.0], x, axis=0, zi=zi)
    return y


def project_points(points, rig):
    """Project world points (..., 3) into both views.

    Returns ``(left, right)`` arrays of shape (..., 2) in normalized image
    coordinates and the depth of each point in the left camera.
    """
    pts = np.asarray(points, dtype=np.float64)
    R = rig.rotation()
    w, h = rig.image_size
    out = []
    depth = None
    for center in rig.centers():
        cam = (pts - center) @ R.T
        if depth is None:
            depth = cam[..., 2]
        z = cam[..., 2]
        if np.any(z <= 0):
            return None, None, z
        u = (rig.focal * cam[..., 0] / z + w / 2) / w
        v = (rig.focal * cam[..., 1] / z + h / 2) / h
        out.append(np.stack([u, v], axis=-1))
    return out[0], out[1], depth


def _check_visible(left, right, depth, names):
    if left is None:
        bad = np.argwhere(depth <= 0)[0]
        raise ValueError(f"keypoint {names[bad[-1]]!r} is behind the camera")
    for view, arr in (("left", left), ("right", right)):
        outside = (arr < 0) | (arr > 1)
        if outside.any():
            bad = np.argwhere(outside)[0]
            raise ValueError(f"keypoint {names[bad[-2]]!r} falls outside the {view} image")


def _tool_points(tool_pose, tool_model, aperture=None):
    pose = np.asarray(tool_pose, dtype=np.float64)
    pts = pose[..., None, :] + tool_model
    if aperture is not None:
        pts = pts + np.asarray(aperture, dtype=np.float64)[..., None, None] * JAW_OPENING
    return pts


def project_keypoints(tool_pose, rig, noise, seed, tool_model=TOOL_MODEL, aperture=0.0):
    """Stereo keypoints of the tool placed with its tip at ``tool_pose``.

    ``aperture`` runs from 0 (jaws closed) to 1 (fully open). Gaussian noise of ``noise.pixel_std`` (normalized units) is added to every
    coordinate and the result clipped to the image.
    """
    pose = np.asarray(tool_pose, dtype=np.float64)
    if pose.shape != (3,) or not np.all(np.isfinite(pose)):
        raise ValueError("tool_pose must be a finite 3-vector")
    model = np.asarray(tool_model, dtype=np.float64)
    if model.shape != (N_KEYPOINTS, 3):
        raise ValueError("tool_model must have shape (8, 3)")
    aperture = check_finite_scalar(aperture, "aperture", low=0.0, high=1.0)
    left, right, depth = project_points(_tool_points(pose, model, aperture), rig)
    _check_visible(left, right, depth, KEYPOINT_NAMES)
    rng = np.random.default_rng(seed)
    if noise.pixel_std > 0:
        left = np.clip(left + rng.normal(0, noise.pixel_std, left.shape), 0, 1)
        right = np.clip(right + rng.normal(0, noise.pixel_std, right.shape), 0, 1)
    return StereoKeypoints(left=left, right=right)


def project_series(p, rig, noise, rng, tool_model=TOOL_MODEL, aperture=None):
    """Keypoints (n, 2, 8, 2) for a tip path (n, 3) and optional jaw apertures (n,)."""
    left, right, depth = project_points(_tool_points(p, tool_model, aperture), rig)
    _check_visible(left, right, depth, KEYPOINT_NAMES)
    kp = np.stack([left, right], axis=1)
    if noise.pixel_std > 0:
        kp = np.clip(kp + rng.normal(0, noise.pixel_std, kp.shape), 0, 1)
    return kp


def simulate_worker_labels(contact_gt, workers, seed):
    """Per-frame labels (n, n_workers) from delayed, randomly flipped truth."""
    truth = check_bool_series(contact_gt, "contact_gt")
    rng = np.random.default_rng(seed)
    n = truth.shape[0]
    lag = int(workers.lag_frames)
    delayed = np.concatenate([np.full(min(lag, n), truth[0]), truth[: n - lag]]) if lag else truth
    flips = rng.random((n, workers.n_workers)) < workers.flip_rate
    return delayed[:, None] ^ flips


def simulate_demonstration(
    material,
    noise,
    rig,
    duration_s,
    seed,
    *,
    trajectory=None,
    workers=None,
    sample_rate_hz=100.0,
    demo_id=None,
):
    """Generate one demonstration; identical inputs give identical output."""
    duration_s = check_finite_scalar(duration_s, "duration_s", low=0.0, low_inclusive=False)
    sample_rate_hz = check_finite_scalar(sample_rate_hz, "sample_rate_hz", low=0.0, low_inclusive=False)
    trajectory = trajectory or TrajectoryProfile()
    workers = workers or WorkerModel()
    n = int(round(duration_s * sample_rate_hz))
    if n < 2:
        raise ValueError("duration_s is shorter than two samples")
    dt = 1.0 / sample_rate_hz
    t = np.arange(n) * dt

    path_ss, k_ss, sensor_ss, pixel_ss, worker_ss, jaw_ss = np.random.SeedSequence(seed).spawn(6)
    p_true = _sample_path(trajectory, t, np.random.default_rng(path_ss))

    k = np.asarray(material.k_true)
    if material.stiffness_jitter > 0:
        k_rng = np.random.default_rng(k_ss)
        k = k * np.clip(1.0 + material.stiffness_jitter * k_rng.standard_normal(4), 0.2, None)
    contact, f_gt = _tissue_response(p_true, k, trajectory, material, dt)

    rng = np.random.default_rng(sensor_ss)
    v = np.gradient(p_true, dt, axis=0)
    bias = rng.normal(0, noise.f_psm_bias, 3) if noise.f_psm_bias > 0 else np.zeros(3)
    gain = 1.0 + (rng.normal(0, noise.f_psm_gain_std, 3) if noise.f_psm_gain_std > 0 else np.zeros(3))
    f_psm = gain * _lowpass(f_gt, noise.f_psm_lowpass_hz, dt) + bias + noise.friction * v
    if noise.f_psm_std > 0:
        f_psm = f_psm + rng.normal(0, noise.f_psm_std, f_psm.shape)
    p = p_true.copy()
    # dry friction switches sign with direction of travel; tanh keeps it smooth at rest
    dry = noise.servo_coulomb * np.tanh(v / 0.002)
    p_des = p_true + noise.servo_compliance * (f_gt + dry) + noise.servo_lag_s * v
    if noise.encoder_std > 0:
        p = p + rng.normal(0, noise.encoder_std, p.shape)
        p_des = p_des + rng.normal(0, noise.encoder_std, p.shape)

    aperture = _jaw_aperture(contact, trajectory, material, dt, np.random.default_rng(jaw_ss))
    keypoints = project_series(p_true, rig, noise, np.random.default_rng(pixel_ss), aperture=aperture)
    crowd = simulate_worker_labels(contact, workers, worker_ss)
    return Demonstration(
        id=demo_id or f"{material.name}-{seed}",
        material_profile=material.name,
        sample_rate_hz=sample_rate_hz,
        t=t,
        p=p,
        p_des=p_des,
        f_psm=f_psm,
        f_gt=f_gt,
        keypoints=keypoints,
        contact_gt=contact,
        crowd_labels=crowd,
        k_true=tuple(k),
    )


@dataclass(frozen=True)
class Scene:
    """Everything needed to generate demonstrations of one material."""

    material: MaterialProfile = SILICONE
    noise: NoiseProfile = field(default_factory=NoiseProfile)
    rig: CameraRig = SILICONE_RIG
    trajectory: TrajectoryProfile = field(default_factory=TrajectoryProfile)
    workers: WorkerModel = field(default_factory=WorkerModel)
    duration_s: float = 60.0
    sample_rate_hz: float = 100.0

    def with_(self, **changes):
        return replace(self, **changes)

    def simulate(self, seed, demo_id=None):
        return simulate_demonstration(
            self.material,
            self.noise,
            self.rig,
            self.duration_s,
            seed,
            trajectory=self.trajectory,
            workers=self.workers,
            sample_rate_hz=self.sample_rate_hz,
            demo_id=demo_id,
        )

    def simulate_many(self, n, base_seed, prefix=None):
        prefix = prefix or self.material.name
        return [self.simulate(base_seed + i, demo_id=f"{prefix}-{base_seed + i:06d}") for i in range(n)]
