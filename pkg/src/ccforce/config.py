"""Declarative experiment configuration: one YAML file reproduces a benchmark or sweep.

Every section has explicit defaults; ``dump_defaults()`` prints them. Unknown
keys and invalid values are rejected with the offending field and, when the
input came from a file, its line number.
"""

from dataclasses import asdict, dataclass, field, fields, replace

import yaml

from .simulator import (
    MATERIALS,
    REALISTIC,
    REALISTIC_RIG,
    SILICONE,
    SILICONE_RIG,
    CameraRig,
    MaterialProfile,
    NoiseProfile,
    Scene,
    TrajectoryProfile,
    WorkerModel,
)
from .types import METHOD_TAGS, canonical_tag

CONTACT_SOURCES = ("gt-force", "crowd", "classifier")
FORCE_SOURCES = ("gt", "psm")
FULLVISION_MODES = ("onset", "diff")


class ConfigError(ValueError):
    """Invalid configuration; the message names the field and, when known, the line."""


@dataclass(frozen=True)
class SceneConfig:
    material: MaterialProfile = SILICONE
    noise: NoiseProfile = field(default_factory=NoiseProfile)
    camera: CameraRig = SILICONE_RIG
    workers: WorkerModel = field(default_factory=WorkerModel)
    trajectory: TrajectoryProfile = field(default_factory=TrajectoryProfile)
    duration_s: float = 60.0
    sample_rate_hz: float = 100.0

    def scene(self):
        return Scene(
            material=self.material,
            noise=self.noise,
            rig=self.camera,
            trajectory=self.trajectory,
            workers=self.workers,
            duration_s=self.duration_s,
            sample_rate_hz=self.sample_rate_hz,
        )


def _transfer_scene():
    return SceneConfig(material=REALISTIC, camera=REALISTIC_RIG)


@dataclass(frozen=True)
class ClassifierConfig:
    learning_rate: float = 0.5
    l2: float = 1e-3
    epochs: int = 300
    batch_size: int = 0  # 0 means full batch


def _finetune_classifier():
    return ClassifierConfig(learning_rate=0.05, l2=1e-3, epochs=10, batch_size=16)


@dataclass(frozen=True)
class ContactConfig:
    source: str = "classifier"
    threshold_n: float = 0.2
    vote_threshold: float = 0.5
    debounce_frames: int = 1
    classifier: ClassifierConfig = field(default_factory=ClassifierConfig)
    finetune: ClassifierConfig = field(default_factory=_finetune_classifier)

    def __post_init__(self):
        if self.source not in CONTACT_SOURCES:
            raise ConfigError(f"contact.source must be one of {CONTACT_SOURCES}, got {self.source!r}")
        if self.debounce_frames < 1:
            raise ConfigError("contact.debounce_frames must be >= 1")


@dataclass(frozen=True)
class PositionConfig:
    model: str = "fcn"
    hidden: int = 0  # 0 selects the architecture default
    learning_rate: float = 0.0  # 0 selects the architecture default
    l2_weight: float = -1.0  # negative selects the architecture default
    epochs: int = 200
    batch_size: int = 0  # 0 selects the architecture default
    stride: int = 5

    def __post_init__(self):
        if self.model not in ("fcn", "gnn"):
            raise ConfigError(f"position.model must be 'fcn' or 'gnn', got {self.model!r}")
        if self.stride < 1:
            raise ConfigError("position.stride must be >= 1")
        if self.epochs < 0:
            raise ConfigError("position.epochs must be >= 0")

    def estimator_kwargs(self):
        return dict(
            hidden=self.hidden or None,
            learning_rate=self.learning_rate or None,
            l2_weight=None if self.l2_weight < 0 else self.l2_weight,
            epochs=self.epochs,
            batch_size=self.batch_size or None,
        )


@dataclass(frozen=True)
class BenchmarkConfig:
    n_train: int = 6
    n_test: int = 20
    methods: tuple = METHOD_TAGS
    min_stiffness_frames: int = 5
    fullvision_mode: str = "onset"

    def __post_init__(self):
        if self.n_train < 1 or self.n_test < 1:
            raise ConfigError("benchmark.n_train and benchmark.n_test must be >= 1")
        object.__setattr__(self, "methods", tuple(canonical_tag(m) for m in self.methods))
        if self.fullvision_mode not in FULLVISION_MODES:
            raise ConfigError(f"benchmark.fullvision_mode must be one of {FULLVISION_MODES}")


@dataclass(frozen=True)
class SweepConfig:
    task: str = "contact"
    sizes: tuple = (50, 150, 300)
    repeats: int = 5
    arm: str = "pretrained"
    n_pretrain: int = 6
    n_pool: int = 6
    n_test: int = 4

    def __post_init__(self):
        if self.task not in ("contact", "position"):
            raise ConfigError(f"sweep.task must be 'contact' or 'position', got {self.task!r}")
        if self.arm not in ("pretrained", "scratch"):
            raise ConfigError(f"sweep.arm must be 'pretrained' or 'scratch', got {self.arm!r}")
        sizes = tuple(int(s) for s in self.sizes)
        if not sizes or list(sizes) != sorted(sizes) or sizes[0] < 1:
            raise ConfigError("sweep.sizes must be positive and sorted ascending")
        object.__setattr__(self, "sizes", sizes)
        if self.repeats < 1:
            raise ConfigError("sweep.repeats must be >= 1")


@dataclass(frozen=True)
class ExperimentConfig:
    seed: int = 0
    scene: SceneConfig = field(default_factory=SceneConfig)
    transfer_scene: SceneConfig = field(default_factory=_transfer_scene)
    contact: ContactConfig = field(default_factory=ContactConfig)
    position: PositionConfig = field(default_factory=PositionConfig)
    benchmark: BenchmarkConfig = field(default_factory=BenchmarkConfig)
    sweep: SweepConfig = field(default_factory=SweepConfig)

    def with_seed(self, seed):
        return self if seed is None else replace(self, seed=int(seed))


# -- conversion to and from plain mappings -----------------------------------

_NESTED = {
    ExperimentConfig: {
        "scene": SceneConfig,
        "transfer_scene": SceneConfig,
        "contact": ContactConfig,
        "position": PositionConfig,
        "benchmark": BenchmarkConfig,
        "sweep": SweepConfig,
    },
    SceneConfig: {
        "material": MaterialProfile,
        "noise": NoiseProfile,
        "camera": CameraRig,
        "workers": WorkerModel,
        "trajectory": TrajectoryProfile,
    },
    ContactConfig: {"classifier": ClassifierConfig, "finetune": ClassifierConfig},
}


def to_dict(cfg):
    """Plain nested dict with tuples as lists, suitable for YAML."""

    def plain(v):
        if isinstance(v, (tuple, list)):
            return [plain(x) for x in v]
        if isinstance(v, dict):
            return {k: plain(x) for k, x in v.items()}
        return v

    return plain(asdict(cfg))


def _coerce(value, default, path):
    if isinstance(default, bool):
        if not isinstance(value, bool):
            raise ConfigError(f"{path} must be true or false, got {value!r}")
        return value
    if isinstance(default, int) and not isinstance(default, bool):
        if isinstance(value, bool) or not isinstance(value, (int, float)) or int(value) != value:
            raise ConfigError(f"{path} must be an integer, got {value!r}")
        return int(value)
    if isinstance(default, float):
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(f"{path} must be a number, got {value!r}")
        return float(value)
    if isinstance(default, tuple):
        if not isinstance(value, (list, tuple)):
            raise ConfigError(f"{path} must be a list, got {value!r}")
        return tuple(value)
    if isinstance(default, str):
        if not isinstance(value, str):
            raise ConfigError(f"{path} must be a string, got {value!r}")
    return value


def _build(cls, data, path, lines):
    default = cls() if cls is not MaterialProfile else SILICONE
    if cls is MaterialProfile and isinstance(data, str):
        if data not in MATERIALS:
            raise ConfigError(_at(f"{path} must be one of {sorted(MATERIALS)} or a mapping", path, lines))
        return MATERIALS[data]
    if not isinstance(data, dict):
        raise ConfigError(_at(f"{path} must be a mapping", path, lines))
    if cls is MaterialProfile and "name" in data and data["name"] in MATERIALS:
        default = MATERIALS[data["name"]]
    names = {f.name for f in fields(cls) if f.init}
    unknown = sorted(set(data) - names)
    if unknown:
        sub = f"{path}.{unknown[0]}" if path else unknown[0]
        raise ConfigError(_at(f"unknown field {sub}", sub, lines))
    kwargs = {}
    for name in names:
        if name not in data:
            continue
        sub = f"{path}.{name}" if path else name
        nested = _NESTED.get(cls, {}).get(name)
        try:
            if nested is not None:
                kwargs[name] = _build(nested, data[name], sub, lines)
            else:
                kwargs[name] = _coerce(data[name], getattr(default, name), sub)
        except ConfigError as exc:
            raise ConfigError(_at(str(exc), sub, lines)) from None
    try:
        return replace(default, **kwargs)
    except ValueError as exc:
        raise ConfigError(_at(_qualify(str(exc), path), path, lines)) from None


def _qualify(msg, path):
    """Prefix a bare field error with its section so it names the full path."""
    if not path or msg.startswith(path):
        return msg
    head = path.split(".")[-1]
    if msg.startswith(head + "."):
        return f"{path.rsplit('.', 1)[0]}.{msg}" if "." in path else msg
    return f"{path}: {msg}"


def _at(msg, path, lines):
    if "(line " in msg or lines is None:
        return msg
    # prefer the most specific recorded key the message names, else walk up from ``path``
    named = [k for k in lines if k in msg]
    if named:
        return f"{msg} (line {lines[max(named, key=len)]})"
    key = path
    while key and key not in lines:
        key = key.rsplit(".", 1)[0] if "." in key else ""
    if key in lines:
        return f"{msg} (line {lines[key]})"
    return msg


def _line_map(text):
    """Dotted key path -> 1-based line number, from the YAML node tree."""
    out = {}

    def walk(node, prefix):
        if isinstance(node, yaml.MappingNode):
            for k, v in node.value:
                key = f"{prefix}.{k.value}" if prefix else str(k.value)
                out[key] = k.start_mark.line + 1
                walk(v, key)

    root = yaml.compose(text)
    if root is not None:
        walk(root, "")
    return out


def from_dict(data, lines=None):
    if data is None:
        data = {}
    return _build(ExperimentConfig, data, "", lines)


def loads(text):
    try:
        data = yaml.safe_load(text)
        lines = _line_map(text)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        where = f" (line {mark.line + 1})" if mark is not None else ""
        raise ConfigError(f"config is not valid YAML{where}: {getattr(exc, 'problem', exc)}") from None
    return from_dict(data, lines)


def load(path):
    with open(path, encoding="utf-8") as fh:
        return loads(fh.read())


def dumps(cfg):
    return yaml.safe_dump(to_dict(cfg), sort_keys=False, default_flow_style=False)


def dump_defaults():
    return dumps(ExperimentConfig())
