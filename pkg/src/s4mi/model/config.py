"""Experiment configuration: declarative YAML mapped onto nested dataclasses."""

import hashlib
import json
from dataclasses import asdict, dataclass, field, fields, replace
from enum import Enum
from pathlib import Path
from typing import Any, Dict, List, Optional, Union

import yaml

from .enums import (
    Averaging,
    IntervalKind,
    Method,
    ModelFamily,
    OptimizerKind,
    PreprocessMode,
    RunStatus,
    ScheduleKind,
    WeightOrientation,
    WeightScheme,
)
from .errors import ConfigError

FORMAT_VERSION = 1
LABEL_FRACTION_GRID = (0.0, 0.1, 0.5, 0.7, 1.0)
SELFSUP_FRACTIONS = (0.1, 1.0)
# Keys that never change what a single seeded run computes.
_UNHASHED_KEYS = ('seeds', 'output_dir', 'allow_any_fraction')


def _enum(enum_cls, value):
    return value if isinstance(value, enum_cls) else enum_cls(value)


def _plain(value: Any) -> Any:
    """Convert enums, tuples and nested containers into JSON-ready values."""
    if isinstance(value, Enum):
        return value.value
    if isinstance(value, dict):
        return {key: _plain(item) for key, item in value.items()}
    if isinstance(value, (list, tuple)):
        return [_plain(item) for item in value]
    return value


def _known(cls, data: Dict[str, Any]) -> Dict[str, Any]:
    names = {f.name for f in fields(cls)}
    unknown = set(data) - names
    if unknown:
        raise ConfigError(f"Unknown {cls.__name__} keys: {sorted(unknown)}")
    return dict(data)


@dataclass
class ModelSpec:
    """Architecture recipe for one micro network."""

    family: ModelFamily = ModelFamily.CONV_UNET
    width: int = 16
    depth: int = 3
    num_classes: int = 2
    in_channels: int = 3
    input_size: int = 224
    patch_size: int = 4
    window_size: int = 7
    num_heads: int = 2
    mlp_ratio: float = 2.0

    def __post_init__(self):
        self.family = _enum(ModelFamily, self.family)

    @property
    def downsample_factor(self) -> int:
        if self.family in (ModelFamily.CONV_UNET, ModelFamily.CONV_CLASSIFIER):
            return 2 ** (self.depth - 1)
        if self.family in (ModelFamily.WINDOWED_ATTENTION, ModelFamily.ATTENTION_CLASSIFIER):
            return self.patch_size
        return 1

    def validate(self) -> None:
        """Raise ConfigError when the input size cannot be tiled by the network."""
        if self.width < 1 or self.depth < 1 or self.num_classes < 1 or self.in_channels < 1:
            raise ConfigError(f"Model spec has non-positive sizes: {self}")
        if self.family == ModelFamily.CONV_UNET and self.depth < 2:
            raise ConfigError("conv_unet needs at least two stages")
        if self.input_size % self.downsample_factor != 0:
            raise ConfigError(
                f"{self.family.value}: input size {self.input_size} is not divisible by "
                f"the downsampling factor {self.downsample_factor}"
            )
        if self.family == ModelFamily.WINDOWED_ATTENTION:
            grid = self.input_size // self.patch_size
            if grid % self.window_size != 0:
                raise ConfigError(
                    f"windowed_attention: feature grid {grid} is not divisible by window {self.window_size}"
                )
        if self.family in (ModelFamily.WINDOWED_ATTENTION, ModelFamily.ATTENTION_CLASSIFIER):
            if self.width % self.num_heads != 0:
                raise ConfigError(f"Attention width {self.width} is not divisible by {self.num_heads} heads")

    def to_dict(self) -> Dict[str, Any]:
        return _plain(asdict(self))

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> 'ModelSpec':
        return cls(**_known(cls, data))


@dataclass
class OptimizerConfig:
    kind: OptimizerKind = OptimizerKind.ADAM
    lr: float = 3.6e-4
    weight_decay: float = 1e-5
    momentum: float = 0.9

    def __post_init__(self):
        self.kind = _enum(OptimizerKind, self.kind)
        if self.lr <= 0:
            raise ConfigError(f"Learning rate must be positive, got {self.lr}")
        if self.weight_decay < 0:
            raise ConfigError(f"Weight decay must be non-negative, got {self.weight_decay}")

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> 'OptimizerConfig':
        return cls(**_known(cls, data))

    @classmethod
    def picie_default(cls) -> 'OptimizerConfig':
        return cls(kind=OptimizerKind.SGD, lr=1e-4, weight_decay=0.0, momentum=0.9)


@dataclass
class ScheduleConfig:
    kind: ScheduleKind = ScheduleKind.COSINE_ANNEALING
    t_max: int = 50
    lr_min: float = 3.4e-4
    step_size: int = 20
    gamma: float = 0.5

    def __post_init__(self):
        self.kind = _enum(ScheduleKind, self.kind)
        if self.t_max < 1:
            raise ConfigError(f"t_max must be at least 1, got {self.t_max}")
        if self.step_size < 1:
            raise ConfigError(f"step_size must be at least 1, got {self.step_size}")

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> 'ScheduleConfig':
        return cls(**_known(cls, data))

    @classmethod
    def picie_default(cls) -> 'ScheduleConfig':
        return cls(kind=ScheduleKind.STEP, step_size=20, gamma=0.5)


@dataclass
class PreprocessProfile:
    """Which of the two dataset pipelines to run and at what sizes."""

    mode: PreprocessMode = PreprocessMode.INTERPOLATE
    tile_size: int = 480
    intermediate_size: int = 480
    target_size: int = 224
    normalize_red: bool = True

    def __post_init__(self):
        self.mode = _enum(PreprocessMode, self.mode)
        if min(self.tile_size, self.intermediate_size, self.target_size) < 1:
            raise ConfigError(f"Preprocess sizes must be positive: {self}")

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> 'PreprocessProfile':
        return cls(**_known(cls, data))


@dataclass
class SyntheticSpec:
    """Recipe for the desk-scale lesion corpus."""

    n_images: int = 200
    image_size: int = 64
    lesion_count: List[int] = field(default_factory=lambda: [1, 1])
    foreground_fraction: float = 0.2
    fraction_jitter: float = 0.05
    aspect_range: List[float] = field(default_factory=lambda: [0.6, 1.0])
    background_color: List[float] = field(default_factory=lambda: [0.85, 0.72, 0.62])
    lesion_colors: List[List[float]] = field(
        default_factory=lambda: [[0.45, 0.2, 0.15], [0.3, 0.22, 0.4]]
    )
    texture_strength: float = 0.04
    noise_level: float = 0.02
    seed: int = 0

    def __post_init__(self):
        if self.n_images < 1 or self.image_size < 8:
            raise ConfigError(f"Synthetic corpus too small: {self}")
        if not 0.0 < self.foreground_fraction < 0.7:
            raise ConfigError("foreground_fraction must lie in (0, 0.7)")
        if self.lesion_count[0] < 1 or self.lesion_count[1] < self.lesion_count[0]:
            raise ConfigError(f"Invalid lesion_count range {self.lesion_count}")

    @property
    def num_image_classes(self) -> int:
        return len(self.lesion_colors)

    def to_dict(self) -> Dict[str, Any]:
        return _plain(asdict(self))

    def spec_hash(self) -> str:
        payload = json.dumps(self.to_dict(), sort_keys=True)
        return hashlib.sha256(payload.encode()).hexdigest()[:12]

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> 'SyntheticSpec':
        return cls(**_known(cls, data))


def _default_conv_model() -> ModelSpec:
    return ModelSpec(family=ModelFamily.CONV_UNET, width=16, depth=3)


def _default_attention_model() -> ModelSpec:
    return ModelSpec(family=ModelFamily.WINDOWED_ATTENTION, width=48, depth=2)


def _default_conv_backbone() -> ModelSpec:
    return ModelSpec(family=ModelFamily.CONV_CLASSIFIER, width=16, depth=3)


def _default_attention_backbone() -> ModelSpec:
    return ModelSpec(family=ModelFamily.ATTENTION_CLASSIFIER, width=48, depth=2, patch_size=16)


def _default_feature_model() -> ModelSpec:
    return ModelSpec(family=ModelFamily.CONV_UNET, width=16, depth=3, num_classes=32)


MODEL_KEYS = ('conv_model', 'attention_model', 'conv_backbone', 'attention_backbone', 'feature_model')


@dataclass
class TrainConfig:
    """One experiment's full recipe."""

    method: Method = Method.SUPERVISED
    dataset: str = "synthetic"
    dataset_tag: str = "synthetic"
    label_fraction: float = 0.1
    seeds: List[int] = field(default_factory=lambda: [1, 2, 3, 4, 5])
    epochs: int = 50
    pretrain_epochs: int = 100
    batch_size: int = 16
    optimizer: OptimizerConfig = field(default_factory=OptimizerConfig)
    schedule: ScheduleConfig = field(default_factory=ScheduleConfig)
    picie_optimizer: OptimizerConfig = field(default_factory=OptimizerConfig.picie_default)
    picie_schedule: ScheduleConfig = field(default_factory=ScheduleConfig.picie_default)
    conv_model: ModelSpec = field(default_factory=_default_conv_model)
    attention_model: ModelSpec = field(default_factory=_default_attention_model)
    conv_backbone: ModelSpec = field(default_factory=_default_conv_backbone)
    attention_backbone: ModelSpec = field(default_factory=_default_attention_backbone)
    feature_model: ModelSpec = field(default_factory=_default_feature_model)
    param_budget: Optional[int] = None
    classifier_backbone: str = "conv"
    embedding_dim: int = 64
    weight_scheme: WeightScheme = WeightScheme.PIXEL_RATIO
    weight_orientation: WeightOrientation = WeightOrientation.COMPLEMENT
    unsup_weight: float = 1.0
    reserve_unlabeled: bool = True
    evaluate_branch: str = "attention"
    augment: bool = True
    preprocess: PreprocessProfile = field(default_factory=PreprocessProfile)
    split: List[float] = field(default_factory=lambda: [0.7, 0.1, 0.2])
    split_seed: Optional[int] = None
    synthetic: SyntheticSpec = field(default_factory=SyntheticSpec)
    picie_k: int = 2
    picie_pixels_per_image: int = 256
    jitter: List[float] = field(default_factory=lambda: [0.3, 0.3, 0.3])
    multilabel: bool = False
    averaging: Averaging = Averaging.MACRO
    interval: IntervalKind = IntervalKind.NORMAL
    pretrained_weights: Optional[str] = None
    num_threads: int = 1
    debug: bool = False
    allow_any_fraction: bool = False
    output_dir: Optional[str] = None

    def __post_init__(self):
        self.method = _enum(Method, self.method)
        self.weight_scheme = _enum(WeightScheme, self.weight_scheme)
        self.weight_orientation = _enum(WeightOrientation, self.weight_orientation)
        self.averaging = _enum(Averaging, self.averaging)
        self.interval = _enum(IntervalKind, self.interval)

    def validate(self) -> 'TrainConfig':
        """Reject combinations the label-fraction protocol forbids."""
        fraction = self.label_fraction
        if not 0.0 <= fraction <= 1.0:
            raise ConfigError(f"label_fraction must lie in [0,1], got {fraction}")
        if not self.allow_any_fraction and not any(abs(fraction - g) < 1e-12 for g in LABEL_FRACTION_GRID):
            raise ConfigError(
                f"label_fraction {fraction} is not on the grid {LABEL_FRACTION_GRID}; "
                f"pass --allow-any-fraction to override"
            )
        if self.method == Method.PICIE and fraction != 0.0:
            raise ConfigError("picie is unsupervised: label_fraction must be 0.0")
        if self.method in (Method.SELFSUP_AUG, Method.SELFSUP_ARCH):
            allowed = fraction > 0.0 if self.allow_any_fraction else any(
                abs(fraction - f) < 1e-12 for f in SELFSUP_FRACTIONS
            )
            if not allowed:
                raise ConfigError(f"{self.method.value} fine-tunes at fractions {SELFSUP_FRACTIONS}, got {fraction}")
        if self.method in (Method.SUPERVISED, Method.SEMI_CROSS_TEACH, Method.TRANSFER) and fraction <= 0.0:
            raise ConfigError(f"{self.method.value} needs a positive label_fraction")
        if not self.seeds:
            raise ConfigError("At least one seed is required")
        if len(set(self.seeds)) != len(self.seeds):
            raise ConfigError(f"Duplicate seeds: {self.seeds}")
        if self.epochs < 0 or self.pretrain_epochs < 0:
            raise ConfigError("Epoch counts must be non-negative")
        if self.batch_size < 2:
            raise ConfigError("batch_size must be at least 2")
        if self.classifier_backbone not in ("conv", "attention"):
            raise ConfigError(f"classifier_backbone must be conv or attention, got {self.classifier_backbone}")
        if self.evaluate_branch not in ("conv", "attention"):
            raise ConfigError(f"evaluate_branch must be conv or attention, got {self.evaluate_branch}")
        if self.method == Method.PICIE and self.picie_k < 2:
            raise ConfigError("picie needs at least two clusters")
        if len(self.split) != 3:
            raise ConfigError("split must list train, val and test fractions")
        if self.schedule.kind == ScheduleKind.COSINE_ANNEALING and self.schedule.lr_min > self.optimizer.lr:
            raise ConfigError(f"Cosine lr_min {self.schedule.lr_min} exceeds the initial lr {self.optimizer.lr}")
        for key in MODEL_KEYS:
            getattr(self, key).validate()
        return self

    def to_dict(self) -> Dict[str, Any]:
        return _plain(asdict(self))

    def config_hash(self) -> str:
        """Canonical hash of everything that determines a seeded run."""
        return hash_config_dict(self.to_dict())

    def with_updates(self, **changes) -> 'TrainConfig':
        return replace(self, **changes)

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> 'TrainConfig':
        if not isinstance(data, dict):
            raise ConfigError("Config root must be a mapping")
        values = _known(cls, data)
        try:
            for key in ('optimizer', 'picie_optimizer'):
                if key in values:
                    values[key] = OptimizerConfig.from_dict(values[key])
            for key in ('schedule', 'picie_schedule'):
                if key in values:
                    values[key] = ScheduleConfig.from_dict(values[key])
            for key in MODEL_KEYS:
                if key in values:
                    values[key] = ModelSpec.from_dict(values[key])
            if 'preprocess' in values:
                values['preprocess'] = PreprocessProfile.from_dict(values['preprocess'])
            if 'synthetic' in values:
                values['synthetic'] = SyntheticSpec.from_dict(values['synthetic'])
            return cls(**values)
        except (TypeError, ValueError) as e:
            if isinstance(e, ConfigError):
                raise
            raise ConfigError(f"Malformed config: {e}") from e


def hash_config_dict(config: Dict[str, Any]) -> str:
    payload = {key: value for key, value in config.items() if key not in _UNHASHED_KEYS}
    canonical = json.dumps(payload, sort_keys=True, separators=(',', ':'))
    return hashlib.sha256(canonical.encode()).hexdigest()[:12]


def load_config(path: Union[str, Path], overrides: Optional[Dict[str, Any]] = None) -> TrainConfig:
    """Load a YAML experiment config, apply top-level overrides, then validate."""
    try:
        with open(path) as f:
            data = yaml.safe_load(f)
    except yaml.YAMLError as e:
        raise ConfigError(f"Cannot parse config {path}: {e}") from e
    if data is not None and not isinstance(data, dict):
        raise ConfigError(f"Config root of {path} must be a mapping")
    merged = {**(data or {}), **(overrides or {})}
    return TrainConfig.from_dict(merged).validate()


@dataclass(frozen=True)
class RunRecord:
    """Persisted outcome of one seeded run."""

    config_hash: str
    seed: int
    config: Dict[str, Any]
    history: Dict[str, Any]
    final_metrics: Dict[str, Dict[str, float]]
    wall_clock_seconds: float
    artifacts: Dict[str, str]
    status: RunStatus = RunStatus.COMPLETED
    diagnostic: Dict[str, Any] = field(default_factory=dict)
    primary_metric: str = "iou"
    format_version: int = FORMAT_VERSION

    @property
    def method(self) -> str:
        return self.config['method']

    @property
    def label_fraction(self) -> float:
        return float(self.config['label_fraction'])

    @property
    def dataset_tag(self) -> str:
        return self.config.get('dataset_tag', self.config.get('dataset', 'unknown'))

    @property
    def completed(self) -> bool:
        return self.status == RunStatus.COMPLETED

    def test_score(self) -> Optional[float]:
        return self.final_metrics.get('test', {}).get(self.primary_metric)

    def to_dict(self) -> Dict[str, Any]:
        return _plain(asdict(self))

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> 'RunRecord':
        if data.get('format_version') != FORMAT_VERSION:
            raise ConfigError(f"Unsupported run record version {data.get('format_version')}")
        values = dict(data)
        values['status'] = RunStatus(values['status'])
        return cls(**values)
