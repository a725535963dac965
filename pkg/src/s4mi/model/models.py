"""Domain models shared across preprocessing, training and evaluation."""

import math
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Union

import numpy as np
import torch

from .enums import GeometricKind, IntervalKind, ViewRegime, WeightScheme
from .errors import InvalidInputError


ClassLabel = Union[int, List[int]]


@dataclass
class RawSample:
    """An ingested image (H×W×C in [0,1]) with an optional class-id mask."""

    id: str
    image: np.ndarray
    mask: Optional[np.ndarray] = None
    dataset_tag: str = "unknown"
    num_classes: int = 2
    label: Optional[ClassLabel] = None

    def __post_init__(self):
        if self.image.ndim != 3 or self.image.shape[2] not in (1, 3):
            raise InvalidInputError(
                f"Sample {self.id}: image must be H×W×C with C in {{1,3}}, got {self.image.shape}"
            )
        if self.image.size == 0:
            raise InvalidInputError(f"Sample {self.id}: empty image")
        if self.image.min() < 0.0 or self.image.max() > 1.0:
            raise InvalidInputError(f"Sample {self.id}: intensities must lie in [0,1]")
        if self.mask is not None:
            if self.mask.shape != self.image.shape[:2]:
                raise InvalidInputError(
                    f"Sample {self.id}: mask shape {self.mask.shape} != image shape {self.image.shape[:2]}"
                )
            if self.mask.size and int(self.mask.max()) >= self.num_classes:
                raise InvalidInputError(f"Sample {self.id}: mask values must be < {self.num_classes}")


@dataclass
class TileGrid:
    """Layout of a tiled image."""

    rows: int
    cols: int
    tile_size: int
    orig_h: int
    orig_w: int
    pad_bottom: int
    pad_right: int

    def __post_init__(self):
        if self.rows != math.ceil(self.orig_h / self.tile_size) or self.cols != math.ceil(self.orig_w / self.tile_size):
            raise InvalidInputError(f"Inconsistent tile grid {self}")
        if not (0 <= self.pad_bottom < self.tile_size and 0 <= self.pad_right < self.tile_size):
            raise InvalidInputError(f"Tile padding must be smaller than the tile size: {self}")

    @property
    def num_tiles(self) -> int:
        return self.rows * self.cols


@dataclass
class PreprocessStep:
    """A replayable record of one preprocessing operation."""

    name: str
    params: Dict[str, Any] = field(default_factory=dict)

    def to_dict(self) -> Dict[str, Any]:
        return {'name': self.name, 'params': dict(self.params)}

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> 'PreprocessStep':
        return cls(name=data['name'], params=dict(data.get('params', {})))


@dataclass
class ProcessedSample:
    """A model-ready square image (and optional mask) with its step provenance."""

    id: str
    image: np.ndarray
    mask: Optional[np.ndarray] = None
    steps: List[PreprocessStep] = field(default_factory=list)
    label: Optional[ClassLabel] = None

    def __post_init__(self):
        if self.image.ndim != 3 or self.image.shape[0] != self.image.shape[1]:
            raise InvalidInputError(f"Processed sample {self.id} must be square H×W×C, got {self.image.shape}")
        if self.mask is not None and self.mask.shape != self.image.shape[:2]:
            raise InvalidInputError(f"Processed sample {self.id}: mask/image shape mismatch")
        if not self.steps:
            raise InvalidInputError(f"Processed sample {self.id} has no recorded steps")

    @property
    def size(self) -> int:
        return self.image.shape[0]

    @property
    def channels(self) -> int:
        return self.image.shape[2]


@dataclass
class SplitSpec:
    """Train/validation/test proportions."""

    train_frac: float = 0.7
    val_frac: float = 0.1
    test_frac: float = 0.2
    seed: int = 0

    def __post_init__(self):
        fractions = (self.train_frac, self.val_frac, self.test_frac)
        if any(f < 0 for f in fractions):
            raise InvalidInputError(f"Split fractions must be non-negative: {fractions}")
        if abs(sum(fractions) - 1.0) > 1e-9:
            raise InvalidInputError(f"Split fractions must sum to 1.0: {fractions}")

    @classmethod
    def random_split(cls, seed: int = 0) -> 'SplitSpec':
        return cls(0.7, 0.1, 0.2, seed)

    @classmethod
    def isic_split(cls, seed: int = 0) -> 'SplitSpec':
        return cls(0.57, 0.085, 0.345, seed)


@dataclass
class LabelFractionSplit:
    """Which training samples keep their labels."""

    labeled: List[str]
    unlabeled: List[str]
    fraction: float
    seed: int

    def __post_init__(self):
        if set(self.labeled) & set(self.unlabeled):
            raise InvalidInputError("Labeled and unlabeled ids overlap")


@dataclass
class ClassFrequencies:
    """Per-class pixel proportions."""

    freqs: np.ndarray

    def __post_init__(self):
        self.freqs = np.asarray(self.freqs, dtype=np.float64)
        if self.freqs.ndim != 1 or self.freqs.size == 0:
            raise InvalidInputError("Frequencies must be a non-empty vector")
        if np.any(self.freqs < 0):
            raise InvalidInputError(f"Frequencies must be non-negative: {self.freqs}")
        if abs(self.freqs.sum() - 1.0) > 1e-9:
            raise InvalidInputError(f"Frequencies must sum to 1.0, got {self.freqs.sum()}")

    @property
    def num_classes(self) -> int:
        return int(self.freqs.size)


@dataclass
class ClassWeights:
    """Per-class cross-entropy weights."""

    weights: np.ndarray
    scheme: WeightScheme

    def __post_init__(self):
        self.weights = np.asarray(self.weights, dtype=np.float64)
        if np.any(~np.isfinite(self.weights)) or np.any(self.weights <= 0):
            raise InvalidInputError(f"Class weights must be finite and positive: {self.weights}")

    @property
    def num_classes(self) -> int:
        return int(self.weights.size)

    def to_tensor(self, dtype: torch.dtype = torch.float32) -> torch.Tensor:
        return torch.as_tensor(self.weights, dtype=dtype)


@dataclass
class LossValue:
    """A differentiable scalar loss plus its named components."""

    value: torch.Tensor
    components: Dict[str, float] = field(default_factory=dict)

    def item(self) -> float:
        return float(self.value.detach())


@dataclass
class PseudoMask:
    """Argmax class map of one network, used as a constant training target."""

    values: torch.Tensor
    source: str = "unknown"


@dataclass
class ConfusionCounts:
    """Binary confusion counts for one positive class."""

    tp: int
    fp: int
    fn: int
    tn: int

    def __post_init__(self):
        if min(self.tp, self.fp, self.fn, self.tn) < 0:
            raise InvalidInputError(f"Confusion counts must be non-negative: {self}")

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.fn + self.tn

    @property
    def f1_defined(self) -> bool:
        return 2 * self.tp + self.fp + self.fn > 0

    @property
    def recall_defined(self) -> bool:
        return self.tp + self.fn > 0

    @property
    def precision_defined(self) -> bool:
        return self.tp + self.fp > 0

    def __add__(self, other: 'ConfusionCounts') -> 'ConfusionCounts':
        return ConfusionCounts(self.tp + other.tp, self.fp + other.fp, self.fn + other.fn, self.tn + other.tn)


@dataclass
class SeedAggregate:
    """Mean and confidence half-width over seeded runs."""

    values: List[float]
    mean: float
    ci_halfwidth: float
    confidence: float = 0.95
    interval: IntervalKind = IntervalKind.NORMAL

    def __post_init__(self):
        if len(self.values) < 2:
            raise InvalidInputError("A seed aggregate needs at least two values")

    def to_dict(self) -> Dict[str, Any]:
        return {
            'values': list(self.values),
            'mean': self.mean,
            'ci_halfwidth': self.ci_halfwidth,
            'confidence': self.confidence,
            'interval': self.interval.value,
        }

    def format(self, decimals: int = 4) -> str:
        return f"{self.mean:.{decimals}f} ± {self.ci_halfwidth:.{decimals}f}"


@dataclass
class SaliencyMap:
    """Per-pixel gradient magnitude of one class score."""

    values: np.ndarray
    class_index: int

    def __post_init__(self):
        if self.values.ndim != 2:
            raise InvalidInputError("Saliency map must be H×W")
        if np.any(self.values < 0):
            raise InvalidInputError("Saliency values must be non-negative")


@dataclass
class ViewPair:
    """Two inputs whose embeddings are pulled together."""

    view_a: np.ndarray
    view_b: np.ndarray
    provenance: ViewRegime
    transforms: List[Dict[str, Any]] = field(default_factory=list)

    def __post_init__(self):
        if self.view_a.shape != self.view_b.shape:
            raise InvalidInputError("Views must share a shape")
        if self.provenance == ViewRegime.ARCHITECTURE_ASYMMETRIC and not np.array_equal(self.view_a, self.view_b):
            raise InvalidInputError("Architecture-asymmetric views must be the same image")


@dataclass
class Embedding:
    """A batch (B×D) or single (D) embedding produced by one network."""

    vector: torch.Tensor
    producer: str = "unknown"

    def __post_init__(self):
        if not torch.isfinite(self.vector).all():
            raise InvalidInputError(f"Embedding from {self.producer} has non-finite entries")

    @property
    def dim(self) -> int:
        return int(self.vector.shape[-1])


@dataclass
class ClusterModel:
    """K centroids in feature space."""

    centroids: np.ndarray

    def __post_init__(self):
        self.centroids = np.asarray(self.centroids, dtype=np.float64)
        if self.centroids.ndim != 2 or self.centroids.shape[0] < 1:
            raise InvalidInputError("Centroids must be a non-empty K×D array")
        k = self.centroids.shape[0]
        if k > 1:
            diffs = self.centroids[:, None, :] - self.centroids[None, :, :]
            distances = np.sqrt((diffs ** 2).sum(-1))
            off_diagonal = distances[~np.eye(k, dtype=bool)]
            if off_diagonal.min() <= 1e-9:
                raise InvalidInputError("Centroids must be pairwise distinct")

    @property
    def k(self) -> int:
        return int(self.centroids.shape[0])

    @property
    def dim(self) -> int:
        return int(self.centroids.shape[1])


_INVERSE_KIND = {
    GeometricKind.IDENTITY: GeometricKind.IDENTITY,
    GeometricKind.HFLIP: GeometricKind.HFLIP,
    GeometricKind.VFLIP: GeometricKind.VFLIP,
    GeometricKind.ROT90: GeometricKind.ROT270,
    GeometricKind.ROT180: GeometricKind.ROT180,
    GeometricKind.ROT270: GeometricKind.ROT90,
}


@dataclass(frozen=True)
class GeometricTransform:
    """An exact, invertible pixel permutation."""

    kind: GeometricKind = GeometricKind.IDENTITY

    def inverse(self) -> 'GeometricTransform':
        return GeometricTransform(_INVERSE_KIND[self.kind])


@dataclass
class SemiBatch:
    """One cross-teaching batch; labeled items are (image, mask) pairs."""

    labeled: List[Any]
    unlabeled: List[Any]

    @property
    def size(self) -> int:
        return len(self.labeled) + len(self.unlabeled)


@dataclass
class EpochRecord:
    """What happened in one epoch."""

    epoch: int
    lr: float
    losses: Dict[str, float] = field(default_factory=dict)
    val_metric: Optional[float] = None
    extra: Dict[str, Any] = field(default_factory=dict)

    def to_dict(self) -> Dict[str, Any]:
        return {
            'epoch': self.epoch,
            'lr': self.lr,
            'losses': dict(self.losses),
            'val_metric': self.val_metric,
            'extra': dict(self.extra),
        }


@dataclass
class TrainHistory:
    """Per-epoch training trace."""

    metric_name: str = "val_iou"
    records: List[EpochRecord] = field(default_factory=list)
    initial_val_metric: Optional[float] = None
    best_epoch: Optional[int] = None
    best_val_metric: Optional[float] = None
    step_traces: List[Dict[str, float]] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.records)

    @property
    def lrs(self) -> List[float]:
        return [record.lr for record in self.records]

    def loss_trace(self, name: str = "total") -> List[float]:
        return [record.losses[name] for record in self.records]

    def val_trace(self) -> List[Optional[float]]:
        return [record.val_metric for record in self.records]

    def to_dict(self) -> Dict[str, Any]:
        return {
            'metric_name': self.metric_name,
            'records': [record.to_dict() for record in self.records],
            'initial_val_metric': self.initial_val_metric,
            'best_epoch': self.best_epoch,
            'best_val_metric': self.best_val_metric,
            'step_traces': list(self.step_traces),
        }
