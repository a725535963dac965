"""Enums for s4mi constants."""

from enum import Enum


class PresentationType(Enum):
    """Enum for report presentation layers."""
    TERMINAL = "terminal"
    CSV = "csv"
    PLOT = "plot"


class Method(Enum):
    """Training methods an experiment can run."""
    SUPERVISED = "supervised"
    SEMI_CROSS_TEACH = "semi_cross_teach"
    SELFSUP_AUG = "selfsup_aug"
    SELFSUP_ARCH = "selfsup_arch"
    TRANSFER = "transfer"
    PICIE = "picie"

    @property
    def is_segmentation(self) -> bool:
        return self in (Method.SUPERVISED, Method.SEMI_CROSS_TEACH, Method.PICIE)

    @property
    def is_classification(self) -> bool:
        return not self.is_segmentation


class ViewRegime(Enum):
    """How a self-supervised positive pair is formed."""
    AUGMENTATION_ASYMMETRIC = "augmentation_asymmetric"
    ARCHITECTURE_ASYMMETRIC = "architecture_asymmetric"


class ModelFamily(Enum):
    """Micro network families shipped by the model zoo."""
    CONV_UNET = "conv_unet"
    WINDOWED_ATTENTION = "windowed_attention"
    CONV_CLASSIFIER = "conv_classifier"
    ATTENTION_CLASSIFIER = "attention_classifier"
    POINTWISE = "pointwise"

    @property
    def is_segmenter(self) -> bool:
        return self in (ModelFamily.CONV_UNET, ModelFamily.WINDOWED_ATTENTION, ModelFamily.POINTWISE)


class WeightScheme(Enum):
    """Cross-entropy class weight initializations."""
    NONE = "none"
    PIXEL_RATIO = "pixel_ratio"
    MEDIAN_FREQUENCY = "median_frequency"


class WeightOrientation(Enum):
    """Which mass a pixel-ratio weight reflects."""
    COMPLEMENT = "complement"
    DIRECT = "direct"


class OptimizerKind(Enum):
    ADAM = "adam"
    SGD = "sgd"


class ScheduleKind(Enum):
    COSINE_ANNEALING = "cosine_annealing"
    STEP = "step"


class PreprocessMode(Enum):
    """Dataset-specific preprocessing pipelines."""
    TILE = "tile"
    INTERPOLATE = "interpolate"


class GeometricKind(Enum):
    """Exact pixel permutations used for equivariance."""
    IDENTITY = "identity"
    HFLIP = "hflip"
    VFLIP = "vflip"
    ROT90 = "rot90"
    ROT180 = "rot180"
    ROT270 = "rot270"


class Averaging(Enum):
    """Multi-class / multilabel score averaging."""
    MACRO = "macro"
    MICRO = "micro"


class IntervalKind(Enum):
    """Confidence interval multiplier."""
    NORMAL = "normal"
    STUDENT_T = "student_t"


class RunStatus(Enum):
    COMPLETED = "completed"
    ABORTED = "aborted"
