"""Pixel class frequencies and the two cross-entropy weight initializations.

Background usually dominates lesion masks, so both schemes up-weight the
rare foreground class.
"""

from typing import Optional, Sequence

import numpy as np

from ..model.enums import WeightOrientation, WeightScheme
from ..model.errors import InvalidInputError
from ..model.models import ClassFrequencies, ClassWeights

COMPLEMENT_FLOOR = 1e-6


def pixel_class_frequencies(masks: Sequence[np.ndarray], num_classes: int = 2) -> ClassFrequencies:
    """freq_c = pixels of class c / all pixels, pooled over every mask."""
    if len(masks) == 0:
        raise InvalidInputError("Need at least one mask to count class frequencies")
    counts = np.zeros(num_classes, dtype=np.int64)
    for mask in masks:
        flat = np.asarray(mask).astype(np.int64).ravel()
        if flat.size and (flat.min() < 0 or flat.max() >= num_classes):
            raise InvalidInputError(f"Mask values must lie in [0, {num_classes})")
        counts += np.bincount(flat, minlength=num_classes)
    total = counts.sum()
    if total == 0:
        raise InvalidInputError("Masks contain no pixels")
    return ClassFrequencies(counts / total)


def pixel_ratio_weights(
    freqs: ClassFrequencies,
    orientation: WeightOrientation = WeightOrientation.COMPLEMENT,
) -> ClassWeights:
    """Weights from the pixel ratios, rescaled to sum to num_classes.

    COMPLEMENT gives each class the mass of the other classes (1 - freq_c),
    so background is down-weighted; DIRECT uses freq_c itself.
    """
    if orientation == WeightOrientation.COMPLEMENT:
        raw = 1.0 - freqs.freqs
    else:
        raw = freqs.freqs.copy()
    raw = np.maximum(raw, COMPLEMENT_FLOOR)
    weights = raw / raw.sum() * freqs.num_classes
    return ClassWeights(weights, WeightScheme.PIXEL_RATIO)


def median_frequency_weights(freqs: ClassFrequencies) -> ClassWeights:
    """weight_c = median(freqs) / freq_c."""
    if np.any(freqs.freqs <= 0):
        raise InvalidInputError(f"Median-frequency weights are undefined for a zero frequency: {freqs.freqs}")
    weights = np.median(freqs.freqs) / freqs.freqs
    return ClassWeights(weights, WeightScheme.MEDIAN_FREQUENCY)


def class_weights_for(
    scheme: WeightScheme,
    freqs: ClassFrequencies,
    orientation: WeightOrientation = WeightOrientation.COMPLEMENT,
) -> Optional[ClassWeights]:
    """Build the configured weights; None means unweighted cross-entropy."""
    if scheme == WeightScheme.PIXEL_RATIO:
        return pixel_ratio_weights(freqs, orientation)
    if scheme == WeightScheme.MEDIAN_FREQUENCY:
        return median_frequency_weights(freqs)
    return None
