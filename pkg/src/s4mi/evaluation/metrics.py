"""Overlap and classification scores.

Binary scores are built on ConfusionCounts. Undefined ratios (no positives
in either mask) return 0.0 and leave the corresponding *_defined flag False
on the counts, except IoU and Dice of two empty masks, which are 1.0.
"""

import logging
from typing import Dict, Optional, Sequence

import numpy as np

from ..model.enums import Averaging
from ..model.errors import InvalidInputError
from ..model.models import ConfusionCounts

logger = logging.getLogger(__name__)


def _binary(mask: np.ndarray, positive_class: Optional[int]) -> np.ndarray:
    mask = np.asarray(mask)
    return mask == positive_class if positive_class is not None else mask.astype(bool)


def _check_shapes(pred: np.ndarray, gt: np.ndarray) -> None:
    if np.shape(pred) != np.shape(gt):
        raise InvalidInputError(f"Prediction shape {np.shape(pred)} != ground truth shape {np.shape(gt)}")


def confusion_counts(pred: np.ndarray, gt: np.ndarray, positive_class: int = 1) -> ConfusionCounts:
    _check_shapes(pred, gt)
    p = np.asarray(pred) == positive_class
    g = np.asarray(gt) == positive_class
    return ConfusionCounts(
        tp=int(np.sum(p & g)),
        fp=int(np.sum(p & ~g)),
        fn=int(np.sum(~p & g)),
        tn=int(np.sum(~p & ~g)),
    )


def iou(pred: np.ndarray, gt: np.ndarray, positive_class: Optional[int] = None) -> float:
    """Jaccard index |U∩V|/|U∪V|; two empty masks score 1.0."""
    _check_shapes(pred, gt)
    u, v = _binary(pred, positive_class), _binary(gt, positive_class)
    union = np.sum(u | v)
    if union == 0:
        return 1.0
    return float(np.sum(u & v) / union)


def dice_coefficient(pred: np.ndarray, gt: np.ndarray, positive_class: Optional[int] = None) -> float:
    _check_shapes(pred, gt)
    u, v = _binary(pred, positive_class), _binary(gt, positive_class)
    total = np.sum(u) + np.sum(v)
    if total == 0:
        return 1.0
    return float(2 * np.sum(u & v) / total)


def mean_iou(pred: np.ndarray, gt: np.ndarray, num_classes: int) -> float:
    """Per-class IoU averaged over classes present in either mask."""
    _check_shapes(pred, gt)
    scores = []
    for c in range(num_classes):
        u, v = np.asarray(pred) == c, np.asarray(gt) == c
        union = np.sum(u | v)
        if union:
            scores.append(np.sum(u & v) / union)
    return float(np.mean(scores)) if scores else 1.0


def precision(c: ConfusionCounts) -> float:
    if not c.precision_defined:
        logger.debug("Precision undefined (no predicted positives), reporting 0.0")
        return 0.0
    return c.tp / (c.tp + c.fp)


def recall(c: ConfusionCounts) -> float:
    if not c.recall_defined:
        logger.debug("Recall undefined (no actual positives), reporting 0.0")
        return 0.0
    return c.tp / (c.tp + c.fn)


def f1(c: ConfusionCounts) -> float:
    if not c.f1_defined:
        logger.debug("F1 undefined (no positives at all), reporting 0.0")
        return 0.0
    return 2 * c.tp / (2 * c.tp + c.fp + c.fn)


def per_class_counts(pred: np.ndarray, target: np.ndarray, num_classes: int, multilabel: bool = False):
    """One-vs-rest counts per class for class-id vectors or N×K multilabel indicators."""
    pred, target = np.asarray(pred), np.asarray(target)
    _check_shapes(pred, target)
    if multilabel:
        return [confusion_counts(pred[:, k], target[:, k], positive_class=1) for k in range(num_classes)]
    return [confusion_counts(pred, target, positive_class=k) for k in range(num_classes)]


def _averaged(counts, score, averaging: Averaging) -> float:
    if averaging == Averaging.MICRO:
        total = counts[0]
        for c in counts[1:]:
            total = total + c
        return score(total)
    return float(np.mean([score(c) for c in counts]))


def macro_f1(pred, target, num_classes: int, multilabel: bool = False) -> float:
    return _averaged(per_class_counts(pred, target, num_classes, multilabel), f1, Averaging.MACRO)


def micro_f1(pred, target, num_classes: int, multilabel: bool = False) -> float:
    return _averaged(per_class_counts(pred, target, num_classes, multilabel), f1, Averaging.MICRO)


def classification_scores(
    pred: np.ndarray,
    target: np.ndarray,
    num_classes: int,
    multilabel: bool = False,
    averaging: Averaging = Averaging.MACRO,
) -> Dict[str, float]:
    """F1, recall and precision for single-label or multilabel predictions."""
    if num_classes == 2 and not multilabel:
        counts = confusion_counts(pred, target, positive_class=1)
        return {'f1': f1(counts), 'recall': recall(counts), 'precision': precision(counts)}
    counts = per_class_counts(pred, target, num_classes, multilabel)
    return {
        'f1': _averaged(counts, f1, averaging),
        'recall': _averaged(counts, recall, averaging),
        'precision': _averaged(counts, precision, averaging),
    }


def segmentation_scores(preds: Sequence[np.ndarray], gts: Sequence[np.ndarray], num_classes: int = 2) -> Dict[str, float]:
    """Per-image scores averaged over a set of masks.

    Binary tasks score the foreground class (id 1); multi-class tasks report
    mean IoU over classes.
    """
    if len(preds) != len(gts) or not preds:
        raise InvalidInputError(f"Need equally many predictions and ground truths, got {len(preds)} / {len(gts)}")
    rows = []
    for pred, gt in zip(preds, gts):
        if num_classes == 2:
            counts = confusion_counts(pred, gt, positive_class=1)
            rows.append({
                'iou': iou(pred, gt, positive_class=1),
                'dice': dice_coefficient(pred, gt, positive_class=1),
                'precision': precision(counts),
                'recall': recall(counts),
                'f1': f1(counts),
            })
        else:
            rows.append({'iou': mean_iou(pred, gt, num_classes)})
    return {key: float(np.mean([row[key] for row in rows])) for key in rows[0]}
