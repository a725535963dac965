"""Cluster-to-class assignment for unsupervised segmentation."""

import logging
from dataclasses import dataclass
from typing import Dict, Sequence, Union

import numpy as np
from scipy.optimize import linear_sum_assignment

from ..model.errors import InvalidInputError
from .metrics import iou, mean_iou

logger = logging.getLogger(__name__)


@dataclass
class MatchReport:
    mapping: Dict[int, int]
    intersection: np.ndarray
    matched_miou: float
    foreground_iou: float

    def relabel(self, clusters: np.ndarray) -> np.ndarray:
        lookup = np.zeros(max(self.mapping) + 1, dtype=np.int64)
        for cluster, cls in self.mapping.items():
            lookup[cluster] = cls
        return lookup[clusters]

    def to_dict(self) -> Dict:
        return {
            'mapping': {str(k): v for k, v in self.mapping.items()},
            'intersection': self.intersection.tolist(),
            'matched_miou': self.matched_miou,
            'foreground_iou': self.foreground_iou,
        }


def _stack(masks: Union[np.ndarray, Sequence[np.ndarray]]) -> np.ndarray:
    array = masks if isinstance(masks, np.ndarray) else np.stack([np.asarray(m) for m in masks])
    return array[None] if array.ndim == 2 else array


def hungarian_match(
    pred_clusters: Union[np.ndarray, Sequence[np.ndarray]],
    gt: Union[np.ndarray, Sequence[np.ndarray]],
    k: int,
    num_classes: int = 2,
) -> MatchReport:
    """Assign cluster ids to classes maximizing total pixel intersection.

    Clusters left unassigned (k > num_classes) map to the class they overlap most.
    """
    pred, truth = _stack(pred_clusters), _stack(gt)
    if pred.shape != truth.shape:
        raise InvalidInputError(f"Cluster map shape {pred.shape} != ground truth shape {truth.shape}")
    if pred.size and (pred.max() >= k or truth.max() >= num_classes):
        raise InvalidInputError("Cluster or class ids out of range")

    flat = pred.ravel().astype(np.int64) * num_classes + truth.ravel().astype(np.int64)
    intersection = np.bincount(flat, minlength=k * num_classes).reshape(k, num_classes)
    rows, cols = linear_sum_assignment(intersection, maximize=True)
    mapping = {int(r): int(c) for r, c in zip(rows, cols)}
    for cluster in range(k):
        if cluster not in mapping:
            mapping[cluster] = int(np.argmax(intersection[cluster]))

    report = MatchReport(mapping, intersection, 0.0, 0.0)
    relabeled = report.relabel(pred)
    report.matched_miou = float(np.mean([mean_iou(p, g, num_classes) for p, g in zip(relabeled, truth)]))
    report.foreground_iou = float(np.mean([iou(p, g, positive_class=1) for p, g in zip(relabeled, truth)]))
    logger.info(f"Cluster matching {mapping}: mIoU {report.matched_miou:.4f}, foreground IoU {report.foreground_iou:.4f}")
    return report
