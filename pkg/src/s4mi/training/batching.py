"""Semi-supervised batch composition."""

from typing import Any, Sequence

import numpy as np

from ..model.errors import InvalidInputError
from ..model.models import SemiBatch


def semi_batch_sizes(fraction: float, batch_size: int, reserve_unlabeled: bool = True) -> tuple:
    """(labeled, unlabeled) counts: half/half below full labels, else all-but-one labeled."""
    if batch_size < 2:
        raise InvalidInputError(f"batch_size must be at least 2, got {batch_size}")
    if fraction < 1.0:
        n_labeled = batch_size // 2
        return n_labeled, batch_size - n_labeled
    if reserve_unlabeled:
        return batch_size - 1, 1
    return batch_size, 0


def compose_semi_batch(
    labeled_pool: Sequence[Any],
    unlabeled_pool: Sequence[Any],
    fraction: float,
    batch_size: int,
    seed: int,
    reserve_unlabeled: bool = True,
) -> SemiBatch:
    """Draw one batch without replacement within each role.

    Labeled pool items are (image, mask) pairs, unlabeled items are images.
    At fraction 1.0 the single unlabeled slot is filled from the unlabeled
    pool when it has items, otherwise by the image of a labeled item that
    is not also used as labeled in this batch.
    """
    if not 0.0 <= fraction <= 1.0:
        raise InvalidInputError(f"fraction must lie in [0,1], got {fraction}")
    n_labeled, n_unlabeled = semi_batch_sizes(fraction, batch_size, reserve_unlabeled)
    rng = np.random.default_rng(seed)

    borrow = n_unlabeled > 0 and fraction >= 1.0 and len(unlabeled_pool) == 0
    needed_labeled = n_labeled + (n_unlabeled if borrow else 0)
    if len(labeled_pool) < needed_labeled:
        raise InvalidInputError(f"Labeled pool has {len(labeled_pool)} items, batch needs {needed_labeled}")
    if not borrow and len(unlabeled_pool) < n_unlabeled:
        raise InvalidInputError(f"Unlabeled pool has {len(unlabeled_pool)} items, batch needs {n_unlabeled}")

    picked = rng.choice(len(labeled_pool), size=needed_labeled, replace=False)
    labeled = [labeled_pool[i] for i in picked[:n_labeled]]
    if borrow:
        unlabeled = [labeled_pool[i][0] for i in picked[n_labeled:]]
    else:
        chosen = rng.choice(len(unlabeled_pool), size=n_unlabeled, replace=False)
        unlabeled = [unlabeled_pool[i] for i in chosen]
    return SemiBatch(labeled=labeled, unlabeled=unlabeled)
