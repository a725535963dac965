"""Seeded train/val/test splits and label-fraction subsets."""

import logging
import math
from typing import Dict, List, Sequence, Tuple, TypeVar

import numpy as np

from ..model.errors import InvalidInputError
from ..model.models import LabelFractionSplit, SplitSpec

logger = logging.getLogger(__name__)

T = TypeVar('T')


def round_half_up(value: float) -> int:
    return int(math.floor(value + 0.5))


def split_dataset(ids: Sequence[str], spec: SplitSpec) -> Tuple[List[str], List[str], List[str]]:
    """Partition ids into train/val/test.

    Train and val sizes are rounded fractions; the residual goes to test.
    """
    if not ids:
        raise InvalidInputError("Cannot split an empty id list")
    if len(set(ids)) != len(ids):
        raise InvalidInputError("Sample ids must be unique")

    n = len(ids)
    ordered = sorted(ids)
    permutation = np.random.default_rng(spec.seed).permutation(n)
    shuffled = [ordered[i] for i in permutation]

    n_train = round_half_up(spec.train_frac * n)
    n_val = round_half_up(spec.val_frac * n)
    n_test = n - n_train - n_val
    if n_test < 0:
        raise InvalidInputError(f"Rounded split sizes exceed {n} samples")
    for name, fraction, size in (('train', spec.train_frac, n_train), ('val', spec.val_frac, n_val),
                                 ('test', spec.test_frac, n_test)):
        if fraction > 0 and size == 0:
            raise InvalidInputError(f"Split '{name}' is empty after rounding {fraction} of {n} samples")

    train = shuffled[:n_train]
    val = shuffled[n_train:n_train + n_val]
    test = shuffled[n_train + n_val:]
    logger.debug(f"Split {n} ids into {len(train)}/{len(val)}/{len(test)}")
    return train, val, test


def subsample_labels(train_ids: Sequence[str], fraction: float, seed: int) -> LabelFractionSplit:
    """Keep labels for round(fraction·N) whole images; the rest become unlabeled."""
    if not 0.0 <= fraction <= 1.0:
        raise InvalidInputError(f"Label fraction must lie in [0,1], got {fraction}")
    ordered = sorted(train_ids)
    n_labeled = round_half_up(fraction * len(ordered))
    permutation = np.random.default_rng(seed).permutation(len(ordered))
    shuffled = [ordered[i] for i in permutation]
    return LabelFractionSplit(
        labeled=shuffled[:n_labeled],
        unlabeled=shuffled[n_labeled:],
        fraction=fraction,
        seed=seed,
    )


def select(items_by_id: Dict[str, T], ids: Sequence[str]) -> List[T]:
    return [items_by_id[i] for i in ids]
