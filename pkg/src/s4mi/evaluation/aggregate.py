"""Multi-seed aggregation with confidence intervals."""

import math
from typing import Sequence

import numpy as np
from scipy import stats

from ..model.enums import IntervalKind
from ..model.errors import InvalidInputError
from ..model.models import SeedAggregate

NORMAL_95 = 1.96


def interval_multiplier(n: int, confidence: float = 0.95, interval: IntervalKind = IntervalKind.NORMAL) -> float:
    if interval == IntervalKind.STUDENT_T:
        return float(stats.t.ppf(0.5 + confidence / 2, df=n - 1))
    if confidence == 0.95:
        return NORMAL_95
    return float(stats.norm.ppf(0.5 + confidence / 2))


def aggregate_seeds(
    values: Sequence[float],
    confidence: float = 0.95,
    interval: IntervalKind = IntervalKind.NORMAL,
) -> SeedAggregate:
    """mean ± z·s/√n with the sample standard deviation (n−1 denominator)."""
    values = [float(v) for v in values]
    if len(values) < 2:
        raise InvalidInputError(f"Need at least two seeded values, got {len(values)}")
    n = len(values)
    array = np.asarray(values)
    s = float(array.std(ddof=1))
    halfwidth = interval_multiplier(n, confidence, interval) * s / math.sqrt(n)
    return SeedAggregate(values, float(array.mean()), halfwidth, confidence, interval)
