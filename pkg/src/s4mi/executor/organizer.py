"""Organization layer: run records into method × label-fraction result grids."""

import logging
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

from ..evaluation.aggregate import aggregate_seeds
from ..model.config import LABEL_FRACTION_GRID, RunRecord
from ..model.enums import IntervalKind, Method
from ..model.models import SeedAggregate

logger = logging.getLogger(__name__)

# Row order of the report tables.
METHOD_ORDER = tuple(method.value for method in Method)

Cell = Tuple[str, float]


@dataclass
class ResultGrid:
    """Aggregated test scores of one dataset."""

    dataset: str
    metric: str
    cells: Dict[Cell, SeedAggregate] = field(default_factory=dict)
    fractions: Tuple[float, ...] = LABEL_FRACTION_GRID

    @property
    def methods(self) -> List[str]:
        present = {method for method, _ in self.cells}
        ordered = [m for m in METHOD_ORDER if m in present]
        return ordered + sorted(present - set(ordered))

    def get(self, method: str, fraction: float) -> Optional[SeedAggregate]:
        return next(
            (agg for (m, f), agg in self.cells.items() if m == method and abs(f - fraction) < 1e-12),
            None,
        )

    def series(self, method: str) -> List[Tuple[float, SeedAggregate]]:
        """(fraction, aggregate) pairs of one method in fraction order."""
        return sorted(((f, agg) for (m, f), agg in self.cells.items() if m == method), key=lambda item: item[0])


class RecordOrganizer:
    """Groups completed run records by dataset, method and label fraction."""

    def __init__(self, confidence: float = 0.95, interval: IntervalKind = IntervalKind.NORMAL):
        self.confidence = confidence
        self.interval = interval

    def group_scores(self, records: Sequence[RunRecord]) -> Dict[Tuple[str, str], Dict[Cell, Dict[int, float]]]:
        """(dataset, metric) → (method, fraction) → seed → test score; later records win per seed."""
        grouped: Dict[Tuple[str, str], Dict[Cell, Dict[int, float]]] = {}
        for record in records:
            if not record.completed:
                continue
            score = record.test_score()
            if score is None:
                logger.warning(f"Record {record.config_hash}/seed_{record.seed} has no test {record.primary_metric}")
                continue
            cell = (record.method, record.label_fraction)
            grouped.setdefault((record.dataset_tag, record.primary_metric), {}).setdefault(cell, {})[record.seed] = float(score)
        return grouped

    def organize(self, records: Sequence[RunRecord]) -> Dict[str, ResultGrid]:
        """Grids keyed by "<dataset>_<metric>"; segmentation and classification arms never share one."""
        grids: Dict[str, ResultGrid] = {}
        for (dataset, metric), cells in self.group_scores(records).items():
            fractions = sorted(set(LABEL_FRACTION_GRID) | {fraction for _, fraction in cells})
            grid = ResultGrid(dataset=dataset, metric=metric, fractions=tuple(fractions))
            for cell, by_seed in cells.items():
                if len(by_seed) < 2:
                    logger.warning(f"{dataset} {cell}: only {len(by_seed)} completed seed(s), cell left blank")
                    continue
                values = [by_seed[seed] for seed in sorted(by_seed)]
                grid.cells[cell] = aggregate_seeds(values, self.confidence, self.interval)
            grids[f"{dataset}_{metric}"] = grid
        return grids
