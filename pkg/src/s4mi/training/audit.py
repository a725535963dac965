"""Label-access auditing for label-free training phases."""

import logging
from dataclasses import dataclass
from typing import Optional, Union

import torch

from ..model.errors import TrainingAbortedError

logger = logging.getLogger(__name__)


class LabelAccessAudit:
    """Counts every read of masks or classification labels."""

    def __init__(self, name: str = "audit"):
        self.name = name
        self.reads = 0

    def record(self, what: str) -> None:
        self.reads += 1
        logger.debug(f"{self.name}: label read #{self.reads} ({what})")

    def assert_untouched(self) -> None:
        if self.reads:
            raise TrainingAbortedError(
                f"{self.name}: {self.reads} label reads during a label-free phase",
                {'label_reads': self.reads},
            )


@dataclass
class AuditedDataset:
    """Images are free to read; masks and labels go through the audit."""

    images: torch.Tensor
    _masks: Optional[torch.Tensor] = None
    _labels: Optional[torch.Tensor] = None
    audit: Optional[LabelAccessAudit] = None

    def __post_init__(self):
        if self.audit is None:
            self.audit = LabelAccessAudit()

    def __len__(self) -> int:
        return int(self.images.shape[0])

    @property
    def masks(self) -> Optional[torch.Tensor]:
        self.audit.record('masks')
        return self._masks

    @property
    def labels(self) -> Optional[torch.Tensor]:
        self.audit.record('labels')
        return self._labels


def as_images(data: Union[torch.Tensor, AuditedDataset]) -> torch.Tensor:
    return data.images if isinstance(data, AuditedDataset) else data
