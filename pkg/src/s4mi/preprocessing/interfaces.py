"""Interfaces for dataset preprocessing pipelines."""

from abc import ABC, abstractmethod
from typing import List

from ..model.models import PreprocessStep, ProcessedSample, RawSample


class SamplePreprocessor(ABC):
    """Abstract base class for turning raw samples into model-ready ones."""

    @abstractmethod
    def process(self, raw: RawSample) -> List[ProcessedSample]:
        """Process one raw sample into one or more model-ready samples."""
        pass

    @abstractmethod
    def replay(self, raw: RawSample, steps: List[PreprocessStep]) -> ProcessedSample:
        """Re-apply a recorded step list to a raw sample."""
        pass
