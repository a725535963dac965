"""Presentation layer interfaces."""

from abc import ABC, abstractmethod
from typing import Dict, TextIO

from ..executor.organizer import ResultGrid


class ReportGenerator(ABC):
    """Abstract base class for result report generation."""

    @abstractmethod
    def generate_report(self, grids: Dict[str, ResultGrid], output: TextIO) -> None:
        """Render every dataset grid; file-based generators write their paths to output."""
        pass
