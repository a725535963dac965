"""render_report: tables and plots for a set of run records."""

import io
import logging
from pathlib import Path
from typing import Dict, Sequence, Union

from ..executor.organizer import RecordOrganizer
from ..model.config import RunRecord
from ..model.enums import IntervalKind, PresentationType
from ..preprocessing.dataset_io import atomic_write_text
from .interfaces import ReportGenerator
from .plots import LinePlotGenerator
from .tables import CsvTableGenerator, TerminalTableGenerator

logger = logging.getLogger(__name__)


class _DirectoryWriter:
    """The OutputManager.save_text surface, for callers that pass a bare directory."""

    @staticmethod
    def save_text(content: str, session_dir: Path, name: str) -> Path:
        return atomic_write_text(session_dir / name, content)


def create_generator(kind: PresentationType, output_manager, session_dir: Path) -> ReportGenerator:
    if kind == PresentationType.CSV:
        return CsvTableGenerator(output_manager, session_dir)
    if kind == PresentationType.PLOT:
        return LinePlotGenerator(output_manager, session_dir)
    return TerminalTableGenerator(output_manager, session_dir)


def render_report(
    records: Sequence[RunRecord],
    out_dir: Union[str, Path],
    kinds: Sequence[PresentationType] = (PresentationType.TERMINAL, PresentationType.CSV, PresentationType.PLOT),
    output_manager=None,
    interval: IntervalKind = IntervalKind.NORMAL,
) -> Dict[str, str]:
    """Write every requested presentation under out_dir; returns the rendered text per kind."""
    out_dir = Path(out_dir)
    grids = RecordOrganizer(interval=interval).organize(records)
    if not grids:
        logger.warning("No completed records with at least two seeds; nothing to report")
    writer = output_manager or _DirectoryWriter()
    rendered = {}
    for kind in kinds:
        buffer = io.StringIO()
        create_generator(kind, writer, out_dir).generate_report(grids, buffer)
        rendered[kind.value] = buffer.getvalue()
    return rendered
