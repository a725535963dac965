"""Methods × label-fraction tables of "mean ± halfwidth" cells."""

import csv
import io
from pathlib import Path
from typing import Dict, List, Optional, TextIO

from ..executor.organizer import ResultGrid
from .interfaces import ReportGenerator

DECIMALS = 4


def fraction_header(fraction: float) -> str:
    return f"{fraction * 100:g}%"


def grid_rows(grid: ResultGrid, decimals: int = DECIMALS) -> List[List[str]]:
    """Header row plus one row per method; missing cells are blank."""
    rows = [['method'] + [fraction_header(f) for f in grid.fractions]]
    for method in grid.methods:
        cells = [grid.get(method, f) for f in grid.fractions]
        rows.append([method] + ['' if cell is None else cell.format(decimals) for cell in cells])
    return rows


class CsvTableGenerator(ReportGenerator):
    """Comma-delimited table per dataset, saved as results_<dataset>_<metric>.csv."""

    def __init__(self, output_manager=None, session_dir: Optional[Path] = None):
        self.output_manager = output_manager
        self.session_dir = session_dir
        self.saved: Dict[str, Path] = {}

    def render(self, grid: ResultGrid) -> str:
        buffer = io.StringIO()
        csv.writer(buffer, lineterminator='\n').writerows(grid_rows(grid))
        return buffer.getvalue()

    def generate_report(self, grids: Dict[str, ResultGrid], output: TextIO) -> None:
        for key, grid in grids.items():
            content = self.render(grid)
            if self.output_manager and self.session_dir:
                path = self.output_manager.save_text(content, self.session_dir, f"results_{key}.csv")
                self.saved[key] = path
                output.write(f"CSV table saved to: {path}\n")
            else:
                output.write(content)


class TerminalTableGenerator(ReportGenerator):
    """Boxed plain-text tables."""

    def __init__(self, output_manager=None, session_dir: Optional[Path] = None):
        self.output_manager = output_manager
        self.session_dir = session_dir

    def render(self, grid: ResultGrid) -> str:
        rows = grid_rows(grid)
        widths = [max(len(row[i]) for row in rows) for i in range(len(rows[0]))]
        rule = '+' + '+'.join('-' * (w + 2) for w in widths) + '+'
        lines = [f"Dataset: {grid.dataset} (test {grid.metric}, mean ± CI half-width)", rule]
        for index, row in enumerate(rows):
            lines.append('| ' + ' | '.join(cell.ljust(w) for cell, w in zip(row, widths)) + ' |')
            if index == 0:
                lines.append(rule)
        lines.append(rule)
        return '\n'.join(lines) + '\n'

    def generate_report(self, grids: Dict[str, ResultGrid], output: TextIO) -> None:
        content = '\n'.join(self.render(grid) for grid in grids.values())
        output.write(content)
        if self.output_manager and self.session_dir:
            self.output_manager.save_text(content, self.session_dir, 'results.txt')
