"""Line plots of test score against label fraction, one figure per dataset."""

from pathlib import Path
from typing import Dict, Optional, TextIO

from matplotlib.figure import Figure

from ..executor.organizer import ResultGrid
from .interfaces import ReportGenerator


class LinePlotGenerator(ReportGenerator):
    """Mean with CI error bars per method; single-fraction methods plot as one marker."""

    def __init__(self, output_manager=None, session_dir: Optional[Path] = None, dpi: int = 120):
        self.output_manager = output_manager
        self.session_dir = Path(session_dir) if session_dir is not None else Path('.')
        self.dpi = dpi
        self.saved: Dict[str, Path] = {}

    def plot(self, key: str, grid: ResultGrid) -> Path:
        fig = Figure(figsize=(6, 4))
        ax = fig.subplots()
        for method in grid.methods:
            series = grid.series(method)
            xs = [100 * fraction for fraction, _ in series]
            ax.errorbar(xs, [agg.mean for _, agg in series], yerr=[agg.ci_halfwidth for _, agg in series],
                        marker='o', capsize=3, label=method)
        ax.set_xlabel('labeled training data (%)')
        ax.set_ylabel(f"test {grid.metric}")
        ax.set_title(grid.dataset)
        ax.set_xticks([100 * f for f in grid.fractions])
        ax.grid(alpha=0.3)
        ax.legend(fontsize='small')
        fig.tight_layout()
        self.session_dir.mkdir(parents=True, exist_ok=True)
        path = self.session_dir / f"results_{key}.png"
        fig.savefig(path, dpi=self.dpi)
        return path

    def generate_report(self, grids: Dict[str, ResultGrid], output: TextIO) -> None:
        for key, grid in grids.items():
            if not grid.cells:
                continue
            self.saved[key] = self.plot(key, grid)
            output.write(f"Plot saved to: {self.saved[key]}\n")
