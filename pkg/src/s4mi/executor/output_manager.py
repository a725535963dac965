"""Output management for run records, checkpoints and reports."""

import getpass
import json
import logging
import os
import platform
from datetime import datetime
from pathlib import Path
from typing import Any, Dict, List, Optional, Union

from ..model.config import RunRecord
from ..model.errors import ConfigError
from ..model.models import SeedAggregate
from ..preprocessing.dataset_io import atomic_write_json, atomic_write_text

OUTPUT_ROOT_ENV = 'S4MI_OUTPUT_ROOT'
DEFAULT_ROOT = 'build'


def resolve_output_root(override: Optional[str] = None) -> Path:
    """--output-root beats $S4MI_OUTPUT_ROOT beats ./build."""
    return Path(override or os.environ.get(OUTPUT_ROOT_ENV) or DEFAULT_ROOT)


class OutputManager:
    """Manages the results tree.

    Layout::

        <root>/runs/<config_hash>/seed_<seed>/record.json
        <root>/runs/<config_hash>/seed_<seed>/metadata.json
        <root>/runs/<config_hash>/seed_<seed>/*.pt
        <root>/runs/<config_hash>/aggregate.json
        <root>/reports/<timestamp>_<label>/
    """

    def __init__(self, base_dir: Union[str, Path, None] = None):
        self.base_dir = resolve_output_root(str(base_dir) if base_dir is not None else None)
        self.session_info = self._get_session_info()
        self.logger = logging.getLogger(__name__)

    def _get_session_info(self) -> Dict[str, Any]:
        try:
            username = getpass.getuser()
        except Exception:
            username = 'unknown'
        return {
            'username': username,
            'host': platform.node() or 'unknown',
            'python': platform.python_version(),
            'timestamp': datetime.now().strftime('%Y%m%d_%H%M%S'),
        }

    @property
    def runs_dir(self) -> Path:
        return self.base_dir / 'runs'

    def config_dir(self, config_hash: str) -> Path:
        return self.runs_dir / config_hash

    def run_dir(self, config_hash: str, seed: int) -> Path:
        return self.config_dir(config_hash) / f"seed_{seed}"

    def record_path(self, config_hash: str, seed: int) -> Path:
        return self.run_dir(config_hash, seed) / 'record.json'

    def aggregate_path(self, config_hash: str) -> Path:
        return self.config_dir(config_hash) / 'aggregate.json'

    def create_run_directory(self, config_hash: str, seed: int, command_args: Dict[str, Any]) -> Path:
        """Create the seed directory and write its metadata.json."""
        run_dir = self.run_dir(config_hash, seed)
        run_dir.mkdir(parents=True, exist_ok=True)
        metadata = {
            'session_info': self.session_info,
            'command_args': command_args,
            'execution_time': datetime.now().isoformat(),
        }
        atomic_write_json(run_dir / 'metadata.json', metadata)
        return run_dir

    def create_session_directory(self, label: str, command_args: Dict[str, Any]) -> Path:
        """A timestamped directory for non-run outputs (reports, preprocessing)."""
        session_dir = self.base_dir / 'reports' / f"{self.session_info['timestamp']}_{label}"
        session_dir.mkdir(parents=True, exist_ok=True)
        atomic_write_json(session_dir / 'metadata.json', {
            'session_info': self.session_info,
            'command_args': command_args,
            'execution_time': datetime.now().isoformat(),
        })
        return session_dir

    def save_record(self, record: RunRecord) -> Path:
        path = self.record_path(record.config_hash, record.seed)
        atomic_write_json(path, record.to_dict())
        self.logger.info(f"Saved run record {path}")
        return path

    def load_record(self, config_hash: str, seed: int) -> Optional[RunRecord]:
        """The stored record for (config_hash, seed), or None when absent or unreadable."""
        path = self.record_path(config_hash, seed)
        if not path.exists():
            return None
        try:
            with open(path) as f:
                return RunRecord.from_dict(json.load(f))
        except (json.JSONDecodeError, ConfigError, TypeError, KeyError) as e:
            self.logger.warning(f"Ignoring unreadable run record {path}: {e}")
            return None

    def load_records(self, config_hash: Optional[str] = None) -> List[RunRecord]:
        """Every readable record, optionally restricted to one config hash."""
        pattern = f"{config_hash}/seed_*/record.json" if config_hash else "*/seed_*/record.json"
        records = []
        for path in sorted(self.runs_dir.glob(pattern)):
            seed = int(path.parent.name.split('_', 1)[1])
            record = self.load_record(path.parent.parent.name, seed)
            if record is not None:
                records.append(record)
        return records

    def save_aggregate(self, config_hash: str, metric: str, aggregate: SeedAggregate,
                       extra: Optional[Dict[str, Any]] = None) -> Path:
        payload = {'config_hash': config_hash, 'metric': metric, **aggregate.to_dict(), **(extra or {})}
        path = atomic_write_json(self.aggregate_path(config_hash), payload)
        self.logger.info(f"Saved aggregate {path}: {aggregate.format()}")
        return path

    def save_text(self, content: str, session_dir: Path, name: str) -> Path:
        return atomic_write_text(session_dir / name, content)
