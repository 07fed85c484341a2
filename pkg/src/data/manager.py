"""
Scenario Manager
Reads scenario and matrix files with an in-memory cache, and writes JSON reports.
"""

import json
import logging
import os
from pathlib import Path
from typing import Any, Dict, Optional, Tuple, Union

from src.data.scenario import Scenario, matrix_from_dict
from src.exceptions import ScenarioFormatError
from src.utils.formatter import ReportFormatter
from src.wct_operator import OpMatrix

PathLike = Union[str, os.PathLike]


class ScenarioManager:
    def __init__(self):
        self.logger = logging.getLogger(__name__)
        self.formatter = ReportFormatter()
        self._cache: Dict[str, Tuple[Any, float]] = {}

    def load_scenario(self, path: PathLike) -> Scenario:
        """Parse a scenario file, reusing the cached copy while the file is unchanged."""
        key = f"scenario:{Path(path).resolve()}"
        cached = self._get_from_cache(key, path)
        if cached is not None:
            self.logger.info(f"Cache hit for {path}")
            return cached
        scenario = Scenario.from_dict(self._read_json(path))
        self._add_to_cache(key, path, scenario)
        self.logger.info(f"Loaded scenario {scenario.label!r} "
                         f"({scenario.space.size} atoms, {scenario.partition.count} blocks)")
        return scenario

    def load_matrix(self, path: PathLike) -> OpMatrix:
        key = f"matrix:{Path(path).resolve()}"
        cached = self._get_from_cache(key, path)
        if cached is not None:
            self.logger.info(f"Cache hit for {path}")
            return cached
        Mx = matrix_from_dict(self._read_json(path))
        self._add_to_cache(key, path, Mx)
        return Mx

    def save_scenario(self, scenario: Scenario, path: PathLike) -> Path:
        return self.write_report(path, scenario.to_dict())

    def write_report(self, path: PathLike, report: Dict[str, Any]) -> Path:
        target = Path(path)
        target.parent.mkdir(parents=True, exist_ok=True)
        target.write_text(self.formatter.to_json(report) + '\n', encoding='utf-8')
        self.logger.info(f"Report written to {target}")
        return target

    def clear_cache(self) -> None:
        self._cache.clear()

    def _read_json(self, path: PathLike) -> Dict[str, Any]:
        try:
            with open(path, encoding='utf-8') as handle:
                return json.load(handle)
        except FileNotFoundError:
            raise ScenarioFormatError(f"No such file: {path}") from None
        except json.JSONDecodeError as e:
            raise ScenarioFormatError(f"{path} is not valid JSON: {e}") from None

    def _get_from_cache(self, key: str, path: PathLike) -> Optional[Any]:
        """Cached value, dropped when the file changed on disk since it was read."""
        if key in self._cache:
            value, mtime = self._cache[key]
            try:
                if os.path.getmtime(path) == mtime:
                    return value
            except OSError:
                pass
            del self._cache[key]
        return None

    def _add_to_cache(self, key: str, path: PathLike, value: Any) -> None:
        self._cache[key] = (value, os.path.getmtime(path))
