"""
Report writer for ghlab
Every report file (JSON, CSV, SVG) goes through one ReportWriter
"""

import json
import logging
import math
import threading
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402
import pandas as pd  # noqa: E402

from ..config_loader import settings  # noqa: E402

logger = logging.getLogger(__name__)

# Fixed salt and no date keep SVG output byte-identical between runs
matplotlib.rcParams["svg.hashsalt"] = "ghlab"


def to_jsonable(value: Any) -> Any:
    """Plain JSON types; non-finite floats become the strings 'inf', '-inf', 'nan'"""
    if isinstance(value, dict):
        return {str(k): to_jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple, set, frozenset)):
        items = sorted(value) if isinstance(value, (set, frozenset)) else value
        return [to_jsonable(v) for v in items]
    if isinstance(value, np.ndarray):
        return to_jsonable(value.tolist())
    if isinstance(value, (np.bool_, bool)):
        return bool(value)
    if isinstance(value, (np.integer, int)):
        return int(value)
    if isinstance(value, (np.floating, float)):
        value = float(value)
        if math.isfinite(value):
            return value
        return "nan" if math.isnan(value) else ("inf" if value > 0 else "-inf")
    return value


def dumps(report: Dict) -> str:
    return json.dumps(to_jsonable(report), indent=2, sort_keys=True) + "\n"


class ReportWriter:
    """Writes reports, tables and plots under one output directory"""

    def __init__(self, output_dir: Optional[str] = None):
        self.output_dir = Path(output_dir or settings.output_dir)
        self.output_dir.mkdir(parents=True, exist_ok=True)
        self._lock = threading.Lock()
        self.written: List[Path] = []

    def _path(self, name: str, suffix: str) -> Path:
        return self.output_dir / f"{name}{suffix}"

    def write_json(self, report: Dict, name: str = "report") -> Path:
        """Save a report as sorted, indented JSON"""
        path = self._path(name, ".json")
        with self._lock:
            with open(path, "w") as f:
                f.write(dumps(report))
            self.written.append(path)
        logger.info("wrote %s", path)
        return path

    def write_csv(self, rows: Sequence[Dict], name: str = "report") -> Path:
        """Save table rows as CSV with columns in sorted order"""
        path = self._path(name, ".csv")
        frame = pd.DataFrame([to_jsonable(r) for r in rows])
        frame = frame.reindex(sorted(frame.columns), axis=1)
        with self._lock:
            frame.to_csv(path, index=False, float_format="%.12g")
            self.written.append(path)
        logger.info("wrote %s (%d rows)", path, len(frame))
        return path

    def write_plot(self, rows: Sequence[Dict], x: str, y: str, name: str = "plot",
                   title: Optional[str] = None, group: Optional[str] = None) -> Optional[Path]:
        """Line chart of y against x, one line per group; a pure function of the rows"""
        usable = [r for r in rows if isinstance(r.get(x), (int, float)) and isinstance(r.get(y), (int, float))]
        if not usable:
            logger.warning("no numeric %s/%s columns to plot for %s", x, y, name)
            return None
        frame = pd.DataFrame(usable)
        path = self._path(name, ".svg")
        with self._lock:
            fig, ax = plt.subplots(figsize=(6, 4))
            groups = [(None, frame)] if group is None or group not in frame else sorted(frame.groupby(group))
            for label, part in groups:
                part = part.sort_values(x)
                ax.plot(part[x], part[y], marker="o", label=None if label is None else str(label))
            ax.set_xlabel(x)
            ax.set_ylabel(y)
            ax.set_title(title or name)
            if group is not None and len(groups) > 1:
                ax.legend()
            ax.grid(True, alpha=0.3)
            fig.tight_layout()
            fig.savefig(path, format="svg", metadata={"Date": None})
            plt.close(fig)
            self.written.append(path)
        logger.info("wrote %s", path)
        return path
