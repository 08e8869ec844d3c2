"""
Telemetry Export
Writes run logs as CSV, tether animation frames as JSON lines and metrics
as JSON, and reads exported CSV back into a column table

Features:
- Fixed CSV schema (see sim_engine.COLUMNS), 9 significant digits
- Frame records with an N-point tether polyline per strided tick
- Run manifest describing what was written where
"""

import csv
import json
import os
from dataclasses import dataclass, asdict
from typing import Dict, List, Optional

import numpy as np

from catenary import sample_polyline
from simulation.metrics import Metrics
from simulation.sim_engine import COLUMNS, SimLog
from tuav_errors import ConfigValidationError, DomainError


CSV_FORMAT = "{:.9g}"


@dataclass
class RunManifest:
    """Where a run came from and which files it produced"""
    scenario: str
    out_dir: str
    config_path: Optional[str] = None
    export_csv: bool = True
    export_frames: bool = True
    export_metrics: bool = True

    def __post_init__(self):
        if not self.scenario:
            raise ConfigValidationError("RunManifest scenario must be nonempty")
        if not self.out_dir:
            raise ConfigValidationError("RunManifest output directory must be nonempty")

    def prepare(self) -> str:
        """Create the output directory and check it is writable"""
        os.makedirs(self.out_dir, exist_ok=True)
        if not os.access(self.out_dir, os.W_OK):
            raise OSError(f"output directory not writable: {self.out_dir}")
        return self.out_dir

    def path(self, suffix: str) -> str:
        return os.path.join(self.out_dir, f"{self.scenario}{suffix}")

    @property
    def csv_path(self) -> str:
        return self.path(".csv")

    @property
    def frames_path(self) -> str:
        return self.path("_frames.jsonl")

    @property
    def metrics_path(self) -> str:
        return self.path("_metrics.json")

    def write(self) -> str:
        """Write the manifest next to the outputs"""
        path = self.path("_manifest.json")
        with open(path, 'w', encoding='utf-8') as f:
            json.dump(asdict(self), f, indent=2)
        return path


# ============================================================
# CSV
# ============================================================

def export_csv(log: SimLog, path: str) -> int:
    """
    Write the log as CSV

    Args:
        log: Nonempty simulation log
        path: Output file

    Returns:
        Number of data rows written
    """
    if len(log) == 0:
        raise DomainError("cannot export an empty log")
    with open(path, 'w', newline='', encoding='utf-8') as f:
        writer = csv.DictWriter(f, fieldnames=COLUMNS, lineterminator='\n')
        writer.writeheader()
        for record in log.records:
            writer.writerow({
                name: CSV_FORMAT.format(value)
                for name, value in zip(COLUMNS, record.row())
            })
    return len(log)


def read_csv(path: str) -> Dict[str, np.ndarray]:
    """
    Read an exported CSV back into columns

    Returns:
        Column arrays keyed by header names
    """
    with open(path, 'r', newline='', encoding='utf-8') as f:
        reader = csv.DictReader(f)
        fieldnames = reader.fieldnames or []
        missing = [name for name in COLUMNS if name not in fieldnames]
        if missing:
            raise ConfigValidationError(f"{path}: missing telemetry columns {missing}")
        rows = list(reader)
    return {
        name: np.array([float(row[name]) for row in rows], dtype=float)
        for name in fieldnames
    }


# ============================================================
# FRAMES
# ============================================================

def export_frames(log: SimLog, path: str, stride: int = 100, samples: int = 50) -> int:
    """
    Write tether animation frames, one JSON object per line

    Each frame holds t, the UAV position, the released tether length and a
    polyline of `samples` points from the anchor to the UAV along the
    fitted catenary. Ticks without a fitted curve get the straight segment
    and "degenerate": true.

    Args:
        log: Simulation log
        path: Output file
        stride: Keep every stride-th tick, starting with the first
        samples: Points per polyline (>= 2)

    Returns:
        Number of frames written
    """
    if stride < 1:
        raise DomainError(f"frame stride must be >= 1 (got {stride})")
    if samples < 2:
        raise DomainError(f"polyline needs at least 2 samples (got {samples})")

    count = 0
    with open(path, 'w', encoding='utf-8') as f:
        for record in log.records[::stride]:
            uav = list(record.state.uav.position)
            frame = {
                "t": record.t,
                "uav": uav,
                "L": record.L,
                "degenerate": record.geometry is None,
                "tether": sample_polyline(record.geometry, log.anchor, uav, samples),
            }
            f.write(json.dumps(frame) + "\n")
            count += 1
    return count


def read_frames(path: str) -> List[Dict]:
    with open(path, 'r', encoding='utf-8') as f:
        return [json.loads(line) for line in f if line.strip()]


# ============================================================
# METRICS
# ============================================================

def export_metrics(metrics: Metrics, path: str) -> str:
    """Write metrics as JSON"""
    with open(path, 'w', encoding='utf-8') as f:
        json.dump(metrics.to_dict(), f, indent=2, sort_keys=True)
    return path
