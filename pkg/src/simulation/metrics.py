"""
Run Metrics
Settling time, steady-state and RMS tracking error per channel, and the
largest positive Lyapunov rate excursions of a logged run
"""

from dataclasses import dataclass, field, asdict
from typing import Dict, List, Optional

import numpy as np

from tuav_errors import DomainError


ERROR_CHANNELS = ["e_x", "e_y", "e_z", "e_phi", "e_theta", "e_psi", "e_L"]
LYAPUNOV_CHANNELS = ["V_c1", "V_c2", "V_c12"]

SETTLING_FRACTION = 0.02
SETTLING_FLOOR = 1e-6


@dataclass
class Metrics:
    """
    Summary of a run

    settling_time is None for a channel that never stays inside its band.
    max_dV_step holds the logged held-reference rates, max_dV_central the
    central differences of the logged Lyapunov values; both report the
    largest value after the first row.
    """
    duration: float
    settling_time: Dict[str, Optional[float]] = field(default_factory=dict)
    steady_state_error: Dict[str, float] = field(default_factory=dict)
    rms_error: Dict[str, float] = field(default_factory=dict)
    max_dV_step: Dict[str, float] = field(default_factory=dict)
    max_dV_central: Dict[str, float] = field(default_factory=dict)

    @property
    def unsettled(self) -> List[str]:
        return [name for name, t in self.settling_time.items() if t is None]

    def to_dict(self) -> Dict:
        data = asdict(self)
        data["unsettled"] = self.unsettled
        return data


def rms(values: np.ndarray) -> float:
    """Root mean square; 0 for an empty window"""
    values = np.asarray(values, dtype=float)
    if values.size == 0:
        return 0.0
    return float(np.sqrt(np.mean(np.square(values))))


def settling_time(t: np.ndarray, error: np.ndarray) -> Optional[float]:
    """
    First time after which |error| stays within 2% of its peak

    The crossing into the band is interpolated between samples.

    Returns:
        Settling time, s, or None when the last sample is still outside the band
    """
    magnitude = np.abs(np.asarray(error, dtype=float))
    band = max(SETTLING_FRACTION * float(magnitude.max()), SETTLING_FLOOR)
    outside = np.nonzero(magnitude > band)[0]
    if outside.size == 0:
        return float(t[0])
    last = int(outside[-1])
    if last == magnitude.size - 1:
        return None
    # Band crossing, linear between the last sample outside and the first inside
    above, below = magnitude[last], magnitude[last + 1]
    fraction = (above - band) / (above - below)
    return float(t[last] + fraction * (t[last + 1] - t[last]))


def _max_after_first(values: np.ndarray) -> float:
    if values.size < 2:
        return 0.0
    return float(np.max(values[1:]))


def metrics_from_table(table: Dict[str, np.ndarray], transient: Optional[float] = None) -> Metrics:
    """
    Metrics from a column table (SimLog.table() or an exported CSV read back)

    Args:
        table: Columns keyed by CSV names
        transient: Start of the RMS window, s; each channel's own settling
            time when None

    Returns:
        Metrics
    """
    t = np.asarray(table["t"], dtype=float)
    if t.size == 0:
        raise DomainError("cannot compute metrics of an empty log")

    metrics = Metrics(duration=float(t[-1] - t[0]))
    for name in ERROR_CHANNELS:
        error = np.asarray(table[name], dtype=float)
        settled = settling_time(t, error)
        metrics.settling_time[name] = settled
        metrics.steady_state_error[name] = float(abs(error[-1]))
        start = transient if transient is not None else (settled if settled is not None else t[0])
        metrics.rms_error[name] = rms(error[t >= start])

    for name in LYAPUNOV_CHANNELS:
        metrics.max_dV_step[name] = _max_after_first(np.asarray(table["d" + name], dtype=float))
        values = np.asarray(table[name], dtype=float)
        if values.size >= 3:
            central = (values[2:] - values[:-2]) / (t[2:] - t[:-2])
            metrics.max_dV_central[name] = float(np.max(central))
        else:
            metrics.max_dV_central[name] = 0.0
    return metrics


def compute_metrics(log, transient: Optional[float] = None) -> Metrics:
    """
    Metrics of a SimLog

    Example:
        metrics = compute_metrics(run_closed_loop(SimConfig()))
        print(metrics.settling_time["e_z"])
    """
    if len(log) == 0:
        raise DomainError("cannot compute metrics of an empty log")
    return metrics_from_table(log.table(), transient)
