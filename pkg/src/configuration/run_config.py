"""
Run Configuration Reader
Parses flat `section.key = value` files into a SimConfig

Format:
    # comment
    sim.dt = 0.001
    uav.m = 2.84
    trajectory.target = 1, 1, 5
    trajectory.waypoints = 1, 1, 5; 2, -1, 6

Vectors are comma separated, waypoint lists separate points with ';'.
Booleans accept true/false/yes/no/1/0. Missing keys keep their defaults.
"""

import re
from typing import Any, Callable, Dict, List, Optional, Tuple

from catenary import TetherMaterial
from controllers.backstepping import GainSet, LbarPolicy, LbarPolicyKind
from simulation.sim_engine import Integrator, SimConfig, default_initial_state
from simulation.trajectories import TrajectoryKind, TrajectorySpec
from tuav_errors import ConfigParseError, ConfigValidationError, ParameterError
from uav_dynamics import ControlLimits, UavParams
from winder import WinderParams


# ============================================================
# VALUE CONVERTERS
# ============================================================

_TRUE = {"true", "yes", "1", "on"}
_FALSE = {"false", "no", "0", "off"}


def _to_bool(raw: str) -> bool:
    value = raw.strip().lower()
    if value in _TRUE:
        return True
    if value in _FALSE:
        return False
    raise ValueError(f"expected a boolean, got '{raw}'")


def _to_int(raw: str) -> int:
    return int(raw.strip())


def _to_float(raw: str) -> float:
    return float(raw.strip())


def _to_vector(size: int) -> Callable[[str], Tuple[float, ...]]:
    def convert(raw: str) -> Tuple[float, ...]:
        parts = [p for p in raw.split(",")]
        if len(parts) != size:
            raise ValueError(f"expected {size} comma-separated numbers, got '{raw}'")
        return tuple(float(p) for p in parts)
    return convert


def _to_points(raw: str) -> List[Tuple[float, ...]]:
    points = [p for p in raw.split(";") if p.strip()]
    if not points:
        raise ValueError("expected at least one point")
    return [_to_vector(3)(p) for p in points]


def _to_limit(raw: str) -> Optional[float]:
    if raw.strip().lower() in ("none", "inf", ""):
        return None
    return float(raw)


def _to_text(raw: str) -> str:
    return raw.strip().lower()


_vec3 = _to_vector(3)
_vec2 = _to_vector(2)


# Section -> key -> converter
SCHEMA: Dict[str, Dict[str, Callable[[str], Any]]] = {
    "sim": {
        "dt": _to_float,
        "duration": _to_float,
        "integrator": _to_text,
        "printed_laws": _to_bool,
        "winder_free": _to_bool,
    },
    "uav": {
        "m": _to_float, "g": _to_float,
        "I_xx": _to_float, "I_yy": _to_float, "I_zz": _to_float,
        "A_x": _to_float, "A_y": _to_float, "A_z": _to_float,
        "gravity_sign": _to_int,
    },
    "tether": {"rho": _to_float, "A": _to_float, "g": _to_float, "L_T": _to_float},
    "winder": {
        "m_w_bar": _to_float, "r_w": _to_float, "r_i": _to_float,
        "beta_w": _to_float, "K_t": _to_float, "r_e": _to_float,
        "inelastic": _to_bool,
    },
    "gains": {name: _to_float for name in (
        "k1", "k2", "k3", "k4", "k5", "k6", "k7", "k8",
        "k_w", "k_w2", "kx1", "kx2", "ky1", "ky2",
    )},
    "lbar": {"policy": _to_text, "sigma": _to_float, "T0": _to_float},
    "trajectory": {
        "kind": _to_text,
        "target": _vec3,
        "yaw": _to_float,
        "start": _vec3,
        "end": _vec3,
        "speed": _to_float,
        "radius": _to_float,
        "rate": _to_float,
        "altitude": _to_float,
        "center": _vec2,
        "waypoints": _to_points,
        "tolerance": _to_float,
    },
    "init": {
        "position": _vec3,
        "velocity": _vec3,
        "attitude": _vec3,
        "rates": _vec3,
        "theta": _to_float,
        "theta_dot": _to_float,
    },
    "limits": {name: _to_limit for name in ("U_f", "U_phi", "U_theta", "U_psi", "U_win")},
}

_LINE = re.compile(r'^([A-Za-z_]\w*)\.([A-Za-z_]\w*)\s*=\s*(.*)$')


class RunConfigParser:
    """
    Reader for run configuration text

    Several sources can be layered: later sources override keys of earlier
    ones, while a key repeated within one source is an error.

    Usage:
        parser = RunConfigParser()
        parser.parse_file("runs/setpoint.cfg")
        config = parser.build()
    """

    def __init__(self):
        # section -> key -> converted value
        self.values: Dict[str, Dict[str, Any]] = {section: {} for section in SCHEMA}

    def parse_file(self, filepath: str):
        """Parse a configuration file (UTF-8)"""
        with open(filepath, 'r', encoding='utf-8') as f:
            content = f.read()
        self.parse_text(content)

    def parse_text(self, content: str):
        """Parse configuration text, one `section.key = value` per line"""
        seen = set()
        for line_number, line in enumerate(content.splitlines(), start=1):
            text = line.split('#', 1)[0].strip()
            if not text:
                continue
            if '=' not in text:
                raise ConfigParseError(f"expected 'section.key = value', got '{text}'", line_number)
            match = _LINE.match(text)
            if not match:
                raise ConfigParseError(f"malformed key in '{text}'", line_number)
            section, key, raw = match.group(1), match.group(2), match.group(3).strip()
            self._store(section, key, raw, line_number, seen)

    def update(self, settings: Dict[str, str]):
        """Layer dotted-key settings (as used by the built-in scenarios)"""
        self.parse_text("\n".join(f"{key} = {value}" for key, value in settings.items()))

    def _store(self, section: str, key: str, raw: str, line_number: int, seen: set):
        dotted = f"{section}.{key}"
        if section not in SCHEMA or key not in SCHEMA[section]:
            raise ConfigValidationError(f"line {line_number}: unknown key '{dotted}'")
        if dotted in seen:
            raise ConfigValidationError(f"line {line_number}: duplicate key '{dotted}'")
        seen.add(dotted)
        try:
            self.values[section][key] = SCHEMA[section][key](raw)
        except ValueError as e:
            raise ConfigValidationError(f"line {line_number}: {dotted}: {e}") from e

    # ============================================================
    # BUILD
    # ============================================================

    def build(self) -> SimConfig:
        """
        Assemble the SimConfig

        Raises:
            ConfigValidationError: a value breaks a parameter invariant
        """
        try:
            return self._build()
        except ParameterError as e:
            raise ConfigValidationError(str(e)) from e
        except ValueError as e:
            # Unknown enum member
            raise ConfigValidationError(str(e)) from e

    def _build(self) -> SimConfig:
        v = self.values
        material = TetherMaterial(**v["tether"])
        winder = WinderParams(rho=material.rho, L_T=material.L_T, **v["winder"])
        uav = UavParams(**v["uav"])
        gains = GainSet(**v["gains"])

        lbar_values = dict(v["lbar"])
        if "policy" in lbar_values:
            lbar_values["kind"] = LbarPolicyKind(lbar_values.pop("policy"))
        lbar = LbarPolicy(**lbar_values)

        trajectory_values = dict(v["trajectory"])
        if "kind" in trajectory_values:
            trajectory_values["kind"] = TrajectoryKind(trajectory_values["kind"])
        trajectory = TrajectorySpec(**trajectory_values)

        limits = ControlLimits(**v["limits"])

        sim = dict(v["sim"])
        if "integrator" in sim:
            sim["integrator"] = Integrator(sim["integrator"])

        initial = None
        if v["init"]:
            initial = default_initial_state(policy=lbar, material=material, winder=winder, **v["init"])

        return SimConfig(
            initial=initial,
            trajectory=trajectory,
            gains=gains,
            uav=uav,
            winder=winder,
            material=material,
            lbar=lbar,
            limits=limits,
            **sim,
        )


def parse_config(path: str) -> SimConfig:
    """
    Read a run configuration file

    Example:
        config = parse_config("runs/setpoint.cfg")
    """
    parser = RunConfigParser()
    parser.parse_file(path)
    return parser.build()
