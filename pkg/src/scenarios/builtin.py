"""
Built-in Flight Scenarios
Ready-made run settings for the standard closed-loop experiments

Scenarios Covered:
1. setpoint     - hover at (1, 1, 5) from (0.5, -0.5, 1)
2. linear       - 10 s constant-speed ramp, then hold
3. circular     - two laps of a 1 m circle at 0.2 rad/s, 5 m up
4. waypoints    - three waypoints, target advances on arrival
5. winder-decay - UAV holds position while the winch spins down freely

Each scenario is a set of dotted config keys, so a config file given with
it overrides any of them.
"""

import math
from dataclasses import dataclass, field
from typing import Dict, List

from tuav_errors import ConfigValidationError


@dataclass(frozen=True)
class Scenario:
    """Named run settings"""
    name: str
    description: str
    settings: Dict[str, str] = field(default_factory=dict)
    # Start of the post-transient window used for RMS metrics, s
    transient: float = 10.0


# Linear ramp of sqrt(12) m covered in 10 s
_RAMP_SPEED = math.sqrt(12.0) / 10.0
# One settling interval plus two laps
_CIRCLE_DURATION = 5.0 + 2.0 * (2.0 * math.pi / 0.2)


# ============================================================
# SCENARIO TABLE
# ============================================================

SCENARIOS: Dict[str, Scenario] = {
    "setpoint": Scenario(
        name="setpoint",
        description="Stabilise at (1, 1, 5) from (0.5, -0.5, 1)",
        settings={
            "trajectory.kind": "setpoint",
            "trajectory.target": "1, 1, 5",
            "sim.duration": "30",
        },
        transient=20.0,
    ),
    "linear": Scenario(
        name="linear",
        description="Track a 10 s linear ramp to (2.5, 1.5, 3), then hold",
        settings={
            "trajectory.kind": "linear",
            "trajectory.start": "0.5, -0.5, 1",
            "trajectory.end": "2.5, 1.5, 3",
            "trajectory.speed": f"{_RAMP_SPEED:.12g}",
            "sim.duration": "30",
        },
        transient=10.0,
    ),
    "circular": Scenario(
        name="circular",
        description="Track a circle of radius 1 m at 0.2 rad/s, altitude 5 m, for two laps",
        settings={
            "trajectory.kind": "circular",
            "trajectory.radius": "1",
            "trajectory.rate": "0.2",
            "trajectory.altitude": "5",
            "trajectory.center": "0, 0",
            "sim.duration": f"{_CIRCLE_DURATION:.12g}",
        },
        transient=5.0,
    ),
    "waypoints": Scenario(
        name="waypoints",
        description="Fly through three waypoints, advancing within 5 cm of each",
        settings={
            "trajectory.kind": "waypoints",
            "trajectory.waypoints": "1, 1, 5; 2, -1, 6; 0, 1, 4",
            "trajectory.tolerance": "0.05",
            "sim.duration": "60",
        },
        transient=50.0,
    ),
    "winder-decay": Scenario(
        name="winder-decay",
        description="Hold (0.5, -0.5, 1) with the winch unactuated and spinning down from 20 rad/s",
        settings={
            "trajectory.kind": "setpoint",
            "trajectory.target": "0.5, -0.5, 1",
            "init.theta_dot": "20",
            "sim.winder_free": "true",
            "sim.duration": "10",
        },
        transient=5.0,
    ),
}


def list_scenarios() -> List[Scenario]:
    """Built-in scenarios in display order"""
    return list(SCENARIOS.values())


def get_scenario(name: str) -> Scenario:
    """
    Look up a built-in scenario

    Raises:
        ConfigValidationError: unknown name
    """
    try:
        return SCENARIOS[name]
    except KeyError:
        known = ", ".join(SCENARIOS)
        raise ConfigValidationError(f"unknown scenario '{name}' (known: {known})") from None
