"""
Reference Trajectories
Setpoint, linear ramp, circle and waypoint references with position,
velocity and acceleration feedforward and the matching desired tether length
"""

import logging
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import List, Optional, Sequence, Tuple

import numpy as np

from catenary import TetherMaterial
from controllers.backstepping import LbarPolicy, ReferenceSignal, lbar_estimator, lbar_rates
from tuav_errors import DomainError, ParameterError


logger = logging.getLogger(__name__)

Vec3 = Tuple[float, float, float]

# Points sampled around a circle for the reach check
_CIRCLE_REACH_SAMPLES = 360


class TrajectoryKind(Enum):
    """Reference trajectory variants"""
    SETPOINT = "setpoint"
    LINEAR = "linear"
    CIRCULAR = "circular"
    WAYPOINTS = "waypoints"


@dataclass
class TrajectorySpec:
    """
    Reference trajectory description

    Only the fields of the selected kind are used:
        setpoint: target
        linear: start, end, speed (constant speed, then hold at end)
        circular: radius, rate, altitude, center
        waypoints: waypoints, tolerance
    yaw applies to every kind.
    """
    kind: TrajectoryKind = TrajectoryKind.SETPOINT
    target: Vec3 = (1.0, 1.0, 5.0)
    yaw: float = 0.0
    start: Vec3 = (0.5, -0.5, 1.0)
    end: Vec3 = (2.5, 1.5, 3.0)
    speed: float = 0.5
    radius: float = 1.0
    rate: float = 0.2
    altitude: float = 5.0
    center: Tuple[float, float] = (0.0, 0.0)
    waypoints: List[Vec3] = field(default_factory=lambda: [(1.0, 1.0, 5.0), (2.0, -1.0, 6.0), (0.0, 1.0, 4.0)])
    tolerance: float = 0.05

    def __post_init__(self):
        if isinstance(self.kind, str):
            self.kind = TrajectoryKind(self.kind)
        if not self.speed > 0:
            raise ParameterError(f"TrajectorySpec.speed > 0 violated (got {self.speed})")
        if not self.radius > 0:
            raise ParameterError(f"TrajectorySpec.radius > 0 violated (got {self.radius})")
        if not self.tolerance > 0:
            raise ParameterError(f"TrajectorySpec.tolerance > 0 violated (got {self.tolerance})")
        if self.kind is TrajectoryKind.WAYPOINTS and not self.waypoints:
            raise ParameterError("TrajectorySpec.waypoints must not be empty")

    def commanded_points(self) -> List[Vec3]:
        """Points whose reach bounds every commanded position"""
        if self.kind is TrajectoryKind.SETPOINT:
            return [tuple(self.target)]
        if self.kind is TrajectoryKind.LINEAR:
            # Distance to the anchor is convex along the segment
            return [tuple(self.start), tuple(self.end)]
        if self.kind is TrajectoryKind.CIRCULAR:
            cx, cy = self.center
            return [
                (cx + self.radius * math.cos(phase), cy + self.radius * math.sin(phase), self.altitude)
                for phase in np.linspace(0.0, 2.0 * math.pi, _CIRCLE_REACH_SAMPLES, endpoint=False)
            ]
        return [tuple(p) for p in self.waypoints]


class WaypointTracker:
    """
    Active waypoint of a multi-waypoint flight

    The target advances once the UAV is within tolerance of it; the last
    waypoint is held for the rest of the run.
    """

    def __init__(self, waypoints: Sequence[Vec3], tolerance: float):
        self.waypoints = [tuple(float(c) for c in p) for p in waypoints]
        self.tolerance = tolerance
        self.index = 0

    @property
    def target(self) -> Vec3:
        return self.waypoints[self.index]

    @property
    def finished(self) -> bool:
        return self.index == len(self.waypoints) - 1

    def update(self, position: Sequence[float]) -> bool:
        """Advance to the next waypoint on arrival; returns True when the target changed"""
        if self.finished:
            return False
        gap = float(np.linalg.norm(np.asarray(position, dtype=float) - np.asarray(self.target)))
        if gap > self.tolerance:
            return False
        self.index += 1
        logger.debug("waypoint reached, advancing to %d: %s", self.index, self.target)
        return True


# ============================================================
# REFERENCE GENERATION
# ============================================================

def _kinematics(spec: TrajectorySpec, t: float, tracker: Optional[WaypointTracker]) -> Tuple[Vec3, Vec3, Vec3]:
    zero = (0.0, 0.0, 0.0)
    if spec.kind is TrajectoryKind.SETPOINT:
        return tuple(spec.target), zero, zero

    if spec.kind is TrajectoryKind.LINEAR:
        start = np.asarray(spec.start, dtype=float)
        end = np.asarray(spec.end, dtype=float)
        length = float(np.linalg.norm(end - start))
        if length == 0.0 or t >= length / spec.speed:
            return tuple(end), zero, zero
        direction = (end - start) / length
        position = start + direction * spec.speed * t
        velocity = direction * spec.speed
        return tuple(position.tolist()), tuple(velocity.tolist()), zero

    if spec.kind is TrajectoryKind.CIRCULAR:
        cx, cy = spec.center
        R, w = spec.radius, spec.rate
        c, s = math.cos(w * t), math.sin(w * t)
        position = (cx + R * c, cy + R * s, spec.altitude)
        velocity = (-R * w * s, R * w * c, 0.0)
        acceleration = (-R * w * w * c, -R * w * w * s, 0.0)
        return position, velocity, acceleration

    if tracker is None:
        raise DomainError("waypoint references need a WaypointTracker")
    return tracker.target, zero, zero


def generate_reference(
    spec: TrajectorySpec,
    t: float,
    policy: Optional[LbarPolicy] = None,
    material: Optional[TetherMaterial] = None,
    tracker: Optional[WaypointTracker] = None
) -> ReferenceSignal:
    """
    Reference signal at time t

    Args:
        spec: Trajectory description
        t: Time, s
        policy: Desired tether length policy (slack policy when None)
        material: Tether material for the catenary policy and the reach check
        tracker: Active waypoint state, required for waypoint trajectories

    Returns:
        ReferenceSignal with roll and pitch demands left at zero; the
        position cascade fills them in

    Raises:
        OverLengthError: commanded point beyond tether reach
    """
    if t < 0:
        raise DomainError(f"reference time must be >= 0 (got {t})")
    policy = policy or LbarPolicy()
    position, velocity, acceleration = _kinematics(spec, t, tracker)
    L_bar = lbar_estimator(position, policy, material)
    L_bar_dot, L_bar_ddot = lbar_rates(position, velocity, acceleration, policy, material)
    return ReferenceSignal(
        position=position,
        attitude=(0.0, 0.0, spec.yaw),
        velocity=velocity,
        acceleration=acceleration,
        L_bar=L_bar,
        L_bar_dot=L_bar_dot,
        L_bar_ddot=L_bar_ddot,
    )


def validate_reach(
    spec: TrajectorySpec,
    policy: Optional[LbarPolicy] = None,
    material: Optional[TetherMaterial] = None
) -> float:
    """
    Check every commanded point is within tether reach

    Returns:
        Largest desired tether length along the trajectory, m

    Raises:
        OverLengthError: some commanded point needs more than L_T
    """
    policy = policy or LbarPolicy()
    return max(lbar_estimator(p, policy, material) for p in spec.commanded_points())
