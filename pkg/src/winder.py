"""
Ground Winch Model
Released-length dependent mass and inertia, tether elongation and pulling
force, and the winch equation of motion in the elastic and inelastic regimes
"""

import math
from dataclasses import dataclass
from typing import Optional, Sequence, Tuple

import numpy as np

from tuav_errors import DegenerateGeometryError, DomainError, ParameterError


# Rounding slack on the spool bounds
_SPOOL_TOL = 1e-12


@dataclass
class WinderParams:
    """
    Winch and tether parameters

    r_e is the moment arm of the pulling force; it defaults to the
    effective winch radius r_w. With inelastic=True the tether is treated
    as inextensible and the pulling force drops out of the torque balance.
    """
    m_w_bar: float = 1.2      # winch mass without tether, kg
    rho: float = 0.034        # tether linear density, kg/m
    L_T: float = 30.0         # maximum tether length, m
    r_w: float = 0.05         # effective winch radius, m
    r_i: float = 0.03         # inner drum radius, m
    beta_w: float = 0.01      # viscous friction, N m s
    K_t: float = 100.0        # tether stiffness, N/m
    r_e: Optional[float] = None
    inelastic: bool = True

    def __post_init__(self):
        if self.r_e is None:
            self.r_e = self.r_w
        for name in ("m_w_bar", "rho", "L_T", "r_w", "r_i", "beta_w", "K_t", "r_e"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value > 0):
                raise ParameterError(f"WinderParams.{name} > 0 violated (got {value})")
        if self.r_i > self.r_w:
            raise ParameterError(f"WinderParams r_i <= r_w violated ({self.r_i} > {self.r_w})")

    @property
    def max_theta(self) -> float:
        """Winch angle at which the spool is empty"""
        return self.L_T / self.r_w


@dataclass(frozen=True)
class WinderState:
    """Winch angular position theta (x13) and rate theta_dot (x14)"""
    theta: float = 0.0
    theta_dot: float = 0.0

    def released_length(self, r_w: float) -> float:
        return r_w * self.theta


def _check_released(params: WinderParams, theta: float):
    released = params.r_w * theta
    slack = _SPOOL_TOL * params.L_T
    if released < -slack or released > params.L_T + slack:
        raise DomainError(
            f"released length {released:.6g} m outside spool [0, {params.L_T:.6g}] m"
        )


# ============================================================
# MASS PROPERTIES
# ============================================================

def winch_mass(params: WinderParams, theta: float) -> float:
    """
    Mass of the winch including the tether still on the drum

    Args:
        params: Winch parameters
        theta: Winch angle, rad

    Returns:
        m_w = m_w_bar + (L_T - r_w theta) rho, kg

    Example:
        winch_mass(WinderParams(), 100.0)   # 2.05
    """
    _check_released(params, theta)
    return params.m_w_bar + (params.L_T - params.r_w * theta) * params.rho


def winch_inertia(m_w: float, r_w: float, r_i: float) -> float:
    """Drum moment of inertia I_w = 1/2 m_w (r_w^2 + r_i^2)"""
    if not 0 < r_i <= r_w:
        raise DomainError(f"radius ordering 0 < r_i <= r_w violated (r_i={r_i}, r_w={r_w})")
    return 0.5 * m_w * (r_w * r_w + r_i * r_i)


def current_inertia(params: WinderParams, theta: float) -> float:
    """Moment of inertia at the given winch angle"""
    return winch_inertia(winch_mass(params, theta), params.r_w, params.r_i)


# ============================================================
# TETHER FORCE
# ============================================================

def _chord(p1: Sequence[float], p0: Sequence[float]) -> Tuple[np.ndarray, float]:
    delta = np.asarray(p1, dtype=float) - np.asarray(p0, dtype=float)
    distance = float(np.linalg.norm(delta))
    if distance == 0.0:
        raise DegenerateGeometryError("UAV coincides with the anchor")
    return delta, distance


def tether_elongation(
    p1: Sequence[float],
    p0: Sequence[float],
    r_w: float,
    theta: float
) -> float:
    """
    Stretch of the tether beyond its released length

    Returns:
        e_t = max(0, |p1 - p0| - r_w theta), m
    """
    _, distance = _chord(p1, p0)
    return max(0.0, distance - r_w * theta)


def pulling_force(
    params: WinderParams,
    e_t: float,
    p1: Sequence[float],
    p0: Sequence[float]
) -> np.ndarray:
    """
    Pulling force of the stretched tether along the anchor-to-UAV chord

    Zero vector in the inelastic regime.
    """
    delta, distance = _chord(p1, p0)
    if params.inelastic:
        return np.zeros(3)
    return params.K_t * e_t * delta / distance


# ============================================================
# EQUATION OF MOTION
# ============================================================

def winch_accel(
    params: WinderParams,
    state: WinderState,
    f_p_norm: float,
    u_win: float,
    inertia: Optional[float] = None
) -> float:
    """
    Angular acceleration of the winch

    Elastic:   theta_ddot = (r_e |F_p| - beta_w theta_dot + r_w U_win) / I_w
    Inelastic: theta_ddot = (-beta_w theta_dot + r_w U_win) / I_w

    Args:
        params: Winch parameters
        state: Current winch state
        f_p_norm: Magnitude of the pulling force, N (ignored when inelastic)
        u_win: Winch torque command, N m
        inertia: Frozen I_w; recomputed from theta when None

    Returns:
        theta_ddot, rad/s^2
    """
    I_w = current_inertia(params, state.theta) if inertia is None else inertia
    return winch_rate_accel(params, state.theta_dot, f_p_norm, u_win, I_w)


def winch_rate_accel(
    params: WinderParams,
    theta_dot: float,
    f_p_norm: float,
    u_win: float,
    inertia: float
) -> float:
    """Torque balance of winch_accel on plain numbers, for integrator stages"""
    if not inertia > 0:
        raise DomainError(f"winch inertia must be > 0 (got {inertia})")
    torque = -params.beta_w * theta_dot + params.r_w * u_win
    if not params.inelastic:
        torque += params.r_e * f_p_norm
    return torque / inertia


def clamp_to_spool(params: WinderParams, state: WinderState) -> Tuple[WinderState, bool]:
    """
    Stop the drum at the spool limits

    Returns:
        (state, clamped) where a clamped state sits on the limit with zero rate
    """
    if state.theta < 0.0:
        return WinderState(theta=0.0, theta_dot=0.0), True
    if state.theta > params.max_theta:
        return WinderState(theta=params.max_theta, theta_dot=0.0), True
    return state, False
