"""
Tethered UAV Dynamics
Unified 14-state model: UAV translation and rotation under thrust, gravity,
drag and tether tension, plus the ground winch

State ordering (x1..x14):
    x, x_dot, y, y_dot, z, z_dot, phi, p, theta, q, psi, r, winch angle, winch rate

Body rates are taken as Euler angle rates (p, q, r) = (phi_dot, theta_dot, psi_dot)
and (u, v, w) = (x_dot, y_dot, z_dot).
"""

import math
from dataclasses import dataclass, fields
from typing import Optional, Sequence, Tuple

import numpy as np

from catenary import TensionVector
from tuav_errors import ParameterError
from winder import (
    WinderParams,
    WinderState,
    current_inertia,
    pulling_force,
    tether_elongation,
    winch_rate_accel,
)


STATE_SIZE = 14
ANCHOR = (0.0, 0.0, 0.0)
# |cos(theta)| below this marks the angular velocity map as singular
W_ETA_SINGULAR_TOL = 1e-12


@dataclass
class UavParams:
    """
    Airframe parameters

    gravity_sign = -1 applies gravity as the inertial vector (0, 0, -g).
    gravity_sign = +1 reproduces the body-projected gravity terms exactly
    as the unified model prints them.
    """
    m: float = 2.84
    g: float = 9.81
    I_xx: float = 0.5192
    I_yy: float = 0.4929
    I_zz: float = 0.0947
    A_x: float = 0.3
    A_y: float = 0.3
    A_z: float = 0.3
    gravity_sign: int = -1

    def __post_init__(self):
        for name in ("m", "g", "I_xx", "I_yy", "I_zz"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value > 0):
                raise ParameterError(f"UavParams.{name} > 0 violated (got {value})")
        for name in ("A_x", "A_y", "A_z"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value >= 0):
                raise ParameterError(f"UavParams.{name} >= 0 violated (got {value})")
        if self.gravity_sign not in (1, -1):
            raise ParameterError(f"UavParams.gravity_sign in {{+1, -1}} violated (got {self.gravity_sign})")

    @property
    def inertia(self) -> Tuple[float, float, float]:
        return (self.I_xx, self.I_yy, self.I_zz)


@dataclass(frozen=True)
class UavState:
    """UAV states x1..x12"""
    x: float = 0.0
    u: float = 0.0
    y: float = 0.0
    v: float = 0.0
    z: float = 0.0
    w: float = 0.0
    phi: float = 0.0
    p: float = 0.0
    theta: float = 0.0
    q: float = 0.0
    psi: float = 0.0
    r: float = 0.0

    @property
    def position(self) -> Tuple[float, float, float]:
        return (self.x, self.y, self.z)

    @property
    def velocity(self) -> Tuple[float, float, float]:
        return (self.u, self.v, self.w)


@dataclass(frozen=True)
class FullState:
    """UAV and winch together, the 14-dimensional simulation state"""
    uav: UavState
    winder: WinderState

    def as_array(self) -> np.ndarray:
        s, w = self.uav, self.winder
        return np.array([s.x, s.u, s.y, s.v, s.z, s.w, s.phi, s.p, s.theta, s.q, s.psi, s.r,
                         w.theta, w.theta_dot], dtype=float)

    @classmethod
    def from_array(cls, values: Sequence[float]) -> "FullState":
        if len(values) != STATE_SIZE:
            raise ParameterError(f"state vector must have {STATE_SIZE} entries (got {len(values)})")
        uav = UavState(*(float(v) for v in values[:12]))
        winder = WinderState(theta=float(values[12]), theta_dot=float(values[13]))
        return cls(uav=uav, winder=winder)


@dataclass(frozen=True)
class ControlInputs:
    """Actuator commands held over one integration step"""
    U_f: float = 0.0
    U_phi: float = 0.0
    U_theta: float = 0.0
    U_psi: float = 0.0
    U_win: float = 0.0

    def as_tuple(self) -> Tuple[float, float, float, float, float]:
        return (self.U_f, self.U_phi, self.U_theta, self.U_psi, self.U_win)


@dataclass
class ControlLimits:
    """Symmetric saturation bounds; None leaves a channel unbounded"""
    U_f: Optional[float] = None
    U_phi: Optional[float] = None
    U_theta: Optional[float] = None
    U_psi: Optional[float] = None
    U_win: Optional[float] = None

    def __post_init__(self):
        for f in fields(self):
            bound = getattr(self, f.name)
            if bound is not None and not bound > 0:
                raise ParameterError(f"ControlLimits.{f.name} > 0 violated (got {bound})")

    def apply(self, inputs: ControlInputs) -> ControlInputs:
        if all(bound is None for bound in (self.U_f, self.U_phi, self.U_theta, self.U_psi, self.U_win)):
            return inputs
        clipped = {}
        for f in fields(self):
            value = getattr(inputs, f.name)
            bound = getattr(self, f.name)
            clipped[f.name] = value if bound is None else min(max(value, -bound), bound)
        return ControlInputs(**clipped)


# ============================================================
# KINEMATICS
# ============================================================

def rotation_matrix(phi: float, theta: float, psi: float) -> np.ndarray:
    """
    Body-to-inertial rotation (Z-Y-X Euler angles)

    Example:
        R = rotation_matrix(0.0, 0.0, 0.0)   # identity
    """
    cf, sf = math.cos(phi), math.sin(phi)
    ct, st = math.cos(theta), math.sin(theta)
    cp, sp = math.cos(psi), math.sin(psi)
    return np.array([
        [cp * ct, cp * st * sf - sp * cf, cp * st * cf + sp * sf],
        [ct * sp, sp * st * sf + cp * cf, sp * st * cf - cp * sf],
        [-st, ct * sf, ct * cf],
    ])


def angular_velocity_map(phi: float, theta: float) -> np.ndarray:
    """W_eta mapping Euler angle rates to body angular velocity; det = -cos(theta)"""
    cf, sf = math.cos(phi), math.sin(phi)
    ct, st = math.cos(theta), math.sin(theta)
    return np.array([
        [-st, 0.0, 1.0],
        [ct * sf, cf, 0.0],
        [ct * cf, -sf, 0.0],
    ])


def w_eta_is_singular(theta: float) -> bool:
    """True at gimbal lock, where W_eta loses rank"""
    return abs(math.cos(theta)) < W_ETA_SINGULAR_TOL


def generalized_inertia(phi: float, theta: float, I: Sequence[float]) -> np.ndarray:
    """
    Inertia expressed in the generalized coordinates, J = W^T I W

    Args:
        phi: Roll, rad
        theta: Pitch, rad
        I: Principal moments (I_xx, I_yy, I_zz), kg m^2

    Returns:
        3x3 symmetric positive semidefinite matrix
    """
    if len(I) != 3 or min(I) <= 0:
        raise ParameterError(f"principal inertias must be three positive values (got {tuple(I)})")
    W = angular_velocity_map(phi, theta)
    return W.T @ np.diag(np.asarray(I, dtype=float)) @ W


# ============================================================
# ACCELERATIONS
# ============================================================

def _gravity(phi: float, theta: float, params: UavParams) -> Tuple[float, float, float]:
    mg = params.m * params.g
    if params.gravity_sign < 0:
        return 0.0, 0.0, -mg
    ct = math.cos(theta)
    return mg * math.sin(theta), mg * ct * math.sin(phi), mg * ct * math.cos(phi)


def gravity_terms(state: UavState, params: UavParams) -> Tuple[float, float, float]:
    """
    Gravity contributions (G_x, G_y, G_z) as they enter the translational rows

    The rows subtract G_x and G_y and add G_z.
    """
    return _gravity(state.phi, state.theta, params)


def _translational_rows(x: Sequence[float], U_f: float, T: Sequence[float], params: UavParams):
    # x holds the UAV states x1..x12
    u, v, w = x[1], x[3], x[5]
    phi, p, theta, q, psi, r = x[6], x[7], x[8], x[9], x[10], x[11]
    cf, sf = math.cos(phi), math.sin(phi)
    ct, st = math.cos(theta), math.sin(theta)
    cp, sp = math.cos(psi), math.sin(psi)
    m = params.m
    G_x, G_y, G_z = _gravity(phi, theta, params)

    x_ddot = (U_f * (cp * cf * st + sp * sf) + m * (r * v - q * w)
              - G_x - T[0] - params.A_x * u) / m
    y_ddot = (U_f * (cf * sp * st - cp * sf) + m * (r * u - p * w)
              - G_y + T[1] - params.A_y * v) / m
    z_ddot = (U_f * ct * cf + m * (q * u - p * v)
              + G_z - T[2] - params.A_z * w) / m
    return x_ddot, y_ddot, z_ddot


def _rotational_rows(p: float, q: float, r: float, U_phi: float, U_theta: float,
                     U_psi: float, params: UavParams):
    phi_ddot = (U_phi - q * r * (params.I_yy - params.I_zz)) / params.I_xx
    theta_ddot = (U_theta + p * r * (params.I_xx - params.I_zz)) / params.I_yy
    psi_ddot = (U_psi - p * q * (params.I_xx - params.I_yy)) / params.I_zz
    return phi_ddot, theta_ddot, psi_ddot


def translational_accel(
    state: UavState,
    U_f: float,
    tension: TensionVector,
    params: UavParams
) -> Tuple[float, float, float]:
    """
    Linear accelerations of the UAV

    Args:
        state: UAV state
        U_f: Lift thrust, N
        tension: Tether pull at the attachment point
        params: Airframe parameters

    Returns:
        (x_ddot, y_ddot, z_ddot), m/s^2
    """
    x = [getattr(state, f.name) for f in fields(UavState)]
    return _translational_rows(x, U_f, tension.components, params)


def rotational_accel(
    state: UavState,
    U_phi: float,
    U_theta: float,
    U_psi: float,
    params: UavParams
) -> Tuple[float, float, float]:
    """Angular accelerations (phi_ddot, theta_ddot, psi_ddot) with gyroscopic coupling"""
    return _rotational_rows(state.p, state.q, state.r, U_phi, U_theta, U_psi, params)


def state_derivative(
    x: np.ndarray,
    inputs: ControlInputs,
    tension: TensionVector,
    uav: UavParams,
    winder: WinderParams,
    anchor: Sequence[float] = ANCHOR
) -> np.ndarray:
    """
    Time derivative of a plain 14-entry state vector

    Same dynamics as full_derivative without building state objects;
    integrator stages call this directly.
    """
    values = x.tolist() if isinstance(x, np.ndarray) else list(x)
    if len(values) != STATE_SIZE:
        raise ParameterError(f"state vector must have {STATE_SIZE} entries (got {len(values)})")
    x_ddot, y_ddot, z_ddot = _translational_rows(values, inputs.U_f, tension.components, uav)
    phi_ddot, theta_ddot, psi_ddot = _rotational_rows(
        values[7], values[9], values[11], inputs.U_phi, inputs.U_theta, inputs.U_psi, uav
    )

    theta_w, theta_w_dot = values[12], values[13]
    I_w = current_inertia(winder, min(max(theta_w, 0.0), winder.max_theta))
    f_p_norm = 0.0
    if not winder.inelastic:
        position = (values[0], values[2], values[4])
        e_t = tether_elongation(position, anchor, winder.r_w, theta_w)
        f_p_norm = float(np.linalg.norm(pulling_force(winder, e_t, position, anchor)))
    winch_ddot = winch_rate_accel(winder, theta_w_dot, f_p_norm, inputs.U_win, I_w)

    return np.array([
        values[1], x_ddot,
        values[3], y_ddot,
        values[5], z_ddot,
        values[7], phi_ddot,
        values[9], theta_ddot,
        values[11], psi_ddot,
        theta_w_dot, winch_ddot,
    ])


def full_derivative(
    state: FullState,
    inputs: ControlInputs,
    tension: TensionVector,
    uav: UavParams,
    winder: WinderParams,
    anchor: Sequence[float] = ANCHOR
) -> np.ndarray:
    """
    Time derivative of the 14-dimensional state

    Pure function of its arguments. The winch inertia is evaluated at the
    winch angle clipped to the spool, so intermediate integrator stages
    that overshoot the spool stay well defined.

    Returns:
        np.ndarray of shape (14,)
    """
    return state_derivative(state.as_array(), inputs, tension, uav, winder, anchor)
