"""
Backstepping Controllers
Error junction, desired tether length estimator, altitude / attitude /
position / winder control laws and composite Lyapunov instrumentation

Every law tracks a reference with velocity and acceleration feedforward.
With zero feedforward each reduces to plain regulation of the error.
With printed=True the virtual-control rate term of each law is replaced by
its bare gain constant, which does not keep the origin an equilibrium.
"""

import math
from dataclasses import dataclass, fields, replace
from enum import Enum
from typing import Optional, Sequence, Tuple

import numpy as np

from catenary import TensionBaseline, TetherMaterial, arc_length, catenary_parameter
from tuav_errors import InversionError, OverLengthError, ParameterError, SingularityError
from uav_dynamics import FullState, UavParams, UavState, gravity_terms
from winder import WinderParams, WinderState, current_inertia


# |cos(theta) cos(phi)| below this trips the altitude law
SINGULARITY_EPS = 1e-3
# |U_f| below this cannot be inverted into an attitude demand
INVERSION_EPS = 1e-6
TILT_LIMIT = math.pi / 6
# Step for finite-difference rates of the catenary length policy
_LBAR_FD_STEP = 1e-4


# ============================================================
# TYPES
# ============================================================

@dataclass
class GainSet:
    """Backstepping gains; the first of each pair weights the error, the second the transform"""
    k1: float = 2.0
    k2: float = 2.0
    k3: float = 8.0
    k4: float = 8.0
    k5: float = 8.0
    k6: float = 8.0
    k7: float = 8.0
    k8: float = 8.0
    k_w: float = 2.0
    k_w2: float = 2.0
    kx1: float = 1.0
    kx2: float = 1.0
    ky1: float = 1.0
    ky2: float = 1.0

    def __post_init__(self):
        for f in fields(self):
            value = getattr(self, f.name)
            if not (math.isfinite(value) and value >= 0):
                raise ParameterError(f"GainSet.{f.name} >= 0 violated (got {value})")


Vec3 = Tuple[float, float, float]
_ZERO3: Vec3 = (0.0, 0.0, 0.0)


@dataclass(frozen=True)
class ReferenceSignal:
    """
    Commanded position, attitude and tether length with feedforward

    position / velocity / acceleration: (x, y, z) and derivatives
    attitude / attitude_rate / attitude_accel: (phi, theta, psi) and derivatives
    L_bar, L_bar_dot, L_bar_ddot: desired tether length and derivatives
    """
    position: Vec3 = _ZERO3
    attitude: Vec3 = _ZERO3
    velocity: Vec3 = _ZERO3
    acceleration: Vec3 = _ZERO3
    attitude_rate: Vec3 = _ZERO3
    attitude_accel: Vec3 = _ZERO3
    L_bar: float = 0.0
    L_bar_dot: float = 0.0
    L_bar_ddot: float = 0.0

    def with_attitude(self, phi: float, theta: float) -> "ReferenceSignal":
        """Same reference with roll and pitch demands replaced"""
        return replace(self, attitude=(phi, theta, self.attitude[2]))

    def advanced(self, dt: float) -> "ReferenceSignal":
        """
        Reference propagated over dt by its own feedforward

        Position and tether length follow second-order Taylor steps;
        attitude demands are held.
        """
        position = tuple(p + v * dt + 0.5 * a * dt * dt
                         for p, v, a in zip(self.position, self.velocity, self.acceleration))
        velocity = tuple(v + a * dt for v, a in zip(self.velocity, self.acceleration))
        L_bar = self.L_bar + self.L_bar_dot * dt + 0.5 * self.L_bar_ddot * dt * dt
        return replace(
            self,
            position=position,
            velocity=velocity,
            L_bar=L_bar,
            L_bar_dot=self.L_bar_dot + self.L_bar_ddot * dt,
        )


@dataclass(frozen=True)
class ErrorVector:
    """
    Tracking errors (actual - desired) and backstepping transform variables

    z_x, z_y, z1 .. z4 and z7 are (rate error) + gain * (error) for the
    x, y, altitude, roll, pitch, yaw and winch loops.
    """
    e_x: float = 0.0
    e_y: float = 0.0
    e_z: float = 0.0
    e_phi: float = 0.0
    e_theta: float = 0.0
    e_psi: float = 0.0
    e_L: float = 0.0
    e_theta_w: float = 0.0
    z_x: float = 0.0
    z_y: float = 0.0
    z1: float = 0.0
    z2: float = 0.0
    z3: float = 0.0
    z4: float = 0.0
    z7: float = 0.0

    @property
    def e_xyz(self) -> Vec3:
        return (self.e_x, self.e_y, self.e_z)

    @property
    def e_att(self) -> Vec3:
        return (self.e_phi, self.e_theta, self.e_psi)


@dataclass(frozen=True)
class LyapunovSample:
    """Composite Lyapunov values and their logged time derivatives"""
    V_c1: float = 0.0
    V_c2: float = 0.0
    V_c12: float = 0.0
    dV_c1: float = 0.0
    dV_c2: float = 0.0
    dV_c12: float = 0.0

    def with_rates(self, dV_c1: float, dV_c2: float, dV_c12: float) -> "LyapunovSample":
        return replace(self, dV_c1=dV_c1, dV_c2=dV_c2, dV_c12=dV_c12)


class LbarPolicyKind(Enum):
    """How the desired tether length follows the UAV position"""
    SLACK = "slack"
    CATENARY = "catenary"


@dataclass
class LbarPolicy:
    """
    Desired tether length policy

    SLACK: L_bar = sigma * |P1 - P0|
    CATENARY: L_bar is the arc length of the catenary with horizontal tension T0
    """
    kind: LbarPolicyKind = LbarPolicyKind.SLACK
    sigma: float = 1.05
    T0: float = 5.0
    anchor: Vec3 = _ZERO3

    def __post_init__(self):
        if isinstance(self.kind, str):
            self.kind = LbarPolicyKind(self.kind)
        if not self.sigma > 1.0:
            raise ParameterError(f"LbarPolicy.sigma > 1 violated (got {self.sigma})")
        if not self.T0 > 0:
            raise ParameterError(f"LbarPolicy.T0 > 0 violated (got {self.T0})")

    @property
    def baseline(self) -> TensionBaseline:
        """Horizontal tension that shapes the catenary policy"""
        return TensionBaseline(self.T0)


# ============================================================
# ERROR JUNCTION AND DESIRED TETHER LENGTH
# ============================================================

def error_junction(
    state: FullState,
    ref: ReferenceSignal,
    gains: GainSet,
    winder: WinderParams
) -> ErrorVector:
    """
    Tracking errors and transform variables for one control tick

    Args:
        state: Current 14-dimensional state
        ref: Reference at this tick
        gains: Gains used in the transforms
        winder: Winch parameters (r_w converts length to winch angle)

    Returns:
        ErrorVector with every error equal to actual - desired

    Example:
        errors = error_junction(state, ref, GainSet(), WinderParams())
    """
    s = state.uav
    x_ref, y_ref, z_ref = ref.position
    vx_ref, vy_ref, vz_ref = ref.velocity
    phi_ref, theta_ref, psi_ref = ref.attitude
    p_ref, q_ref, r_ref = ref.attitude_rate

    e_x = s.x - x_ref
    e_y = s.y - y_ref
    e_z = s.z - z_ref
    e_phi = s.phi - phi_ref
    e_theta = s.theta - theta_ref
    e_psi = s.psi - psi_ref
    e_L = state.winder.released_length(winder.r_w) - ref.L_bar
    e_theta_w = e_L / winder.r_w

    return ErrorVector(
        e_x=e_x,
        e_y=e_y,
        e_z=e_z,
        e_phi=e_phi,
        e_theta=e_theta,
        e_psi=e_psi,
        e_L=e_L,
        e_theta_w=e_theta_w,
        z_x=(s.u - vx_ref) + gains.kx1 * e_x,
        z_y=(s.v - vy_ref) + gains.ky1 * e_y,
        z1=(s.w - vz_ref) + gains.k1 * e_z,
        z2=(s.p - p_ref) + gains.k3 * e_phi,
        z3=(s.q - q_ref) + gains.k5 * e_theta,
        z4=(s.r - r_ref) + gains.k7 * e_psi,
        z7=(state.winder.theta_dot - ref.L_bar_dot / winder.r_w) + gains.k_w * e_theta_w,
    )


def _check_reach(L_bar: float, material: Optional[TetherMaterial]):
    if material is not None and L_bar > material.L_T:
        raise OverLengthError(
            f"desired tether length {L_bar:.6g} m exceeds L_T = {material.L_T:.6g} m"
        )


def lbar_estimator(
    uav_position: Sequence[float],
    policy: LbarPolicy,
    material: Optional[TetherMaterial] = None
) -> float:
    """
    Desired tether length for a UAV position

    Args:
        uav_position: UAV position P1, m
        policy: Length policy
        material: Tether material; required for the catenary policy and
            for the reach check against L_T

    Returns:
        L_bar, m

    Raises:
        OverLengthError: L_bar > L_T

    Example:
        lbar_estimator((0.0, 6.0, 8.0), LbarPolicy())   # 10.5
    """
    delta = np.asarray(uav_position, dtype=float) - np.asarray(policy.anchor, dtype=float)
    d = math.hypot(delta[0], delta[1])
    dz = float(delta[2])

    if policy.kind is LbarPolicyKind.SLACK:
        L_bar = policy.sigma * math.hypot(d, dz)
    else:
        if material is None:
            raise ParameterError("catenary length policy needs the tether material")
        if d == 0.0:
            # Vertical tether
            L_bar = abs(dz)
        else:
            a = catenary_parameter(policy.baseline.T0, material)
            L_bar = arc_length(d, dz, a)

    _check_reach(L_bar, material)
    return L_bar


def lbar_rates(
    position: Sequence[float],
    velocity: Sequence[float],
    acceleration: Sequence[float],
    policy: LbarPolicy,
    material: Optional[TetherMaterial] = None
) -> Tuple[float, float]:
    """
    First and second time derivatives of L_bar along a commanded motion

    Analytic for the slack policy, central differences for the catenary policy.
    """
    p = np.asarray(position, dtype=float) - np.asarray(policy.anchor, dtype=float)
    v = np.asarray(velocity, dtype=float)
    a = np.asarray(acceleration, dtype=float)

    if policy.kind is LbarPolicyKind.SLACK:
        rho = float(np.linalg.norm(p))
        if rho == 0.0:
            return 0.0, 0.0
        rho_dot = float(p @ v) / rho
        rho_ddot = (float(v @ v) + float(p @ a) - rho_dot * rho_dot) / rho
        return policy.sigma * rho_dot, policy.sigma * rho_ddot

    if not (np.any(v) or np.any(a)):
        return 0.0, 0.0
    h = _LBAR_FD_STEP
    anchor = np.asarray(policy.anchor, dtype=float)
    ahead = lbar_estimator(anchor + p + v * h + 0.5 * a * h * h, policy, material)
    here = lbar_estimator(anchor + p, policy, material)
    behind = lbar_estimator(anchor + p - v * h + 0.5 * a * h * h, policy, material)
    return (ahead - behind) / (2.0 * h), (ahead - 2.0 * here + behind) / (h * h)


# ============================================================
# CONTROL LAWS
# ============================================================

def altitude_control(
    state: UavState,
    errors: ErrorVector,
    gains: GainSet,
    T_z: float,
    params: UavParams,
    ref: Optional[ReferenceSignal] = None,
    printed: bool = False
) -> float:
    """
    Lift thrust from the altitude backstepping law

    U_f = (m nu - m q u + m p v - G_z + T_z + A_z w) / (cos(theta) cos(phi))
    with nu = z_ref_ddot - k1 (w - z_ref_dot) - e_z - k2 z1

    Raises:
        SingularityError: |cos(theta) cos(phi)| < SINGULARITY_EPS
    """
    tilt = math.cos(state.theta) * math.cos(state.phi)
    if abs(tilt) < SINGULARITY_EPS:
        raise SingularityError(
            f"altitude law singular: |cos(theta) cos(phi)| = {abs(tilt):.3g} < {SINGULARITY_EPS}"
        )
    vz_ref = ref.velocity[2] if ref is not None else 0.0
    az_ref = ref.acceleration[2] if ref is not None else 0.0

    rate_term = gains.k1 if printed else gains.k1 * (state.w - vz_ref)
    nu = az_ref - rate_term - errors.e_z - gains.k2 * errors.z1

    m = params.m
    _, _, G_z = gravity_terms(state, params)
    return (m * nu - m * state.q * state.u + m * state.p * state.v
            - G_z + T_z + params.A_z * state.w) / tilt


def _attitude_feedforward(ref: Optional[ReferenceSignal], axis: int) -> Tuple[float, float]:
    if ref is None:
        return 0.0, 0.0
    return ref.attitude_rate[axis], ref.attitude_accel[axis]


def roll_control(
    state: UavState,
    errors: ErrorVector,
    gains: GainSet,
    params: UavParams,
    ref: Optional[ReferenceSignal] = None,
    printed: bool = False
) -> float:
    """Roll moment U_phi = I_xx (phi_ref_ddot - k3 (p - phi_ref_dot) - e_phi - k4 z2) + q r (I_yy - I_zz)"""
    rate_ref, accel_ref = _attitude_feedforward(ref, 0)
    rate_term = gains.k3 if printed else gains.k3 * (state.p - rate_ref)
    nu = accel_ref - rate_term - errors.e_phi - gains.k4 * errors.z2
    return params.I_xx * nu + state.q * state.r * params.I_yy - state.q * state.r * params.I_zz


def pitch_control(
    state: UavState,
    errors: ErrorVector,
    gains: GainSet,
    params: UavParams,
    ref: Optional[ReferenceSignal] = None,
    printed: bool = False
) -> float:
    """Pitch moment U_theta = I_yy (... - k5 rate - e_theta - k6 z3) + p r (I_xx + I_zz)"""
    rate_ref, accel_ref = _attitude_feedforward(ref, 1)
    rate_term = gains.k5 if printed else gains.k5 * (state.q - rate_ref)
    nu = accel_ref - rate_term - errors.e_theta - gains.k6 * errors.z3
    return params.I_yy * nu + state.p * state.r * params.I_xx + state.p * state.r * params.I_zz


def yaw_control(
    state: UavState,
    errors: ErrorVector,
    gains: GainSet,
    params: UavParams,
    ref: Optional[ReferenceSignal] = None,
    printed: bool = False
) -> float:
    rate_ref, accel_ref = _attitude_feedforward(ref, 2)
    rate_term = gains.k7 if printed else gains.k7 * (state.r - rate_ref)
    nu = accel_ref - rate_term - errors.e_psi - gains.k8 * errors.z4
    return params.I_zz * nu - state.p * state.q * params.I_xx + state.p * state.q * params.I_yy


def position_control(
    state: UavState,
    ref: ReferenceSignal,
    gains: GainSet,
    U_f: float,
    params: UavParams,
    tension: Optional[Vec3] = None
) -> Tuple[float, float]:
    """
    Roll and pitch demands from the x / y backstepping cascade

    Each horizontal axis runs the same two-step construction as the
    altitude loop to get a desired acceleration. Coupling, gravity, drag
    and tension are fed forward, then the thrust tilt is inverted with the
    small-angle map about the current heading and clamped to +/- pi/6.

    Args:
        state: UAV state
        ref: Position reference with feedforward
        gains: kx1, kx2, ky1, ky2 are used
        U_f: Lift thrust of this tick, N
        params: Airframe parameters
        tension: (T_X, T_Y, T_Z) applied at the UAV; zero when None

    Returns:
        (phi_ref, theta_ref), rad

    Raises:
        InversionError: |U_f| < INVERSION_EPS
    """
    if abs(U_f) < INVERSION_EPS:
        raise InversionError(f"thrust {U_f:.3g} N too small to invert horizontal demand")
    s = state
    m = params.m
    T_X, T_Y, _ = tension if tension is not None else _ZERO3
    G_x, G_y, _ = gravity_terms(s, params)

    e_x = s.x - ref.position[0]
    e_y = s.y - ref.position[1]
    ex_dot = s.u - ref.velocity[0]
    ey_dot = s.v - ref.velocity[1]
    z_x = ex_dot + gains.kx1 * e_x
    z_y = ey_dot + gains.ky1 * e_y
    a_x = ref.acceleration[0] - gains.kx1 * ex_dot - e_x - gains.kx2 * z_x
    a_y = ref.acceleration[1] - gains.ky1 * ey_dot - e_y - gains.ky2 * z_y

    tau_x = a_x - (s.r * s.v - s.q * s.w) + (G_x + T_X + params.A_x * s.u) / m
    tau_y = a_y - (s.r * s.u - s.p * s.w) + (G_y - T_Y + params.A_y * s.v) / m

    cp, sp = math.cos(s.psi), math.sin(s.psi)
    scale = m / U_f
    phi_ref = scale * (tau_x * sp - tau_y * cp)
    theta_ref = scale * (tau_x * cp + tau_y * sp)
    return _clamp_tilt(phi_ref), _clamp_tilt(theta_ref)


def _clamp_tilt(angle: float) -> float:
    return min(max(angle, -TILT_LIMIT), TILT_LIMIT)


def winder_control(
    winder_state: WinderState,
    e_L: float,
    gains: GainSet,
    winder: WinderParams,
    ref: Optional[ReferenceSignal] = None,
    f_p_norm: float = 0.0,
    printed: bool = False
) -> float:
    """
    Winch torque from the tether length backstepping law

    The length error is converted to a winch angle error e_theta_w = e_L / r_w.

    U_win = (I_w nu + beta_w theta_dot - r_e |F_p|) / r_w
    with nu = theta_ref_ddot - k_w (theta_dot - theta_ref_dot) - e_theta_w - k_w2 z7;
    the pulling force term only applies to an elastic tether.

    Example:
        winder_control(WinderState(100.0, 1.0), 0.0, GainSet(k_w2=0.0), WinderParams())   # ~0.0606
    """
    r_w = winder.r_w
    rate_ref = ref.L_bar_dot / r_w if ref is not None else 0.0
    accel_ref = ref.L_bar_ddot / r_w if ref is not None else 0.0

    e_theta_w = e_L / r_w
    rate_error = winder_state.theta_dot - rate_ref
    z7 = rate_error + gains.k_w * e_theta_w

    rate_term = gains.k_w * winder_state.theta if printed else gains.k_w * rate_error
    nu = accel_ref - rate_term - e_theta_w - gains.k_w2 * z7

    theta = min(max(winder_state.theta, 0.0), winder.max_theta)
    I_w = current_inertia(winder, theta)
    torque = I_w * nu + winder.beta_w * winder_state.theta_dot
    if not winder.inelastic:
        torque -= winder.r_e * f_p_norm
    return torque / r_w


# ============================================================
# LYAPUNOV INSTRUMENTATION
# ============================================================

def lyapunov_sample(state: FullState, errors: ErrorVector, gains: GainSet) -> LyapunovSample:
    """
    Composite Lyapunov values of the altitude, roll and winch loops

    V_c1 = (e_z^2 + z1^2) / 2, V_c2 = (e_phi^2 + z2^2) / 2,
    V_c12 = (e_theta_w^2 + z7^2) / 2. Rates are filled in by the caller.
    """
    return LyapunovSample(
        V_c1=0.5 * (errors.e_z ** 2 + errors.z1 ** 2),
        V_c2=0.5 * (errors.e_phi ** 2 + errors.z2 ** 2),
        V_c12=0.5 * (errors.e_theta_w ** 2 + errors.z7 ** 2),
    )


def lyapunov_rates(errors: ErrorVector, gains: GainSet) -> Tuple[float, float, float]:
    """Rates the backstepping construction guarantees: -k e^2 - k' z^2 per loop"""
    return (
        -gains.k1 * errors.e_z ** 2 - gains.k2 * errors.z1 ** 2,
        -gains.k3 * errors.e_phi ** 2 - gains.k4 * errors.z2 ** 2,
        -gains.k_w * errors.e_theta_w ** 2 - gains.k_w2 * errors.z7 ** 2,
    )
