import math

import numpy as np
import pytest

from catenary import TensionBaseline, TensionVector, TetherMaterial, arc_length, catenary_parameter, fit_catenary
from controllers.backstepping import (
    ErrorVector,
    GainSet,
    LbarPolicy,
    LbarPolicyKind,
    ReferenceSignal,
    TILT_LIMIT,
    altitude_control,
    error_junction,
    lbar_estimator,
    lbar_rates,
    lyapunov_rates,
    lyapunov_sample,
    pitch_control,
    position_control,
    roll_control,
    winder_control,
    yaw_control,
)
from tuav_errors import InversionError, OverLengthError, ParameterError, SingularityError
from uav_dynamics import ControlInputs, FullState, UavParams, UavState, full_derivative
from winder import WinderParams, WinderState, current_inertia


UAV = UavParams()
WINDER = WinderParams()
MATERIAL = TetherMaterial()
GAINS = GainSet()
UNIT_GAINS = GainSet(k1=2, k2=2, k3=2, k4=2, k5=2, k6=2, k7=2, k8=2)


def test_gains_must_be_nonnegative():
    with pytest.raises(ParameterError, match="k5"):
        GainSet(k5=-1.0)


def test_lbar_policy_validation():
    assert LbarPolicy(kind="catenary").kind is LbarPolicyKind.CATENARY
    with pytest.raises(ParameterError, match="sigma"):
        LbarPolicy(sigma=1.0)


# ============================================================
# ERROR JUNCTION
# ============================================================

def _hover_state(position=(1.0, 1.0, 5.0), theta_w=100.0) -> FullState:
    x, y, z = position
    return FullState(uav=UavState(x=x, y=y, z=z), winder=WinderState(theta=theta_w))


def test_errors_vanish_when_state_matches_reference():
    state = _hover_state()
    ref = ReferenceSignal(position=(1.0, 1.0, 5.0), L_bar=WINDER.r_w * 100.0)
    errors = error_junction(state, ref, GAINS, WINDER)
    assert errors == ErrorVector()


def test_altitude_error_and_transform():
    state = FullState(uav=UavState(z=2.0), winder=WinderState(theta=100.0))
    ref = ReferenceSignal(position=(0.0, 0.0, 5.0), L_bar=5.0)
    errors = error_junction(state, ref, GainSet(k1=2.0), WINDER)
    assert errors.e_z == -3.0
    assert errors.z1 == -6.0


def test_length_error_converts_to_winch_angle():
    state = FullState(uav=UavState(), winder=WinderState(theta=110.0, theta_dot=1.0))
    ref = ReferenceSignal(L_bar=5.0, L_bar_dot=0.05)
    errors = error_junction(state, ref, GAINS, WINDER)
    assert errors.e_L == pytest.approx(0.5)
    assert errors.e_theta_w == pytest.approx(10.0)
    assert errors.z7 == pytest.approx((1.0 - 1.0) + GAINS.k_w * 10.0)


def test_reference_advances_by_feedforward():
    ref = ReferenceSignal(
        position=(1.0, 2.0, 3.0),
        attitude=(0.1, -0.1, 0.5),
        velocity=(0.5, 0.0, -1.0),
        acceleration=(0.0, 2.0, 0.0),
        L_bar=4.0, L_bar_dot=0.2, L_bar_ddot=1.0,
    )
    moved = ref.advanced(0.1)
    assert moved.position == pytest.approx((1.05, 2.01, 2.9))
    assert moved.velocity == pytest.approx((0.5, 0.2, -1.0))
    assert moved.attitude == ref.attitude
    assert moved.L_bar == pytest.approx(4.0 + 0.02 + 0.005)
    assert moved.L_bar_dot == pytest.approx(0.3)


# ============================================================
# DESIRED TETHER LENGTH
# ============================================================

def test_lbar_slack_policy():
    assert lbar_estimator((0.0, 6.0, 8.0), LbarPolicy()) == pytest.approx(10.5)
    assert lbar_estimator((0.0, 0.0, 0.0), LbarPolicy()) == 0.0


def test_lbar_beyond_reach():
    with pytest.raises(OverLengthError):
        lbar_estimator((0.0, 0.0, 29.0), LbarPolicy(), MATERIAL)


def test_lbar_catenary_policy_roundtrip():
    policy = LbarPolicy(kind=LbarPolicyKind.CATENARY, T0=5.0)
    p1 = (1.0, 1.0, 5.0)
    L_bar = lbar_estimator(p1, policy, MATERIAL)
    assert L_bar > np.linalg.norm(p1)
    geometry = fit_catenary((0.0, 0.0, 0.0), p1, L_bar, max_length=MATERIAL.L_T)
    assert arc_length(geometry.d, geometry.dz, geometry.a) == pytest.approx(L_bar, rel=1e-8)
    assert geometry.a == pytest.approx(catenary_parameter(5.0, MATERIAL), rel=1e-6)
    assert policy.baseline == TensionBaseline(5.0)


def test_lbar_policy_rejects_nonpositive_tension():
    with pytest.raises(ParameterError, match="T0"):
        LbarPolicy(T0=0.0)


def test_lbar_catenary_policy_needs_material():
    with pytest.raises(ParameterError):
        lbar_estimator((1.0, 1.0, 5.0), LbarPolicy(kind=LbarPolicyKind.CATENARY))


@pytest.mark.parametrize("kind", [LbarPolicyKind.SLACK, LbarPolicyKind.CATENARY])
def test_lbar_rates_match_path_differences(kind):
    policy = LbarPolicy(kind=kind)
    p, v, a = np.array([1.0, -0.5, 4.0]), np.array([0.3, 0.2, -0.1]), np.array([-0.2, 0.1, 0.05])
    path = lambda t: p + v * t + 0.5 * a * t * t
    h = 1e-3
    ahead = lbar_estimator(path(h), policy, MATERIAL)
    here = lbar_estimator(path(0.0), policy, MATERIAL)
    behind = lbar_estimator(path(-h), policy, MATERIAL)
    rate, accel = lbar_rates(p, v, a, policy, MATERIAL)
    assert rate == pytest.approx((ahead - behind) / (2 * h), rel=1e-5)
    assert accel == pytest.approx((ahead - 2 * here + behind) / (h * h), rel=1e-3, abs=1e-6)


def test_lbar_rates_at_rest():
    assert lbar_rates((1.0, 1.0, 5.0), (0, 0, 0), (0, 0, 0), LbarPolicy()) == (0.0, 0.0)


# ============================================================
# CONTROL LAWS
# ============================================================

def test_altitude_hover_thrust():
    U_f = altitude_control(UavState(), ErrorVector(), GAINS, 0.0, UAV)
    assert U_f == pytest.approx(2.84 * 9.81, rel=1e-12)
    assert U_f == pytest.approx(27.8604, abs=1e-9)


def test_altitude_law_preserves_equilibrium():
    state = UavState(z=5.0)
    tension = TensionVector(0.4, 0.3, 0.2, (0.1, 0.3, 0.12))
    U_f = altitude_control(state, ErrorVector(), GAINS, tension.T_Z, UAV)
    full = FullState(uav=state, winder=WinderState(theta=100.0))
    dx = full_derivative(full, ControlInputs(U_f=U_f), tension, UAV, WINDER)
    assert dx[5] == pytest.approx(0.0, abs=1e-12)


def test_altitude_law_singular_at_vertical_pitch():
    with pytest.raises(SingularityError):
        altitude_control(UavState(theta=math.pi / 2), ErrorVector(), GAINS, 0.0, UAV)


def test_altitude_law_tracks_with_gravity_sign_plus():
    params = UavParams(gravity_sign=1)
    state = UavState(z=4.0, w=0.5, phi=0.1, theta=-0.05, p=0.2, q=0.1, u=0.3, v=-0.2)
    ref = ReferenceSignal(position=(0.0, 0.0, 5.0))
    full = FullState(uav=state, winder=WinderState(theta=100.0))
    errors = error_junction(full, ref, GAINS, WINDER)
    U_f = altitude_control(state, errors, GAINS, 0.0, params, ref)
    z_ddot = full_derivative(full, ControlInputs(U_f=U_f), TensionVector.zero(), params, WINDER)[5]
    expected = -GAINS.k1 * state.w - errors.e_z - GAINS.k2 * errors.z1
    assert z_ddot == pytest.approx(expected, rel=1e-12)


def test_roll_law_examples():
    errors = ErrorVector(e_phi=0.1, z2=0.2)
    gains = GainSet(k3=2.0, k4=2.0)
    assert roll_control(UavState(), errors, gains, UAV) == pytest.approx(0.5192 * (-0.4 - 0.1))
    assert roll_control(UavState(), errors, gains, UAV) == pytest.approx(-0.2596, abs=1e-9)
    assert roll_control(UavState(q=1.0, r=1.0), ErrorVector(), GAINS, UAV) == pytest.approx(0.3982, abs=1e-12)
    assert roll_control(UavState(), ErrorVector(), GAINS, UAV) == 0.0


def test_pitch_law_examples():
    errors = ErrorVector(e_theta=0.1, z3=0.2)
    gains = GainSet(k5=2.0, k6=2.0)
    assert pitch_control(UavState(), errors, gains, UAV) == pytest.approx(-0.24645, abs=1e-9)
    assert pitch_control(UavState(p=1.0, r=1.0), ErrorVector(), GAINS, UAV) == pytest.approx(0.6139, abs=1e-12)
    assert pitch_control(UavState(), ErrorVector(), GAINS, UAV) == 0.0


def test_yaw_law_examples():
    errors = ErrorVector(e_psi=0.1, z4=0.2)
    gains = GainSet(k7=2.0, k8=2.0)
    assert yaw_control(UavState(), errors, gains, UAV) == pytest.approx(-0.04735, abs=1e-9)
    assert yaw_control(UavState(p=1.0, q=1.0), ErrorVector(), GAINS, UAV) == pytest.approx(-0.0263, abs=1e-12)
    assert yaw_control(UavState(), ErrorVector(), GAINS, UAV) == 0.0


def test_roll_law_cancels_coupling_and_shapes_error():
    state = UavState(phi=0.2, p=-0.1, q=0.4, r=0.3)
    full = FullState(uav=state, winder=WinderState(theta=100.0))
    ref = ReferenceSignal(position=(0.0, 0.0, 0.0))
    errors = error_junction(full, ref, GAINS, WINDER)
    U_phi = roll_control(state, errors, GAINS, UAV, ref)
    phi_ddot = full_derivative(full, ControlInputs(U_phi=U_phi), TensionVector.zero(), UAV, WINDER)[7]
    expected = -GAINS.k3 * state.p - errors.e_phi - GAINS.k4 * errors.z2
    assert phi_ddot == pytest.approx(expected, rel=1e-12)


def test_laws_are_odd_without_coupling():
    state = UavState(p=0.3, q=-0.2)
    flipped_state = UavState(p=-0.3, q=0.2)
    errors = ErrorVector(e_phi=0.1, e_theta=-0.05, e_psi=0.2, z2=0.4, z3=-0.1, z4=0.3)
    flipped = ErrorVector(e_phi=-0.1, e_theta=0.05, e_psi=-0.2, z2=-0.4, z3=0.1, z4=-0.3)
    # r = 0 removes roll and pitch coupling; yaw coupling needs p q = 0
    assert roll_control(flipped_state, flipped, GAINS, UAV) == pytest.approx(-roll_control(state, errors, GAINS, UAV))
    assert pitch_control(flipped_state, flipped, GAINS, UAV) == pytest.approx(-pitch_control(state, errors, GAINS, UAV))
    yaw_state, yaw_flipped = UavState(r=0.25), UavState(r=-0.25)
    assert yaw_control(yaw_flipped, flipped, GAINS, UAV) == pytest.approx(-yaw_control(yaw_state, errors, GAINS, UAV))
    win = winder_control(WinderState(100.0, 0.7), 0.3, GAINS, WINDER)
    assert winder_control(WinderState(100.0, -0.7), -0.3, GAINS, WINDER) == pytest.approx(-win)


def test_position_cascade_no_demand():
    ref = ReferenceSignal(position=(1.0, -2.0, 5.0))
    state = UavState(x=1.0, y=-2.0, z=5.0)
    assert position_control(state, ref, GAINS, 27.86, UAV) == (0.0, 0.0)


def test_position_cascade_demand_along_heading():
    ref = ReferenceSignal(position=(1.0, 0.0, 5.0))
    phi_ref, theta_ref = position_control(UavState(x=0.5, z=5.0), ref, GAINS, 27.86, UAV)
    assert phi_ref == 0.0
    assert theta_ref > 0.0
    # e_x = -0.5: a_x = 0.5 + kx2 * kx1 * 0.5
    assert theta_ref == pytest.approx(UAV.m / 27.86 * 1.0, rel=1e-12)


def test_position_cascade_clamps_tilt():
    ref = ReferenceSignal(position=(0.0, 100.0, 5.0))
    phi_ref, theta_ref = position_control(UavState(z=5.0), ref, GAINS, 27.86, UAV)
    assert abs(phi_ref) == TILT_LIMIT == math.pi / 6
    assert theta_ref == 0.0


def test_position_cascade_needs_thrust():
    with pytest.raises(InversionError):
        position_control(UavState(), ReferenceSignal(), GAINS, 0.0, UAV)


def test_winder_law_examples():
    assert winder_control(WinderState(100.0, 0.0), 0.0, GAINS, WINDER) == 0.0
    U_win = winder_control(WinderState(100.0, 1.0), 0.0, GainSet(k_w2=0.0), WINDER)
    assert U_win == pytest.approx((-0.003485 * 2.0 + 0.01) / 0.05, rel=1e-12)
    assert U_win == pytest.approx(0.0606, abs=1e-9)
    with_transform = winder_control(WinderState(100.0, 1.0), 0.0, GAINS, WINDER)
    assert with_transform == pytest.approx((0.003485 * (-2.0 - 2.0) + 0.01) / 0.05, rel=1e-12)


def test_winder_law_shapes_error():
    state = FullState(uav=UavState(z=5.0), winder=WinderState(theta=120.0, theta_dot=-0.4))
    ref = ReferenceSignal(L_bar=5.0, L_bar_dot=0.1)
    errors = error_junction(state, ref, GAINS, WINDER)
    U_win = winder_control(state.winder, errors.e_L, GAINS, WINDER, ref)
    theta_ddot = full_derivative(state, ControlInputs(U_f=27.86, U_win=U_win), TensionVector.zero(), UAV, WINDER)[13]
    rate_error = state.winder.theta_dot - ref.L_bar_dot / WINDER.r_w
    expected = -GAINS.k_w * rate_error - errors.e_theta_w - GAINS.k_w2 * errors.z7
    assert theta_ddot == pytest.approx(expected, rel=1e-12)


def test_winder_law_radius_division():
    # Equal winch-angle errors on both drums ask for the same angular acceleration
    narrow = WinderParams(r_w=0.05, r_i=0.03)
    wide = WinderParams(r_w=0.10, r_i=0.03)
    theta_narrow, theta_wide = 200.0, 100.0   # same released length, same mass
    I_narrow = current_inertia(narrow, theta_narrow)
    I_wide = current_inertia(wide, theta_wide)
    demand_narrow = winder_control(WinderState(theta_narrow, 0.0), 0.02, GAINS, narrow) * narrow.r_w / I_narrow
    demand_wide = winder_control(WinderState(theta_wide, 0.0), 0.04, GAINS, wide) * wide.r_w / I_wide
    assert demand_wide == pytest.approx(demand_narrow, rel=1e-12)


# ============================================================
# EQUILIBRIUM AND FIDELITY FLAG
# ============================================================

def _closed_loop_derivative(printed: bool) -> np.ndarray:
    state = FullState(uav=UavState(x=1.0, y=1.0, z=5.0), winder=WinderState(theta=100.0))
    ref = ReferenceSignal(position=(1.0, 1.0, 5.0), L_bar=WINDER.r_w * 100.0)
    tension = TensionVector.zero()
    errors = error_junction(state, ref, GAINS, WINDER)
    U_f = altitude_control(state.uav, errors, GAINS, tension.T_Z, UAV, ref, printed)
    phi_ref, theta_ref = position_control(state.uav, ref, GAINS, U_f, UAV, tension.components)
    ref = ref.with_attitude(phi_ref, theta_ref)
    errors = error_junction(state, ref, GAINS, WINDER)
    inputs = ControlInputs(
        U_f=U_f,
        U_phi=roll_control(state.uav, errors, GAINS, UAV, ref, printed),
        U_theta=pitch_control(state.uav, errors, GAINS, UAV, ref, printed),
        U_psi=yaw_control(state.uav, errors, GAINS, UAV, ref, printed),
        U_win=winder_control(state.winder, errors.e_L, GAINS, WINDER, ref, printed=printed),
    )
    return full_derivative(state, inputs, tension, UAV, WINDER)


def test_origin_is_equilibrium_of_closed_loop():
    dx = _closed_loop_derivative(printed=False)
    assert np.all(dx == 0.0)


def test_printed_laws_break_equilibrium():
    dx = _closed_loop_derivative(printed=True)
    assert np.any(dx != 0.0)
    assert dx[5] == pytest.approx(-GAINS.k1)
    assert dx[7] == pytest.approx(-GAINS.k3)


# ============================================================
# LYAPUNOV
# ============================================================

def test_lyapunov_values():
    state = _hover_state()
    origin = lyapunov_sample(state, ErrorVector(), GAINS)
    assert (origin.V_c1, origin.V_c2, origin.V_c12) == (0.0, 0.0, 0.0)
    sample = lyapunov_sample(state, ErrorVector(e_z=-3.0, z1=-6.0), GAINS)
    assert sample.V_c1 == pytest.approx(22.5)


def test_lyapunov_values_even_in_errors():
    errors = ErrorVector(e_z=0.3, z1=-0.2, e_phi=0.05, z2=0.1, e_theta_w=4.0, z7=-2.0)
    flipped = ErrorVector(e_z=-0.3, z1=0.2, e_phi=-0.05, z2=-0.1, e_theta_w=-4.0, z7=2.0)
    assert lyapunov_sample(_hover_state(), errors, GAINS) == lyapunov_sample(_hover_state(), flipped, GAINS)


def test_lyapunov_rates_formula():
    errors = ErrorVector(e_z=1.0, z1=2.0, e_phi=0.5, z2=-1.0, e_theta_w=3.0, z7=0.5)
    rates = lyapunov_rates(errors, UNIT_GAINS)
    assert rates == pytest.approx((-2.0 - 8.0, -0.5 - 2.0, -2.0 * 9.0 - 2.0 * 0.25))
