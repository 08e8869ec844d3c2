import math

import numpy as np
import pytest

from catenary import TetherMaterial
from controllers.backstepping import LbarPolicy
from simulation.metrics import ERROR_CHANNELS, compute_metrics, metrics_from_table, rms, settling_time
from simulation.sim_engine import COLUMNS, SimConfig, default_initial_state, run_closed_loop
from simulation.trajectories import (
    TrajectoryKind,
    TrajectorySpec,
    WaypointTracker,
    generate_reference,
    validate_reach,
)
from tuav_errors import DomainError, OverLengthError, ParameterError


MATERIAL = TetherMaterial()


# ============================================================
# TRAJECTORIES
# ============================================================

def test_spec_validation():
    assert TrajectorySpec(kind="circular").kind is TrajectoryKind.CIRCULAR
    with pytest.raises(ParameterError, match="speed"):
        TrajectorySpec(speed=0.0)
    with pytest.raises(ParameterError, match="waypoints"):
        TrajectorySpec(kind=TrajectoryKind.WAYPOINTS, waypoints=[])


def test_setpoint_reference():
    ref = generate_reference(TrajectorySpec(target=(0.0, 6.0, 8.0), yaw=0.3), 12.0)
    assert ref.position == (0.0, 6.0, 8.0)
    assert ref.attitude == (0.0, 0.0, 0.3)
    assert ref.velocity == (0.0, 0.0, 0.0)
    assert ref.L_bar == pytest.approx(10.5)
    assert (ref.L_bar_dot, ref.L_bar_ddot) == (0.0, 0.0)


def test_linear_reference_ramps_then_holds():
    spec = TrajectorySpec(kind=TrajectoryKind.LINEAR, start=(0.0, 0.0, 1.0), end=(3.0, 4.0, 1.0), speed=1.0)
    mid = generate_reference(spec, 2.5)
    assert mid.position == pytest.approx((1.5, 2.0, 1.0))
    assert mid.velocity == pytest.approx((0.6, 0.8, 0.0))
    held = generate_reference(spec, 6.0)
    assert held.position == (3.0, 4.0, 1.0)
    assert held.velocity == (0.0, 0.0, 0.0)


def test_circular_reference():
    spec = TrajectorySpec(kind=TrajectoryKind.CIRCULAR, radius=1.0, rate=0.2, altitude=5.0)
    start = generate_reference(spec, 0.0)
    assert start.position == pytest.approx((1.0, 0.0, 5.0))
    assert start.velocity == pytest.approx((0.0, 0.2, 0.0))
    assert start.acceleration == pytest.approx((-0.04, 0.0, 0.0))
    half = generate_reference(spec, math.pi / 0.2)
    assert half.position == pytest.approx((-1.0, 0.0, 5.0), abs=1e-12)
    # Constant distance to the anchor: constant desired length
    assert half.L_bar == pytest.approx(start.L_bar)
    assert start.L_bar_dot == pytest.approx(0.0, abs=1e-12)


def test_reference_rejects_negative_time():
    with pytest.raises(DomainError):
        generate_reference(TrajectorySpec(), -1.0)


def test_validate_reach():
    assert validate_reach(TrajectorySpec()) == pytest.approx(1.05 * math.sqrt(27.0))
    with pytest.raises(OverLengthError):
        validate_reach(TrajectorySpec(target=(0.0, 0.0, 29.0)), LbarPolicy(), MATERIAL)
    far_circle = TrajectorySpec(kind=TrajectoryKind.CIRCULAR, radius=20.0, altitude=25.0)
    with pytest.raises(OverLengthError):
        validate_reach(far_circle, LbarPolicy(), MATERIAL)


def test_waypoint_tracker():
    tracker = WaypointTracker([(0.0, 0.0, 1.0), (1.0, 0.0, 1.0)], tolerance=0.1)
    assert not tracker.update((0.5, 0.0, 1.0))
    assert tracker.update((0.05, 0.0, 1.0))
    assert tracker.target == (1.0, 0.0, 1.0)
    assert tracker.finished
    assert not tracker.update((1.0, 0.0, 1.0))


def test_waypoint_reference_needs_tracker():
    with pytest.raises(DomainError):
        generate_reference(TrajectorySpec(kind=TrajectoryKind.WAYPOINTS), 0.0)


# ============================================================
# METRICS
# ============================================================

def test_rms():
    assert rms(np.array([])) == 0.0
    assert rms(np.array([3.0, -3.0])) == 3.0


def test_settling_time_of_exponential():
    t = np.arange(0.0, 10.0 + 1e-12, 1e-3)
    settled = settling_time(t, np.exp(-t))
    assert settled == pytest.approx(-math.log(0.02), abs=1e-3)
    assert settled == pytest.approx(3.912, abs=1e-3)


def test_settling_time_interpolates_band_crossing():
    t = np.array([0.0, 1.0, 2.0, 3.0])
    settled = settling_time(t, np.array([1.0, -0.5, 0.01, 0.0]))
    assert settled == pytest.approx(1.0 + 0.48 / 0.49, rel=1e-12)


def test_settling_time_unsettled_and_zero():
    t = np.linspace(0.0, 1.0, 11)
    assert settling_time(t, t) is None
    assert settling_time(t, np.zeros_like(t)) == 0.0


def _table(t, **columns):
    table = {name: np.zeros_like(t) for name in COLUMNS}
    table["t"] = t
    table.update(columns)
    return table


def test_rms_of_sinusoid():
    t = np.arange(0.0, 10.0, 1e-3)
    metrics = metrics_from_table(_table(t, e_x=np.sin(2.0 * math.pi * t)), transient=0.0)
    assert metrics.rms_error["e_x"] == pytest.approx(1.0 / math.sqrt(2.0), rel=1e-9)
    assert metrics.rms_error["e_y"] == 0.0


def test_metrics_of_zero_error_log():
    t = np.linspace(0.0, 2.0, 201)
    metrics = metrics_from_table(_table(t))
    for name in ERROR_CHANNELS:
        assert metrics.settling_time[name] == 0.0
        assert metrics.steady_state_error[name] == 0.0
        assert metrics.rms_error[name] == 0.0
    assert metrics.unsettled == []
    assert metrics.max_dV_step == {"V_c1": 0.0, "V_c2": 0.0, "V_c12": 0.0}
    assert metrics.duration == 2.0


def test_lyapunov_excursions():
    t = np.linspace(0.0, 1.0, 5)
    table = _table(t, dV_c1=np.array([5.0, -1.0, -2.0, 0.5, -0.1]), V_c2=np.array([4.0, 3.0, 2.0, 2.5, 1.0]))
    metrics = metrics_from_table(table)
    # The first logged rate carries no information
    assert metrics.max_dV_step["V_c1"] == 0.5
    assert metrics.max_dV_central["V_c2"] == pytest.approx(-0.5 / 0.5)


def test_lyapunov_excursions_keep_their_sign():
    t = np.linspace(0.0, 1.0, 4)
    table = _table(t, dV_c12=np.array([3.0, -2.0, -0.25, -1.0]))
    assert metrics_from_table(table).max_dV_step["V_c12"] == -0.25


def test_metrics_reject_empty_input():
    with pytest.raises(DomainError):
        metrics_from_table({name: np.empty(0) for name in COLUMNS})


def test_metrics_of_held_equilibrium():
    config = SimConfig(
        duration=0.5,
        trajectory=TrajectorySpec(target=(0.0, 0.0, 5.0)),
        initial=default_initial_state(position=(0.0, 0.0, 5.0)),
    )
    metrics = compute_metrics(run_closed_loop(config))
    assert metrics.unsettled == []
    assert max(metrics.steady_state_error.values()) <= 1e-9
    assert metrics.to_dict()["unsettled"] == []
