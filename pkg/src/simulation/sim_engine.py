"""
Closed-Loop Simulation Engine
Fixed-step integration of the tethered UAV and winch under the
backstepping controllers, with a per-tick telemetry log

Tick order:
    reference -> error junction -> catenary fit and tension -> lift thrust
    -> position cascade -> attitude and winch laws -> integration step -> log

Controls and tension are held constant over each step.
"""

import logging
import math
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Callable, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np

from catenary import (
    CatenaryGeometry,
    TensionVector,
    TetherMaterial,
    fit_catenary,
    tension_from_geometry,
)
from controllers.backstepping import (
    ErrorVector,
    GainSet,
    LbarPolicy,
    LyapunovSample,
    ReferenceSignal,
    altitude_control,
    error_junction,
    lbar_estimator,
    lyapunov_rates,
    lyapunov_sample,
    pitch_control,
    position_control,
    roll_control,
    winder_control,
    yaw_control,
)
from simulation.trajectories import (
    TrajectoryKind,
    TrajectorySpec,
    WaypointTracker,
    generate_reference,
    validate_reach,
)
from tuav_errors import (
    ConvergenceError,
    GeometryError,
    NumericalBlowupError,
    ParameterError,
    TuavError,
)
from uav_dynamics import (
    ControlInputs,
    ControlLimits,
    FullState,
    UavParams,
    UavState,
    state_derivative,
)
from winder import (
    WinderParams,
    WinderState,
    clamp_to_spool,
    pulling_force,
    tether_elongation,
)


logger = logging.getLogger(__name__)

Vec3 = Tuple[float, float, float]

DEFAULT_INIT_POSITION: Vec3 = (0.5, -0.5, 1.0)

# CSV / table column order
STATE_COLUMNS = [f"x{i}" for i in range(1, 15)]
REF_COLUMNS = ["x_ref", "y_ref", "z_ref", "phi_ref", "theta_ref", "psi_ref"]
ERROR_COLUMNS = ["e_x", "e_y", "e_z", "e_phi", "e_theta", "e_psi", "e_L"]
INPUT_COLUMNS = ["U_f", "U_phi", "U_theta", "U_psi", "U_win"]
LYAPUNOV_COLUMNS = ["V_c1", "V_c2", "V_c12", "dV_c1", "dV_c2", "dV_c12"]
COLUMNS = (["t"] + STATE_COLUMNS + REF_COLUMNS + ERROR_COLUMNS + INPUT_COLUMNS
           + ["L", "L_bar"] + LYAPUNOV_COLUMNS)


class Integrator(Enum):
    """Fixed-step integration schemes"""
    RK4 = "rk4"
    EULER = "euler"


# ============================================================
# CONFIGURATION
# ============================================================

def default_initial_state(
    position: Sequence[float] = DEFAULT_INIT_POSITION,
    velocity: Sequence[float] = (0.0, 0.0, 0.0),
    attitude: Sequence[float] = (0.0, 0.0, 0.0),
    rates: Sequence[float] = (0.0, 0.0, 0.0),
    theta: Optional[float] = None,
    theta_dot: float = 0.0,
    policy: Optional[LbarPolicy] = None,
    material: Optional[TetherMaterial] = None,
    winder: Optional[WinderParams] = None
) -> FullState:
    """
    Initial 14-dimensional state

    When theta is None the winch starts with the desired tether length
    of the initial position already released.
    """
    winder = winder or WinderParams()
    if theta is None:
        theta = lbar_estimator(position, policy or LbarPolicy(), material) / winder.r_w
    uav = UavState(
        x=position[0], u=velocity[0],
        y=position[1], v=velocity[1],
        z=position[2], w=velocity[2],
        phi=attitude[0], p=rates[0],
        theta=attitude[1], q=rates[1],
        psi=attitude[2], r=rates[2],
    )
    return FullState(uav=uav, winder=WinderState(theta=theta, theta_dot=theta_dot))


@dataclass
class SimConfig:
    """
    Everything a closed-loop run depends on

    printed_laws swaps the virtual-control rate terms of every law for
    their bare gain constants. winder_free leaves the winch unactuated.
    """
    dt: float = 1e-3
    duration: float = 20.0
    integrator: Integrator = Integrator.RK4
    initial: Optional[FullState] = None
    trajectory: TrajectorySpec = field(default_factory=TrajectorySpec)
    gains: GainSet = field(default_factory=GainSet)
    uav: UavParams = field(default_factory=UavParams)
    winder: WinderParams = field(default_factory=WinderParams)
    material: TetherMaterial = field(default_factory=TetherMaterial)
    lbar: LbarPolicy = field(default_factory=LbarPolicy)
    limits: ControlLimits = field(default_factory=ControlLimits)
    printed_laws: bool = False
    winder_free: bool = False
    anchor: Vec3 = (0.0, 0.0, 0.0)

    def __post_init__(self):
        if isinstance(self.integrator, str):
            self.integrator = Integrator(self.integrator)
        if not (math.isfinite(self.dt) and self.dt > 0):
            raise ParameterError(f"SimConfig dt > 0 violated (got {self.dt})")
        if not (math.isfinite(self.duration) and self.duration >= 0):
            raise ParameterError(f"SimConfig duration >= 0 violated (got {self.duration})")
        if tuple(self.lbar.anchor) != tuple(self.anchor):
            self.lbar = replace(self.lbar, anchor=tuple(self.anchor))

    @property
    def steps(self) -> int:
        """Number of integration steps; the log holds steps + 1 rows"""
        return int(math.floor(self.duration / self.dt + 1e-9))

    def initial_state(self) -> FullState:
        if self.initial is not None:
            return self.initial
        return default_initial_state(policy=self.lbar, material=self.material, winder=self.winder)


# ============================================================
# LOG
# ============================================================

@dataclass(frozen=True)
class SimEvent:
    """Notable occurrence during a run (spool stop, fit failure, waypoint advance, abort)"""
    t: float
    kind: str
    detail: str


@dataclass(frozen=True)
class SimRecord:
    """One logged tick"""
    t: float
    state: FullState
    ref: ReferenceSignal
    errors: ErrorVector
    inputs: ControlInputs
    tension: TensionVector
    geometry: Optional[CatenaryGeometry]
    L: float
    L_bar: float
    lyapunov: LyapunovSample

    def row(self) -> List[float]:
        """Values in COLUMNS order"""
        ref, e, ly = self.ref, self.errors, self.lyapunov
        return ([self.t] + self.state.as_array().tolist()
                + list(ref.position) + list(ref.attitude)
                + [e.e_x, e.e_y, e.e_z, e.e_phi, e.e_theta, e.e_psi, e.e_L]
                + list(self.inputs.as_tuple())
                + [self.L, self.L_bar]
                + [ly.V_c1, ly.V_c2, ly.V_c12, ly.dV_c1, ly.dV_c2, ly.dV_c12])


@dataclass
class SimLog:
    """Time-indexed telemetry of a run"""
    records: List[SimRecord] = field(default_factory=list)
    events: List[SimEvent] = field(default_factory=list)
    anchor: Vec3 = (0.0, 0.0, 0.0)

    def __len__(self) -> int:
        return len(self.records)

    def event(self, t: float, kind: str, detail: str):
        self.events.append(SimEvent(t=t, kind=kind, detail=detail))

    def table(self) -> Dict[str, np.ndarray]:
        """Column arrays keyed by COLUMNS names"""
        if not self.records:
            return {name: np.empty(0) for name in COLUMNS}
        data = np.array([record.row() for record in self.records], dtype=float)
        return {name: data[:, i] for i, name in enumerate(COLUMNS)}

    def events_of(self, kind: str) -> List[SimEvent]:
        return [e for e in self.events if e.kind == kind]


# ============================================================
# INTEGRATION
# ============================================================

Derivative = Callable[[np.ndarray], np.ndarray]


def _checked(derivative: Derivative, x: np.ndarray) -> np.ndarray:
    dx = np.asarray(derivative(x), dtype=float)
    if not np.all(np.isfinite(dx)):
        raise NumericalBlowupError("non-finite state derivative")
    return dx


def integrate_step(
    derivative: Derivative,
    state: Union[FullState, np.ndarray],
    dt: float,
    integrator: Integrator = Integrator.RK4
) -> Union[FullState, np.ndarray]:
    """
    Advance the state by one fixed step

    Args:
        derivative: Maps a state vector to its time derivative; inputs are
            held constant inside it
        state: FullState or plain state vector
        dt: Step, s
        integrator: RK4 (classical fourth order) or EULER

    Returns:
        Advanced state of the same type as the input

    Raises:
        NumericalBlowupError: a stage derivative is not finite
    """
    if not dt > 0:
        raise ParameterError(f"integration step dt > 0 violated (got {dt})")
    as_full = isinstance(state, FullState)
    x = state.as_array() if as_full else np.asarray(state, dtype=float)

    if integrator is Integrator.EULER:
        x_next = x + dt * _checked(derivative, x)
    else:
        k1 = _checked(derivative, x)
        k2 = _checked(derivative, x + 0.5 * dt * k1)
        k3 = _checked(derivative, x + 0.5 * dt * k2)
        k4 = _checked(derivative, x + dt * k3)
        x_next = x + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)

    return FullState.from_array(x_next) if as_full else x_next


# ============================================================
# CLOSED LOOP
# ============================================================

@dataclass
class _Tick:
    record: SimRecord
    inputs: ControlInputs
    tension: TensionVector


class ClosedLoopSimulator:
    """
    Runs one configuration from its initial state to the end of its duration

    Usage:
        simulator = ClosedLoopSimulator(SimConfig(duration=5.0))
        log = simulator.run()
    """

    def __init__(self, config: SimConfig):
        self.config = config
        self.log = SimLog(anchor=tuple(config.anchor))
        self.tracker: Optional[WaypointTracker] = None
        if config.trajectory.kind is TrajectoryKind.WAYPOINTS:
            self.tracker = WaypointTracker(config.trajectory.waypoints, config.trajectory.tolerance)
        self._last_tension = TensionVector.zero()
        self._last_geometry: Optional[CatenaryGeometry] = None
        self._fit_ok: Optional[bool] = None

    def run(self) -> SimLog:
        """
        Execute the run

        Raises:
            TuavError: any failure, with the partial log on its `log` attribute
        """
        cfg = self.config
        try:
            validate_reach(cfg.trajectory, cfg.lbar, cfg.material)
            state = cfg.initial_state()
            logger.info("closed-loop run: %d steps of %g s (%s)",
                        cfg.steps, cfg.dt, cfg.trajectory.kind.value)

            pending_rates = (0.0, 0.0, 0.0)
            for k in range(cfg.steps + 1):
                t = k * cfg.dt
                tick = self._control_tick(t, state, pending_rates)
                self.log.records.append(tick.record)
                if k == cfg.steps:
                    break
                state = self._advance(t, state, tick)
                pending_rates = self._held_reference_rates(state, tick.record)
        except TuavError as e:
            t_fail = self.log.records[-1].t if self.log.records else 0.0
            self.log.event(t_fail, "abort", str(e))
            logger.warning("run aborted at t=%.4f s: %s", t_fail, e)
            e.log = self.log
            raise

        logger.info("closed-loop run finished: %d rows, %d events",
                    len(self.log), len(self.log.events))
        return self.log

    # ------------------------------------------------------------

    def _tension(self, t: float, state: FullState) -> Tuple[TensionVector, Optional[CatenaryGeometry]]:
        cfg = self.config
        position = state.uav.position
        L = state.winder.released_length(cfg.winder.r_w)
        try:
            geometry = fit_catenary(cfg.anchor, position, L, max_length=cfg.material.L_T,
                                    guess=self._last_geometry)
            altitude = max(position[2] - cfg.anchor[2], 0.0)
            tension = tension_from_geometry(geometry, cfg.material, altitude)
        except (GeometryError, ConvergenceError) as e:
            if self._fit_ok is not False:
                self.log.event(t, "fit_failed", str(e))
                logger.warning("catenary fit failed at t=%.4f s, holding tension: %s", t, e)
            self._fit_ok = False
            return self._last_tension, None

        if self._fit_ok is False:
            self.log.event(t, "fit_recovered", f"L={L:.6g}")
        self._fit_ok = True
        self._last_tension = tension
        self._last_geometry = geometry
        return tension, geometry

    def _pulling_force_norm(self, state: FullState) -> float:
        winder = self.config.winder
        if winder.inelastic:
            return 0.0
        position = state.uav.position
        e_t = tether_elongation(position, self.config.anchor, winder.r_w, state.winder.theta)
        return float(np.linalg.norm(pulling_force(winder, e_t, position, self.config.anchor)))

    def _control_tick(self, t: float, state: FullState, rates: Tuple[float, float, float]) -> _Tick:
        cfg = self.config
        gains, printed = cfg.gains, cfg.printed_laws

        if self.tracker is not None and self.tracker.update(state.uav.position):
            self.log.event(t, "waypoint", f"target {self.tracker.index}: {self.tracker.target}")

        ref = generate_reference(cfg.trajectory, t, cfg.lbar, cfg.material, self.tracker)
        errors = error_junction(state, ref, gains, cfg.winder)
        tension, geometry = self._tension(t, state)

        U_f = altitude_control(state.uav, errors, gains, tension.T_Z, cfg.uav, ref, printed)
        phi_ref, theta_ref = position_control(state.uav, ref, gains, U_f, cfg.uav, tension.components)
        ref = ref.with_attitude(phi_ref, theta_ref)
        errors = error_junction(state, ref, gains, cfg.winder)

        if cfg.winder_free:
            U_win = 0.0
        else:
            U_win = winder_control(state.winder, errors.e_L, gains, cfg.winder, ref,
                                   self._pulling_force_norm(state), printed)
        inputs = cfg.limits.apply(ControlInputs(
            U_f=U_f,
            U_phi=roll_control(state.uav, errors, gains, cfg.uav, ref, printed),
            U_theta=pitch_control(state.uav, errors, gains, cfg.uav, ref, printed),
            U_psi=yaw_control(state.uav, errors, gains, cfg.uav, ref, printed),
            U_win=U_win,
        ))

        lyapunov = lyapunov_sample(state, errors, gains).with_rates(*rates)
        record = SimRecord(
            t=t,
            state=state,
            ref=ref,
            errors=errors,
            inputs=inputs,
            tension=tension,
            geometry=geometry,
            L=state.winder.released_length(cfg.winder.r_w),
            L_bar=ref.L_bar,
            lyapunov=lyapunov,
        )
        return _Tick(record=record, inputs=inputs, tension=tension)

    def _advance(self, t: float, state: FullState, tick: _Tick) -> FullState:
        cfg = self.config

        def derivative(x: np.ndarray) -> np.ndarray:
            return state_derivative(x, tick.inputs, tick.tension, cfg.uav, cfg.winder, cfg.anchor)

        x_next = integrate_step(derivative, state.as_array(), cfg.dt, cfg.integrator)
        if not np.all(np.isfinite(x_next)):
            raise NumericalBlowupError(f"non-finite state after step at t={t:.4f} s")
        state = FullState.from_array(x_next)

        winder_state, clamped = clamp_to_spool(cfg.winder, state.winder)
        if clamped:
            self.log.event(t + cfg.dt, "spool_stop", f"theta clamped to {winder_state.theta:.6g} rad")
            logger.warning("spool stop at t=%.4f s", t + cfg.dt)
            state = FullState(uav=state.uav, winder=winder_state)
        return state

    def _held_reference_rates(self, next_state: FullState, record: SimRecord) -> Tuple[float, float, float]:
        """Lyapunov rates over the last step with the reference advanced by its own feedforward"""
        cfg = self.config
        held = record.ref.advanced(cfg.dt)
        errors = error_junction(next_state, held, cfg.gains, cfg.winder)
        after = lyapunov_sample(next_state, errors, cfg.gains)
        before = record.lyapunov
        return (
            (after.V_c1 - before.V_c1) / cfg.dt,
            (after.V_c2 - before.V_c2) / cfg.dt,
            (after.V_c12 - before.V_c12) / cfg.dt,
        )


def run_closed_loop(config: SimConfig) -> SimLog:
    """
    Run a configuration to completion

    Example:
        log = run_closed_loop(SimConfig(duration=20.0))
        print(len(log))   # 20001
    """
    return ClosedLoopSimulator(config).run()


def probe_lyapunov_rates(
    config: SimConfig,
    record: SimRecord,
    h: float = 1e-6
) -> Tuple[Tuple[float, float, float], Tuple[float, float, float]]:
    """
    Measured and guaranteed Lyapunov rates at a logged tick

    Takes one RK4 step of length h from the logged state with the logged
    inputs and tension, and differences the composite Lyapunov values
    against the reference advanced by its feedforward.

    Returns:
        (measured, theoretical) rates for (V_c1, V_c2, V_c12)
    """
    def derivative(x: np.ndarray) -> np.ndarray:
        return state_derivative(x, record.inputs, record.tension,
                                config.uav, config.winder, config.anchor)

    next_state = FullState.from_array(integrate_step(derivative, record.state.as_array(), h))
    errors = error_junction(next_state, record.ref.advanced(h), config.gains, config.winder)
    after = lyapunov_sample(next_state, errors, config.gains)
    before = record.lyapunov
    measured = (
        (after.V_c1 - before.V_c1) / h,
        (after.V_c2 - before.V_c2) / h,
        (after.V_c12 - before.V_c12) / h,
    )
    return measured, lyapunov_rates(record.errors, config.gains)
