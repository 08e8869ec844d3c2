"""
Catenary Tether Model
Curve evaluation, two-point fitting and tension resolution for a slack tether

The tether hangs from the ground anchor P0 to the UAV P1 as
z(x) = a cosh(x / a) in the vertical plane through both points.
Horizontal coordinates below are measured from the anchor along that plane.
"""

import math
from dataclasses import dataclass
from typing import Optional, Sequence, Tuple, List

import numpy as np
from scipy.optimize import root_scalar

from tuav_errors import (
    ConvergenceError,
    DegenerateGeometryError,
    DomainError,
    InfeasibleSlackError,
    OverLengthError,
    ParameterError,
)


# Relative tolerance on the fitted arc length
FIT_RTOL = 1e-10
FIT_MAX_ITER = 200
# sinh overflows past ~710
_MAX_HALF_SPAN_RATIO = 700.0
# Largest float strictly below pi/2
_HALF_PI_INSIDE = math.nextafter(0.5 * math.pi, 0.0)
# Relative half-width of the bracket around a warm-start guess
_WARM_BRACKET = 1e-3


@dataclass(frozen=True)
class TetherMaterial:
    """Physical properties of the tether"""
    rho: float = 0.034      # linear density, kg/m
    A: float = 1.1e-4       # cross-sectional area, m^2
    g: float = 9.81         # gravitational acceleration, m/s^2
    L_T: float = 30.0       # maximum tether length, m

    def __post_init__(self):
        for name in ("rho", "A", "g", "L_T"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value > 0):
                raise ParameterError(f"TetherMaterial.{name} > 0 violated (got {value})")


@dataclass(frozen=True)
class CatenaryGeometry:
    """
    Fitted tether curve

    a is the catenary parameter, x0 the horizontal position of the vertex
    relative to the anchor, d the horizontal span anchor-to-UAV and dz the
    vertical offset of the UAV above the anchor.
    """
    a: float
    x0: float
    d: float
    dz: float

    def __post_init__(self):
        if not self.a > 0:
            raise ParameterError(f"CatenaryGeometry.a > 0 violated (got {self.a})")
        if not self.d >= 0:
            raise ParameterError(f"CatenaryGeometry.d >= 0 violated (got {self.d})")

    def height(self, s: float) -> float:
        """Height above the anchor at horizontal distance s along the span"""
        return self.a * (math.cosh((s - self.x0) / self.a) - math.cosh(self.x0 / self.a))

    @property
    def length(self) -> float:
        """Arc length from anchor to UAV"""
        return arc_length(self.d, self.dz, self.a)


@dataclass(frozen=True)
class TensionVector:
    """Tether pull at the UAV attachment point"""
    T1: float
    alpha: float
    beta: float
    components: Tuple[float, float, float]

    @property
    def T_X(self) -> float:
        return self.components[0]

    @property
    def T_Y(self) -> float:
        return self.components[1]

    @property
    def T_Z(self) -> float:
        return self.components[2]

    @classmethod
    def zero(cls) -> "TensionVector":
        return cls(0.0, 0.0, 0.0, (0.0, 0.0, 0.0))


@dataclass(frozen=True)
class TensionBaseline:
    """Initial horizontal tension of the tether"""
    T0: float

    def __post_init__(self):
        if not self.T0 > 0:
            raise ParameterError(f"TensionBaseline.T0 > 0 violated (got {self.T0})")


def _require_positive_a(a: float):
    if not a > 0:
        raise DomainError(f"catenary parameter a must be > 0 (got {a})")


def _end_angle(u: float) -> float:
    # atan(sinh(u)) without overflow, kept off +-pi/2
    angle = 2.0 * math.atan(math.tanh(0.5 * u))
    return min(max(angle, -_HALF_PI_INSIDE), _HALF_PI_INSIDE)


# ============================================================
# CURVE EVALUATION
# ============================================================

def catenary_parameter(T0: float, material: TetherMaterial) -> float:
    """
    Catenary parameter from the horizontal tension

    Args:
        T0: Horizontal tension, N
        material: Tether material

    Returns:
        a = T0 / (rho g), m

    Example:
        a = catenary_parameter(1.0, TetherMaterial())   # ~2.998 m
    """
    if not T0 > 0:
        raise DomainError(f"T0 must be > 0 (got {T0})")
    return T0 / (material.rho * material.g)


def horizontal_tension(a: float, material: TetherMaterial) -> float:
    """Horizontal tension T0 = a rho g that produces catenary parameter a"""
    _require_positive_a(a)
    return a * material.rho * material.g


def catenary_height(x: float, a: float) -> float:
    """Height z(x) = a cosh(x / a) of the catenary in vertex coordinates"""
    _require_positive_a(a)
    return a * math.cosh(x / a)


def tension_top(T0: float, material: TetherMaterial, z: float) -> float:
    """
    Tension at the top of the tether

    Args:
        T0: Horizontal tension, N
        material: Tether material (rho, A, g)
        z: Height of the attachment point above the anchor, m

    Returns:
        T1 = T0 + rho A z g, N
    """
    if z < 0:
        raise DomainError(f"height z must be >= 0 (got {z})")
    return T0 + material.rho * material.A * z * material.g


def arc_length(x: float, z_offset: float, a: float) -> float:
    """
    Two-point catenary length over a horizontal span x and vertical offset z_offset

    L = sqrt((2a sinh(x / 2a))^2 + z_offset^2)
    """
    _require_positive_a(a)
    chord = 2.0 * a * math.sinh(x / (2.0 * a))
    return math.hypot(chord, z_offset)


def tension_angles(x: float, x0: float, a: float) -> Tuple[float, float]:
    """
    Inclination angles of the tension vector

    Args:
        x: Horizontal position of the UAV along the span, m
        x0: Horizontal position of the vertex, m
        a: Catenary parameter, m

    Returns:
        (alpha, beta) with beta = atan(sinh((x - x0)/a)) and alpha = atan(sinh(-x0/a))
    """
    _require_positive_a(a)
    return _end_angle(-x0 / a), _end_angle((x - x0) / a)


def resolve_tension(T1: float, alpha: float, beta: float) -> TensionVector:
    """
    Resolve the tension magnitude into x, y, z components

    T_X = T1 cos(alpha) sin(beta), T_Y = T1 cos(alpha) cos(beta), T_Z = T1 sin(alpha)
    """
    if T1 < 0:
        raise DomainError(f"tension T1 must be >= 0 (got {T1})")
    ca = math.cos(alpha)
    components = (T1 * ca * math.sin(beta), T1 * ca * math.cos(beta), T1 * math.sin(alpha))
    return TensionVector(T1=T1, alpha=alpha, beta=beta, components=components)


# ============================================================
# TWO-POINT FIT
# ============================================================

def _span(p0: Sequence[float], p1: Sequence[float]) -> Tuple[float, float, np.ndarray]:
    delta = np.asarray(p1, dtype=float) - np.asarray(p0, dtype=float)
    d = math.hypot(delta[0], delta[1])
    return d, float(delta[2]), delta


def _sinhc_residual(b: float, ratio: float) -> float:
    return math.sinh(b) / b - ratio


def _sinhc_slope(b: float, ratio: float) -> float:
    if b < 1e-3:
        return b / 3.0 + b ** 3 / 30.0
    return (b * math.cosh(b) - math.sinh(b)) / (b * b)


def _newton_root(b0: float, ratio: float) -> Optional[float]:
    try:
        result = root_scalar(
            _sinhc_residual,
            args=(ratio,),
            x0=b0,
            fprime=_sinhc_slope,
            method="newton",
            xtol=b0 * 1e-15,
            maxiter=20,
        )
    except (RuntimeError, ZeroDivisionError, OverflowError):
        return None
    # sinh(b)/b is even; only the positive root places the vertex
    if result.converged and 0.0 < result.root <= _MAX_HALF_SPAN_RATIO:
        return result.root
    return None


def _bracket(d: float, distance: float, ratio: float, b_guess: Optional[float]) -> Tuple[float, float]:
    if b_guess is not None:
        lo, hi = b_guess * (1.0 - _WARM_BRACKET), b_guess * (1.0 + _WARM_BRACKET)
        if hi <= _MAX_HALF_SPAN_RATIO and _sinhc_residual(lo, ratio) < 0.0 < _sinhc_residual(hi, ratio):
            return lo, hi

    # b = d / (2a); a_max = 1e6 * distance bounds b from below
    b_lo = d / (2.0e6 * distance)
    if _sinhc_residual(b_lo, ratio) >= 0.0:
        raise ConvergenceError("slack below solver resolution (a exceeds 1e6 x distance)")
    b_hi = 1.0
    while _sinhc_residual(b_hi, ratio) < 0.0:
        b_hi *= 2.0
        if b_hi > _MAX_HALF_SPAN_RATIO:
            raise ConvergenceError("no bracket for catenary parameter (slack too large for span)")
    return b_lo, b_hi


def _bracketed_root(lo: float, hi: float, ratio: float) -> float:
    bracketed = root_scalar(
        _sinhc_residual,
        args=(ratio,),
        bracket=[lo, hi],
        method="brentq",
        xtol=lo * 1e-15,
        maxiter=FIT_MAX_ITER,
    )
    if not bracketed.converged:
        raise ConvergenceError(f"bracketing solver failed: {bracketed.flag}")
    return bracketed.root


def _length_misses(d: float, dz: float, b: float, L: float) -> bool:
    return abs(arc_length(d, dz, d / (2.0 * b)) - L) > FIT_RTOL * L


def fit_catenary(
    p0: Sequence[float],
    p1: Sequence[float],
    L: float,
    max_length: Optional[float] = None,
    guess: Optional[CatenaryGeometry] = None
) -> CatenaryGeometry:
    """
    Fit the catenary of length L hanging between anchor p0 and UAV p1

    Solves sinh(b)/b = sqrt(L^2 - dz^2)/d for b = d/(2a) and places the
    vertex with x0 = d/2 - a atanh(dz/L). Brent solves inside a narrow
    bracket around the guess (the previous tick's fit) when that bracket
    holds the root, otherwise inside a bracket grown from b = 1. Newton
    only polishes a root whose arc length misses FIT_RTOL.

    Args:
        p0: Ground anchor position, m
        p1: UAV position, m
        L: Tether length, m
        max_length: Spool capacity L_T; no check when None
        guess: Nearby fitted geometry used as a warm start

    Returns:
        CatenaryGeometry through both endpoints with arc length L

    Raises:
        OverLengthError: L > max_length
        DegenerateGeometryError: zero horizontal span
        InfeasibleSlackError: L does not exceed the endpoint distance
        ConvergenceError: solver failed within FIT_MAX_ITER iterations

    Example:
        geom = fit_catenary((0, 0, 0), (1.0, 1.0, 5.0), 5.46)
    """
    if not math.isfinite(L):
        raise DomainError(f"tether length must be finite (got {L})")
    if max_length is not None and L > max_length:
        raise OverLengthError(f"tether length {L:.6g} m exceeds L_T = {max_length:.6g} m")

    d, dz, _ = _span(p0, p1)
    if d == 0.0:
        raise DegenerateGeometryError("zero horizontal span; tether hangs vertically")

    distance = math.hypot(d, dz)
    if L <= distance:
        raise InfeasibleSlackError(
            f"tether length {L:.9g} m does not exceed endpoint distance {distance:.9g} m"
        )

    ratio = math.sqrt(L * L - dz * dz) / d

    b_guess = guess.d / (2.0 * guess.a) if guess is not None and guess.d > 0.0 else None
    b = _bracketed_root(*_bracket(d, distance, ratio, b_guess), ratio)
    if _length_misses(d, dz, b, L):
        polished = _newton_root(b, ratio)
        if polished is not None:
            b = polished

    a = d / (2.0 * b)
    fitted = arc_length(d, dz, a)
    if abs(fitted - L) > FIT_RTOL * L:
        raise ConvergenceError(f"fitted length {fitted:.12g} m misses target {L:.12g} m")

    x0 = 0.5 * d - a * math.atanh(dz / L)
    return CatenaryGeometry(a=a, x0=x0, d=d, dz=dz)


def tension_from_geometry(
    geometry: CatenaryGeometry,
    material: TetherMaterial,
    altitude: float
) -> TensionVector:
    """
    Tension vector at the UAV for a fitted tether

    Recovers T0 from the fitted parameter, raises it to the top of the
    tether and resolves it with the curve's end angles.
    """
    T0 = horizontal_tension(geometry.a, material)
    T1 = tension_top(T0, material, altitude)
    alpha, beta = tension_angles(geometry.d, geometry.x0, geometry.a)
    return resolve_tension(T1, alpha, beta)


def sample_polyline(
    geometry: Optional[CatenaryGeometry],
    p0: Sequence[float],
    p1: Sequence[float],
    n: int
) -> List[List[float]]:
    """
    N points along the tether from anchor to UAV

    Points are spaced evenly in horizontal distance. A missing geometry
    gives the straight segment. The end points are p0 and p1 exactly.
    """
    if n < 2:
        raise DomainError(f"polyline needs at least 2 samples (got {n})")
    start = np.asarray(p0, dtype=float)
    end = np.asarray(p1, dtype=float)
    points = []
    for i in range(n):
        s = i / (n - 1)
        if geometry is None:
            point = start + s * (end - start)
        else:
            horizontal = start[:2] + s * (end[:2] - start[:2])
            z = start[2] + geometry.height(s * geometry.d)
            point = np.array([horizontal[0], horizontal[1], z])
        points.append([float(c) for c in point])
    points[0] = [float(c) for c in start]
    points[-1] = [float(c) for c in end]
    return points
