"""Collision-cone barrier functions for spherical and cylindrical obstacles.

The barrier for a sphere of inflated radius r centered at c(t) is

    h(x,t) = <p_rel, v_rel> + ||v_rel|| sqrt(||p_rel||^2 - r^2)

with p_rel = c(t) - (position + R e3 l) the vector from the quadrotor's body
center to the obstacle center and v_rel its time derivative. h >= 0 exactly
when v_rel points outside the cone of half-angle phi subtended by the
obstacle (cos phi = sqrt(||p_rel||^2 - r^2)/||p_rel||), so keeping h >= 0
keeps the relative velocity off every collision course.

Time differentiation along the closed loop gives the affine-in-thrust form

    dh/dt = drift_term + input_row . f,
    w = p_rel + v_rel sqrt(||p_rel||^2 - r^2) / ||v_rel||,
    drift_term = ||v_rel||^2 + ||v_rel|| <p_rel, v_rel> / sqrt(...) + <w, a_d>,
    input_row[k] = <w, -R m_k>,

where a_d collects gravity and the rate-dependent acceleration of the offset
body center, and m_k maps rotor k's thrust to body-frame acceleration of that
point (thrust channel e3/m plus the lever term from the induced angular
acceleration). Constant-velocity obstacles enter only through p_rel, v_rel.

Cylinders use the same cone formula on p_rel, v_rel projected onto the plane
perpendicular to the cylinder axis; the projector is constant, and the
projected vectors live in its range, so the input row contracts the projected
combination with the unprojected thrust-to-acceleration map.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dynamics import QuadrotorParams, QuadrotorState, rotation_matrix
from .errors import DegenerateGradientError, InvalidObstacleError
from .qp import AffineSafetyConstraint, ClassKappa

EPS_V = 1e-6  # ||v_rel|| regularization floor (m/s)
EPS_SQRT = 1e-9  # guard for the ||p_rel|| division in cos(phi)
# The drift term divides by sqrt(||p_rel||^2 - r^2), which vanishes at the
# inflated surface. A boundary-riding trajectory sits at s ~ sqrt(2 r d) for
# clearance d (~1e-2 for millimeter grazing), so the floor must stay below
# that to keep the riding equilibrium exact; it only engages in the last
# ~2 microns before contact, where it bounds the constraint offset instead
# of letting it diverge.
S_FLOOR = 1e-3
GRADIENT_MIN = 1e-10

_E3 = np.array([0.0, 0.0, 1.0])


@dataclass(frozen=True)
class Obstacle:
    """Spherical or cylindrical obstacle translating at constant velocity.

    Cylinders are modeled as infinite along their axis: height is kept for
    scenario bookkeeping but never enters the constraint.
    """

    kind: str  # "sphere" | "cylinder"
    center: np.ndarray  # position of the center at t = 0 (m)
    radius_raw: float  # geometric radius before inflation (m)
    velocity: np.ndarray = (0.0, 0.0, 0.0)  # constant (m/s)
    axis: np.ndarray | None = None  # cylinder axis, unit vector
    height: float | None = None  # cylinder height (m), bookkeeping only
    label: str = ""

    def __post_init__(self):
        if self.kind not in ("sphere", "cylinder"):
            raise InvalidObstacleError(f"unknown obstacle kind {self.kind!r}")
        center = np.asarray(self.center, dtype=float).reshape(3).copy()
        vel = np.asarray(self.velocity, dtype=float).reshape(3).copy()
        center.setflags(write=False)
        vel.setflags(write=False)
        object.__setattr__(self, "center", center)
        object.__setattr__(self, "velocity", vel)
        if not (np.all(np.isfinite(center)) and np.all(np.isfinite(vel))):
            raise InvalidObstacleError("obstacle center/velocity must be finite")
        if not (np.isfinite(self.radius_raw) and self.radius_raw > 0.0):
            raise InvalidObstacleError("radius_raw must be > 0")
        if self.kind == "cylinder":
            if self.axis is None:
                raise InvalidObstacleError("cylinder needs an axis")
            axis = np.asarray(self.axis, dtype=float).reshape(3).copy()
            axis.setflags(write=False)
            object.__setattr__(self, "axis", axis)
            if abs(float(np.linalg.norm(axis)) - 1.0) > 1e-12:
                raise InvalidObstacleError("cylinder axis must be unit length")
            # axial velocity is allowed: the column is infinite, so sliding
            # along its own axis never moves the constraint surface
            if self.height is not None and self.height <= 0.0:
                raise InvalidObstacleError("cylinder height must be > 0")
        elif self.axis is not None or self.height is not None:
            raise InvalidObstacleError("sphere takes no axis/height")

    def center_at(self, t: float) -> np.ndarray:
        return self.center + self.velocity * t


@dataclass(frozen=True)
class InflatedRadius:
    """Effective obstacle radius r = radius_raw + w/2.

    w is the quadrotor's max width, absorbed into the obstacle so the vehicle
    can be treated as a point. For a circular cylinder the second-largest
    half-extent is the cross-sectional radius regardless of height, so both
    shapes inflate their radius_raw.
    """

    r: float

    def __post_init__(self):
        if not (np.isfinite(self.r) and self.r > 0.0):
            raise InvalidObstacleError("inflated radius must be > 0")


def inflated_radius(obstacle: Obstacle, body_width: float) -> InflatedRadius:
    return InflatedRadius(obstacle.radius_raw + 0.5 * body_width)


@dataclass(frozen=True)
class RelativeState:
    """Obstacle-center position/velocity relative to the quadrotor body center."""

    p_rel: np.ndarray
    v_rel: np.ndarray

    def __post_init__(self):
        p = np.asarray(self.p_rel, dtype=float).reshape(3).copy()
        v = np.asarray(self.v_rel, dtype=float).reshape(3).copy()
        p.setflags(write=False)
        v.setflags(write=False)
        object.__setattr__(self, "p_rel", p)
        object.__setattr__(self, "v_rel", v)


@dataclass(frozen=True)
class BarrierEvaluation:
    """Barrier value plus the pieces of its affine-in-input derivative."""

    h: float
    drift_term: float  # dh/dt contribution independent of the rotor thrusts
    input_row: np.ndarray  # dh/dt = drift_term + input_row . f
    cone_half_angle: float  # phi (rad); pi/2 when inside the inflated radius


def relative_state_sphere(
    state: QuadrotorState, obstacle: Obstacle, params: QuadrotorParams, t: float
) -> RelativeState:
    """Relative position/velocity of the obstacle center w.r.t. the body center.

    The body center sits at position + R e3 l, so its velocity picks up the
    attitude rate through d/dt (R e3) = R (omega x e3).

    Args:
        state: quadrotor state.
        obstacle: sphere or cylinder (the center/velocity are shape-agnostic).
        params: vehicle parameters (supplies the offset l).
        t: simulation time (moves the obstacle center).
    """
    R = rotation_matrix(state.attitude)
    l = params.center_offset
    body_center = state.position + R @ _E3 * l
    body_center_vel = state.velocity + R @ np.cross(state.body_rates, _E3) * l
    return RelativeState(
        p_rel=obstacle.center_at(t) - body_center,
        v_rel=obstacle.velocity - body_center_vel,
    )


def h_cone(p_rel: np.ndarray, v_rel: np.ndarray, r: float) -> float:
    """Collision-cone barrier <p_rel, v_rel> + ||v_rel|| sqrt(||p_rel||^2 - r^2).

    Inside the inflated radius the sqrt argument is clamped to zero, which
    leaves the plain approach-speed term; callers flag the violation.
    """
    p_rel = np.asarray(p_rel, dtype=float)
    v_rel = np.asarray(v_rel, dtype=float)
    s = np.sqrt(max(float(p_rel @ p_rel) - r * r, 0.0))
    return float(p_rel @ v_rel) + float(np.linalg.norm(v_rel)) * s


def thrust_acceleration_map(params: QuadrotorParams) -> np.ndarray:
    """Body-frame acceleration of the offset body center per unit rotor thrust.

    Column k is m_k = e3/m + l (gk x e3), gk being rotor k's angular
    acceleration column; the lever term comes from differentiating R e3 l
    twice and keeping the f-dependent part of omega_dot.
    """
    m, L, l = params.mass, params.arm_span, params.center_offset
    ixx, iyy, _ = params.inertia_diag
    a, b = l * L / ixx, l * L / iyy
    return np.array(
        [
            [0.0, b, 0.0, -b],
            [-a, 0.0, a, 0.0],
            [1.0 / m, 1.0 / m, 1.0 / m, 1.0 / m],
        ]
    )


def drift_acceleration(state: QuadrotorState, params: QuadrotorParams) -> np.ndarray:
    """Thrust-independent part of -d(v_rel)/dt, i.e. of the body-center accel.

    a_d = (0,0,g) - l R [omega x (omega x e3) + (I^-1 (-omega x I omega)) x e3]

    v_rel_dot = a_d - R M f with M from thrust_acceleration_map (constant
    obstacle velocity contributes nothing).
    """
    R = rotation_matrix(state.attitude)
    omega = state.body_rates
    inertia = np.asarray(params.inertia_diag)
    omega_dot_drift = -np.cross(omega, inertia * omega) / inertia
    spin = np.cross(omega, np.cross(omega, _E3)) + np.cross(omega_dot_drift, _E3)
    return (
        np.array([0.0, 0.0, params.gravity]) - params.center_offset * (R @ spin)
    )


def _cone_pieces(
    p: np.ndarray, v: np.ndarray, r: float
) -> tuple[float, float, float, np.ndarray, float]:
    """Shared h/w computation: returns (h, norm_v, radial_rate, w, phi)."""
    p_norm = float(np.linalg.norm(p))
    norm_v = float(np.linalg.norm(v))
    s = np.sqrt(max(p_norm * p_norm - r * r, 0.0))
    h = float(p @ v) + norm_v * s
    denom_v = max(norm_v, EPS_V)
    w = p + v * (s / denom_v)
    radial_rate = norm_v * float(p @ v) / max(s, S_FLOOR)
    phi = float(np.arccos(np.clip(s / max(p_norm, EPS_SQRT), 0.0, 1.0)))
    return h, norm_v, radial_rate, w, phi


def barrier_3d(
    state: QuadrotorState,
    obstacle: Obstacle,
    params: QuadrotorParams,
    kappa: ClassKappa,
    t: float,
) -> tuple[BarrierEvaluation, AffineSafetyConstraint]:
    """Spherical-obstacle barrier row for the safety QP.

    Args:
        state: quadrotor state.
        obstacle: sphere (cylinders go through barrier_projection).
        params: vehicle parameters.
        kappa: class-K function; the row offset is drift_term + kappa(h).
        t: simulation time.

    Returns:
        (BarrierEvaluation, AffineSafetyConstraint) with the constraint
        encoding input_row . f + drift_term + kappa(h) >= 0.

    Raises:
        InvalidObstacleError: called with a cylinder.
        DegenerateGradientError: ||input_row|| <= 1e-10.
    """
    if obstacle.kind != "sphere":
        raise InvalidObstacleError("barrier_3d expects a sphere")
    r = inflated_radius(obstacle, params.body_width).r
    rel = relative_state_sphere(state, obstacle, params, t)
    h, norm_v, radial_rate, w, phi = _cone_pieces(rel.p_rel, rel.v_rel, r)
    a_d = drift_acceleration(state, params)
    R = rotation_matrix(state.attitude)
    input_row = -thrust_acceleration_map(params).T @ (R.T @ w)
    drift = norm_v * norm_v + radial_rate + float(w @ a_d)
    if float(np.linalg.norm(input_row)) <= GRADIENT_MIN:
        raise DegenerateGradientError(
            f"obstacle {obstacle.label!r}: barrier gradient vanished"
        )
    evaluation = BarrierEvaluation(h, drift, input_row, phi)
    constraint = AffineSafetyConstraint(
        input_row, drift + kappa(h), label=obstacle.label or "sphere"
    )
    return evaluation, constraint


def projection_operator(axis: np.ndarray) -> np.ndarray:
    """P = I - n n^T: projects onto the plane perpendicular to the unit axis n."""
    n = np.asarray(axis, dtype=float).reshape(3)
    return np.eye(3) - np.outer(n, n)


def barrier_projection(
    state: QuadrotorState,
    obstacle: Obstacle,
    params: QuadrotorParams,
    kappa: ClassKappa,
    t: float,
) -> tuple[BarrierEvaluation, AffineSafetyConstraint]:
    """Cylindrical-obstacle barrier row: the cone in the plane ⊥ to the axis.

    The projector P = I - n n^T is constant, so the projected relative state
    differentiates componentwise and <w_proj, P a> = <w_proj, a> for any w_proj
    in the projection plane. The drift and input contractions therefore use
    the unprojected acceleration maps.

    Raises:
        InvalidObstacleError: called with a sphere.
        DegenerateGradientError: ||input_row|| <= 1e-10.
    """
    if obstacle.kind != "cylinder":
        raise InvalidObstacleError("barrier_projection expects a cylinder")
    r = inflated_radius(obstacle, params.body_width).r
    rel = relative_state_sphere(state, obstacle, params, t)
    P = projection_operator(obstacle.axis)
    p_proj = P @ rel.p_rel
    v_proj = P @ rel.v_rel
    h, norm_v, radial_rate, w, phi = _cone_pieces(p_proj, v_proj, r)
    a_d = drift_acceleration(state, params)
    R = rotation_matrix(state.attitude)
    input_row = -thrust_acceleration_map(params).T @ (R.T @ w)
    drift = norm_v * norm_v + radial_rate + float(w @ a_d)
    if float(np.linalg.norm(input_row)) <= GRADIENT_MIN:
        raise DegenerateGradientError(
            f"obstacle {obstacle.label!r}: barrier gradient vanished"
        )
    evaluation = BarrierEvaluation(h, drift, input_row, phi)
    constraint = AffineSafetyConstraint(
        input_row, drift + kappa(h), label=obstacle.label or "cylinder"
    )
    return evaluation, constraint


def constraint_rows(
    state: QuadrotorState,
    obstacles: list[Obstacle],
    params: QuadrotorParams,
    kappa: ClassKappa,
    t: float,
) -> list[AffineSafetyConstraint]:
    """One QP row per obstacle: spheres via barrier_3d, cylinders via projection."""
    rows = []
    for i, obstacle in enumerate(obstacles):
        build = barrier_3d if obstacle.kind == "sphere" else barrier_projection
        _, constraint = build(state, obstacle, params, kappa, t)
        if not obstacle.label:
            constraint = AffineSafetyConstraint(
                constraint.gradient_row, constraint.offset, f"{obstacle.kind}{i}"
            )
        rows.append(constraint)
    return rows
