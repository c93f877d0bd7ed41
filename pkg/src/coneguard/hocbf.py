"""Higher-order CBF baseline built on the squared-distance barrier.

Starting from b(x,t) = ||p_rel||^2 - r^2, one derivative chain with a
square-root class-K function collapses to the closed form

    h_HO(x,t) = <p_rel, v_rel> + gamma sqrt(||p_rel||^2 - r^2)

with a constant penalty gamma in place of the collision cone's ||v_rel||
factor. Matching terms against the cone barrier gives an effective half
angle phi' with cos(phi') = (gamma/||v_rel||) cos(phi): whenever the closing
speed exceeds gamma the HO cone is wider than the true collision cone, so the
filter brakes earlier and clears obstacles by more than geometry requires.
Setting gamma = ||v_rel|| pointwise recovers the cone barrier identically.

The baseline treats every obstacle as its encompassing sphere (cylinders use
max(radius, height/2)), which is what makes it misjudge elongated shapes.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .cone import (
    EPS_SQRT,
    EPS_V,
    GRADIENT_MIN,
    BarrierEvaluation,
    Obstacle,
    drift_acceleration,
    relative_state_sphere,
    thrust_acceleration_map,
)
from .dynamics import QuadrotorParams, QuadrotorState, rotation_matrix
from .errors import ConeDegenerateError, DegenerateGradientError
from .qp import AffineSafetyConstraint, ClassKappa

_DEFAULT_PARAMS = QuadrotorParams()

# Same surface-singularity guard as the cone drift, but an order of magnitude
# wider: the baseline exists to show failure cases, and when it does cross the
# inflated surface the run has to stay integrable so the penetration depth can
# be reported. The cone filter never crosses, so it keeps the tight floor.
S_FLOOR_HO = 5e-2


@dataclass(frozen=True)
class HocbfConfig:
    """Penalty and derivative-chain gains for the higher-order barrier.

    gamma_penalty is the constant replacing ||v_rel||. The chain form uses
    alpha1(b) = p sqrt(b), whose first condition psi1 = b_dot + p sqrt(b)
    equals 2 h_HO when p = 2 gamma (and the body offset is dropped, as the
    squared-distance b is center-to-center), and a linear alpha2 for the
    second condition.
    """

    gamma_penalty: float = 1.0
    p: float | None = None  # sqrt-chain gain; defaults to 2 * gamma_penalty
    alpha2_gain: float = 1.0

    def __post_init__(self):
        if not (np.isfinite(self.gamma_penalty) and self.gamma_penalty > 0.0):
            raise ValueError("gamma_penalty must be finite and > 0")
        if self.p is None:
            object.__setattr__(self, "p", 2.0 * self.gamma_penalty)
        if not (np.isfinite(self.p) and self.p > 0.0):
            raise ValueError("p must be finite and > 0")
        if not (np.isfinite(self.alpha2_gain) and self.alpha2_gain > 0.0):
            raise ValueError("alpha2_gain must be finite and > 0")


def encompassing_radius(obstacle: Obstacle) -> float:
    """Largest half-extent: the sphere that contains the whole obstacle."""
    if obstacle.kind == "cylinder" and obstacle.height is not None:
        return max(obstacle.radius_raw, 0.5 * obstacle.height)
    return obstacle.radius_raw


def b_distance(state: QuadrotorState, obstacle: Obstacle, t: float) -> float:
    """Squared center-to-center clearance b = ||c - x||^2 - r_enc^2.

    Deliberately uses the vehicle position (no body-center offset) and the
    raw encompassing radius; this is the quantity the derivative chain
    starts from, not the filtered barrier.
    """
    delta = obstacle.center_at(t) - state.position
    r_enc = encompassing_radius(obstacle)
    return float(delta @ delta) - r_enc * r_enc


def _ho_radius(obstacle: Obstacle, body_width: float) -> float:
    return encompassing_radius(obstacle) + 0.5 * body_width


def h_ho(
    state: QuadrotorState,
    obstacle: Obstacle,
    config: HocbfConfig,
    t: float,
    params: QuadrotorParams = _DEFAULT_PARAMS,
) -> float:
    """h_HO = <p_rel, v_rel> + gamma sqrt(||p_rel||^2 - r^2), clamped inside."""
    rel = relative_state_sphere(state, obstacle, params, t)
    r = _ho_radius(obstacle, params.body_width)
    s = np.sqrt(max(float(rel.p_rel @ rel.p_rel) - r * r, 0.0))
    return float(rel.p_rel @ rel.v_rel) + config.gamma_penalty * s


def barrier_ho(
    state: QuadrotorState,
    obstacle: Obstacle,
    params: QuadrotorParams,
    kappa: ClassKappa,
    config: HocbfConfig,
    t: float,
) -> tuple[BarrierEvaluation, AffineSafetyConstraint]:
    """QP row for the higher-order barrier.

    The gradient w.r.t. v_rel is p_rel alone (the sqrt term is velocity
    independent), so both drift and input contractions use p_rel where the
    cone barrier uses p_rel + v_rel sqrt(...)/||v_rel||.

    Raises:
        DegenerateGradientError: ||input_row|| <= 1e-10.
    """
    rel = relative_state_sphere(state, obstacle, params, t)
    r = _ho_radius(obstacle, params.body_width)
    p, v = rel.p_rel, rel.v_rel
    norm_v = float(np.linalg.norm(v))
    s = np.sqrt(max(float(p @ p) - r * r, 0.0))
    gamma = config.gamma_penalty
    h = float(p @ v) + gamma * s

    a_d = drift_acceleration(state, params)
    R = rotation_matrix(state.attitude)
    input_row = -thrust_acceleration_map(params).T @ (R.T @ p)
    drift = norm_v * norm_v + gamma * float(p @ v) / max(s, S_FLOOR_HO) + float(p @ a_d)
    if float(np.linalg.norm(input_row)) <= GRADIENT_MIN:
        raise DegenerateGradientError(
            f"obstacle {obstacle.label!r}: HO barrier gradient vanished"
        )

    p_norm = float(np.linalg.norm(p))
    cos_phi = s / max(p_norm, EPS_SQRT)
    cos_eff = np.clip(gamma * cos_phi / max(norm_v, EPS_V), 0.0, 1.0)
    evaluation = BarrierEvaluation(h, drift, input_row, float(np.arccos(cos_eff)))
    constraint = AffineSafetyConstraint(
        input_row, drift + kappa(h), label=obstacle.label or "hocbf"
    )
    return evaluation, constraint


def constraint_rows_ho(
    state: QuadrotorState,
    obstacles: list[Obstacle],
    params: QuadrotorParams,
    kappa: ClassKappa,
    config: HocbfConfig,
    t: float,
) -> list[AffineSafetyConstraint]:
    """One HO row per obstacle (every shape via its encompassing sphere)."""
    rows = []
    for i, obstacle in enumerate(obstacles):
        _, constraint = barrier_ho(state, obstacle, params, kappa, config, t)
        if not obstacle.label:
            constraint = AffineSafetyConstraint(
                constraint.gradient_row, constraint.offset, f"{obstacle.kind}{i}"
            )
        rows.append(constraint)
    return rows


def effective_half_angle(
    v_rel_norm: float, p_rel_norm: float, r: float, gamma: float
) -> float:
    """phi' = arccos((gamma/||v_rel||) cos(phi)), the HO cone's half angle.

    Raises:
        ConeDegenerateError: (gamma/||v_rel||) cos(phi) > 1, where no cone
            exists (the HO condition is loose for every direction).
        ValueError: non-positive arguments.
    """
    if min(v_rel_norm, p_rel_norm, r, gamma) <= 0.0:
        raise ValueError("effective_half_angle needs positive arguments")
    cos_phi = np.sqrt(max(p_rel_norm**2 - r * r, 0.0)) / p_rel_norm
    arg = gamma * cos_phi / v_rel_norm
    if arg > 1.0:
        raise ConeDegenerateError(
            f"gamma/||v_rel|| cos(phi) = {arg:.6g} > 1: HO cone undefined"
        )
    return float(np.arccos(arg))


def psi_chain(
    state: QuadrotorState,
    obstacle: Obstacle,
    config: HocbfConfig,
    t: float,
    thrusts: np.ndarray,
    params: QuadrotorParams,
) -> tuple[float, float, float]:
    """(b, psi1, psi2) of the derivative chain, for sign spot-checks.

    psi1 = b_dot + p sqrt(b); psi2 = psi1_dot + alpha2_gain * psi1. With
    p = 2 gamma and zero body offset, psi1 = 2 h_HO and psi2 >= 0 matches the
    sign of the closed-form barrier condition under a matching linear kappa.
    """
    delta = obstacle.center_at(t) - state.position
    delta_dot = obstacle.velocity - state.velocity
    r_enc = encompassing_radius(obstacle)
    b = float(delta @ delta) - r_enc * r_enc
    b_dot = 2.0 * float(delta @ delta_dot)
    sqrt_b = np.sqrt(max(b, 0.0))
    psi1 = b_dot + config.p * sqrt_b

    # psi1_dot: b_ddot + p b_dot / (2 sqrt(b)); b_ddot = 2||delta_dot||^2
    # + 2 <delta, delta_ddot> with delta_ddot = -(vehicle acceleration).
    R = rotation_matrix(state.attitude)
    accel = np.array([0.0, 0.0, -params.gravity]) + R @ np.array(
        [0.0, 0.0, float(np.sum(thrusts)) / params.mass]
    )
    b_ddot = 2.0 * float(delta_dot @ delta_dot) - 2.0 * float(delta @ accel)
    psi1_dot = b_ddot + config.p * b_dot / (2.0 * max(sqrt_b, EPS_SQRT))
    psi2 = psi1_dot + config.alpha2_gain * psi1
    return b, psi1, psi2
