"""Minimal-deviation safety QP.

    minimize ||u - u_des||^2
    subject to a_i . u + b_i >= 0   (one affine row per obstacle)
              lo <= u <= hi         (optional box)

Solved exactly with a dense primal active-set iteration; u has 4 components,
so every subproblem is tiny closed-form linear algebra. Multipliers follow
the convention u* - u_des = sum_i lambda_i a_i^T (lambda_i >= 0), which is the
KKT stationarity of the objective 0.5 ||u - u_des||^2.

If u_des is infeasible, a feasible start is found by exact enumeration: for
each subset S of at most 4 constraint rows, project u_des onto the affine set
{A_S u = -b_S}. If the problem is feasible, the optimum's linearly
independent active subset yields exactly the optimum under this projection,
so taking the closest feasible candidate both certifies feasibility and
starts the active-set loop at (or next to) the solution. If no candidate is
feasible the problem is infeasible and the most-violated labels are reported.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateGradientError, InfeasibleQpError, IterationLimitError

GRADIENT_MIN = 1e-10  # below this, a safety row contradicts the barrier theory
FEAS_TOL = 1e-10  # feasibility slack used by the active-set bookkeeping
MAX_ITER = 100


@dataclass(frozen=True)
class ClassKappa:
    """Extended class-K function in linear form kappa(h) = gamma * h."""

    gamma: float = 1.0

    def __post_init__(self):
        if not (np.isfinite(self.gamma) and self.gamma > 0.0):
            raise ValueError("gamma must be finite and > 0")

    def __call__(self, h: float) -> float:
        return self.gamma * h


def kappa(h: float, gamma: float = 1.0) -> float:
    """kappa(h) = gamma * h (module-level convenience)."""
    return ClassKappa(gamma)(h)


@dataclass(frozen=True)
class AffineSafetyConstraint:
    """One row a.u + b >= 0 of the safety QP."""

    gradient_row: np.ndarray
    offset: float
    label: str = ""

    def __post_init__(self):
        a = np.asarray(self.gradient_row, dtype=float).reshape(4).copy()
        a.setflags(write=False)
        object.__setattr__(self, "gradient_row", a)
        if not (np.all(np.isfinite(a)) and np.isfinite(self.offset)):
            raise ValueError("constraint row must be finite")

    def violation(self, u: np.ndarray) -> float:
        """max(0, -(a.u + b)): zero iff satisfied."""
        return max(0.0, -(float(self.gradient_row @ u) + self.offset))


@dataclass(frozen=True)
class QpProblem:
    u_des: np.ndarray
    constraints: tuple[AffineSafetyConstraint, ...] = ()
    bounds: tuple[float, float] | None = None  # per-component [lo, hi]

    def __post_init__(self):
        u = np.asarray(self.u_des, dtype=float).reshape(4).copy()
        u.setflags(write=False)
        object.__setattr__(self, "u_des", u)
        object.__setattr__(self, "constraints", tuple(self.constraints))
        if self.bounds is not None:
            lo, hi = self.bounds
            if not (np.isfinite(lo) and np.isfinite(hi) and lo <= hi):
                raise ValueError("bounds must be finite with lo <= hi")
            object.__setattr__(self, "bounds", (float(lo), float(hi)))


@dataclass(frozen=True)
class QpSolution:
    u_star: np.ndarray
    active_set: tuple[str, ...]
    multipliers: tuple[float, ...]
    kkt_residual: float


def solve_single(u_des: np.ndarray, constraint: AffineSafetyConstraint) -> QpSolution:
    """Closed-form halfspace projection for a single constraint, no bounds.

    If a.u_des + b >= 0 the constraint is inactive and u* = u_des; otherwise
    u* = u_des + lambda a^T with lambda = -(a.u_des + b)/||a||^2 > 0.

    Raises:
        DegenerateGradientError: ||a|| <= 1e-10.
    """
    u_des = np.asarray(u_des, dtype=float).reshape(4)
    a = constraint.gradient_row
    norm_sq = float(a @ a)
    if norm_sq <= GRADIENT_MIN**2:
        raise DegenerateGradientError(
            f"constraint {constraint.label!r} has ||a|| <= {GRADIENT_MIN}"
        )
    slack = float(a @ u_des) + constraint.offset
    if slack >= 0.0:
        return QpSolution(u_des.copy(), (), (), 0.0)
    lam = -slack / norm_sq
    u_star = u_des + lam * a
    residual = abs(float(a @ u_star) + constraint.offset) * lam
    return QpSolution(u_star, (constraint.label,), (lam,), residual)


def _stack_rows(problem: QpProblem) -> tuple[np.ndarray, np.ndarray, list[str]]:
    """All rows a.u + b >= 0 including bounds expressed as affine rows."""
    rows_a, rows_b, labels = [], [], []
    for c in problem.constraints:
        if float(c.gradient_row @ c.gradient_row) <= GRADIENT_MIN**2:
            raise DegenerateGradientError(
                f"constraint {c.label!r} has ||a|| <= {GRADIENT_MIN}"
            )
        rows_a.append(c.gradient_row)
        rows_b.append(c.offset)
        labels.append(c.label)
    if problem.bounds is not None:
        lo, hi = problem.bounds
        eye = np.eye(4)
        for i in range(4):
            rows_a.append(eye[i])
            rows_b.append(-lo)
            labels.append(f"bound_lo_{i + 1}")
        for i in range(4):
            rows_a.append(-eye[i])
            rows_b.append(hi)
            labels.append(f"bound_hi_{i + 1}")
    if rows_a:
        return np.vstack(rows_a), np.asarray(rows_b, dtype=float), labels
    return np.zeros((0, 4)), np.zeros(0), labels


def _project_equalities(u_des: np.ndarray, A: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Closest point to u_des on {u : A u = -b} (least-squares if inconsistent)."""
    # u = u_des + A^T mu with A A^T mu = -(A u_des + b)
    gram = A @ A.T
    rhs = -(A @ u_des + b)
    mu = np.linalg.lstsq(gram, rhs, rcond=None)[0]
    return u_des + A.T @ mu


def _feasible_start(
    u_des: np.ndarray, A: np.ndarray, b: np.ndarray, labels: list[str]
) -> np.ndarray:
    """Exact feasibility search over equality-projections of row subsets."""
    m = A.shape[0]
    best = None
    best_dist = np.inf
    for size in range(1, min(4, m) + 1):
        for subset in itertools.combinations(range(m), size):
            idx = list(subset)
            cand = _project_equalities(u_des, A[idx], b[idx])
            if np.min(A @ cand + b) >= -FEAS_TOL:
                dist = float(np.linalg.norm(cand - u_des))
                if dist < best_dist:
                    best, best_dist = cand, dist
    if best is None:
        slack = A @ u_des + b
        order = np.argsort(slack)
        worst = [labels[i] for i in order if slack[i] < 0.0]
        raise InfeasibleQpError(
            "safety QP infeasible; blocking constraints: " + ", ".join(worst),
            blocking_labels=worst,
        )
    return best


def solve(problem: QpProblem) -> QpSolution:
    """Exact minimizer via primal active-set iteration on 4 variables.

    Blocking-constraint ties are broken toward the fastest-violating row and
    then by label order, keeping the iteration deterministic.

    Raises:
        DegenerateGradientError: any safety row with ||a|| <= 1e-10.
        InfeasibleQpError: empty feasible set (with blocking labels).
        IterationLimitError: no convergence within 100 iterations.
    """
    u_des = problem.u_des
    A, b, labels = _stack_rows(problem)
    m = A.shape[0]
    if m == 0:
        return QpSolution(u_des.copy(), (), (), 0.0)

    if np.min(A @ u_des + b) >= -FEAS_TOL:
        u = u_des.copy()
    else:
        u = _feasible_start(u_des, A, b, labels)

    working: list[int] = []
    lam_w = np.zeros(0)
    for _ in range(MAX_ITER):
        if working:
            W = A[working]
            u_eq = _project_equalities(u_des, W, b[working])
        else:
            u_eq = u_des.copy()
        d = u_eq - u
        if float(np.linalg.norm(d)) <= 1e-12:
            # At the working-set minimizer: check signs of the multipliers.
            if working:
                W = A[working]
                lam_w = np.linalg.lstsq(W.T, u - u_des, rcond=None)[0]
            else:
                lam_w = np.zeros(0)
            if lam_w.size == 0 or np.min(lam_w) >= -1e-12:
                break
            drop = int(np.argmin(lam_w))
            working.pop(drop)
            continue
        # Step toward u_eq, blocked by rows outside the working set.
        alpha = 1.0
        block = -1
        block_rate = 0.0
        for j in range(m):
            if j in working:
                continue
            rate = float(A[j] @ d)
            if rate >= -1e-14:
                continue
            slack = float(A[j] @ u) + b[j]
            alpha_j = max(slack, 0.0) / (-rate)
            if alpha_j < alpha - 1e-14:
                alpha, block, block_rate = alpha_j, j, rate
            elif abs(alpha_j - alpha) <= 1e-14 and block >= 0:
                # Tie: prefer the faster-violating row, then label order.
                if rate < block_rate - 1e-14 or (
                    abs(rate - block_rate) <= 1e-14 and labels[j] < labels[block]
                ):
                    block, block_rate = j, rate
        u = u + alpha * d
        if block >= 0 and alpha < 1.0:
            working.append(block)
    else:
        raise IterationLimitError("active-set iteration exceeded 100 iterations")

    lam = np.maximum(lam_w, 0.0) if lam_w.size else np.zeros(0)
    act_labels = tuple(labels[i] for i in working)
    stationarity = float(
        np.linalg.norm((u - u_des) - (A[working].T @ lam if working else 0.0))
    )
    feas = float(max(0.0, -(np.min(A @ u + b)))) if m else 0.0
    comp = (
        float(np.max(np.abs(lam * (A[working] @ u + b[working])))) if working else 0.0
    )
    kkt = max(stationarity, feas, comp)
    return QpSolution(u, act_labels, tuple(float(v) for v in lam), kkt)
