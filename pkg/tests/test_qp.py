"""Active-set QP solver tests against a dual projected-gradient oracle."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import oracles
from coneguard.errors import DegenerateGradientError, InfeasibleQpError
from coneguard.qp import (
    AffineSafetyConstraint,
    ClassKappa,
    QpProblem,
    kappa,
    solve,
    solve_single,
)


def feasible_instance(rng, m):
    """Random constraints made feasible by a certificate point."""
    A = rng.normal(size=(m, 4))
    z = rng.normal(size=4)
    margins = rng.uniform(0.0, 2.0, m)
    b = margins - A @ z
    cons = tuple(
        AffineSafetyConstraint(A[i], float(b[i]), label=f"c{i}") for i in range(m)
    )
    return rng.normal(size=4), cons, A, b, z


def test_kappa_is_linear():
    assert kappa(0.0) == 0.0
    assert kappa(2.0, gamma=3.0) == 6.0
    assert ClassKappa(0.5)(-4.0) == -2.0


def test_kappa_rejects_nonpositive_gamma():
    with pytest.raises(ValueError):
        ClassKappa(0.0)


def test_unconstrained_returns_u_des():
    u_des = np.array([1.0, -2.0, 0.5, 0.0])
    sol = solve(QpProblem(u_des=u_des))
    assert np.array_equal(sol.u_star, u_des)
    assert sol.active_set == ()
    assert sol.kkt_residual == 0.0


def test_inactive_constraint_returns_u_des():
    u_des = np.array([1.0, 1.0, 1.0, 1.0])
    con = AffineSafetyConstraint(np.ones(4), 0.0, label="slack")
    sol = solve(QpProblem(u_des=u_des, constraints=(con,)))
    assert np.array_equal(sol.u_star, u_des)
    assert sol.active_set == ()


def test_single_constraint_projection_hand_value():
    # u1 >= 1 from u_des = 0: u* = (1, 0, 0, 0), lambda = 1
    con = AffineSafetyConstraint(np.array([1.0, 0, 0, 0]), -1.0, label="floor")
    sol = solve_single(np.zeros(4), con)
    assert np.allclose(sol.u_star, [1.0, 0, 0, 0], atol=0.0)
    assert sol.multipliers == (1.0,)
    assert sol.active_set == ("floor",)


def test_single_constraint_matches_general_solver(rng):
    for _ in range(300):
        u_des, cons, _, _, _ = feasible_instance(rng, 1)
        closed = solve_single(u_des, cons[0])
        general = solve(QpProblem(u_des=u_des, constraints=cons))
        assert np.max(np.abs(closed.u_star - general.u_star)) <= 1e-12


def test_solve_matches_dual_oracle(rng):
    # batch the oracle by constraint count; FISTA vectorizes over instances
    for m in (1, 2, 3):
        instances = [feasible_instance(rng, m) for _ in range(60)]
        got = np.array(
            [
                solve(QpProblem(u_des=u_des, constraints=cons)).u_star
                for u_des, cons, _, _, _ in instances
            ]
        )
        want = oracles.qp_dual_batch(
            np.array([inst[0] for inst in instances]),
            np.array([inst[2] for inst in instances]),
            np.array([inst[3] for inst in instances]),
            iters=20_000,
        )
        assert np.max(np.abs(got - want)) <= 1e-6


def test_kkt_certificate(rng):
    for _ in range(200):
        m = int(rng.integers(1, 4))
        u_des, cons, A, b, _ = feasible_instance(rng, m)
        sol = solve(QpProblem(u_des=u_des, constraints=cons))
        assert sol.kkt_residual <= 1e-8
        assert all(lam >= 0.0 for lam in sol.multipliers)
        # feasibility and complementary slackness, recomputed here
        slack = A @ sol.u_star + b
        assert np.min(slack) >= -1e-9
        for label, lam in zip(sol.active_set, sol.multipliers):
            i = int(label[1:])
            assert abs(lam * slack[i]) <= 1e-8


def test_solution_no_further_from_u_des_than_certificate(rng):
    for _ in range(200):
        m = int(rng.integers(1, 4))
        u_des, cons, A, b, z = feasible_instance(rng, m)
        sol = solve(QpProblem(u_des=u_des, constraints=cons))
        assert np.linalg.norm(sol.u_star - u_des) <= np.linalg.norm(z - u_des) + 1e-9


def test_bounds_respected(rng):
    for _ in range(100):
        u_des = rng.normal(size=4) * 3.0
        sol = solve(QpProblem(u_des=u_des, bounds=(-1.0, 1.0)))
        assert np.all(sol.u_star >= -1.0 - 1e-12)
        assert np.all(sol.u_star <= 1.0 + 1e-12)
        # box projection is separable, so clipping is the exact answer
        assert np.max(np.abs(sol.u_star - np.clip(u_des, -1.0, 1.0))) <= 1e-9


def test_bounds_and_row_together():
    # sum u >= 3 with u <= 0.5 forces every component to the upper bound... not
    # quite: 4 * 0.5 = 2 < 3, so this instance is infeasible
    con = AffineSafetyConstraint(np.ones(4), -3.0, label="sum")
    with pytest.raises(InfeasibleQpError):
        solve(QpProblem(u_des=np.zeros(4), constraints=(con,), bounds=(-0.5, 0.5)))


def test_infeasible_reports_blocking_labels():
    up = AffineSafetyConstraint(np.array([1.0, 0, 0, 0]), -1.0, label="up")
    down = AffineSafetyConstraint(np.array([-1.0, 0, 0, 0]), -1.0, label="down")
    with pytest.raises(InfeasibleQpError) as exc_info:
        solve(QpProblem(u_des=np.zeros(4), constraints=(up, down)))
    assert set(exc_info.value.blocking_labels) == {"up", "down"}


def test_degenerate_row_rejected():
    con = AffineSafetyConstraint(np.zeros(4), -1.0, label="null")
    with pytest.raises(DegenerateGradientError):
        solve_single(np.zeros(4), con)


def test_violation_method():
    con = AffineSafetyConstraint(np.array([1.0, 0, 0, 0]), -1.0)
    assert con.violation(np.array([2.0, 0, 0, 0])) == 0.0
    assert con.violation(np.array([0.5, 0, 0, 0])) == 0.5


@settings(max_examples=150, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(1, 3))
def test_solution_feasible_and_certified(seed, m):
    """Any feasible instance: u* feasible, multipliers >= 0, KKT tiny."""
    rng = np.random.default_rng(seed)
    u_des, cons, A, b, _ = feasible_instance(rng, m)
    sol = solve(QpProblem(u_des=u_des, constraints=cons))
    assert np.min(A @ sol.u_star + b) >= -1e-9
    assert all(lam >= 0.0 for lam in sol.multipliers)
    assert sol.kkt_residual <= 1e-8
