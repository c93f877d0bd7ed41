"""Acceptance gate: every shipped guarantee checked at its stated tolerance.

Each criterion is one test that prints a single [PASS]/[FAIL] line with the
measured numbers (visible under ``pytest -s`` or in a failure report) and
then asserts. Tolerances live here, next to the checks, not in the library.
"""

import time
from dataclasses import replace

import numpy as np
import pytest

import oracles
from helpers import random_cylinder, random_sphere, random_state, random_thrusts
from coneguard.cone import (
    Obstacle,
    barrier_3d,
    barrier_projection,
    inflated_radius,
    relative_state_sphere,
)
from coneguard.dynamics import QuadrotorParams
from coneguard.harness import compute_metrics, run, run_pair
from coneguard.hocbf import (
    HocbfConfig,
    barrier_ho,
    effective_half_angle,
    encompassing_radius,
    h_ho,
)
from coneguard.qp import AffineSafetyConstraint, QpProblem, kappa, solve, solve_single
from coneguard.scenarios import (
    builtin_scenarios,
    get_scenario,
    hover_scenario,
    line_tracking_scenario,
)
from coneguard.traceio import parse_trace, write_trace

PARAMS = QuadrotorParams()


def _verdict(tag: str, ok: bool, detail: str) -> None:
    print(f"[{'PASS' if ok else 'FAIL'}] {tag}: {detail}")
    assert ok, f"{tag}: {detail}"


@pytest.fixture(scope="module")
def builtin_runs():
    """One filtered run of every built-in scenario, with wall times."""
    results = {}
    for config in builtin_scenarios():
        start = time.perf_counter()
        if config.partner is not None:
            traces = run_pair(config)
        else:
            traces = (run(config),)
        wall = time.perf_counter() - start
        results[config.name] = (config, traces, wall)
    return results


def test_c01_builtins_safe_and_fast(builtin_runs):
    """All built-ins: separation >= -1e-3 everywhere, h stays >= -1e-6 for
    any obstacle that starts outside its cone, and each 10 s run at
    dt = 1/240 simulates in under 10 s of wall time.

    Every built-in deliberately starts with h(0) < 0 (the unfiltered twin
    must collide), which would make the invariance clause vacuous, so it is
    also checked in its strong form: once h crosses >= 0 it never falls
    below -1e-6 again. That form only holds where the constant-velocity
    obstacle model is exact, so the two-agent runs (the partner accelerates)
    are covered by the separation clause alone."""
    worst_sep = np.inf
    safe_start_channels = 0
    worst_suffix = np.inf
    max_wall = 0.0
    ok = True
    for name, (config, traces, wall) in builtin_runs.items():
        max_wall = max(max_wall, wall)
        ok = ok and wall <= 10.0
        for trace in traces:
            worst_sep = min(worst_sep, float(trace.separation.min()))
            ok = ok and trace.separation.min() >= -1e-3
            for j in range(trace.h.shape[1]):
                if trace.h[0, j] >= 0.0:
                    safe_start_channels += 1
                    ok = ok and trace.h[:, j].min() >= -1e-6
                if name == "two-agent":
                    continue
                nonneg = np.flatnonzero(trace.h[:, j] >= 0.0)
                if nonneg.size:
                    low = float(trace.h[nonneg[0]:, j].min())
                    worst_suffix = min(worst_suffix, low)
                    ok = ok and low >= -1e-6
    detail = (
        f"min_sep={worst_sep:+.6f} (>=-1e-3), "
        f"h(0)>=0 on {safe_start_channels} channels (clause vacuous), "
        f"min h after first crossing >= 0: {worst_suffix:+.2e} (>=-1e-6), "
        f"max_wall={max_wall:.1f}s (<=10s)"
    )
    _verdict("c01 builtin safety", ok, detail)


def test_c02_unfiltered_baselines_collide():
    """With the filter off, the overtake and head-on scenarios must reach
    negative separation; otherwise the filtered runs prove nothing."""
    seps = {}
    for name in ("static-overtake", "moving-head-on"):
        config = replace(get_scenario(name), filter_kind="none")
        seps[name] = compute_metrics(run(config)).min_separation
    ok = all(v < 0.0 for v in seps.values())
    detail = ", ".join(f"{k}: min_sep={v:+.6f} (<0)" for k, v in seps.items())
    _verdict("c02 unfiltered collide", ok, detail)


def _fd_worst(rng, n, make_obstacle, barrier, oracle_kwargs, reject):
    """Worst relative |fd - (drift + row.f)| over n accepted random states."""
    worst = 0.0
    checked = 0
    while checked < n:
        state = random_state(rng)
        obs = make_obstacle(rng)
        t = float(rng.uniform(0, 2))
        r, kwargs = oracle_kwargs(obs)
        p, _ = oracles.relative_state(state.as_vector(), obs.center, obs.velocity, t)
        if reject(p, r):
            continue
        f = random_thrusts(rng, PARAMS)
        ev, _ = barrier(state, obs, t)
        fd = oracles.fd_hdot(
            state.as_vector(), f, obs.center, obs.velocity, r, t, **kwargs
        )
        analytic = ev.drift_term + float(ev.input_row @ f)
        worst = max(worst, abs(fd - analytic) / max(1.0, abs(fd)))
        checked += 1
    return worst


def test_c03_barrier_derivatives_match_finite_differences():
    """1000 random states per barrier variant: the affine model
    drift + row.u matches a central-difference dh/dt along the true flow
    to 1e-4 relative. States closer than 0.01 m to the surface are
    resampled (the clamped sqrt is not differentiable there)."""
    tol = 1e-4
    variants = {
        "cone-sphere": _fd_worst(
            np.random.default_rng(301),
            1000,
            random_sphere,
            lambda s, o, t: barrier_3d(s, o, PARAMS, kappa, t),
            lambda o: (inflated_radius(o, PARAMS.body_width).r, {"variant": "sphere"}),
            lambda p, r: np.linalg.norm(p) < r + 0.01,
        ),
        "cone-cylinder": _fd_worst(
            np.random.default_rng(302),
            1000,
            random_cylinder,
            lambda s, o, t: barrier_projection(s, o, PARAMS, kappa, t),
            lambda o: (
                inflated_radius(o, PARAMS.body_width).r,
                {"variant": "cylinder", "axis": (0.0, 0.0, 1.0)},
            ),
            lambda p, r: np.linalg.norm(p[:2]) < r + 0.01,
        ),
        "ho": _fd_worst(
            np.random.default_rng(303),
            1000,
            random_sphere,
            lambda s, o, t: barrier_ho(
                s, o, PARAMS, kappa, HocbfConfig(gamma_penalty=1.0), t
            ),
            lambda o: (
                encompassing_radius(o) + 0.5 * PARAMS.body_width,
                {"variant": "ho", "gamma": 1.0},
            ),
            lambda p, r: np.linalg.norm(p) < r + 0.01,
        ),
    }
    ok = all(v <= tol for v in variants.values())
    detail = ", ".join(f"{k}: worst={v:.2e} (<=1e-4)" for k, v in variants.items())
    _verdict("c03 derivative rows", ok, detail)


def test_c04_input_row_never_vanishes():
    """1e5 random states per cone variant with |roll|, |pitch| < 1 rad and
    at least 0.01 m of clearance: the QP input row always has norm > 1e-8,
    so the filter never loses authority over the barrier."""
    rng = np.random.default_rng(304)
    mins = {"cone-sphere": np.inf, "cone-cylinder": np.inf}
    n = 100_000
    checked = 0
    while checked < n:
        state = random_state(rng)  # roll, pitch drawn inside (-1, 1)
        sphere = random_sphere(rng)
        cylinder = random_cylinder(rng)
        t = float(rng.uniform(0, 2))
        p_s, _ = oracles.relative_state(
            state.as_vector(), sphere.center, sphere.velocity, t
        )
        r_s = inflated_radius(sphere, PARAMS.body_width).r
        p_c, _ = oracles.relative_state(
            state.as_vector(), cylinder.center, cylinder.velocity, t
        )
        r_c = inflated_radius(cylinder, PARAMS.body_width).r
        if np.linalg.norm(p_s) < r_s + 0.01 or np.linalg.norm(p_c[:2]) < r_c + 0.01:
            continue
        ev_s, _ = barrier_3d(state, sphere, PARAMS, kappa, t)
        ev_c, _ = barrier_projection(state, cylinder, PARAMS, kappa, t)
        mins["cone-sphere"] = min(mins["cone-sphere"], np.linalg.norm(ev_s.input_row))
        mins["cone-cylinder"] = min(
            mins["cone-cylinder"], np.linalg.norm(ev_c.input_row)
        )
        checked += 1
    ok = all(v > 1e-8 for v in mins.values())
    detail = ", ".join(f"{k}: min_row_norm={v:.2e} (>1e-8)" for k, v in mins.items())
    _verdict("c04 gradient floor", ok, detail)


def test_c05_qp_solver_vs_dual_oracle():
    """1000 random feasible instances with 1-3 constraints: the active-set
    answer matches an accelerated dual projected-gradient oracle to 1e-3,
    satisfies stationarity to 1e-8, has nonnegative multipliers, and
    complementary slackness to 1e-8. 1000 single-constraint instances match
    the closed form to 1e-12."""
    rng = np.random.default_rng(305)
    worst_gap = 0.0
    worst_stat = 0.0
    worst_slack = 0.0
    lam_min = np.inf
    for m in (1, 2, 3):
        count = 334 if m == 1 else 333
        u_all = np.empty((count, 4))
        a_all = np.empty((count, m, 4))
        b_all = np.empty((count, m))
        sols = []
        for i in range(count):
            a_all[i] = rng.normal(size=(m, 4))
            z = rng.normal(size=4)
            b_all[i] = rng.uniform(0.0, 2.0, m) - a_all[i] @ z
            u_all[i] = rng.normal(size=4)
            cons = tuple(
                AffineSafetyConstraint(a_all[i][j], float(b_all[i][j]), label=f"c{j}")
                for j in range(m)
            )
            sol = solve(QpProblem(u_des=u_all[i], constraints=cons))
            sols.append(sol)
            lam_full = np.zeros(m)
            for label, lam in zip(sol.active_set, sol.multipliers):
                lam_full[int(label[1:])] = lam
            lam_min = min(lam_min, float(lam_full.min(initial=np.inf)))
            stationarity = sol.u_star - u_all[i] - a_all[i].T @ lam_full
            worst_stat = max(worst_stat, float(np.linalg.norm(stationarity)))
            slack = a_all[i] @ sol.u_star + b_all[i]
            worst_slack = max(worst_slack, float(np.max(np.abs(lam_full * slack))))
        oracle = oracles.qp_dual_batch(u_all, a_all, b_all, iters=20_000)
        for i, sol in enumerate(sols):
            worst_gap = max(worst_gap, float(np.linalg.norm(sol.u_star - oracle[i])))
    worst_closed = 0.0
    for _ in range(1000):
        a = rng.normal(size=4)
        z = rng.normal(size=4)
        con = AffineSafetyConstraint(
            a, float(rng.uniform(0.0, 2.0) - a @ z), label="c0"
        )
        u_des = rng.normal(size=4)
        single = solve_single(u_des, con)
        general = solve(QpProblem(u_des=u_des, constraints=(con,)))
        worst_closed = max(
            worst_closed, float(np.linalg.norm(single.u_star - general.u_star))
        )
    ok = (
        worst_gap <= 1e-3
        and worst_stat <= 1e-8
        and lam_min >= 0.0
        and worst_slack <= 1e-8
        and worst_closed <= 1e-12
    )
    detail = (
        f"|u*-oracle|={worst_gap:.2e} (<=1e-3), "
        f"stationarity={worst_stat:.2e} (<=1e-8), "
        f"min_multiplier={lam_min:.2e} (>=0), "
        f"comp_slack={worst_slack:.2e} (<=1e-8), "
        f"closed_vs_general={worst_closed:.2e} (<=1e-12)"
    )
    _verdict("c05 qp oracle", ok, detail)


def test_c06_speed_matched_penalty_recovers_cone():
    """1e4 random sphere encounters: with gamma set to ||v_rel|| the HO
    barrier equals the cone barrier to 1e-12; with a drawn constant
    gamma < ||v_rel|| the effective cone is strictly wider, and on
    approaching states the HO value is strictly below the cone value."""
    rng = np.random.default_rng(306)
    worst_eq = 0.0
    widened = 0
    below = 0
    approaching = 0
    checked = 0
    ok = True
    while checked < 10_000:
        state = random_state(rng)
        obs = random_sphere(rng)
        t = float(rng.uniform(0, 2))
        rel = relative_state_sphere(state, obs, PARAMS, t)
        r = inflated_radius(obs, PARAMS.body_width).r
        p_norm = float(np.linalg.norm(rel.p_rel))
        v_norm = float(np.linalg.norm(rel.v_rel))
        if p_norm < r + 0.01 or v_norm < 1e-3:
            continue
        ev, _ = barrier_3d(state, obs, PARAMS, kappa, t)
        matched = h_ho(state, obs, HocbfConfig(gamma_penalty=v_norm), t, PARAMS)
        worst_eq = max(worst_eq, abs(matched - ev.h))
        gamma = float(rng.uniform(0.1, 3.0))
        if v_norm > gamma:
            phi_eff = effective_half_angle(v_norm, p_norm, r, gamma)
            ok = ok and phi_eff > ev.cone_half_angle
            widened += 1
            if float(rel.p_rel @ rel.v_rel) < 0.0:
                approaching += 1
                h_const = h_ho(state, obs, HocbfConfig(gamma_penalty=gamma), t, PARAMS)
                ok = ok and h_const < ev.h
                below += 1 if h_const < ev.h else 0
        checked += 1
    ok = ok and worst_eq <= 1e-12 and widened > 1000 and approaching > 500
    detail = (
        f"|h_ho(gamma=|v|) - h_cone|={worst_eq:.2e} (<=1e-12), "
        f"cone strictly wider on all {widened} samples with gamma<|v_rel|, "
        f"h strictly below on all {below} approaching ones"
    )
    _verdict("c06 penalty matching", ok, detail)


def test_c07_ho_baseline_more_conservative(builtin_runs):
    """Head-on moving obstacle: the HO filter at gamma = 1 ends up strictly
    closer to the obstacle than the cone filter, and the |gap| between the
    two shrinks monotonically as gamma grows through {0.5, 1, 2}."""
    config, traces, _ = builtin_runs["moving-head-on"]
    cone_sep = compute_metrics(traces[0]).min_separation
    ho_sep = {}
    for gamma in (0.5, 1.0, 2.0):
        ho_config = replace(
            config, filter_kind="hocbf", hocbf=HocbfConfig(gamma_penalty=gamma)
        )
        ho_sep[gamma] = compute_metrics(run(ho_config)).min_separation
    gaps = [abs(cone_sep - ho_sep[g]) for g in (0.5, 1.0, 2.0)]
    ok = ho_sep[1.0] < cone_sep and gaps[0] > gaps[1] > gaps[2]
    detail = (
        f"cone={cone_sep:+.6f}, "
        + ", ".join(f"ho(g={g:g})={ho_sep[g]:+.6f}" for g in (0.5, 1.0, 2.0))
        + f", gaps={gaps[0]:.4f}>{gaps[1]:.4f}>{gaps[2]:.4f}"
    )
    _verdict("c07 ho conservatism", ok, detail)


def test_c08_tracking_quality_unfiltered():
    """Controller alone: a 10 cm hover offset decays below 1 cm for all
    t >= 2 s, and straight-line tracking at 1 m/s stays under 5 cm RMS."""
    hover = run(hover_scenario())
    err = np.linalg.norm(hover.states[:, :3] - np.array([0.0, 0.0, 1.0]), axis=1)
    settled = float(err[hover.t >= 2.0 - 1e-9].max())
    line = run(line_tracking_scenario())
    rms = compute_metrics(line).tracking_rms
    ok = settled <= 0.01 and rms < 0.05
    detail = f"hover_err_after_2s={settled:.4f}m (<=0.01), line_rms={rms:.2e}m (<0.05)"
    _verdict("c08 tracking", ok, detail)


def test_c09_projection_ignores_axis_direction(builtin_runs):
    """Vertical-cylinder runs are invariant (to 1e-9 in the h trace) under
    any change of the obstacle's position and velocity along its own axis:
    the projected barrier must not see the axial direction at all."""
    config, traces, _ = builtin_runs["cylinder-side"]
    base = traces[0]
    worst = 0.0
    for dz, vz in ((0.7, 0.4), (-1.3, -2.0)):
        obs = config.obstacles[0]
        center = (obs.center[0], obs.center[1], obs.center[2] + dz)
        shifted = Obstacle(
            kind=obs.kind,
            center=center,
            radius_raw=obs.radius_raw,
            velocity=(0.0, 0.0, vz),
            axis=(0.0, 0.0, 1.0),
            height=obs.height,
        )
        variant = run(replace(config, obstacles=(shifted,)))
        worst = max(worst, float(np.max(np.abs(variant.h - base.h))))
    ok = worst <= 1e-9
    _verdict(
        "c09 axis invariance", ok, f"max |h - h_shifted|={worst:.2e} (<=1e-9)"
    )


def test_c10_deterministic_and_round_trip(builtin_runs, tmp_path):
    """The same config byte-for-byte reproduces its trace file, and parsing
    a written trace returns exactly the recorded arrays."""
    _, traces, _ = builtin_runs["static-overtake"]
    again = run(get_scenario("static-overtake"))
    path_a = tmp_path / "static-overtake.csv"
    path_b = tmp_path / "again.csv"
    write_trace(path_a, traces[0])
    write_trace(path_b, again)
    identical = path_a.read_bytes() == path_b.read_bytes()
    parsed = parse_trace(path_a)
    fields = ("t", "states", "u_des", "u_star", "h", "separation", "violations")
    exact = all(
        np.array_equal(getattr(parsed, f), getattr(traces[0], f)) for f in fields
    )
    exact = exact and parsed.obstacle_labels == traces[0].obstacle_labels
    ok = identical and exact
    detail = f"byte_identical={identical}, parse_round_trip_exact={exact}"
    _verdict("c10 determinism", ok, detail)
