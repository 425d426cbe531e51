"""Desk-scale end-to-end acceptance checks.

One test per headline requirement, so ``pytest -v tests/test_acceptance.py``
reads as a checklist with a PASS/FAIL line per requirement.  Each test also
prints an explicit verdict with the measured numbers for the run log.
"""

import json
import time

import numpy as np
import pytest

from aircrn import channel, driver, energy, model, oracle, sca, subproblems

RNG = np.random.default_rng(2024)

GAMMA_LADDER_DB = (-131.0, -126.0, -121.0, -106.0, -96.0)
PERIODS_S = (60.0, 70.0, 80.0)
BAND = 0.01                      # relative slack on ordering comparisons


def _verdict(label: str, ok: bool, detail: str = ""):
    line = f"{label}: {'PASS' if ok else 'FAIL'}"
    if detail:
        line += f"  [{detail}]"
    print(line)
    assert ok, line


# ---------------------------------------------------------------------------
# shared runs (expensive; computed once per module)
# ---------------------------------------------------------------------------


@pytest.fixture(scope="module")
def runs(sc):
    return {name: driver.optimize(sc, name) for name in driver.scheme_names()}


@pytest.fixture(scope="module")
def period_sweep(sc, runs):
    out = {}
    for T in PERIODS_S:
        if T == sc.period_s:
            out[T] = runs["proposed"]
        else:
            out[T] = driver.optimize(sc.with_overrides(period_s=T),
                                     "proposed")
    return out


@pytest.fixture(scope="module")
def cap_sweep(sc, runs):
    out = {}
    for db in GAMMA_LADDER_DB:
        cap = 10.0 ** (db / 10.0)
        if abs(cap - sc.interference_cap_w) <= 1e-18:
            out[db] = runs["proposed"]
        else:
            out[db] = driver.optimize(
                sc.with_overrides(interference_cap_w=cap), "proposed")
    return out


# ---------------------------------------------------------------------------
# 1. monotone convergence inside the iteration budget
# ---------------------------------------------------------------------------


def test_monotone_convergence_within_budget(runs):
    problems = []
    details = []
    for name, run in runs.items():
        objs = [r.objective for r in run.records]
        worst_drop = min(
            (b - a for a, b in zip(objs, objs[1:])), default=0.0)
        last_gain = objs[-1] - objs[-2] if len(objs) > 1 else 0.0
        details.append(f"{name}: {run.iterations} iters, last gain "
                       f"{last_gain:.2e}, {run.wall_time_s:.0f}s")
        if worst_drop < -1e-7:
            problems.append(f"{name} objective drops {worst_drop:.3e}")
        if not run.converged or run.iterations > 50:
            problems.append(
                f"{name} did not reach gain <= 1e-4 within 50 iterations "
                f"(last gain {last_gain:.3e})")
        if run.wall_time_s > 300.0:
            problems.append(f"{name} took {run.wall_time_s:.0f}s > 5 min")
    _verdict("monotone convergence within budget", not problems,
             "; ".join(problems) if problems else "; ".join(details))


# ---------------------------------------------------------------------------
# 2. full feasibility audit of every final answer
# ---------------------------------------------------------------------------


def test_final_answers_pass_full_audit(runs, sc):
    problems = []
    for name, run in runs.items():
        mode = driver.scheme_config(name).mode
        audit = model.feasibility_audit(run.dv, sc, tol=1e-6, mode=mode)
        if not audit.feasible:
            worst = audit.worst
            problems.append(f"{name}: {worst.family} residual "
                            f"{worst.scaled:.3e}")
        intf = model.interference_watts(sc, run.dv.P, run.dv.q, run.dv.z,
                                        mode)
        if not np.all(intf <= sc.interference_cap_w * (1.0 + 1e-9)):
            problems.append(
                f"{name}: interference peak {np.max(intf):.3e} W over cap")
    _verdict("feasibility audit of all final answers", not problems,
             "; ".join(problems))


# ---------------------------------------------------------------------------
# 3. benchmark ordering at the default interference cap
# ---------------------------------------------------------------------------


def test_scheme_ordering(runs):
    r = {name: run.objective for name, run in runs.items()}
    checks = [
        ("2d-los >= proposed", r["2d-los"] >= r["proposed"] * (1 - BAND)),
        ("proposed >= 2d-plos", r["proposed"] >= r["2d-plos"] * (1 - BAND)),
        ("proposed >= npc", r["proposed"] >= r["npc"] * (1 - BAND)),
    ]
    bad = [label for label, ok in checks if not ok]
    detail = ", ".join(f"{k}={v:.4f}" for k, v in sorted(r.items()))
    _verdict("scheme ordering with 1% band", not bad,
             (" / ".join(bad) + "; " if bad else "") + detail)


# ---------------------------------------------------------------------------
# 4. sweep monotonicity: period and interference cap
# ---------------------------------------------------------------------------


def test_rate_sweeps_monotone(period_sweep, cap_sweep):
    problems = []
    t_rates = [period_sweep[T].objective for T in PERIODS_S]
    for (t1, r1), (t2, r2) in zip(zip(PERIODS_S, t_rates),
                                  zip(PERIODS_S[1:], t_rates[1:])):
        if r2 < r1 * (1 - BAND):
            problems.append(f"rate(T={t2:g}) = {r2:.4f} < rate(T={t1:g}) "
                            f"= {r1:.4f}")
    g_rates = [cap_sweep[db].objective for db in GAMMA_LADDER_DB]
    for (d1, r1), (d2, r2) in zip(zip(GAMMA_LADDER_DB, g_rates),
                                  zip(GAMMA_LADDER_DB[1:], g_rates[1:])):
        if r2 < r1 * (1 - BAND):
            problems.append(f"rate({d2:g} dB) = {r2:.4f} < rate({d1:g} dB) "
                            f"= {r1:.4f}")
    # loosening the cap past the point where it stops binding must saturate
    if abs(g_rates[-1] - g_rates[-2]) > BAND * g_rates[-1]:
        problems.append(f"no saturation at the top of the cap ladder: "
                        f"{g_rates[-2]:.4f} -> {g_rates[-1]:.4f}")
    detail = ("T: " + ", ".join(f"{r:.4f}" for r in t_rates)
              + " | cap: " + ", ".join(f"{r:.4f}" for r in g_rates))
    _verdict("sweep monotonicity and cap saturation", not problems,
             "; ".join(problems) if problems else detail)


# ---------------------------------------------------------------------------
# 5. altitude trade-off demo: visibility up, rate down
# ---------------------------------------------------------------------------


def test_altitude_tradeoff_demo(sc):
    t0 = time.perf_counter()
    cp = sc.cp
    power = sc.tx_ave_w
    xs = np.linspace(-200.0, 200.0, 401)
    r_xy = np.abs(xs)                       # user at the origin, y = 0 path
    curves = {}
    for alt in (30.0, 100.0):
        theta = channel.elevation_deg(r_xy, alt)
        d = np.hypot(r_xy, alt)
        curves[alt] = {
            "plos": channel.los_probability(theta, cp),
            "expected": channel.expected_rate(power, d, theta, cp),
            "lower": channel.lower_bound_rate(power, d, theta, cp),
        }
    elapsed = time.perf_counter() - t0

    problems = []
    lo, hi = curves[30.0], curves[100.0]
    if not (hi["plos"][0] > lo["plos"][0] and hi["plos"][-1] > lo["plos"][-1]):
        problems.append("higher plan does not raise LoS odds at the endpoints")
    mid = int(np.argmin(r_xy))
    if not hi["expected"][mid] < lo["expected"][mid]:
        problems.append("higher plan does not cost rate at closest approach")
    for alt, c in curves.items():
        gap = np.abs(c["expected"] - c["lower"]) / c["expected"]
        if np.max(gap) > 0.02:
            problems.append(f"bound gap {np.max(gap):.3%} at {alt:g} m")
    if elapsed > 1.0:
        problems.append(f"demo took {elapsed:.2f}s > 1s")
    _verdict("altitude trade-off demo", not problems,
             "; ".join(problems) if problems else
             f"endpoint plos {lo['plos'][0]:.3f} -> {hi['plos'][0]:.3f}, "
             f"midpoint rate {lo['expected'][mid]:.2f} -> "
             f"{hi['expected'][mid]:.2f}, {elapsed * 1e3:.0f} ms")


# ---------------------------------------------------------------------------
# 6. surrogate suite: tangency everywhere, dominance for the lower bounds
# ---------------------------------------------------------------------------


def test_surrogate_tangency_and_dominance():
    b = 0.14
    alpha = 2.2
    v0 = 4.03
    bad = []

    def tangency(name, f, grad_fn, points):
        for p in points:
            dev = oracle.finite_difference_check(f, grad_fn, np.asarray(p))
            if dev > 1e-5:
                bad.append(f"{name} gradient off by {dev:.2e}")
                return

    # plain tangents: value equality at 100 points plus gradient checks
    theta = RNG.uniform(1.0, 89.0, size=100)
    val, _ = sca.exp_decay_tangent(theta, b)
    if not np.allclose(val, np.exp(-b * theta), rtol=1e-5):
        bad.append("exp-decay tangent value")
    tangency("exp-decay", lambda v: np.exp(-b * v[0]),
             lambda v: np.array([sca.exp_decay_tangent(v[0], b)[1]]),
             theta[:, None])

    val, _ = sca.exp_growth_tangent(theta, b)
    if not np.allclose(val, np.exp(b * theta), rtol=1e-5):
        bad.append("exp-growth tangent value")
    tangency("exp-growth", lambda v: np.exp(b * v[0]),
             lambda v: np.array([sca.exp_growth_tangent(v[0], b)[1]]),
             theta[:, None])

    w = np.array([50.0, -20.0])
    zc = 40.0
    q_ref = RNG.uniform(-300, 300, size=(100, 2))
    val, _ = sca.distance_power_tangent_xy(q_ref, w, zc, alpha)
    truth = (np.sum((q_ref - w) ** 2, axis=1) + zc * zc) ** (0.5 * alpha)
    if not np.allclose(val, truth, rtol=1e-5):
        bad.append("xy-distance tangent value")
    tangency("xy-distance",
             lambda q: (np.sum((q - w) ** 2) + zc * zc) ** (0.5 * alpha),
             lambda q: sca.distance_power_tangent_xy(q, w, zc, alpha)[1],
             q_ref)

    r_ref = RNG.uniform(5.0, 400.0, size=100)
    z_ref = RNG.uniform(30.0, 100.0, size=100)
    val, _ = sca.distance_power_tangent_z(r_ref, z_ref, alpha)
    if not np.allclose(val, (r_ref**2 + z_ref**2) ** (0.5 * alpha),
                       rtol=1e-5):
        bad.append("z-distance tangent value")
    for k in range(100):
        dev = oracle.finite_difference_check(
            lambda v, k=k: (r_ref[k] ** 2 + v[0] ** 2) ** (0.5 * alpha),
            lambda v, k=k: np.array(
                [sca.distance_power_tangent_z(r_ref[k], v[0], alpha)[1]]),
            np.array([z_ref[k]]))
        if dev > 1e-5:
            bad.append(f"z-distance gradient off by {dev:.2e}")
            break

    val, _ = sca.elevation_tangent_range(r_ref, z_ref)
    if not np.allclose(val, np.arctan2(z_ref, r_ref), rtol=1e-5):
        bad.append("elevation-range tangent value")
    for k in range(100):
        dev = oracle.finite_difference_check(
            lambda v, k=k: np.arctan2(z_ref[k], v[0]),
            lambda v, k=k: np.array(
                [sca.elevation_tangent_range(v[0], z_ref[k])[1]]),
            np.array([r_ref[k]]))
        if dev > 1e-5:
            bad.append(f"elevation-range gradient off by {dev:.2e}")
            break

    val, _ = sca.elevation_tangent_altitude(r_ref, z_ref)
    if not np.allclose(val, np.arctan2(z_ref, r_ref), rtol=1e-5):
        bad.append("elevation-altitude tangent value")
    for k in range(100):
        dev = oracle.finite_difference_check(
            lambda v, k=k: np.arctan2(v[0], r_ref[k]),
            lambda v, k=k: np.array(
                [sca.elevation_tangent_altitude(r_ref[k], v[0])[1]]),
            np.array([z_ref[k]]))
        if dev > 1e-5:
            bad.append(f"elevation-altitude gradient off by {dev:.2e}")
            break

    lam_ref = RNG.uniform(0.2, 1.0, size=100)
    v_ref = RNG.uniform(-25, 25, size=(100, 2))
    val, _, _ = sca.induced_speed_tangent(lam_ref, v_ref, v0)
    if not np.allclose(val, lam_ref**2 + np.sum(v_ref**2, axis=1) / v0**2,
                       rtol=1e-5):
        bad.append("induced-speed tangent value")
    for k in range(100):
        dev = oracle.finite_difference_check(
            lambda p: p[0] ** 2 + (p[1] ** 2 + p[2] ** 2) / v0 ** 2,
            lambda p: np.concatenate(
                [[sca.induced_speed_tangent(p[0], p[1:], v0)[1]],
                 sca.induced_speed_tangent(p[0], p[1:], v0)[2]]),
            np.array([lam_ref[k], v_ref[k, 0], v_ref[k, 1]]))
        if dev > 1e-5:
            bad.append(f"induced-speed gradient off by {dev:.2e}")
            break

    pg = RNG.uniform(1e2, 1e6, size=100)
    x_ref = RNG.uniform(1.0, 20.0, size=100)
    t_ref = RNG.uniform(1e2, 1e7, size=100)
    val, dt, dx = sca.rate_slack_tangent(pg, x_ref, t_ref)
    if not np.allclose(val, sca.rate_slack_value(pg, x_ref, t_ref),
                       rtol=1e-5):
        bad.append("rate tangent value")
    for k in range(100):
        dev = oracle.finite_difference_check(
            lambda p, k=k: sca.rate_slack_value(pg[k], p[0], p[1]),
            lambda p, k=k: np.array(
                sca.rate_slack_tangent(pg[k], p[0], p[1])[:0:-1]),
            np.array([x_ref[k], t_ref[k]]))
        if dev > 1e-5:
            bad.append(f"rate gradient off by {dev:.2e}")
            break

    # global dominance for the lower-bounding tangents, 1000 samples each
    theta_s = RNG.uniform(0.0, 90.0, size=(1000, 1))
    v100, s100 = sca.exp_decay_tangent(theta, b)
    if not np.all(np.exp(-b * theta_s) - (v100 + s100 * (theta_s - theta))
                  >= -1e-9):
        bad.append("exp-decay dominance")
    v100, s100 = sca.exp_growth_tangent(theta, b)
    if not np.all(np.exp(b * theta_s) - (v100 + s100 * (theta_s - theta))
                  >= -1e-9):
        bad.append("exp-growth dominance")

    q_s = RNG.uniform(-400, 400, size=(1000, 2))
    v100, g100 = sca.distance_power_tangent_xy(q_ref, w, zc, alpha)
    true_q = (np.sum((q_s - w) ** 2, axis=1) + zc * zc) ** (0.5 * alpha)
    for k in range(100):
        tang = v100[k] + g100[k] @ (q_s - q_ref[k]).T
        if not np.all(true_q - tang >= -1e-8 * np.maximum(1.0, true_q)):
            bad.append("xy-distance dominance")
            break

    z_s = RNG.uniform(0.0, 150.0, size=(1000, 1))
    v100, s100 = sca.distance_power_tangent_z(r_ref, z_ref, alpha)
    true_z = (r_ref**2 + z_s**2) ** (0.5 * alpha)
    if not np.all(true_z - (v100 + s100 * (z_s - z_ref))
                  >= -1e-8 * np.maximum(1.0, true_z)):
        bad.append("z-distance dominance")

    lam_s = RNG.uniform(0.05, 1.5, size=1000)
    v_s = RNG.uniform(-30, 30, size=(1000, 2))
    v100, dl100, dv100 = sca.induced_speed_tangent(lam_ref, v_ref, v0)
    true_i = lam_s**2 + np.sum(v_s**2, axis=1) / v0**2
    for k in range(100):
        tang = (v100[k] + dl100[k] * (lam_s - lam_ref[k])
                + (v_s - v_ref[k]) @ dv100[k])
        if not np.all(true_i - tang >= -1e-10):
            bad.append("induced-speed dominance")
            break

    x_s = RNG.uniform(1.0, 30.0, size=1000)
    t_s = RNG.uniform(1e2, 1e8, size=1000)
    v100, dt100, dx100 = sca.rate_slack_tangent(pg, x_ref, t_ref)
    for k in range(100):
        tang = (v100[k] + dx100[k] * (x_s - x_ref[k])
                + dt100[k] * (t_s - t_ref[k]))
        if not np.all(sca.rate_slack_value(pg[k], x_s, t_s) - tang >= -1e-10):
            bad.append("rate dominance")
            break

    _verdict("surrogate tangency and dominance", not bad, "; ".join(bad))


# ---------------------------------------------------------------------------
# 7. rate-slack curvature is positive semidefinite
# ---------------------------------------------------------------------------


def test_rate_curvature_positive_semidefinite():
    n = 10_000
    pg = RNG.uniform(1e1, 1e7, size=n)
    x = RNG.uniform(0.5, 30.0, size=n)
    t = RNG.uniform(1e1, 1e8, size=n)
    hess = sca.rate_slack_hessian(pg, x, t)
    min_eig = float(np.linalg.eigvalsh(hess).min())

    h = 1e-4
    f = sca.rate_slack_value
    fd = np.empty_like(hess)
    fd[:, 0, 0] = (f(pg, x + h, t) - 2 * f(pg, x, t) + f(pg, x - h, t)) / h**2
    fd[:, 1, 1] = (f(pg, x, t + h) - 2 * f(pg, x, t) + f(pg, x, t - h)) / h**2
    cross = (f(pg, x + h, t + h) - f(pg, x + h, t - h)
             - f(pg, x - h, t + h) + f(pg, x - h, t - h)) / (4 * h**2)
    fd[:, 0, 1] = fd[:, 1, 0] = cross
    scale = np.maximum(1.0, np.abs(hess).max(axis=(1, 2)))
    worst_fd = float((np.abs(fd - hess).max(axis=(1, 2)) / scale).max())

    ok = min_eig >= -1e-9 and worst_fd < 1e-4
    _verdict("rate curvature positive semidefinite", ok,
             f"min eigenvalue {min_eig:.2e} over {n} triples, worst "
             f"finite-difference deviation {worst_fd:.2e}")


# ---------------------------------------------------------------------------
# 8. small instances match the exhaustive oracles
# ---------------------------------------------------------------------------


def _small_scenario(n_slots, users):
    with open(model.builtin_scenario_path()) as fh:
        data = json.load(fh)
    data["name"] = f"small-{n_slots}"
    data["mission"]["period_s"] = n_slots
    data["nodes"]["users_m"] = users
    return model.scenario_from_dict(data)


def test_small_instances_match_oracles():
    problems = []

    # scheduling: linear relaxation + snap == exhaustive enumeration
    rng = np.random.default_rng(11)
    sc3 = _small_scenario(3, [[150.0, 100.0], [260.0, 140.0], [210.0, 60.0]])
    worst_sched = 0.0
    for _ in range(8):
        q = rng.uniform(100, 300, size=(3, 2))
        q[-1] = q[0]
        z = np.full(3, 40.0)
        P = rng.uniform(0.01, 0.1, size=3)
        dv = model.DecisionVariables(
            A=np.full((3, 3), 1 / 3), P=P, q=q, z=z)
        dv.refresh(sc3)
        res = subproblems.solve_scheduling(dv, sc3)
        _, best = oracle.brute_force_schedule(
            model.rate_matrix(sc3, P, q, z))
        worst_sched = max(worst_sched,
                          abs(model.objective(res.dv, sc3) - best))
    if worst_sched > 1e-9:
        problems.append(f"scheduling off enumeration by {worst_sched:.2e}")

    # power: interior-point block within one 1e-3 W grid step of the oracle
    def power_gap(sc, q, z, p0):
        # p0 must be feasible: blocks expand around the BCD iterate
        dv = model.DecisionVariables(
            A=np.ones((1, len(z))), P=np.full(len(z), p0), q=q, z=z)
        dv.refresh(sc)
        res = subproblems.solve_power(dv, sc)
        geo_u = model.slot_geometry(sc, q, z)[0]
        snr = sc.cp.gamma / geo_u[1][0] ** sc.cp.alpha_los
        wts = channel.los_probability(geo_u[2][0], sc.cp)
        coeff = model.interference_watts(sc, np.ones(len(z)), q, z)
        caps = np.minimum(sc.tx_max_w, sc.interference_cap_w / coeff)
        p_star, grid_val = oracle.grid_search_power(
            wts, snr, sc.tx_max_w, sc.tx_ave_w, caps)
        solver_val = float(np.sum(wts * np.log2(1.0 + snr * res.dv.P)))
        return float(np.max(np.abs(res.dv.P - p_star))), solver_val, grid_val

    far = _small_scenario(3, [[200.0, 100.0]])
    near = _small_scenario(3, [[200.0, 340.0]])
    cases = [
        (far, np.array([[190.0, 95.0], [205.0, 110.0], [190.0, 95.0]]),
         np.full(3, 35.0), 0.05),
        (far, np.array([[150.0, 60.0], [205.0, 108.0], [240.0, 150.0]]),
         np.full(3, 35.0), 0.05),
        (near, np.tile(np.array([195.0, 345.0]), (3, 1)), np.full(3, 40.0),
         1e-3),
    ]
    worst_power = 0.0
    for scen, q, z, p0 in cases:
        gap, solver_val, grid_val = power_gap(scen, q, z, p0)
        worst_power = max(worst_power, gap)
        if solver_val < grid_val - 1e-6:
            problems.append(f"power block below the grid oracle "
                            f"({solver_val:.6f} < {grid_val:.6f})")
    if worst_power > 1e-3 + 1e-9:
        problems.append(f"power farther than one grid step from the oracle "
                        f"({worst_power:.2e} W)")

    _verdict("small instances match oracles", not problems,
             "; ".join(problems) if problems else
             f"scheduling gap {worst_sched:.1e}, power gap {worst_power:.1e} W")


# ---------------------------------------------------------------------------
# 9. hover identities are exact
# ---------------------------------------------------------------------------


def test_hover_identities(sc):
    rp = sc.rp
    hover = float(energy.horizontal_power(np.zeros(2), rp))
    descent = float(energy.vertical_power(-3.0, rp))
    still = float(energy.vertical_power(0.0, rp))
    ok = hover == rp.P0 + rp.P1 and descent == 0.0 and still == 0.0
    _verdict("hover identities exact", ok,
             f"hover {hover} W vs P0+P1 {rp.P0 + rp.P1} W, "
             f"descent {descent} W")
