"""Problem data, decision variables, the exact objective, and the audit.

A mission is N slots of delta_t seconds.  The trajectory is cyclic: slot N
occupies the same position as slot 1, so there are N-1 distinct positions
joined by N-1 travel segments; the closing slot hovers.  The objective is
the mission-average scheduled lower-bound rate

    (1/N) sum_n sum_r A[r, n] * P_los * log2(1 + P[n] * gamma / d^alpha_los).
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field, replace
from importlib import resources
from typing import Literal

import numpy as np

from . import channel, energy
from .channel import AirPosition, ChannelParams, GroundNode
from .energy import RotorcraftParams

Mode = Literal["plos", "los"]

# Caps are tightened by this factor inside the optimizer so that every
# iterate keeps strictly-interior headroom for the next barrier solve; the
# audit checks the full caps.
HARDENING = 1.0 - 1e-6


class ScenarioError(ValueError):
    """Malformed or inconsistent scenario input."""


@dataclass(frozen=True)
class Scenario:
    """Static problem data (geometry, limits, channel, airframe)."""

    start: AirPosition
    users: tuple[GroundNode, ...]
    primary: GroundNode
    period_s: float
    slot_s: float
    altitude_min_m: float
    altitude_max_m: float
    speed_max_mps: float
    climb_max_mps: float
    accel_max_mps2: float
    tx_max_w: float
    tx_ave_w: float
    interference_cap_w: float
    propulsion_hor_ave_w: float
    propulsion_ver_ave_w: float
    cp: ChannelParams
    rp: RotorcraftParams
    epsilon: float = 1e-4
    max_outer_iters: int = 50
    climb_accel_max_mps2: float | None = None

    def __post_init__(self) -> None:
        n_float = self.period_s / self.slot_s
        if abs(n_float - round(n_float)) > 1e-9:
            raise ScenarioError("period_s must be an integer number of slots")
        if round(n_float) < 2:
            raise ScenarioError("need at least two slots")
        if not self.users:
            raise ScenarioError("need at least one user")
        if not (0.0 < self.altitude_min_m <= self.altitude_max_m):
            raise ScenarioError("bad altitude band")
        if not (self.altitude_min_m <= self.start.z <= self.altitude_max_m):
            raise ScenarioError("start altitude outside the allowed band")
        if not (0.0 < self.tx_ave_w <= self.tx_max_w):
            raise ScenarioError("need 0 < tx_ave_w <= tx_max_w")
        for name in ("speed_max_mps", "climb_max_mps", "accel_max_mps2",
                     "interference_cap_w", "propulsion_hor_ave_w",
                     "propulsion_ver_ave_w", "epsilon"):
            if getattr(self, name) <= 0:
                raise ScenarioError(f"{name} must be positive")

    @property
    def n_slots(self) -> int:
        return int(round(self.period_s / self.slot_s))

    @property
    def n_users(self) -> int:
        return len(self.users)

    @property
    def users_xy(self) -> np.ndarray:
        return np.array([u.xy for u in self.users], dtype=float)

    @property
    def primary_xy(self) -> np.ndarray:
        return self.primary.xy

    def with_overrides(self, **kwargs) -> "Scenario":
        return replace(self, **kwargs)


# ---------------------------------------------------------------------------
# Scenario file IO
# ---------------------------------------------------------------------------


def _get(section: dict, key: str, where: str):
    try:
        return section[key]
    except (KeyError, TypeError) as exc:
        raise ScenarioError(f"scenario missing {where}.{key}") from exc


def scenario_from_dict(data: dict) -> Scenario:
    if not isinstance(data, dict):
        raise ScenarioError("scenario root must be an object")
    if data.get("schema") != 1:
        raise ScenarioError("unsupported scenario schema (need schema=1)")
    nodes = _get(data, "nodes", "root")
    mission = _get(data, "mission", "root")
    power = _get(data, "power", "root")
    chan = _get(data, "channel", "root")
    rotor = data.get("rotorcraft", {})
    algo = data.get("algorithm", {})

    start = _get(nodes, "start_position_m", "nodes")
    if len(start) != 3:
        raise ScenarioError("nodes.start_position_m must be [x, y, z]")
    users_raw = _get(nodes, "users_m", "nodes")
    pu = _get(nodes, "primary_user_m", "nodes")

    cap_db = float(_get(power, "interference_cap_db", "power"))
    cap_ref = power.get("interference_cap_ref", "dBW")
    if cap_ref == "dBW":
        cap_w = channel.db_to_linear(cap_db)
    elif cap_ref == "dBm":
        cap_w = channel.dbm_to_watts(cap_db)
    else:
        raise ScenarioError("power.interference_cap_ref must be 'dBW' or 'dBm'")

    cp = ChannelParams.from_db(
        a=float(_get(chan, "plos_a", "channel")),
        b=float(_get(chan, "plos_b_per_deg", "channel")),
        rho0_db=float(_get(chan, "ref_gain_db", "channel")),
        mu_db=float(_get(chan, "nlos_extra_db", "channel")),
        alpha_los=float(_get(chan, "pathloss_exp_los", "channel")),
        alpha_nlos=float(_get(chan, "pathloss_exp_nlos", "channel")),
        noise_dbm=float(_get(chan, "noise_dbm", "channel")),
    )
    rp_defaults = RotorcraftParams()
    rp = RotorcraftParams(
        P0=float(rotor.get("blade_profile_power_w", rp_defaults.P0)),
        P1=float(rotor.get("induced_power_w", rp_defaults.P1)),
        U_tip=float(rotor.get("tip_speed_mps", rp_defaults.U_tip)),
        v0=float(rotor.get("induced_velocity_hover_mps", rp_defaults.v0)),
        d0=float(rotor.get("fuselage_drag_ratio", rp_defaults.d0)),
        rho=float(rotor.get("air_density_kgpm3", rp_defaults.rho)),
        s=float(rotor.get("rotor_solidity", rp_defaults.s)),
        A=float(rotor.get("rotor_disc_area_m2", rp_defaults.A)),
        W=float(rotor.get("weight_n", rp_defaults.W)),
    )
    climb_acc = mission.get("climb_accel_max_mps2")
    try:
        return Scenario(
            start=AirPosition(float(start[0]), float(start[1]), float(start[2])),
            users=tuple(
                GroundNode(float(u[0]), float(u[1]), kind="cognitive-user") for u in users_raw
            ),
            primary=GroundNode(float(pu[0]), float(pu[1]), kind="primary-user"),
            period_s=float(_get(mission, "period_s", "mission")),
            slot_s=float(_get(mission, "slot_s", "mission")),
            altitude_min_m=float(_get(mission, "altitude_min_m", "mission")),
            altitude_max_m=float(_get(mission, "altitude_max_m", "mission")),
            speed_max_mps=float(_get(mission, "speed_max_mps", "mission")),
            climb_max_mps=float(_get(mission, "climb_rate_max_mps", "mission")),
            accel_max_mps2=float(_get(mission, "accel_max_mps2", "mission")),
            tx_max_w=float(_get(power, "tx_max_w", "power")),
            tx_ave_w=float(_get(power, "tx_ave_w", "power")),
            interference_cap_w=cap_w,
            propulsion_hor_ave_w=float(_get(power, "propulsion_hor_ave_w", "power")),
            propulsion_ver_ave_w=float(_get(power, "propulsion_ver_ave_w", "power")),
            cp=cp,
            rp=rp,
            epsilon=float(algo.get("convergence_epsilon", 1e-4)),
            max_outer_iters=int(algo.get("max_outer_iterations", 50)),
            climb_accel_max_mps2=None if climb_acc is None else float(climb_acc),
        )
    except (TypeError, IndexError) as exc:
        raise ScenarioError(f"malformed scenario value: {exc}") from exc


def load_scenario(path: str) -> Scenario:
    with open(path, "r", encoding="utf-8") as fh:
        try:
            data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ScenarioError(f"{path}: invalid JSON at line {exc.lineno}: {exc.msg}") from exc
    return scenario_from_dict(data)


def builtin_scenario_path() -> str:
    """Path of the bundled reference scenario (desk scale, four users)."""
    return str(resources.files("aircrn").joinpath(
        "data/desk_scale_four_users.json"))


def load_builtin_scenario() -> Scenario:
    return load_scenario(builtin_scenario_path())


def scenario_digest(source) -> str:
    """sha256 over the canonicalized scenario content.

    Accepts a Scenario, a parsed dict, or a JSON file path; a Scenario is
    canonicalized through its physical fields so equal scenarios loaded
    from differently formatted files digest identically.
    """
    if isinstance(source, Scenario):
        payload = {
            "start": [source.start.x, source.start.y, source.start.z],
            "users": [[u.x, u.y] for u in source.users],
            "primary": [source.primary.x, source.primary.y],
            "period_s": source.period_s,
            "slot_s": source.slot_s,
            "altitude_m": [source.altitude_min_m, source.altitude_max_m],
            "speed_max_mps": source.speed_max_mps,
            "climb_max_mps": source.climb_max_mps,
            "accel_max_mps2": source.accel_max_mps2,
            "climb_accel_max_mps2": source.climb_accel_max_mps2,
            "tx_w": [source.tx_max_w, source.tx_ave_w],
            "interference_cap_w": source.interference_cap_w,
            "propulsion_ave_w": [source.propulsion_hor_ave_w,
                                 source.propulsion_ver_ave_w],
            "channel": [source.cp.a, source.cp.b, source.cp.rho0,
                        source.cp.mu, source.cp.alpha_los,
                        source.cp.alpha_nlos, source.cp.sigma2],
            "rotorcraft": [source.rp.P0, source.rp.P1, source.rp.U_tip,
                           source.rp.v0, source.rp.d0, source.rp.rho,
                           source.rp.s, source.rp.A, source.rp.W],
            "algorithm": [source.epsilon, source.max_outer_iters],
        }
    elif isinstance(source, dict):
        return scenario_digest(scenario_from_dict(source))
    else:
        return scenario_digest(load_scenario(source))
    canon = json.dumps(payload, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canon.encode()).hexdigest()


# ---------------------------------------------------------------------------
# Decision variables
# ---------------------------------------------------------------------------


@dataclass
class DecisionVariables:
    """One full iterate: schedule, powers, positions, and derived kinematics.

    q[n]/z[n] are per-slot positions with the cyclic pin q[N-1] = q[0],
    z[N-1] = z[0].  v_xy/v_z hold the N-1 travel segments (row m joins
    positions m and m+1); the closing slot hovers.  theta_* are the exact
    elevation angles recomputed from geometry, in degrees.
    """

    A: np.ndarray          # (R, N) scheduling weights
    P: np.ndarray          # (N,) transmit power, watts
    q: np.ndarray          # (N, 2) horizontal positions, meters
    z: np.ndarray          # (N,) altitudes, meters
    v_xy: np.ndarray = field(default=None)  # (N-1, 2)
    v_z: np.ndarray = field(default=None)   # (N-1,)
    theta_users: np.ndarray = field(default=None)  # (R, N) degrees
    theta_d: np.ndarray = field(default=None)      # (N,) degrees
    phi_d: np.ndarray = field(default=None)        # (N,) degrees (== theta_d)

    def copy(self) -> "DecisionVariables":
        dv = DecisionVariables(
            A=self.A.copy(), P=self.P.copy(), q=self.q.copy(), z=self.z.copy()
        )
        dv.v_xy = None if self.v_xy is None else self.v_xy.copy()
        dv.v_z = None if self.v_z is None else self.v_z.copy()
        dv.theta_users = None if self.theta_users is None else self.theta_users.copy()
        dv.theta_d = None if self.theta_d is None else self.theta_d.copy()
        dv.phi_d = None if self.phi_d is None else self.phi_d.copy()
        return dv

    def refresh_kinematics(self, sc: Scenario) -> None:
        self.q[-1] = self.q[0]
        self.z[-1] = self.z[0]
        self.v_xy = np.diff(self.q, axis=0) / sc.slot_s
        self.v_z = np.diff(self.z) / sc.slot_s

    def refresh_angles(self, sc: Scenario) -> None:
        r_users = np.linalg.norm(self.q[None, :, :] - sc.users_xy[:, None, :], axis=-1)
        self.theta_users = channel.elevation_deg(r_users, self.z[None, :])
        r_d = np.linalg.norm(self.q - sc.primary_xy[None, :], axis=-1)
        self.theta_d = channel.elevation_deg(r_d, self.z)
        self.phi_d = self.theta_d.copy()

    def refresh(self, sc: Scenario) -> None:
        self.refresh_kinematics(sc)
        self.refresh_angles(sc)


def slot_geometry(sc: Scenario, q: np.ndarray, z: np.ndarray):
    """Per-slot ranges/angles/distances for users and the protected receiver.

    Returns (r_users, d_users, theta_users) with shape (R, N) and
    (r_d, d_d, theta_d) with shape (N,).
    """
    r_users = np.linalg.norm(q[None, :, :] - sc.users_xy[:, None, :], axis=-1)
    d_users = channel.slant_distance(r_users, z[None, :])
    theta_users = channel.elevation_deg(r_users, np.broadcast_to(z, r_users.shape))
    r_d = np.linalg.norm(q - sc.primary_xy[None, :], axis=-1)
    d_d = channel.slant_distance(r_d, z)
    theta_d = channel.elevation_deg(r_d, z)
    return (r_users, d_users, theta_users), (r_d, d_d, theta_d)


def rate_matrix(sc: Scenario, P: np.ndarray, q: np.ndarray, z: np.ndarray,
                mode: Mode = "plos") -> np.ndarray:
    """(R, N) scheduled-rate coefficients under the planning model."""
    (_, d_users, theta_users), _ = slot_geometry(sc, q, z)
    los = channel.rate(P[None, :], d_users, channel.LOS, sc.cp)
    if mode == "los":
        return los
    return channel.los_probability(theta_users, sc.cp) * los


def interference_watts(sc: Scenario, P: np.ndarray, q: np.ndarray, z: np.ndarray,
                       mode: Mode = "plos") -> np.ndarray:
    """(N,) expected interference at the protected receiver, watts."""
    _, (r_d, d_d, theta_d) = slot_geometry(sc, q, z)
    return channel.expected_interference(P, d_d, theta_d, sc.cp, los_only=(mode == "los"))


def objective(dv: DecisionVariables, sc: Scenario, mode: Mode = "plos") -> float:
    """Mission-average scheduled rate, bit/s/Hz."""
    rates = rate_matrix(sc, dv.P, dv.q, dv.z, mode)
    return float(np.sum(dv.A * rates) / sc.n_slots)


# ---------------------------------------------------------------------------
# Feasibility audit
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class AuditEntry:
    """Worst signed violation of one constraint family.

    ``residual`` is in the family's physical units (positive = violated);
    ``scaled`` divides by the family's natural scale and drives the
    feasible flag.
    """

    family: str
    residual: float
    scaled: float


@dataclass(frozen=True)
class AuditReport:
    entries: tuple[AuditEntry, ...]
    tol: float

    @property
    def feasible(self) -> bool:
        return all(e.scaled <= self.tol for e in self.entries)

    @property
    def max_scaled(self) -> float:
        return max(e.scaled for e in self.entries)

    @property
    def worst(self) -> AuditEntry:
        return max(self.entries, key=lambda e: e.scaled)

    def entry(self, family: str) -> AuditEntry:
        for e in self.entries:
            if e.family == family:
                return e
        raise KeyError(family)

    def violations(self) -> list[AuditEntry]:
        return [e for e in self.entries if e.scaled > self.tol]


def feasibility_audit(dv: DecisionVariables, sc: Scenario, tol: float = 1e-6,
                      mode: Mode = "plos") -> AuditReport:
    """Audit every constraint family of the planning problem.

    Families and scales:  scheduling simplex/box (1), power box and average
    (tx_ave), speed/climb (their caps), acceleration (cap), altitude band
    (meters), cyclic closure (meters), propulsion budgets (budget watts),
    interference (cap watts).
    """
    n = sc.n_slots
    dt = sc.slot_s
    entries: list[AuditEntry] = []

    def add(family: str, residual: float, scale: float = 1.0) -> None:
        entries.append(AuditEntry(family, float(residual), float(residual / scale)))

    a = dv.A
    add("schedule-box-low", float(np.max(-a)))
    add("schedule-box-high", float(np.max(a - 1.0)))
    add("schedule-simplex", float(np.max(np.sum(a, axis=0) - 1.0)))

    add("power-box-low", float(np.max(-dv.P)), sc.tx_max_w)
    add("power-box-high", float(np.max(dv.P - sc.tx_max_w)), sc.tx_max_w)
    add("power-average", float(np.mean(dv.P) - sc.tx_ave_w), sc.tx_ave_w)

    add("cyclic-horizontal", float(np.linalg.norm(dv.q[-1] - dv.q[0])))
    add("cyclic-vertical", float(abs(dv.z[-1] - dv.z[0])))

    v_xy = np.diff(dv.q, axis=0) / dt
    v_z = np.diff(dv.z) / dt
    speed = np.linalg.norm(v_xy, axis=-1)
    add("speed", float(np.max(speed) - sc.speed_max_mps), sc.speed_max_mps)
    add("climb-rate", float(np.max(np.abs(v_z)) - sc.climb_max_mps), sc.climb_max_mps)
    if len(v_xy) >= 2:
        acc = np.linalg.norm(np.diff(v_xy, axis=0), axis=-1) / dt
        add("acceleration", float(np.max(acc) - sc.accel_max_mps2), sc.accel_max_mps2)
    if sc.climb_accel_max_mps2 is not None and len(v_z) >= 2:
        acc_z = np.abs(np.diff(v_z)) / dt
        add("climb-acceleration", float(np.max(acc_z) - sc.climb_accel_max_mps2),
            sc.climb_accel_max_mps2)

    add("altitude-low", float(np.max(sc.altitude_min_m - dv.z)))
    add("altitude-high", float(np.max(dv.z - sc.altitude_max_m)))

    hor_avg, ver_avg = energy.average_propulsion(v_xy, v_z, sc.rp, n_slots=n)
    add("propulsion-horizontal", hor_avg - sc.propulsion_hor_ave_w, sc.propulsion_hor_ave_w)
    add("propulsion-vertical", ver_avg - sc.propulsion_ver_ave_w, sc.propulsion_ver_ave_w)

    interf = interference_watts(sc, dv.P, dv.q, dv.z, mode)
    add("interference", float(np.max(interf) - sc.interference_cap_w), sc.interference_cap_w)

    return AuditReport(entries=tuple(entries), tol=tol)


# ---------------------------------------------------------------------------
# Initial solution
# ---------------------------------------------------------------------------


def init_circle(sc: Scenario) -> tuple[np.ndarray, float]:
    """Center and radius of the deterministic starting loop.

    The center is the user centroid; the radius is capped by the speed
    bound (chord-exact for the N-1 cyclic segments) and by the nearest
    user distance so at least one user is overflown closely.
    """
    c = sc.users_xy.mean(axis=0)
    m = sc.n_slots - 1
    if m >= 2:
        speed_cap = sc.speed_max_mps * sc.slot_s / (2.0 * np.sin(np.pi / m))
    else:
        speed_cap = 0.0
    user_cap = float(np.min(np.linalg.norm(c - sc.users_xy, axis=1)))
    return c, float(min(speed_cap, user_cap))


def init_solution(sc: Scenario, *, mode: Mode = "plos",
                  radius_scale: float = 1.0) -> DecisionVariables:
    """Feasible deterministic starting point.

    A constant-altitude circular loop around the user centroid, traversed
    at constant speed, phased so slot 1 sits nearest the start position;
    uniform scheduling; transmit power at the average cap, reduced per
    slot where the interference cap binds.
    """
    n = sc.n_slots
    m = n - 1
    r_count = sc.n_users
    center, radius = init_circle(sc)
    radius *= radius_scale

    phase = float(np.arctan2(sc.start.y - center[1], sc.start.x - center[0]))
    angles = phase + 2.0 * np.pi * np.arange(m) / m
    q = np.empty((n, 2), dtype=float)
    q[:m, 0] = center[0] + radius * np.cos(angles)
    q[:m, 1] = center[1] + radius * np.sin(angles)
    q[-1] = q[0]
    z = np.full(n, float(sc.start.z))

    a = np.full((r_count, n), 1.0 / r_count)
    coeff = channel.interference_coefficient(
        np.linalg.norm(q - sc.primary_xy[None, :], axis=-1), z, sc.cp,
        los_only=(mode == "los"))
    cap = HARDENING * sc.interference_cap_w / coeff
    p = np.minimum(np.minimum(np.full(n, sc.tx_ave_w), cap), sc.tx_max_w)

    dv = DecisionVariables(A=a, P=p, q=q, z=z)
    dv.refresh(sc)
    report = feasibility_audit(dv, sc, mode=mode)
    if not report.feasible:
        worst = report.worst
        raise ScenarioError(
            f"constructed start violates {worst.family} by {worst.residual:.3e}"
        )
    return dv


# ---------------------------------------------------------------------------
# Iteration records
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class IterationRecord:
    """One outer iteration: objective after each block plus diagnostics."""

    index: int
    objective: float
    block_objectives: dict[str, float]
    max_residual: float
    wall_time_s: float
