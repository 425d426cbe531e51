"""Rotary-wing propulsion power: horizontal flight, climb, and budgets.

Horizontal flight at speed v costs

    P_hor(v) = P0 * (1 + 3 v^2 / U_tip^2)                    blade profile
             + 0.5 * d0 * rho * s * A * v^3                  fuselage parasite
             + P1 * sqrt( sqrt(1 + v^4 / (4 v0^4)) - v^2 / (2 v0^2) )   induced

and climbing at rate v_z > 0 costs W * v_z (descent is free).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class RotorcraftParams:
    """Airframe constants of the rotary-wing platform.

    P0, P1   blade-profile and induced hover power, watts
    U_tip    rotor tip speed, m/s
    v0       mean induced velocity in hover, m/s
    d0       fuselage drag ratio
    rho      air density, kg/m^3
    s        rotor solidity
    A        rotor disc area, m^2
    W        aircraft weight, newtons
    """

    P0: float = 79.86
    P1: float = 88.63
    U_tip: float = 120.0
    v0: float = 4.03
    d0: float = 0.6
    rho: float = 1.225
    s: float = 0.05
    A: float = 0.503
    W: float = 100.0

    def __post_init__(self) -> None:
        for name in ("P0", "P1", "U_tip", "v0", "rho", "s", "A", "W"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        if self.d0 <= 0:
            raise ValueError("d0 must be positive")

    @property
    def hover_power(self) -> float:
        """Power at v = 0, exactly P0 + P1."""
        return self.P0 + self.P1

    @property
    def parasite_coeff(self) -> float:
        """0.5 * d0 * rho * s * A, the v^3 coefficient."""
        return 0.5 * self.d0 * self.rho * self.s * self.A


def induced_factor(speed, rp: RotorcraftParams) -> np.ndarray:
    """sqrt( sqrt(1 + v^4/(4 v0^4)) - v^2/(2 v0^2) ), evaluated stably.

    The bracket equals 1 / (sqrt(1 + u^2) + u) with u = v^2 / (2 v0^2),
    which avoids the catastrophic cancellation of the printed form at
    high speed.  Equals 1 at v = 0 and decreases monotonically.
    """
    v = np.asarray(speed, dtype=float)
    u = v * v / (2.0 * rp.v0 * rp.v0)
    return np.sqrt(1.0 / (np.hypot(1.0, u) + u))


def horizontal_power(v_xy, rp: RotorcraftParams) -> np.ndarray:
    """Propulsion power for horizontal velocity rows, watts.

    Accepts a single 2-vector or an (M, 2) array; speeds may also be given
    directly as a scalar/1D array of magnitudes.
    """
    v = np.asarray(v_xy, dtype=float)
    if v.ndim >= 1 and v.shape[-1] == 2:
        speed = np.linalg.norm(v, axis=-1)
    else:
        speed = np.abs(v)
    blade = rp.P0 * (1.0 + 3.0 * speed**2 / rp.U_tip**2)
    parasite = rp.parasite_coeff * speed**3
    induced = rp.P1 * induced_factor(speed, rp)
    return blade + parasite + induced


def horizontal_power_gradient(v_xy, rp: RotorcraftParams) -> np.ndarray:
    """d P_hor / d v for 2-vector velocities (same shape as the input)."""
    v = np.atleast_2d(np.asarray(v_xy, dtype=float))
    speed = np.linalg.norm(v, axis=-1)
    u = speed**2 / (2.0 * rp.v0**2)
    root = np.hypot(1.0, u)
    lam = induced_factor(speed, rp)
    # dP/d(v) = [6 P0 / U^2 + 3 c_p |v| - P1 lam / (2 root v0^2)] * v
    coeff = 6.0 * rp.P0 / rp.U_tip**2 + 3.0 * rp.parasite_coeff * speed
    coeff = coeff - rp.P1 * lam / (2.0 * root * rp.v0**2)
    grad = coeff[..., None] * v
    return grad.reshape(np.shape(v_xy))


def vertical_power(v_z, rp: RotorcraftParams) -> np.ndarray:
    """Climb power W * max(v_z, 0); descent and hover cost exactly zero."""
    v = np.asarray(v_z, dtype=float)
    return rp.W * np.maximum(v, 0.0)


def induced_slack_exact(speed, rp: RotorcraftParams) -> np.ndarray:
    """The positive lambda solving 1/lambda^2 = lambda^2 + v^2/v0^2.

    Substituting it back, P1 * lambda reproduces the induced power term;
    the optimizer relaxes this equality into an inequality.
    """
    return induced_factor(speed, rp)


@dataclass(frozen=True)
class BudgetReport:
    """Average propulsion draw against the two budgets, watts."""

    hor_avg_w: float
    ver_avg_w: float
    hor_budget_w: float
    ver_budget_w: float

    @property
    def ok(self) -> bool:
        return self.hor_avg_w <= self.hor_budget_w and self.ver_avg_w <= self.ver_budget_w

    @property
    def hor_margin_w(self) -> float:
        return self.hor_budget_w - self.hor_avg_w

    @property
    def ver_margin_w(self) -> float:
        return self.ver_budget_w - self.ver_avg_w


def average_propulsion(v_xy, v_z, rp: RotorcraftParams, *, n_slots: int | None = None):
    """Mean horizontal and vertical power over the mission, watts.

    v_xy / v_z hold the M travel segments of the cyclic trajectory; with
    ``n_slots = M + 1`` (the default) the closing slot is charged hover
    power and zero climb power.
    """
    v_xy = np.atleast_2d(np.asarray(v_xy, dtype=float))
    v_z = np.atleast_1d(np.asarray(v_z, dtype=float))
    m = len(v_xy)
    if m == 0:
        raise ValueError("zero-length horizon")
    if len(v_z) != m:
        raise ValueError(f"dimension mismatch: {m} horizontal vs {len(v_z)} vertical rows")
    if n_slots is None:
        n_slots = m + 1
    if n_slots < m:
        raise ValueError("n_slots must cover every travel segment")
    hover_slots = n_slots - m
    hor_total = float(np.sum(horizontal_power(v_xy, rp))) + hover_slots * rp.hover_power
    ver_total = float(np.sum(vertical_power(v_z, rp)))
    return hor_total / n_slots, ver_total / n_slots


def budget_check(
    v_xy,
    v_z,
    rp: RotorcraftParams,
    hor_budget_w: float,
    ver_budget_w: float,
    *,
    n_slots: int | None = None,
) -> BudgetReport:
    """Check the average-power budgets for a velocity profile."""
    hor_avg, ver_avg = average_propulsion(v_xy, v_z, rp, n_slots=n_slots)
    return BudgetReport(
        hor_avg_w=hor_avg,
        ver_avg_w=ver_avg,
        hor_budget_w=hor_budget_w,
        ver_budget_w=ver_budget_w,
    )
