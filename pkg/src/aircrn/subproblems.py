"""Builders translating each coordinate block into a solver program.

Block order inside one outer iteration: scheduling -> transmit power ->
horizontal positions -> altitudes.  Every builder

  * expands the nonlinear terms at the current iterate (slacks seeded
    exactly tight there, then retreated by ~1e-8 so the barrier solve
    starts strictly interior),
  * hands the solver a linear-objective program whose rows are global
    restrictions of the true feasible set (the one exception is the
    exact-elevation floor for the protected receiver in the horizontal
    block, which is mildly nonconvex and left raw),
  * decodes the solution and accepts it only if the exactly recomputed
    objective does not decrease.

Interference is enforced in watts: P * rho0 * (P_los/d^aL + (1-P_los)*
mu/d^aN) <= Gamma, via reciprocal slack rows 1/(p*t).  Caps handled by
the optimizer (interference, both propulsion budgets) are tightened by a
relative 1e-6 so follow-up solves keep strictly-interior headroom; when
a previous block left a cap binding, the row's bound is loosened just
enough to readmit the start, never beyond cap*(1-1e-7).
"""

from __future__ import annotations

import numpy as np
from dataclasses import dataclass, field

from . import channel, model, sca
from .model import HARDENING, DecisionVariables, Mode, Scenario
from .solver import (AffineBlock, ConstraintBlock, SmoothProgram, SolveStatus,
                     solve)

_DEG = 180.0 / np.pi
_EPS_NORM2 = 1e-18          # quadratic smoothing of norms at the origin
_RETREAT = 1e-8             # relative slack retreat for barrier starts
_PAIR_WEIGHT_MIN = 1e-12    # scheduling weight below which a pair is dropped
_CAP_CEILING = 1.0 - 1e-7   # cap accommodation never exceeds cap * this
_ACCEPT_TOL = 1e-9


@dataclass
class SlackBlock:
    """Slack values of one trajectory subproblem, for diagnostics/tests.

    ``initial`` entries are exactly tight at the expansion point;
    ``solved`` holds the solver's values.
    """

    initial: dict = field(default_factory=dict)
    solved: dict = field(default_factory=dict)


@dataclass
class BlockResult:
    dv: DecisionVariables
    objective: float
    accepted: bool
    status: SolveStatus | None = None
    surrogate_objective: float | None = None
    slacks: SlackBlock | None = None
    message: str = ""


# ---------------------------------------------------------------------------
# Row classes (value / gradient / Hessian oracles)
# ---------------------------------------------------------------------------


def _smooth_norm(delta: np.ndarray) -> np.ndarray:
    return np.sqrt(np.sum(delta * delta, axis=-1) + _EPS_NORM2)


class ExpOfRangeRows(ConstraintBlock):
    """1 + K*exp(a0 + a1*||u - w||) - x <= 0   (vars: ux, uy, x).

    The exponent is the user-elevation tangent folded into the LoS
    denominator; a1 > 0 keeps the row convex.
    """

    def __init__(self, idx, w_xy, k_coeff, a0, a1, scale, name="los-floor"):
        super().__init__(idx, scale=scale, name=name)
        self.w_xy = np.asarray(w_xy, float)
        self.k = np.asarray(k_coeff, float)
        self.a0 = np.asarray(a0, float)
        self.a1 = np.asarray(a1, float)

    def _parts(self, xw):
        delta = xw[:, 0:2] - self.w_xy
        r = _smooth_norm(delta)
        e = self.k * np.exp(self.a0 + self.a1 * r)
        return delta, r, e

    def values(self, xw):
        _, _, e = self._parts(xw)
        return 1.0 + e - xw[:, 2]

    def grads(self, xw):
        delta, r, e = self._parts(xw)
        g = np.empty_like(xw)
        g[:, 0:2] = (e * self.a1 / r)[:, None] * delta
        g[:, 2] = -1.0
        return g

    def hessians(self, xw):
        delta, r, e = self._parts(xw)
        n = delta / r[:, None]
        nn = n[:, :, None] * n[:, None, :]
        eye = np.eye(2)[None, :, :]
        h_u = e[:, None, None] * (
            (self.a1 ** 2)[:, None, None] * nn
            + (self.a1 / r)[:, None, None] * (eye - nn)
        )
        h = np.zeros((self.m, 3, 3))
        h[:, 0:2, 0:2] = h_u
        return h


class SlantPowerRangeRows(ConstraintBlock):
    """(||u - w||^2 + z^2)^(alpha/2) - t <= 0   (vars: ux, uy, t)."""

    def __init__(self, idx, w_xy, z, alpha, scale, name="slant-power-floor"):
        super().__init__(idx, scale=scale, name=name)
        self.w_xy = np.asarray(w_xy, float)
        self.z2 = np.square(np.asarray(z, float))
        self.alpha = float(alpha)

    def _d2(self, xw):
        delta = xw[:, 0:2] - self.w_xy
        return delta, np.sum(delta * delta, axis=-1) + self.z2

    def values(self, xw):
        _, d2 = self._d2(xw)
        return np.power(d2, 0.5 * self.alpha) - xw[:, 2]

    def grads(self, xw):
        delta, d2 = self._d2(xw)
        g = np.empty_like(xw)
        g[:, 0:2] = (self.alpha * np.power(d2, 0.5 * self.alpha - 1.0))[:, None] * delta
        g[:, 2] = -1.0
        return g

    def hessians(self, xw):
        delta, d2 = self._d2(xw)
        a = self.alpha
        lead = a * np.power(d2, 0.5 * a - 1.0)
        quad = a * (a - 2.0) * np.power(d2, 0.5 * a - 2.0)
        h = np.zeros((self.m, 3, 3))
        h[:, 0:2, 0:2] = (lead[:, None, None] * np.eye(2)[None]
                          + quad[:, None, None] * delta[:, :, None] * delta[:, None, :])
        return h


class LosCapArctanRows(ConstraintBlock):
    """p - d0 + d1*(180/pi)*arctan(z/||u - w||) <= 0   (vars: ux, uy, p).

    Exact elevation of the protected receiver folded into the LoS-
    probability cap; the only nonconvex row in the whole pipeline.
    """

    def __init__(self, idx, w_xy, z, d0, d1, scale, name="los-cap"):
        super().__init__(idx, scale=scale, name=name)
        self.w_xy = np.asarray(w_xy, float)
        self.z = np.asarray(z, float)
        self.d0 = np.asarray(d0, float)
        self.d1 = np.asarray(d1, float)

    def _parts(self, xw):
        delta = xw[:, 0:2] - self.w_xy
        r = _smooth_norm(delta)
        return delta, r, r * r + self.z * self.z

    def values(self, xw):
        _, r, _ = self._parts(xw)
        theta = _DEG * np.arctan2(self.z, r)
        return xw[:, 2] - self.d0 + self.d1 * theta

    def grads(self, xw):
        delta, r, d2 = self._parts(xw)
        g = np.empty_like(xw)
        coeff = -_DEG * self.d1 * self.z / (r * d2)
        g[:, 0:2] = coeff[:, None] * delta
        g[:, 2] = 1.0
        return g

    def hessians(self, xw):
        delta, r, d2 = self._parts(xw)
        n = delta / r[:, None]
        nn = n[:, :, None] * n[:, None, :]
        eye = np.eye(2)[None]
        g2 = 2.0 * self.z * r / (d2 * d2)          # arctan radial curvature
        g1 = -self.z / d2
        h_u = (_DEG * self.d1)[:, None, None] * (
            g2[:, None, None] * nn + (g1 / r)[:, None, None] * (eye - nn)
        )
        h = np.zeros((self.m, 3, 3))
        h[:, 0:2, 0:2] = h_u
        return h


class NlosCapRangeRows(ConstraintBlock):
    """p - g0 - g1*||u - w|| <= 0 with g1 < 0   (vars: ux, uy, p)."""

    def __init__(self, idx, w_xy, g0, g1, scale, name="nlos-cap"):
        super().__init__(idx, scale=scale, name=name)
        self.w_xy = np.asarray(w_xy, float)
        self.g0 = np.asarray(g0, float)
        self.g1 = np.asarray(g1, float)

    def values(self, xw):
        r = _smooth_norm(xw[:, 0:2] - self.w_xy)
        return xw[:, 2] - self.g0 - self.g1 * r

    def grads(self, xw):
        delta = xw[:, 0:2] - self.w_xy
        r = _smooth_norm(delta)
        g = np.empty_like(xw)
        g[:, 0:2] = (-self.g1 / r)[:, None] * delta
        g[:, 2] = 1.0
        return g

    def hessians(self, xw):
        delta = xw[:, 0:2] - self.w_xy
        r = _smooth_norm(delta)
        n = delta / r[:, None]
        nn = n[:, :, None] * n[:, None, :]
        h = np.zeros((self.m, 3, 3))
        h[:, 0:2, 0:2] = (-self.g1 / r)[:, None, None] * (np.eye(2)[None] - nn)
        return h


class ReciprocalInterferenceRows(ConstraintBlock):
    """c1/(p1*t1) + c2/(p2*t2) - cap <= 0   (vars: p1, t1, p2, t2)."""

    def __init__(self, idx, c1, c2, cap, scale, name="interference"):
        super().__init__(idx, scale=scale, name=name)
        self.c1 = np.asarray(c1, float)
        self.c2 = np.asarray(c2, float)
        self.cap = np.asarray(cap, float)

    def values(self, xw):
        return (self.c1 / (xw[:, 0] * xw[:, 1])
                + self.c2 / (xw[:, 2] * xw[:, 3]) - self.cap)

    def grads(self, xw):
        p1, t1, p2, t2 = xw.T
        g = np.empty_like(xw)
        g[:, 0] = -self.c1 / (p1 * p1 * t1)
        g[:, 1] = -self.c1 / (p1 * t1 * t1)
        g[:, 2] = -self.c2 / (p2 * p2 * t2)
        g[:, 3] = -self.c2 / (p2 * t2 * t2)
        return g

    def hessians(self, xw):
        p1, t1, p2, t2 = xw.T
        h = np.zeros((self.m, 4, 4))
        h[:, 0, 0] = 2.0 * self.c1 / (p1 ** 3 * t1)
        h[:, 1, 1] = 2.0 * self.c1 / (p1 * t1 ** 3)
        h[:, 0, 1] = h[:, 1, 0] = self.c1 / (p1 * p1 * t1 * t1)
        h[:, 2, 2] = 2.0 * self.c2 / (p2 ** 3 * t2)
        h[:, 3, 3] = 2.0 * self.c2 / (p2 * t2 ** 3)
        h[:, 2, 3] = h[:, 3, 2] = self.c2 / (p2 * p2 * t2 * t2)
        return h


class InducedSlackRows(ConstraintBlock):
    """1/lam^2 <= tangent of lam^2 + ||v||^2/v0^2  (vars: lam, um, unext).

    v = (u_next - u_m)/dt; the tangent keeps the exact induced-speed
    relation valid at every feasible point.
    """

    def __init__(self, idx, lam_ref, v_ref, v0, dt, name="induced-slack"):
        super().__init__(idx, scale=1.0, name=name)
        lam_ref = np.asarray(lam_ref, float)
        v_ref = np.asarray(v_ref, float)
        self.lam_lin = 2.0 * lam_ref
        self.u_lin = (2.0 / (v0 * v0 * dt)) * v_ref          # (m, 2)
        self.const = (lam_ref * lam_ref
                      + np.sum(v_ref * v_ref, axis=-1) / (v0 * v0))

    def values(self, xw):
        lam = xw[:, 0]
        du = xw[:, 3:5] - xw[:, 1:3]
        tangent = (self.const + self.lam_lin * (lam - 0.5 * self.lam_lin)
                   + np.sum(self.u_lin * du, axis=-1)
                   - np.sum(self.u_lin * self._du_ref, axis=-1))
        return 1.0 / (lam * lam) - tangent

    def set_reference_displacement(self, du_ref):
        # displacement u_next - u_m at the expansion point
        self._du_ref = np.asarray(du_ref, float)

    def grads(self, xw):
        lam = xw[:, 0]
        g = np.empty_like(xw)
        g[:, 0] = -2.0 / lam ** 3 - self.lam_lin
        g[:, 1:3] = self.u_lin
        g[:, 3:5] = -self.u_lin
        return g

    def hessians(self, xw):
        h = np.zeros((self.m, 5, 5))
        h[:, 0, 0] = 6.0 / xw[:, 0] ** 4
        return h


class HorizontalBudgetRow(ConstraintBlock):
    """Mission-average horizontal propulsion <= cap (single dense row).

    Vars: [u interleaved (2M), lam (M)].  Hover slots enter as an exact
    constant.  The cube of speed is smoothed at the origin.
    """

    def __init__(self, idx, n_slots, dt, rp, hover_slots, cap, scale):
        super().__init__(idx.reshape(1, -1), scale=scale, name="hor-budget")
        self.n = n_slots
        self.dt = dt
        self.rp = rp
        self.m_seg = (idx.size - 0) // 3
        self.const = hover_slots * rp.hover_power / n_slots
        self.cap = cap

    def _velocities(self, xw):
        m = self.m_seg
        u = xw[0, : 2 * m].reshape(m, 2)
        v = (np.roll(u, -1, axis=0) - u) / self.dt
        return u, v, xw[0, 2 * m:]

    def values(self, xw):
        _, v, lam = self._velocities(xw)
        sp2 = np.sum(v * v, axis=-1)
        sp_s = np.sqrt(sp2 + _EPS_NORM2)
        rp = self.rp
        total = np.sum(rp.P0 * (1.0 + 3.0 * sp2 / rp.U_tip ** 2)
                       + rp.parasite_coeff * sp_s ** 3 + rp.P1 * lam)
        return np.array([total / self.n + self.const - self.cap])

    def grads(self, xw):
        _, v, lam = self._velocities(xw)
        m = self.m_seg
        rp = self.rp
        sp_s = np.sqrt(np.sum(v * v, axis=-1) + _EPS_NORM2)
        dv = (6.0 * rp.P0 / rp.U_tip ** 2 + 3.0 * rp.parasite_coeff * sp_s)[:, None] * v
        du = np.zeros((m, 2))
        du += -dv / self.dt
        du += np.roll(dv, 1, axis=0) / self.dt
        g = np.empty((1, xw.shape[1]))
        g[0, : 2 * m] = du.ravel() / self.n
        g[0, 2 * m:] = rp.P1 / self.n
        return g

    def hessians(self, xw):
        _, v, _ = self._velocities(xw)
        m = self.m_seg
        rp = self.rp
        sp_s = np.sqrt(np.sum(v * v, axis=-1) + _EPS_NORM2)
        lead = 6.0 * rp.P0 / rp.U_tip ** 2 + 3.0 * rp.parasite_coeff * sp_s
        hv = (lead[:, None, None] * np.eye(2)[None]
              + (3.0 * rp.parasite_coeff / sp_s)[:, None, None]
              * v[:, :, None] * v[:, None, :]) / (self.dt ** 2 * self.n)
        w = xw.shape[1]
        h = np.zeros((1, w, w))
        for seg in range(m):
            a = 2 * seg
            b = 2 * ((seg + 1) % m)
            blk = hv[seg]
            h[0, a:a + 2, a:a + 2] += blk
            h[0, b:b + 2, b:b + 2] += blk
            h[0, a:a + 2, b:b + 2] -= blk
            h[0, b:b + 2, a:a + 2] -= blk
        return h


class SquaredLinearRows(ConstraintBlock):
    """||lin_i . xw_i||^2 - cap_i^2 <= 0 (constant PSD Hessian)."""

    def __init__(self, idx, lin, cap, name="squared-norm"):
        cap = np.broadcast_to(np.asarray(cap, float), (idx.shape[0],))
        super().__init__(idx, scale=cap * cap, name=name)
        self.lin = np.asarray(lin, float)            # (m, 2, w)
        self.cap2 = cap * cap
        self._hess = 2.0 * np.einsum("mdv,mdw->mvw", self.lin, self.lin)

    def values(self, xw):
        y = np.einsum("mdw,mw->md", self.lin, xw)
        return np.sum(y * y, axis=-1) - self.cap2

    def grads(self, xw):
        y = np.einsum("mdw,mw->md", self.lin, xw)
        return 2.0 * np.einsum("md,mdw->mw", y, self.lin)

    def hessians(self, xw):
        return self._hess


class ExclusionDiscRows(ConstraintBlock):
    """r2_min - ||u - w||^2 <= 0   (vars: ux, uy).

    Exact keep-out disc around the protected receiver for the LoS-only
    channel view; concave (reverse-convex) but exact, so sliding along
    the boundary costs nothing and the step does not shrink near the
    receiver the way an affine distance tangent would force.
    """

    def __init__(self, idx, w_xy, r2_min, scale, name="exclusion-disc"):
        super().__init__(idx, scale=scale, name=name)
        self.w_xy = np.asarray(w_xy, float)
        self.r2_min = np.asarray(r2_min, float)

    def values(self, xw):
        delta = xw - self.w_xy
        return self.r2_min - np.sum(delta * delta, axis=-1)

    def grads(self, xw):
        return -2.0 * (xw - self.w_xy)

    def hessians(self, xw):
        h = np.zeros((self.m, 2, 2))
        h[:, 0, 0] = h[:, 1, 1] = -2.0
        return h


class ExpElevationAltitudeRows(ConstraintBlock):
    """1 + K*exp(-c*arctan(z/r)) - x <= 0  (vars: z, x); convex in z."""

    def __init__(self, idx, r_xy, k_coeff, c_coeff, scale, name="los-floor-alt"):
        super().__init__(idx, scale=scale, name=name)
        self.r = np.maximum(np.asarray(r_xy, float), 1e-9)
        self.k = np.asarray(k_coeff, float)
        self.c = float(c_coeff)

    def _parts(self, xw):
        z = xw[:, 0]
        d2 = self.r * self.r + z * z
        e = self.k * np.exp(-self.c * np.arctan2(z, self.r))
        return z, d2, e

    def values(self, xw):
        _, _, e = self._parts(xw)
        return 1.0 + e - xw[:, 1]

    def grads(self, xw):
        z, d2, e = self._parts(xw)
        g = np.empty_like(xw)
        g[:, 0] = -self.c * e * self.r / d2
        g[:, 1] = -1.0
        return g

    def hessians(self, xw):
        z, d2, e = self._parts(xw)
        h = np.zeros((self.m, 2, 2))
        h[:, 0, 0] = e * self.c * self.r * (self.c * self.r + 2.0 * z) / (d2 * d2)
        return h


class SlantPowerAltitudeRows(ConstraintBlock):
    """(r^2 + z^2)^(alpha/2) - t <= 0  (vars: z, t)."""

    def __init__(self, idx, r_xy, alpha, scale, name="slant-power-floor-alt"):
        super().__init__(idx, scale=scale, name=name)
        self.r2 = np.square(np.asarray(r_xy, float))
        self.alpha = float(alpha)

    def values(self, xw):
        d2 = self.r2 + xw[:, 0] ** 2
        return np.power(d2, 0.5 * self.alpha) - xw[:, 1]

    def grads(self, xw):
        z = xw[:, 0]
        d2 = self.r2 + z * z
        g = np.empty_like(xw)
        g[:, 0] = self.alpha * np.power(d2, 0.5 * self.alpha - 1.0) * z
        g[:, 1] = -1.0
        return g

    def hessians(self, xw):
        z = xw[:, 0]
        d2 = self.r2 + z * z
        a = self.alpha
        h = np.zeros((self.m, 2, 2))
        h[:, 0, 0] = (a * np.power(d2, 0.5 * a - 1.0)
                      + a * (a - 2.0) * np.power(d2, 0.5 * a - 2.0) * z * z)
        return h


class NlosCapArctanAltitudeRows(ConstraintBlock):
    """p - g0 - c*arctan(z/r) <= 0  (vars: z, p); convex for z >= 0."""

    def __init__(self, idx, r_xy, g0, c_coeff, scale, name="nlos-cap-alt"):
        super().__init__(idx, scale=scale, name=name)
        self.r = np.maximum(np.asarray(r_xy, float), 1e-9)
        self.g0 = np.asarray(g0, float)
        self.c = np.asarray(c_coeff, float)

    def values(self, xw):
        return xw[:, 1] - self.g0 - self.c * np.arctan2(xw[:, 0], self.r)

    def grads(self, xw):
        z = xw[:, 0]
        d2 = self.r * self.r + z * z
        g = np.empty_like(xw)
        g[:, 0] = -self.c * self.r / d2
        g[:, 1] = 1.0
        return g

    def hessians(self, xw):
        z = xw[:, 0]
        d2 = self.r * self.r + z * z
        h = np.zeros((self.m, 2, 2))
        h[:, 0, 0] = 2.0 * self.c * self.r * z / (d2 * d2)
        return h


class RateEpigraphRow(ConstraintBlock):
    """eta - sum_j w_j log2(1 + s_j P_{col_j}) <= 0 (power block)."""

    def __init__(self, idx, colmap, weights, snr, name="rate-epigraph"):
        super().__init__(idx.reshape(1, -1), scale=1.0, name=name)
        self.colmap = np.asarray(colmap, dtype=np.intp)   # pair -> local P col
        self.w = np.asarray(weights, float)
        self.s = np.asarray(snr, float)
        self._ln2 = float(np.log(2.0))

    def values(self, xw):
        p = xw[0, :-1][self.colmap]
        total = np.sum(self.w * np.log2(1.0 + self.s * p))
        return np.array([xw[0, -1] - total])

    def grads(self, xw):
        p = xw[0, :-1][self.colmap]
        g = np.zeros((1, xw.shape[1]))
        contrib = -self.w * self.s / (self._ln2 * (1.0 + self.s * p))
        np.add.at(g[0], self.colmap, contrib)
        g[0, -1] = 1.0
        return g

    def hessians(self, xw):
        p = xw[0, :-1][self.colmap]
        w_dim = xw.shape[1]
        h = np.zeros((1, w_dim, w_dim))
        diag = np.zeros(w_dim)
        contrib = self.w * self.s ** 2 / (self._ln2 * (1.0 + self.s * p) ** 2)
        np.add.at(diag, self.colmap, contrib)
        h[0, np.arange(w_dim), np.arange(w_dim)] = diag
        return h


# ---------------------------------------------------------------------------
# Shared helpers
# ---------------------------------------------------------------------------


def _position_map(sc: Scenario):
    """Slots -> distinct positions.  M = N-1 positions; the closing slot
    reuses position 0."""
    n = sc.n_slots
    m = n - 1
    pos = np.arange(n) % m
    return m, pos


def _active_pairs(a_matrix: np.ndarray, pos: np.ndarray, m: int):
    """(user, position) pairs carrying scheduling weight, with the slots
    feeding each pair."""
    r_count = a_matrix.shape[0]
    weight = np.zeros((r_count, m))
    np.add.at(weight.T, pos, a_matrix.T)
    pairs = [(r, mm) for r in range(r_count) for mm in range(m)
             if weight[r, mm] > _PAIR_WEIGHT_MIN]
    return pairs, weight


def _effective_power(p_vec: np.ndarray, pos: np.ndarray, m: int):
    """Per-position worst-case transmit power for interference rows."""
    eff = np.zeros(m)
    np.maximum.at(eff, pos, p_vec)
    return eff


def _accommodated_cap(hard_cap: float, full_cap: float, start_value: float,
                      margin: float):
    """Cap used inside a solve: at least the hardened cap, loosened to
    readmit a binding start, never beyond full_cap * (1 - 1e-7)."""
    cap = max(hard_cap, start_value * (1.0 + 1e-9) + margin)
    ceiling = full_cap * _CAP_CEILING
    return min(cap, ceiling)


def _rate_pair_coefficients(sc: Scenario, dv: DecisionVariables, pairs, pos,
                            x_ref, t_ref, mode: Mode):
    """Objective coefficients on (t, x) per pair plus the constant term.

    Sums the per-slot first-order rate expansions sharing each pair's
    slack variables; in the LoS view x is absent (P_los == 1).
    """
    n = sc.n_slots
    gamma = sc.cp.gamma
    c_t = np.zeros(len(pairs))
    c_x = np.zeros(len(pairs))
    const = 0.0
    for j, (r, mm) in enumerate(pairs):
        slots = np.nonzero(pos == mm)[0]
        for s in slots:
            w = dv.A[r, s] / n
            if w <= _PAIR_WEIGHT_MIN:
                continue
            val, dt_c, dx_c = sca.rate_slack_tangent(
                dv.P[s] * gamma, x_ref[j], t_ref[j])
            c_t[j] += w * dt_c
            const += w * (val - dt_c * t_ref[j])
            if mode == "plos":
                c_x[j] += w * dx_c
                const -= w * dx_c * x_ref[j]
    return c_t, c_x, const


def _exact_objective(dv: DecisionVariables, sc: Scenario, mode: Mode) -> float:
    return model.objective(dv, sc, mode)


def _decide(dv_old, dv_new, sc, mode, status, surrogate, slacks, message=""):
    obj_old = _exact_objective(dv_old, sc, mode)
    obj_new = _exact_objective(dv_new, sc, mode)
    if obj_new >= obj_old - _ACCEPT_TOL:
        return BlockResult(dv_new, obj_new, True, status, surrogate, slacks,
                           message)
    note = f"rejected: exact objective {obj_new:.9g} < {obj_old:.9g}"
    if message:
        note = message + "; " + note
    return BlockResult(dv_old, obj_old, False, status, surrogate, slacks, note)


# ---------------------------------------------------------------------------
# Scheduling block
# ---------------------------------------------------------------------------


def solve_scheduling(dv: DecisionVariables, sc: Scenario, mode: Mode = "plos",
                     tol: float = 1e-8) -> BlockResult:
    """Linear relaxation of the per-slot user choice, then an exact snap
    to the per-slot argmax vertex (ties to the lowest user index)."""
    rates = model.rate_matrix(sc, dv.P, dv.q, dv.z, mode)
    r_count, n = rates.shape
    c = rates.ravel() / n
    c_norm = max(float(np.max(np.abs(c))), 1e-12)

    idx = np.arange(r_count * n, dtype=np.intp).reshape(r_count, n).T  # (n, R)
    simplex = AffineBlock(idx, np.ones((n, r_count)), np.ones(n),
                          scale=1.0, name="schedule-simplex")
    a0 = (0.9 * dv.A + 0.1 / r_count) * (1.0 - 1e-3)
    prog = SmoothProgram(
        c=c / c_norm,
        lb=np.zeros(r_count * n),
        ub=np.ones(r_count * n),
        x0=a0.ravel(),
        blocks=[simplex],
    )
    _, status = solve(prog, tol)

    # exact vertex: per-slot argmax is optimal for this LP
    pick = np.argmax(rates, axis=0)
    a_new = np.zeros_like(dv.A)
    a_new[pick, np.arange(n)] = 1.0

    dv_new = dv.copy()
    dv_new.A = a_new
    surrogate = float(np.sum(a_new * rates) / n)
    return _decide(dv, dv_new, sc, mode, status, surrogate, None)


# ---------------------------------------------------------------------------
# Power block
# ---------------------------------------------------------------------------


def solve_power(dv: DecisionVariables, sc: Scenario, mode: Mode = "plos",
                tol: float = 1e-8) -> BlockResult:
    """Concave per-slot power allocation under box, average, and
    interference caps (the caps fold into per-slot upper bounds because
    geometry is fixed here)."""
    n = sc.n_slots
    gamma_hard = HARDENING * sc.interference_cap_w
    (r_users, d_users, theta_users), (r_d, _, _) = model.slot_geometry(sc, dv.q, dv.z)
    coeff = channel.interference_coefficient(r_d, dv.z, sc.cp,
                                             los_only=(mode == "los"))
    ub = np.minimum(sc.tx_max_w, gamma_hard / coeff)
    free = np.nonzero(ub > 1e-12 * sc.tx_max_w)[0]
    message = ""
    if free.size == 0:
        dv_new = dv.copy()
        dv_new.P = np.zeros(n)
        message = "interference cap forces zero transmit power everywhere"
        return _decide(dv, dv_new, sc, mode, None, 0.0, None, message)

    if mode == "plos":
        plos = channel.los_probability(theta_users, sc.cp)
    else:
        plos = np.ones_like(theta_users)
    weights = dv.A * plos / n                      # (R, N)
    snr = sc.cp.gamma / np.power(d_users, sc.cp.alpha_los)

    col_of_slot = -np.ones(n, dtype=np.intp)
    col_of_slot[free] = np.arange(free.size)
    pr, pn = np.nonzero(weights > _PAIR_WEIGHT_MIN)
    keep = col_of_slot[pn] >= 0
    pr, pn = pr[keep], pn[keep]

    f = free.size
    var_idx = np.arange(f + 1, dtype=np.intp)
    epigraph = RateEpigraphRow(var_idx, col_of_slot[pn], weights[pr, pn],
                               snr[pr, pn])

    avg_idx = np.arange(f, dtype=np.intp).reshape(1, f)
    avg_cap = n * sc.tx_ave_w

    # centered start: a boundary-pinned anchor shrinks every barrier step
    # to the size of its slack and the mu ladder outruns the iterate
    p0 = np.clip(dv.P[free], 1e-3 * ub[free], ub[free] * 0.98)
    total0 = float(np.sum(p0))
    if total0 >= avg_cap * 0.99:
        p0 *= (avg_cap * 0.99) / total0
    avg_row = AffineBlock(avg_idx, np.ones((1, f)), np.array([avg_cap]),
                          scale=avg_cap, name="avg-power")

    def phi(p_local):
        return float(np.sum(weights[pr, pn]
                            * np.log2(1.0 + snr[pr, pn] * p_local[col_of_slot[pn]])))

    eta_hi = phi(np.full(f, sc.tx_max_w)) + 1.0
    eta0 = max(phi(p0) - 0.05 * max(1.0, abs(phi(p0))), -0.5)

    prog = SmoothProgram(
        c=np.concatenate([np.zeros(f), [1.0]]),
        lb=np.concatenate([np.zeros(f), [-1.0]]),
        ub=np.concatenate([ub[free], [eta_hi]]),
        x0=np.concatenate([p0, [eta0]]),
        blocks=[epigraph, avg_row],
    )
    x, status = solve(prog, tol)

    p_new = np.zeros(n)
    p_new[free] = np.minimum(x[:f], ub[free])
    dv_new = dv.copy()
    dv_new.P = p_new
    surrogate = float(x[f])
    return _decide(dv, dv_new, sc, mode, status, surrogate, None, message)


# ---------------------------------------------------------------------------
# Horizontal block
# ---------------------------------------------------------------------------


def solve_horizontal(dv: DecisionVariables, sc: Scenario, mode: Mode = "plos",
                     tol: float = 1e-8) -> BlockResult:
    """One SCA step over the horizontal positions (altitude, power, and
    scheduling fixed)."""
    n = sc.n_slots
    m, pos = _position_map(sc)
    dt = sc.slot_s
    cp = sc.cp
    rp = sc.rp
    u_ref = dv.q[:m].copy()
    z = dv.z[:m].copy()
    wd = sc.primary_xy
    pairs, _ = _active_pairs(dv.A, pos, m)
    n_pairs = len(pairs)
    p_eff = _effective_power(dv.P, pos, m)

    k_user = cp.a * np.exp(cp.a * cp.b)
    k_nlos = np.exp(-cp.a * cp.b) / cp.a

    # --- expansion geometry -------------------------------------------------
    pair_r = np.array([r for r, _ in pairs], dtype=np.intp)
    pair_m = np.array([mm for _, mm in pairs], dtype=np.intp)
    w_pair = sc.users_xy[pair_r]
    delta_pair = u_ref[pair_m] - w_pair
    r_pair = np.maximum(np.hypot(delta_pair[:, 0], delta_pair[:, 1]), 1e-6)
    z_pair = z[pair_m]
    theta_pair = _DEG * np.arctan2(z_pair, r_pair)
    d_alpha_pair = np.power(r_pair ** 2 + z_pair ** 2, 0.5 * cp.alpha_los)
    x_exact = 1.0 + k_user * np.exp(-cp.b * theta_pair)
    t_exact = d_alpha_pair

    delta_d = u_ref - wd
    r_d = np.maximum(np.hypot(delta_d[:, 0], delta_d[:, 1]), 1e-6)
    theta_d = _DEG * np.arctan2(z, r_d)
    d2_d = r_d ** 2 + z ** 2
    d_al = np.power(d2_d, 0.5 * cp.alpha_los)
    d_an = np.power(d2_d, 0.5 * cp.alpha_nlos)
    pl_exact = 1.0 + k_user * np.exp(-cp.b * theta_d)
    pn_exact = 1.0 + k_nlos * np.exp(cp.b * theta_d)

    v_ref = (np.roll(u_ref, -1, axis=0) - u_ref) / dt
    speed_ref = np.linalg.norm(v_ref, axis=-1)
    lam_exact = np.asarray([float(x) for x in
                            np.atleast_1d(_induced_exact(speed_ref, rp))])

    # --- variable layout ----------------------------------------------------
    los_mode = mode == "los"
    off_u = 0
    off_x = 2 * m
    off_t = off_x + (0 if los_mode else n_pairs)
    off_pl = off_t + n_pairs
    if los_mode:
        off_lam = off_pl
        off_pn = off_tl = off_tn = None
        n_vars = off_lam + m
    else:
        off_pn = off_pl + m
        off_tl = off_pn + m
        off_tn = off_tl + m
        off_lam = off_tn + m
        n_vars = off_lam + m

    def ux(im):
        return 2 * im

    def uy(im):
        return 2 * im + 1

    lb = np.empty(n_vars)
    ub = np.empty(n_vars)
    x0 = np.empty(n_vars)
    c = np.zeros(n_vars)

    coords = np.vstack([sc.users_xy, wd[None, :], u_ref,
                        np.array([[sc.start.x, sc.start.y]])])
    margin = sc.speed_max_mps * sc.period_s / 4.0 + 100.0
    lb[off_u:off_x:2] = coords[:, 0].min() - margin
    lb[off_u + 1:off_x:2] = coords[:, 1].min() - margin
    ub[off_u:off_x:2] = coords[:, 0].max() + margin
    ub[off_u + 1:off_x:2] = coords[:, 1].max() + margin
    x0[off_u:off_x] = u_ref.ravel()

    # objective expansion anchored at the exact (tight) slacks; the
    # LoS-only view treats the LoS probability as one
    x_for_rate = np.ones(n_pairs) if los_mode else x_exact
    c_t, c_x, const_term = _rate_pair_coefficients(
        sc, dv, pairs, pos, x_for_rate, t_exact, mode)

    t_idx = off_t + np.arange(n_pairs)
    lb[t_idx] = 1.0
    ub[t_idx] = 1e12
    x0[t_idx] = t_exact * (1.0 + _RETREAT)
    c[t_idx] = c_t
    if not los_mode:
        x_idx = off_x + np.arange(n_pairs)
        lb[x_idx] = 1.0 + 1e-12
        ub[x_idx] = 2.0 + k_user
        x0[x_idx] = x_exact * (1.0 + _RETREAT)
        c[x_idx] = c_x

    blocks: list[ConstraintBlock] = []

    # user LoS floors + slant-power floors
    tangents = sca.elevation_tangent_range(r_pair, z_pair)
    a1 = -cp.b * _DEG * tangents[1]                    # positive
    a0 = -cp.b * _DEG * (tangents[0] - tangents[1] * r_pair)
    if not los_mode:
        idx_exp = np.column_stack([ux(pair_m), uy(pair_m), x_idx])
        blocks.append(ExpOfRangeRows(idx_exp, w_pair, np.full(n_pairs, k_user),
                                     a0, a1, scale=x_exact))
    idx_t = np.column_stack([ux(pair_m), uy(pair_m), t_idx])
    blocks.append(SlantPowerRangeRows(idx_t, w_pair, z_pair, cp.alpha_los,
                                      scale=t_exact))

    # interference machinery at the protected receiver
    gamma_hard = HARDENING * sc.interference_cap_w
    gamma_full = sc.interference_cap_w
    all_m = np.arange(m)
    if los_mode:
        # exact LoS view: P*rho0/d^aL <= cap is the complement of a disc
        # around the receiver, kept raw (exact, mildly nonconvex)
        need = p_eff * cp.rho0
        start_val = need / d_al
        caps = np.array([
            _accommodated_cap(gamma_hard, gamma_full, start_val[i],
                              1e-9 * gamma_full) for i in range(m)])
        r2_min = np.power(need / caps, 2.0 / cp.alpha_los) - z * z
        hot = np.nonzero(r2_min > 0.0)[0]      # vacuous rows dropped
        if hot.size:
            idx_disc = np.column_stack([ux(hot), uy(hot)])
            blocks.append(ExclusionDiscRows(idx_disc, wd, r2_min[hot],
                                            scale=np.maximum(r2_min[hot], 1.0)))
    else:
        pl_idx = off_pl + all_m
        pn_idx = off_pn + all_m
        tl_idx = off_tl + all_m
        tn_idx = off_tn + all_m
        lb[pl_idx] = 1.0
        ub[pl_idx] = 2.0 + k_user
        lb[pn_idx] = 1.0
        ub[pn_idx] = 2.0 + k_nlos * np.exp(cp.b * 90.0)
        lb[tl_idx] = 1.0
        ub[tl_idx] = 1e12
        lb[tn_idx] = 1.0
        ub[tn_idx] = 1e16
        x0[pl_idx] = pl_exact * (1.0 - _RETREAT)
        x0[pn_idx] = pn_exact * (1.0 - _RETREAT)
        x0[tl_idx] = d_al * (1.0 - _RETREAT)
        x0[tn_idx] = d_an * (1.0 - _RETREAT)

        # LoS-probability cap: exact elevation, mildly nonconvex
        f1_val, f1_slope = sca.exp_decay_tangent(theta_d, cp.b)
        d1 = -k_user * f1_slope                         # positive
        d0 = 1.0 + k_user * (f1_val - f1_slope * theta_d)
        idx_pl = np.column_stack([ux(all_m), uy(all_m), pl_idx])
        blocks.append(LosCapArctanRows(idx_pl, wd, z, d0, d1, scale=pl_exact))

        # NLoS cap through the growth tangent and the range tangent
        f2_val, f2_slope = sca.exp_growth_tangent(theta_d, cp.b)
        arct = sca.elevation_tangent_range(r_d, z)
        g1 = k_nlos * f2_slope * _DEG * arct[1]         # negative
        g0 = (1.0 + k_nlos * (f2_val - f2_slope * theta_d)
              + k_nlos * f2_slope * _DEG * (arct[0] - arct[1] * r_d))
        idx_pn = np.column_stack([ux(all_m), uy(all_m), pn_idx])
        blocks.append(NlosCapRangeRows(idx_pn, wd, g0, g1, scale=pn_exact))

        # slant-power caps (affine tangents in q)
        for alpha, t_cols, t_ref_vals in ((cp.alpha_los, tl_idx, d_al),
                                          (cp.alpha_nlos, tn_idx, d_an)):
            val, grad = sca.distance_power_tangent_xy(u_ref, wd, z, alpha)
            coeffs = np.column_stack([np.ones(m), -grad[:, 0], -grad[:, 1]])
            rhs = val - np.einsum("md,md->m", grad, u_ref)
            idx_cap = np.column_stack([t_cols, ux(all_m), uy(all_m)])
            blocks.append(AffineBlock(idx_cap, coeffs, rhs, scale=t_ref_vals,
                                      name="slant-power-cap"))

        c1 = p_eff * cp.rho0
        c2 = p_eff * cp.rho0 * cp.mu
        start_val = (c1 / (x0[pl_idx] * x0[tl_idx])
                     + c2 / (x0[pn_idx] * x0[tn_idx]))
        caps = np.array([
            _accommodated_cap(gamma_hard, gamma_full, start_val[i],
                              1e-9 * gamma_full) for i in range(m)])
        idx_int = np.column_stack([pl_idx, tl_idx, pn_idx, tn_idx])
        blocks.append(ReciprocalInterferenceRows(idx_int, c1, c2, caps,
                                                 scale=gamma_full))

    # induced-power slacks and the propulsion budget
    lam_idx = off_lam + all_m
    lb[lam_idx] = 1e-3
    ub[lam_idx] = 2.0
    x0[lam_idx] = lam_exact * (1.0 + _RETREAT)
    nxt = (all_m + 1) % m
    idx_lam = np.column_stack([lam_idx, ux(all_m), uy(all_m), ux(nxt), uy(nxt)])
    lam_rows = InducedSlackRows(idx_lam, lam_exact, v_ref, rp.v0, dt)
    lam_rows.set_reference_displacement(np.roll(u_ref, -1, axis=0) - u_ref)
    blocks.append(lam_rows)

    budget_idx = np.concatenate([np.arange(2 * m, dtype=np.intp),
                                 lam_idx.astype(np.intp)])
    hover_slots = n - m
    budget_hard = HARDENING * sc.propulsion_hor_ave_w
    hor_row = HorizontalBudgetRow(budget_idx, n, dt, rp, hover_slots,
                                  cap=0.0, scale=sc.propulsion_hor_ave_w)
    start_budget = float(hor_row.values(
        np.concatenate([u_ref.ravel(), lam_exact * (1.0 + _RETREAT)])[None, :])[0])
    hor_row.cap = _accommodated_cap(budget_hard, sc.propulsion_hor_ave_w,
                                    start_budget,
                                    1e-9 * sc.propulsion_hor_ave_w)
    blocks.append(hor_row)

    # speed and acceleration (squared forms; affine maps of u)
    sp_lin = np.zeros((m, 2, 4))
    sp_lin[:, 0, 0] = sp_lin[:, 1, 1] = -1.0
    sp_lin[:, 0, 2] = sp_lin[:, 1, 3] = 1.0
    idx_sp = np.column_stack([ux(all_m), uy(all_m), ux(nxt), uy(nxt)])
    blocks.append(SquaredLinearRows(idx_sp, sp_lin, sc.speed_max_mps * dt,
                                    name="speed"))
    if m >= 3:
        mm = np.arange(m - 1)
        mid = mm + 1
        far = (mm + 2) % m
        acc_lin = np.zeros((m - 1, 2, 6))
        acc_lin[:, 0, 0] = acc_lin[:, 1, 1] = 1.0
        acc_lin[:, 0, 2] = acc_lin[:, 1, 3] = -2.0
        acc_lin[:, 0, 4] = acc_lin[:, 1, 5] = 1.0
        idx_acc = np.column_stack([ux(mm), uy(mm), ux(mid), uy(mid),
                                   ux(far), uy(far)])
        blocks.append(SquaredLinearRows(idx_acc, acc_lin,
                                        sc.accel_max_mps2 * dt * dt,
                                        name="acceleration"))

    c_norm = max(float(np.max(np.abs(c))), 1e-12)
    prog = SmoothProgram(c=c / c_norm, lb=lb, ub=ub, x0=x0, blocks=blocks)
    sol, status = solve(prog, tol)

    if status.status in ("infeasible", "numerical-failure"):
        obj = _exact_objective(dv, sc, mode)
        return BlockResult(dv, obj, False, status, None, None,
                           f"horizontal block: {status.status}")

    u_new = sol[off_u:off_x].reshape(m, 2)
    q_new = np.vstack([u_new, u_new[0:1]])
    dv_new = dv.copy()
    dv_new.q = q_new
    dv_new.refresh(sc)

    slacks = SlackBlock(
        initial={"x": x_exact, "t_user": t_exact, "p_los": pl_exact,
                 "p_nlos": pn_exact, "t_d_los": d_al, "t_d_nlos": d_an,
                 "lam": lam_exact},
        solved={"t_user": sol[t_idx], "lam": sol[lam_idx]},
    )
    if not los_mode:
        slacks.solved.update({
            "x": sol[x_idx], "p_los": sol[pl_idx], "p_nlos": sol[pn_idx],
            "t_d_los": sol[tl_idx], "t_d_nlos": sol[tn_idx]})
        surrogate = const_term + float(c_t @ sol[t_idx] + c_x @ sol[x_idx])
    else:
        surrogate = const_term + float(c_t @ sol[t_idx])
    return _decide(dv, dv_new, sc, mode, status, surrogate, slacks)


def _induced_exact(speed, rp):
    from .energy import induced_factor
    return induced_factor(speed, rp)


# ---------------------------------------------------------------------------
# Vertical block
# ---------------------------------------------------------------------------


def solve_vertical(dv: DecisionVariables, sc: Scenario, mode: Mode = "plos",
                   tol: float = 1e-8) -> BlockResult:
    """One SCA step over the altitude profile (positions, power, and
    scheduling fixed)."""
    n = sc.n_slots
    m, pos = _position_map(sc)
    dt = sc.slot_s
    cp = sc.cp
    rp = sc.rp
    u_fix = dv.q[:m]
    wd = sc.primary_xy
    pairs, _ = _active_pairs(dv.A, pos, m)
    n_pairs = len(pairs)
    p_eff = _effective_power(dv.P, pos, m)
    los_mode = mode == "los"

    band = sc.altitude_max_m - sc.altitude_min_m
    z_margin = 1e-6 * max(band, 1.0)
    if band <= 2.5 * z_margin:
        obj = _exact_objective(dv, sc, mode)
        return BlockResult(dv, obj, True, None, obj, None,
                           "altitude band degenerate; block skipped")
    z0 = np.clip(dv.z[:m], sc.altitude_min_m + z_margin,
                 sc.altitude_max_m - z_margin)

    k_user = cp.a * np.exp(cp.a * cp.b)
    k_nlos = np.exp(-cp.a * cp.b) / cp.a

    pair_r = np.array([r for r, _ in pairs], dtype=np.intp)
    pair_m = np.array([mm for _, mm in pairs], dtype=np.intp)
    w_pair = sc.users_xy[pair_r]
    r_pair = np.maximum(np.hypot(*(u_fix[pair_m] - w_pair).T), 1e-9)
    z_pair = z0[pair_m]
    theta_pair = _DEG * np.arctan2(z_pair, r_pair)
    x_exact = 1.0 + k_user * np.exp(-cp.b * theta_pair)
    t_exact = np.power(r_pair ** 2 + z_pair ** 2, 0.5 * cp.alpha_los)

    r_d = np.maximum(np.hypot(*(u_fix - wd).T), 1e-9)
    theta_d = _DEG * np.arctan2(z0, r_d)
    d2_d = r_d ** 2 + z0 ** 2
    d_al = np.power(d2_d, 0.5 * cp.alpha_los)
    d_an = np.power(d2_d, 0.5 * cp.alpha_nlos)
    pl_exact = 1.0 + k_user * np.exp(-cp.b * theta_d)
    pn_exact = 1.0 + k_nlos * np.exp(cp.b * theta_d)

    # --- layout: [z (m)] [s (m)] [x] [t] (+ [pl] [pn] [tl] [tn]) ------------
    off_z = 0
    off_s = m
    off_x = 2 * m
    off_t = off_x + (0 if los_mode else n_pairs)
    off_pl = off_t + n_pairs
    if los_mode:
        n_vars = off_pl
    else:
        off_pn = off_pl + m
        off_tl = off_pn + m
        off_tn = off_tl + m
        n_vars = off_tn + m

    lb = np.empty(n_vars)
    ub = np.empty(n_vars)
    x0 = np.empty(n_vars)
    c = np.zeros(n_vars)
    all_m = np.arange(m)
    z_idx = off_z + all_m
    s_idx = off_s + all_m
    lb[z_idx] = sc.altitude_min_m
    ub[z_idx] = sc.altitude_max_m
    x0[z_idx] = z0

    v_z0 = (np.roll(z0, -1) - z0) / dt
    s_seed = rp.W * np.maximum(v_z0, 0.0) + 1e-3 * rp.W
    s_cap = rp.W * sc.climb_max_mps * dt * 1.5 + 1.0
    lb[s_idx] = 0.0
    ub[s_idx] = s_cap
    x0[s_idx] = np.minimum(s_seed, s_cap * 0.9)

    x_for_rate = np.ones(n_pairs) if los_mode else x_exact
    c_t, c_x, const_term = _rate_pair_coefficients(
        sc, dv, pairs, pos, x_for_rate, t_exact, mode)
    t_idx = off_t + np.arange(n_pairs)
    lb[t_idx] = 1.0
    ub[t_idx] = 1e12
    x0[t_idx] = t_exact * (1.0 + _RETREAT)
    c[t_idx] = c_t
    if not los_mode:
        x_idx = off_x + np.arange(n_pairs)
        lb[x_idx] = 1.0 + 1e-12
        ub[x_idx] = 2.0 + k_user
        x0[x_idx] = x_exact * (1.0 + _RETREAT)
        c[x_idx] = c_x

    blocks: list[ConstraintBlock] = []
    if not los_mode:
        idx_exp = np.column_stack([z_idx[pair_m], x_idx])
        blocks.append(ExpElevationAltitudeRows(idx_exp, r_pair,
                                               np.full(n_pairs, k_user),
                                               cp.b * _DEG, scale=x_exact))
    idx_t = np.column_stack([z_idx[pair_m], t_idx])
    blocks.append(SlantPowerAltitudeRows(idx_t, r_pair, cp.alpha_los,
                                         scale=t_exact))

    gamma_hard = HARDENING * sc.interference_cap_w
    gamma_full = sc.interference_cap_w
    if los_mode:
        val, slope = sca.distance_power_tangent_z(r_d, z0, cp.alpha_los)
        need = p_eff * cp.rho0
        caps = np.array([
            _accommodated_cap(gamma_hard, gamma_full, need[i] / val[i],
                              1e-9 * gamma_full) for i in range(m)])
        coeffs = (-slope)[:, None]
        rhs = val - slope * z0 - need / caps
        blocks.append(AffineBlock(z_idx[:, None], coeffs, rhs, scale=val,
                                  name="interference-los"))
    else:
        pl_idx = off_pl + all_m
        pn_idx = off_pn + all_m
        tl_idx = off_tl + all_m
        tn_idx = off_tn + all_m
        lb[pl_idx] = 1.0
        ub[pl_idx] = 2.0 + k_user
        lb[pn_idx] = 1.0
        ub[pn_idx] = 2.0 + k_nlos * np.exp(cp.b * 90.0)
        lb[tl_idx] = 1.0
        ub[tl_idx] = 1e12
        lb[tn_idx] = 1.0
        ub[tn_idx] = 1e16
        x0[pl_idx] = pl_exact * (1.0 - _RETREAT)
        x0[pn_idx] = pn_exact * (1.0 - _RETREAT)
        x0[tl_idx] = d_al * (1.0 - _RETREAT)
        x0[tn_idx] = d_an * (1.0 - _RETREAT)

        # LoS cap entirely affine: decay tangent composed with the
        # altitude tangent of the elevation angle, which overestimates
        # arctan for z >= 0 and therefore keeps the cap a restriction
        f1_val, f1_slope = sca.exp_decay_tangent(theta_d, cp.b)
        arct = sca.elevation_tangent_altitude(r_d, z0)
        base = (1.0 + k_user * f1_val
                + k_user * f1_slope * (_DEG * arct[0] - theta_d))
        slope_z = k_user * f1_slope * _DEG * arct[1]   # negative
        idx_pl = np.column_stack([pl_idx, z_idx])
        blocks.append(AffineBlock(idx_pl,
                                  np.column_stack([np.ones(m), -slope_z]),
                                  base - slope_z * z0, scale=pl_exact,
                                  name="los-cap-alt"))

        f2_val, f2_slope = sca.exp_growth_tangent(theta_d, cp.b)
        g0 = 1.0 + k_nlos * (f2_val - f2_slope * theta_d)
        c_arct = k_nlos * f2_slope * _DEG
        idx_pn = np.column_stack([z_idx, pn_idx])
        blocks.append(NlosCapArctanAltitudeRows(idx_pn, r_d, g0, c_arct,
                                                scale=pn_exact))

        for alpha, t_cols, t_ref_vals in ((cp.alpha_los, tl_idx, d_al),
                                          (cp.alpha_nlos, tn_idx, d_an)):
            val, slope = sca.distance_power_tangent_z(r_d, z0, alpha)
            idx_cap = np.column_stack([t_cols, z_idx])
            blocks.append(AffineBlock(idx_cap,
                                      np.column_stack([np.ones(m), -slope]),
                                      val - slope * z0, scale=t_ref_vals,
                                      name="slant-power-cap-alt"))

        c1 = p_eff * cp.rho0
        c2 = p_eff * cp.rho0 * cp.mu
        start_val = (c1 / (x0[pl_idx] * x0[tl_idx])
                     + c2 / (x0[pn_idx] * x0[tn_idx]))
        caps = np.array([
            _accommodated_cap(gamma_hard, gamma_full, start_val[i],
                              1e-9 * gamma_full) for i in range(m)])
        idx_int = np.column_stack([pl_idx, tl_idx, pn_idx, tn_idx])
        blocks.append(ReciprocalInterferenceRows(idx_int, c1, c2, caps,
                                                 scale=gamma_full))

    # climb-rate, vertical-power epigraph, budget
    nxt = (all_m + 1) % m
    idx_climb = np.column_stack([z_idx, z_idx[nxt]])
    cap_climb = sc.climb_max_mps * dt
    blocks.append(AffineBlock(idx_climb,
                              np.tile([-1.0, 1.0], (m, 1)),
                              np.full(m, cap_climb), scale=cap_climb,
                              name="climb-up"))
    blocks.append(AffineBlock(idx_climb,
                              np.tile([1.0, -1.0], (m, 1)),
                              np.full(m, cap_climb), scale=cap_climb,
                              name="climb-down"))
    if sc.climb_accel_max_mps2 is not None and m >= 3:
        mm = np.arange(m - 1)
        idx_ca = np.column_stack([z_idx[mm], z_idx[mm + 1], z_idx[(mm + 2) % m]])
        cap_ca = sc.climb_accel_max_mps2 * dt * dt
        stencil = np.tile([1.0, -2.0, 1.0], (m - 1, 1))
        blocks.append(AffineBlock(idx_ca, stencil, np.full(m - 1, cap_ca),
                                  scale=cap_ca, name="climb-accel-up"))
        blocks.append(AffineBlock(idx_ca, -stencil, np.full(m - 1, cap_ca),
                                  scale=cap_ca, name="climb-accel-down"))

    idx_epi = np.column_stack([z_idx, z_idx[nxt], s_idx])
    epi_coeff = np.tile([-rp.W / dt, rp.W / dt, -1.0], (m, 1))
    blocks.append(AffineBlock(idx_epi, epi_coeff, np.zeros(m),
                              scale=rp.W, name="ver-power-epigraph"))

    budget_hard = HARDENING * sc.propulsion_ver_ave_w
    start_budget = float(np.sum(x0[s_idx])) / n
    cap_ver = _accommodated_cap(budget_hard, sc.propulsion_ver_ave_w,
                                start_budget, 1e-9 * sc.propulsion_ver_ave_w)
    blocks.append(AffineBlock(s_idx[None, :], np.full((1, m), 1.0 / n),
                              np.array([cap_ver]),
                              scale=sc.propulsion_ver_ave_w,
                              name="ver-budget"))

    c_norm = max(float(np.max(np.abs(c))), 1e-12)
    prog = SmoothProgram(c=c / c_norm, lb=lb, ub=ub, x0=x0, blocks=blocks)
    sol, status = solve(prog, tol)

    if status.status in ("infeasible", "numerical-failure"):
        obj = _exact_objective(dv, sc, mode)
        return BlockResult(dv, obj, False, status, None, None,
                           f"vertical block: {status.status}")

    z_new = np.concatenate([sol[z_idx], sol[z_idx][0:1]])
    dv_new = dv.copy()
    dv_new.z = z_new
    dv_new.refresh(sc)
    slacks = SlackBlock(
        initial={"x": x_exact, "t_user": t_exact, "p_los": pl_exact,
                 "p_nlos": pn_exact, "t_d_los": d_al, "t_d_nlos": d_an},
        solved={"t_user": sol[t_idx]},
    )
    if not los_mode:
        slacks.solved.update({
            "x": sol[x_idx], "p_los": sol[pl_idx], "p_nlos": sol[pn_idx],
            "t_d_los": sol[tl_idx], "t_d_nlos": sol[tn_idx]})
        surrogate = const_term + float(c_t @ sol[t_idx] + c_x @ sol[x_idx])
    else:
        surrogate = const_term + float(c_t @ sol[t_idx])
    return _decide(dv, dv_new, sc, mode, status, surrogate, slacks)
