"""First-order tangent surrogates for the trajectory subproblems.

Each helper returns the coefficients of the tangent plane of one nonlinear
term at an expansion point: ``(value, slope...)`` such that

    tangent(u) = value + slope . (u - u_ref).

For convex targets (exponentials, distance powers, the induced-speed sum,
the rate slack function) the tangent is a global lower bound; for the
concave/indefinite arctan targets it is a local approximation whose use is
guarded by the exact-objective safeguard in the driver.

Conventions: elevation angles are handled in degrees wherever an
exponential of the LoS model appears (its slope ``b`` is per degree);
arctan tangents are returned in radians and the caller applies the
180/pi conversion exactly once when building constraint rows.

All helpers broadcast over numpy arrays and are pure.
"""

from __future__ import annotations

import numpy as np

_LN2 = float(np.log(2.0))


def _require_positive(name: str, value) -> None:
    if np.any(np.asarray(value) <= 0.0):
        raise ValueError(f"{name} must be strictly positive")


# ---------------------------------------------------------------------------
# Exponentials of the LoS model (degree domain)
# ---------------------------------------------------------------------------


def exp_decay_tangent(theta_ref_deg, b: float):
    """Tangent of exp(-b*theta) at theta_ref: returns (value, slope).

    The target is convex, so the tangent underestimates it everywhere.
    """
    value = np.exp(-b * np.asarray(theta_ref_deg, dtype=float))
    return value, -b * value


def exp_growth_tangent(phi_ref_deg, b: float):
    """Tangent of exp(+b*phi) at phi_ref: returns (value, slope).

    Slope is +b*exp(+b*phi_ref); convexity again gives a global
    underestimate.
    """
    value = np.exp(b * np.asarray(phi_ref_deg, dtype=float))
    return value, b * value


# ---------------------------------------------------------------------------
# Slant-distance powers d^alpha = (||q - w||^2 + z^2)^(alpha/2)
# ---------------------------------------------------------------------------


def distance_power_tangent_xy(q_ref, w_xy, z, alpha: float):
    """Tangent of (||q-w||^2 + z^2)^(alpha/2) in q at q_ref.

    Returns (value, grad) with grad shaped like q_ref.  The target is
    convex in q for alpha >= 1, so the tangent is a global lower bound.
    """
    q_ref = np.asarray(q_ref, dtype=float)
    diff = q_ref - np.asarray(w_xy, dtype=float)
    d2 = np.sum(diff * diff, axis=-1) + np.square(z)
    _require_positive("expansion slant distance", d2)
    value = np.power(d2, 0.5 * alpha)
    grad = (alpha * np.power(d2, 0.5 * alpha - 1.0))[..., None] * diff
    return value, grad


def distance_power_tangent_z(r_xy, z_ref, alpha: float):
    """Tangent of (r^2 + z^2)^(alpha/2) in z at z_ref: (value, slope)."""
    d2 = np.square(np.asarray(r_xy, dtype=float)) + np.square(z_ref)
    _require_positive("expansion slant distance", d2)
    value = np.power(d2, 0.5 * alpha)
    slope = alpha * np.power(d2, 0.5 * alpha - 1.0) * np.asarray(z_ref, dtype=float)
    return value, slope


# ---------------------------------------------------------------------------
# Elevation angle arctan(z / r), radians
# ---------------------------------------------------------------------------


def elevation_tangent_range(r_ref, z):
    """Tangent of arctan(z/r) in the horizontal range r at r_ref (radians).

    Returns (value, slope) with slope = -z/(r_ref^2 + z^2).  arctan(z/r)
    is convex in r > 0, so the tangent underestimates it for every r > 0.
    Rejects zero horizontal separation (the target is not differentiable
    in position there).
    """
    r_ref = np.asarray(r_ref, dtype=float)
    _require_positive("expansion horizontal range", r_ref)
    z = np.asarray(z, dtype=float)
    value = np.arctan2(z, r_ref)
    slope = -z / (r_ref * r_ref + z * z)
    return value, slope


def elevation_tangent_altitude(r_xy, z_ref):
    """Tangent of arctan(z/r) in the altitude z at z_ref (radians).

    Returns (value, slope) with slope = r/(r^2 + z_ref^2).  The target is
    concave in z >= 0, so this tangent overestimates it for every z >= 0.
    """
    r_xy = np.asarray(r_xy, dtype=float)
    _require_positive("horizontal range", r_xy)
    z_ref = np.asarray(z_ref, dtype=float)
    value = np.arctan2(z_ref, r_xy)
    slope = r_xy / (r_xy * r_xy + z_ref * z_ref)
    return value, slope


# ---------------------------------------------------------------------------
# Induced-power slack: lower bound for lambda^2 + ||v||^2 / v0^2
# ---------------------------------------------------------------------------


def induced_speed_tangent(lam_ref, v_ref_xy, v0: float):
    """Tangent of lambda^2 + ||v||^2/v0^2 at (lam_ref, v_ref).

    Returns (value, dlam, dv).  Sum of convex squares, hence a global
    lower bound; keeping 1/lambda^2 <= tangent therefore implies the
    exact induced-speed relation at any feasible point.
    """
    lam_ref = np.asarray(lam_ref, dtype=float)
    _require_positive("expansion induced slack", lam_ref)
    v_ref_xy = np.asarray(v_ref_xy, dtype=float)
    value = lam_ref * lam_ref + np.sum(v_ref_xy * v_ref_xy, axis=-1) / (v0 * v0)
    return value, 2.0 * lam_ref, (2.0 / (v0 * v0)) * v_ref_xy


# ---------------------------------------------------------------------------
# Rate slack function f(x, t) = (1/x) log2(1 + p_gamma / t)
# ---------------------------------------------------------------------------


def rate_slack_value(p_gamma, x, t):
    """f(x,t) = (1/x)*log2(1 + p_gamma/t); the epigraph form of the
    LoS-weighted rate once x bounds 1/P_los and t bounds d^alpha."""
    _require_positive("x", x)
    _require_positive("t", t)
    return np.log2(1.0 + np.asarray(p_gamma, dtype=float) / t) / np.asarray(x, dtype=float)


def rate_slack_tangent(p_gamma, x_ref, t_ref):
    """First-order expansion of f at (x_ref, t_ref): (value, dt, dx).

    f is jointly convex for x,t > 0 and p_gamma >= 0 (its 2x2 Hessian is
    PSD; see rate_slack_hessian), so the tangent plane is a global lower
    bound.  dt and dx are both <= 0.
    """
    p_gamma = np.asarray(p_gamma, dtype=float)
    if np.any(p_gamma < 0.0):
        raise ValueError("p_gamma must be nonnegative")
    x_ref = np.asarray(x_ref, dtype=float)
    t_ref = np.asarray(t_ref, dtype=float)
    _require_positive("x_ref", x_ref)
    _require_positive("t_ref", t_ref)
    log_term = np.log2(1.0 + p_gamma / t_ref)
    value = log_term / x_ref
    dt = -p_gamma / (_LN2 * x_ref * t_ref * (t_ref + p_gamma))
    dx = -log_term / (x_ref * x_ref)
    return value, dt, dx


def rate_slack_hessian(p_gamma, x, t):
    """Analytic Hessian of f in (x, t) order, shape (..., 2, 2).

    Entries:
        f_xx = 2*log2(1+A/t) / x^3
        f_xt = A / (ln2 * x^2 * t * (t+A))
        f_tt = A*(2t+A) / (ln2 * x * t^2 * (t+A)^2)
    with A = p_gamma.  PSD for x,t > 0 and A >= 0.
    """
    a = np.asarray(p_gamma, dtype=float)
    if np.any(a < 0.0):
        raise ValueError("p_gamma must be nonnegative")
    x = np.asarray(x, dtype=float)
    t = np.asarray(t, dtype=float)
    _require_positive("x", x)
    _require_positive("t", t)
    f_xx = 2.0 * np.log2(1.0 + a / t) / (x ** 3)
    f_xt = a / (_LN2 * x * x * t * (t + a))
    f_tt = a * (2.0 * t + a) / (_LN2 * x * t * t * (t + a) ** 2)
    hess = np.empty(np.broadcast(f_xx, f_xt, f_tt).shape + (2, 2), dtype=float)
    hess[..., 0, 0] = f_xx
    hess[..., 0, 1] = f_xt
    hess[..., 1, 0] = f_xt
    hess[..., 1, 1] = f_tt
    return hess
