"""Air-to-ground link model: geometry, LoS statistics, spectral efficiency.

The aerial transmitter sees a ground node under line-of-sight with a
probability that grows with the elevation angle,

    P_los(theta) = 1 / (1 + a * exp(-b * (theta - a))),   theta in degrees,

and the large-scale channel gain is rho0 * d^-alpha_los (LoS) or
mu * rho0 * d^-alpha_nlos (NLoS) at 3D distance d.  All rates are spectral
efficiencies in bit/s/Hz; interference is an absolute power in watts.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

LOS = "los"
NLOS = "nlos"

# Horizontal distances below this are treated as "directly overhead" when the
# altitude is positive; zero horizontal AND vertical separation is rejected.
_MIN_RANGE = 1e-12


def db_to_linear(value_db: float) -> float:
    """Power ratio for a dB figure referenced to 1."""
    return 10.0 ** (value_db / 10.0)


def dbm_to_watts(value_dbm: float) -> float:
    """Absolute power in watts for a dBm figure."""
    return 10.0 ** ((value_dbm - 30.0) / 10.0)


@dataclass(frozen=True)
class AirPosition:
    """Transmitter location: horizontal coordinates and altitude, meters."""

    x: float
    y: float
    z: float

    @property
    def xy(self) -> np.ndarray:
        return np.array([self.x, self.y], dtype=float)


@dataclass(frozen=True)
class GroundNode:
    """Ground terminal at zero altitude."""

    x: float
    y: float
    kind: str = "cognitive-user"  # or "primary-user"

    @property
    def xy(self) -> np.ndarray:
        return np.array([self.x, self.y], dtype=float)


@dataclass(frozen=True)
class ChannelParams:
    """Propagation constants shared by every link.

    a, b            LoS-probability shape (b is per degree)
    rho0            channel gain at 1 m reference distance, linear
    mu              extra NLoS attenuation, linear (< 1)
    alpha_los/nlos  path-loss exponents, 2 <= alpha_los <= alpha_nlos
    sigma2          receiver noise power, watts
    """

    a: float
    b: float
    rho0: float
    mu: float
    alpha_los: float
    alpha_nlos: float
    sigma2: float

    def __post_init__(self) -> None:
        if self.a <= 0 or self.b <= 0:
            raise ValueError("LoS shape constants must be positive")
        if not (2.0 <= self.alpha_los <= self.alpha_nlos):
            raise ValueError("need 2 <= alpha_los <= alpha_nlos")
        if not (0.0 < self.mu <= 1.0):
            raise ValueError("NLoS attenuation mu must lie in (0, 1]")
        if self.rho0 <= 0 or self.sigma2 <= 0:
            raise ValueError("rho0 and sigma2 must be positive")

    @property
    def gamma(self) -> float:
        """Reference SNR rho0 / sigma2 (exact quotient, no rounding)."""
        return self.rho0 / self.sigma2

    @classmethod
    def from_db(
        cls,
        a: float,
        b: float,
        rho0_db: float,
        mu_db: float,
        alpha_los: float,
        alpha_nlos: float,
        noise_dbm: float,
    ) -> "ChannelParams":
        return cls(
            a=a,
            b=b,
            rho0=db_to_linear(rho0_db),
            mu=db_to_linear(mu_db),
            alpha_los=alpha_los,
            alpha_nlos=alpha_nlos,
            sigma2=dbm_to_watts(noise_dbm),
        )


# ---------------------------------------------------------------------------
# Geometry.  Array kernels take raw coordinates so the optimizer and the audit
# can evaluate whole trajectories at once; the scalar wrappers below take the
# position dataclasses.
# ---------------------------------------------------------------------------


def horizontal_range(q_xy, w_xy) -> np.ndarray:
    """Horizontal distance ||q - w||, broadcasting over leading axes."""
    q = np.asarray(q_xy, dtype=float)
    w = np.asarray(w_xy, dtype=float)
    return np.linalg.norm(q - w, axis=-1)


def elevation_deg(r_xy, z) -> np.ndarray:
    """Elevation angle in degrees seen from a ground node.

    r_xy is the horizontal range, z the altitude.  Directly overhead
    (r_xy = 0, z > 0) gives 90 degrees; a coincident point is undefined.
    """
    r = np.asarray(r_xy, dtype=float)
    zz = np.asarray(z, dtype=float)
    if np.any((r <= _MIN_RANGE) & (np.abs(zz) <= _MIN_RANGE)):
        raise ValueError("elevation angle undefined at zero separation")
    return np.degrees(np.arctan2(zz, r))


def elevation_angle_deg(p: AirPosition, g: GroundNode) -> float:
    """Elevation of the air position as seen from the ground node, degrees."""
    return float(elevation_deg(horizontal_range(p.xy, g.xy), p.z))


def los_probability(theta_deg, cp: ChannelParams) -> np.ndarray:
    """LoS probability 1 / (1 + a exp(-b (theta - a))), theta in degrees."""
    theta = np.asarray(theta_deg, dtype=float)
    # exp is clipped only against overflow; the probability itself is exact.
    expo = np.clip(-cp.b * (theta - cp.a), -700.0, 700.0)
    return 1.0 / (1.0 + cp.a * np.exp(expo))


def link_distance(p: AirPosition, g: GroundNode) -> float:
    """3D separation sqrt(z^2 + ||q - w||^2), meters."""
    d = math.hypot(horizontal_range(p.xy, g.xy), p.z)
    if d <= _MIN_RANGE:
        raise ValueError("link distance undefined at zero separation")
    return d


def slant_distance(r_xy, z) -> np.ndarray:
    """Array version of the 3D separation."""
    return np.hypot(np.asarray(r_xy, dtype=float), np.asarray(z, dtype=float))


def rate(P: float, d, state: str, cp: ChannelParams) -> np.ndarray:
    """Spectral efficiency of a single link in a given propagation state.

        LoS : log2(1 + P * gamma / d^alpha_los)
        NLoS: log2(1 + P * gamma * mu / d^alpha_nlos)
    """
    if np.any(np.asarray(P) < 0):
        raise ValueError("transmit power must be nonnegative")
    dd = np.asarray(d, dtype=float)
    if np.any(dd <= 0):
        raise ValueError("link distance must be positive")
    if state == LOS:
        snr = P * cp.gamma / dd**cp.alpha_los
    elif state == NLOS:
        snr = P * cp.gamma * cp.mu / dd**cp.alpha_nlos
    else:
        raise ValueError(f"unknown propagation state {state!r}")
    return np.log2(1.0 + snr)


def expected_rate(P, d, theta_deg, cp: ChannelParams) -> np.ndarray:
    """LoS-probability-weighted mean rate over both propagation states."""
    p_los = los_probability(theta_deg, cp)
    return p_los * rate(P, d, LOS, cp) + (1.0 - p_los) * rate(P, d, NLOS, cp)


def lower_bound_rate(P, d, theta_deg, cp: ChannelParams) -> np.ndarray:
    """LoS term alone: P_los * R_los, a lower bound of the expected rate.

    The gap to the expected rate is the (tiny) NLoS contribution; the
    optimizer maximizes this bound.
    """
    return los_probability(theta_deg, cp) * rate(P, d, LOS, cp)


def expected_interference(
    P,
    d,
    theta_deg,
    cp: ChannelParams,
    *,
    los_only: bool = False,
) -> np.ndarray:
    """Expected interference power in watts delivered to a ground node.

        P_los * P * rho0 / d^alpha_los + (1 - P_los) * P * rho0 * mu / d^alpha_nlos

    Linear in P.  ``los_only`` forces P_los = 1 (deterministic-LoS planning
    model), which upper-bounds the LoS part and drops the NLoS part.
    """
    if np.any(np.asarray(P) < 0):
        raise ValueError("transmit power must be nonnegative")
    dd = np.asarray(d, dtype=float)
    if np.any(dd <= 0):
        raise ValueError("link distance must be positive")
    gain_los = cp.rho0 / dd**cp.alpha_los
    if los_only:
        return np.asarray(P) * gain_los
    gain_nlos = cp.mu * cp.rho0 / dd**cp.alpha_nlos
    p_los = los_probability(theta_deg, cp)
    return np.asarray(P) * (p_los * gain_los + (1.0 - p_los) * gain_nlos)


def interference_coefficient(r_xy, z, cp: ChannelParams, *, los_only: bool = False) -> np.ndarray:
    """Watts of expected interference per watt transmitted, from geometry."""
    d = slant_distance(r_xy, z)
    theta = elevation_deg(r_xy, z)
    return expected_interference(1.0, d, theta, cp, los_only=los_only)
