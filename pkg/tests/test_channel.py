import math

import numpy as np
from hypothesis import given, strategies as st

from aircrn import model
from aircrn.channel import (
    AirPosition,
    GroundNode,
    db_to_linear,
    dbm_to_watts,
    elevation_angle_deg,
    elevation_deg,
    expected_interference,
    expected_rate,
    interference_coefficient,
    link_distance,
    los_probability,
    lower_bound_rate,
    rate,
    slant_distance,
)

CP = model.load_builtin_scenario().cp


def test_unit_conversions():
    assert db_to_linear(0.0) == 1.0
    assert db_to_linear(-121.0) == 10.0 ** (-12.1)
    assert dbm_to_watts(-100.0) == 1e-13
    assert dbm_to_watts(30.0) == 1.0


def test_builtin_channel_constants():
    assert CP.a == 11.95
    assert CP.b == 0.14
    assert CP.rho0 == 1e-6
    assert CP.mu == 0.01
    assert CP.sigma2 == 1e-13
    assert CP.gamma == 1e7


def test_los_probability_frozen_values():
    # sigmoid in the elevation angle, checked against hand computation
    assert abs(los_probability(45.0, CP) - 0.895319587904439) < 1e-12
    assert abs(los_probability(90.0, CP) - 0.9997853460579836) < 1e-12
    assert abs(los_probability(10.0, CP) - 0.05987626715853004) < 1e-12


def test_los_probability_monotone_in_angle():
    theta = np.linspace(0.0, 90.0, 400)
    p = los_probability(theta, CP)
    assert np.all(np.diff(p) > 0)
    assert np.all((p > 0) & (p < 1))


def test_geometry_frozen_values():
    p = AirPosition(336.0, 187.0, 30.0)
    assert abs(elevation_angle_deg(p, GroundNode(332.0, 50.0))
               - 12.34645924684494) < 1e-12
    assert abs(link_distance(p, GroundNode(200.0, 360.0))
               - 222.0923231451281) < 1e-12


def test_slant_and_elevation_vector_forms():
    r = np.array([0.0, 30.0, 150.0])
    z = np.array([30.0, 30.0, 30.0])
    np.testing.assert_allclose(slant_distance(r, z),
                               np.hypot(r, z), rtol=0, atol=1e-14)
    np.testing.assert_allclose(elevation_deg(r, z),
                               np.degrees(np.arctan2(z, r)), atol=1e-13)
    assert elevation_deg(np.array([0.0]), np.array([50.0]))[0] == 90.0


def test_rate_states_and_expected_rate_frozen():
    d = np.array([100.0])
    th = np.array([30.0])
    r_los = rate(0.1, d, "los", CP)
    r_nlos = rate(0.1, d, "nlos", CP)
    assert abs(r_los[0] - 5.350876154248601) < 1e-12
    assert abs(r_nlos[0] - 0.0014419741739063218) < 1e-15
    exp = expected_rate(0.1, d, th, CP)
    assert abs(exp[0] - 2.738025897818669) < 1e-12
    lb = lower_bound_rate(0.1, d, th, CP)
    assert abs(lb[0] - 2.7373215873321337) < 1e-12
    # the lower bound drops the NLoS summand, so it can never exceed
    assert lb[0] <= exp[0]


def test_expected_interference_frozen():
    d = np.array([np.hypot(150.0, 30.0)])
    th = np.array([np.degrees(np.arctan2(30.0, 150.0))])
    i_mix = expected_interference(0.05, d, th, CP)
    i_los = expected_interference(0.05, d, th, CP, los_only=True)
    assert abs(i_mix[0] - 5.5540777061844323e-14) < 1e-26
    assert abs(i_los[0] - 7.813265122318901e-13) < 1e-25
    coeff = interference_coefficient(np.array([150.0]), np.array([30.0]), CP)
    np.testing.assert_allclose(coeff * 0.05, i_mix, rtol=1e-12)


@given(st.floats(1.0, 89.0), st.floats(10.0, 500.0),
       st.floats(1e-4, 0.4))
def test_lower_bound_never_exceeds_expected(theta, d, p):
    lb = lower_bound_rate(p, np.array([d]), np.array([theta]), CP)
    ex = expected_rate(p, np.array([d]), np.array([theta]), CP)
    assert lb[0] <= ex[0] + 1e-12


@given(st.floats(5.0, 85.0), st.floats(30.0, 500.0))
def test_interference_positive_and_los_dominates(theta, d):
    # with mu < 1 and alpha_nlos > alpha_los the pure-LoS view is the
    # worst case for any power level
    i_mix = expected_interference(0.1, np.array([d]), np.array([theta]), CP)
    i_los = expected_interference(0.1, np.array([d]), np.array([theta]), CP,
                                  los_only=True)
    assert 0 < i_mix[0] <= i_los[0] + 1e-30


def test_rate_monotone_in_power_and_distance():
    d = np.linspace(50.0, 400.0, 50)
    th = np.full_like(d, 40.0)
    r1 = expected_rate(0.05, d, th, CP)
    r2 = expected_rate(0.10, d, th, CP)
    assert np.all(r2 > r1)
    assert np.all(np.diff(expected_rate(0.1, d, np.full_like(d, 40.0), CP)) < 0)
