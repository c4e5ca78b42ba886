import math

import numpy as np
import pytest

from cbjjsim.physics import (
    CONSTANTS,
    InvalidParameterError,
    JunctionParams,
    OperatingPoint,
    barrier_height,
    barrier_top,
    denormalize,
    derive_scales,
    normalize,
    washboard_potential,
    well_minimum,
)

JJ1 = JunctionParams(I0=8.586e-6, R=29.0, C=2700e-15)


def test_constants_h_is_2pi_hbar():
    assert abs(CONSTANTS.h - 2 * math.pi * CONSTANTS.hbar) / CONSTANTS.h < 1e-6
    for v in (CONSTANTS.hbar, CONSTANTS.h, CONSTANTS.e_charge, CONSTANTS.k_B):
        assert v > 0


def test_junction_params_validation():
    with pytest.raises(InvalidParameterError):
        JunctionParams(I0=0.0, R=29.0, C=1e-15)
    with pytest.raises(InvalidParameterError):
        JunctionParams(I0=1e-6, R=-1.0, C=1e-15)
    with pytest.raises(InvalidParameterError):
        OperatingPoint(i_b=1.0, T=0.05)
    with pytest.raises(InvalidParameterError):
        OperatingPoint(i_b=0.5, T=-1.0)


def test_derive_scales_jj1():
    s = derive_scales(JJ1)
    # plasma frequency ~15.6 GHz; biased value lands on the 12.25 GHz drive row
    assert abs(s.omega_J / (2 * math.pi * 1e9) - 15.63) < 0.05
    assert abs(s.omega_J_star(0.789) / (2 * math.pi * 1e9) - 12.25) < 0.05
    assert abs(s.beta - 1.0 / (JJ1.R * JJ1.C * s.omega_J)) < 1e-15
    assert abs(s.E_J - CONSTANTS.hbar * JJ1.I0 / (2 * CONSTANTS.e_charge)) == 0.0


def test_omega_star_limits():
    s = derive_scales(JJ1)
    assert s.omega_J_star(0.0) == s.omega_J
    assert s.omega_J_star(1.0 - 1e-12) < 1e-3 * s.omega_J + s.omega_J * 1e-2
    assert s.omega_J_star(0.999999) < 0.05 * s.omega_J


def test_washboard_values():
    assert washboard_potential(0.0, 0.0) == 0.0
    assert abs(washboard_potential(math.pi, 0.0) - 2.0) < 1e-15
    # stationary point at arcsin(i_b): numeric derivative vanishes
    i_b = 0.789
    phi0 = well_minimum(i_b)
    h = 1e-6
    dU = (washboard_potential(phi0 + h, i_b) - washboard_potential(phi0 - h, i_b)) / (2 * h)
    assert abs(dU) < 1e-9


def test_barrier_endpoints_and_value():
    assert barrier_height(0.0) == 2.0
    assert abs(barrier_height(1.0)) < 1e-15
    assert abs(barrier_height(0.789) - 0.1846) < 5e-4
    with pytest.raises(InvalidParameterError):
        barrier_height(1.2)
    with pytest.raises(InvalidParameterError):
        barrier_height(-0.1)


def test_barrier_matches_extrema_difference():
    rng = np.random.default_rng(7)
    for i_b in rng.uniform(0.01, 0.99, size=50):
        du = barrier_height(i_b)
        extrema = washboard_potential(barrier_top(i_b), i_b) - washboard_potential(well_minimum(i_b), i_b)
        assert abs(du - extrema) < 1e-10


def test_barrier_strictly_decreasing():
    grid = np.linspace(0.0, 1.0, 51)
    vals = [barrier_height(x) for x in grid]
    assert all(b < a for a, b in zip(vals, vals[1:]))


def test_curvature_equals_modulated_frequency():
    # d2U/dphi2 at the minimum is sqrt(1-i_b^2) = (omega_J*/omega_J)^2
    s = derive_scales(JJ1)
    rng = np.random.default_rng(11)
    for i_b in rng.uniform(0.0, 0.99, size=50):
        phi0 = well_minimum(i_b)
        h = 1e-5
        curv = (
            washboard_potential(phi0 + h, i_b)
            - 2 * washboard_potential(phi0, i_b)
            + washboard_potential(phi0 - h, i_b)
        ) / h**2
        ratio_sq = (s.omega_J_star(i_b) / s.omega_J) ** 2
        assert abs(curv - ratio_sq**2 / math.sqrt(1 - i_b**2)) < 1e-5  # curv = sqrt(1-i_b^2)
        assert abs(ratio_sq - math.sqrt(1.0 - i_b * i_b)) < 1e-10


@pytest.mark.parametrize("kind", ["current", "time", "frequency", "voltage"])
def test_normalize_round_trip(kind):
    s = derive_scales(JJ1)
    rng = np.random.default_rng(3)
    for raw in rng.uniform(1e-9, 1e3, size=10):
        z = normalize(raw, kind, JJ1, s)
        back = denormalize(z, kind, JJ1, s)
        assert abs(back - raw) / raw < 1e-12


def test_normalize_examples():
    s = derive_scales(JJ1)
    assert abs(normalize(JJ1.I0, "current", JJ1, s) - 1.0) < 1e-15
    assert abs(normalize(1.0 / s.omega_J, "time", JJ1, s) - 1.0) < 1e-12
    # dphi/dtau = 1 corresponds to ~32.3 uV on this junction
    assert abs(denormalize(1.0, "voltage", JJ1, s) - 32.3e-6) < 0.2e-6


def test_normalize_unknown_kind():
    s = derive_scales(JJ1)
    with pytest.raises(InvalidParameterError):
        normalize(1.0, "charge", JJ1, s)
