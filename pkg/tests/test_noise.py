import math

import numpy as np
import pytest
from scipy import signal as sp_signal

from cbjjsim.noise import (
    ColoredNoiseSequence,
    NoiseModel,
    colored_sequence,
    effective_temperature,
    effective_white_level,
    integrated_noise_variance,
    kick_scale,
    noise_increment,
    planck_spectral_density,
)
from cbjjsim.physics import CONSTANTS, JunctionParams, OperatingPoint, derive_scales
from cbjjsim.rng import RngStream

JJ1 = JunctionParams(I0=8.586e-6, R=29.0, C=2700e-15)
S1 = derive_scales(JJ1)
OP = OperatingPoint(i_b=0.789, T=0.050)


def test_zero_frequency_limit():
    # hf/(exp(hf/kT)-1) -> k_B T as f -> 0
    T = 0.050
    expected = 4.0 * CONSTANTS.k_B * T * S1.omega_J / (JJ1.R * JJ1.I0**2)
    assert abs(planck_spectral_density(0.0, T, JJ1, S1) - expected) / expected < 1e-12
    near = planck_spectral_density(1e3, T, JJ1, S1)
    assert abs(near - expected) / expected < 1e-6


def test_high_temperature_nyquist_limit():
    f = 12.25e9
    T = 100.0 * CONSTANTS.h * f / CONSTANTS.k_B  # k_B T = 100 hf
    nyquist = 4.0 * CONSTANTS.k_B * T * S1.omega_J / (JJ1.R * JJ1.I0**2)
    val = planck_spectral_density(f, T, JJ1, S1)
    assert abs(val - nyquist) / nyquist < 0.01


def test_density_even_in_frequency_and_zero_at_T0():
    assert planck_spectral_density(-3e9, 0.05, JJ1, S1) == planck_spectral_density(3e9, 0.05, JJ1, S1)
    assert planck_spectral_density(3e9, 0.0, JJ1, S1) == 0.0


def test_regression_value_jj1_50mk():
    # pinned by direct evaluation of the density formula
    val = planck_spectral_density(12.25e9, 0.050, JJ1, S1)
    x = CONSTANTS.h * 12.25e9 / (CONSTANTS.k_B * 0.050)
    expected = 4.0 * S1.omega_J / (JJ1.R * JJ1.I0**2) * CONSTANTS.h * 12.25e9 / math.expm1(x)
    assert val == pytest.approx(expected, rel=1e-12)
    assert val == pytest.approx(1.1727e-8, rel=2e-3)


@pytest.mark.parametrize("T", [0.010, 0.050, 1.0, 300.0])
def test_integrated_variance_matches_analytic(T):
    model = NoiseModel(T=T)
    got = integrated_noise_variance(model, JJ1, S1)
    per_side = math.pi**2 * (CONSTANTS.k_B * T) ** 2 / (6.0 * CONSTANTS.h)
    expected = 2.0 * (4.0 * S1.omega_J / (JJ1.R * JJ1.I0**2)) * per_side
    assert abs(got - expected) / expected < 1e-3


def test_integrated_variance_t0_and_scaling():
    assert integrated_noise_variance(NoiseModel(T=0.0), JJ1, S1) == 0.0
    v1 = integrated_noise_variance(NoiseModel(T=0.040), JJ1, S1)
    v2 = integrated_noise_variance(NoiseModel(T=0.080), JJ1, S1)
    assert abs(v2 / v1 - 4.0) < 0.005 * 4.0


def test_variance_monotone_in_temperature():
    vals = [integrated_noise_variance(NoiseModel(T=T), JJ1, S1) for T in (0.01, 0.05, 0.2, 1.0, 10.0)]
    assert all(b > a for a, b in zip(vals, vals[1:]))


def test_white_level_uses_biased_plasma_band():
    model = NoiseModel(T=0.050)
    s0 = effective_white_level(model, JJ1, S1, OP)
    f_star = S1.omega_J_star(0.789) / (2 * math.pi)
    assert s0 == planck_spectral_density(f_star, 0.050, JJ1, S1)


def test_kick_scale_and_effective_temperature():
    model = NoiseModel(T=0.050, calibration_factor=150.0)
    dt = 1e-4
    s0 = effective_white_level(model, JJ1, S1, OP)
    assert kick_scale(model, JJ1, S1, OP, dt) == pytest.approx(150.0 * math.sqrt(s0 * dt))
    theta = effective_temperature(model, JJ1, S1, OP)
    assert theta == pytest.approx(150.0**2 * s0 / (2 * S1.beta))
    model0 = NoiseModel(T=0.0)
    assert kick_scale(model0, JJ1, S1, OP, dt) == 0.0


def test_noise_increment_white_statistics():
    model = NoiseModel(T=0.050, calibration_factor=150.0)
    dt = 1e-4
    stream = RngStream(1234, 0)
    n = 50_000
    kicks = np.array([noise_increment(model, stream, dt, JJ1, S1, OP) for _ in range(n)])
    s0 = effective_white_level(model, JJ1, S1, OP)
    expected_var = 150.0**2 * s0 * dt
    assert abs(kicks.mean()) < 5 * math.sqrt(expected_var / n)
    assert abs(kicks.var() / expected_var - 1.0) < 0.02


def test_noise_increment_zero_at_t0():
    model = NoiseModel(T=0.0)
    stream = RngStream(1, 0)
    assert noise_increment(model, stream, 1e-4, JJ1, S1, OP) == 0.0


def test_colored_sequence_matches_target_psd():
    # PSD of the synthesized noise current vs the Planck density over
    # [0.01, 2] * omega_J / 2pi, at 1 K where the band spans modest dynamic range.
    T = 1.0
    model = NoiseModel(T=T, interpretation="colored")
    dt = 0.01
    n = 1 << 22
    seq = colored_sequence(model, JJ1, S1, RngStream(77, 0), n, dt)
    fs = S1.omega_J / dt
    f_lo = 0.01 * S1.omega_J / (2 * math.pi)
    f_hi = 2.0 * S1.omega_J / (2 * math.pi)
    nperseg = 1 << 16
    freqs, psd = sp_signal.welch(seq.samples, fs=fs, nperseg=nperseg, noverlap=nperseg // 2)
    band = (freqs >= f_lo) & (freqs <= f_hi)
    target = planck_spectral_density(freqs[band], T, JJ1, S1)
    measured = psd[band] * S1.omega_J / 2.0  # one-sided physical -> two-sided dimensionless
    # compare band-averaged in octave chunks to suppress estimator variance
    fb = freqs[band]
    edges = np.geomspace(f_lo, f_hi, 12)
    for lo, hi in zip(edges[:-1], edges[1:]):
        sel = (fb >= lo) & (fb < hi)
        if sel.sum() < 4:
            continue
        ratio = measured[sel].mean() / target[sel].mean()
        assert abs(ratio - 1.0) < 0.10


def test_colored_sequence_deterministic_and_consumable():
    model = NoiseModel(T=0.5, interpretation="colored")
    a = colored_sequence(model, JJ1, S1, RngStream(5, 1), 4096, 1e-3)
    b = colored_sequence(model, JJ1, S1, RngStream(5, 1), 4096, 1e-3)
    assert np.array_equal(a.samples, b.samples)
    first = a.next()
    assert first == a.samples[0]
    kick = noise_increment(model, b, 1e-3, JJ1, S1, OP)
    assert kick == b.samples[0] * 1e-3


def test_model_validation():
    with pytest.raises(Exception):
        NoiseModel(T=-1.0)
    with pytest.raises(Exception):
        NoiseModel(T=0.05, calibration_factor=0.0)
    with pytest.raises(Exception):
        NoiseModel(T=0.05, interpretation="pink")
