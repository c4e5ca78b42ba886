"""Thermal-noise current generation.

The noise current spectrum follows the Planck (blackbody) form rather than its
high-temperature Nyquist limit, because the device operates at mK temperatures
where h*f >> k_B*T at the plasma band.

Spectral-density convention: ``planck_spectral_density(f, ...)`` is the
two-sided spectral density of the dimensionless noise current with respect to
dimensionless time tau = omega_J * t, parameterized by physical frequency f in
Hz. A white process of level S0 under this convention produces per-step Euler
velocity kicks of variance S0 * dt, which is how the integrator consumes it.

The absolute noise normalization of the underlying model is dimensionally
ambiguous; a single multiplicative ``calibration_factor`` (fit against the
switching-probability knee, see the experiments module) scales the kick
amplitude. The default white level S0 is the Planck density evaluated at the
bias-modulated plasma frequency, the band the escape dynamics actually
samples.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np
from scipy.integrate import quad

from .physics import CONSTANTS, DerivedScales, InvalidParameterError, JunctionParams, OperatingPoint
from .rng import RngStream, gaussian_fill, stream_key

INTERPRETATIONS = ("white", "colored")


class QuadratureError(RuntimeError):
    """Adaptive quadrature of the noise spectrum failed to converge."""


@dataclass(frozen=True)
class NoiseModel:
    """Bath temperature (K), spectral interpretation, and amplitude calibration."""

    T: float
    interpretation: str = "white"
    calibration_factor: float = 1.0

    def __post_init__(self):
        if self.T < 0:
            raise InvalidParameterError(f"noise T must be >= 0, got {self.T}")
        if self.calibration_factor <= 0:
            raise InvalidParameterError(f"calibration_factor must be > 0, got {self.calibration_factor}")
        if self.interpretation not in INTERPRETATIONS:
            raise InvalidParameterError(
                f"unknown noise interpretation {self.interpretation!r}; expected one of {INTERPRETATIONS}"
            )

    def with_temperature(self, T: float) -> "NoiseModel":
        return replace(self, T=T)


def planck_spectral_density(f, T: float, params: JunctionParams, scales: DerivedScales):
    """Planck-law density 4 h |f| omega_J / (R I0^2 (exp(h|f|/k_B T) - 1)).

    Negative frequencies are folded through |f|; f = 0 returns the analytic
    limit 4 k_B T omega_J / (R I0^2). Accepts scalars or arrays. T = 0 gives 0.
    """
    c = CONSTANTS
    prefac = 4.0 * scales.omega_J / (params.R * params.I0**2)
    if T == 0.0:
        return np.zeros_like(np.asarray(f, dtype=float)) if np.ndim(f) else 0.0
    af = np.abs(np.asarray(f, dtype=float))
    x = c.h * af / (c.k_B * T)
    # hf/(exp(x)-1) -> k_B*T as x -> 0; expm1 keeps small-x accuracy.
    with np.errstate(over="ignore"):
        body = np.where(x > 0, c.h * af / np.expm1(np.where(x > 700, 700, x)), c.k_B * T)
    body = np.where(x > 700, 0.0, body)
    out = prefac * body
    return float(out) if np.ndim(f) == 0 else out


def integrated_noise_variance(model: NoiseModel, params: JunctionParams, scales: DerivedScales) -> float:
    """Two-sided quadrature of the Planck density over all frequencies.

    Analytically equals 2 * (4 omega_J / (R I0^2)) * pi^2 (k_B T)^2 / (6 h); the
    quadrature is checked against that in the tests. Excludes the calibration
    factor.
    """
    if model.T == 0.0:
        return 0.0
    f_th = CONSTANTS.k_B * model.T / CONSTANTS.h  # thermal rolloff frequency

    def integrand(f):
        return planck_spectral_density(f, model.T, params, scales)

    total = 0.0
    for a, b in ((0.0, 5.0 * f_th), (5.0 * f_th, 50.0 * f_th), (50.0 * f_th, 700.0 * f_th)):
        val, err = quad(integrand, a, b, limit=200)
        if err > 1e-6 * abs(val) + 1e-300:
            raise QuadratureError(f"noise-spectrum quadrature did not converge on [{a:g}, {b:g}]")
        total += val
    return 2.0 * total


def effective_white_level(model: NoiseModel, params: JunctionParams, scales: DerivedScales, op: OperatingPoint) -> float:
    """White-mode level S0: the Planck density at f = omega_J*(i_b)/2pi.

    Excludes the calibration factor (which multiplies the kick amplitude).
    """
    omega_band = scales.omega_J_star(op.i_b) if op.i_b < 1.0 else scales.omega_J
    return planck_spectral_density(omega_band / (2.0 * math.pi), model.T, params, scales)


def kick_scale(model: NoiseModel, params: JunctionParams, scales: DerivedScales, op: OperatingPoint, dt: float) -> float:
    """Per-step velocity-kick amplitude: calibration * sqrt(S0 * dt)."""
    if dt <= 0:
        raise InvalidParameterError(f"dt must be > 0, got {dt}")
    s0 = effective_white_level(model, params, scales, op)
    return model.calibration_factor * math.sqrt(s0 * dt)


def effective_temperature(model: NoiseModel, params: JunctionParams, scales: DerivedScales, op: OperatingPoint) -> float:
    """Effective dimensionless well temperature theta = c^2 S0 / (2 beta).

    Velocity kicks of variance c^2 S0 dt give diffusion 2D = c^2 S0; with
    damping beta the stationary energy scale is D/beta (units of E_J).
    """
    s0 = effective_white_level(model, params, scales, op)
    return model.calibration_factor**2 * s0 / (2.0 * scales.beta)


def noise_increment(
    model: NoiseModel,
    stream,
    dt: float,
    params: JunctionParams,
    scales: DerivedScales,
    op: OperatingPoint,
) -> float:
    """Next per-step velocity kick.

    White mode draws from the stream's Gaussian sequence; colored mode expects
    ``stream`` to be a :class:`ColoredNoiseSequence` and converts its current
    sample to a kick (force * dt).
    """
    if model.interpretation == "colored":
        if not isinstance(stream, ColoredNoiseSequence):
            raise InvalidParameterError("colored noise requires a ColoredNoiseSequence stream")
        return stream.next() * dt
    scale = kick_scale(model, params, scales, op, dt)
    if scale == 0.0:
        return 0.0
    return scale * stream.gaussian()


class ColoredNoiseSequence:
    """Precomputed noise-current samples with the Planck spectrum.

    Synthesized in the frequency domain from the stream's Gaussians, so the
    sequence is a pure function of (master_seed, stream_id, length, dt).
    """

    def __init__(self, samples: np.ndarray, dt: float):
        self.samples = samples
        self.dt = dt
        self._idx = 0

    def next(self) -> float:
        v = self.samples[self._idx]
        self._idx += 1
        return float(v)


def colored_sequence(
    model: NoiseModel,
    params: JunctionParams,
    scales: DerivedScales,
    stream: RngStream,
    n_steps: int,
    dt: float,
) -> ColoredNoiseSequence:
    """Synthesize n_steps current samples i_n(tau_k) with PSD c^2 * S_planck.

    FFT synthesis: each rfft bin gets a complex Gaussian with expected power
    matching the target density; bin 0 (and Nyquist) carry real Gaussians.
    """
    if n_steps < 2:
        raise InvalidParameterError("colored sequence needs n_steps >= 2")
    if n_steps > 1 << 26:
        raise InvalidParameterError("colored sequence capped at 2**26 steps; use white mode for long runs")
    n = int(n_steps)
    # Physical frequencies of the rfft bins for sample spacing dt/omega_J.
    f = np.fft.rfftfreq(n, d=dt / scales.omega_J)
    psd = model.calibration_factor**2 * planck_spectral_density(f, model.T, params, scales)
    # Two-sided PSD in dimensionless time: variance per bin = psd * dnu,
    # dnu = 1/(n*dt). rfft bins except DC/Nyquist represent two mirror bins.
    dnu = 1.0 / (n * dt)
    n_bins = f.size
    g = np.empty(2 * n_bins)
    key = stream_key(stream.master_seed, stream.stream_id)
    end_ctr = gaussian_fill(key, np.uint64(stream.counter), g)
    stream.counter = int(end_ctr)
    re = g[0::2]
    im = g[1::2]
    amp = np.sqrt(psd * dnu * n * n / 2.0)  # irfft includes 1/n; power split re/im
    spec = amp * (re + 1j * im)
    spec[0] = math.sqrt(psd[0] * dnu) * n * re[0]
    if n % 2 == 0:
        spec[-1] = math.sqrt(psd[-1] * dnu) * n * re[-1]
    samples = np.fft.irfft(spec, n)
    return ColoredNoiseSequence(samples, dt)
