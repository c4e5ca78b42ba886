"""Deterministic drive currents added to the dc bias.

Three variants: no drive, a continuous microwave tone, and an N-photon
Gaussian current pulse. All evaluation happens in normalized units; the pulse
amplitude (which mixes SI quantities) is converted once at construction.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Union

import numpy as np
from scipy.integrate import quad

from .physics import CONSTANTS, DerivedScales, InvalidParameterError, JunctionParams

# Beyond this many pulse widths from the arrival time the envelope is below
# exp(-32) ~ 1e-14 and the pulse is treated as exactly zero.
PULSE_WINDOW_WIDTHS = 8.0


@dataclass(frozen=True)
class ContinuousWave:
    """CW tone: i(tau) = i_mw * sin(omega_s_norm * tau).

    i_mw is the amplitude I_MW/I0; omega_s_norm is omega_s/omega_J.
    """

    i_mw: float
    omega_s_norm: float

    def __post_init__(self):
        if self.i_mw < 0:
            raise InvalidParameterError(f"CW amplitude must be >= 0, got {self.i_mw}")


@dataclass(frozen=True)
class PhotonPulse:
    """Gaussian microwave current pulse carrying N photons of energy hbar*omega_ph.

    Fields are normalized: omega_ph_norm = omega_ph/omega_J, tau_ph and tau_d in
    units of 1/omega_J. amp_norm is the peak current over I0, fixed at
    construction from the SI prefactor sqrt(N * hbar*omega_ph / (R * t_ph)).
    """

    N: float
    omega_ph_norm: float
    tau_ph: float
    tau_d: float
    amp_norm: float

    def __post_init__(self):
        if self.N < 0:
            raise InvalidParameterError(f"photon number must be >= 0, got {self.N}")
        if self.tau_ph <= 0:
            raise InvalidParameterError(f"pulse width must be > 0, got {self.tau_ph}")

    @classmethod
    def create(
        cls,
        N: float,
        omega_ph: float,
        t_ph: float,
        t_d: float,
        params: JunctionParams,
        scales: DerivedScales,
    ) -> "PhotonPulse":
        """Build from SI inputs: omega_ph (rad/s), t_ph and t_d (s)."""
        if t_ph <= 0:
            raise InvalidParameterError(f"pulse width must be > 0, got {t_ph}")
        peak_A = math.sqrt(N * CONSTANTS.hbar * omega_ph / (params.R * t_ph))
        return cls(
            N=N,
            omega_ph_norm=omega_ph / scales.omega_J,
            tau_ph=t_ph * scales.omega_J,
            tau_d=t_d * scales.omega_J,
            amp_norm=peak_A / params.I0,
        )


DriveSignal = Optional[Union[ContinuousWave, PhotonPulse]]


def drive_current(signal: DriveSignal, tau, params: JunctionParams = None, scales: DerivedScales = None):
    """Normalized drive current at dimensionless time tau (scalar or array)."""
    if signal is None:
        return np.zeros_like(np.asarray(tau, dtype=float)) if np.ndim(tau) else 0.0
    if isinstance(signal, ContinuousWave):
        return signal.i_mw * np.sin(signal.omega_s_norm * np.asarray(tau, dtype=float))
    if isinstance(signal, PhotonPulse):
        x = (np.asarray(tau, dtype=float) - signal.tau_d) / signal.tau_ph
        envelope = np.where(np.abs(x) > PULSE_WINDOW_WIDTHS, 0.0, np.exp(-0.5 * x * x))
        carrier = np.cos(signal.omega_ph_norm * (np.asarray(tau, dtype=float) - signal.tau_d))
        out = signal.amp_norm * envelope * carrier
        return float(out) if np.ndim(tau) == 0 else out
    raise InvalidParameterError(f"unknown drive signal type {type(signal).__name__}")


def pulse_energy(signal: PhotonPulse, params: JunctionParams, scales: DerivedScales) -> float:
    """Dissipated energy integral(I^2 R dt) over +-8 pulse widths, in joules."""
    if not isinstance(signal, PhotonPulse):
        raise InvalidParameterError("pulse_energy requires a PhotonPulse signal")
    if signal.N == 0:
        return 0.0
    peak_A = signal.amp_norm * params.I0
    t_ph = signal.tau_ph / scales.omega_J
    omega_ph = signal.omega_ph_norm * scales.omega_J

    def integrand(t):
        return (peak_A * math.exp(-0.5 * (t / t_ph) ** 2) * math.cos(omega_ph * t)) ** 2 * params.R

    val, _ = quad(integrand, -PULSE_WINDOW_WIDTHS * t_ph, PULSE_WINDOW_WIDTHS * t_ph, limit=400)
    return val
