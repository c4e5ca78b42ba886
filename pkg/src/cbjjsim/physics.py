"""Device parameters, physical constants, and washboard-potential quantities.

Everything simulation-facing is dimensionless: currents are normalized to the
critical current I0, times to the inverse plasma frequency 1/omega_J, and
energies to the Josephson energy E_J. SI units appear only at the boundaries
(configuration input, metrics output).
"""

from __future__ import annotations

import math
from dataclasses import dataclass


class InvalidParameterError(ValueError):
    """A physical parameter violates its allowed range."""


@dataclass(frozen=True)
class PhysicalConstants:
    """CODATA values to 6 significant figures (J*s, J*s, C, J/K)."""

    hbar: float = 1.054572e-34
    h: float = 6.626070e-34
    e_charge: float = 1.602177e-19
    k_B: float = 1.380649e-23


CONSTANTS = PhysicalConstants()


@dataclass(frozen=True)
class JunctionParams:
    """Junction device constants: critical current (A), shunt resistance (Ohm),
    capacitance (F)."""

    I0: float
    R: float
    C: float

    def __post_init__(self):
        for name in ("I0", "R", "C"):
            if not getattr(self, name) > 0:
                raise InvalidParameterError(f"junction {name} must be > 0, got {getattr(self, name)}")


@dataclass(frozen=True)
class OperatingPoint:
    """Normalized dc bias i_b = I_b/I0 and bath temperature T (K).

    Trapped-phase operation needs i_b < 1; values >= 1 are allowed here for
    running-state studies (the washboard then has no minima).
    """

    i_b: float
    T: float

    def __post_init__(self):
        if self.i_b < 0.0:
            raise InvalidParameterError(f"operating i_b must be >= 0, got {self.i_b}")
        if self.T < 0.0:
            raise InvalidParameterError(f"operating T must be >= 0, got {self.T}")


@dataclass(frozen=True)
class DerivedScales:
    """Normalization scales derived from junction constants.

    omega_J: plasma frequency (rad/s)
    beta:    damping parameter 1/(R C omega_J)
    E_J:     Josephson energy (J)
    """

    omega_J: float
    beta: float
    E_J: float

    def omega_J_star(self, i_b: float) -> float:
        """Bias-modulated plasma frequency (1 - i_b^2)^(1/4) * omega_J (rad/s)."""
        if not (0.0 <= i_b < 1.0):
            raise InvalidParameterError(f"i_b must be in [0, 1) for omega_J_star, got {i_b}")
        return (1.0 - i_b * i_b) ** 0.25 * self.omega_J

    @property
    def v_to_volts(self) -> float:
        """Conversion from dphi/dtau to junction voltage: hbar*omega_J/(2e) (V)."""
        return CONSTANTS.hbar * self.omega_J / (2.0 * CONSTANTS.e_charge)


def derive_scales(params: JunctionParams) -> DerivedScales:
    """Compute plasma frequency, damping and Josephson energy for a junction."""
    c = CONSTANTS
    omega_J = math.sqrt(2.0 * c.e_charge * params.I0 / (c.hbar * params.C))
    beta = 1.0 / (params.R * params.C * omega_J)
    E_J = c.hbar * params.I0 / (2.0 * c.e_charge)
    return DerivedScales(omega_J=omega_J, beta=beta, E_J=E_J)


def washboard_potential(phi, i_b):
    """Tilted-washboard potential U/E_J = 1 - cos(phi) - i_b*phi.

    Accepts scalars or numpy arrays.
    """
    import numpy as np

    return 1.0 - np.cos(phi) - i_b * phi


def barrier_height(i_b: float) -> float:
    """Barrier height dU/E_J = 2[sqrt(1-i_b^2) - i_b*arccos(i_b)] for i_b in [0, 1]."""
    if not (0.0 <= i_b <= 1.0):
        raise InvalidParameterError(f"barrier_height requires i_b in [0, 1], got {i_b}")
    return 2.0 * (math.sqrt(1.0 - i_b * i_b) - i_b * math.acos(i_b))


def well_minimum(i_b: float) -> float:
    """Phase of the metastable well minimum, arcsin(i_b), for i_b < 1."""
    return math.asin(i_b)


def barrier_top(i_b: float) -> float:
    """Phase of the barrier maximum, pi - arcsin(i_b), for i_b < 1."""
    return math.pi - math.asin(i_b)


_NORMALIZE_KINDS = ("current", "time", "frequency", "voltage")


def normalize(value: float, kind: str, params: JunctionParams, scales: DerivedScales) -> float:
    """SI -> dimensionless: current/I0, tau = omega_J*t, omega' = omega/omega_J,
    v = V/(hbar*omega_J/2e)."""
    if kind == "current":
        return value / params.I0
    if kind == "time":
        return value * scales.omega_J
    if kind == "frequency":
        return value / scales.omega_J
    if kind == "voltage":
        return value / scales.v_to_volts
    raise InvalidParameterError(f"unknown normalization kind {kind!r}; expected one of {_NORMALIZE_KINDS}")


def denormalize(value: float, kind: str, params: JunctionParams, scales: DerivedScales) -> float:
    """Inverse of :func:`normalize`; round-trips are identities to float precision."""
    if kind == "current":
        return value * params.I0
    if kind == "time":
        return value / scales.omega_J
    if kind == "frequency":
        return value * scales.omega_J
    if kind == "voltage":
        return value * scales.v_to_volts
    raise InvalidParameterError(f"unknown normalization kind {kind!r}; expected one of {_NORMALIZE_KINDS}")
