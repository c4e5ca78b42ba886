"""Stochastic Euler integration of the damped driven phase dynamics.

The dimensionless equation of motion is

    dv/dtau = -beta*v - sin(phi) + i_b + i_drive(tau)   (+ noise kick)
    dphi/dtau = v

advanced with the semi-implicit Euler scheme (velocity first, then position
with the updated velocity). Switching is detected at step granularity by
phi > phi_star.

Trapped-state early exit: once a trajectory has settled far enough below the
barrier that the probability of a later noise-activated escape within the
remaining horizon is negligible (margin of ``trap_margin_thetas`` effective
temperatures, with a worst-case allowance for resonant CW pumping), the run is
declared censored without integrating to tau_max. The label is identical to
what full integration would produce up to an escape probability below ~1e-10;
set ``trap_detect=False`` to integrate censored runs to the full horizon.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Tuple

import numpy as np
from numba import njit, prange

from .drive import ContinuousWave, DriveSignal, PhotonPulse, PULSE_WINDOW_WIDTHS, drive_current
from .noise import NoiseModel, effective_temperature, kick_scale
from .physics import (
    DerivedScales,
    InvalidParameterError,
    JunctionParams,
    OperatingPoint,
    barrier_height,
    washboard_potential,
    well_minimum,
)
from .rng import RngStream, U64, box_muller, stream_key, uniform53


class NonFiniteStateError(RuntimeError):
    """phi or v left the finite range during integration."""

    def __init__(self, step: int):
        super().__init__(f"non-finite state near step {step}")
        self.step = step


@dataclass(frozen=True)
class SimConfig:
    """Integration controls (all times dimensionless)."""

    dt: float = 1e-4
    tau_max: float = 2e5
    phi_star: float = math.pi
    initial_phase_range: Tuple[float, float] = (-0.1, 0.1)
    record_stride: int = 1
    trap_detect: bool = True
    trap_settle_tau: float = 24.0
    trap_margin_thetas: float = 34.0
    trap_check_tau: float = 4.0

    def __post_init__(self):
        if self.dt <= 0:
            raise InvalidParameterError(f"sim dt must be > 0, got {self.dt}")
        if self.tau_max <= 0:
            raise InvalidParameterError(f"sim tau_max must be > 0, got {self.tau_max}")
        if self.record_stride < 1:
            raise InvalidParameterError(f"sim record_stride must be >= 1, got {self.record_stride}")
        if self.initial_phase_range[0] > self.initial_phase_range[1]:
            raise InvalidParameterError("sim initial_phase_range must be (lo, hi) with lo <= hi")

    @property
    def n_steps(self) -> int:
        return int(round(self.tau_max / self.dt))


@dataclass(frozen=True)
class SwitchOutcome:
    """First-passage result of one trajectory."""

    switched: bool
    censored: bool
    tau_switch: Optional[float] = None

    def __post_init__(self):
        if self.switched == self.censored:
            raise InvalidParameterError("outcome must be exactly one of switched/censored")
        if self.switched and self.tau_switch is None:
            raise InvalidParameterError("switched outcome requires tau_switch")


@dataclass
class Trajectory:
    """Decimated (tau, phi, v) samples of one run."""

    tau: np.ndarray
    phi: np.ndarray
    v: np.ndarray

    def __post_init__(self):
        if not (len(self.tau) == len(self.phi) == len(self.v)):
            raise InvalidParameterError("trajectory arrays must have equal length")


# Drive kind codes used inside the kernels.
DRIVE_NONE = 0
DRIVE_CW = 1
DRIVE_PULSE = 2

# Early-exit status codes.
_STATUS_CENSORED = 0
_STATUS_SWITCHED = 1
_STATUS_NONFINITE = -1


def _drive_code(signal: DriveSignal):
    """Flatten a drive signal to (kind, amp, omega, tau_ph, tau_d) scalars."""
    if signal is None:
        return DRIVE_NONE, 0.0, 0.0, 1.0, 0.0
    if isinstance(signal, ContinuousWave):
        return DRIVE_CW, signal.i_mw, signal.omega_s_norm, 1.0, 0.0
    if isinstance(signal, PhotonPulse):
        return DRIVE_PULSE, signal.amp_norm, signal.omega_ph_norm, signal.tau_ph, signal.tau_d
    raise InvalidParameterError(f"unknown drive signal type {type(signal).__name__}")


@njit(cache=True)
def _first_passage(
    phi,
    v,
    i_b,
    beta,
    dt,
    n_steps,
    phi_star,
    drive_kind,
    d_amp,
    d_omega,
    d_tau_ph,
    d_tau_d,
    kick,
    key,
    ctr,
    check_every,
    trap_on,
    trap_start_step,
    trap_limit,
    u_min,
):
    """Advance until crossing/horizon/trap-exit. Returns (status, step, ctr, phi, v).

    ``step`` is the 1-based step index whose end state first crossed phi_star
    (tau_switch = step*dt), or the step at which the run was closed out.
    """
    c = U64(ctr)
    cache = 0.0
    has_cache = False
    p_lo = -1
    p_hi = -1
    if drive_kind == DRIVE_PULSE:
        p_lo = int((d_tau_d - PULSE_WINDOW_WIDTHS * d_tau_ph) / dt) - 1
        p_hi = int((d_tau_d + PULSE_WINDOW_WIDTHS * d_tau_ph) / dt) + 1
    next_check = check_every
    for i in range(n_steps):
        tau = i * dt
        force = i_b - math.sin(phi) - beta * v
        if drive_kind == DRIVE_CW:
            force += d_amp * math.sin(d_omega * tau)
        elif drive_kind == DRIVE_PULSE:
            if p_lo <= i <= p_hi:
                x = (tau - d_tau_d) / d_tau_ph
                force += d_amp * math.exp(-0.5 * x * x) * math.cos(d_omega * (tau - d_tau_d))
        v += force * dt
        if kick != 0.0:
            if has_cache:
                g = cache
                has_cache = False
            else:
                g, cache, c = box_muller(key, c)
                has_cache = True
            v += kick * g
        phi += v * dt
        if phi > phi_star:
            return _STATUS_SWITCHED, i + 1, c, phi, v
        if i + 1 >= next_check:
            next_check += check_every
            if not (math.isfinite(phi) and math.isfinite(v)):
                return _STATUS_NONFINITE, i + 1, c, phi, v
            if trap_on and i + 1 >= trap_start_step:
                e_rel = 0.5 * v * v + (1.0 - math.cos(phi) - i_b * phi) - u_min
                if e_rel < trap_limit:
                    return _STATUS_CENSORED, i + 1, c, phi, v
    return _STATUS_CENSORED, n_steps, c, phi, v


@njit(cache=True)
def _first_passage_recorded(
    phi,
    v,
    i_b,
    beta,
    dt,
    n_steps,
    phi_star,
    drive_kind,
    d_amp,
    d_omega,
    d_tau_ph,
    d_tau_d,
    kick,
    key,
    ctr,
    stride,
    out_phi,
    out_v,
):
    """First-passage path with decimated recording (no trap early-exit).

    Sample k holds the state after k*stride steps; sample 0 is the initial
    state. Returns (status, step, ctr, n_samples).
    """
    c = U64(ctr)
    cache = 0.0
    has_cache = False
    out_phi[0] = phi
    out_v[0] = v
    n_rec = 1
    p_lo = -1
    p_hi = -1
    if drive_kind == DRIVE_PULSE:
        p_lo = int((d_tau_d - PULSE_WINDOW_WIDTHS * d_tau_ph) / dt) - 1
        p_hi = int((d_tau_d + PULSE_WINDOW_WIDTHS * d_tau_ph) / dt) + 1
    for i in range(n_steps):
        tau = i * dt
        force = i_b - math.sin(phi) - beta * v
        if drive_kind == DRIVE_CW:
            force += d_amp * math.sin(d_omega * tau)
        elif drive_kind == DRIVE_PULSE:
            if p_lo <= i <= p_hi:
                x = (tau - d_tau_d) / d_tau_ph
                force += d_amp * math.exp(-0.5 * x * x) * math.cos(d_omega * (tau - d_tau_d))
        v += force * dt
        if kick != 0.0:
            if has_cache:
                g = cache
                has_cache = False
            else:
                g, cache, c = box_muller(key, c)
                has_cache = True
            v += kick * g
        phi += v * dt
        if (i + 1) % stride == 0:
            out_phi[n_rec] = phi
            out_v[n_rec] = v
            n_rec += 1
            if not (math.isfinite(phi) and math.isfinite(v)):
                return _STATUS_NONFINITE, i + 1, c, n_rec
        if phi > phi_star:
            return _STATUS_SWITCHED, i + 1, c, n_rec
    return _STATUS_CENSORED, n_steps, c, n_rec


@njit(cache=True)
def _fixed_duration_recorded(
    phi,
    v,
    i_b,
    beta,
    dt,
    n_steps,
    drive_kind,
    d_amp,
    d_omega,
    d_tau_ph,
    d_tau_d,
    kick,
    key,
    ctr,
    stride,
    out_phi,
    out_v,
):
    """Integrate a fixed number of steps with no stopping (running state kept).

    Used for voltage traces, spectra, and responsivity averaging. Returns
    (status, ctr, n_samples).
    """
    c = U64(ctr)
    cache = 0.0
    has_cache = False
    out_phi[0] = phi
    out_v[0] = v
    n_rec = 1
    p_lo = -1
    p_hi = -1
    if drive_kind == DRIVE_PULSE:
        p_lo = int((d_tau_d - PULSE_WINDOW_WIDTHS * d_tau_ph) / dt) - 1
        p_hi = int((d_tau_d + PULSE_WINDOW_WIDTHS * d_tau_ph) / dt) + 1
    for i in range(n_steps):
        tau = i * dt
        force = i_b - math.sin(phi) - beta * v
        if drive_kind == DRIVE_CW:
            force += d_amp * math.sin(d_omega * tau)
        elif drive_kind == DRIVE_PULSE:
            if p_lo <= i <= p_hi:
                x = (tau - d_tau_d) / d_tau_ph
                force += d_amp * math.exp(-0.5 * x * x) * math.cos(d_omega * (tau - d_tau_d))
        v += force * dt
        if kick != 0.0:
            if has_cache:
                g = cache
                has_cache = False
            else:
                g, cache, c = box_muller(key, c)
                has_cache = True
            v += kick * g
        phi += v * dt
        if (i + 1) % stride == 0:
            out_phi[n_rec] = phi
            out_v[n_rec] = v
            n_rec += 1
    if not (math.isfinite(phi) and math.isfinite(v)):
        return _STATUS_NONFINITE, c, n_rec
    return _STATUS_CENSORED, c, n_rec


@njit(cache=True, parallel=True)
def _ensemble_kernel(
    n_runs,
    master_seed,
    phi0_lo,
    phi0_hi,
    i_b,
    beta,
    dt,
    n_steps,
    phi_star,
    drive_kind,
    d_amp,
    d_omega,
    d_tau_ph,
    d_tau_d,
    kick,
    check_every,
    trap_on,
    trap_start_step,
    trap_limit,
    u_min,
    out_status,
    out_tau,
):
    """Independent first-passage runs, one reproducible stream per run."""
    for r in prange(n_runs):
        key = stream_key(master_seed, r)
        phi0 = phi0_lo + (phi0_hi - phi0_lo) * uniform53(U64(0), key)
        status, step, _, _, _ = _first_passage(
            phi0,
            0.0,
            i_b,
            beta,
            dt,
            n_steps,
            phi_star,
            drive_kind,
            d_amp,
            d_omega,
            d_tau_ph,
            d_tau_d,
            kick,
            key,
            U64(1),
            check_every,
            trap_on,
            trap_start_step,
            trap_limit,
            u_min,
        )
        out_status[r] = status
        out_tau[r] = step * dt


def step(state: Tuple[float, float], i_b: float, drive: DriveSignal, noise_kick: float, dt: float, beta: float):
    """One semi-implicit Euler step from (phi, v); reference implementation.

    The drive is evaluated at the pre-step time carried in the state's tau if
    given as (phi, v, tau); plain (phi, v) evaluates the drive at tau = 0.
    """
    if len(state) == 3:
        phi, v, tau = state
    else:
        phi, v = state
        tau = 0.0
    i_drive = drive_current(drive, tau)
    v = v + (-beta * v - math.sin(phi) + i_b + i_drive) * dt + noise_kick
    phi = phi + v * dt
    return phi, v


def _trap_params(
    params: JunctionParams,
    scales: DerivedScales,
    op: OperatingPoint,
    drive: DriveSignal,
    noise: NoiseModel,
    config: SimConfig,
):
    """Resolve (trap_on, start_step, energy_limit, u_min) for the kernels.

    Trap detection stays off when the margin cannot be certified: bias at or
    above critical, a CW drive strong enough to pump a well's worth of energy,
    or an effective temperature so high that ``trap_margin_thetas`` thetas do
    not fit under the barrier.
    """
    u_min = float(washboard_potential(well_minimum(op.i_b), op.i_b)) if op.i_b < 1.0 else 0.0
    if not config.trap_detect or op.i_b >= 1.0:
        return False, 0, 0.0, u_min
    theta = effective_temperature(noise, params, scales, op)
    du = barrier_height(op.i_b)
    margin = config.trap_margin_thetas * theta
    start_tau = config.trap_settle_tau
    if isinstance(drive, ContinuousWave):
        if drive.i_mw > 0 and scales.beta > 0:
            margin += 8.0 * (drive.i_mw / scales.beta) ** 2
    elif isinstance(drive, PhotonPulse):
        start_tau = max(start_tau, drive.tau_d + PULSE_WINDOW_WIDTHS * drive.tau_ph + config.trap_settle_tau)
    limit = du - margin
    # Settled wells have E ~ theta, so the check still fires reliably down to
    # limits of a fraction of theta; below that the trap cannot trigger and
    # censored runs must integrate the full horizon.
    if limit <= max(0.5 * theta, 1e-12):
        return False, 0, 0.0, u_min
    return True, int(start_tau / config.dt), limit, u_min


def run_trajectory(
    params: JunctionParams,
    scales: DerivedScales,
    op: OperatingPoint,
    drive: DriveSignal,
    noise: NoiseModel,
    stream: RngStream,
    config: SimConfig,
    record: bool = False,
):
    """Integrate one first-passage trajectory.

    The stream's counter 0 draws the initial phase (uniform in the configured
    range); subsequent counters feed the noise. Returns (SwitchOutcome,
    Trajectory or None).
    """
    key = stream_key(stream.master_seed, stream.stream_id)
    phi0_lo, phi0_hi = config.initial_phase_range
    phi0 = phi0_lo + (phi0_hi - phi0_lo) * uniform53(U64(0), key)
    kick = kick_scale(noise, params, scales, op, config.dt)
    kind, d_amp, d_omega, d_tau_ph, d_tau_d = _drive_code(drive)
    n_steps = config.n_steps
    check_every = max(1, int(config.trap_check_tau / config.dt))

    if record:
        n_samples = n_steps // config.record_stride + 1
        out_phi = np.empty(n_samples)
        out_v = np.empty(n_samples)
        status, last_step, _, n_rec = _first_passage_recorded(
            phi0, 0.0, op.i_b, scales.beta, config.dt, n_steps, config.phi_star,
            kind, d_amp, d_omega, d_tau_ph, d_tau_d, kick, key, U64(1),
            config.record_stride, out_phi, out_v,
        )
        if status == _STATUS_NONFINITE:
            raise NonFiniteStateError(last_step)
        tau = np.arange(n_rec) * (config.dt * config.record_stride)
        traj = Trajectory(tau=tau, phi=out_phi[:n_rec].copy(), v=out_v[:n_rec].copy())
    else:
        trap_on, trap_start, trap_limit, u_min = _trap_params(params, scales, op, drive, noise, config)
        status, last_step, _, _, _ = _first_passage(
            phi0, 0.0, op.i_b, scales.beta, config.dt, n_steps, config.phi_star,
            kind, d_amp, d_omega, d_tau_ph, d_tau_d, kick, key, U64(1),
            check_every, trap_on, trap_start, trap_limit, u_min,
        )
        if status == _STATUS_NONFINITE:
            raise NonFiniteStateError(last_step)
        traj = None

    if status == _STATUS_SWITCHED:
        return SwitchOutcome(switched=True, censored=False, tau_switch=last_step * config.dt), traj
    return SwitchOutcome(switched=False, censored=True), traj


def run_voltage_trace(
    params: JunctionParams,
    scales: DerivedScales,
    op: OperatingPoint,
    drive: DriveSignal,
    noise: NoiseModel,
    stream: RngStream,
    config: SimConfig,
    duration: float,
    phi0: Optional[float] = None,
    v0: float = 0.0,
    use_initial_phase_range: bool = False,
) -> Trajectory:
    """Fixed-duration trace that keeps integrating through a switching event.

    ``phi0 = None`` starts from the well minimum (the quiet trapped state used
    for noise spectra); pass an explicit phi0 to reproduce escape transients,
    or set ``use_initial_phase_range`` to draw it from the configured range
    (stream counter 0, matching first-passage runs).
    """
    key = stream_key(stream.master_seed, stream.stream_id)
    if use_initial_phase_range:
        lo, hi = config.initial_phase_range
        phi0 = lo + (hi - lo) * uniform53(U64(0), key)
    elif phi0 is None:
        phi0 = well_minimum(op.i_b) if op.i_b < 1.0 else 0.0
    kick = kick_scale(noise, params, scales, op, config.dt)
    kind, d_amp, d_omega, d_tau_ph, d_tau_d = _drive_code(drive)
    n_steps = int(round(duration / config.dt))
    n_samples = n_steps // config.record_stride + 1
    out_phi = np.empty(n_samples)
    out_v = np.empty(n_samples)
    status, _, n_rec = _fixed_duration_recorded(
        phi0, v0, op.i_b, scales.beta, config.dt, n_steps,
        kind, d_amp, d_omega, d_tau_ph, d_tau_d, kick, key, U64(1),
        config.record_stride, out_phi, out_v,
    )
    if status == _STATUS_NONFINITE:
        raise NonFiniteStateError(n_steps)
    tau = np.arange(n_rec) * (config.dt * config.record_stride)
    return Trajectory(tau=tau, phi=out_phi[:n_rec], v=out_v[:n_rec])


def voltage_series(traj: Trajectory, scales: DerivedScales) -> np.ndarray:
    """Convert dphi/dtau samples to junction voltage in volts."""
    if len(traj.v) == 0:
        raise InvalidParameterError("voltage_series requires a non-empty trajectory")
    return scales.v_to_volts * traj.v
