"""Detection figures of merit.

Kumar-Carroll discriminability between switching-time ensembles, voltage-noise
spectra, responsivity, NEP, the minimum detectable current and its KC floor,
and photon-number thresholds. All ensemble comparisons use matched seeds
(common random numbers), which removes most Monte Carlo variance from the
differences being measured.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import List, Optional, Sequence, Tuple

import numpy as np
from numba import njit, prange
from scipy import signal as sp_signal

from .drive import ContinuousWave, PhotonPulse
from .ensemble import EnsembleConfig, SwitchStats, run_ensemble
from .integrator import SimConfig, run_voltage_trace, voltage_series
from .noise import NoiseModel, kick_scale
from .physics import DerivedScales, InvalidParameterError, JunctionParams, OperatingPoint
from .rng import RngStream, U64, box_muller, stream_key, uniform53


class InsufficientDataError(RuntimeError):
    """Not enough switched runs to form statistics."""


class DegenerateStatsError(ZeroDivisionError):
    """Both ensembles have zero variance but different means."""


class ThresholdNotFoundError(RuntimeError):
    """No grid point cleared the discriminability threshold."""


@dataclass(frozen=True)
class KCResult:
    """Kumar-Carroll index for two switching-time ensembles."""

    d_kc: float
    stats0: SwitchStats
    stats1: SwitchStats

    @property
    def censored_fractions(self) -> Tuple[float, float]:
        return (self.stats0.censored_fraction, self.stats1.censored_fraction)


def kc_index(stats0: SwitchStats, stats1: SwitchStats) -> KCResult:
    """d_KC = |mean0 - mean1| / sqrt((sem_sq0 + sem_sq1)/2).

    The denominator uses the squared standard errors of the means, so with
    N-run ensembles the index grows like sqrt(N) for a fixed mean difference.
    """
    for s in (stats0, stats1):
        if s.n_switched < 2:
            raise InsufficientDataError(
                f"kc_index needs >= 2 switched runs per ensemble, got {s.n_switched}/{s.n_runs}"
            )
    num = abs(stats0.mean_gamma - stats1.mean_gamma)
    denom_sq = 0.5 * (stats0.sem_sq_gamma + stats1.sem_sq_gamma)
    if denom_sq == 0.0:
        if num == 0.0:
            return KCResult(d_kc=0.0, stats0=stats0, stats1=stats1)
        raise DegenerateStatsError("zero variance in both ensembles with unequal means")
    return KCResult(d_kc=num / math.sqrt(denom_sq), stats0=stats0, stats1=stats1)


@dataclass(frozen=True)
class DetectionReport:
    """NEP chain outputs; the stored fields satisfy S = delta_V/P_in,
    NEP = S_v/S and I_min = sqrt(NEP/R) exactly as computed."""

    S_v: float  # V/sqrt(Hz)
    delta_V: float  # V
    P_in: float  # W
    S: float  # V/W
    NEP: float  # W/sqrt(Hz)
    I_min: float  # A
    min_d_kc: float
    f_probe: float  # Hz
    N_min: Optional[int] = None


def _choose_nperseg(fs: float, f_probe: float, target: int, rel_tol: float = 0.005) -> int:
    """Segment length near ``target`` putting f_probe within rel_tol of a bin center."""
    best = None
    m0 = max(1, round(target * f_probe / fs))
    for m in range(max(1, m0 - 4), m0 + 5):
        n = round(m * fs / f_probe)
        if n < 16:
            continue
        err = abs(f_probe / (fs / n) - round(f_probe / (fs / n)))
        if best is None or err < best[0]:
            best = (err, n)
    if best is None or best[0] > rel_tol * (f_probe / (fs / best[1])):
        # fall back: dense segments always satisfy the tolerance eventually
        n = round(round(target * f_probe / fs) * fs / f_probe)
        return max(n, 16)
    return best[1]


MIN_PSD_SAMPLES = 1 << 18


def voltage_noise_psd(
    params: JunctionParams,
    scales: DerivedScales,
    op: OperatingPoint,
    noise: NoiseModel,
    config: SimConfig,
    duration: float,
    record_stride: int = 64,
    discard_tau: float = 200.0,
    seed: int = 0,
    stream_id: int = 0,
):
    """Averaged-periodogram estimate of the trapped-state voltage noise.

    Runs a drive-off trace from the well minimum, discards the transient, and
    Welch-estimates the one-sided PSD in V^2/Hz against physical frequency.
    Returns (freqs_Hz, psd, f_grid_probe) where f_grid_probe is the bin center
    nearest the bias-modulated plasma frequency.
    """
    cfg = replace(config, record_stride=record_stride)
    traj = run_voltage_trace(
        params, scales, op, None, noise, RngStream(seed, stream_id), cfg, duration=duration + discard_tau
    )
    n_discard = int(discard_tau / (config.dt * record_stride))
    volts = voltage_series(traj, scales)[n_discard:]
    if volts.size < MIN_PSD_SAMPLES:
        raise InsufficientDataError(
            f"PSD needs >= {MIN_PSD_SAMPLES} samples after transient discard, got {volts.size}"
        )
    fs = scales.omega_J / (config.dt * record_stride)
    f_probe = scales.omega_J_star(op.i_b) / (2.0 * math.pi)
    nperseg = _choose_nperseg(fs, f_probe, target=1 << 15)
    freqs, psd = sp_signal.welch(
        volts, fs=fs, window="hann", nperseg=nperseg, noverlap=nperseg // 2, detrend="constant"
    )
    k = int(np.argmin(np.abs(freqs - f_probe)))
    return freqs, psd, freqs[k]


def psd_value_at(freqs: np.ndarray, psd: np.ndarray, f: float) -> float:
    """PSD at the bin nearest f."""
    return float(psd[int(np.argmin(np.abs(freqs - f)))])


@njit(cache=True, parallel=True)
def _windowed_mean_v_kernel(
    n_tasks,
    master_seed,
    phi0_lo,
    phi0_hi,
    i_b,
    beta,
    dt,
    n_steps,
    window_start_step,
    d_amp,
    d_omega,
    kick,
    out_mean_v,
):
    """Matched pairs of fixed-duration runs; task 2k is undriven, 2k+1 driven.

    Accumulates the time-averaged dphi/dtau over [window_start_step, n_steps).
    """
    for j in prange(n_tasks):
        pair = j // 2
        driven = j % 2 == 1
        key = stream_key(master_seed, pair)
        phi = phi0_lo + (phi0_hi - phi0_lo) * uniform53(U64(0), key)
        v = 0.0
        c = U64(1)
        cache = 0.0
        has_cache = False
        acc = 0.0
        for i in range(n_steps):
            tau = i * dt
            force = i_b - math.sin(phi) - beta * v
            if driven:
                force += d_amp * math.sin(d_omega * tau)
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
            if i >= window_start_step:
                acc += v
        out_mean_v[j] = acc / (n_steps - window_start_step)


def responsivity(
    params: JunctionParams,
    scales: DerivedScales,
    op: OperatingPoint,
    noise: NoiseModel,
    drive: ContinuousWave,
    config: SimConfig,
    n_pairs: int = 64,
    duration: Optional[float] = None,
    window_fraction: float = 0.8,
    master_seed: int = 0,
) -> float:
    """Mean voltage response |<V>_drive - <V>_nodrive| in volts.

    Matched noise seeds between the driven and undriven member of each pair;
    the average runs over the final ``window_fraction`` of a ``duration`` run
    (default tau_max/10).
    """
    if duration is None:
        duration = config.tau_max / 10.0
    n_steps = int(round(duration / config.dt))
    window_start = int(round((1.0 - window_fraction) * n_steps))
    kick = kick_scale(noise, params, scales, op, config.dt)
    out = np.empty(2 * n_pairs)
    phi0_lo, phi0_hi = config.initial_phase_range
    _windowed_mean_v_kernel(
        2 * n_pairs,
        master_seed,
        phi0_lo,
        phi0_hi,
        op.i_b,
        scales.beta,
        config.dt,
        n_steps,
        window_start,
        drive.i_mw,
        drive.omega_s_norm,
        kick,
        out,
    )
    mean_nodrive = out[0::2].mean()
    mean_drive = out[1::2].mean()
    return abs(mean_drive - mean_nodrive) * scales.v_to_volts


def nep_chain(
    params: JunctionParams,
    scales: DerivedScales,
    op: OperatingPoint,
    noise: NoiseModel,
    probe: ContinuousWave,
    config: SimConfig,
    psd_duration: float = 5e4,
    n_pairs: int = 64,
    responsivity_duration: Optional[float] = None,
    n_runs: int = 1000,
    master_seed: int = 0,
) -> DetectionReport:
    """Full sensitivity chain: S_v -> delta_V -> S -> NEP -> I_min -> min[d_KC].

    min[d_KC] is the KC index between matched-seed ensembles driven by a CW
    current of amplitude I_min and undriven ones.
    """
    f_probe = probe.omega_s_norm * scales.omega_J / (2.0 * math.pi)
    freqs, psd, _ = voltage_noise_psd(params, scales, op, noise, config, duration=psd_duration, seed=master_seed)
    S_v = math.sqrt(psd_value_at(freqs, psd, f_probe))
    delta_V = responsivity(
        params, scales, op, noise, probe, config,
        n_pairs=n_pairs, duration=responsivity_duration, master_seed=master_seed + 1,
    )
    I_mw = probe.i_mw * params.I0
    P_in = I_mw * I_mw * params.R
    S = delta_V / P_in
    NEP = S_v / S
    I_min = math.sqrt(NEP / params.R)

    base = EnsembleConfig(op=op, noise=noise, drive=None, sim=config, n_runs=n_runs, master_seed=master_seed + 2)
    stats_off = run_ensemble(params, scales, base)
    drive_min = ContinuousWave(i_mw=I_min / params.I0, omega_s_norm=probe.omega_s_norm)
    stats_min = run_ensemble(params, scales, replace(base, drive=drive_min))
    min_d_kc = kc_index(stats_off, stats_min).d_kc

    return DetectionReport(
        S_v=S_v, delta_V=delta_V, P_in=P_in, S=S, NEP=NEP, I_min=I_min,
        min_d_kc=min_d_kc, f_probe=f_probe,
    )


def photon_threshold(
    params: JunctionParams,
    scales: DerivedScales,
    op: OperatingPoint,
    noise: NoiseModel,
    pulse_template: PhotonPulse,
    min_d_kc: float,
    n_grid: Sequence[int],
    config: SimConfig,
    n_runs: int = 1000,
    master_seed: int = 0,
) -> Tuple[int, List[Tuple[int, float]]]:
    """Smallest photon number on the grid whose d_KC clears min_d_kc.

    Linear ascending scan with a shared undriven reference ensemble and
    matched seeds across N. Returns (N_min, [(N, d_kc), ...]); the curve covers
    the scanned prefix through the first clearing point (or the whole grid if
    none clears, in which case ThresholdNotFoundError carries the curve).
    """
    n_grid = list(n_grid)
    if not n_grid or any(b <= a for a, b in zip(n_grid, n_grid[1:])):
        raise InvalidParameterError("photon grid must be non-empty, ascending")
    base = EnsembleConfig(op=op, noise=noise, drive=None, sim=config, n_runs=n_runs, master_seed=master_seed)
    stats_off = run_ensemble(params, scales, base)
    curve: List[Tuple[int, float]] = []
    for N in n_grid:
        pulse = PhotonPulse.create(
            N=float(N),
            omega_ph=pulse_template.omega_ph_norm * scales.omega_J,
            t_ph=pulse_template.tau_ph / scales.omega_J,
            t_d=pulse_template.tau_d / scales.omega_J,
            params=params,
            scales=scales,
        )
        stats_on = run_ensemble(params, scales, replace(base, drive=pulse))
        d = kc_index(stats_off, stats_on).d_kc
        curve.append((int(N), d))
        if d > min_d_kc:
            return int(N), curve
    err = ThresholdNotFoundError(
        f"no photon number on the grid gave d_KC > {min_d_kc:.4g} (max {max(d for _, d in curve):.4g})"
    )
    err.curve = curve
    raise err


def optimize_bias(
    params: JunctionParams,
    scales: DerivedScales,
    op_template: OperatingPoint,
    noise: NoiseModel,
    pulse_template: PhotonPulse,
    min_d_kc: float,
    bias_grid: Sequence[float],
    n_grid: Sequence[int],
    config: SimConfig,
    n_runs: int = 1000,
    master_seed: int = 0,
):
    """Scan bias points, retuning the pulse to omega_J*(i_b) at each.

    Returns (best_i_b, results) where results is a list of
    (i_b, N_min or None, curve). Grid points where no N clears the threshold
    are recorded with N_min = None rather than failing the scan.
    """
    bias_grid = list(bias_grid)
    if not bias_grid or not all(0.0 < b < 1.0 for b in bias_grid):
        raise InvalidParameterError("bias grid must be non-empty with entries in (0, 1)")
    results = []
    for k, i_b in enumerate(bias_grid):
        op = replace(op_template, i_b=float(i_b))
        pulse = PhotonPulse.create(
            N=1.0,
            omega_ph=scales.omega_J_star(float(i_b)),
            t_ph=pulse_template.tau_ph / scales.omega_J,
            t_d=pulse_template.tau_d / scales.omega_J,
            params=params,
            scales=scales,
        )
        try:
            n_min, curve = photon_threshold(
                params, scales, op, noise, pulse, min_d_kc, n_grid, config,
                n_runs=n_runs, master_seed=master_seed + 1000 * k,
            )
            results.append((float(i_b), n_min, curve))
        except ThresholdNotFoundError as exc:
            results.append((float(i_b), None, exc.curve))
    found = [(i_b, n) for i_b, n, _ in results if n is not None]
    if not found:
        raise ThresholdNotFoundError("no bias point produced a detectable photon number on the grid")
    best_i_b = min(found, key=lambda t: (t[1], t[0]))[0]
    return best_i_b, results
