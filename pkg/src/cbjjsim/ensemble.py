"""N-trajectory Monte Carlo batches and switching statistics.

Trajectories within an ensemble use stream ids 0..n_runs-1 under a common
master seed, so matched-seed comparisons (same master seed, different drive)
share noise realizations run by run. Sweeps derive per-point seeds as
master_seed + grid index.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field, replace
from typing import List, Optional, Tuple

import numpy as np

from .drive import ContinuousWave, DriveSignal, PhotonPulse
from .integrator import SimConfig, _drive_code, _ensemble_kernel, _trap_params
from .noise import NoiseModel, kick_scale
from .physics import DerivedScales, InvalidParameterError, JunctionParams, OperatingPoint

logger = logging.getLogger(__name__)

SWEEP_AXES = ("bias", "temperature", "photon_number", "drive_amplitude")

SWEEP_COLUMNS = ("grid_value", "n_runs", "n_switched", "n_censored", "mean_gamma", "sem_sq_gamma")


class EnsembleError(RuntimeError):
    """Too many trajectories failed with non-finite state."""


@dataclass(frozen=True)
class EnsembleConfig:
    op: OperatingPoint
    noise: NoiseModel
    drive: DriveSignal = None
    sim: SimConfig = field(default_factory=SimConfig)
    n_runs: int = 1000
    master_seed: int = 0

    def __post_init__(self):
        if self.n_runs < 2:
            raise InvalidParameterError(f"ensemble n_runs must be >= 2, got {self.n_runs}")


@dataclass(frozen=True)
class SwitchStats:
    """Ensemble switching-time statistics.

    ``times`` holds tau_switch for switched runs in stream-id order.
    ``sem_sq_gamma`` is the squared standard error of the mean,
    sum((t - mean)^2) / (N (N - 1)) over the N switched runs.
    """

    times: np.ndarray
    n_runs: int
    n_switched: int
    n_censored: int
    mean_gamma: float
    sem_sq_gamma: float
    n_error: int = 0

    def __post_init__(self):
        if self.n_switched + self.n_censored + self.n_error != self.n_runs:
            raise InvalidParameterError("switch counts must partition n_runs")

    @property
    def censored_fraction(self) -> float:
        return self.n_censored / self.n_runs


def _stats_from_arrays(status: np.ndarray, tau: np.ndarray) -> SwitchStats:
    switched = status == 1
    errored = status == -1
    times = tau[switched]
    n_sw = int(switched.sum())
    if n_sw > 0:
        mean = float(times.mean())
        sem_sq = float(((times - mean) ** 2).sum() / (n_sw * (n_sw - 1))) if n_sw > 1 else 0.0
    else:
        mean = math.nan
        sem_sq = math.nan
    return SwitchStats(
        times=times,
        n_runs=int(status.size),
        n_switched=n_sw,
        n_censored=int(status.size - n_sw - errored.sum()),
        mean_gamma=mean,
        sem_sq_gamma=sem_sq,
        n_error=int(errored.sum()),
    )


def run_ensemble(params: JunctionParams, scales: DerivedScales, config: EnsembleConfig) -> SwitchStats:
    """Run config.n_runs independent first-passage trajectories."""
    op = config.op
    sim = config.sim
    kick = kick_scale(config.noise, params, scales, op, sim.dt)
    kind, d_amp, d_omega, d_tau_ph, d_tau_d = _drive_code(config.drive)
    trap_on, trap_start, trap_limit, u_min = _trap_params(params, scales, op, config.drive, config.noise, sim)
    status = np.empty(config.n_runs, dtype=np.int64)
    tau = np.empty(config.n_runs)
    phi0_lo, phi0_hi = sim.initial_phase_range
    _ensemble_kernel(
        config.n_runs,
        config.master_seed,
        phi0_lo,
        phi0_hi,
        op.i_b,
        scales.beta,
        sim.dt,
        sim.n_steps,
        sim.phi_star,
        kind,
        d_amp,
        d_omega,
        d_tau_ph,
        d_tau_d,
        kick,
        max(1, int(sim.trap_check_tau / sim.dt)),
        trap_on,
        trap_start,
        trap_limit,
        u_min,
        status,
        tau,
    )
    n_err = int((status == -1).sum())
    if n_err > 0:
        bad = np.flatnonzero(status == -1)
        if n_err > 0.01 * config.n_runs:
            raise EnsembleError(f"{n_err}/{config.n_runs} trajectories hit non-finite state (streams {bad[:5]}...)")
        logger.warning("%d/%d trajectories hit non-finite state (streams %s)", n_err, config.n_runs, bad[:10])
    return _stats_from_arrays(status, tau)


class SweepError(RuntimeError):
    """Ensemble failure at a specific grid point."""

    def __init__(self, axis: str, value: float, cause: Exception):
        super().__init__(f"sweep failed at {axis}={value}: {cause}")
        self.axis = axis
        self.value = value


def _config_at(config: EnsembleConfig, axis: str, value: float, index: int,
               params: JunctionParams, scales: DerivedScales) -> EnsembleConfig:
    seed = config.master_seed + index
    if axis == "bias":
        return replace(config, op=replace(config.op, i_b=float(value)), master_seed=seed)
    if axis == "temperature":
        return replace(
            config,
            op=replace(config.op, T=float(value)),
            noise=config.noise.with_temperature(float(value)),
            master_seed=seed,
        )
    if axis == "photon_number":
        if not isinstance(config.drive, PhotonPulse):
            raise InvalidParameterError("photon_number sweep requires a PhotonPulse drive")
        base = config.drive
        pulse = PhotonPulse.create(
            N=float(value),
            omega_ph=base.omega_ph_norm * scales.omega_J,
            t_ph=base.tau_ph / scales.omega_J,
            t_d=base.tau_d / scales.omega_J,
            params=params,
            scales=scales,
        )
        return replace(config, drive=pulse, master_seed=seed)
    if axis == "drive_amplitude":
        if not isinstance(config.drive, ContinuousWave):
            raise InvalidParameterError("drive_amplitude sweep requires a ContinuousWave drive")
        return replace(config, drive=replace(config.drive, i_mw=float(value)), master_seed=seed)
    raise InvalidParameterError(f"unknown sweep axis {axis!r}; expected one of {SWEEP_AXES}")


def sweep(
    params: JunctionParams,
    scales: DerivedScales,
    config: EnsembleConfig,
    axis: str,
    grid,
) -> List[Tuple[float, SwitchStats]]:
    """One ensemble per grid point; grid must be non-empty and sorted."""
    grid = list(grid)
    if not grid:
        raise InvalidParameterError("sweep grid must be non-empty")
    if any(b < a for a, b in zip(grid, grid[1:])):
        raise InvalidParameterError("sweep grid must be sorted ascending")
    out = []
    for k, x in enumerate(grid):
        try:
            cfg = _config_at(config, axis, x, k, params, scales)
            out.append((float(x), run_ensemble(params, scales, cfg)))
        except InvalidParameterError:
            raise
        except Exception as exc:  # noqa: BLE001 - tag grid point, re-raise
            raise SweepError(axis, float(x), exc) from exc
    return out


def sweep_rows(results: List[Tuple[float, SwitchStats]]) -> List[Tuple]:
    """Flatten sweep results to the documented CSV row layout."""
    return [
        (x, s.n_runs, s.n_switched, s.n_censored, s.mean_gamma, s.sem_sq_gamma)
        for x, s in results
    ]
