"""Scripted reproductions of the reference figures and tables.

Each experiment id maps to one recipe that wires junction presets, ensembles,
and metrics into CSV outputs plus a JSON manifest sufficient for bit-identical
re-execution. Output layout: <out>/<experiment-id>/<junction>/{data.csv,
manifest.json}; multi-junction experiments also write a merged view under the
junction name "all".
"""

from __future__ import annotations

import hashlib
import json
import math
import time
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from . import __version__
from .csvio import read_csv, rows_to_text, write_csv
from .drive import ContinuousWave, PhotonPulse, drive_current
from .ensemble import EnsembleConfig, SwitchStats, run_ensemble, sweep, sweep_rows, SWEEP_COLUMNS
from .integrator import SimConfig, run_trajectory, run_voltage_trace, voltage_series
from .metrics import (
    DetectionReport,
    ThresholdNotFoundError,
    kc_index,
    nep_chain,
    photon_threshold,
    psd_value_at,
    responsivity,
    voltage_noise_psd,
)
from .noise import NoiseModel
from .physics import (
    DerivedScales,
    InvalidParameterError,
    JunctionParams,
    OperatingPoint,
    derive_scales,
)
from .rng import RngStream


class UnknownExperimentError(ValueError):
    """Experiment id or id/junction combination not defined."""


class CalibrationError(RuntimeError):
    """Noise calibration could not reach its target."""


@dataclass(frozen=True)
class JunctionPreset:
    """Device row: critical current (uA), resistance (Ohm), capacitance (fF),
    operating temperature (mK), bias, probe amplitude and signal frequency."""

    I0_uA: float
    R_ohm: float
    C_fF: float
    T_mK: float
    i_b: float
    i_mw_probe: float
    f_signal_GHz: float
    min_d_kc_reference: float  # reference detectability floor (source table)

    def params(self) -> JunctionParams:
        return JunctionParams(I0=self.I0_uA * 1e-6, R=self.R_ohm, C=self.C_fF * 1e-15)

    def operating(self) -> OperatingPoint:
        return OperatingPoint(i_b=self.i_b, T=self.T_mK * 1e-3)


JUNCTIONS: Dict[str, JunctionPreset] = {
    "JJ1": JunctionPreset(8.586, 29.0, 2700.0, 50.0, 0.789, 0.005, 12.25, 0.25),
    "JJ2": JunctionPreset(2.0, 130.0, 630.0, 48.0, 0.786, 0.005, 12.28, 0.32),
    "JJ3": JunctionPreset(0.975, 290.0, 93.0, 50.0, 0.825, 0.005, 21.37, 0.17),
}

# Frozen single noise calibration factor, fit on the JJ1 switching-onset
# observable by calibrate_noise() and persisted here (see that function).
DEFAULT_CALIBRATION_FACTOR = 150.0  # placeholder; frozen by calibration run

# Calibration observable: switching probability at a bias below the geometric
# onset knee, where the count responds monotonically to the noise amplitude.
CALIBRATION_BIAS = 0.770
CALIBRATION_TARGET_P = 0.145
CALIBRATION_SEED = 20240
CALIBRATION_N_RUNS = 2000
KNEE_TARGET_IB = 0.789
KNEE_TOLERANCE = 0.005

# Photon-pulse template shared by fig9/fig10/fig11/table2.
PULSE_T_PH_NS = 0.005
PULSE_T_D_FIG9_NS = 0.02  # shape plot, as captioned
PULSE_T_D_DETECT_NS = 0.125  # frozen from the detectability-threshold structure fit

EXPERIMENT_IDS = (
    "fig3", "fig4", "fig5a", "fig5b", "fig6", "fig7a", "fig7b", "fig8",
    "fig9", "fig10", "fig11", "table1", "table2",
)

_SINGLE_JUNCTION_IDS = {"fig3", "fig4", "fig5a", "fig5b", "fig6", "fig7a", "fig7b", "fig8"}
_MULTI_JUNCTION_IDS = {"fig9", "fig10", "fig11", "table1", "table2"}


@dataclass(frozen=True)
class ExperimentSpec:
    id: str
    junction: Optional[str] = None  # None = all defined for this id
    master_seed: int = 42
    overrides: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.id not in EXPERIMENT_IDS:
            raise UnknownExperimentError(f"unknown experiment id {self.id!r}; known: {EXPERIMENT_IDS}")
        if self.junction is not None and self.junction not in JUNCTIONS:
            raise UnknownExperimentError(f"unknown junction {self.junction!r}; known: {sorted(JUNCTIONS)}")
        if self.id in _SINGLE_JUNCTION_IDS and self.junction not in (None, "JJ1"):
            raise UnknownExperimentError(f"{self.id} is defined only for JJ1 in the source material")


@dataclass
class RunManifest:
    data: dict

    def write(self, path: Path):
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(json.dumps(self.data, sort_keys=True, indent=2) + "\n", encoding="utf-8")


def _sha256(path: Path) -> str:
    h = hashlib.sha256()
    h.update(path.read_bytes())
    return h.hexdigest()


def _base_context(preset: JunctionPreset, master_seed: int, overrides: dict):
    params = preset.params()
    scales = derive_scales(params)
    op = preset.operating()
    sim = SimConfig()
    noise = NoiseModel(T=op.T, calibration_factor=overrides.get("calibration_factor", DEFAULT_CALIBRATION_FACTOR))
    if "T_mK" in overrides:
        op = replace(op, T=overrides["T_mK"] * 1e-3)
        noise = noise.with_temperature(op.T)
    if "i_b" in overrides:
        op = replace(op, i_b=overrides["i_b"])
    if "tau_max" in overrides:
        sim = replace(sim, tau_max=overrides["tau_max"])
    return params, scales, op, sim, noise


def _pulse(preset: JunctionPreset, params, scales, N: float, t_d_ns: float) -> PhotonPulse:
    return PhotonPulse.create(
        N=N,
        omega_ph=2e9 * math.pi * preset.f_signal_GHz,
        t_ph=PULSE_T_PH_NS * 1e-9,
        t_d=t_d_ns * 1e-9,
        params=params,
        scales=scales,
    )


def _probe(preset: JunctionPreset, scales) -> ContinuousWave:
    return ContinuousWave(
        i_mw=preset.i_mw_probe,
        omega_s_norm=2e9 * math.pi * preset.f_signal_GHz / scales.omega_J,
    )


# ----------------------------------------------------------------------------
# Experiment recipes. Each returns (columns, rows, results_dict, notes).


def _exp_fig3(preset, master_seed, overrides):
    """Deterministic phase/voltage traces with and without CW drive (T = 0)."""
    params, scales, op, sim, noise = _base_context(preset, master_seed, overrides)
    noise = replace(noise, T=0.0)
    amps = overrides.get("amplitude_grid", (0.0, 5e-4, 1e-3, 2e-3))
    phi0 = overrides.get("phi0", -0.001)  # marginally trapped initial phase
    horizon = overrides.get("horizon", 60.0)
    sim = replace(sim, tau_max=horizon, record_stride=10)
    omega = scales.omega_J_star(op.i_b) / scales.omega_J
    rows = []
    switched = {}
    for amp in amps:
        drive = ContinuousWave(i_mw=amp, omega_s_norm=omega) if amp > 0 else None
        traj = run_voltage_trace(
            params, scales, op, drive, noise, RngStream(master_seed, 0), sim,
            duration=horizon, phi0=phi0,
        )
        volts = voltage_series(traj, scales)
        switched[amp] = bool(np.any(traj.phi > sim.phi_star))
        for t, p, v, V in zip(traj.tau, traj.phi, traj.v, volts):
            rows.append((amp, t, p, v, V))
    results = {"switched_by_amplitude": {str(a): switched[a] for a in amps}, "phi0": phi0}
    notes = ["drive amplitude grid is not stated in the source; grid is a documented default"]
    return ("i_mw_over_i0", "tau", "phi", "v", "V_volts"), rows, results, notes


def _exp_fig4(preset, master_seed, overrides):
    """Noisy phase/voltage traces: some runs switch, others stay trapped."""
    params, scales, op, sim, noise = _base_context(preset, master_seed, overrides)
    horizon = overrides.get("horizon", 60.0)
    sim = replace(sim, tau_max=horizon, record_stride=10)
    rows = []
    outcomes = {}
    for stream_id in range(overrides.get("n_traces", 6)):
        traj = run_voltage_trace(
            params, scales, op, None, noise, RngStream(master_seed, stream_id), sim,
            duration=horizon, phi0=None, use_initial_phase_range=True,
        )
        volts = voltage_series(traj, scales)
        outcomes[stream_id] = bool(np.any(traj.phi > sim.phi_star))
        for t, p, v, V in zip(traj.tau, traj.phi, traj.v, volts):
            rows.append((stream_id, t, p, v, V))
    results = {"switched_by_stream": {str(k): v for k, v in outcomes.items()}}
    return ("stream_id", "tau", "phi", "v", "V_volts"), rows, results, []


FIG5A_BIAS_GRID = (0.760, 0.770, 0.775, 0.780, 0.785, 0.789, 0.793, 0.800, 0.810, 0.820)
FIG5B_T_GRID_K = (0.050, 0.071, 0.073, 0.075, 0.077, 0.079, 0.081)
FIG5B_TAU_MAX = 500.0


def _exp_fig5a(preset, master_seed, overrides):
    params, scales, op, sim, noise = _base_context(preset, master_seed, overrides)
    grid = overrides.get("bias_grid", FIG5A_BIAS_GRID)
    cfg = EnsembleConfig(op=op, noise=noise, drive=None, sim=sim,
                         n_runs=overrides.get("n_runs", 1000), master_seed=master_seed)
    results = sweep(params, scales, cfg, "bias", grid)
    rows = sweep_rows(results)
    summary = {"n_switched": [s.n_switched for _, s in results]}
    return SWEEP_COLUMNS, rows, summary, []


def _exp_fig5b(preset, master_seed, overrides):
    params, scales, op, sim, noise = _base_context(preset, master_seed, overrides)
    sim = replace(sim, tau_max=overrides.get("tau_max", FIG5B_TAU_MAX))
    grid = overrides.get("temperature_grid", FIG5B_T_GRID_K)
    cfg = EnsembleConfig(op=op, noise=noise, drive=None, sim=sim,
                         n_runs=overrides.get("n_runs", 1000), master_seed=master_seed)
    results = sweep(params, scales, cfg, "temperature", grid)
    rows = sweep_rows(results)
    summary = {"n_switched": [s.n_switched for _, s in results], "tau_max": sim.tau_max}
    notes = ["horizon shortened so the thermally activated rise spans the plotted range"]
    return SWEEP_COLUMNS, rows, summary, notes


FIG6_AMPLITUDE_GRID = (0.0, 1e-4, 5e-4, 1e-3)


def _exp_fig6(preset, master_seed, overrides):
    """Switching-time samples for several CW amplitudes, with d_KC vs no drive."""
    params, scales, op, sim, noise = _base_context(preset, master_seed, overrides)
    grid = overrides.get("amplitude_grid", FIG6_AMPLITUDE_GRID)
    omega = 2e9 * math.pi * preset.f_signal_GHz / scales.omega_J
    cfg = EnsembleConfig(op=op, noise=noise, drive=ContinuousWave(i_mw=0.0, omega_s_norm=omega),
                         sim=sim, n_runs=overrides.get("n_runs", 1000), master_seed=master_seed)
    results = sweep(params, scales, cfg, "drive_amplitude", grid)
    ref = results[0][1]
    rows = []
    d_values = {}
    for amp, stats in results:
        d = kc_index(ref, stats).d_kc if stats.n_switched >= 2 else float("nan")
        d_values[f"{amp:g}"] = d
        for k, t in enumerate(stats.times):
            rows.append((amp, k, t, d))
    results_dict = {
        "d_kc_vs_nodrive": d_values,
        "censored_fraction": {f"{amp:g}": s.censored_fraction for amp, s in results},
    }
    notes = [
        "intermediate drive amplitudes are not stated in the source; grid is a documented default",
        "per-amplitude ensembles use independent seeds (master_seed + grid index)",
    ]
    return ("i_mw_over_i0", "sample_index", "tau_switch", "d_kc_vs_nodrive"), rows, results_dict, notes


def _exp_fig7a(preset, master_seed, overrides):
    params, scales, op, sim, noise = _base_context(preset, master_seed, overrides)
    duration = overrides.get("duration", 5e4)
    freqs, psd, f_bin = voltage_noise_psd(params, scales, op, noise, sim, duration=duration, seed=master_seed)
    f_probe = 2e9 * math.pi * preset.f_signal_GHz / (2.0 * math.pi)
    s_vv = psd_value_at(freqs, psd, f_probe)
    rows = list(zip(freqs, psd))
    results = {
        "S_vv_at_probe_V2_per_Hz": s_vv,
        "S_v_at_probe_V_per_sqrtHz": math.sqrt(s_vv),
        "ten_log10_S_vv": 10.0 * math.log10(s_vv) if s_vv > 0 else None,
        "f_probe_Hz": f_probe,
        "duration_tau": duration,
    }
    return ("f_Hz", "S_vv_V2_per_Hz"), rows, results, []


def _exp_fig7b(preset, master_seed, overrides):
    """Windowed average voltage with and without the CW probe, matched seeds."""
    params, scales, op, sim, noise = _base_context(preset, master_seed, overrides)
    probe = _probe(preset, scales)
    n_pairs = overrides.get("n_pairs", 64)
    duration = overrides.get("duration", sim.tau_max / 10.0)
    delta_v = responsivity(params, scales, op, noise, probe, sim,
                           n_pairs=n_pairs, duration=duration, master_seed=master_seed)
    # single matched pair traces for the figure
    stride = 100
    sim_rec = replace(sim, record_stride=stride)
    trace_len = min(duration, 2000.0)
    t_off = run_voltage_trace(params, scales, op, None, noise, RngStream(master_seed, 0), sim_rec,
                              duration=trace_len, phi0=None, use_initial_phase_range=True)
    t_on = run_voltage_trace(params, scales, op, probe, noise, RngStream(master_seed, 0), sim_rec,
                             duration=trace_len, phi0=None, use_initial_phase_range=True)
    v_off = voltage_series(t_off, scales)
    v_on = voltage_series(t_on, scales)
    n = min(len(v_off), len(v_on))
    cum_off = np.cumsum(v_off[:n]) / np.arange(1, n + 1)
    cum_on = np.cumsum(v_on[:n]) / np.arange(1, n + 1)
    rows = list(zip(t_off.tau[:n], cum_off, cum_on))
    results = {
        "delta_V_volts": delta_v,
        "n_pairs": n_pairs,
        "duration_tau": duration,
        "window_fraction": 0.8,
        "probe_i_mw_over_i0": probe.i_mw,
    }
    notes = ["pair count and averaging window are documented defaults (not stated in the source)"]
    return ("tau", "V_running_mean_nodrive", "V_running_mean_drive"), rows, results, notes


def _exp_fig8(preset, master_seed, overrides):
    """Switching-time ensembles at the NEP-equivalent current vs no drive."""
    params, scales, op, sim, noise = _base_context(preset, master_seed, overrides)
    probe = _probe(preset, scales)
    report = nep_chain(
        params, scales, op, noise, probe, sim,
        psd_duration=overrides.get("psd_duration", 5e4),
        n_pairs=overrides.get("n_pairs", 64),
        responsivity_duration=overrides.get("responsivity_duration", None),
        n_runs=overrides.get("n_runs", 1000),
        master_seed=master_seed,
    )
    base = EnsembleConfig(op=op, noise=noise, drive=None, sim=sim,
                          n_runs=overrides.get("n_runs", 1000), master_seed=master_seed + 2)
    stats_off = run_ensemble(params, scales, base)
    drive = ContinuousWave(i_mw=report.I_min / params.I0, omega_s_norm=probe.omega_s_norm)
    stats_on = run_ensemble(params, scales, replace(base, drive=drive))
    rows = []
    for k, t in enumerate(stats_off.times):
        rows.append((0.0, k, t))
    for k, t in enumerate(stats_on.times):
        rows.append((drive.i_mw, k, t))
    results = {"detection_report": _report_dict(report, preset)}
    return ("i_mw_over_i0", "sample_index", "tau_switch"), rows, results, []


def _exp_fig9(preset, master_seed, overrides):
    """Single-photon pulse shape through this junction."""
    params = preset.params()
    scales = derive_scales(params)
    pulse = _pulse(preset, params, scales, N=overrides.get("photons", 1.0),
                   t_d_ns=overrides.get("t_d_ns", PULSE_T_D_FIG9_NS))
    t_ns = np.linspace(0.0, 0.04, overrides.get("n_points", 801))
    tau = t_ns * 1e-9 * scales.omega_J
    i_norm = np.array([drive_current(pulse, t) for t in tau])
    rows = [(t, i, i * params.I0 * 1e6) for t, i in zip(t_ns, i_norm)]
    results = {"peak_uA": pulse.amp_norm * params.I0 * 1e6, "amp_norm": pulse.amp_norm}
    return ("t_ns", "i_over_i0", "I_uA"), rows, results, []


def _exp_fig10(preset, master_seed, overrides):
    """30-photon pulse vs no drive; d_KC against the detectability floor."""
    params, scales, op, sim, noise = _base_context(preset, master_seed, overrides)
    n_photons = overrides.get("photons", 30.0)
    t_d_ns = overrides.get("t_d_ns", PULSE_T_D_DETECT_NS)
    pulse = _pulse(preset, params, scales, n_photons, t_d_ns)
    base = EnsembleConfig(op=op, noise=noise, drive=None, sim=sim,
                          n_runs=overrides.get("n_runs", 1000), master_seed=master_seed)
    stats_off = run_ensemble(params, scales, base)
    stats_on = run_ensemble(params, scales, replace(base, drive=pulse))
    d = kc_index(stats_off, stats_on).d_kc
    floor = preset.min_d_kc_reference
    rows = []
    for k, t in enumerate(stats_off.times):
        rows.append((0, k, t, d, floor))
    for k, t in enumerate(stats_on.times):
        rows.append((int(n_photons), k, t, d, floor))
    results = {
        "d_kc": d,
        "min_d_kc_reference": floor,
        "detectable": d > floor,
        "t_d_ns": t_d_ns,
        "censored_fractions": [stats_off.censored_fraction, stats_on.censored_fraction],
    }
    notes = ["pulse arrival time is a fitted default; see manifest configuration"]
    return ("photons", "sample_index", "tau_switch", "d_kc", "min_d_kc_reference"), rows, results, notes


FIG11_N_GRIDS = {
    "JJ1": tuple(range(2, 241, 2)),
    "JJ2": tuple(range(1, 121)),
    "JJ3": tuple(range(1, 121)),
}
FIG11_BIAS_OFFSETS = (-0.01, -0.005, 0.0, 0.005, 0.01)


def _exp_fig11(preset, master_seed, overrides):
    """Detectable photon number vs bias; pulse retuned to omega_J*(i_b)."""
    params, scales, op, sim, noise = _base_context(preset, master_seed, overrides)
    name = [k for k, v in JUNCTIONS.items() if v is preset][0]
    n_grid = overrides.get("n_grid", FIG11_N_GRIDS[name])
    bias_grid = overrides.get("bias_grid", tuple(op.i_b + o for o in FIG11_BIAS_OFFSETS))
    t_d_ns = overrides.get("t_d_ns", PULSE_T_D_DETECT_NS)
    floor = preset.min_d_kc_reference
    rows = []
    per_bias = []
    for k, i_b in enumerate(bias_grid):
        op_k = replace(op, i_b=float(i_b))
        f_res = scales.omega_J_star(float(i_b)) / (2.0 * math.pi)
        pulse_template = PhotonPulse.create(
            N=1.0, omega_ph=2.0 * math.pi * f_res, t_ph=PULSE_T_PH_NS * 1e-9,
            t_d=t_d_ns * 1e-9, params=params, scales=scales,
        )
        try:
            n_min, curve = photon_threshold(
                params, scales, op_k, noise, pulse_template, floor, n_grid, sim,
                n_runs=overrides.get("n_runs", 1000), master_seed=master_seed + 1000 * k,
            )
        except ThresholdNotFoundError as exc:
            n_min, curve = None, exc.curve
        per_bias.append((float(i_b), n_min))
        for N, d in curve:
            rows.append((float(i_b), f_res, N, d, floor, int(n_min is not None and N == n_min)))
    found = [(b, n) for b, n in per_bias if n is not None]
    best = min(found, key=lambda t: (t[1], t[0])) if found else (None, None)
    results = {
        "n_min_by_bias": {f"{b:.4f}": n for b, n in per_bias},
        "best_bias": best[0],
        "n_min_at_best_bias": best[1],
        "threshold_min_d_kc": floor,
        "t_d_ns": t_d_ns,
    }
    notes = ["threshold uses the reference detectability floor for this junction"]
    return ("i_b", "f_pulse_Hz", "photons", "d_kc", "threshold", "is_n_min"), rows, results, notes


def _report_dict(report: DetectionReport, preset: JunctionPreset) -> dict:
    return {
        "S_v_V_per_sqrtHz": report.S_v,
        "delta_V_volts": report.delta_V,
        "P_in_W": report.P_in,
        "S_V_per_W": report.S,
        "NEP_W_per_sqrtHz": report.NEP,
        "NEP_aW_per_sqrtHz": report.NEP * 1e18,
        "I_min_A": report.I_min,
        "I_min_nA": report.I_min * 1e9,
        "min_d_kc_measured": report.min_d_kc,
        "min_d_kc_reference": preset.min_d_kc_reference,
        "f_probe_Hz": report.f_probe,
    }


TABLE1_COLUMNS = (
    "junction", "I0_uA", "R_ohm", "C_fF", "T_mK", "i_b", "I_MW_over_I0",
    "omega_s_2pi_GHz", "NEP_aW_per_sqrtHz", "min_d_kc_measured", "min_d_kc_reference",
)


def _exp_table1(preset, master_seed, overrides):
    params, scales, op, sim, noise = _base_context(preset, master_seed, overrides)
    probe = _probe(preset, scales)
    report = nep_chain(
        params, scales, op, noise, probe, sim,
        psd_duration=overrides.get("psd_duration", 5e4),
        n_pairs=overrides.get("n_pairs", 64),
        responsivity_duration=overrides.get("responsivity_duration", None),
        n_runs=overrides.get("n_runs", 1000),
        master_seed=master_seed,
    )
    name = [k for k, v in JUNCTIONS.items() if v is preset][0]
    row = (
        name, preset.I0_uA, preset.R_ohm, preset.C_fF, preset.T_mK, preset.i_b,
        preset.i_mw_probe, preset.f_signal_GHz, report.NEP * 1e18,
        report.min_d_kc, preset.min_d_kc_reference,
    )
    results = {"detection_report": _report_dict(report, preset)}
    notes = [
        "NEP and min_d_kc derive from this artifact's calibrated noise model;"
        " see the discrepancy report in the manifest for the comparison caveat"
    ]
    return TABLE1_COLUMNS, [row], results, notes


TABLE2_COLUMNS = ("junction", "i_b", "threshold_min_d_kc", "N_min")


def _exp_table2(preset, master_seed, overrides):
    params, scales, op, sim, noise = _base_context(preset, master_seed, overrides)
    name = [k for k, v in JUNCTIONS.items() if v is preset][0]
    t_d_ns = overrides.get("t_d_ns", PULSE_T_D_DETECT_NS)
    pulse_template = _pulse(preset, params, scales, 1.0, t_d_ns)
    floor = preset.min_d_kc_reference
    n_grid = overrides.get("n_grid", FIG11_N_GRIDS[name])
    try:
        n_min, curve = photon_threshold(
            params, scales, op, noise, pulse_template, floor, n_grid, sim,
            n_runs=overrides.get("n_runs", 1000), master_seed=master_seed,
        )
    except ThresholdNotFoundError as exc:
        n_min, curve = None, exc.curve
    rows = [(name, preset.i_b, floor, -1 if n_min is None else n_min)]
    results = {"curve": [[int(N), d] for N, d in curve], "N_min": n_min, "t_d_ns": t_d_ns}
    return TABLE2_COLUMNS, rows, results, []


_RECIPES = {
    "fig3": _exp_fig3,
    "fig4": _exp_fig4,
    "fig5a": _exp_fig5a,
    "fig5b": _exp_fig5b,
    "fig6": _exp_fig6,
    "fig7a": _exp_fig7a,
    "fig7b": _exp_fig7b,
    "fig8": _exp_fig8,
    "fig9": _exp_fig9,
    "fig10": _exp_fig10,
    "fig11": _exp_fig11,
    "table1": _exp_table1,
    "table2": _exp_table2,
}


def run_experiment(spec: ExperimentSpec, out_root) -> List[Path]:
    """Run one experiment, writing data.csv + manifest.json per junction.

    Returns the list of manifest paths written. The manifest is written after
    its data file and carries the data checksum; outputs without a manifest
    are not valid.
    """
    out_root = Path(out_root)
    if spec.junction is not None:
        junctions = [spec.junction]
    elif spec.id in _SINGLE_JUNCTION_IDS:
        junctions = ["JJ1"]
    else:
        junctions = list(JUNCTIONS)
    manifests = []
    merged_rows = []
    merged_cols = None
    for name in junctions:
        preset = JUNCTIONS[name]
        t0 = time.time()
        cols, rows, results, notes = _RECIPES[spec.id](preset, spec.master_seed, spec.overrides)
        wall = time.time() - t0
        out_dir = out_root / spec.id / name
        data_path = write_csv(out_dir / "data.csv", cols, rows,
                              comments=[f"experiment={spec.id} junction={name} seed={spec.master_seed}"])
        manifest = RunManifest(
            {
                "experiment": spec.id,
                "junction": name,
                "master_seed": spec.master_seed,
                "code_version": __version__,
                "calibration_factor": spec.overrides.get("calibration_factor", DEFAULT_CALIBRATION_FACTOR),
                "junction_preset": vars(preset).copy(),
                "overrides": dict(spec.overrides),
                "columns": list(cols),
                "results": results,
                "notes": notes,
                "wall_clock_s": wall,
                "outputs": {"data.csv": _sha256(data_path)},
            }
        )
        manifest_path = out_dir / "manifest.json"
        manifest.write(manifest_path)
        manifests.append(manifest_path)
        if merged_cols is None:
            merged_cols = cols
        if cols == merged_cols:
            merged_rows.extend(rows if spec.id.startswith("table") else [])
    if spec.id in ("table1", "table2") and len(junctions) > 1:
        out_dir = out_root / spec.id / "all"
        data_path = write_csv(out_dir / "data.csv", merged_cols, merged_rows,
                              comments=[f"experiment={spec.id} merged seed={spec.master_seed}"])
        RunManifest(
            {
                "experiment": spec.id,
                "junction": "all",
                "master_seed": spec.master_seed,
                "code_version": __version__,
                "outputs": {"data.csv": _sha256(data_path)},
            }
        ).write(out_dir / "manifest.json")
        manifests.append(out_dir / "manifest.json")
    return manifests


def calibrate_noise(
    target_p: float = CALIBRATION_TARGET_P,
    bias: float = CALIBRATION_BIAS,
    n_runs: int = CALIBRATION_N_RUNS,
    seed: int = CALIBRATION_SEED,
    lo: float = 1e-3,
    hi: float = 1e3,
    verify_knee: bool = True,
    junction: str = "JJ1",
) -> float:
    """Fit the noise calibration factor on the switching-onset observable.

    The switching count at the geometric knee (50% point) is insensitive to
    the noise amplitude, so the fit targets the switching probability at a
    sub-onset bias (default 0.770), which responds monotonically. All
    evaluations reuse one seed, making the fit deterministic; the stated
    knee requirement (50% point at 0.789 +- 0.005) is verified afterward.
    """
    preset = JUNCTIONS[junction]
    params = preset.params()
    scales = derive_scales(params)
    sim = SimConfig()

    def p_switch(factor: float) -> float:
        noise = NoiseModel(T=preset.T_mK * 1e-3, calibration_factor=factor)
        op = OperatingPoint(i_b=bias, T=preset.T_mK * 1e-3)
        cfg = EnsembleConfig(op=op, noise=noise, drive=None, sim=sim, n_runs=n_runs, master_seed=seed)
        stats = run_ensemble(params, scales, cfg)
        return stats.n_switched / stats.n_runs

    # Stage the upper bracket: factors far above the useful range put the well
    # into the slow thermally-activated regime, which is expensive to simulate.
    p_lo = p_switch(lo)
    hi_eff = min(hi, 400.0)
    p_hi = p_switch(hi_eff)
    if p_hi < target_p and hi > hi_eff:
        hi_eff = hi
        p_hi = p_switch(hi_eff)
    if not (p_lo < target_p < p_hi):
        raise CalibrationError(
            f"target P={target_p} not bracketed on [{lo}, {hi_eff}]: P({lo})={p_lo}, P({hi_eff})={p_hi}"
        )
    a, b = math.log(lo), math.log(hi_eff)
    for _ in range(40):
        mid = 0.5 * (a + b)
        if b - a < 5e-3:
            break
        if p_switch(math.exp(mid)) < target_p:
            a = mid
        else:
            b = mid
    factor = math.exp(0.5 * (a + b))

    if verify_knee:
        noise = NoiseModel(T=preset.T_mK * 1e-3, calibration_factor=factor)
        op = OperatingPoint(i_b=preset.i_b, T=preset.T_mK * 1e-3)
        grid = [KNEE_TARGET_IB - 0.02, KNEE_TARGET_IB - 0.01, KNEE_TARGET_IB - 0.004,
                KNEE_TARGET_IB, KNEE_TARGET_IB + 0.004, KNEE_TARGET_IB + 0.01, KNEE_TARGET_IB + 0.02]
        cfg = EnsembleConfig(op=op, noise=noise, drive=None, sim=sim, n_runs=n_runs, master_seed=seed + 1)
        res = sweep(params, scales, cfg, "bias", grid)
        knee = _half_crossing([x for x, _ in res], [s.n_switched / s.n_runs for _, s in res])
        if knee is None or abs(knee - KNEE_TARGET_IB) > KNEE_TOLERANCE:
            raise CalibrationError(
                f"50%-switching point {knee} not within {KNEE_TOLERANCE} of {KNEE_TARGET_IB}"
            )
    return factor


def _half_crossing(xs: Sequence[float], ps: Sequence[float]) -> Optional[float]:
    """Interpolated x where p crosses 0.5."""
    for (x0, p0), (x1, p1) in zip(zip(xs, ps), zip(xs[1:], ps[1:])):
        if p0 < 0.5 <= p1:
            if p1 == p0:
                return x0
            return x0 + (0.5 - p0) * (x1 - x0) / (p1 - p0)
    return None
