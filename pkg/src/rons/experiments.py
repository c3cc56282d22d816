"""Named experiment reproductions with machine-readable outputs.

Each registered experiment builds its ansatz, model and quadrature from a
flat JSON config, integrates the reduced dynamics, runs the matching
reference oracle, and writes into its output directory:

    config.json       resolved config snapshot (rerunnable verbatim)
    trajectory.csv    t, q1..qn, J, J_raw, I1, I2, cond_M, cond_C
    fields.csv        field snapshots at a few times
    series_*.csv      named time series used by `compare`
    summary.json      metrics + file manifest, schema-validated

CSV values carry 17 significant digits so reruns of the same config and
version are byte-identical.
"""

from __future__ import annotations

import csv
import json
import os
import time
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Callable

import numpy as np

from . import __version__
from .ansatz import (
    GaussianWavePacket,
    HeatKernel,
    LinearModes,
    SineWave,
    VortexStreamFunction,
    fourier_modes,
)
from .engine import assemble, fit_initial, reduced_rhs
from .errors import IntegrationAbort, RonsError
from .hilbert import box_rule, make_rule, norm_sq, periodic_interval, real_line
from .integrate import IntegratorConfig, Trajectory, integrate
from .models import advection_diffusion, nlse, vorticity
from .oracles import (
    PointVortexState,
    SpectralState,
    exact_advdiff,
    finite_time_instability,
    galerkin_rhs,
    nlse_dns,
    point_vortex,
    point_vortex_hamiltonian,
    spectral_grid,
)

__all__ = [
    "ExperimentSpec",
    "RunRecord",
    "EXPERIMENTS",
    "list_experiments",
    "resolve_config",
    "run",
    "compare",
    "output_root",
]


def _fmt(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return str(bool(x))
    return f"{float(x):.17g}"


def _write_csv(path: Path, header: list[str], rows) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for row in rows:
            writer.writerow([_fmt(v) for v in row])


def _write_series(path: Path, times, columns: dict[str, np.ndarray]) -> None:
    header = ["t"] + list(columns)
    rows = zip(times, *columns.values())
    _write_csv(path, header, rows)


def _read_series(path: Path):
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        data = np.array([[float(v) for v in row] for row in reader])
    return header, data


def _trajectory_rows(traj: Trajectory):
    inv = traj.diagnostics.get("invariants")
    for i, t in enumerate(traj.times):
        row = [t, *traj.states[i]]
        row += [traj.diagnostics["J"][i], traj.diagnostics["J_raw"][i]]
        if inv is not None and inv.shape[1] >= 1:
            row.append(inv[i, 0])
            row.append(inv[i, 1] if inv.shape[1] >= 2 else np.nan)
        else:
            row += [np.nan, np.nan]
        row += [traj.diagnostics["cond_M"][i], traj.diagnostics["cond_C"][i]]
        yield row


def _write_trajectory(path: Path, traj: Trajectory) -> None:
    n = traj.states.shape[1]
    header = (
        ["t"]
        + [f"q{i + 1}" for i in range(n)]
        + ["J", "J_raw", "I1", "I2", "cond_M", "cond_C"]
    )
    _write_csv(path, header, _trajectory_rows(traj))


def _snapshot_times(t_end: float, count: int) -> np.ndarray:
    return np.linspace(0.0, t_end, count)


def output_root() -> Path:
    return Path(os.environ.get("RONS_OUT_DIR", "rons-out"))


# ---------------------------------------------------------------------------
# registry
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ExperimentSpec:
    name: str
    description: str
    defaults: dict
    runner: Callable


@dataclass(frozen=True)
class RunRecord:
    """Everything one run produced, mirrored in summary.json."""

    config: dict
    out_dir: Path
    files: dict[str, str]
    series: dict[str, str]
    metrics: dict
    status: str
    wall_time_s: float
    version: str
    abort_reason: str | None = None

    @property
    def summary_path(self) -> Path:
        return self.out_dir / "summary.json"


_COMMON_DEFAULTS = {
    "scheme": "rk45",
    "dt": None,
    "rtol": 1e-8,
    "atol": 1e-10,
    "stride": 1,
    "seed": 0,
    "snapshots": 5,
    "out_dir": None,
}


def _window_rule(family: VortexStreamFunction, pad: float, resolution: int):
    """Moving quadrature window following the vortex centers.

    The truncation box is the bounding box of the centers padded by
    `pad` times the largest length scale; node count stays fixed, so the
    rule is a pure function of q and translating configurations stay
    resolved without a domain that grows with the trajectory.
    """

    def factory(q):
        centers = family.centers(q)
        L = float(np.max(family.length_scales(q)))
        lo = centers.min(axis=0) - pad * L
        hi = centers.max(axis=0) + pad * L
        return box_rule(lo, hi, resolution)

    return factory


def _integrator_config(config: dict) -> IntegratorConfig:
    return IntegratorConfig(
        t_end=config["t_end"],
        scheme=config["scheme"],
        dt=config["dt"],
        rtol=config["rtol"],
        atol=config["atol"],
        stride=config["stride"],
    )


def _uniform_series(traj: Trajectory, column: Callable, n: int = 400):
    ts = np.linspace(traj.times[0], traj.times[-1], n)
    vals = np.array([column(traj.interpolate(t)) for t in ts])
    return ts, vals


# -- advdiff-exact ----------------------------------------------------------


def _run_advdiff(config, out_dir, files, series):
    family = SineWave()
    model = advection_diffusion(config["c"], config["nu"])
    A0, L0, phi0 = config["q0"]
    rule = make_rule(periodic_interval(2 * np.pi * L0), config["resolution"])
    traj = integrate(
        family, model, rule, (), config["q0"], _integrator_config(config)
    )

    c_, nu = config["c"], config["nu"]
    A_ex = A0 * np.exp(-nu * traj.times / L0**2)
    phi_ex = phi0 - c_ * traj.times / L0
    metrics = {
        "max_rel_err_A": float(np.max(np.abs(traj.states[:, 0] - A_ex)) / A0),
        "max_rel_err_L": float(np.max(np.abs(traj.states[:, 1] - L0)) / L0),
        "max_rel_err_phi": float(
            np.max(np.abs(traj.states[:, 2] - phi_ex)) / max(abs(c_) * config["t_end"] / L0, 1.0)
        ),
        "max_abs_Ldot": float(np.max(np.abs(traj.qdots[:, 1]))),
        "max_J_over_Jraw": float(
            np.max(traj.diagnostics["J"] / np.maximum(traj.diagnostics["J_raw"], 1e-300))
        ),
        "max_cond_M": float(np.max(traj.diagnostics["cond_M"])),
    }

    ts, amp = _uniform_series(traj, lambda q: q[0])
    _write_series(out_dir / "series_rons_amplitude.csv", ts, {"amplitude": amp})
    series["rons_amplitude"] = "series_rons_amplitude.csv"
    amp_ex = A0 * np.exp(-nu * ts / L0**2)
    _write_series(out_dir / "series_exact_amplitude.csv", ts, {"amplitude": amp_ex})
    series["exact_amplitude"] = "series_exact_amplitude.csv"

    _write_trajectory(out_dir / "trajectory.csv", traj)
    files["trajectory"] = "trajectory.csv"

    snap_rows = []
    for t in _snapshot_times(config["t_end"], config["snapshots"]):
        q = traj.interpolate(t)
        u = family.evaluate(rule.nodes, q)
        u_exact = exact_advdiff(A0, L0, c_, nu, rule.nodes, t)
        snap_rows += [[t, x, uv, ue] for x, uv, ue in zip(rule.nodes, u, u_exact)]
    _write_csv(out_dir / "fields.csv", ["t", "x", "u", "u_exact"], snap_rows)
    files["fields"] = "fields.csv"
    metrics["max_field_err"] = float(
        np.max([abs(r[2] - r[3]) for r in snap_rows])
    )
    return metrics, {"model": "rons_amplitude", "reference": "exact_amplitude"}


# -- nlse family ------------------------------------------------------------


def _run_nlse(config, out_dir, files, series):
    family = GaussianWavePacket()
    model = nlse()
    rule = make_rule(real_line(config["half_width"]), config["resolution"])
    quantities = model.conserved if config["constrained"] else ()
    traj = integrate(
        family, model, rule, quantities, config["q0"], _integrator_config(config)
    )

    # reference: pseudospectral solution from the identical initial field
    length = config["dns_length"]
    x = spectral_grid(length, config["dns_modes"])
    u0 = SpectralState(length, family.evaluate(x, np.asarray(config["q0"])))
    states = nlse_dns(u0, config["dns_dt"], config["t_end"])
    dns_t = np.array([s.time for s in states])
    dns_amp = np.array([abs(s.center_value()) for s in states])

    ts, rons_amp = _uniform_series(traj, lambda q: q[0], n=800)
    _write_series(out_dir / "series_rons_center.csv", ts, {"amp": rons_amp})
    _write_series(out_dir / "series_dns_center.csv", dns_t, {"amp": dns_amp})
    series["rons_center"] = "series_rons_center.csv"
    series["dns_center"] = "series_dns_center.csv"

    i_r, i_d = int(np.argmax(rons_amp)), int(np.argmax(dns_amp))
    drift = traj.invariant_drift()
    tangency = traj.diagnostics.get("tangency")
    metrics = {
        "rons_peak_amp": float(rons_amp[i_r]),
        "rons_peak_time": float(ts[i_r]),
        "dns_peak_amp": float(dns_amp[i_d]),
        "dns_peak_time": float(dns_t[i_d]),
        "peak_amp_gap_rel": float(
            (rons_amp[i_r] - dns_amp[i_d]) / dns_amp[i_d]
        ),
        "peak_time_gap_rel": float(
            abs(ts[i_r] - dns_t[i_d]) / max(dns_t[i_d], 1e-300)
        ),
        "amplification": float(rons_amp[i_r] / rons_amp[0]),
        "drift_I1": float(drift[0]),
        "drift_I2": float(drift[1]),
        "max_tangency": float(tangency.max()) if tangency is not None else np.nan,
        "dns_mass_drift": float(
            abs(states[-1].mass() - states[0].mass()) / states[0].mass()
        ),
        "max_cond_M": float(np.max(traj.diagnostics["cond_M"])),
    }

    _write_trajectory(out_dir / "trajectory.csv", traj)
    files["trajectory"] = "trajectory.csv"

    snap_rows = []
    for t in _snapshot_times(config["t_end"], config["snapshots"]):
        q = traj.interpolate(t)
        u = family.evaluate(rule.nodes, q)
        snap_rows += [
            [t, xx, uu.real, uu.imag] for xx, uu in zip(rule.nodes, u)
        ]
    _write_csv(out_dir / "fields.csv", ["t", "x", "re_u", "im_u"], snap_rows)
    files["fields"] = "fields.csv"
    return metrics, {"model": "rons_center", "reference": "dns_center"}


# -- euler family -----------------------------------------------------------


def _vortex_circulations(family, q, rule):
    """Net and positive-core circulation of each vortex, by quadrature."""
    pts, w = rule.nodes, rule.weights
    net, core = [], []
    A = family.unpack(q)[0]
    for i in range(family.n_vortices):
        base = 4 * i
        omega_i = A[i] * -(
            family.psi_tangent_derivative(pts, q, base, (2, 0))
            + family.psi_tangent_derivative(pts, q, base, (0, 2))
        )
        net.append(float(np.sum(w * omega_i)))
        sgn = np.sign(A[i]) if A[i] != 0 else 1.0
        core.append(float(np.sum(w * omega_i * (sgn * omega_i > 0))))
    return np.array(net), np.array(core)


def _run_euler(config, out_dir, files, series, n_vortices):
    family = VortexStreamFunction(n_vortices)
    model = vorticity(config["nu"])
    rule = _window_rule(family, config["window_pad"], config["resolution"])
    quantities = model.conserved if config["constrained"] else ()
    q0 = np.asarray(config["q0"], dtype=float)
    traj = integrate(family, model, rule, quantities, q0, _integrator_config(config))

    # point-vortex reference with circulations matched by quadrature of each
    # vortex's vorticity; the Gaussian stream function makes each vortex
    # shielded, so the net circulations integrate to zero and a core-matched
    # reference is recorded alongside as the informative comparison
    rule0 = rule(q0)
    net, core = _vortex_circulations(family, q0, rule0)
    centers0 = family.centers(q0)
    pv_net = point_vortex(
        PointVortexState(net, centers0), config["t_end"] / 400, config["t_end"]
    )
    pv_core = point_vortex(
        PointVortexState(core, centers0), config["t_end"] / 400, config["t_end"]
    )

    track_cols = {}
    for i in range(n_vortices):
        track_cols[f"x{i + 1}"] = traj.states[:, 4 * i + 2]
        track_cols[f"y{i + 1}"] = traj.states[:, 4 * i + 3]
    _write_series(out_dir / "series_rons_tracks.csv", traj.times, track_cols)
    series["rons_tracks"] = "series_rons_tracks.csv"

    for tag, pv in (("pv_tracks", pv_net), ("pv_tracks_core", pv_core)):
        pv_t = np.array([s.time for s in pv])
        cols = {}
        for i in range(n_vortices):
            cols[f"x{i + 1}"] = np.array([s.centers[i, 0] for s in pv])
            cols[f"y{i + 1}"] = np.array([s.centers[i, 1] for s in pv])
        _write_series(out_dir / f"series_{tag}.csv", pv_t, cols)
        series[tag] = f"series_{tag}.csv"

    drift = traj.invariant_drift()
    amps = traj.states[:, 0::4]
    lens = traj.states[:, 1::4]
    metrics = {
        "max_rel_drift_A": float(
            np.max(np.abs(amps - amps[0]) / np.abs(amps[0]))
        ),
        "max_rel_drift_L": float(
            np.max(np.abs(lens - lens[0]) / np.abs(lens[0]))
        ),
        "drift_I1": float(drift[0]) if drift.size else np.nan,
        "drift_I2": float(drift[1]) if drift.size else np.nan,
        "net_circulations": [float(g) for g in net],
        "core_circulations": [float(g) for g in core],
        "max_cond_M": float(np.max(traj.diagnostics["cond_M"])),
        "hamiltonian_drift_pv_core": float(
            abs(
                point_vortex_hamiltonian(pv_core[-1])
                - point_vortex_hamiltonian(pv_core[0])
            )
            / max(abs(point_vortex_hamiltonian(pv_core[0])), 1e-300)
        ),
    }
    return traj, pv_net, pv_core, metrics


def _run_dipole(config, out_dir, files, series):
    traj, pv_net, pv_core, metrics = _run_euler(config, out_dir, files, series, 2)
    mid = 0.5 * (traj.states[:, 2:4] + traj.states[:, 6:8])
    d0 = mid[0]
    disp = mid - d0
    total = np.linalg.norm(disp[-1])
    # lateral deviation from the straight line through start and end points
    direction = disp[-1] / max(total, 1e-300)
    lateral = np.abs(disp[:, 0] * direction[1] - disp[:, 1] * direction[0])
    speeds = np.linalg.norm(np.diff(mid, axis=0), axis=1) / np.diff(traj.times)
    sep = float(np.hypot(*(traj.states[0, 2:4] - traj.states[0, 6:8])))

    def pv_speed(pv):
        pv_mid = 0.5 * (pv[0].centers[0] + pv[0].centers[1])
        pv_mid_end = 0.5 * (pv[-1].centers[0] + pv[-1].centers[1])
        return float(
            np.linalg.norm(pv_mid_end - pv_mid) / (pv[-1].time - pv[0].time)
        )

    v_rons = float(np.mean(speeds))
    v_pv_net = pv_speed(pv_net)
    v_pv_core = pv_speed(pv_core)
    metrics.update(
        {
            "rons_speed": v_rons,
            "speed_rel_variation": float(
                (speeds.max() - speeds.min()) / np.mean(speeds)
            ),
            "lateral_dev_over_distance": float(np.max(lateral) / max(total, 1e-300)),
            "pv_speed_net_circulation": v_pv_net,
            "pv_speed_core_circulation": v_pv_core,
            "speed_rel_gap_pv_net": float(
                abs(v_rons - v_pv_net) / max(abs(v_pv_net), 1e-300)
            ),
            "speed_rel_gap_pv_core": float(
                abs(v_rons - v_pv_core) / max(abs(v_pv_core), 1e-300)
            ),
            "initial_separation": sep,
        }
    )
    _write_trajectory(out_dir / "trajectory.csv", traj)
    files["trajectory"] = "trajectory.csv"
    _write_euler_fields(config, traj, out_dir, files)
    return metrics, {"model": "rons_tracks", "reference": "pv_tracks"}


def _fit_angular_velocity(times, theta):
    return float(np.polyfit(times, theta, 1)[0])


def _run_pair(config, out_dir, files, series):
    traj, pv_net, pv_core, metrics = _run_euler(config, out_dir, files, series, 2)
    rel = traj.states[:, 6:8] - traj.states[:, 2:4]
    sep = np.linalg.norm(rel, axis=1)
    theta = np.unwrap(np.arctan2(rel[:, 1], rel[:, 0]))
    omega = _fit_angular_velocity(traj.times, theta)
    # windowed fits quantify how constant the rotation rate is
    thirds = np.array_split(np.arange(len(traj.times)), 3)
    omega_windows = [
        _fit_angular_velocity(traj.times[idx], theta[idx]) for idx in thirds
    ]
    d = float(sep[0])

    def pv_omega(pv):
        rel_pv = np.array([s.centers[1] - s.centers[0] for s in pv])
        th = np.unwrap(np.arctan2(rel_pv[:, 1], rel_pv[:, 0]))
        return _fit_angular_velocity(np.array([s.time for s in pv]), th)

    om_net, om_core = pv_omega(pv_net), pv_omega(pv_core)
    gamma_net = metrics["net_circulations"][0]
    gamma_core = metrics["core_circulations"][0]
    metrics.update(
        {
            "separation_drift_rel": float(np.max(np.abs(sep - sep[0])) / sep[0]),
            "rons_angular_velocity": omega,
            "angular_velocity_rel_variation": float(
                (max(omega_windows) - min(omega_windows)) / abs(omega)
            ),
            "revolutions": float((theta[-1] - theta[0]) / (2 * np.pi)),
            "pv_angular_velocity_net": om_net,
            "pv_angular_velocity_core": om_core,
            "pv_formula_net": float(gamma_net / (np.pi * d**2)),
            "pv_formula_core": float(gamma_core / (np.pi * d**2)),
            "omega_rel_gap_pv_net": float(
                abs(omega - om_net) / max(abs(om_net), 1e-300)
            ),
            "omega_rel_gap_pv_core": float(
                abs(omega - om_core) / max(abs(om_core), 1e-300)
            ),
        }
    )
    _write_trajectory(out_dir / "trajectory.csv", traj)
    files["trajectory"] = "trajectory.csv"
    _write_euler_fields(config, traj, out_dir, files)
    return metrics, {"model": "rons_tracks", "reference": "pv_tracks"}


def _count_swaps(xa, xb):
    sign = np.sign(xa - xb)
    return int(np.sum(np.diff(sign) != 0))


def _run_leapfrog(config, out_dir, files, series):
    traj, pv_net, pv_core, metrics = _run_euler(config, out_dir, files, series, 4)
    # vortices 1 and 3 carry positive amplitude, 2 and 4 negative
    swaps_pos = _count_swaps(traj.states[:, 2], traj.states[:, 10])
    swaps_neg = _count_swaps(traj.states[:, 6], traj.states[:, 14])
    metrics.update(
        {
            "swaps_positive_pair": swaps_pos,
            "swaps_negative_pair": swaps_neg,
            "x_travel": float(traj.states[-1, 2] - traj.states[0, 2]),
        }
    )
    _write_trajectory(out_dir / "trajectory.csv", traj)
    files["trajectory"] = "trajectory.csv"
    _write_euler_fields(config, traj, out_dir, files)
    return metrics, {"model": "rons_tracks", "reference": "pv_tracks"}


def _write_euler_fields(config, traj, out_dir, files):
    family = VortexStreamFunction(len(traj.labels) // 4)
    rule = _window_rule(family, config["window_pad"], min(config["resolution"], 64))
    rows = []
    for t in _snapshot_times(traj.times[-1], config["snapshots"]):
        q = traj.interpolate(t)
        r = rule(q)
        terms = family.terms(r.nodes, q)
        psi = family.psi_derivative(r.nodes, q, (0, 0), terms=terms)
        omega = -(
            family.psi_derivative(r.nodes, q, (2, 0), terms=terms)
            + family.psi_derivative(r.nodes, q, (0, 2), terms=terms)
        )
        rows += [
            [t, p[0], p[1], ps, om]
            for p, ps, om in zip(r.nodes, psi, omega)
        ]
    _write_csv(out_dir / "fields.csv", ["t", "x", "y", "psi", "omega"], rows)
    files["fields"] = "fields.csv"


# -- galerkin-equivalence ---------------------------------------------------


def _run_galerkin(config, out_dir, files, series):
    n_modes = config["n_modes"]
    family = LinearModes(fourier_modes(2 * np.pi, n_modes))
    model = advection_diffusion(config["c"], config["nu"])
    rule = make_rule(periodic_interval(2 * np.pi), config["resolution"])
    rng = np.random.default_rng(config["seed"])

    max_dev, max_m_dev = 0.0, 0.0
    rows = []
    for k in range(config["n_states"]):
        q = rng.standard_normal(n_modes)
        system = assemble(family, q, model, rule)
        dev = float(
            np.max(
                np.abs(reduced_rhs(system) - galerkin_rhs(family, q, model, rule))
            )
        )
        m_dev = float(np.max(np.abs(system.M.entries - np.eye(n_modes))))
        rows.append([k, dev, m_dev])
        max_dev, max_m_dev = max(max_dev, dev), max(max_m_dev, m_dev)

    _write_csv(out_dir / "trajectory.csv", ["state", "rhs_deviation", "M_identity_deviation"], rows)
    files["trajectory"] = "trajectory.csv"
    metrics = {
        "n_states": config["n_states"],
        "max_rhs_deviation": max_dev,
        "max_M_identity_deviation": max_m_dev,
    }
    return metrics, {}


# -- appendixA-instability --------------------------------------------------


def _fit_decay_rate(times, values):
    good = np.abs(values) > 0
    return float(np.polyfit(times[good], np.log(np.abs(values[good])), 1)[0])


def _run_instability(config, out_dir, files, series):
    lams = list(config["lambdas"])
    metrics = {"lambdas": lams}
    rows = []
    growth, growth_seeded, decay = [], [], []
    for lam in lams:
        t_end = config["t_horizon_over_lambda"] / lam
        # generic initial data: both exponential branches populated
        res = finite_time_instability([lam], [1.0], [0.0], t_end)
        growth.append(float(res.fitted_rates[0]))
        # decaying branch: round-off re-seeds the growing solution
        res_seeded = finite_time_instability([lam], [1.0], [-lam], t_end)
        growth_seeded.append(float(res_seeded.fitted_rates[0]))
        # first-order reduced dynamics on the same eigenmode decays
        family = LinearModes(fourier_modes(2 * np.pi, 1))
        model = advection_diffusion(0.0, lam)  # eigenvalue of sin(x) is lam
        rule = make_rule(periodic_interval(2 * np.pi), 64)
        traj = integrate(
            family,
            model,
            rule,
            (),
            [1.0],
            IntegratorConfig(t_end=4.0 / lam, rtol=config["rtol"], atol=config["atol"]),
        )
        decay.append(_fit_decay_rate(traj.times, traj.states[:, 0]))
        for t, qv in zip(res.times, res.q[:, 0]):
            rows.append([lam, t, qv])
    metrics.update(
        {
            "fitted_growth_rates": growth,
            "fitted_growth_rates_seeded": growth_seeded,
            "fitted_reduced_decay_rates": decay,
            "max_growth_rate_rel_err": float(
                max(abs(g - l) / l for g, l in zip(growth, lams))
            ),
            "max_seeded_rate_rel_err": float(
                max(abs(g - l) / l for g, l in zip(growth_seeded, lams))
            ),
            "max_decay_rate_rel_err": float(
                max(abs(d + l) / l for d, l in zip(decay, lams))
            ),
        }
    )
    _write_csv(out_dir / "trajectory.csv", ["lambda", "t", "q"], rows)
    files["trajectory"] = "trajectory.csv"
    return metrics, {}


# -- fit-demo ----------------------------------------------------------------


def _run_fit_demo(config, out_dir, files, series):
    family = HeatKernel()
    rule = make_rule(real_line(config["half_width"]), config["resolution"])
    q_true = np.asarray(config["q0"], dtype=float)
    u_true = family.evaluate(rule.nodes, q_true)

    # perturb orthogonally to the tangent space so the best fit stays q_true
    rng = np.random.default_rng(config["seed"])
    noise = rng.standard_normal(len(rule))
    T = family.tangent_stack(rule.nodes, q_true)
    w = rule.weights
    gram = (T * w) @ T.T
    noise -= T.T @ np.linalg.solve(gram, (T * w) @ noise)
    noise *= config["perturbation"] / np.sqrt(norm_sq(noise, rule))
    u0 = u_true + noise

    guess = q_true * (1.0 + config["guess_offset"])
    result = fit_initial(
        family, u0, rule, guess, n_starts=config["n_starts"], seed=config["seed"]
    )
    metrics = {
        "q_true": [float(v) for v in q_true],
        "q_fit": [float(v) for v in result.q],
        "max_param_rel_err": float(
            np.max(np.abs(result.q - q_true) / np.abs(q_true))
        ),
        "fit_residual_norm": result.residual_norm,
        "perturbation_norm": float(config["perturbation"]),
        "gradient_norm": result.gradient_norm,
        "iterations": result.iterations,
        "converged": result.converged,
    }
    rows = [
        [x, u, ut] for x, u, ut in zip(rule.nodes, u0, family.evaluate(rule.nodes, result.q))
    ]
    _write_csv(out_dir / "fields.csv", ["x", "u_target", "u_fit"], rows)
    files["fields"] = "fields.csv"
    return metrics, {}


EXPERIMENTS: dict[str, ExperimentSpec] = {}


def _register(name, description, defaults, runner):
    merged = dict(_COMMON_DEFAULTS)
    merged.update(defaults)
    EXPERIMENTS[name] = ExperimentSpec(name, description, merged, runner)


_register(
    "advdiff-exact",
    "traveling decaying sine wave; reduced dynamics reproduce the exact solution",
    {
        "q0": [1.0, 1.0, 0.0],
        "c": 1.0,
        "nu": 0.1,
        "t_end": 10.0,
        "resolution": 128,
        "constrained": False,
    },
    _run_advdiff,
)
_register(
    "nlse-focusing",
    "focusing wave group versus pseudospectral reference",
    {
        "q0": [0.2, 20.0, -0.05, 0.0],
        "t_end": 60.0,
        "half_width": 120.0,
        "resolution": 1000,
        "constrained": True,
        "dns_modes": 512,
        "dns_length": 64 * np.sqrt(2.0) * np.pi,
        "dns_dt": 0.025,
    },
    _run_nlse,
)
_register(
    "nlse-defocusing",
    "defocusing wave group versus pseudospectral reference",
    {
        "q0": [0.2, 5.0, 0.0, 0.0],
        "t_end": 40.0,
        "half_width": 150.0,
        "resolution": 1400,
        "constrained": True,
        "dns_modes": 512,
        "dns_length": 64 * np.sqrt(2.0) * np.pi,
        "dns_dt": 0.025,
    },
    _run_nlse,
)
_register(
    "nlse-unconstrained",
    "focusing parameters without enforcing invariants (documents that the "
    "Gaussian packet conserves them automatically)",
    {
        "q0": [0.2, 20.0, -0.05, 0.0],
        "t_end": 60.0,
        "half_width": 120.0,
        "resolution": 1000,
        "constrained": False,
        "dns_modes": 512,
        "dns_length": 64 * np.sqrt(2.0) * np.pi,
        "dns_dt": 0.025,
    },
    _run_nlse,
)
_register(
    "euler-dipole",
    "opposite-sign vortex pair translating on a straight line",
    {
        "q0": [1.0, 0.75, -3.0, 0.5, -1.0, 0.75, -3.0, -0.5],
        "nu": 0.0,
        "t_end": 10.0,
        "resolution": 110,
        "window_pad": 7.0,
        "constrained": True,
    },
    _run_dipole,
)
_register(
    "euler-pair",
    "same-sign vortex pair rotating about its midpoint",
    {
        "q0": [1.0, 1.0, -1.0, 0.0, 1.0, 1.0, 1.0, 0.0],
        "nu": 0.0,
        "t_end": 40.0,
        "resolution": 110,
        "window_pad": 6.0,
        "constrained": True,
    },
    _run_pair,
)
_register(
    "euler-leapfrog",
    "two opposite-sign pairs exchanging front and back repeatedly",
    {
        "q0": [
            1.0, 0.3, 0.5, 0.5,
            -1.0, 0.3, 0.5, -0.5,
            1.0, 0.3, -0.5, 0.5,
            -1.0, 0.3, -0.5, -0.5,
        ],
        "nu": 0.0,
        "t_end": 30.0,
        "resolution": 96,
        "window_pad": 6.0,
        "constrained": True,
        "rtol": 1e-7,
        "atol": 1e-9,
    },
    _run_leapfrog,
)
_register(
    "galerkin-equivalence",
    "reduced equations coincide with Galerkin projection on linear modes",
    {
        "n_modes": 5,
        "n_states": 100,
        "c": 1.0,
        "nu": 0.1,
        "resolution": 64,
        "constrained": False,
    },
    _run_galerkin,
)
_register(
    "appendixA-instability",
    "accumulated-error formulation grows at +lambda; reduced dynamics decay at -lambda",
    {
        "lambdas": [0.5, 1.0, 2.0],
        "t_horizon_over_lambda": 40.0,
        "constrained": False,
    },
    _run_instability,
)
_register(
    "fit-demo",
    "initial-condition fit onto the ansatz manifold by damped Gauss-Newton",
    {
        "q0": [1.0, 2.0],
        "half_width": 12.0,
        "resolution": 400,
        "perturbation": 1e-3,
        "guess_offset": 0.25,
        "n_starts": 1,
        "constrained": False,
    },
    _run_fit_demo,
)


def list_experiments() -> dict[str, ExperimentSpec]:
    return dict(EXPERIMENTS)


def resolve_config(config: dict) -> dict:
    """Merge a user config over the experiment defaults and validate it."""
    if "experiment" not in config:
        raise ValueError("config needs an 'experiment' key")
    name = config["experiment"]
    if name not in EXPERIMENTS:
        raise ValueError(
            f"unknown experiment {name!r}; known: {', '.join(sorted(EXPERIMENTS))}"
        )
    spec = EXPERIMENTS[name]
    resolved = dict(spec.defaults)
    unknown = set(config) - set(spec.defaults) - {"experiment"}
    if unknown:
        raise ValueError(
            f"unknown config keys for {name}: {', '.join(sorted(unknown))}"
        )
    resolved.update({k: v for k, v in config.items() if k != "experiment"})
    resolved["experiment"] = name

    if "q0" in resolved and resolved["q0"] is not None:
        q0 = np.asarray(resolved["q0"], dtype=float)
        if not np.all(np.isfinite(q0)):
            raise ValueError("q0 must be finite")
        resolved["q0"] = [float(v) for v in q0]
    for key in ("t_end", "rtol", "atol"):
        if key in resolved and resolved[key] is not None and resolved[key] <= 0:
            raise ValueError(f"{key} must be positive")
    if resolved.get("resolution") is not None and resolved.get("resolution", 2) < 2:
        raise ValueError("resolution must be >= 2")
    if "nu" in resolved and resolved["nu"] < 0:
        raise ValueError("nu must be >= 0")
    return resolved


def _json_sanitize(value):
    """Replace non-finite floats with None so summaries stay strict JSON."""
    if isinstance(value, dict):
        return {k: _json_sanitize(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_json_sanitize(v) for v in value]
    if isinstance(value, (float, np.floating)):
        return float(value) if np.isfinite(value) else None
    if isinstance(value, (np.integer, np.bool_)):
        return value.item()
    return value


def _summary_schema() -> dict:
    with resources.files("rons").joinpath("summary_schema.json").open() as fh:
        return json.load(fh)


def validate_summary(summary: dict) -> None:
    import jsonschema

    jsonschema.validate(summary, _summary_schema())


def run(config: dict, out_dir: str | os.PathLike | None = None) -> RunRecord:
    """Execute one experiment; always writes a schema-valid summary.

    Numerical aborts (domain, immersion, constraint failures, blowups) yield
    a record with status "failed" and the abort reason; config errors raise
    ValueError before anything is written.
    """
    resolved = resolve_config(config)
    name = resolved["experiment"]
    if out_dir is None:
        out_dir = resolved.get("out_dir") or (output_root() / name)
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    with open(out_dir / "config.json", "w") as fh:
        json.dump(resolved, fh, indent=2, sort_keys=True)

    files: dict[str, str] = {"config": "config.json"}
    series: dict[str, str] = {}
    metrics: dict = {}
    roles: dict = {}
    status, abort_reason = "ok", None

    start = time.perf_counter()
    try:
        metrics, roles = EXPERIMENTS[name].runner(resolved, out_dir, files, series)
    except IntegrationAbort as exc:
        status, abort_reason = "failed", str(exc)
        if exc.partial is not None and len(exc.partial) > 0:
            _write_trajectory(out_dir / "trajectory.csv", exc.partial)
            files["trajectory"] = "trajectory.csv"
    except RonsError as exc:
        status, abort_reason = "failed", str(exc)
    wall = time.perf_counter() - start

    summary = _json_sanitize(
        {
            "experiment": name,
            "status": status,
            "version": __version__,
            "wall_time_s": wall,
            "config": resolved,
            "metrics": metrics,
            "files": files,
            "series": series,
            "series_roles": roles,
            "abort_reason": abort_reason,
        }
    )
    validate_summary(summary)
    with open(out_dir / "summary.json", "w") as fh:
        json.dump(summary, fh, indent=2, sort_keys=True, allow_nan=False)

    return RunRecord(
        config=resolved,
        out_dir=out_dir,
        files=files,
        series=series,
        metrics=metrics,
        status=status,
        wall_time_s=wall,
        version=__version__,
        abort_reason=abort_reason,
    )


# ---------------------------------------------------------------------------
# comparisons
# ---------------------------------------------------------------------------


def _series_gap(path_a: Path, path_b: Path) -> dict:
    header_a, data_a = _read_series(path_a)
    header_b, data_b = _read_series(path_b)
    cols = [c for c in header_a[1:] if c in header_b[1:]]
    t_lo = max(data_a[0, 0], data_b[0, 0])
    t_hi = min(data_a[-1, 0], data_b[-1, 0])
    grid = np.linspace(t_lo, t_hi, 500)
    sup = 0.0
    for c in cols:
        ia, ib = header_a.index(c), header_b.index(c)
        va = np.interp(grid, data_a[:, 0], data_a[:, ia])
        vb = np.interp(grid, data_b[:, 0], data_b[:, ib])
        sup = max(sup, float(np.max(np.abs(va - vb))))
    out = {"sup_gap": sup, "columns": cols}
    if len(cols) == 1:
        ia, ib = header_a.index(cols[0]), header_b.index(cols[0])
        pa, pb = int(np.argmax(data_a[:, ia])), int(np.argmax(data_b[:, ib]))
        out["peak_gap"] = float(data_a[pa, ia] - data_b[pb, ib])
        out["peak_time_gap"] = float(data_a[pa, 0] - data_b[pb, 0])
    return out


def compare(summary_a: str | os.PathLike, summary_b: str | os.PathLike) -> dict:
    """Compare two run records.

    Shared series names are compared one to one (identical records give zero
    gaps); additionally the first record's model series is compared against
    the second record's reference series, which is the reduced-vs-oracle
    comparison when both summaries come from the same experiment.
    """
    with open(summary_a) as fh:
        a = json.load(fh)
    with open(summary_b) as fh:
        b = json.load(fh)
    if a["experiment"] != b["experiment"]:
        raise ValueError(
            f"cannot compare {a['experiment']} against {b['experiment']}"
        )
    dir_a, dir_b = Path(summary_a).parent, Path(summary_b).parent

    result = {
        "experiments": [a["experiment"], b["experiment"]],
        "series_gaps": {},
        "model_vs_reference": None,
        "metric_gaps": {},
    }
    shared = sorted(set(a["series"]) & set(b["series"]))
    for name in shared:
        result["series_gaps"][name] = _series_gap(
            dir_a / a["series"][name], dir_b / b["series"][name]
        )
    roles_a, roles_b = a.get("series_roles") or {}, b.get("series_roles") or {}
    if roles_a.get("model") and roles_b.get("reference"):
        result["model_vs_reference"] = _series_gap(
            dir_a / a["series"][roles_a["model"]],
            dir_b / b["series"][roles_b["reference"]],
        )
    # paired scalar metrics: reduced-model value in A against oracle value in B
    pairs = [
        ("rons_angular_velocity", "pv_angular_velocity_core"),
        ("rons_speed", "pv_speed_core_circulation"),
        ("rons_peak_amp", "dns_peak_amp"),
        ("rons_peak_time", "dns_peak_time"),
    ]
    for ka, kb in pairs:
        if ka in a["metrics"] and kb in b["metrics"]:
            va, vb = a["metrics"][ka], b["metrics"][kb]
            result["metric_gaps"][f"{ka}_vs_{kb}"] = {
                "a": va,
                "b": vb,
                "rel_gap": abs(va - vb) / max(abs(vb), 1e-300),
            }
    return result
