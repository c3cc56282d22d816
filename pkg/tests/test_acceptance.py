"""Acceptance suite: every criterion at its stated tolerance.

Each test prints one `ACCEPTANCE <id>: PASS/FAIL` line (run with `pytest -s`
to see them all).  The registered experiments run once at their default
configurations in a session fixture and the criteria assert on the records.

Two clauses fail by construction and are left red deliberately: the
point-vortex speed matches for the dipole and pair require circulations
Gamma_i = integral of each vortex's vorticity, but the Gaussian
stream-function ansatz makes every vortex shielded (omega = -lap psi
integrates to exactly zero over the plane), so the matched point-vortex
reference does not move and no relative 5% comparison can hold.  The
quantitative gaps against core-circulation-matched references are recorded
in the run summaries instead.
"""

import csv

import numpy as np
import pytest

from rons.ansatz import (
    GaussianWavePacket,
    HeatKernel,
    LinearModes,
    SineWave,
    VortexStreamFunction,
    fourier_modes,
)
from rons.engine import assemble, reduced_rhs, residual
from rons.hilbert import make_rule, real_line
from rons.models import nlse
from rons.oracles import SpectralState, nlse_dns, spectral_grid
from rons.experiments import run

ALL_EXPERIMENTS = [
    "advdiff-exact",
    "nlse-focusing",
    "nlse-defocusing",
    "nlse-unconstrained",
    "euler-dipole",
    "euler-pair",
    "euler-leapfrog",
    "galerkin-equivalence",
    "appendixA-instability",
    "fit-demo",
]


@pytest.fixture(scope="session")
def records(tmp_path_factory):
    root = tmp_path_factory.mktemp("acceptance")
    out = {}
    for name in ALL_EXPERIMENTS:
        out[name] = run({"experiment": name}, out_dir=root / name)
    return out


def report(tag: str, ok: bool, detail: str) -> bool:
    print(f"ACCEPTANCE {tag}: {'PASS' if ok else 'FAIL'} - {detail}")
    return ok


def load_series(record, name):
    path = record.out_dir / record.series[name]
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        next(reader)
        data = np.array([[float(v) for v in row] for row in reader])
    return data[:, 0], data[:, 1:]


def test_criterion_1_exact_recovery(records):
    m = records["advdiff-exact"].metrics
    ok = (
        records["advdiff-exact"].status == "ok"
        and m["max_rel_err_A"] <= 1e-6
        and m["max_rel_err_L"] <= 1e-6
        and m["max_rel_err_phi"] <= 1e-6
        and m["max_abs_Ldot"] <= 1e-10
    )
    assert report(
        "1 exact-recovery",
        ok,
        f"rel errs A/L/phi = {m['max_rel_err_A']:.2e}/{m['max_rel_err_L']:.2e}/"
        f"{m['max_rel_err_phi']:.2e}, |Ldot| = {m['max_abs_Ldot']:.2e}",
    )


def test_criterion_2_galerkin_equivalence(records):
    m = records["galerkin-equivalence"].metrics
    ok = (
        m["n_states"] == 100
        and m["max_rhs_deviation"] <= 1e-8
        and m["max_M_identity_deviation"] <= 1e-8
    )
    assert report(
        "2 galerkin-equivalence",
        ok,
        f"rhs dev {m['max_rhs_deviation']:.2e}, M-I dev "
        f"{m['max_M_identity_deviation']:.2e} over {m['n_states']} states",
    )


def test_criterion_3_constraint_exactness(records):
    details = []
    ok = True
    for name in ("nlse-focusing", "nlse-defocusing"):
        m = records[name].metrics
        ok &= m["max_tangency"] <= 1e-9
        ok &= m["drift_I1"] <= 1e-6 and m["drift_I2"] <= 1e-6
        details.append(
            f"{name}: tangency {m['max_tangency']:.1e}, drift "
            f"{m['drift_I1']:.1e}/{m['drift_I2']:.1e}"
        )
    assert report("3 constraint-exactness", ok, "; ".join(details))


def _windowed_maxima_decreasing(times, values, t_start, width):
    edges = np.arange(t_start, times[-1], width)
    maxima = []
    for a in edges[:-1]:
        mask = (times >= a) & (times < a + width)
        if mask.any():
            maxima.append(values[mask].max())
    return all(b < a for a, b in zip(maxima, maxima[1:]))


def test_criterion_4_nlse_qualitative(records):
    foc = records["nlse-focusing"].metrics
    ok_focus = foc["amplification"] >= 2.0 and foc["peak_time_gap_rel"] <= 0.25

    t_r, v_r = load_series(records["nlse-defocusing"], "rons_center")
    t_d, v_d = load_series(records["nlse-defocusing"], "dns_center")
    ok_defocus = _windowed_maxima_decreasing(t_r, v_r[:, 0], 1.0, 2.0)
    ok_defocus &= _windowed_maxima_decreasing(t_d, v_d[:, 0], 1.0, 2.0)

    # refinement gate on the desk-scale spectral reference, both parameter sets
    fam = GaussianWavePacket()
    ok_gate = True
    for q0, t_end in (([0.2, 20.0, -0.05, 0.0], 60.0), ([0.2, 5.0, 0.0, 0.0], 40.0)):
        length = 64 * np.sqrt(2.0) * np.pi

        def peak(n_modes, dt):
            x = spectral_grid(length, n_modes)
            states = nlse_dns(
                SpectralState(length, fam.evaluate(x, np.asarray(q0))), dt, t_end
            )
            return max(abs(s.center_value()) for s in states)

        base = peak(512, 0.025)
        ok_gate &= abs(peak(1024, 0.025) - base) < 1e-5
        ok_gate &= abs(peak(512, 0.0125) - base) < 1e-5

    recorded_gap = foc["peak_amp_gap_rel"]
    ok = ok_focus and ok_defocus and ok_gate
    assert report(
        "4 nlse-qualitative",
        ok,
        f"amplification {foc['amplification']:.2f}x, peak-time gap "
        f"{foc['peak_time_gap_rel']:.1%}, defocusing monotone {ok_defocus}, "
        f"refinement gate {ok_gate}; focusing peak overshoot {recorded_gap:+.1%} "
        "(recorded, not asserted)",
    )


def test_criterion_5_dipole_dynamics(records):
    m = records["euler-dipole"].metrics
    ok = (
        m["max_rel_drift_A"] <= 1e-6
        and m["max_rel_drift_L"] <= 1e-6
        and m["lateral_dev_over_distance"] <= 1e-4
        and m["speed_rel_variation"] <= 1e-4
    )
    assert report(
        "5a dipole-dynamics",
        ok,
        f"A/L drift {m['max_rel_drift_A']:.1e}/{m['max_rel_drift_L']:.1e}, "
        f"lateral {m['lateral_dev_over_distance']:.1e}, speed var "
        f"{m['speed_rel_variation']:.1e}, speed {m['rons_speed']:.4f}",
    )


def test_criterion_5_point_vortex_speed_match(records):
    # as specified: circulations matched by Gamma_i = integral omega_i dA
    m = records["euler-dipole"].metrics
    v_rons, v_pv = m["rons_speed"], m["pv_speed_net_circulation"]
    ok = abs(v_rons - v_pv) <= 0.05 * abs(v_pv)
    report(
        "5b dipole-pv-speed",
        ok,
        f"rons speed {v_rons:.4f} vs point-vortex {v_pv:.4e} from net "
        f"circulations {m['net_circulations']}; core-matched reference gives "
        f"{m['pv_speed_core_circulation']:.4f} (gap {m['speed_rel_gap_pv_core']:.0%})",
    )
    assert ok, (
        "the Gaussian stream-function vortex is shielded: its vorticity "
        "integrates to zero, so the specified matched-circulation point-"
        "vortex dipole is motionless and the 5% speed comparison cannot hold "
        "(see decisions ledger)"
    )


def test_criterion_6_pair_dynamics(records):
    m = records["euler-pair"].metrics
    ok = (
        m["separation_drift_rel"] <= 1e-6
        and m["angular_velocity_rel_variation"] <= 1e-4
        and m["revolutions"] >= 1.0
    )
    assert report(
        "6a pair-dynamics",
        ok,
        f"separation drift {m['separation_drift_rel']:.1e}, omega variation "
        f"{m['angular_velocity_rel_variation']:.1e} over "
        f"{m['revolutions']:.2f} revolutions, omega {m['rons_angular_velocity']:.4f}",
    )


def test_criterion_6_point_vortex_omega_match(records):
    m = records["euler-pair"].metrics
    om_rons, om_pv = m["rons_angular_velocity"], m["pv_formula_net"]
    ok = abs(om_rons - om_pv) <= 0.05 * abs(om_pv)
    report(
        "6b pair-pv-omega",
        ok,
        f"rons omega {om_rons:.4f} vs Gamma/(pi d^2) = {om_pv:.4e} from net "
        f"circulations; core-matched value {m['pv_formula_core']:.4f} "
        f"(gap {m['omega_rel_gap_pv_core']:.0%})",
    )
    assert ok, (
        "net circulation of a shielded Gaussian stream-function vortex is "
        "exactly zero, so Gamma/(pi d^2) = 0 and the 5% comparison cannot "
        "hold (see decisions ledger)"
    )


def test_criterion_7_leapfrog(records):
    m = records["euler-leapfrog"].metrics
    ok = m["swaps_positive_pair"] >= 2 and m["swaps_negative_pair"] >= 2
    assert report(
        "7 leapfrog",
        ok,
        f"front/back swaps: positive pair {m['swaps_positive_pair']}, "
        f"negative pair {m['swaps_negative_pair']}",
    )


def test_criterion_8_instability(records):
    m = records["appendixA-instability"].metrics
    ok = (
        m["max_growth_rate_rel_err"] <= 0.01
        and m["max_seeded_rate_rel_err"] <= 0.01
        and m["max_decay_rate_rel_err"] <= 0.01
    )
    assert report(
        "8 accumulated-error-instability",
        ok,
        f"growth rate err {m['max_growth_rate_rel_err']:.2%}, seeded "
        f"{m['max_seeded_rate_rel_err']:.2%}, reduced decay "
        f"{m['max_decay_rate_rel_err']:.2%} for lambdas {m['lambdas']}",
    )


def test_criterion_9_spd_everywhere(records):
    # a Cholesky failure anywhere aborts the run, so ok-status across the
    # registry certifies SPD of M (and C when constrained) at every step
    failures = [n for n, r in records.items() if r.status != "ok"]
    conds = {
        n: r.metrics.get("max_cond_M")
        for n, r in records.items()
        if "max_cond_M" in r.metrics
    }
    ok = not failures and all(np.isfinite(c) for c in conds.values())
    assert report(
        "9a spd-everywhere",
        ok,
        f"failures: {failures or 'none'}; max cond(M) per run: "
        + ", ".join(f"{n}={c:.1e}" for n, c in conds.items()),
    )


def _fd_worst_error(family, pts, qs):
    worst = 0.0
    for q in qs:
        for i in range(family.n):
            h = 1e-6 * max(1.0, abs(q[i]))
            qp, qm = q.copy(), q.copy()
            qp[i] += h
            qm[i] -= h
            fd = (family.evaluate(pts, qp) - family.evaluate(pts, qm)) / (2 * h)
            exact = family.tangent(pts, q, i)
            scale = np.max(np.abs(exact)) + 1e-12
            worst = max(worst, float(np.max(np.abs(exact - fd)) / scale))
    return worst


def test_criterion_9_tangent_and_gradient_validation():
    rng = np.random.default_rng(21)
    x1 = np.linspace(-4, 4, 33)
    x2 = rng.uniform(-2.5, 2.5, size=(40, 2))
    cases = [
        (SineWave(), x1, lambda: np.array([0.2 + 2 * rng.random(), 0.3 + 2 * rng.random(), rng.uniform(-3, 3)])),
        (HeatKernel(), x1, lambda: np.array([0.2 + 2 * rng.random(), 0.3 + 2 * rng.random()])),
        (GaussianWavePacket(), x1, lambda: np.array([0.2 + rng.random(), 0.5 + 4 * rng.random(), rng.uniform(-0.5, 0.5), rng.uniform(-3, 3)])),
        (VortexStreamFunction(2), x2, lambda: np.array([
            rng.choice([-1, 1]) * (0.5 + rng.random()), 0.4 + rng.random(), rng.uniform(-2, 2), rng.uniform(-2, 2),
            rng.choice([-1, 1]) * (0.5 + rng.random()), 0.4 + rng.random(), rng.uniform(-2, 2), rng.uniform(-2, 2)])),
        (LinearModes(fourier_modes(8.0, 4)), x1, lambda: rng.standard_normal(4)),
    ]
    worst = {}
    for family, pts, draw in cases:
        qs = [draw() for _ in range(50)]
        worst[family.name] = _fd_worst_error(family, pts, qs)

    # gradient checks for the conserved quantities
    nl = nlse()
    fam_nl = GaussianWavePacket()
    for qt in nl.conserved:
        w = 0.0
        for _ in range(50):
            q = np.array([0.1 + 0.5 * rng.random(), 1 + 8 * rng.random(),
                          rng.uniform(-0.4, 0.4), rng.uniform(-3, 3)])
            g = qt.gradient(fam_nl, q)
            for i in range(4):
                h = 1e-6 * max(1.0, abs(q[i]))
                qp, qm = q.copy(), q.copy()
                qp[i] += h
                qm[i] -= h
                fd = (qt.value(fam_nl, qp) - qt.value(fam_nl, qm)) / (2 * h)
                w = max(w, abs(g[i] - fd) / max(abs(g[i]), 1e-9))
        worst[f"grad:{qt.name}"] = w

    ok = all(v <= 1e-6 for v in worst.values())
    assert report(
        "9b fd-validation",
        ok,
        "worst relative FD error " + ", ".join(f"{k}={v:.1e}" for k, v in worst.items()),
    )


def test_criterion_9_residual_optimality():
    fam = GaussianWavePacket()
    model = nlse()
    rule = make_rule(real_line(80.0), 800)
    q = np.array([0.2, 8.0, -0.05, 0.3])
    free = assemble(fam, q, model, rule)
    qdot = reduced_rhs(free)
    J_free = residual(free, qdot).J
    rng = np.random.default_rng(23)
    scale = 1e-3 * np.linalg.norm(qdot)
    worst_margin = np.inf
    for _ in range(100):
        delta = rng.standard_normal(4)
        delta *= scale / np.linalg.norm(delta)
        worst_margin = min(worst_margin, residual(free, qdot + delta).J - J_free)
    ok_perturb = worst_margin > 0.0

    constrained = assemble(fam, q, model, rule, model.conserved)
    J_con = residual(constrained, reduced_rhs(constrained)).J
    # analytically J_con >= J_free; equality holds here because the packet
    # conserves both invariants automatically, so allow rounding slack
    ok_order = J_con >= J_free - 1e-12 * max(residual(free, np.zeros(4)).J_raw, 1.0)

    ok = ok_perturb and ok_order
    assert report(
        "9c residual-optimality",
        ok,
        f"min perturbation margin {worst_margin:.2e}, "
        f"J constrained - unconstrained = {J_con - J_free:+.2e}",
    )
