"""Acceptance criteria 1-11, each printing one PASS/FAIL line.

Run ``pytest tests/test_acceptance.py -v`` (the lines are repeated in the
terminal summary) or execute this file directly.
"""
import itertools
import json
import math
import time
from pathlib import Path

import numpy as np
import pytest

from dispersive_kit import cli
from dispersive_kit.band import LatticeSpec, predict_band
from dispersive_kit.crosstalk import (
    PipelineConfig,
    bound_parasitic_chi,
    linearity_diagnostic,
    qubit_selectivity_pipeline,
    resonator_selectivity_pipeline,
)
from dispersive_kit.dispersive import chi_from_g, coherence_limited_epg, pure_dephasing_time
from dispersive_kit.fits import fit_rb_curve
from dispersive_kit.freq import gaussian_interp_frequency, naive_peak_frequency
from dispersive_kit.rb_analysis import (
    SubspaceWeights,
    alpha_to_depol_weights,
    alpha_to_pauli_weights,
    analyze_correlated_rb,
    analyze_leakage_rb,
    analyze_single_qubit_rb,
    crosstalk_metric,
    depol_to_alpha,
    pauli_to_alpha,
)
from dispersive_kit.reference import (
    COHERENCE,
    CORRELATED_ALPHAS,
    ETA_TILDE,
    GATE_PERIOD_NS,
    N_CRIT,
    P_IDENTITY,
    reference_device,
)
from dispersive_kit.synth.rb import LeakageSpec, NoiseChannelSpec, simulate_leakage_rb, simulate_rb
from dispersive_kit.synth.transmon import simulate_coupled_drive

from oracles import channel_subset_decays, depolarizing_kraus, pauli_kraus, transmon_cavity_chi

PAPER_LENGTHS = np.round(np.linspace(0.0, 1.0, 31) ** 2 * 2999).astype(int) + 1


def test_criterion_01_band_model(criterion):
    t0 = time.perf_counter()
    pred = predict_band(LatticeSpec())
    dt = time.perf_counter() - t0
    checks = {
        "eps_eff": (pred.eps_eff, 3.60, 0.01),
        "omega_p": (pred.omega_p, 35.9, 0.1),
        "A": (pred.curvature_A, 8.8, 0.1),
        "delta_p": (pred.delta_p, 0.70, 0.01),
        "dB/2mm": (pred.db_drop_per_2mm, 24.8, 0.5),
    }
    ok = all(abs(v - ref) <= tol for v, ref, tol in checks.values()) and dt < 1.0
    detail = ", ".join(f"{k}={v:.4g}" for k, (v, _, _) in checks.items()) + f" in {dt * 1e3:.1f} ms"
    assert criterion(1, ok, detail), detail


def test_criterion_02_critical_photon_numbers(criterion):
    dev = reference_device()
    got = tuple(int(round(p.n_crit)) for p in dev.pairs)
    ok = got == N_CRIT
    assert criterion(2, ok, f"n_crit={got} expected {N_CRIT}"), got


def test_criterion_03_coherence_table(criterion):
    tphi = [int(round(pure_dephasing_time(T1, T2e))) for T1, _, T2e, *_ in COHERENCE]
    tphi_ref = [row[3] for row in COHERENCE]
    shown = ("1.1", "0.94", "0.85", "0.97")  # displayed digits of the table column
    epg_ok, epg_txt = [], []
    for (T1, _, T2e, *_), s in zip(COHERENCE, shown):
        v = coherence_limited_epg(T1, T2e, GATE_PERIOD_NS) * 1e4
        decimals = len(s.split(".")[1])
        txt = f"{v:.{decimals}f}"
        epg_ok.append(txt == s)
        epg_txt.append(f"{txt}{'' if txt == s else '!=' + s}")
    ok = tphi == tphi_ref and all(epg_ok)
    detail = f"T_phi_e={tphi} EPG_coh(1e-4)=[{', '.join(epg_txt)}]"
    assert criterion(3, ok, detail), detail


def test_criterion_04_frequency_estimator(criterion):
    n, T = 200, 20.0
    df = 1.0 / T
    t = np.arange(n) * T / n
    rng = np.random.default_rng(20240604)
    bins = rng.uniform(5.0, 95.0, 250)
    bins = bins[np.abs(bins - np.round(bins)) > 1e-3]  # off-bin only
    t0 = time.perf_counter()
    g_err, n_err = [], []
    for b in bins:
        f0 = b * df
        y = 0.5 + 0.5 * np.cos(2 * np.pi * f0 * t)
        g_err.append(abs(gaussian_interp_frequency((t, y), 0.2).f_est - f0) / df)
        n_err.append(abs(naive_peak_frequency((t, y)) - f0) / df)
    dt = time.perf_counter() - t0
    # same tones as single complex lines (no negative-frequency image), reported only
    line_err = max(abs(gaussian_interp_frequency((t, np.exp(2j * np.pi * b * df * t)), 0.2).f_est - b * df) / df for b in bins)
    ok = len(bins) >= 200 and max(g_err) <= 0.009 and max(n_err) <= 0.5 + 1e-9 and dt < 10
    detail = (
        f"{len(bins)} real tones: gaussian max {max(g_err):.5f} df, naive max {max(n_err):.4f} df, {dt:.2f} s; "
        f"single-line tones: gaussian max {line_err:.5f} df"
    )
    assert criterion(4, ok, detail), detail


def test_criterion_05_rb_recovery(criterion, jobs):
    eps = 1e-3
    t0 = time.perf_counter()
    ds = simulate_rb(1, NoiseChannelSpec(1, {"1": eps}), PAPER_LENGTHS, 80, 5000, 0.0, 11, jobs)
    fit = analyze_single_qubit_rb(ds, 0)
    dt = time.perf_counter() - t0
    alpha_true = 1.0 - eps
    a, se = fit["alpha"], fit.err("alpha")
    epc_err = abs(fit["EPC"] - eps / 2) / (eps / 2)
    ok = abs(a - alpha_true) <= 1.96 * se and epc_err < 0.10 and dt < 120
    detail = f"alpha={a:.7f}+-{se:.1e} (true {alpha_true}), EPC error {epc_err:.2%}, {dt:.1f} s"
    assert criterion(5, ok, detail), detail


def test_criterion_06_correlated_rb(criterion, jobs):
    rng = np.random.default_rng(6)
    notes, ok = [], True

    # forward/inverse round trips
    worst = 0.0
    for n in (1, 2, 3, 4):
        p = rng.dirichlet(np.ones(2**n))
        back = alpha_to_pauli_weights(pauli_to_alpha(SubspaceWeights("pauli_p", n, p)))
        worst = max(worst, np.max(np.abs(back.values - p)))
        e = np.concatenate([[0.0], rng.uniform(0, 0.02, 2**n - 1)])
        e[0] = 1 - e[1:].sum()
        back = alpha_to_depol_weights(depol_to_alpha(SubspaceWeights("depol_eps", n, e)))
        worst = max(worst, np.max(np.abs(back.values[1:] - e[1:])))
    ok &= worst < 1e-12
    notes.append(f"round trip {worst:.1e}")

    # brute-force channel oracles on 1 and 2 qubits
    kern = 0.0
    for n in (1, 2):
        probs = rng.dirichlet(np.ones(4**n))
        pw = np.zeros(2**n)
        for idx, pr in enumerate(probs):
            paulis = [(idx >> (2 * q)) & 3 for q in range(n)]
            pw[sum(1 << q for q in range(n) if paulis[q])] += pr
        oracle = channel_subset_decays(pauli_kraus(n, probs), n)
        kern = max(kern, np.max(np.abs(pauli_to_alpha(SubspaceWeights("pauli_p", n, pw)).values[1:] - oracle[1:])))
        eps = {m: rng.uniform(0, 0.05) for m in range(1, 2**n)}
        e = np.array([1 - sum(eps.values())] + [eps[m] for m in range(1, 2**n)])
        oracle = channel_subset_decays(depolarizing_kraus(n, eps), n)
        kern = max(kern, np.max(np.abs(depol_to_alpha(SubspaceWeights("depol_eps", n, e)).values[1:] - oracle[1:])))
    ok &= kern < 1e-12
    notes.append(f"kernel oracle {kern:.1e}")

    # exact zero on a consistent product (weight <= 1) input
    p = np.zeros(16)
    p[[1, 2, 4, 8]] = [2**-10, 2**-11, 2**-12, 2**-9]
    p[0] = 1.0 - p[1:].sum()
    eta0 = crosstalk_metric(SubspaceWeights("pauli_p", 4, p))
    ok &= eta0 == 0.0
    notes.append(f"eta(product)={eta0}")

    # simulated product channel at full statistics
    single = (3.8e-4, 4.6e-4, 3.1e-4, 5.0e-4)
    ds = simulate_rb(4, NoiseChannelSpec.product(single), PAPER_LENGTHS, 80, 5000, 0.0, 61, jobs)
    eta_sim = analyze_correlated_rb(ds).eta_tilde
    ok &= eta_sim < 5e-4
    notes.append(f"eta(sim product)={eta_sim:.2e}")

    # injected weight-2 depolarizing term
    chan = NoiseChannelSpec(4, {"1000": 3e-4, "0100": 3e-4, "0010": 3e-4, "0001": 3e-4, "1100": 1e-3})
    ds = simulate_rb(4, chan, PAPER_LENGTHS, 80, 5000, 0.0, 62, jobs)
    e1100 = analyze_correlated_rb(ds).depol["1100"]
    rel = abs(e1100 - 1e-3) / 1e-3
    ok &= rel < 0.15
    notes.append(f"eps_1100={e1100:.3e} ({rel:.1%})")
    detail = ", ".join(notes)
    assert criterion(6, ok, detail), detail


def test_criterion_07_paper_eta(criterion):
    alpha = SubspaceWeights.from_labels("alpha", CORRELATED_ALPHAS)
    p = alpha_to_pauli_weights(alpha)
    eta = crosstalk_metric(p)
    p0 = p["0000"]
    ok = abs(p0 - P_IDENTITY) <= 2e-4 and ETA_TILDE / 1.5 <= eta <= ETA_TILDE * 1.5
    detail = f"p_0000={p0:.7f} (ref {P_IDENTITY}), eta={eta:.3e} (ref {ETA_TILDE:.1e})"
    assert criterion(7, ok, detail), detail


def test_criterion_08_leakage_rb(criterion, jobs):
    spec = LeakageSpec(3.5e-5, 1e-3, 7e-4)
    ds = simulate_leakage_rb(spec, PAPER_LENGTHS, 80, 5000, 0.0, 8, jobs)
    four = analyze_leakage_rb(ds, "four_param")
    three = analyze_leakage_rb(ds, "three_param")
    lpg = four["LPG"]
    lpg_rel = abs(lpg - 3.5e-5) / 3.5e-5
    diff = abs(four["EPG"] - three["EPG"])
    comb = 1.96 * math.hypot(four["EPG_err"], three["EPG_err"])
    ratio = three["EPG"] / lpg
    ok = lpg_rel < 0.10 and ratio >= 10 and diff <= comb
    detail = (
        f"LPG={lpg:.3e} ({lpg_rel:.1%}), EPG 4p={four['EPG']:.3e} 3p={three['EPG']:.3e}, "
        f"|diff|={diff:.1e} <= {comb:.1e}, EPG/LPG={ratio:.1f}"
    )
    assert criterion(8, ok, detail), detail


def test_criterion_09_crosstalk(criterion):
    dev = reference_device()
    rng = np.random.default_rng(9)
    q_db = rng.uniform(-45.0, -15.0, (4, 4))
    r_db = rng.uniform(-45.0, -15.0, (4, 4))
    q_db[0, 1] = r_db[1, 0] = -45.0
    np.fill_diagonal(q_db, 0.0)
    np.fill_diagonal(r_db, 0.0)
    dev.eps_q = 10 ** (q_db / 20)
    dev.eps_r = 10 ** (r_db / 20)
    qsel, _ = qubit_selectivity_pipeline(dev, PipelineConfig(), 90)
    rsel, _ = resonator_selectivity_pipeline(dev, PipelineConfig(), 91)
    q_dev = np.max(np.abs(qsel.db - q_db))
    r_dev = np.max(np.abs(rsel.db - r_db))
    ok = q_dev <= 1.0 and r_dev <= 1.0 and not qsel.upper_bound.any() and not rsel.upper_bound.any()

    # J-mediated drive bends away from a line; a direct line coupling does not
    drives = np.linspace(2.0, 19.0, 6)
    j_rates = np.array([simulate_coupled_drive(64.0, -198.0, -199.0, 1.0, a).rate for a in drives])
    rel_err = 0.005
    j_diag = linearity_diagnostic(drives, j_rates, rel_err * j_rates)
    noise = np.random.default_rng(92).standard_normal(drives.size)
    lin = j_rates[0] / drives[0] * drives * (1 + rel_err * noise)
    l_diag = linearity_diagnostic(drives, lin, rel_err * lin)
    ok &= j_diag.reduced_chi2 > 5 and not l_diag.nonlinear

    bounds = [bound_parasitic_chi(1e3, p.n_crit / 10) for p in dev.pairs]
    ok &= all(abs(b - 20.0) <= 2.0 for b in bounds)
    detail = (
        f"max |dB error| qubit {q_dev:.3f} resonator {r_dev:.3f}; chi2_red J-path {j_diag.reduced_chi2:.1f} "
        f"vs line {l_diag.reduced_chi2:.2f}; chi bound {min(bounds):.1f}-{max(bounds):.1f} Hz"
    )
    assert criterion(9, ok, detail), detail


def test_criterion_10_dispersive_relations(criterion):
    worst = 0.0
    for g, delta, ec in itertools.product((25.0, 50.0, 100.0), (-4.0, -2.0, 2.0, 4.0), (180.0, 200.0, 220.0)):
        if g / abs(delta * 1e3) > 0.05:
            continue
        worst = max(worst, abs(chi_from_g(g, delta, ec) / transmon_cavity_chi(g, delta, ec) - 1))
    dev = reference_device()
    disc = [abs(p.chi_predicted(q.E_C) / p.chi - 1) for p, q in zip(dev.pairs, dev.qubits)]
    ok = worst < 0.02 and all(np.isfinite(disc))
    detail = f"max oracle deviation {worst:.2%}; recorded chi vs g-derived chi differ by {', '.join(f'{d:.0%}' for d in disc)} (reported)"
    assert criterion(10, ok, detail), detail


def _tree(d: Path) -> dict:
    out = {}
    for f in sorted(d.iterdir()):
        if f.name == "manifest.json":
            m = json.loads(f.read_text())
            m.pop("timestamp")
            out[f.name] = json.dumps(m, sort_keys=True).replace(str(d), "<out>").encode()
        else:
            out[f.name] = f.read_bytes()
    return out


def test_criterion_11_determinism(criterion, tmp_path):
    configs = {
        "rb": {"kind": "rb", "n_qubits": 2, "eps": {"10": 2e-3, "01": 1e-3, "11": 5e-4}, "lengths": {"max": 600, "n": 10}, "seeds": 12, "shots": 300},
        "leak": {"kind": "leakage_rb", "L_up": 2e-4, "L_down": 2e-3, "eps": 1e-3, "lengths": {"max": 1500, "n": 10}, "seeds": 12, "shots": 300},
        "coh": {"kind": "coherence", "repeats": 2},
    }
    analyses = {"rb": ("rb", "corr-rb"), "leak": ("leakage-rb",), "coh": ("coherence",)}
    runs = {}
    for jobs in (1, 3):
        root = tmp_path / f"jobs{jobs}"
        for name, cfg in configs.items():
            cfg_path = tmp_path / f"{name}.json"
            cfg_path.write_text(json.dumps(cfg))
            out = root / f"synth_{name}"
            assert cli.main(["synth", "--config", str(cfg_path), "--out", str(out), "--seed", "5", "--jobs", str(jobs)]) == 0
            runs.setdefault(out.name, []).append(_tree(out))
            for kind in analyses[name]:
                a_out = root / f"{kind}_{name}"
                argv = ["analyze", kind, "--input", str(out), "--out", str(a_out), "--seed", "5", "--jobs", str(jobs), "--resamples", "12"]
                assert cli.main(argv) == 0
                runs.setdefault(a_out.name, []).append(_tree(a_out))
    for trees in runs.values():
        for t in trees:
            for k in t:
                t[k] = t[k].replace(str(tmp_path / "jobs1").encode(), b"").replace(str(tmp_path / "jobs3").encode(), b"")
    same = {name: trees[0] == trees[1] for name, trees in runs.items()}
    ok = all(same.values())
    detail = f"{len(same)} output dirs compared for --jobs 1 vs 3: " + ", ".join(f"{k}={'same' if v else 'DIFF'}" for k, v in same.items())
    assert criterion(11, ok, detail), detail


if __name__ == "__main__":
    raise SystemExit(pytest.main([__file__, "-q", "-s"]))
