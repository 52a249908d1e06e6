"""Command-line front end.

Subcommands::

    dispersive-kit synth        --config CFG --out DIR [--seed N] [--jobs N]
    dispersive-kit analyze KIND --input PATH --out DIR [--jobs N] [--sigma-ratio R]
    dispersive-kit predict-band [--config LATTICE] --out DIR [--grid N]
    dispersive-kit report       [--device DEV] [--input DIR ...] --out DIR

Machine output goes to files only; diagnostics go to standard error. Exit
status is 0 on success, 1 when a fit or simulation fails and 2 for invalid
input. The master seed is taken from ``--seed``, then ``DISPERSIVE_KIT_SEED``,
then the config's ``seed`` field, then 0.
"""
from __future__ import annotations

import argparse
import csv
import datetime as _dt
import json
import os
import sys
from fractions import Fraction
from pathlib import Path
from typing import Optional

import numpy as np

from . import __version__
from .band import LatticeSpec, brillouin_path, coupling_map, coupling_profile, dispersion, predict_band
from .crosstalk import (
    PipelineConfig,
    bound_parasitic_J,
    qubit_selectivity_pipeline,
    resonator_selectivity_pipeline,
)
from .device import DeviceParamsError, load_device
from .dispersive import coherence_limited_epg, pure_dephasing_time
from .fits import FitError, fit_echo_pair, fit_exp_decay, fit_ramsey
from .freq import DEFAULT_SIGMA_RATIO
from .rb_analysis import (
    analyze_correlated_rb,
    analyze_leakage_rb,
    analyze_single_qubit_rb,
    bootstrap_errors,
    cell_correlators,
    leakage_summary,
    single_qubit_chain,
)
from .reference import GATE_PERIOD_NS, reference_device
from .synth.rb import LeakageSpec, NoiseChannelSpec, load_rb_dataset, simulate_leakage_rb, simulate_rb
from .synth.traces import DecayParams, gen_decay_trace
from .traces import read_trace_csv

SEED_ENV = "DISPERSIVE_KIT_SEED"


class UsageError(Exception):
    """Invalid configuration or input; exit status 2."""


class PipelineFailure(Exception):
    """A fit or simulation stage failed; exit status 1."""


# helpers -------------------------------------------------------------------


def _clean(obj):
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _clean(obj.tolist())
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if np.isfinite(v) else None
    if isinstance(obj, Fraction):
        return float(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    return obj


def write_json(path: Path, obj) -> Path:
    path.write_text(json.dumps(_clean(obj), indent=2, sort_keys=True) + "\n")
    return path


def write_csv(path: Path, header, rows) -> Path:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([repr(float(v)) if isinstance(v, (float, np.floating)) else v for v in row])
    return path


def read_config(path: Optional[str]) -> dict:
    if path is None:
        return {}
    p = Path(path)
    if not p.is_file():
        raise UsageError(f"config file not found: {path}")
    try:
        doc = json.loads(p.read_text())
    except json.JSONDecodeError as exc:
        raise UsageError(f"{path}: line {exc.lineno}: {exc.msg}") from None
    if not isinstance(doc, dict):
        raise UsageError(f"{path}: top level must be a JSON object")
    return doc


def resolve_seed(flag: Optional[int], cfg: dict) -> int:
    if flag is not None:
        return int(flag)
    env = os.environ.get(SEED_ENV)
    if env not in (None, ""):
        try:
            return int(env)
        except ValueError:
            raise UsageError(f"{SEED_ENV} must be an integer, got {env!r}") from None
    return int(cfg.get("seed", 0))


def write_manifest(out: Path, command: str, config: Optional[str], seed: Optional[int], inputs, outputs) -> None:
    doc = {
        "command": command,
        "config": None if config is None else str(config),
        "master_seed": seed,
        "inputs": [str(p) for p in inputs],
        "outputs": sorted(str(Path(p).name) for p in outputs),
        "toolkit_version": __version__,
        "timestamp": _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds"),
    }
    write_json(out / "manifest.json", doc)


def _field(cfg: dict, key: str, kind=float, default=None, required=False):
    if key not in cfg:
        if required:
            raise UsageError(f"config field {key!r} is required")
        return default
    try:
        return kind(cfg[key])
    except (TypeError, ValueError):
        raise UsageError(f"config field {key!r}: expected {kind.__name__}, got {cfg[key]!r}") from None


def _delays(cfg: dict) -> np.ndarray:
    d = cfg.get("delays_us")
    if isinstance(d, dict):
        start, stop, n = _field(d, "start", float, 0.0), _field(d, "stop", float, required=True), _field(d, "n", int, required=True)
        if n < 2 or stop <= start:
            raise UsageError("delays_us needs n >= 2 and stop > start")
        return start + (stop - start) * np.arange(n) / n
    if isinstance(d, list):
        return np.asarray(d, float)
    raise UsageError("config field 'delays_us' must be {start, stop, n} or a list")


def _device(cfg: dict, base: Path):
    ref = cfg.get("device", "reference")
    if ref == "reference":
        return reference_device()
    p = Path(ref)
    if not p.is_absolute():
        p = base / p
    try:
        return load_device(p)
    except DeviceParamsError as exc:
        raise UsageError(f"{p}: {exc}") from None


# synth -----------------------------------------------------------------------


def synth_trace(cfg: dict, out: Path, seed: int) -> list[Path]:
    kind = cfg["kind"]
    params = DecayParams(
        T=_field(cfg, "T_us", float, required=True),
        f_detune=_field(cfg, "f_detune_MHz", float, 0.0),
        amplitude=_field(cfg, "amplitude", float, 0.5),
        offset=_field(cfg, "offset", float, 0.5),
        phase=_field(cfg, "phase", float, 0.0),
    )
    try:
        res = gen_decay_trace(kind, params, _delays(cfg), _field(cfg, "noise_sigma", float, 0.0), seed)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    traces = res if isinstance(res, tuple) else (res,)
    paths = []
    for tr in traces:
        p = out / f"{tr.kind}.csv"
        tr.to_csv(p)
        paths.append(p)
    return paths


def synth_coherence(cfg: dict, out: Path, seed: int, base: Path) -> list[Path]:
    """Per-qubit T1, Ramsey and echo traces from device coherence times."""
    dev = _device(cfg, base)
    repeats = _field(cfg, "repeats", int, 5)
    n = _field(cfg, "n_points", int, 200)
    sigma = _field(cfg, "noise_sigma", float, 0.02)
    f_ramsey = _field(cfg, "ramsey_detuning_MHz", float, 0.25)
    span = _field(cfg, "span_over_T", float, 3.0)
    paths = []
    for i, q in enumerate(dev.qubits):
        if None in (q.T1, q.T2_star, q.T2_echo):
            raise UsageError(f"qubit {i} lacks coherence times")
        for r in range(repeats):
            cell = int(np.random.SeedSequence(entropy=seed, spawn_key=(i, r)).generate_state(1)[0])
            plan = (
                ("t1", q.T1, 0.0),
                ("ramsey", q.T2_star, f_ramsey),
                ("echo", q.T2_echo, 0.0),
            )
            for k, (kind, T, f) in enumerate(plan):
                t = span * T * np.arange(n) / n
                res = gen_decay_trace(kind, DecayParams(T=T, f_detune=f), t, sigma, cell + k)
                for tr in res if isinstance(res, tuple) else (res,):
                    p = out / f"q{i + 1}_r{r:02d}_{tr.kind}.csv"
                    tr.to_csv(p)
                    paths.append(p)
    return paths


def _lengths(cfg: dict) -> np.ndarray:
    L = cfg.get("lengths")
    if isinstance(L, dict):
        mx, n = _field(L, "max", int, required=True), _field(L, "n", int, 31)
        return np.round(np.linspace(0, 1, n) ** 2 * (mx - 1)).astype(int) + 1
    if isinstance(L, list) and L:
        return np.asarray(L, dtype=int)
    raise UsageError("config field 'lengths' must be a list or {max, n}")


def synth_rb(cfg: dict, out: Path, seed: int, jobs: int) -> list[Path]:
    n = _field(cfg, "n_qubits", int, required=True)
    eps = cfg.get("eps")
    if not isinstance(eps, dict):
        raise UsageError("config field 'eps' must map subset labels to probabilities")
    try:
        channel = NoiseChannelSpec(n, eps)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    ds = simulate_rb(
        n,
        channel,
        _lengths(cfg),
        _field(cfg, "seeds", int, 80),
        _field(cfg, "shots", int, 5000),
        _field(cfg, "readout_error", float, 0.0),
        seed,
        jobs,
    )
    p = out / "rb_dataset.json"
    ds.to_json(p)
    return [p]


def synth_leakage_rb(cfg: dict, out: Path, seed: int, jobs: int) -> list[Path]:
    try:
        spec = LeakageSpec(
            _field(cfg, "L_up", float, required=True),
            _field(cfg, "L_down", float, required=True),
            _field(cfg, "eps", float, required=True),
        )
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    ds = simulate_leakage_rb(
        spec,
        _lengths(cfg),
        _field(cfg, "seeds", int, 80),
        _field(cfg, "shots", int, 5000),
        _field(cfg, "readout_error", float, 0.0),
        seed,
        jobs,
    )
    p = out / "rb_dataset.json"
    ds.to_json(p)
    return [p]


def cmd_synth(args) -> list[Path]:
    cfg = read_config(args.config)
    kind = cfg.get("kind")
    seed = resolve_seed(args.seed, cfg)
    out = args.out
    base = Path(args.config).parent
    if kind in ("t1", "ramsey", "echo", "rabi"):
        paths = synth_trace(cfg, out, seed)
    elif kind == "coherence":
        paths = synth_coherence(cfg, out, seed, base)
    elif kind == "rb":
        paths = synth_rb(cfg, out, seed, args.jobs)
    elif kind == "leakage_rb":
        paths = synth_leakage_rb(cfg, out, seed, args.jobs)
    else:
        raise UsageError(f"config field 'kind' must be t1|ramsey|echo|rabi|coherence|rb|leakage_rb, got {kind!r}")
    write_manifest(out, f"synth {kind}", args.config, seed, [args.config], paths)
    return paths


# analyze ---------------------------------------------------------------------


def _mean_sd(values):
    v = np.array([x for x in values if x is not None and np.isfinite(x)], float)
    if v.size == 0:
        return None, None
    return float(v.mean()), float(v.std(ddof=1)) if v.size > 1 else 0.0


def analyze_coherence(inp: Path, out: Path, sigma_ratio: float) -> list[Path]:
    files = sorted(inp.glob("q*_r*_*.csv")) if inp.is_dir() else []
    if not files:
        raise UsageError(f"no coherence traces (q<i>_r<k>_<kind>.csv) in {inp}")
    groups: dict = {}
    for f in files:
        qtag, rtag, kind = f.stem.split("_", 2)
        groups.setdefault(qtag, {}).setdefault(rtag, {})[kind] = f
    table = []
    rows = []
    for qtag in sorted(groups, key=lambda s: int(s[1:])):
        per = {"T1": [], "T2_star": [], "T2_echo": [], "T_phi_e": [], "EPG_coh": []}
        for rtag in sorted(groups[qtag]):
            g = groups[qtag][rtag]
            try:
                T1 = fit_exp_decay(read_trace_csv(g["t1"]))["T"] if "t1" in g else None
                T2s = None
                if "ramsey" in g:
                    T2s = fit_ramsey(read_trace_csv(g["ramsey"]))["T"]
                T2e = None
                if "echo_plus" in g and "echo_minus" in g:
                    T2e = fit_echo_pair(read_trace_csv(g["echo_plus"]), read_trace_csv(g["echo_minus"]))["T2e"]
            except FitError as exc:
                raise PipelineFailure(f"{qtag} {rtag}: {exc}") from None
            per["T1"].append(T1)
            per["T2_star"].append(T2s)
            per["T2_echo"].append(T2e)
            tphi = epg = None
            if T1 and T2e:
                try:
                    tphi = pure_dephasing_time(T1, T2e)
                except ValueError:
                    tphi = None
                epg = coherence_limited_epg(T1, T2e, GATE_PERIOD_NS)
            per["T_phi_e"].append(tphi)
            per["EPG_coh"].append(epg)
            rows.append([qtag, rtag, T1, T2s, T2e, tphi, epg])
        entry = {"qubit": qtag}
        for k, v in per.items():
            entry[k] = dict(zip(("mean", "sd"), _mean_sd(v)))
        table.append(entry)
    paths = [write_json(out / "coherence.json", {"gate_period_ns": GATE_PERIOD_NS, "table": table})]
    paths.append(
        write_csv(out / "coherence_fits.csv", ["qubit", "repeat", "T1_us", "T2_star_us", "T2_echo_us", "T_phi_e_us", "EPG_coh"], [[("" if v is None else v) for v in r] for r in rows])
    )
    return paths


def _rb_input(inp: Path):
    p = inp / "rb_dataset.json" if inp.is_dir() else inp
    if not p.is_file():
        raise UsageError(f"no RB dataset found at {inp}")
    try:
        return load_rb_dataset(p)
    except (ValueError, KeyError, json.JSONDecodeError) as exc:
        raise UsageError(f"{p}: invalid RB dataset ({exc})") from None


def analyze_rb(inp: Path, out: Path, jobs: int, resamples: int, seed: int) -> list[Path]:
    ds = _rb_input(inp)
    if ds.levels != 2:
        raise UsageError("dataset has leakage outcomes; use 'leakage-rb'")
    results, curves = [], []
    corr = cell_correlators(ds)
    for q in range(ds.n_qubits):
        try:
            fit = analyze_single_qubit_rb(ds, q)
        except FitError as exc:
            raise PipelineFailure(f"qubit {q}: {exc}") from None
        entry = {"qubit": q + 1, "fit": fit.to_dict()}
        if resamples:
            entry["bootstrap"] = bootstrap_errors(ds, resamples, single_qubit_chain(q), seed, jobs, corr=corr)
        results.append(entry)
        p = fit.parameters
        z = corr[:, :, 1 << q]
        for li, m in enumerate(ds.lengths):
            s = (1 + z[li]) / 2
            curves.append([q + 1, int(m), s.mean(), s.std(ddof=1) / np.sqrt(ds.n_seeds), p["A"] * p["alpha"] ** m + p["B"]])
    paths = [write_json(out / "rb.json", {"gates_per_clifford": ds.gates_per_clifford, "qubits": results})]
    paths.append(write_csv(out / "rb_curves.csv", ["qubit", "m", "survival_mean", "survival_sem", "fit"], curves))
    return paths


def analyze_corr_rb(inp: Path, out: Path, jobs: int, resamples: int, seed: int) -> list[Path]:
    ds = _rb_input(inp)
    try:
        res = analyze_correlated_rb(ds, resamples, seed, jobs)
    except FitError as exc:
        raise PipelineFailure(str(exc)) from None
    paths = [write_json(out / "corr_rb.json", res.to_dict())]
    nv = 1 << ds.n_qubits
    rows = []
    for m in range(nv):
        lab = res.alpha.label(m)
        rows.append(
            [
                lab,
                bin(m).count("1"),
                res.alpha.values[m] if m else "",
                res.alpha.errors[m] if (m and res.alpha.errors is not None) else "",
                res.pauli.values[m],
                res.pauli.errors[m] if res.pauli.errors is not None else "",
                res.depol.values[m] if m else "",
                res.depol.errors[m] if (m and res.depol.errors is not None) else "",
            ]
        )
    paths.append(write_csv(out / "subset_weights.csv", ["subset", "weight", "alpha", "alpha_err", "p", "p_err", "eps", "eps_err"], rows))
    corr = cell_correlators(ds)
    crow = []
    for li, m in enumerate(ds.lengths):
        crow.append([int(m)] + [corr[li, :, s].mean() for s in range(1, nv)])
    paths.append(write_csv(out / "correlators.csv", ["m"] + [f"Z_{res.alpha.label(s)}" for s in range(1, nv)], crow))
    return paths


def analyze_leakage(inp: Path, out: Path) -> list[Path]:
    ds = _rb_input(inp)
    if ds.levels != 3:
        raise UsageError("dataset has no leakage outcomes")
    doc = {}
    for mode in ("four_param", "three_param"):
        try:
            doc[mode] = analyze_leakage_rb(ds, mode).to_dict()
        except FitError as exc:
            raise PipelineFailure(f"{mode}: {exc}") from None
    paths = [write_json(out / "leakage_rb.json", doc)]
    leak, le, surv, se = leakage_summary(ds)
    rows = [[int(m), a, b, c, d] for m, a, b, c, d in zip(ds.lengths, leak, le, surv, se)]
    paths.append(write_csv(out / "leakage_curves.csv", ["m", "leaked_mean", "leaked_sem", "survival_mean", "survival_sem"], rows))
    return paths


def analyze_crosstalk(inp: Path, out: Path, sigma_ratio: float, seed_flag: Optional[int]) -> list[Path]:
    cfg = read_config(str(inp))
    seed = resolve_seed(seed_flag, cfg)
    dev = _device(cfg, inp.parent)
    pcfg = cfg.get("pipeline", {})
    try:
        pc = PipelineConfig.from_dict({**pcfg, "sigma_ratio": sigma_ratio})
    except (TypeError, ValueError) as exc:
        raise UsageError(f"pipeline config: {exc}") from None
    qsel, _ = qubit_selectivity_pipeline(dev, pc, seed)
    rsel, _ = resonator_selectivity_pipeline(dev, pc, seed)
    freqs = [q.omega_q for q in dev.qubits]
    jb = bound_parasitic_J(qsel, freqs)
    doc = {"qubit": qsel.to_dict(), "resonator": rsel.to_dict(), "J_bound_kHz": jb, "master_seed": seed}
    paths = [write_json(out / "crosstalk.json", doc)]
    (out / "crosstalk.txt").write_text(
        "qubit selectivity (dB)\n" + qsel.to_text() + "\n\nresonator selectivity (dB)\n" + rsel.to_text() + "\n"
    )
    paths.append(out / "crosstalk.txt")
    return paths


def cmd_analyze(args) -> list[Path]:
    inp = Path(args.input)
    if not inp.exists():
        raise UsageError(f"input not found: {inp}")
    if inp.is_dir() and not any(inp.iterdir()):
        raise UsageError(f"input directory {inp} is empty: no data")
    seed = resolve_seed(args.seed, {})
    if args.kind == "coherence":
        paths = analyze_coherence(inp, args.out, args.sigma_ratio)
    elif args.kind == "rb":
        paths = analyze_rb(inp, args.out, args.jobs, args.resamples, seed)
    elif args.kind == "corr-rb":
        paths = analyze_corr_rb(inp, args.out, args.jobs, args.resamples, seed)
    elif args.kind == "leakage-rb":
        paths = analyze_leakage(inp, args.out)
    else:
        paths = analyze_crosstalk(inp, args.out, args.sigma_ratio, args.seed)
    write_manifest(args.out, f"analyze {args.kind}", None, seed, [inp], paths)
    return paths


# predict-band ----------------------------------------------------------------


def cmd_predict_band(args) -> list[Path]:
    cfg = read_config(args.config)
    try:
        spec = LatticeSpec.from_dict(cfg.get("lattice", cfg) if cfg else {})
        pred = predict_band(spec, float(cfg.get("omega_q_GHz", 0.0)) if cfg else 0.0)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    out = args.out
    paths = [write_json(out / "band_prediction.json", {"lattice": spec.to_dict(), "prediction": pred.to_dict()})]
    k, ticks = brillouin_path(spec.a)
    wp, w0 = dispersion(spec, k)
    paths.append(write_csv(out / "dispersion.csv", ["path_index", "k_per_mm", "with_pillar_GHz", "without_pillar_GHz"], [[i, a, b, c] for i, (a, b, c) in enumerate(zip(k, wp, w0))]))
    d = np.linspace(0.5, 20.0, 40)
    prof = coupling_profile(d, pred.delta_p, d_ref=spec.a)
    paths.append(write_csv(out / "coupling_profile.csv", ["d_mm", "relative", "db", "near_field"], [[a, b, c, int(e)] for a, b, c, e in zip(d, prof.relative, prof.db, prof.near_field)]))
    grid = args.grid
    cmap = coupling_map(grid, spec.a, pred.delta_p)
    paths.append(write_csv(out / "coupling_map_db.csv", [f"q{j}" for j in range(grid * grid)], cmap.tolist()))
    return paths


# report ----------------------------------------------------------------------


def cmd_report(args) -> list[Path]:
    cfg = {"device": args.device} if args.device else {}
    dev = _device(cfg, Path("."))
    rows = []
    for i, (q, r, pc) in enumerate(zip(dev.qubits, dev.resonators, dev.pairs)):
        chi_pred = pc.chi_predicted(q.E_C)
        entry = {
            "qubit": i + 1,
            "omega_q_GHz": q.omega_q,
            "omega_r_GHz": r.omega_r,
            "g_MHz": pc.g,
            "chi_listed_kHz": pc.chi,
            "chi_from_g_kHz": chi_pred,
            "chi_discrepancy": (chi_pred - pc.chi) / pc.chi if pc.chi else None,
            "n_crit": pc.n_crit,
            "n_crit_rounded": int(round(pc.n_crit)),
        }
        if q.T1 and q.T2_echo:
            entry["T_phi_e_us"] = pure_dephasing_time(q.T1, q.T2_echo)
            entry["EPG_coherence_limit"] = coherence_limited_epg(q.T1, q.T2_echo, GATE_PERIOD_NS)
        rows.append(entry)
    doc = {"device": rows, "gate_period_ns": GATE_PERIOD_NS, "analyses": {}}
    for d in args.input or []:
        for f in sorted(Path(d).glob("*.json")):
            if f.name != "manifest.json":
                doc["analyses"][f"{Path(d).name}/{f.name}"] = json.loads(f.read_text())
    out = args.out
    paths = [write_json(out / "report.json", doc)]
    lines = ["qubit  n_crit  chi_listed_kHz  chi_from_g_kHz  T_phi_e_us  EPG_coh_limit"]
    for e in rows:
        lines.append(
            f"Q{e['qubit']:<5}{e['n_crit_rounded']:>6}{e['chi_listed_kHz']:>16.0f}{e['chi_from_g_kHz']:>16.0f}"
            f"{e.get('T_phi_e_us', float('nan')):>12.0f}{e.get('EPG_coherence_limit', float('nan')):>15.2e}"
        )
    for name, a in doc["analyses"].items():
        lines.extend(_analysis_lines(name, a))
    (out / "report.txt").write_text("\n".join(lines) + "\n")
    paths.append(out / "report.txt")
    return paths


def _pm(v, e) -> str:
    return f"{v:.3e}" if e is None else f"{v:.3e} +/- {e:.1e}"


def _analysis_lines(name: str, a: dict) -> list[str]:
    """One-line summaries of the headline numbers in an analysis document."""
    if "eta_tilde" in a:
        return ["", name, f"  eta_tilde  {_pm(a['eta_tilde'], a.get('eta_tilde_err'))}"]
    if "four_param" in a:
        out = ["", name]
        for mode in ("four_param", "three_param"):
            d = a[mode]["derived"]
            out.append(f"  {mode:<11} LPG {_pm(d['LPG'], d.get('LPG_err'))}  EPG {_pm(d['EPG'], d.get('EPG_err'))}")
        return out
    if "qubits" in a and a["qubits"] and "fit" in a["qubits"][0]:
        out = ["", name]
        for q in a["qubits"]:
            d = q["fit"]["derived"]
            out.append(f"  Q{q['qubit']:<4} EPG {_pm(d['EPG'], d.get('EPG_err'))}")
        return out
    return ["", f"{name} (see report.json)"]


# entry point ---------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="dispersive-kit", description=__doc__.split("\n")[0])
    ap.add_argument("--version", action="version", version=__version__)
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--out", type=Path, required=True, help="output directory")
        p.add_argument("--seed", type=int, default=None, help="master seed")
        p.add_argument("--jobs", type=int, default=os.cpu_count() or 1, help="worker processes")

    s = sub.add_parser("synth", help="generate synthetic datasets")
    s.add_argument("--config", required=True)
    common(s)
    a = sub.add_parser("analyze", help="fit and analyse datasets")
    a.add_argument("kind", choices=("coherence", "crosstalk", "rb", "corr-rb", "leakage-rb"))
    a.add_argument("--input", required=True, help="dataset directory/file (crosstalk: pipeline config JSON)")
    a.add_argument("--resamples", type=int, default=100, help="bootstrap resamples (0 disables)")
    a.add_argument("--sigma-ratio", type=float, default=DEFAULT_SIGMA_RATIO)
    common(a)
    b = sub.add_parser("predict-band", help="plasma band model from lattice geometry")
    b.add_argument("--config", default=None)
    b.add_argument("--grid", type=int, default=10, help="qubit grid size for the coupling map")
    common(b)
    r = sub.add_parser("report", help="render device and analysis tables")
    r.add_argument("--device", default=None, help="device JSON (default: recorded reference device)")
    r.add_argument("--input", nargs="*", help="analysis output directories to include")
    common(r)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        args.out.mkdir(parents=True, exist_ok=True)
        if args.command == "synth":
            cmd_synth(args)
        elif args.command == "analyze":
            cmd_analyze(args)
        elif args.command == "predict-band":
            cmd_predict_band(args)
            write_manifest(args.out, "predict-band", args.config, None, [args.config] if args.config else [], list(args.out.iterdir()))
        else:
            cmd_report(args)
            write_manifest(args.out, "report", args.device, None, args.input or [], list(args.out.iterdir()))
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (PipelineFailure, FitError, RuntimeError) as exc:
        print(f"failed: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
