"""Control-line selectivity, parasitic-coupling bounds and J-mediated drive.

Selectivities are power ratios ``phi_ij`` for the response of element ``i``
to generator line ``j`` relative to line ``j``'s intended element. They are
rendered in dB as ``10 log10(phi)``.

Units in the synthetic pipelines: qubit-line couplings ``eps_q`` are Rabi
rates per volt (MHz/V, drive-matrix-element convention), resonator-line
couplings ``eps_r`` are drive amplitudes per square-root watt (MHz/sqrt(W)),
Rabi and Stark rates are in MHz and delays in microseconds.
"""
from __future__ import annotations

import json
import math
import warnings
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .device import DeviceParams
from .fits import FitResult, fit_linear
from .freq import DEFAULT_SIGMA_RATIO, DegeneratePeakError, gaussian_interp_frequency
from .synth.traces import DecayParams, gen_decay_trace

SERIES_VALIDITY = 0.3
# noise-only spectra peak near 3x their median magnitude
PEAK_TO_FLOOR = 8.0


class SelectivityError(ValueError):
    pass


@dataclass
class SelectivityMatrix:
    """Selectivity power ratios with optional upper-bound entries.

    ``upper_bound[i, j]`` marks entries where only an upper limit was measured.
    """

    values: np.ndarray
    kind: str
    upper_bound: Optional[np.ndarray] = None
    errors_db: Optional[np.ndarray] = None

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        n = self.values.shape[0]
        if self.values.shape != (n, n):
            raise SelectivityError("selectivity matrix must be square")
        if self.kind not in ("qubit", "resonator"):
            raise SelectivityError("kind must be 'qubit' or 'resonator'")
        if np.any(self.values < 0):
            raise SelectivityError("selectivities must be non-negative")
        if self.upper_bound is None:
            self.upper_bound = np.zeros((n, n), dtype=bool)

    @property
    def db(self) -> np.ndarray:
        with np.errstate(divide="ignore"):
            return 10.0 * np.log10(self.values)

    def to_dict(self) -> dict:
        db = self.db
        return {
            "kind": self.kind,
            "values": self.values.tolist(),
            "db": [[None if not np.isfinite(v) else float(v) for v in row] for row in db],
            "upper_bound": self.upper_bound.tolist(),
            "errors_db": None if self.errors_db is None else self.errors_db.tolist(),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    def to_text(self) -> str:
        """dB table; rows are responding elements, columns generator lines."""
        n = self.values.shape[0]
        tag = "Q" if self.kind == "qubit" else "R"
        lines = ["      " + "".join(f"{'line ' + str(j + 1):>10}" for j in range(n))]
        for i in range(n):
            cells = []
            for j in range(n):
                v = self.db[i, j]
                txt = "-inf" if not np.isfinite(v) else f"{v:.1f}"
                cells.append(f"{('<' if self.upper_bound[i, j] else '') + txt:>10}")
            lines.append(f"{tag}{i + 1:<5}" + "".join(cells))
        return "\n".join(lines)


def qubit_selectivity(k_matrix, upper_bound=None) -> SelectivityMatrix:
    """``phi_ij = (k_ij / k_jj)**2`` from Rabi-rate slopes ``k[i, j]``."""
    k = np.asarray(k_matrix, dtype=float)
    d = np.diag(k)
    if np.any(d <= 0):
        raise SelectivityError("diagonal slopes must be positive")
    return SelectivityMatrix((k / d[None, :]) ** 2, "qubit", upper_bound)


def resonator_selectivity(
    k_prime_matrix,
    chis,
    drive_detuning: Optional[float] = None,
    kappas=None,
    upper_bound=None,
) -> SelectivityMatrix:
    """``phi_ij = (chi_jj / chi_ii)(k'_ij / k'_jj)`` from Stark-shift slopes.

    Warns when the drive detuning is not much larger than ``kappa`` and
    ``|chi|`` (the detuned photon-number form would not hold).
    """
    kp = np.asarray(k_prime_matrix, dtype=float)
    chi = np.asarray(chis, dtype=float)
    if np.any(chi == 0):
        raise SelectivityError("dispersive shifts must be nonzero")
    d = np.diag(kp)
    if np.any(d == 0):
        raise SelectivityError("diagonal slopes must be nonzero")
    phi = (chi[None, :] / chi[:, None]) * (kp / d[None, :])
    if drive_detuning is not None:
        scale = np.max(np.abs(chi))
        if kappas is not None:
            scale = max(scale, float(np.max(np.abs(kappas))))
        if abs(drive_detuning) < 10 * scale:
            warnings.warn(
                "drive detuning is not much larger than kappa and chi; detuned photon form is inaccurate",
                RuntimeWarning,
                stacklevel=2,
            )
    return SelectivityMatrix(np.abs(phi), "resonator", upper_bound)


def bound_parasitic_J(selectivity: SelectivityMatrix, qubit_freqs) -> np.ndarray:
    """``|J_ij| < sqrt(min(phi_ij, phi_ji)) |omega_i - omega_j|`` in kHz.

    Args:
        selectivity: qubit selectivity matrix.
        qubit_freqs: qubit frequencies in GHz.

    Raises:
        SelectivityError: two qubits share a frequency (the bound is vacuous).
    """
    if selectivity.kind != "qubit":
        raise SelectivityError("J bound needs a qubit selectivity matrix")
    f = np.asarray(qubit_freqs, dtype=float)
    phi = selectivity.values
    n = f.size
    out = np.zeros((n, n))
    for i in range(n):
        for j in range(n):
            if i == j:
                continue
            delta_khz = abs(f[i] - f[j]) * 1e6
            if delta_khz == 0:
                raise SelectivityError(f"qubits {i} and {j} share a frequency; J bound is vacuous")
            out[i, j] = math.sqrt(min(phi[i, j], phi[j, i])) * delta_khz
    return out


def bound_parasitic_chi(freq_resolution: float, n_bar_driven: float) -> float:
    """Upper bound ``resolution / (2 n_bar)`` on an unresolved Stark shift (Hz in, Hz out)."""
    if not n_bar_driven > 0:
        raise ValueError("n_bar_driven must be positive")
    return freq_resolution / (2.0 * n_bar_driven)


def epsilon_J_perturbative(J: float, delta_q: float, alpha_j: float, drive_amp: float, eps_jj: float = 1.0) -> float:
    """J-mediated line coupling through second order in the drive.

    ``eps_jj (J/Delta) [1 - 2 x^2 + 4 (eps_jj V)^2 / (Delta (2 Delta - alpha_j))]``
    with ``x = eps_jj V / Delta`` and ``Delta = omega_i - omega_j``. ``J``,
    ``delta_q``, ``alpha_j`` and ``drive_amp = eps_jj V`` share one frequency
    unit. Warns when ``|x| > 0.3``.
    """
    if delta_q == 0:
        raise ZeroDivisionError("qubit detuning must be nonzero")
    x = drive_amp / delta_q
    if abs(x) > SERIES_VALIDITY:
        warnings.warn(f"drive/detuning ratio {x:.2f} outside the series validity range", RuntimeWarning, stacklevel=2)
    bracket = 1.0 - 2.0 * x**2 + 4.0 * drive_amp**2 / (delta_q * (2.0 * delta_q - alpha_j))
    return eps_jj * (J / delta_q) * bracket


def total_rabi_rate(eps_q: float, eps_J: float, phase: float) -> float:
    """Rate per volt from direct and J-mediated paths with relative phase."""
    s = eps_q**2 + eps_J**2 + 2.0 * eps_q * eps_J * math.cos(phase)
    return math.sqrt(max(s, 0.0))


# synthetic pipelines -------------------------------------------------------


@dataclass(frozen=True)
class PipelineConfig:
    """Measurement settings for the synthetic selectivity pipelines."""

    trace_duration_us: float = 20.0
    n_points: int = 400
    noise_sigma: float = 0.02
    n_drive_points: int = 6
    target_cycles: tuple = (10.0, 60.0)
    max_rescales: int = 16
    sigma_ratio: float = DEFAULT_SIGMA_RATIO
    rabi_T_us: float = 100.0
    v_start: float = 0.01
    v_limit: float = 1e3
    ramsey_detuning_MHz: float = 15.0
    ramsey_T_us: float = 95.0
    target_shift_MHz: tuple = (1.0, 6.0)
    p_start: float = 1e-6
    p_limit: float = 1e8
    drive_detuning_MHz: float = 50.0

    @classmethod
    def from_dict(cls, doc: dict) -> "PipelineConfig":
        known = {f for f in cls.__dataclass_fields__}
        bad = set(doc) - known
        if bad:
            raise ValueError(f"unknown pipeline config fields: {sorted(bad)}")
        vals = {k: tuple(v) if isinstance(v, list) else v for k, v in doc.items()}
        return cls(**vals)


def _cell_seed(master: int, *key: int) -> int:
    return int(np.random.SeedSequence(entropy=master, spawn_key=key).generate_state(1)[0])


def _oscillates(trace, threshold: float = PEAK_TO_FLOOR) -> bool:
    """Spectral peak well above the median magnitude (noise floor).

    A quadratic trend is removed first so slow relaxation does not leak into
    the low bins and pass for an oscillation.
    """
    x = np.linspace(-1.0, 1.0, trace.signal.size)
    resid = trace.signal - np.polyval(np.polyfit(x, trace.signal, 2), x)
    mag = np.abs(np.fft.rfft(resid))[2:]
    if mag.size < 4:
        return False
    floor = np.median(mag)
    return bool(floor == 0 or mag.max() > threshold * floor)


def _measure_freq(trace, sigma_ratio) -> Optional[float]:
    if not _oscillates(trace):
        return None
    try:
        return gaussian_interp_frequency(trace, sigma_ratio).f_est
    except DegeneratePeakError:
        return None


@dataclass
class SlopeMeasurement:
    slope: float
    slope_err: float
    drives: np.ndarray
    responses: np.ndarray
    fit: Optional[FitResult]
    upper_bound: bool = False
    flags: list = field(default_factory=list)


def _rabi_rate_model(dev: DeviceParams, i: int, j: int, V: float, phase: float = 0.0) -> float:
    """True Rabi rate (MHz) of qubit ``i`` driven through line ``j`` at ``V`` volts."""
    lam = dev.lambda_q[j]
    direct = lam * dev.eps_q[i, j]
    if i == j or dev.J[i, j] == 0:
        return abs(direct) * V
    delta = (dev.qubits[i].omega_q - dev.qubits[j].omega_q) * 1e3
    amp = lam * dev.eps_q[j, j] * V
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        eJ = epsilon_J_perturbative(dev.J[i, j] * 1e-3, delta, dev.qubits[j].alpha, amp, lam * dev.eps_q[j, j])
    return total_rabi_rate(direct, eJ, phase) * V


def _sweep(make_trace, start, limit, cfg):
    """Scale the drive until the top point shows ``cfg.target_cycles``, then sweep.

    Responses are assumed to grow with drive; when nothing oscillates the drive
    steps up tenfold, otherwise it is rescaled proportionally.
    """
    lo, hi = cfg.target_cycles
    top = start
    for _ in range(cfg.max_rescales):
        f = _measure_freq(make_trace(top, 0), cfg.sigma_ratio)
        cycles = 0.0 if f is None else f * cfg.trace_duration_us
        if lo <= cycles <= hi:
            break
        new = top * 10.0 if cycles < 3.0 else top * math.sqrt(lo * hi) / cycles
        if new > limit:
            top = limit
            break
        top = new
    drives = top * np.arange(1, cfg.n_drive_points + 1) / cfg.n_drive_points
    freqs = []
    for k, d in enumerate(drives, start=1):
        f = _measure_freq(make_trace(d, k), cfg.sigma_ratio)
        freqs.append(np.nan if f is None else f)
    return drives, np.array(freqs)


def measure_rabi_slope(dev: DeviceParams, i: int, j: int, cfg: PipelineConfig, rng_seed: int = 0) -> SlopeMeasurement:
    """Synthetic Rabi-rate-vs-voltage measurement and its through-origin slope.

    Points with fewer than three population cycles are treated as unresolved.
    """
    t = np.arange(cfg.n_points) * (cfg.trace_duration_us / cfg.n_points)

    def make_trace(V, k):
        rate = _rabi_rate_model(dev, i, j, V)
        p = DecayParams(T=cfg.rabi_T_us, f_detune=2.0 * rate, amplitude=0.5, offset=0.5)
        return gen_decay_trace("rabi", p, t, cfg.noise_sigma, _cell_seed(rng_seed, i, j, k))

    drives, f_pop = _sweep(make_trace, cfg.v_start, cfg.v_limit, cfg)
    rates = f_pop / 2.0
    ok = np.isfinite(f_pop) & (f_pop * cfg.trace_duration_us >= 3.0)
    if ok.sum() < 2:
        # nothing resolved even at the strongest drive: report a resolution-limited bound
        bound = 3.0 / cfg.trace_duration_us / 2.0 / drives[-1]
        return SlopeMeasurement(bound, math.nan, drives, rates, None, upper_bound=True, flags=["not_resolved"])
    fit = fit_linear(drives[ok], rates[ok], through_origin=True)
    k, err = fit["k"], fit.err("k")
    upper = bool(abs(k) <= 2 * err)
    return SlopeMeasurement(abs(k) + (2 * err if upper else 0.0), err, drives, rates, fit, upper_bound=upper)


def measure_stark_slope(dev: DeviceParams, i: int, j: int, cfg: PipelineConfig, rng_seed: int = 0) -> SlopeMeasurement:
    """Synthetic Stark-shift-vs-power measurement on qubit ``i`` driving resonator line ``j``.

    Photon number in resonator ``i`` uses the detuned form
    ``(lambda_j eps_r[i, j])^2 P / Delta_d^2``; the qubit shifts by ``2 chi_ii n``.
    """
    t = np.arange(cfg.n_points) * (cfg.trace_duration_us / cfg.n_points)
    chi = dev.pairs[i].chi * 1e-3  # MHz
    amp2 = (dev.lambda_r[j] * dev.eps_r[i, j]) ** 2

    def make_trace(P, k):
        n = amp2 * P / cfg.drive_detuning_MHz**2
        f = cfg.ramsey_detuning_MHz + 2.0 * chi * n
        p = DecayParams(T=cfg.ramsey_T_us, f_detune=abs(f), amplitude=0.5, offset=0.5)
        return gen_decay_trace("ramsey", p, t, cfg.noise_sigma, _cell_seed(rng_seed, 100 + i, j, k))

    f0 = _measure_freq(make_trace(0.0, 0), cfg.sigma_ratio)
    if f0 is None:
        raise RuntimeError("reference Ramsey trace has no resolvable fringe")
    lo, hi = cfg.target_shift_MHz
    top = cfg.p_start
    for _ in range(cfg.max_rescales):
        f = _measure_freq(make_trace(top, 0), cfg.sigma_ratio)
        shift = 0.0 if f is None else abs(f - f0)
        if lo <= shift <= hi:
            break
        new = top * 10.0 if shift < 0.05 * lo else top * math.sqrt(lo * hi) / shift
        if new > cfg.p_limit:
            top = cfg.p_limit
            break
        top = new
    powers = top * np.arange(1, cfg.n_drive_points + 1) / cfg.n_drive_points
    shifts = []
    for k, P in enumerate(powers, start=1):
        f = _measure_freq(make_trace(P, k), cfg.sigma_ratio)
        shifts.append(np.nan if f is None else f - f0)
    shifts = np.array(shifts)
    resolution = 2.0 * 0.009 / cfg.trace_duration_us  # two estimator bounds, MHz
    ok = np.isfinite(shifts)
    if ok.sum() < 2 or np.max(np.abs(shifts[ok])) < resolution:
        bound = resolution / powers[-1]
        return SlopeMeasurement(bound, math.nan, powers, shifts, None, upper_bound=True, flags=["not_resolved"])
    fit = fit_linear(powers[ok], shifts[ok], through_origin=True)
    k, err = fit["k"], fit.err("k")
    upper = bool(abs(k) <= 2 * err)
    return SlopeMeasurement(k, err, powers, shifts, fit, upper_bound=upper)


def qubit_selectivity_pipeline(dev: DeviceParams, cfg: PipelineConfig = PipelineConfig(), rng_seed: int = 0):
    """Device -> Rabi traces -> frequency estimates -> slopes -> selectivity."""
    n = dev.n_qubits
    k = np.zeros((n, n))
    err = np.zeros((n, n))
    ub = np.zeros((n, n), dtype=bool)
    meas = {}
    for i in range(n):
        for j in range(n):
            m = measure_rabi_slope(dev, i, j, cfg, rng_seed)
            k[i, j], err[i, j], ub[i, j] = m.slope, m.slope_err, m.upper_bound
            meas[(i, j)] = m
    sel = qubit_selectivity(k, ub)
    rel = np.sqrt((err / k) ** 2 + (np.diag(err) / np.diag(k))[None, :] ** 2)
    sel.errors_db = 20.0 / math.log(10) * rel
    return sel, meas


def resonator_selectivity_pipeline(dev: DeviceParams, cfg: PipelineConfig = PipelineConfig(), rng_seed: int = 0):
    """Device -> Stark-shifted Ramsey traces -> slopes -> resonator selectivity."""
    n = dev.n_qubits
    kp = np.zeros((n, n))
    err = np.zeros((n, n))
    ub = np.zeros((n, n), dtype=bool)
    meas = {}
    for i in range(n):
        for j in range(n):
            m = measure_stark_slope(dev, i, j, cfg, rng_seed)
            kp[i, j], err[i, j], ub[i, j] = m.slope, m.slope_err, m.upper_bound
            meas[(i, j)] = m
    chis = np.array([p.chi * 1e-3 for p in dev.pairs])  # MHz, like kappas
    kappas = np.array([r.kappa_total * 1e-3 for r in dev.resonators])
    sel = resonator_selectivity(kp, chis, cfg.drive_detuning_MHz, kappas, ub)
    rel = np.sqrt((err / kp) ** 2 + (np.diag(err) / np.diag(kp))[None, :] ** 2)
    sel.errors_db = 10.0 / math.log(10) * np.abs(rel)
    return sel, meas


@dataclass(frozen=True)
class LinearityDiagnostic:
    reduced_chi2: float
    slope: float
    nonlinear: bool


def linearity_diagnostic(drives, rates, rate_errs, threshold: float = 5.0) -> LinearityDiagnostic:
    """Through-origin linear fit of rate vs drive; large reduced chi^2 rejects linearity.

    A direct line coupling gives a rate proportional to the drive, while a
    J-mediated path bends at drives comparable to the qubit detuning.
    """
    fit = fit_linear(drives, rates, through_origin=True, sigma=rate_errs)
    return LinearityDiagnostic(fit.reduced_chi2, fit["k"], bool(fit.reduced_chi2 > threshold))
