"""Least-squares fitters shared by the analysis pipelines.

Nonlinear fits use ``scipy.optimize.least_squares`` (trust-region reflective
with analytic Jacobians) behind the :class:`FitResult` contract. Every
nonlinear model is separable into linear amplitudes and one or two decay
parameters, so initial values come from a variable-projection grid over the
decay parameter with the amplitudes solved exactly at each grid point.
"""
from __future__ import annotations

import json
import math
import warnings
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np
from scipy.optimize import least_squares

from .traces import TimeTrace

MAX_ITER = 200
REL_TOL = 1e-10


class FitError(RuntimeError):
    """Fit could not be performed or did not converge."""


@dataclass
class FitResult:
    parameters: dict[str, float]
    standard_errors: Optional[dict[str, float]]
    residual_norm: float
    converged: bool
    iterations: int
    reduced_chi2: Optional[float] = None
    flags: list[str] = field(default_factory=list)
    derived: dict[str, float] = field(default_factory=dict)

    def __getitem__(self, name: str) -> float:
        if name in self.parameters:
            return self.parameters[name]
        return self.derived[name]

    def err(self, name: str) -> float:
        if self.standard_errors is None:
            return math.nan
        return self.standard_errors.get(name, math.nan)

    def to_dict(self) -> dict:
        return {
            "parameters": dict(self.parameters),
            "standard_errors": None if self.standard_errors is None else dict(self.standard_errors),
            "residual_norm": self.residual_norm,
            "converged": self.converged,
            "iterations": self.iterations,
            "reduced_chi2": self.reduced_chi2,
            "flags": list(self.flags),
            "derived": dict(self.derived),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)


def _as_xy(trace) -> tuple[np.ndarray, np.ndarray]:
    if isinstance(trace, TimeTrace):
        return trace.delays, trace.signal
    t, y = trace
    return np.asarray(t, float), np.asarray(y, float)


def _covariance(jac: np.ndarray, scale: float) -> np.ndarray:
    # pinv keeps boundary/degenerate solutions finite; singular directions get large errors
    jtj = jac.T @ jac
    return np.linalg.pinv(jtj, rcond=1e-15) * scale


def _run(
    names: Sequence[str],
    residual: Callable[[np.ndarray], np.ndarray],
    jac: Callable[[np.ndarray], np.ndarray],
    p0: np.ndarray,
    bounds=(-np.inf, np.inf),
    absolute_sigma: bool = False,
) -> FitResult:
    sol = least_squares(
        residual,
        p0,
        jac=jac,
        bounds=bounds,
        method="trf",
        xtol=REL_TOL,
        ftol=REL_TOL,
        gtol=REL_TOL,
        max_nfev=MAX_ITER,
        x_scale="jac",
    )
    r = sol.fun
    n, k = r.size, len(names)
    dof = max(n - k, 1)
    chi2 = float(r @ r)
    red = chi2 / dof
    converged = bool(sol.status > 0)
    params = {nm: float(v) for nm, v in zip(names, sol.x)}
    errs = None
    if converged:
        cov = _covariance(sol.jac, 1.0 if absolute_sigma else red)
        errs = {nm: float(math.sqrt(max(cov[i, i], 0.0))) for i, nm in enumerate(names)}
    return FitResult(
        parameters=params,
        standard_errors=errs,
        residual_norm=math.sqrt(chi2),
        converged=converged,
        iterations=int(sol.nfev),
        reduced_chi2=red,
    )


def _vp_grid(basis: Callable[[float], np.ndarray], y: np.ndarray, w: np.ndarray, grid: np.ndarray):
    """Best grid value of a nonlinear parameter with linear coefficients solved exactly."""
    best = (math.inf, None, None)
    for g in grid:
        B = basis(g)
        coef, *_ = np.linalg.lstsq(B * w[:, None], y * w, rcond=None)
        res = (B @ coef - y) * w
        c = float(res @ res)
        if c < best[0]:
            best = (c, g, coef)
    return best[1], best[2]


def _check_identifiable(y: np.ndarray) -> None:
    if np.ptp(y) <= 1e-12 * (1.0 + np.max(np.abs(y))):
        raise FitError("constant data: decay time is unidentifiable")


# exponential decays --------------------------------------------------------


def fit_exp_decay(trace, sigma: Optional[np.ndarray] = None) -> FitResult:
    """Fit ``A exp(-t/T) + B`` to a trace.

    Args:
        trace: :class:`TimeTrace` or ``(delays, signal)``.
        sigma: optional per-point standard deviations (absolute weights).

    Raises:
        FitError: too few points, constant data or non-convergence.
    """
    t, y = _as_xy(trace)
    if t.size < 5:
        raise FitError("need at least 5 points")
    _check_identifiable(y)
    w = np.ones_like(y) if sigma is None else 1.0 / np.asarray(sigma, float)
    span = t[-1] - t[0]
    dt = np.min(np.diff(t))
    grid = np.geomspace(max(dt / 4, span * 1e-3), span * 50, 160)
    T0, coef = _vp_grid(lambda T: np.column_stack([np.exp(-t / T), np.ones_like(t)]), y, w, grid)

    def resid(p):
        A, B, T = p
        return (A * np.exp(-t / T) + B - y) * w

    def jac(p):
        A, B, T = p
        e = np.exp(-t / T)
        return np.column_stack([e, np.ones_like(t), A * e * t / T**2]) * w[:, None]

    res = _run(("A", "B", "T"), resid, jac, np.array([coef[0], coef[1], T0]), absolute_sigma=sigma is not None)
    if not res.converged:
        raise FitError("exponential fit did not converge within the iteration cap")
    if span < 0.5 * res.parameters["T"]:
        res.flags.append("short_span")
    return res


def fit_echo_pair(trace_plus, trace_minus, sigma: Optional[float] = None) -> FitResult:
    """Joint fit of ``B + A exp(-t/T2e)`` and ``B - A exp(-t/T2e)``.

    Both traces share ``A``, ``B`` and ``T2e``; they must use the same delay grid.
    """
    tp, yp = _as_xy(trace_plus)
    tm, ym = _as_xy(trace_minus)
    if tp.shape != tm.shape or not np.allclose(tp, tm, rtol=1e-12, atol=1e-12):
        raise ValueError("echo traces must share one delay grid")
    if tp.size < 5:
        raise FitError("need at least 5 points per trace")
    t = tp
    _check_identifiable(yp - ym)
    y = np.concatenate([yp, ym])
    sgn = np.concatenate([np.ones_like(t), -np.ones_like(t)])
    tt = np.concatenate([t, t])
    w = np.ones_like(y) if sigma is None else np.full_like(y, 1.0 / sigma)
    span = t[-1] - t[0]
    grid = np.geomspace(max(np.min(np.diff(t)) / 4, span * 1e-3), span * 50, 160)
    T0, coef = _vp_grid(lambda T: np.column_stack([sgn * np.exp(-tt / T), np.ones_like(tt)]), y, w, grid)

    def resid(p):
        A, B, T = p
        return (sgn * A * np.exp(-tt / T) + B - y) * w

    def jac(p):
        A, B, T = p
        e = sgn * np.exp(-tt / T)
        return np.column_stack([e, np.ones_like(tt), A * e * tt / T**2]) * w[:, None]

    res = _run(("A", "B", "T2e"), resid, jac, np.array([coef[0], coef[1], T0]), absolute_sigma=sigma is not None)
    if not res.converged:
        raise FitError("echo-pair fit did not converge")
    return res


def fit_ramsey(trace, f_guess: Optional[float] = None) -> FitResult:
    """Fit ``A exp(-t/T) cos(2 pi f t + phi) + B``; ``f`` in cycles per delay unit.

    The frequency is seeded with the Gaussian-interpolated spectral peak.
    """
    from .freq import gaussian_interp_frequency

    t, y = _as_xy(trace)
    if t.size < 8:
        raise FitError("need at least 8 points")
    _check_identifiable(y)
    if f_guess is None:
        f_guess = gaussian_interp_frequency((t, y)).f_est
    span = t[-1] - t[0]
    grid = np.geomspace(span * 0.02, span * 50, 80)

    def basis(T):
        e = np.exp(-t / T)
        return np.column_stack([e * np.cos(2 * np.pi * f_guess * t), e * np.sin(2 * np.pi * f_guess * t), np.ones_like(t)])

    T0, coef = _vp_grid(basis, y, np.ones_like(y), grid)
    A0 = math.hypot(coef[0], coef[1])
    phi0 = math.atan2(-coef[1], coef[0])

    def resid(p):
        A, B, T, f, phi = p
        return A * np.exp(-t / T) * np.cos(2 * np.pi * f * t + phi) + B - y

    def jac(p):
        A, B, T, f, phi = p
        e = np.exp(-t / T)
        arg = 2 * np.pi * f * t + phi
        c, s = np.cos(arg), np.sin(arg)
        return np.column_stack([e * c, np.ones_like(t), A * e * c * t / T**2, -A * e * s * 2 * np.pi * t, -A * e * s])

    res = _run(("A", "B", "T", "f", "phi"), resid, jac, np.array([A0, coef[2], T0, f_guess, phi0]))
    if not res.converged:
        raise FitError("Ramsey fit did not converge")
    if res.parameters["A"] < 0:
        res.parameters["A"] = -res.parameters["A"]
        res.parameters["phi"] += math.pi
    res.parameters["phi"] = math.remainder(res.parameters["phi"], 2 * math.pi)
    return res


# linear ------------------------------------------------------------------


def fit_linear(x, y, through_origin: bool = False, sigma=None) -> FitResult:
    """Ordinary (or weighted) least-squares line.

    Returns parameter ``k`` and, unless ``through_origin``, ``intercept``.
    Standard errors use the residual scatter when ``sigma`` is not given.
    """
    x = np.asarray(x, float)
    y = np.asarray(y, float)
    if x.shape != y.shape or x.ndim != 1:
        raise ValueError("x and y must be 1-D arrays of equal length")
    need = 2 if through_origin else 3
    if x.size < need:
        raise FitError(f"need at least {need} points")
    if through_origin:
        if np.all(x == 0):
            raise FitError("rank-deficient design: all x are zero")
        X = x[:, None]
        names = ("k",)
    else:
        if np.ptp(x) == 0:
            raise FitError("rank-deficient design: all x are equal")
        X = np.column_stack([x, np.ones_like(x)])
        names = ("k", "intercept")
    w = np.ones_like(y) if sigma is None else 1.0 / np.asarray(sigma, float)
    Xw, yw = X * w[:, None], y * w
    coef, *_ = np.linalg.lstsq(Xw, yw, rcond=None)
    r = Xw @ coef - yw
    chi2 = float(r @ r)
    dof = max(x.size - len(names), 1)
    red = chi2 / dof
    cov = np.linalg.inv(Xw.T @ Xw) * (1.0 if sigma is not None else red)
    return FitResult(
        parameters={n: float(c) for n, c in zip(names, coef)},
        standard_errors={n: float(math.sqrt(cov[i, i])) for i, n in enumerate(names)},
        residual_norm=math.sqrt(chi2),
        converged=True,
        iterations=1,
        reduced_chi2=red,
    )


# randomized benchmarking ---------------------------------------------------


def _weights(errs, n) -> tuple[np.ndarray, bool]:
    if errs is None:
        return np.ones(n), False
    e = np.asarray(errs, float)
    pos = e[e > 0]
    if pos.size == 0:
        return np.ones(n), False
    # a zero-scatter point would get infinite weight; floor it at the smallest observed error
    e = np.where(e > 0, e, pos.min())
    return 1.0 / e, True


def _decay_grid(m: np.ndarray) -> np.ndarray:
    mmax = max(float(m.max()), 1.0)
    # decay lengths from 1/50 of the longest sequence up to 1e4 times it
    rates = np.geomspace(1e-4 / mmax, 50.0 / mmax, 200)
    return np.exp(-rates)


def fit_rb_curve(lengths, survival_means, survival_errs=None) -> FitResult:
    """Weighted fit of ``A alpha**m + B`` with ``alpha`` in ``(0, 1]``.

    ``survival_errs`` are per-length standard errors (sequence-to-sequence
    scatter); when omitted the fit is unweighted. Adds ``EPC=(1-alpha)/2`` to
    ``derived`` and the flag ``alpha_at_boundary`` when ``alpha`` reaches 1.
    """
    m = np.asarray(lengths, float)
    y = np.asarray(survival_means, float)
    if m.shape != y.shape:
        raise ValueError("lengths and survival means differ in length")
    if np.unique(m).size < 4:
        raise FitError("need at least 4 distinct sequence lengths")
    if np.any(y > 1 + 1e-12):
        raise ValueError("survival probabilities must not exceed 1")
    w, weighted = _weights(survival_errs, m.size)
    grid = _decay_grid(m)
    a0, coef = _vp_grid(lambda a: np.column_stack([a**m, np.ones_like(m)]), y, w, np.append(grid, 1.0))
    if a0 == 1.0:
        a0 = grid[0]

    def resid(p):
        A, a, B = p
        return (A * a**m + B - y) * w

    def jac(p):
        A, a, B = p
        am = a**m
        dm = np.where(m > 0, m * a ** np.maximum(m - 1, 0), 0.0)
        return np.column_stack([am, A * dm, np.ones_like(m)]) * w[:, None]

    # Survival amplitude and offset are probabilities; bounding them keeps
    # nearly linear (under-decayed) curves from drifting along the A-B valley.
    A0 = float(np.clip(coef[0] if coef[0] != 0 else 0.5, 1e-6, 1 - 1e-6))
    B0 = float(np.clip(coef[1], 1e-6, 1 - 1e-6))
    res = _run(
        ("A", "alpha", "B"),
        resid,
        jac,
        np.array([A0, min(a0, 1.0 - 1e-12), B0]),
        bounds=([0.0, 0.0, 0.0], [1.0, 1.0, 1.0]),
        absolute_sigma=weighted,
    )
    for name in ("A", "B"):
        if not 1e-9 < res.parameters[name] < 1 - 1e-9:
            res.flags.append(f"{name}_at_boundary")
    alpha = res.parameters["alpha"]
    if alpha >= 1.0 - 1e-12:
        res.flags.append("alpha_at_boundary")
    if alpha <= 1e-12:
        res.flags.append("alpha_at_zero")
    res.derived["EPC"] = (1.0 - alpha) / 2.0
    if not res.converged:
        raise FitError("RB fit did not converge")
    return res


def fit_leakage_curve(lengths, leak_means, leak_errs=None) -> FitResult:
    """Fit ``L_inf (1 - lam**m)`` to leaked population vs sequence length."""
    m = np.asarray(lengths, float)
    x = np.asarray(leak_means, float)
    if np.any(x < -1e-12) or np.any(x > 1 + 1e-12):
        raise ValueError("leakage populations must lie in [0, 1]")
    if np.unique(m).size < 3:
        raise FitError("need at least 3 distinct sequence lengths")
    w, weighted = _weights(leak_errs, m.size)
    if np.all(np.abs(x) <= 1e-15):
        return FitResult(
            parameters={"L_inf": 0.0, "lam": 1.0},
            standard_errors={"L_inf": 0.0, "lam": 0.0},
            residual_norm=0.0,
            converged=True,
            iterations=0,
            reduced_chi2=0.0,
            flags=["no_leakage"],
            derived={"L1": 0.0, "L2": 0.0},
        )
    grid = _decay_grid(m)
    lam0, coef = _vp_grid(lambda lam: (1.0 - lam**m)[:, None], x, w, grid)

    def resid(p):
        L, lam = p
        return (L * (1.0 - lam**m) - x) * w

    def jac(p):
        L, lam = p
        dm = np.where(m > 0, m * lam ** np.maximum(m - 1, 0), 0.0)
        return np.column_stack([1.0 - lam**m, -L * dm]) * w[:, None]

    res = _run(
        ("L_inf", "lam"),
        resid,
        jac,
        np.array([max(coef[0], 1e-12), lam0]),
        bounds=([0.0, 0.0], [1.0, 1.0]),
        absolute_sigma=weighted,
    )
    if not res.converged:
        raise FitError("leakage curve fit did not converge")
    L, lam = res.parameters["L_inf"], res.parameters["lam"]
    res.derived["L1"] = L * (1.0 - lam)
    res.derived["L2"] = (1.0 - L) * (1.0 - lam)
    if res.standard_errors is not None:
        cov = _covariance(jac(np.array([L, lam])), 1.0 if weighted else res.reduced_chi2)
        g = np.array([1.0 - lam, -L])
        res.derived["L1_err"] = float(math.sqrt(max(g @ cov @ g, 0.0)))
    return res


def fit_leakage_rb(
    lengths,
    leak_pop_means,
    survival_means,
    mode: str = "four_param",
    leak_errs=None,
    survival_errs=None,
    gates_per_clifford: float = 1.0,
) -> FitResult:
    """Leakage randomized benchmarking.

    The leaked population follows ``L_inf (1 - lam**m)``; per-Clifford leakage
    and seepage rates are ``L1 = L_inf (1 - lam)`` and ``L2 = (1 - L_inf)(1 - lam)``.
    Ground-state survival is fitted as

    * ``four_param``: ``A + B lam**m + C alpha**m`` with ``lam`` fixed from the
      leakage fit;
    * ``three_param``: ``A + C alpha**m``, valid when EPG >> LPG.

    In both modes the in-subspace depolarizing error removes the leakage part
    of ``alpha``: ``EPC = (1 - alpha / (1 - L1)) / 2``. LPG and EPG are per
    physical gate, i.e. per-Clifford values divided by ``gates_per_clifford``.
    """
    if mode not in ("three_param", "four_param"):
        raise ValueError("mode must be 'three_param' or 'four_param'")
    if gates_per_clifford <= 0:
        raise ValueError("gates_per_clifford must be positive")
    m = np.asarray(lengths, float)
    y = np.asarray(survival_means, float)
    leak = fit_leakage_curve(m, leak_pop_means, leak_errs)
    lam = leak.parameters["lam"]
    L1 = leak.derived["L1"]
    w, weighted = _weights(survival_errs, m.size)
    grid = _decay_grid(m)
    if mode == "four_param" and "no_leakage" not in leak.flags:
        names = ("A", "B", "C", "alpha")

        def basis(a):
            return np.column_stack([np.ones_like(m), lam**m, a**m])

        a0, coef = _vp_grid(basis, y, w, grid)

        def resid(p):
            A, B, C, a = p
            return (A + B * lam**m + C * a**m - y) * w

        def jac(p):
            A, B, C, a = p
            dm = np.where(m > 0, m * a ** np.maximum(m - 1, 0), 0.0)
            return np.column_stack([np.ones_like(m), lam**m, a**m, C * dm]) * w[:, None]

        lo, hi = [0.0, -1.0, 0.0, 0.0], [1.0, 1.0, 1.0, 1.0]
    else:
        names = ("A", "C", "alpha")
        a0, coef = _vp_grid(lambda a: np.column_stack([np.ones_like(m), a**m]), y, w, grid)

        def resid(p):
            A, C, a = p
            return (A + C * a**m - y) * w

        def jac(p):
            A, C, a = p
            dm = np.where(m > 0, m * a ** np.maximum(m - 1, 0), 0.0)
            return np.column_stack([np.ones_like(m), a**m, C * dm]) * w[:, None]

        lo, hi = [0.0, 0.0, 0.0], [1.0, 1.0, 1.0]
    # amplitudes are populations; the box keeps the near-degenerate A/B/C
    # directions of short or weakly leaking curves from running away
    pad = 1e-6
    p0 = np.clip(np.append(coef, min(a0, 1 - 1e-12)), np.array(lo) + pad, np.array(hi) - pad)
    res = _run(names, resid, jac, p0, bounds=(lo, hi), absolute_sigma=weighted)
    for name, l, h in zip(names[:-1], lo, hi):
        if not l + 1e-9 < res.parameters[name] < h - 1e-9:
            res.flags.append(f"{name}_at_boundary")
    if not res.converged:
        raise FitError("leakage-RB survival fit did not converge")
    alpha = res.parameters["alpha"]
    epc = (1.0 - alpha / (1.0 - L1)) / 2.0
    alpha_err = res.err("alpha")
    l1_err = leak.derived.get("L1_err", 0.0)
    epc_err = 0.5 * math.hypot(alpha_err / (1.0 - L1), alpha * l1_err / (1.0 - L1) ** 2)
    res.parameters["lam"] = lam
    res.parameters["L_inf"] = leak.parameters["L_inf"]
    if res.standard_errors is not None:
        res.standard_errors["lam"] = leak.err("lam")
        res.standard_errors["L_inf"] = leak.err("L_inf")
    res.derived.update(
        {
            "L1": L1,
            "L2": leak.derived["L2"],
            "LPG": L1 / gates_per_clifford,
            "LPG_err": l1_err / gates_per_clifford,
            "EPC": epc,
            "EPG": epc / gates_per_clifford,
            "EPG_err": epc_err / gates_per_clifford,
        }
    )
    res.flags.extend(leak.flags)
    if mode == "three_param" and not epc > L1:
        # the three-parameter model drops the leakage decay term
        msg = "three-parameter leakage model used with EPG not much larger than LPG"
        warnings.warn(msg, RuntimeWarning, stacklevel=2)
        res.flags.append("mode_inconsistent")
    return res
