"""Dominant-frequency estimation for Ramsey-type traces.

Two estimators share one contract: a uniformly sampled trace in, a frequency
in cycles per time unit of the trace out (MHz for delays in microseconds).

* :func:`naive_peak_frequency` picks the largest DFT bin, resolution ``df/2``.
* :func:`gaussian_interp_frequency` windows with a Gaussian and interpolates
  the peak position from the log-magnitudes of the three central bins. For a
  Gaussian-shaped spectral line the log-magnitude is an exact parabola, so
  the only residual error comes from truncating the window at the record
  edges.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np

from .traces import TimeTrace

MIN_POINTS = 8
MIN_PEAK_BIN = 2
DEFAULT_SIGMA_RATIO = 0.2


class DegeneratePeakError(ValueError):
    """No usable spectral peak (flat spectrum or zero side bins)."""


@dataclass(frozen=True)
class SpectrumPeak:
    index: int
    delta_p: float
    f_est: float
    df: float
    s_minus: float
    s_peak: float
    s_plus: float

    def to_dict(self) -> dict:
        return asdict(self)


def _prepare(trace: TimeTrace | tuple) -> tuple[np.ndarray, float]:
    """Mean-removed samples and sample spacing.

    A ``(delays, signal)`` tuple may carry a complex (I/Q) signal; its
    spectrum then has a single line and negative frequencies are allowed.
    """
    if not isinstance(trace, TimeTrace):
        t, y = trace
        y = np.asarray(y)
        if np.iscomplexobj(y):
            t = np.asarray(t, float)
            if t.ndim != 1 or t.shape != y.shape:
                raise ValueError("delays and signal must be 1-D arrays of equal length")
            if t.size < MIN_POINTS:
                raise ValueError(f"need at least {MIN_POINTS} samples, got {t.size}")
            dt = TimeTrace(t, np.zeros(t.size)).sample_spacing()
            return y - y.mean(), dt
        trace = TimeTrace(np.asarray(t, float), y)
    if len(trace) < MIN_POINTS:
        raise ValueError(f"need at least {MIN_POINTS} samples, got {len(trace)}")
    dt = trace.sample_spacing()
    return trace.signal - trace.signal.mean(), dt


def _spectrum(x: np.ndarray) -> np.ndarray:
    """Magnitudes of the searchable bins: all bins for complex input, else up to Nyquist."""
    mag = np.abs(np.fft.fft(x))
    return mag if np.iscomplexobj(x) else mag[: x.size // 2 + 1]


def _signed_bin(p: float, n: int, complex_input: bool) -> float:
    return p - n if complex_input and p > n / 2 else p


def _peak_bin(mag: np.ndarray, first: int) -> int:
    search = mag[first:]
    if search.size == 0:
        raise DegeneratePeakError("trace too short for a non-DC peak")
    p = int(np.argmax(search)) + first
    floor = np.max(mag) * 1e-9 + 1e-300
    if mag[p] <= floor or mag[p] < 1e-12 * (np.sum(mag) + 1e-300) or not np.isfinite(mag[p]):
        raise DegeneratePeakError("no spectral peak above the noise floor")
    return p


def naive_peak_frequency(trace: TimeTrace) -> float:
    """Frequency of the largest non-DC DFT bin, ``p / T``."""
    x, dt = _prepare(trace)
    n = x.size
    mag = _spectrum(x)
    if np.max(mag) <= 1e-12 * max(1.0, np.sqrt(n)):
        raise DegeneratePeakError("trace has no oscillating component")
    p = _peak_bin(mag, 1)
    return _signed_bin(p, n, np.iscomplexobj(x)) / (n * dt)


def gaussian_window(n: int, sigma_ratio: float = DEFAULT_SIGMA_RATIO) -> np.ndarray:
    """Gaussian window centred on the record with std ``sigma_ratio * n`` samples."""
    k = np.arange(n, dtype=float)
    centre = (n - 1) / 2.0
    return np.exp(-((k - centre) ** 2) / (2.0 * (sigma_ratio * n) ** 2))


def gaussian_interp_frequency(trace: TimeTrace, sigma_ratio: float = DEFAULT_SIGMA_RATIO) -> SpectrumPeak:
    """Gaussian-windowed DFT peak with log-parabolic interpolation.

    The offset of the true peak from bin ``p`` is
    ``ln(S[p+1]/S[p-1]) / (2 ln(S[p]**2 / (S[p-1] S[p+1])))`` and the estimate
    is ``(p + delta_p) / T``. Bins 0 and 1 are excluded from the peak search.
    """
    if not sigma_ratio > 0:
        raise ValueError("sigma_ratio must be positive")
    x, dt = _prepare(trace)
    n = x.size
    mag = _spectrum(x * gaussian_window(n, sigma_ratio))
    if np.max(mag) <= 1e-12 * max(1.0, np.sqrt(n)):
        raise DegeneratePeakError("trace has no oscillating component")
    p = _peak_bin(mag[:-1], MIN_PEAK_BIN)
    s_m, s_0, s_p = mag[p - 1], mag[p], mag[p + 1]
    if s_m <= 0 or s_p <= 0:
        raise DegeneratePeakError("zero side-bin magnitude")
    denom = 2.0 * math.log(s_0**2 / (s_m * s_p))
    if not denom > 1e-15:
        raise DegeneratePeakError("log-parabola denominator vanishes")
    delta_p = math.log(s_p / s_m) / denom
    df = 1.0 / (n * dt)
    return SpectrumPeak(
        index=p,
        delta_p=delta_p,
        f_est=df * (_signed_bin(p, n, np.iscomplexobj(x)) + delta_p),
        df=df,
        s_minus=float(s_m),
        s_peak=float(s_0),
        s_plus=float(s_p),
    )


def zero_padded_peak(trace: TimeTrace, sigma_ratio: float = DEFAULT_SIGMA_RATIO, pad: int = 64) -> float:
    """Brute-force peak of the windowed spectrum on a ``pad``-times finer grid.

    Used as an independent check on the interpolated estimate; the returned
    value is refined with a direct DTFT evaluation around the grid maximum.
    """
    x, dt = _prepare(trace)
    n = x.size
    xw = x * gaussian_window(n, sigma_ratio)
    m = n * pad
    mag = np.abs(np.fft.fft(xw, m)[: m // 2])
    lo = MIN_PEAK_BIN * pad
    k = int(np.argmax(mag[lo:])) + lo
    t = np.arange(n)
    fine = np.linspace(k - 1, k + 1, 257) / m
    dtft = np.abs(np.exp(-2j * np.pi * np.outer(fine, t)) @ xw)
    return float(fine[np.argmax(dtft)] / dt)
