"""Synthetic Ramsey, T1, Hahn-echo and Rabi traces with Gaussian noise."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..traces import TimeTrace

GEN_KINDS = ("t1", "ramsey", "echo", "rabi")


@dataclass(frozen=True)
class DecayParams:
    """Ground-truth trace parameters.

    Attributes:
        T: decay time (us).
        f_detune: oscillation frequency (MHz) for Ramsey and Rabi kinds.
        amplitude: ``A`` in the model.
        offset: ``B`` in the model.
        phase: oscillation phase (rad).
    """

    T: float
    f_detune: float = 0.0
    amplitude: float = 0.5
    offset: float = 0.5
    phase: float = 0.0


def model_signal(kind: str, p: DecayParams, t: np.ndarray, sign: float = 1.0) -> np.ndarray:
    """Noiseless model for each kind.

    * ``t1``: ``A exp(-t/T) + B``
    * ``ramsey``: ``A exp(-t/T) cos(2 pi f t + phase) + B``
    * ``echo``: ``B + sign * A exp(-t/T)``
    * ``rabi``: ``B - A exp(-t/T) cos(2 pi f t + phase)``
    """
    e = np.exp(-t / p.T) if math.isfinite(p.T) else np.ones_like(t)
    if kind == "t1":
        return p.amplitude * e + p.offset
    if kind == "ramsey":
        return p.amplitude * e * np.cos(2 * np.pi * p.f_detune * t + p.phase) + p.offset
    if kind == "echo":
        return p.offset + sign * p.amplitude * e
    if kind == "rabi":
        return p.offset - p.amplitude * e * np.cos(2 * np.pi * p.f_detune * t + p.phase)
    raise ValueError(f"invalid trace kind {kind!r}; expected one of {GEN_KINDS}")


def gen_decay_trace(kind: str, params: DecayParams, delays, noise_sigma: float = 0.0, rng_seed: int = 0):
    """Generate a trace (or the echo ``(plus, minus)`` pair).

    The echo pair repeats the sequence with the final pi/2 pulse phase flipped,
    so the two branches mirror each other about ``B``.
    """
    if kind not in GEN_KINDS:
        raise ValueError(f"invalid trace kind {kind!r}; expected one of {GEN_KINDS}")
    if not params.T > 0:
        raise ValueError("decay time T must be positive")
    if noise_sigma < 0:
        raise ValueError("noise_sigma must be non-negative")
    lo, hi = params.offset - abs(params.amplitude), params.offset + abs(params.amplitude)
    if lo < -1e-12 or hi > 1 + 1e-12:
        raise ValueError("noiseless signal must stay within [0, 1]")
    t = np.asarray(delays, dtype=float)
    rng = np.random.default_rng(rng_seed)
    meta = {"T": params.T, "f_detune": params.f_detune, "noise_sigma": noise_sigma, "rng_seed": rng_seed}
    if kind == "echo":
        out = []
        for sign, tag in ((1.0, "echo_plus"), (-1.0, "echo_minus")):
            y = model_signal("echo", params, t, sign) + noise_sigma * rng.standard_normal(t.size)
            out.append(TimeTrace(t, y, kind=tag, meta=dict(meta)))
        return tuple(out)
    y = model_signal(kind, params, t) + noise_sigma * rng.standard_normal(t.size)
    return TimeTrace(t, y, kind=kind, meta=meta)
