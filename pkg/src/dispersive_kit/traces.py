"""Uniformly sampled experiment traces and their CSV form."""
from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

KINDS = ("ramsey", "t1", "echo_plus", "echo_minus", "rabi")


@dataclass(frozen=True)
class TimeTrace:
    """Signal versus delay.

    Attributes:
        delays: strictly increasing delays in microseconds.
        signal: normalised population (dimensionless).
        kind: experiment tag, one of ``KINDS``.
        meta: free-form metadata carried through CSV headers.
    """

    delays: np.ndarray
    signal: np.ndarray
    kind: str = "ramsey"
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        d = np.asarray(self.delays, dtype=float)
        s = np.asarray(self.signal, dtype=float)
        object.__setattr__(self, "delays", d)
        object.__setattr__(self, "signal", s)
        if d.ndim != 1 or d.shape != s.shape:
            raise ValueError("delays and signal must be 1-D arrays of equal length")
        if d.size > 1 and np.any(np.diff(d) <= 0):
            raise ValueError("delays must be strictly increasing")
        if self.kind not in KINDS:
            raise ValueError(f"unknown trace kind {self.kind!r}")

    def __len__(self) -> int:
        return self.delays.size

    @property
    def duration(self) -> float:
        """Record length ``N * dt`` used as the transform period (us)."""
        return self.delays.size * self.sample_spacing()

    def sample_spacing(self, rtol: float = 1e-6) -> float:
        """Uniform sampling step; raises ``ValueError`` if sampling is not uniform."""
        if self.delays.size < 2:
            raise ValueError("need at least two samples")
        steps = np.diff(self.delays)
        dt = steps.mean()
        if np.max(np.abs(steps - dt)) > rtol * abs(dt) + 1e-12:
            raise ValueError("trace is not uniformly sampled")
        return float(dt)

    def to_csv(self, path: str | Path | None = None) -> str:
        buf = io.StringIO()
        buf.write(f"# kind={self.kind}\n")
        for k in sorted(self.meta):
            buf.write(f"# {k}={self.meta[k]}\n")
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["delay_us", "signal"])
        for d, s in zip(self.delays, self.signal):
            w.writerow([repr(float(d)), repr(float(s))])
        text = buf.getvalue()
        if path is not None:
            Path(path).write_text(text)
        return text


def read_trace_csv(path: str | Path) -> TimeTrace:
    """Read a ``delay_us,signal`` CSV written by :meth:`TimeTrace.to_csv`."""
    kind = "ramsey"
    meta: dict[str, str] = {}
    delays, signal = [], []
    with open(path, newline="") as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            if line.startswith("#"):
                key, _, value = line[1:].strip().partition("=")
                if key == "kind":
                    kind = value
                else:
                    meta[key] = value
                continue
            if line.startswith("delay_us"):
                continue
            d, s = line.split(",")
            delays.append(float(d))
            signal.append(float(s))
    return TimeTrace(np.array(delays), np.array(signal), kind=kind, meta=meta)
