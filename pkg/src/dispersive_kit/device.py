"""Device parameter model and its unit-suffixed JSON serialisation."""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Optional

import numpy as np

from .dispersive import chi_from_g, n_crit


class DeviceParamsError(ValueError):
    """Invalid device description; message names the offending field."""

    def __init__(self, field_path: str, message: str, line: Optional[int] = None):
        self.field_path = field_path
        self.line = line
        where = f"line {line}: " if line is not None else ""
        super().__init__(f"{where}{field_path}: {message}")


@dataclass(frozen=True)
class QubitParams:
    omega_q: float  # GHz
    alpha: float  # MHz
    E_C: float  # MHz
    E_J_over_E_C: float
    T1: Optional[float] = None  # us
    T2_star: Optional[float] = None
    T2_echo: Optional[float] = None
    p_e: Optional[float] = None  # percent, metadata only

    def validate(self, path: str = "qubit") -> None:
        if not self.omega_q > 0:
            raise DeviceParamsError(f"{path}.omega_q_GHz", "must be positive")
        if not self.alpha < 0:
            raise DeviceParamsError(f"{path}.alpha_MHz", "must be negative for a transmon")
        if not self.E_C > 0:
            raise DeviceParamsError(f"{path}.E_C_MHz", "must be positive")
        if not self.E_J_over_E_C > 0:
            raise DeviceParamsError(f"{path}.E_J_over_E_C", "must be positive")
        for name in ("T1", "T2_star", "T2_echo"):
            v = getattr(self, name)
            if v is not None and not v > 0:
                raise DeviceParamsError(f"{path}.{name}_us", "must be positive")
        if self.T1 is not None and self.T2_echo is not None and self.T2_echo > 2 * self.T1:
            raise DeviceParamsError(f"{path}.T2_echo_us", "exceeds 2*T1")


@dataclass(frozen=True)
class ResonatorParams:
    omega_r: float  # GHz
    kappa_ext: float  # kHz
    Q_int: float

    @property
    def kappa_total(self) -> float:
        """Total decay rate in kHz (external plus internal loss)."""
        return self.kappa_ext + self.omega_r * 1e6 / self.Q_int

    def validate(self, path: str = "resonator") -> None:
        if not self.omega_r > 0:
            raise DeviceParamsError(f"{path}.omega_r_GHz", "must be positive")
        if not self.kappa_ext >= 0:
            raise DeviceParamsError(f"{path}.kappa_ext_kHz", "must be non-negative")
        if not self.Q_int > 0:
            raise DeviceParamsError(f"{path}.Q_int", "must be positive")


@dataclass(frozen=True)
class PairCoupling:
    g: float  # MHz
    chi: float  # kHz
    delta: float  # GHz, omega_q - omega_r

    @property
    def n_crit(self) -> float:
        return n_crit(self.delta, self.g)

    def chi_predicted(self, E_C: float) -> float:
        """Dispersive shift implied by ``g`` (kHz)."""
        return chi_from_g(self.g, self.delta, E_C)


@dataclass
class DeviceParams:
    qubits: list[QubitParams]
    resonators: list[ResonatorParams]
    pairs: list[PairCoupling]
    J: np.ndarray = None  # kHz
    chi_cross: np.ndarray = None  # Hz
    eps_q: np.ndarray = None
    eps_r: np.ndarray = None
    lambda_q: np.ndarray = None
    lambda_r: np.ndarray = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        n = len(self.qubits)
        if self.J is None:
            self.J = np.zeros((n, n))
        if self.chi_cross is None:
            self.chi_cross = np.zeros((n, n))
        if self.eps_q is None:
            self.eps_q = np.eye(n)
        if self.eps_r is None:
            self.eps_r = np.eye(n)
        if self.lambda_q is None:
            self.lambda_q = np.ones(n)
        if self.lambda_r is None:
            self.lambda_r = np.ones(n)
        for name in ("J", "chi_cross", "eps_q", "eps_r", "lambda_q", "lambda_r"):
            setattr(self, name, np.asarray(getattr(self, name), dtype=float))

    @property
    def n_qubits(self) -> int:
        return len(self.qubits)

    def validate(self) -> None:
        n = len(self.qubits)
        if len(self.resonators) != n:
            raise DeviceParamsError("resonators", f"expected {n} entries, got {len(self.resonators)}")
        if len(self.pairs) != n:
            raise DeviceParamsError("pairs", f"expected {n} entries, got {len(self.pairs)}")
        for i, q in enumerate(self.qubits):
            q.validate(f"qubits[{i}]")
        for i, r in enumerate(self.resonators):
            r.validate(f"resonators[{i}]")
        for i, p in enumerate(self.pairs):
            if not p.g > 0:
                raise DeviceParamsError(f"pairs[{i}].g_MHz", "must be positive")
            expected = self.qubits[i].omega_q - self.resonators[i].omega_r
            if not math.isclose(p.delta, expected, rel_tol=0, abs_tol=1e-9):
                raise DeviceParamsError(f"pairs[{i}].delta_GHz", "inconsistent with omega_q - omega_r")
            if p.chi != 0 and np.sign(p.chi) != np.sign(p.chi_predicted(self.qubits[i].E_C)):
                raise DeviceParamsError(f"pairs[{i}].chi_kHz", "sign inconsistent with detuning")
        for name in ("J", "chi_cross", "eps_q", "eps_r"):
            m = getattr(self, name)
            if m.shape != (n, n):
                raise DeviceParamsError(name, f"expected shape ({n}, {n}), got {m.shape}")
        for name in ("lambda_q", "lambda_r"):
            v = getattr(self, name)
            if v.shape != (n,):
                raise DeviceParamsError(name, f"expected length {n}")
            if np.any(v <= 0):
                raise DeviceParamsError(name, "attenuation factors must be positive")
        if not np.allclose(self.J, self.J.T):
            raise DeviceParamsError("J_kHz", "must be symmetric")
        if np.any(np.diag(self.J) != 0):
            raise DeviceParamsError("J_kHz", "diagonal must be zero")
        for name in ("eps_q", "eps_r"):
            if np.any(np.diag(getattr(self, name)) <= 0):
                raise DeviceParamsError(name, "diagonal must be positive")

    def to_dict(self) -> dict[str, Any]:
        def opt(v):
            return None if v is None else float(v)

        return {
            "qubits": [
                {
                    "omega_q_GHz": q.omega_q,
                    "alpha_MHz": q.alpha,
                    "E_C_MHz": q.E_C,
                    "E_J_over_E_C": q.E_J_over_E_C,
                    "T1_us": opt(q.T1),
                    "T2_star_us": opt(q.T2_star),
                    "T2_echo_us": opt(q.T2_echo),
                    "p_e_percent": opt(q.p_e),
                }
                for q in self.qubits
            ],
            "resonators": [
                {"omega_r_GHz": r.omega_r, "kappa_ext_kHz": r.kappa_ext, "Q_int": r.Q_int}
                for r in self.resonators
            ],
            "pairs": [{"g_MHz": p.g, "chi_kHz": p.chi} for p in self.pairs],
            "J_kHz": self.J.tolist(),
            "chi_cross_Hz": self.chi_cross.tolist(),
            "eps_q": self.eps_q.tolist(),
            "eps_r": self.eps_r.tolist(),
            "lambda_q": self.lambda_q.tolist(),
            "lambda_r": self.lambda_r.tolist(),
            "meta": self.meta,
        }

    def to_json(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=2) + "\n")


def _get(d: dict, key: str, path: str, required: bool = True):
    if key not in d or d[key] is None:
        if required:
            raise DeviceParamsError(f"{path}.{key}", "missing")
        return None
    v = d[key]
    if not isinstance(v, (int, float)) or isinstance(v, bool):
        raise DeviceParamsError(f"{path}.{key}", f"expected a number, got {type(v).__name__}")
    return float(v)


def device_from_dict(doc: dict[str, Any]) -> DeviceParams:
    """Build and validate a :class:`DeviceParams` from its JSON document."""
    if not isinstance(doc, dict):
        raise DeviceParamsError("<root>", "expected a JSON object")
    for key in ("qubits", "resonators", "pairs"):
        if not isinstance(doc.get(key), list):
            raise DeviceParamsError(key, "missing or not a list")
    qubits = []
    for i, q in enumerate(doc["qubits"]):
        p = f"qubits[{i}]"
        qubits.append(
            QubitParams(
                omega_q=_get(q, "omega_q_GHz", p),
                alpha=_get(q, "alpha_MHz", p),
                E_C=_get(q, "E_C_MHz", p),
                E_J_over_E_C=_get(q, "E_J_over_E_C", p),
                T1=_get(q, "T1_us", p, False),
                T2_star=_get(q, "T2_star_us", p, False),
                T2_echo=_get(q, "T2_echo_us", p, False),
                p_e=_get(q, "p_e_percent", p, False),
            )
        )
    resonators = []
    for i, r in enumerate(doc["resonators"]):
        p = f"resonators[{i}]"
        resonators.append(
            ResonatorParams(
                omega_r=_get(r, "omega_r_GHz", p),
                kappa_ext=_get(r, "kappa_ext_kHz", p),
                Q_int=_get(r, "Q_int", p),
            )
        )
    if len(resonators) != len(qubits):
        raise DeviceParamsError("resonators", f"expected {len(qubits)} entries, got {len(resonators)}")
    pairs = []
    for i, pr in enumerate(doc["pairs"]):
        p = f"pairs[{i}]"
        if i >= min(len(qubits), len(resonators)):
            raise DeviceParamsError("pairs", "more pairs than qubit/resonator entries")
        delta = qubits[i].omega_q - resonators[i].omega_r
        pairs.append(PairCoupling(g=_get(pr, "g_MHz", p), chi=_get(pr, "chi_kHz", p), delta=delta))

    def matrix(key):
        if key not in doc or doc[key] is None:
            return None
        try:
            return np.asarray(doc[key], dtype=float)
        except (TypeError, ValueError) as exc:
            raise DeviceParamsError(key, f"not a numeric array ({exc})") from None

    dev = DeviceParams(
        qubits=qubits,
        resonators=resonators,
        pairs=pairs,
        J=matrix("J_kHz"),
        chi_cross=matrix("chi_cross_Hz"),
        eps_q=matrix("eps_q"),
        eps_r=matrix("eps_r"),
        lambda_q=matrix("lambda_q"),
        lambda_r=matrix("lambda_r"),
        meta=doc.get("meta") or {},
    )
    dev.validate()
    return dev


def load_device(path: str | Path) -> DeviceParams:
    """Load a device JSON file; syntax errors report the line number."""
    text = Path(path).read_text()
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise DeviceParamsError("<json>", exc.msg, line=exc.lineno) from None
    try:
        return device_from_dict(doc)
    except DeviceParamsError as exc:
        line = _locate(text, exc.field_path)
        raise DeviceParamsError(exc.field_path, str(exc).split(": ", 1)[-1], line=line) from None


def _locate(text: str, field_path: str) -> Optional[int]:
    """Best-effort line number of ``field_path`` (e.g. ``qubits[2].alpha_MHz``)."""
    head, _, leaf = field_path.rpartition(".")
    leaf = leaf or field_path
    key = leaf.split("[")[0]
    nth = 0
    if "[" in head:
        try:
            nth = int(head.rsplit("[", 1)[1].rstrip("]"))
        except ValueError:
            nth = 0
    pos = -1
    for _ in range(nth + 1):
        pos = text.find(f'"{key}"', pos + 1)
        if pos < 0:
            return None
    return text.count("\n", 0, pos) + 1
