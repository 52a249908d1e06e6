"""Plasma-metamaterial model of a pillar-loaded enclosure.

A square lattice of inductive pillars (spacing ``a``, radius ``r``) turns the
enclosure into a wire medium. Below the plasma frequency no cavity mode
propagates and qubits couple only through an evanescent field, giving a
coupling proportional to ``K0(d / delta_p)``.

Units: lengths in mm (layer thicknesses in um), frequencies in GHz as
ordinary frequencies ``omega / 2 pi``.
"""
from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .special import bessel_k0

C_MM_PER_NS = 299.792458  # speed of light, mm/ns (= mm GHz)
DEFAULT_LAYERS = ((475.0, 11.45), (125.0, 1.0))


class GeometryError(ValueError):
    pass


@dataclass(frozen=True)
class LatticeSpec:
    a: float = 2.0
    r: float = 0.25
    layers: tuple = DEFAULT_LAYERS
    C: float = 1.31

    def __post_init__(self):
        object.__setattr__(self, "layers", tuple(tuple(map(float, l)) for l in self.layers))
        if not (self.r > 0 and self.a > 2 * self.r):
            raise GeometryError(f"need a > 2r > 0, got a={self.a}, r={self.r}")
        if not self.layers:
            raise GeometryError("need at least one layer")
        for t, eps in self.layers:
            if t <= 0:
                raise GeometryError("layer thickness must be positive")
            if eps < 1:
                raise GeometryError("relative permittivity must be at least 1")

    @classmethod
    def from_dict(cls, doc: dict) -> "LatticeSpec":
        known = {"a_mm", "r_mm", "layers", "C"}
        bad = set(doc) - known
        if bad:
            raise GeometryError(f"unknown lattice fields: {sorted(bad)}")
        layers = doc.get("layers")
        if layers is not None:
            layers = tuple((l["thickness_um"], l["eps_r"]) for l in layers)
        return cls(
            a=float(doc.get("a_mm", 2.0)),
            r=float(doc.get("r_mm", 0.25)),
            layers=layers or DEFAULT_LAYERS,
            C=float(doc.get("C", 1.31)),
        )

    def to_dict(self) -> dict:
        return {
            "a_mm": self.a,
            "r_mm": self.r,
            "layers": [{"thickness_um": t, "eps_r": e} for t, e in self.layers],
            "C": self.C,
        }


@dataclass(frozen=True)
class BandPrediction:
    eps_eff: float
    omega_p: float  # GHz
    curvature_A: float  # GHz mm^2
    delta_p: float  # mm, at omega_q -> 0
    delta_p_closed_form: float  # mm, a (ln(a/r) - C) / sqrt(2 pi)
    db_drop_per_2mm: float
    notes: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return asdict(self)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)


def effective_permittivity(layers) -> float:
    """Series-capacitor average ``sum t / sum(t / eps)``."""
    layers = list(layers)
    if not layers:
        raise GeometryError("need at least one layer")
    t = np.array([l[0] for l in layers], float)
    e = np.array([l[1] for l in layers], float)
    return float(t.sum() / (t / e).sum())


def plasma_frequency(spec: LatticeSpec, eps_eff: float | None = None) -> float:
    """``omega_a / sqrt(pi (ln(a/r) - C))`` with ``omega_a = sqrt(2) pi c / (a sqrt(eps))``.

    Returns the cutoff as an ordinary frequency in GHz.
    """
    eps = effective_permittivity(spec.layers) if eps_eff is None else eps_eff
    L = math.log(spec.a / spec.r) - spec.C
    if L <= 0:
        raise GeometryError("ln(a/r) must exceed C; pillars too thick for the wire-medium model")
    omega_a = math.sqrt(2.0) * math.pi * C_MM_PER_NS / (spec.a * math.sqrt(eps))  # rad/ns
    return omega_a / math.sqrt(math.pi * L) / (2.0 * math.pi)


def band_curvature(eps_eff: float, omega_p: float) -> float:
    """``A = c^2 / (2 eps omega_p)`` so that ``omega(k) = omega_p + A k^2``.

    Args:
        eps_eff: effective relative permittivity.
        omega_p: plasma frequency, GHz.

    Returns:
        ``A / 2 pi`` in GHz mm^2.
    """
    if eps_eff <= 0 or omega_p <= 0:
        raise ValueError("inputs must be positive")
    w = 2.0 * math.pi * omega_p  # rad/ns
    return C_MM_PER_NS**2 / (2.0 * eps_eff * w) / (2.0 * math.pi)


def skin_depth(eps_eff: float, omega_c: float, omega_q: float = 0.0) -> float:
    """Evanescent decay length ``c / sqrt(eps (omega_c^2 - omega_q^2))`` in mm.

    Raises:
        GeometryError: ``omega_q / omega_c > 0.999`` (field no longer evanescent).
    """
    if omega_q < 0 or omega_c <= 0:
        raise ValueError("frequencies must be non-negative")
    if omega_q / omega_c > 0.999:
        raise GeometryError("qubit frequency at or above cutoff: coupling is not evanescent")
    w2 = (2 * math.pi) ** 2 * (omega_c**2 - omega_q**2)
    return C_MM_PER_NS / math.sqrt(eps_eff * w2)


def skin_depth_long_wavelength(spec: LatticeSpec) -> float:
    """``a sqrt((ln(a/r) - C) / (2 pi))``: the small-``omega_q`` limit at the model cutoff."""
    return spec.a * math.sqrt((math.log(spec.a / spec.r) - spec.C) / (2 * math.pi))


def skin_depth_unrooted(spec: LatticeSpec) -> float:
    """``a (ln(a/r) - C) / sqrt(2 pi)``: the variant without the square root, kept for comparison."""
    return spec.a * (math.log(spec.a / spec.r) - spec.C) / math.sqrt(2 * math.pi)


@dataclass(frozen=True)
class CouplingProfile:
    d: np.ndarray
    relative: np.ndarray  # K0(d/delta) / K0(d_ref/delta)
    db: np.ndarray  # 20 log10(relative)
    near_field: np.ndarray  # d < delta_p: outside the asymptotic regime


def coupling_profile(d, delta_p: float, d_ref: float | None = None) -> CouplingProfile:
    """Coupling ``K0(d / delta_p)`` relative to ``d_ref`` (default: smallest ``d``)."""
    d = np.atleast_1d(np.asarray(d, dtype=float))
    if np.any(d <= 0):
        raise ValueError("separations must be positive")
    ref = float(d.min()) if d_ref is None else d_ref
    k = bessel_k0(d / delta_p)
    rel = k / bessel_k0(ref / delta_p)
    return CouplingProfile(d, rel, 20.0 * np.log10(rel), d < delta_p)


def db_drop(d: float, step: float, delta_p: float) -> float:
    """Coupling drop in dB from ``d`` to ``d + step``."""
    return float(20.0 * math.log10(bessel_k0(d / delta_p) / bessel_k0((d + step) / delta_p)))


def asymptotic_db_drop(step: float, delta_p: float) -> float:
    """Large-separation limit ``20 log10(e) step / delta_p``."""
    return 20.0 * step / delta_p / math.log(10.0)


def coupling_map(n: int, spacing: float, delta_p: float) -> np.ndarray:
    """Pairwise coupling in dB relative to nearest neighbours for an ``n x n`` qubit grid.

    Returns an ``(n*n, n*n)`` matrix; the diagonal is 0 dB by convention.
    """
    if n < 1:
        raise ValueError("grid must be at least 1 x 1")
    ij = np.array([(i, j) for i in range(n) for j in range(n)], float) * spacing
    d = np.sqrt(((ij[:, None, :] - ij[None, :, :]) ** 2).sum(-1))
    out = np.zeros_like(d)
    off = d > 0
    ref = bessel_k0(spacing / delta_p)
    out[off] = 20.0 * np.log10(bessel_k0(d[off] / delta_p) / ref)
    return out


def dispersion(spec: LatticeSpec, k, eps_eff: float | None = None) -> tuple[np.ndarray, np.ndarray]:
    """Band frequencies (GHz) at wavenumbers ``k`` (rad/mm).

    Returns ``(with_pillar, without_pillar)``: the quadratic plasma branch
    ``omega_p + A k^2`` and the light line ``c k / sqrt(eps)``.
    """
    k = np.asarray(k, dtype=float)
    if np.any(k < 0):
        raise ValueError("wavenumbers must be non-negative")
    eps = effective_permittivity(spec.layers) if eps_eff is None else eps_eff
    wp = plasma_frequency(spec, eps)
    A = band_curvature(eps, wp)
    with_p = wp + A * k**2
    without = C_MM_PER_NS * k / math.sqrt(eps) / (2 * math.pi)
    return with_p, without


def brillouin_path(a: float, n_per_leg: int = 50) -> tuple[np.ndarray, list]:
    """Wavenumber magnitudes along Gamma-X-M-Gamma of a square lattice."""
    g, x, m = np.array([0.0, 0.0]), np.array([math.pi / a, 0.0]), np.array([math.pi / a, math.pi / a])
    pts, ticks = [], []
    for start, stop, name in ((g, x, "G"), (x, m, "X"), (m, g, "M")):
        ticks.append((len(pts), name))
        for s in np.linspace(0, 1, n_per_leg, endpoint=False):
            pts.append(start + s * (stop - start))
    ticks.append((len(pts), "G"))
    pts.append(g)
    return np.linalg.norm(np.array(pts), axis=1), ticks


def predict_band(spec: LatticeSpec = LatticeSpec(), omega_q: float = 0.0) -> BandPrediction:
    """All model quantities from the lattice geometry alone."""
    eps = effective_permittivity(spec.layers)
    wp = plasma_frequency(spec, eps)
    A = band_curvature(eps, wp)
    dp = skin_depth(eps, wp, omega_q)
    k_x = math.pi / spec.a
    k_m = math.sqrt(2) * math.pi / spec.a
    light = C_MM_PER_NS / math.sqrt(eps) / (2 * math.pi)
    return BandPrediction(
        eps_eff=eps,
        omega_p=wp,
        curvature_A=A,
        delta_p=dp,
        delta_p_closed_form=skin_depth_unrooted(spec),
        db_drop_per_2mm=asymptotic_db_drop(2.0, dp),
        notes={
            "omega_q_GHz": omega_q,
            "light_line_at_X_GHz": light * k_x,
            "light_line_at_M_GHz": light * k_m,
            "delta_p_at_long_wavelength_mm": skin_depth_long_wavelength(spec),
        },
    )
