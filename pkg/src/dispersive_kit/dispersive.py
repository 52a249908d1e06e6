"""Closed-form dispersive-regime relations for transmon/resonator pairs.

Frequencies are ordinary frequencies (GHz/MHz/kHz/Hz as named in each
signature). Functions taking "angular" quantities accept any consistent
angular unit because the expressions are homogeneous.
"""
from __future__ import annotations

import math

import numpy as np

SINGULAR_DETUNING_KHZ = 1.0


class SingularDetuningError(ValueError):
    """Detuning too close to a pole of the dispersive expression."""


def chi_from_g(g: float, delta: float, E_C: float) -> float:
    """Dispersive shift of a transmon coupled to a resonator.

    Args:
        g: transverse coupling (MHz).
        delta: qubit-resonator detuning omega_q - omega_r (GHz).
        E_C: charging energy as a frequency (MHz).

    Returns:
        chi in kHz, ``-g**2 * E_C / (delta * (delta - E_C))``.
    """
    if g < 0:
        raise ValueError("g must be non-negative")
    delta_mhz = delta * 1e3
    tol_mhz = SINGULAR_DETUNING_KHZ * 1e-3
    if abs(delta_mhz) < tol_mhz or abs(delta_mhz - E_C) < tol_mhz:
        raise SingularDetuningError(
            f"detuning {delta} GHz within {SINGULAR_DETUNING_KHZ} kHz of a pole (E_C={E_C} MHz)"
        )
    chi_mhz = -(g**2) * E_C / (delta_mhz * (delta_mhz - E_C))
    return chi_mhz * 1e3


def n_crit(delta: float, g: float) -> float:
    """Critical photon number ``(delta / 2g)**2`` with delta in GHz and g in MHz."""
    if g == 0:
        raise ZeroDivisionError("critical photon number undefined for g = 0")
    if g < 0:
        raise ValueError("g must be positive")
    return (delta * 1e3 / (2.0 * g)) ** 2


def ac_stark_shift(chi: float, n_bar: float) -> float:
    """Qubit frequency shift ``2 chi n_bar`` (same unit as ``chi``)."""
    if n_bar < 0:
        raise ValueError("n_bar must be non-negative")
    return 2.0 * chi * n_bar


def steady_state_photons(drive_amp: float, kappa: float, detuning_from_dressed: float) -> float:
    """Mean photon number of a continuously driven, damped resonator.

    ``(eps V)**2 / ((kappa/2)**2 + (omega_d - omega_r_dressed)**2)`` with all
    arguments in the same angular unit.
    """
    if kappa <= 0:
        raise ValueError("kappa must be positive")
    return drive_amp**2 / ((kappa / 2.0) ** 2 + detuning_from_dressed**2)


def detuned_photons(drive_amp: float, detuning: float) -> float:
    """Large-detuning limit ``(eps V / Delta_d)**2`` of :func:`steady_state_photons`."""
    if detuning == 0:
        raise ZeroDivisionError("detuned form requires nonzero detuning")
    return (drive_amp / detuning) ** 2


def measurement_dephasing_rate(
    chi: float, kappa: float, n_g: float, n_e: float, detuning: float
) -> float:
    """Measurement-induced dephasing rate under a drive at ``omega_r + detuning``.

    ``kappa chi^2 (n_e + n_g) / ((kappa/2)^2 + chi^2 + (detuning - chi)^2)``;
    all rates in one angular unit.
    """
    if kappa <= 0:
        raise ValueError("kappa must be positive")
    if n_g < 0 or n_e < 0:
        raise ValueError("photon numbers must be non-negative")
    num = kappa * chi**2 * (n_e + n_g)
    return num / ((kappa / 2.0) ** 2 + chi**2 + (detuning - chi) ** 2)


def resonant_dephasing_rate(chi: float, kappa: float, n_g: float) -> float:
    """Dephasing rate for a drive exactly at the bare resonator frequency."""
    if kappa <= 0:
        raise ValueError("kappa must be positive")
    return 8.0 * chi**2 * n_g / (kappa * (1.0 + (4.0 * chi / kappa) ** 2))


def excited_photons_resonant(chi: float, kappa: float, n_g: float) -> float:
    """Photon number with the qubit excited, for a drive at the bare resonator."""
    return n_g / (1.0 + (4.0 * chi / kappa) ** 2)


def photon_calibration_constant(kappa: float, chi: float, K_slope: float) -> float:
    """Photons per unit generator power from the slope of dephasing vs power.

    Inverts the resonant dephasing relation: if the induced dephasing grows as
    ``K_slope * P`` then ``n_g = c * P`` with
    ``c = kappa (1 + (4 chi/kappa)^2) K / (8 chi^2)``.
    """
    if chi == 0:
        raise ZeroDivisionError("calibration undefined for chi = 0")
    if kappa <= 0:
        raise ValueError("kappa must be positive")
    if K_slope < 0:
        raise ValueError("K_slope must be non-negative")
    return kappa * (1.0 + (4.0 * chi / kappa) ** 2) * K_slope / (8.0 * chi**2)


def pure_dephasing_time(T1: float, T2e: float) -> float:
    """Pure echoed dephasing time from ``1/T_phi = 1/T2e - 1/(2 T1)``.

    Returns ``math.inf`` when the echo time is relaxation limited.
    """
    if T1 <= 0 or T2e <= 0:
        raise ValueError("T1 and T2e must be positive")
    if T2e > 2.0 * T1 * (1.0 + 1e-12):
        raise ValueError(f"T2e={T2e} exceeds 2*T1={2 * T1}: unphysical")
    rate = 1.0 / T2e - 1.0 / (2.0 * T1)
    if rate <= 0:
        return math.inf
    return 1.0 / rate


def coherence_limited_epg(T1: float, T2e: float, tau_g: float) -> float:
    """Coherence-limited error per gate.

    Args:
        T1, T2e: coherence times in microseconds (``inf`` allowed).
        tau_g: gate period in nanoseconds.
    """
    if T1 <= 0 or T2e <= 0 or tau_g <= 0:
        raise ValueError("all arguments must be positive")
    tau_us = tau_g * 1e-3
    return (3.0 - math.exp(-tau_us / T1) - 2.0 * math.exp(-tau_us / T2e)) / 6.0


def dispersive_shift_numeric(
    g: float, delta: float, E_C: float, n_photons: int = 10
) -> float:
    """Dispersive shift from exact diagonalisation of a 3-level transmon + cavity.

    Rotating-wave Jaynes-Cummings model, transmon levels {0, 1, 2} with
    anharmonicity ``-E_C``; ``chi`` is half the change of the resonator
    transition when the qubit goes from ground to excited. Same units as
    :func:`chi_from_g` (MHz, GHz, MHz -> kHz).
    """
    wq = 0.0
    wr = -delta * 1e3  # MHz, measured relative to the qubit
    levels = 3
    qe = np.array([0.0, wq, 2 * wq - E_C])
    dim = levels * n_photons
    H = np.zeros((dim, dim))

    def idx(q, n):
        return q * n_photons + n

    for q in range(levels):
        for n in range(n_photons):
            H[idx(q, n), idx(q, n)] = qe[q] + wr * n
    # g (b^dag a + a^dag b), transmon <q+1|a^dag|q> = sqrt(q+1)
    for q in range(levels - 1):
        for n in range(1, n_photons):
            amp = g * math.sqrt(q + 1) * math.sqrt(n)
            i, j = idx(q + 1, n - 1), idx(q, n)
            H[i, j] = H[j, i] = amp
    evals, evecs = np.linalg.eigh(H)

    def dressed(q, n):
        return evals[np.argmax(np.abs(evecs[idx(q, n), :]))]

    shift = (dressed(1, 1) - dressed(1, 0)) - (dressed(0, 1) - dressed(0, 0))
    return 0.5 * shift * 1e3
