"""Driven multi-level transmon dynamics in the rotating frame.

Frequencies are ordinary frequencies in MHz and times in microseconds. The
drive term is ``m (b + b^dag)`` with ``m`` the drive matrix element, so a
resonant two-level qubit has ``P1 = sin^2(2 pi m t)`` and its Rabi rate is
``m``: the rate equals the drive amplitude with slope 1. The population
oscillates at ``2 m``; returned rates are half the extracted population
frequency.

Integration is a fixed-step classical 4th-order Runge-Kutta scheme. Because
the rotating-frame Hamiltonian is time independent, one RK4 step is a fixed
matrix and stepping between samples uses its integer powers.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from ..freq import DegeneratePeakError, gaussian_interp_frequency
from ..traces import TimeTrace

STEPS_PER_PERIOD = 200


class NonConvergenceError(RuntimeError):
    """Oscillation frequency could not be extracted from the simulated trace."""


def transmon_hamiltonian(levels: int, detuning: float, alpha: float) -> np.ndarray:
    """Diagonal ``sum_n [-detuning n + alpha n(n-1)/2]`` in the drive frame.

    ``detuning`` is ``omega_d - omega_01``.
    """
    n = np.arange(levels, dtype=float)
    return np.diag(-detuning * n + 0.5 * alpha * n * (n - 1))


def lowering(levels: int) -> np.ndarray:
    return np.diag(np.sqrt(np.arange(1, levels, dtype=float)), 1)


def rk4_step_matrix(H: np.ndarray, h: float) -> np.ndarray:
    """One RK4 step of ``d psi/dt = -2 pi i H psi``."""
    A = -2j * np.pi * H * h
    eye = np.eye(H.shape[0], dtype=complex)
    A2 = A @ A
    return eye + A + A2 / 2 + A2 @ A / 6 + A2 @ A2 / 24


def evolve(H: np.ndarray, psi0: np.ndarray, dt_sample: float, n_samples: int) -> tuple[np.ndarray, int]:
    """States at ``k * dt_sample`` for ``k < n_samples``.

    The RK4 step is ``h <= 1 / (STEPS_PER_PERIOD * spread)`` where ``spread``
    is the largest transition frequency of ``H``; ``dt_sample`` is an integer
    number of steps. Returns the states and the number of steps per sample.
    """
    ev = np.linalg.eigvalsh(H)
    spread = max(float(ev[-1] - ev[0]), 1e-12)
    h_max = 1.0 / (STEPS_PER_PERIOD * spread)
    steps = max(1, math.ceil(dt_sample / h_max))
    h = dt_sample / steps
    M = np.linalg.matrix_power(rk4_step_matrix(H, h), steps)
    out = np.empty((n_samples, psi0.size), dtype=complex)
    psi = psi0.astype(complex)
    for k in range(n_samples):
        out[k] = psi
        psi = M @ psi
    return out, steps


@dataclass(frozen=True)
class RabiResult:
    rate: float  # MHz, drive-matrix-element convention
    f_population: float  # MHz
    trace: TimeTrace
    steps_per_sample: int


def _extract(t: np.ndarray, pop: np.ndarray, min_periods: float = 3.0) -> float:
    tr = TimeTrace(t, pop, kind="rabi")
    try:
        f = gaussian_interp_frequency(tr).f_est
    except DegeneratePeakError as exc:
        raise NonConvergenceError(f"no oscillation found: {exc}") from None
    span = t[-1] - t[0] + (t[1] - t[0])
    if f * span < min_periods:
        raise NonConvergenceError(f"only {f * span:.2f} periods in the trace; extend the duration")
    return f


def simulate_driven_transmon(
    levels: int,
    alpha: float,
    drive_amp: float,
    detuning: float = 0.0,
    duration: Optional[float] = None,
    n_samples: int = 512,
) -> RabiResult:
    """Rabi rate of a resonantly (or detuned) driven transmon.

    Args:
        levels: transmon levels kept (>= 2).
        alpha: anharmonicity (MHz).
        drive_amp: drive matrix element ``m`` (MHz).
        detuning: ``omega_d - omega_01`` (MHz).
        duration: simulated time (us); defaults to ten expected periods.
        n_samples: samples of the excited population.

    Raises:
        NonConvergenceError: fewer than three oscillation periods detected.
    """
    if levels < 2:
        raise ValueError("need at least two levels")
    if drive_amp <= 0:
        raise ValueError("drive_amp must be positive")
    if duration is None:
        f_expect = 2.0 * math.hypot(drive_amp, detuning / 2.0)
        duration = 10.0 / f_expect
    b = lowering(levels)
    H = transmon_hamiltonian(levels, detuning, alpha) + drive_amp * (b + b.T)
    psi0 = np.zeros(levels)
    psi0[0] = 1.0
    dt = duration / n_samples
    states, steps = evolve(H, psi0, dt, n_samples)
    pop = 1.0 - np.abs(states[:, 0]) ** 2
    t = np.arange(n_samples) * dt
    f = _extract(t, pop)
    return RabiResult(rate=f / 2.0, f_population=f, trace=TimeTrace(t, pop, kind="rabi"), steps_per_sample=steps)


def generalized_rabi_rate(drive_amp: float, detuning: float) -> float:
    """Two-level detuned rate ``sqrt(m^2 + (detuning/2)^2)`` in the same convention."""
    return math.hypot(drive_amp, detuning / 2.0)


def coupled_hamiltonian(
    delta: float, alpha_i: float, alpha_j: float, J: float, drive_amp: float, levels_i: int = 4, levels_j: int = 10
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Two coupled transmons with a drive on ``j``, undriven and drive parts.

    Energies are in the frame rotating at ``omega_i``; ``delta = omega_i -
    omega_j``. Basis index is ``n_i * levels_j + n_j``.
    """
    bi, bj = lowering(levels_i), lowering(levels_j)
    Ii, Ij = np.eye(levels_i), np.eye(levels_j)
    ni = np.arange(levels_i, dtype=float)
    nj = np.arange(levels_j, dtype=float)
    Hi = np.diag(0.5 * alpha_i * ni * (ni - 1))
    Hj = np.diag(-delta * nj + 0.5 * alpha_j * nj * (nj - 1))
    H0 = np.kron(Hi, Ij) + np.kron(Ii, Hj) + J * (np.kron(bi.T, bj) + np.kron(bi, bj.T))
    Hd = drive_amp * np.kron(Ii, bj + bj.T)
    return H0, Hd, np.kron(bi.T @ bi, Ij)


def simulate_coupled_drive(
    delta: float,
    alpha_i: float,
    alpha_j: float,
    J: float,
    drive_amp: float,
    levels_i: int = 4,
    levels_j: int = 10,
    duration: Optional[float] = None,
    n_samples: int = 512,
) -> RabiResult:
    """Rabi rate induced on qubit ``i`` by driving qubit ``j`` at the dressed ``omega_i``.

    The drive reaches ``i`` only through the exchange coupling ``J``. Uses a
    ``levels_i * levels_j`` product space (40 states by default).
    """
    if J == 0:
        raise ValueError("J = 0 induces no rate")
    H0, Hd, n_i = coupled_hamiltonian(delta, alpha_i, alpha_j, J, drive_amp, levels_i, levels_j)
    ev, vec = np.linalg.eigh(H0)
    ground = int(np.argmax(np.abs(vec[0, :])))
    excited = int(np.argmax(np.abs(vec[levels_j, :])))  # |1_i 0_j>
    w_dressed = ev[excited] - ev[ground]
    # move the frame from omega_i to the dressed frequency
    total_n = np.kron(np.diag(np.arange(levels_i, dtype=float)), np.eye(levels_j)) + np.kron(
        np.eye(levels_i), np.diag(np.arange(levels_j, dtype=float))
    )
    H = H0 - w_dressed * total_n + Hd
    if duration is None:
        f_expect = 2.0 * abs(drive_amp * J / delta)
        duration = 8.0 / f_expect
    psi0 = vec[:, ground]
    dt = duration / n_samples
    states, steps = evolve(H, psi0, dt, n_samples)
    pop = np.real(np.einsum("ki,ij,kj->k", states.conj(), n_i, states))
    t = np.arange(n_samples) * dt
    f = _extract(t, pop)
    return RabiResult(rate=f / 2.0, f_population=f, trace=TimeTrace(t, pop, kind="rabi"), steps_per_sample=steps)
