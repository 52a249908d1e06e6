"""Reference values of the measured four-qubit device.

Used as defaults for examples, reports and cross-checks. Nothing here is
computed; these are recorded measurement values.
"""
from __future__ import annotations

from .device import DeviceParams, PairCoupling, QubitParams, ResonatorParams

# omega_q GHz, omega_r GHz, alpha MHz, E_J/E_C, chi kHz, g MHz, kappa_ext kHz, Q_int/1e3, p_e %
BASIC_CHARACTERIZATION = (
    (3.981, 7.968, -199, 69, -165, 124, 118, 110, 13),
    (4.045, 8.083, -199, 71, -167, 126, 73, 75, 18),
    (4.130, 8.183, -198, 74, -169, 128, 749, 515, 13),
    (4.192, 8.289, -197, 76, -164, 128, 241, 160, 10),
)

# T1, T2*, T2e, T_phi_e (us); EPG sep, sim, coherence limit (1e-4)
COHERENCE = (
    (106, 95, 101, 193, 2.29, 1.64, 1.1),
    (159, 104, 116, 183, 1.46, 2.15, 0.94),
    (179, 89, 128, 199, 1.16, 1.31, 0.85),
    (151, 99, 113, 181, 2.23, 2.16, 0.97),
)
COHERENCE_LIMIT_UNCERTAINTY = (0.1, 0.05, 0.05, 0.05)

GATE_PERIOD_NS = 24.0

N_CRIT = (258, 257, 251, 256)

# Correlated-RB depolarizing parameters, subset labels read left to right.
CORRELATED_ALPHAS = {
    "1000": 0.99962,
    "0100": 0.99954,
    "0010": 0.99969,
    "0001": 0.99950,
    "1100": 0.99920,
    "1010": 0.99931,
    "1001": 0.99914,
    "0110": 0.99927,
    "0101": 0.99910,
    "0011": 0.99921,
    "1110": 0.99893,
    "1101": 0.99875,
    "1011": 0.99884,
    "0111": 0.99882,
    "1111": 0.99846,
}
CORRELATED_ALPHA_ERRORS = {
    "1000": 1e-5, "0100": 4e-5, "0010": 1e-5, "0001": 2e-5, "1100": 3e-5,
    "1010": 1e-5, "1001": 1e-5, "0110": 3e-5, "0101": 3e-5, "0011": 1e-5,
    "1110": 3e-5, "1101": 3e-5, "1011": 2e-5, "0111": 3e-5, "1111": 4e-5,
}
P_IDENTITY = 0.99883
ETA_TILDE = 1.1e-4

LEAKAGE_PER_GATE = 3.49e-5
LEAKAGE_EPG_FOUR_PARAM = 2e-4
LEAKAGE_EPG_THREE_PARAM = 2.33e-4

ASSIGNMENT_FIDELITY = (0.978, 0.977, 0.985, 0.984)

# Finite-element results kept for model-vs-simulation comparison.
FE_CUTOFF_GHZ = 34.3
FE_CURVATURE_GHZ_MM2 = 4.5
FE_NO_PILLAR_BAND_TOP_GHZ = 39.5

PARASITIC_CHI_BOUND_HZ = 20.0
STARK_RESOLUTION_HZ = 1e3


def reference_device() -> DeviceParams:
    """Four-qubit device with the recorded basic characterisation values."""
    qubits, resonators, pairs = [], [], []
    for (wq, wr, alpha, ejec, chi, g, kext, qint, pe), coh in zip(BASIC_CHARACTERIZATION, COHERENCE):
        qubits.append(
            QubitParams(
                omega_q=wq,
                alpha=float(alpha),
                E_C=float(-alpha),
                E_J_over_E_C=float(ejec),
                T1=float(coh[0]),
                T2_star=float(coh[1]),
                T2_echo=float(coh[2]),
                p_e=float(pe),
            )
        )
        resonators.append(ResonatorParams(omega_r=wr, kappa_ext=float(kext), Q_int=qint * 1e3))
        pairs.append(PairCoupling(g=float(g), chi=float(chi), delta=wq - wr))
    dev = DeviceParams(qubits=qubits, resonators=resonators, pairs=pairs)
    dev.validate()
    return dev
