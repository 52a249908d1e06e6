"""Two-blob IQ readout shots and the Gaussian-tail fidelity oracle."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import erfc


@dataclass(frozen=True)
class IQShots:
    points: np.ndarray  # (n, 2) in units of the blob standard deviation
    labels: np.ndarray  # prepared state, 0 or 1
    assigned: np.ndarray  # state assigned by the midpoint threshold


def gen_iq_shots(separation_sigma_ratio: float, n_shots: int, excited_prob: float = 0.5, rng_seed: int = 0) -> IQShots:
    """Circular Gaussian blobs at ``(0, 0)`` and ``(sep, 0)``, unit width.

    Shots are assigned by the perpendicular bisector between the blob centres.
    An infinite separation assigns every shot correctly.
    """
    if n_shots <= 0:
        raise ValueError("n_shots must be positive")
    if not 0 <= excited_prob <= 1:
        raise ValueError("excited_prob must lie in [0, 1]")
    if separation_sigma_ratio < 0:
        raise ValueError("separation must be non-negative")
    rng = np.random.default_rng(rng_seed)
    labels = (rng.random(n_shots) < excited_prob).astype(np.int8)
    noise = rng.standard_normal((n_shots, 2))
    if math.isinf(separation_sigma_ratio):
        return IQShots(noise, labels, labels.copy())
    pts = noise + np.column_stack([labels * separation_sigma_ratio, np.zeros(n_shots)])
    if separation_sigma_ratio == 0:
        # coincident blobs: the threshold carries no information, assign at random
        assigned = rng.integers(0, 2, n_shots).astype(np.int8)
    else:
        assigned = (pts[:, 0] > separation_sigma_ratio / 2).astype(np.int8)
    return IQShots(pts, labels, assigned)


def gaussian_fidelity(separation_sigma_ratio: float) -> float:
    """``1 - 2 Q(sep / 2 sigma)`` with ``Q`` the standard normal tail."""
    if math.isinf(separation_sigma_ratio):
        return 1.0
    q = 0.5 * erfc(separation_sigma_ratio / 2 / math.sqrt(2))
    return 1.0 - 2.0 * q
