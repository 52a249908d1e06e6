"""Randomized-benchmarking analysis: correlators, subset weights, crosstalk metric.

Subsets of ``n`` qubits are bitmasks: bit ``q`` set means qubit ``q`` belongs
to the subset. Printed labels read left to right, character ``q`` standing
for qubit ``q`` (``"1100"`` is qubits 0 and 1).

Three weight families describe the same multi-qubit decay data:

* ``alpha``: per-Clifford decay of the Z correlator ``<Z_S>``;
* ``pauli_p``: probability that the error is a Pauli with support ``S``;
* ``depol_eps``: probability of a depolarizing event on subset ``S``.

They are linked by tensor products of per-qubit kernels. Rows select whether
the qubit is probed by the correlator and columns whether it carries an error:

* Pauli kernel ``[[1, 1], [1, -1/3]]``: a probed qubit hit by a uniformly
  random non-identity Pauli anticommutes with Z two times out of three.
* Depolarizing kernel ``[[1, 1], [1, 0]]``: a depolarized probed qubit erases
  the correlator.
"""
from __future__ import annotations

import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from functools import lru_cache, partial
from typing import Callable, Optional

import numpy as np

from .fits import FitResult, fit_leakage_rb, fit_rb_curve
from .synth.rb import RBDataset, label_to_mask, mask_to_label

PAULI_KERNEL = np.array([[1.0, 1.0], [1.0, -1.0 / 3.0]])
DEPOL_KERNEL = np.array([[1.0, 1.0], [1.0, 0.0]])
KINDS = ("alpha", "pauli_p", "depol_eps")


class IncompleteWeightsError(ValueError):
    pass


def popcount(x: int) -> int:
    return bin(x).count("1")


@lru_cache(maxsize=None)
def transform_matrix(kind: str, n: int) -> np.ndarray:
    """``M[S', S] = prod_q K[probed_q(S'), hit_q(S)]`` over all ``2**n`` subsets."""
    kernel = {"pauli": PAULI_KERNEL, "depol": DEPOL_KERNEL}[kind]
    M = np.array([[1.0]])
    # qubit q is bit q, so the kron places qubit 0 as the fastest index
    for _ in range(n):
        M = np.kron(kernel, M)
    M.setflags(write=False)
    return M


@dataclass
class SubspaceWeights:
    """Weights over qubit subsets, indexed by bitmask (``values[0]`` is the empty set)."""

    kind: str
    n_qubits: int
    values: np.ndarray
    errors: Optional[np.ndarray] = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"kind must be one of {KINDS}")
        self.values = np.asarray(self.values, dtype=float)
        if self.values.shape != (1 << self.n_qubits,):
            raise IncompleteWeightsError(f"expected {1 << self.n_qubits} entries, got {self.values.shape}")
        if self.errors is not None:
            self.errors = np.asarray(self.errors, dtype=float)

    def __getitem__(self, key) -> float:
        if isinstance(key, str):
            key = label_to_mask(key)
        return float(self.values[key])

    def label(self, mask: int) -> str:
        return mask_to_label(mask, self.n_qubits)

    @classmethod
    def from_labels(cls, kind: str, table: dict, errors: Optional[dict] = None) -> "SubspaceWeights":
        """Build from ``{"1000": value, ...}``; alpha tables need every nonempty subset."""
        n = len(next(iter(table)))
        vals = np.full(1 << n, np.nan)
        errs = None if errors is None else np.zeros(1 << n)
        for lab, v in table.items():
            if len(lab) != n:
                raise ValueError("labels must share one width")
            vals[label_to_mask(lab)] = v
            if errors is not None:
                errs[label_to_mask(lab)] = errors.get(lab, 0.0)
        if kind == "alpha":
            if np.isnan(vals[0]):
                vals[0] = 1.0
        if np.any(np.isnan(vals)):
            missing = [mask_to_label(m, n) for m in range(1 << n) if np.isnan(vals[m])]
            raise IncompleteWeightsError(f"missing subsets: {missing}")
        return cls(kind, n, vals, errs)

    def to_dict(self) -> dict:
        start = 1 if self.kind != "pauli_p" else 0
        out = {"kind": self.kind, "n_qubits": self.n_qubits, "values": {}, "errors": {}}
        for m in range(start, 1 << self.n_qubits):
            out["values"][self.label(m)] = float(self.values[m])
            if self.errors is not None:
                out["errors"][self.label(m)] = float(self.errors[m])
        return out


def _check_alpha(alpha: SubspaceWeights) -> np.ndarray:
    if alpha.kind != "alpha":
        raise ValueError("expected alpha weights")
    a = alpha.values.copy()
    if np.any(~np.isfinite(a[1:])):
        raise IncompleteWeightsError("alpha set has missing entries")
    a[0] = 1.0
    return a


def pauli_to_alpha(p: SubspaceWeights) -> SubspaceWeights:
    M = transform_matrix("pauli", p.n_qubits)
    return SubspaceWeights("alpha", p.n_qubits, M @ p.values)


def alpha_to_pauli_weights(alpha: SubspaceWeights) -> SubspaceWeights:
    """Invert ``alpha = M_pauli p`` for the fixed-weight Pauli probabilities ``p_S``.

    Errors are propagated linearly from independent alpha errors.
    """
    a = _check_alpha(alpha)
    Minv = np.linalg.inv(transform_matrix("pauli", alpha.n_qubits))
    p = Minv @ a
    err = None
    if alpha.errors is not None:
        e = alpha.errors.copy()
        e[0] = 0.0
        err = np.sqrt((Minv**2) @ (e**2))
    return SubspaceWeights("pauli_p", alpha.n_qubits, p, err)


def depol_to_alpha(eps: SubspaceWeights) -> SubspaceWeights:
    """``alpha_S' = sum of eps_S over subsets disjoint from S'`` with ``eps_0 = 1 - sum eps``."""
    e = eps.values.copy()
    e[0] = 1.0 - e[1:].sum()
    M = transform_matrix("depol", eps.n_qubits)
    return SubspaceWeights("alpha", eps.n_qubits, M @ e)


def alpha_to_depol_weights(alpha: SubspaceWeights) -> SubspaceWeights:
    """Invert the depolarizing kernel for the subset event probabilities ``eps_S``.

    Entry 0 holds the no-event probability ``1 - sum_S eps_S``.
    """
    a = _check_alpha(alpha)
    Minv = np.linalg.inv(transform_matrix("depol", alpha.n_qubits))
    eps = Minv @ a
    err = None
    if alpha.errors is not None:
        e = alpha.errors.copy()
        e[0] = 0.0
        err = np.sqrt((Minv**2) @ (e**2))
    return SubspaceWeights("depol_eps", alpha.n_qubits, eps, err)


def crosstalk_metric(p: SubspaceWeights) -> float:
    """``eta~``: weight off the product-channel manifold.

    Negative ``p_S`` are zeroed. The correlated part ``sum_{|S|>1} p_S`` is
    kept, and the weights on ``|S| <= 1`` are compared with the closest
    ``p'`` in ``[0, 1]`` summing to one. That L1 distance has the closed form
    ``sum (q - 1)^+ + |1 - sum clip(q, 0, 1)|``.
    """
    if p.kind != "pauli_p":
        raise ValueError("expected Pauli weights")
    q = np.clip(p.values, 0.0, None)
    w = np.array([popcount(m) for m in range(q.size)])
    low = q[w <= 1]
    if low.size == 0:
        raise ValueError("no product-channel entries")
    over = np.clip(low - 1.0, 0.0, None).sum()
    inside = np.clip(low, 0.0, 1.0)
    return float(q[w > 1].sum() + over + abs(1.0 - inside.sum()))


def epg_from_alpha(alpha_single: float, gates_per_clifford: float) -> float:
    """Error per physical gate: ``(1 - alpha)/2`` per Clifford over gates per Clifford."""
    if not 0 < alpha_single <= 1:
        raise ValueError("alpha must lie in (0, 1]")
    if not gates_per_clifford > 0:
        raise ValueError("gates_per_clifford must be positive")
    return (1.0 - alpha_single) / 2.0 / gates_per_clifford


def assignment_fidelity(labels, assigned) -> float:
    """``1 - p(e|g) - p(g|e)`` from prepared and assigned states."""
    labels = np.asarray(labels)
    assigned = np.asarray(assigned)
    g, e = labels == 0, labels == 1
    if not g.any() or not e.any():
        raise ValueError("both prepared states must be present")
    return float(1.0 - np.mean(assigned[g] == 1) - np.mean(assigned[e] == 0))


# correlators ---------------------------------------------------------------


def _sign_matrix(n: int) -> np.ndarray:
    v = np.arange(1 << n)
    return np.array([[(-1.0) ** popcount(int(x) & int(s)) for s in v] for x in v])


def outcome_counts(dataset: RBDataset) -> np.ndarray:
    """Histogram of packed outcomes per cell, shape ``(L, K, 2**n)``."""
    if dataset.levels != 2:
        raise ValueError("correlators need two-level outcomes")
    L, K, _ = dataset.outcomes.shape
    nv = 1 << dataset.n_qubits
    idx = (np.arange(L * K).reshape(L, K, 1) * nv + dataset.outcomes.astype(np.int64)).ravel()
    return np.bincount(idx, minlength=L * K * nv).reshape(L, K, nv)


def cell_correlators(dataset: RBDataset) -> np.ndarray:
    """Per-seed means of ``<Z_S>`` for every subset mask, shape ``(L, K, 2**n)``."""
    counts = outcome_counts(dataset)
    return counts @ _sign_matrix(dataset.n_qubits) / dataset.shots


def z_correlators(dataset: RBDataset, S) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Mean of ``prod_{q in S} (1 - 2 b_q)`` per length and its standard error over seeds."""
    mask = label_to_mask(S) if isinstance(S, str) else int(S)
    if mask == 0:
        raise ValueError("subset must be nonempty")
    if mask >= 1 << dataset.n_qubits:
        raise ValueError("subset refers to qubits outside the dataset")
    c = cell_correlators(dataset)[:, :, mask]
    return dataset.lengths.astype(float), c.mean(axis=1), _sem(c)


def _sem(x: np.ndarray) -> np.ndarray:
    k = x.shape[1]
    if k < 2:
        return np.zeros(x.shape[0])
    return x.std(axis=1, ddof=1) / math.sqrt(k)


# full chains ---------------------------------------------------------------


def fit_alphas(lengths: np.ndarray, corr: np.ndarray) -> tuple[SubspaceWeights, dict]:
    """Fit every subset decay from per-seed correlators ``corr[L, K, 2**n]``."""
    nv = corr.shape[2]
    n = nv.bit_length() - 1
    vals = np.ones(nv)
    errs = np.zeros(nv)
    fits = {}
    means = corr.mean(axis=1)
    sems = _sem(corr)
    for mask in range(1, nv):
        surv = (1.0 + means[:, mask]) / 2.0
        res = fit_rb_curve(lengths, surv, sems[:, mask] / 2.0)
        vals[mask] = res["alpha"]
        errs[mask] = res.err("alpha")
        fits[mask] = res
    return SubspaceWeights("alpha", n, vals, errs), fits


@dataclass
class CorrelatedRBResult:
    alpha: SubspaceWeights
    pauli: SubspaceWeights
    depol: SubspaceWeights
    eta_tilde: float
    eta_tilde_err: Optional[float] = None
    p_sum: float = 1.0
    fits: dict = field(default_factory=dict)
    bootstrap: Optional[dict] = None

    def to_dict(self) -> dict:
        return {
            "alpha": self.alpha.to_dict(),
            "pauli_p": self.pauli.to_dict(),
            "depol_eps": self.depol.to_dict(),
            "eta_tilde": self.eta_tilde,
            "eta_tilde_err": self.eta_tilde_err,
            "p_sum": self.p_sum,
            "bootstrap": self.bootstrap,
        }


def correlated_chain(lengths, corr) -> dict:
    """Scalar outputs of the correlated-RB chain for one correlator array."""
    alpha, _ = fit_alphas(lengths, corr)
    p = alpha_to_pauli_weights(alpha)
    eps = alpha_to_depol_weights(alpha)
    out = {"eta_tilde": crosstalk_metric(p), "p_sum": float(p.values.sum())}
    for m in range(1, alpha.values.size):
        lab = alpha.label(m)
        out[f"alpha_{lab}"] = float(alpha.values[m])
        out[f"eps_{lab}"] = float(eps.values[m])
    for m in range(alpha.values.size):
        out[f"p_{alpha.label(m)}"] = float(p.values[m])
    return out


def analyze_correlated_rb(
    dataset: RBDataset, n_resamples: int = 0, rng_seed: int = 0, jobs: Optional[int] = None
) -> CorrelatedRBResult:
    """Subset decays, Pauli and depolarizing weights and ``eta~`` for a dataset."""
    corr = cell_correlators(dataset)
    lengths = dataset.lengths.astype(float)
    alpha, fits = fit_alphas(lengths, corr)
    p = alpha_to_pauli_weights(alpha)
    eps = alpha_to_depol_weights(alpha)
    res = CorrelatedRBResult(alpha, p, eps, crosstalk_metric(p), p_sum=float(p.values.sum()), fits=fits)
    if n_resamples:
        boot = bootstrap_errors(dataset, n_resamples, correlated_chain, rng_seed, jobs, corr=corr)
        res.bootstrap = boot
        res.eta_tilde_err = boot["eta_tilde"]
        nv = alpha.values.size
        res.alpha.errors = np.array([0.0] + [boot[f"alpha_{alpha.label(m)}"] for m in range(1, nv)])
        res.pauli.errors = np.array([boot[f"p_{alpha.label(m)}"] for m in range(nv)])
        res.depol.errors = np.array([0.0] + [boot[f"eps_{alpha.label(m)}"] for m in range(1, nv)])
    return res


def _boot_one(chain, lengths, corr, idx):
    return chain(lengths, corr[:, idx, :])


def bootstrap_errors(
    dataset: RBDataset,
    n_resamples: int = 100,
    analysis_chain: Callable = correlated_chain,
    rng_seed: int = 0,
    jobs: Optional[int] = None,
    corr: Optional[np.ndarray] = None,
) -> dict:
    """Standard deviation of each chain output over seed resamples.

    Each resample draws ``K`` Clifford sequences with replacement (the same
    sequence indices at every length) and reruns ``analysis_chain(lengths,
    correlators)``. Resample ``r`` uses ``SeedSequence(rng_seed, spawn_key=(r,))``.
    """
    K = dataset.n_seeds
    if K < 10:
        raise ValueError(f"bootstrap needs at least 10 seeds, got {K}")
    if n_resamples < 2:
        raise ValueError("need at least 2 resamples")
    if corr is None:
        corr = cell_correlators(dataset)
    lengths = dataset.lengths.astype(float)
    idx = [
        np.random.default_rng(np.random.SeedSequence(entropy=rng_seed, spawn_key=(r,))).integers(0, K, K)
        for r in range(n_resamples)
    ]
    if jobs and jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            outs = list(pool.map(_boot_one, [analysis_chain] * n_resamples, [lengths] * n_resamples, [corr] * n_resamples, idx))
    else:
        outs = [_boot_one(analysis_chain, lengths, corr, i) for i in idx]
    keys = outs[0].keys()
    return {k: float(np.std([o[k] for o in outs], ddof=1)) for k in keys}


def _single_qubit_outputs(q: int, lengths, corr) -> dict:
    surv = (1.0 + corr[:, :, 1 << q].mean(axis=1)) / 2.0
    sem = _sem(corr[:, :, 1 << q]) / 2.0
    res = fit_rb_curve(lengths, surv, sem)
    return {"alpha": res["alpha"], "EPC": res["EPC"]}


def single_qubit_chain(q: int):
    """Bootstrap chain for qubit ``q`` (picklable, so it can run in worker processes)."""
    return partial(_single_qubit_outputs, q)


def analyze_single_qubit_rb(dataset: RBDataset, q: int = 0) -> FitResult:
    """Survival ``(1 + <Z_q>)/2`` fitted to ``A alpha**m + B``; adds EPG to ``derived``."""
    m, z, sem = z_correlators(dataset, 1 << q)
    res = fit_rb_curve(m, (1.0 + z) / 2.0, sem / 2.0)
    res.derived["EPG"] = epg_from_alpha(max(res["alpha"], 1e-300), dataset.gates_per_clifford)
    res.derived["EPG_err"] = res.err("alpha") / 2.0 / dataset.gates_per_clifford
    res.derived["gates_per_clifford"] = dataset.gates_per_clifford
    return res


def leakage_summary(dataset: RBDataset):
    """Per-length means and standard errors of leaked population and ground survival."""
    if dataset.levels != 3:
        raise ValueError("leakage analysis needs three-level outcomes")
    v = dataset.qubit_values(0)
    leak = (v == 2).mean(axis=2)
    surv = (v == 0).mean(axis=2)
    return leak.mean(axis=1), _sem(leak), surv.mean(axis=1), _sem(surv)


def analyze_leakage_rb(dataset: RBDataset, mode: str = "four_param") -> FitResult:
    leak, leak_err, surv, surv_err = leakage_summary(dataset)
    return fit_leakage_rb(
        dataset.lengths,
        leak,
        surv,
        mode=mode,
        leak_errs=leak_err,
        survival_errs=surv_err,
        gates_per_clifford=dataset.gates_per_clifford,
    )


def weights_report(res: CorrelatedRBResult) -> str:
    return json.dumps(res.to_dict(), indent=2)
