"""Pauli-frame Monte Carlo for simultaneous single-qubit randomized benchmarking.

Every qubit runs its own random Clifford sequence. After each Clifford (the
final inverse included) one error event occurs with probability
``sum(eps_S)``; the subset ``S`` is chosen with probability ``eps_S / sum``
and each qubit in ``S`` receives a uniformly random Pauli, identity included.
That makes each event a full depolarization of ``S``. Errors are pushed to
the end of the sequence through the remaining Cliffords; a qubit's outcome
flips when its propagated Pauli has an X component.

Random streams: the cell ``(length index li, seed index ki)`` uses
``np.random.SeedSequence(master, spawn_key=(li, ki))``, so every cell is
reproducible on its own and results do not depend on evaluation order or
worker count.
"""
from __future__ import annotations

import json
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from .clifford import N_CLIFFORD, gates_per_clifford, tables, tail_maps


@dataclass(frozen=True)
class NoiseChannelSpec:
    """Per-Clifford subset-depolarizing error probabilities.

    ``eps`` maps a subset bitmask (bit ``q`` set means qubit ``q`` is in the
    subset) to its event probability.
    """

    n_qubits: int
    eps: dict = field(default_factory=dict)

    def __post_init__(self):
        clean = {}
        for mask, v in dict(self.eps).items():
            mask = int(mask) if not isinstance(mask, str) else label_to_mask(mask)
            if not 0 < mask < (1 << self.n_qubits):
                raise ValueError(f"subset mask {mask} out of range for {self.n_qubits} qubits")
            if v < 0:
                raise ValueError("depolarizing probabilities must be non-negative")
            clean[mask] = clean.get(mask, 0.0) + float(v)
        if sum(clean.values()) > 1 + 1e-12:
            raise ValueError("total event probability exceeds 1")
        object.__setattr__(self, "eps", clean)

    @property
    def total(self) -> float:
        return float(sum(self.eps.values()))

    def alpha(self, mask: int) -> float:
        """Per-Clifford decay of ``<Z_S>`` for the subset ``mask``."""
        return 1.0 - sum(v for s, v in self.eps.items() if s & mask)

    @classmethod
    def product(cls, eps_single) -> "NoiseChannelSpec":
        """Independent depolarizing on each qubit, expanded into subset events.

        Independent per-qubit events with probabilities ``e_q`` occur jointly
        on ``S`` with probability ``prod_{q in S} e_q prod_{q not in S} (1 - e_q)``.
        """
        n = len(eps_single)
        eps = {}
        for mask in range(1, 1 << n):
            p = 1.0
            for q in range(n):
                p *= eps_single[q] if mask >> q & 1 else 1.0 - eps_single[q]
            eps[mask] = p
        return cls(n, eps)


def label_to_mask(label: str) -> int:
    """Bitstring label read left to right: character ``q`` is qubit ``q``."""
    if not label or set(label) - {"0", "1"}:
        raise ValueError(f"invalid subset label {label!r}")
    return sum(1 << q for q, ch in enumerate(label) if ch == "1")


def mask_to_label(mask: int, n: int) -> str:
    return "".join("1" if mask >> q & 1 else "0" for q in range(n))


@dataclass
class RBDataset:
    """Shot records ``outcomes[length, seed, shot]``.

    For two-level readout each entry packs the qubit bits (bit ``q`` is qubit
    ``q``). For three-level readout (``levels=3``) each qubit uses two bits
    and the value 2 marks a leaked qubit.
    """

    lengths: np.ndarray
    n_seeds: int
    shots: int
    n_qubits: int
    outcomes: np.ndarray
    gates_per_clifford: float
    levels: int = 2
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.lengths = np.asarray(self.lengths, dtype=np.int64)
        self.outcomes = np.asarray(self.outcomes)
        want = (self.lengths.size, self.n_seeds, self.shots)
        if self.outcomes.shape != want:
            raise ValueError(f"outcomes shape {self.outcomes.shape} != {want}")

    @property
    def bits_per_shot(self) -> int:
        return self.n_qubits * (1 if self.levels == 2 else 2)

    def qubit_values(self, q: int) -> np.ndarray:
        """Per-shot readout level of qubit ``q``."""
        if self.levels == 2:
            return (self.outcomes >> q) & 1
        return (self.outcomes >> (2 * q)) & 3

    def to_dict(self) -> dict:
        digits = max(1, -(-self.bits_per_shot // 4))
        fmt = f"{{:0{digits}x}}"
        cells = []
        for li in range(self.lengths.size):
            row = []
            for ki in range(self.n_seeds):
                row.append("".join(fmt.format(int(v)) for v in self.outcomes[li, ki]))
            cells.append(row)
        return {
            "lengths": self.lengths.tolist(),
            "seeds": self.n_seeds,
            "shots": self.shots,
            "n_qubits": self.n_qubits,
            "levels": self.levels,
            "gates_per_clifford": self.gates_per_clifford,
            "hex_digits_per_shot": digits,
            "outcomes": cells,
            "meta": self.meta,
        }

    def to_json(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), separators=(",", ":")) + "\n")

    @classmethod
    def from_dict(cls, doc: dict) -> "RBDataset":
        for key in ("lengths", "seeds", "shots", "n_qubits", "outcomes"):
            if key not in doc:
                raise ValueError(f"RB dataset missing field {key!r}")
        digits = int(doc.get("hex_digits_per_shot", 1))
        L, K, N = len(doc["lengths"]), int(doc["seeds"]), int(doc["shots"])
        out = np.empty((L, K, N), dtype=np.uint16)
        if len(doc["outcomes"]) != L:
            raise ValueError("outcome table has the wrong number of lengths")
        for li, row in enumerate(doc["outcomes"]):
            if len(row) != K:
                raise ValueError(f"length index {li}: expected {K} seeds")
            for ki, s in enumerate(row):
                if len(s) != N * digits:
                    raise ValueError(f"cell ({li}, {ki}): expected {N} shots")
                if digits == 1:
                    out[li, ki] = np.frombuffer(bytes.fromhex("".join("0" + c for c in s)), dtype=np.uint8)
                else:
                    out[li, ki] = [int(s[i : i + digits], 16) for i in range(0, len(s), digits)]
        return cls(
            lengths=np.array(doc["lengths"]),
            n_seeds=K,
            shots=N,
            n_qubits=int(doc["n_qubits"]),
            outcomes=out,
            gates_per_clifford=float(doc.get("gates_per_clifford", 1.0)),
            levels=int(doc.get("levels", 2)),
            meta=doc.get("meta") or {},
        )


def load_rb_dataset(path: str | Path) -> RBDataset:
    return RBDataset.from_dict(json.loads(Path(path).read_text()))


def cell_rng(master: int, li: int, ki: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(entropy=master, spawn_key=(li, ki)))


def _random_sequences(rng, n_qubits: int, m: int) -> np.ndarray:
    """Random Cliffords plus the inverting element, shape ``(n_qubits, m + 1)``."""
    tb = tables()
    seq = np.empty((n_qubits, m + 1), dtype=np.int64)
    seq[:, :m] = rng.integers(0, N_CLIFFORD, size=(n_qubits, m))
    for q in range(n_qubits):
        acc = 0
        for c in seq[q, :m]:
            acc = tb.mult[c, acc]
        seq[q, m] = tb.inverse[acc]
    return seq


def _event_slots(rng, p: float, n_slots: int, shots: int) -> tuple[np.ndarray, np.ndarray]:
    """Bernoulli(p) events on ``n_slots`` slots per shot; returns (shot, slot) pairs."""
    if p <= 0:
        return np.empty(0, np.int64), np.empty(0, np.int64)
    counts = rng.binomial(n_slots, p, size=shots)
    shot_idx = np.repeat(np.arange(shots), counts)
    slots = rng.integers(0, n_slots, size=shot_idx.size)
    # redraw collisions so each shot holds a uniform subset of distinct slots
    while True:
        key = shot_idx * n_slots + slots
        order = np.argsort(key, kind="stable")
        dup = np.zeros(key.size, bool)
        dup[order[1:]] = key[order[1:]] == key[order[:-1]]
        if not dup.any():
            return shot_idx, slots
        slots[dup] = rng.integers(0, n_slots, size=int(dup.sum()))


def _xbit(pauli: np.ndarray) -> np.ndarray:
    return ((pauli == 1) | (pauli == 2)).astype(np.int64)


def simulate_rb_cell(
    channel: NoiseChannelSpec, m: int, shots: int, readout_error: float, master: int, li: int, ki: int
) -> np.ndarray:
    """Packed outcomes of one (length, seed) cell."""
    rng = cell_rng(master, li, ki)
    n = channel.n_qubits
    seqs = _random_sequences(rng, n, m)
    tails = tail_maps(seqs)  # (n, m + 1)
    conj = tables().pauli_conj
    flips = np.zeros((shots, n), dtype=np.int64)
    masks = np.array(sorted(channel.eps), dtype=np.int64)
    probs = np.array([channel.eps[s] for s in masks])
    shot_idx, slots = _event_slots(rng, channel.total, m + 1, shots)
    if shot_idx.size:
        subset = masks[rng.choice(masks.size, size=shot_idx.size, p=probs / probs.sum())]
        paulis = rng.integers(0, 4, size=(shot_idx.size, n))
        for q in range(n):
            hit = (subset >> q & 1).astype(bool)
            if not hit.any():
                continue
            propagated = conj[tails[q, slots[hit]], paulis[hit, q]]
            np.add.at(flips[:, q], shot_idx[hit], _xbit(propagated))
    bits = flips & 1
    if readout_error > 0:
        bits ^= (rng.random((shots, n)) < readout_error).astype(np.int64)
    return (bits << np.arange(n)).sum(axis=1).astype(np.uint16)


def _run_cells(fn, tasks, jobs: Optional[int]):
    if jobs is None or jobs <= 1 or len(tasks) <= 1:
        return [fn(*t) for t in tasks]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(fn, *zip(*tasks), chunksize=max(1, len(tasks) // (4 * jobs))))


def simulate_rb(
    n_qubits: int,
    channel: NoiseChannelSpec,
    lengths,
    seeds: int,
    shots: int,
    readout_error: float = 0.0,
    rng_seed: int = 0,
    jobs: Optional[int] = None,
) -> RBDataset:
    """Simulate simultaneous RB and return the shot records.

    Args:
        n_qubits: number of qubits, each with an independent Clifford sequence.
        channel: subset-depolarizing events applied after every Clifford.
        lengths: numbers of random Cliffords before the inverse.
        seeds: random sequences per length.
        shots: repetitions per sequence.
        readout_error: symmetric bit-flip probability at measurement.
        rng_seed: master seed.
        jobs: worker processes; output does not depend on it.
    """
    if channel.n_qubits != n_qubits:
        raise ValueError("channel qubit count does not match n_qubits")
    if not 0 <= readout_error <= 0.5:
        raise ValueError("readout_error must lie in [0, 0.5]")
    lengths = np.asarray(lengths, dtype=np.int64)
    if np.any(lengths < 0):
        raise ValueError("sequence lengths must be non-negative")
    tasks = [
        (channel, int(m), shots, readout_error, int(rng_seed), li, ki)
        for li, m in enumerate(lengths)
        for ki in range(seeds)
    ]
    cells = _run_cells(simulate_rb_cell, tasks, jobs)
    out = np.stack(cells).reshape(lengths.size, seeds, shots)
    return RBDataset(
        lengths=lengths,
        n_seeds=seeds,
        shots=shots,
        n_qubits=n_qubits,
        outcomes=out,
        gates_per_clifford=float(gates_per_clifford()),
        meta={"rng_seed": int(rng_seed), "readout_error": readout_error},
    )


def expected_correlator(channel: NoiseChannelSpec, mask: int, m: int, readout_error: float = 0.0) -> float:
    """Exact mean of ``<Z_S>`` after ``m`` Cliffords plus the inverse."""
    k = bin(mask).count("1")
    return (1.0 - 2.0 * readout_error) ** k * channel.alpha(mask) ** (m + 1)


# leakage -------------------------------------------------------------------


@dataclass(frozen=True)
class LeakageSpec:
    """Per-Clifford leakage ``L_up``, seepage ``L_down`` and depolarizing ``eps``.

    While in the computational subspace a Clifford leaks with probability
    ``L_up``; otherwise it depolarizes with probability ``eps``. A leaked
    qubit returns with probability ``L_down`` to a maximally mixed state.
    """

    L_up: float
    L_down: float
    eps: float

    def __post_init__(self):
        for name in ("L_up", "L_down", "eps"):
            v = getattr(self, name)
            if not 0 <= v <= 1:
                raise ValueError(f"{name} must lie in [0, 1]")

    @property
    def lam(self) -> float:
        return 1.0 - self.L_up - self.L_down

    @property
    def L_inf(self) -> float:
        s = self.L_up + self.L_down
        return 0.0 if s == 0 else self.L_up / s

    @property
    def alpha(self) -> float:
        return (1.0 - self.L_up) * (1.0 - self.eps)

    def leaked_population(self, n_steps) -> np.ndarray:
        return self.L_inf * (1.0 - self.lam ** np.asarray(n_steps, float))

    def survival(self, n_steps) -> np.ndarray:
        n = np.asarray(n_steps, float)
        return (1.0 - self.L_inf) / 2 + self.L_inf / 2 * self.lam**n + self.alpha**n / 2


def simulate_leakage_cell(spec: LeakageSpec, m: int, shots: int, readout_error: float, master: int, li: int, ki: int):
    rng = cell_rng(master, li, ki)
    n_slots = m + 1
    seq = _random_sequences(rng, 1, m)
    tails = tail_maps(seq)[0]
    conj = tables().pauli_conj
    t = np.zeros(shots, dtype=np.int64)  # next slot to process
    leaked = np.zeros(shots, bool)
    mixed = np.zeros(shots, bool)
    flip = np.zeros(shots, dtype=np.int64)
    p_comp = spec.L_up + (1.0 - spec.L_up) * spec.eps
    active = np.arange(shots)
    while active.size:
        lk = leaked[active]
        p = np.where(lk, spec.L_down, p_comp)
        gap = np.full(active.size, n_slots + 1, dtype=np.int64)
        ok = p > 0
        gap[ok] = rng.geometric(p[ok]) - 1
        slot = t[active] + gap
        inside = slot < n_slots
        active, slot, lk = active[inside], slot[inside], lk[inside]
        if not active.size:
            break
        u = rng.random(active.size)
        # computational: leak or depolarize
        comp = ~lk
        go_up = comp & (u < spec.L_up / p_comp if p_comp > 0 else False)
        depol = comp & ~go_up
        leaked[active[go_up]] = True
        pauli = rng.integers(0, 4, size=int(depol.sum()))
        flip[active[depol]] ^= _xbit(conj[tails[slot[depol]], pauli])
        # leaked: return maximally mixed
        back = lk
        leaked[active[back]] = False
        mixed[active[back]] = True
        t[active] = slot + 1
    mixed_bits = rng.integers(0, 2, size=shots)
    bits = np.where(mixed, mixed_bits, flip & 1)
    if readout_error > 0:
        bits ^= (rng.random(shots) < readout_error).astype(np.int64)
    return np.where(leaked, 2, bits).astype(np.uint16)


def simulate_leakage_rb(
    spec: LeakageSpec,
    lengths,
    seeds: int,
    shots: int,
    readout_error: float = 0.0,
    rng_seed: int = 0,
    jobs: Optional[int] = None,
) -> RBDataset:
    """Single-qubit RB with a leakage level read out as outcome 2."""
    lengths = np.asarray(lengths, dtype=np.int64)
    tasks = [
        (spec, int(m), shots, readout_error, int(rng_seed), li, ki) for li, m in enumerate(lengths) for ki in range(seeds)
    ]
    cells = _run_cells(simulate_leakage_cell, tasks, jobs)
    out = np.stack(cells).reshape(lengths.size, seeds, shots)
    return RBDataset(
        lengths=lengths,
        n_seeds=seeds,
        shots=shots,
        n_qubits=1,
        outcomes=out,
        gates_per_clifford=float(gates_per_clifford()),
        levels=3,
        meta={"rng_seed": int(rng_seed), "readout_error": readout_error},
    )
