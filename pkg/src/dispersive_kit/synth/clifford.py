"""Single-qubit Clifford group, its gate decomposition and Pauli action.

The 24 group elements are generated by brute-force closure of ``X90`` and
``Z90`` as 2x2 unitaries modulo global phase. Each element is compiled to the
fewest physical pulses from ``{I, X90, X180}`` interleaved with virtual
``Z(k * 90 deg)`` frame changes, found by exhaustive search over
``Z(a) P Z(b)``. Pure frame changes still occupy one time slot, so they are
padded with an explicit ``I`` pulse.

Gate lists are applied left to right in time; unitaries compose as
``U = U_last @ ... @ U_first``.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

import numpy as np

N_CLIFFORD = 24
PHYSICAL = ("I", "X90", "X180")

_I2 = np.eye(2, dtype=complex)
_X = np.array([[0, 1], [1, 0]], dtype=complex)
_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
_Z = np.array([[1, 0], [0, -1]], dtype=complex)
PAULIS = (_I2, _X, _Y, _Z)  # index 0=I 1=X 2=Y 3=Z


def _rx(theta: float) -> np.ndarray:
    return np.cos(theta / 2) * _I2 - 1j * np.sin(theta / 2) * _X


def _rz(theta: float) -> np.ndarray:
    return np.cos(theta / 2) * _I2 - 1j * np.sin(theta / 2) * _Z


def gate_unitary(gate: tuple) -> np.ndarray:
    """Unitary of a compiled gate tuple, e.g. ``("X90",)`` or ``("Z", 2)``."""
    name = gate[0]
    if name == "I":
        return _I2
    if name == "X90":
        return _rx(np.pi / 2)
    if name == "X180":
        return _rx(np.pi)
    if name == "Z":
        return _rz(gate[1] * np.pi / 2)
    raise ValueError(f"unknown gate {gate!r}")


def _key(u: np.ndarray) -> tuple:
    flat = u.ravel()
    k = int(np.argmax(np.abs(flat) > 1e-9))
    v = flat / (flat[k] / abs(flat[k]))
    return tuple(np.round(v.real, 8) + 0.0) + tuple(np.round(v.imag, 8) + 0.0)


@dataclass(frozen=True)
class CliffordTables:
    unitaries: np.ndarray  # (24, 2, 2)
    mult: np.ndarray  # mult[a, b] = index of U_a @ U_b
    inverse: np.ndarray
    pauli_conj: np.ndarray  # pauli_conj[c, p] = index of U_c P_p U_c^dag up to sign
    decompositions: tuple

    def index_of(self, u: np.ndarray) -> int:
        k = _key(u)
        for i, v in enumerate(self.unitaries):
            if _key(v) == k:
                return i
        raise ValueError("matrix is not a Clifford element")


@lru_cache(maxsize=1)
def tables() -> CliffordTables:
    gens = [_rx(np.pi / 2), _rz(np.pi / 2)]
    elems = [_I2]
    keys = {_key(_I2): 0}
    frontier = [_I2]
    while frontier:
        nxt = []
        for u in frontier:
            for g in gens:
                v = g @ u
                k = _key(v)
                if k not in keys:
                    keys[k] = len(elems)
                    elems.append(v)
                    nxt.append(v)
        frontier = nxt
    if len(elems) != N_CLIFFORD:
        raise AssertionError(f"closure produced {len(elems)} elements")
    n = len(elems)
    mult = np.empty((n, n), dtype=np.int64)
    for a in range(n):
        for b in range(n):
            mult[a, b] = keys[_key(elems[a] @ elems[b])]
    inverse = np.array([int(np.where(mult[a] == 0)[0][0]) for a in range(n)])
    pauli_keys = [_key(p) for p in PAULIS]
    conj = np.empty((n, 4), dtype=np.int64)
    for c in range(n):
        for p in range(4):
            conj[c, p] = pauli_keys.index(_key(elems[c] @ PAULIS[p] @ elems[c].conj().T))
    decomp = [None] * n
    # search: Z(b) after pulse after Z(a); fewest pulses first, then fewest frame changes
    candidates = []
    for pulse in PHYSICAL:
        for a, b in itertools.product(range(4), repeat=2):
            gl = []
            if a:
                gl.append(("Z", a))
            gl.append((pulse,))
            if b:
                gl.append(("Z", b))
            candidates.append(gl)
    candidates.sort(key=lambda gl: (len(gl), gl[0][0] != "I"))
    for gl in candidates:
        u = _I2
        for g in gl:
            u = gate_unitary(g) @ u
        idx = keys[_key(u)]
        if decomp[idx] is None:
            decomp[idx] = tuple(gl)
    if any(d is None for d in decomp):
        raise AssertionError("decomposition search left elements uncovered")
    return CliffordTables(np.array(elems), mult, inverse, conj, tuple(decomp))


def physical_count(gates) -> int:
    return sum(1 for g in gates if g[0] in PHYSICAL)


def gates_per_clifford() -> Fraction:
    """Average physical pulses per Clifford over the 24 compiled elements."""
    tb = tables()
    return Fraction(sum(physical_count(d) for d in tb.decompositions), N_CLIFFORD)


def compose(indices) -> int:
    """Group element of the sequence ``indices`` applied in time order."""
    tb = tables()
    acc = 0
    for c in indices:
        acc = tb.mult[c, acc]
    return int(acc)


@dataclass(frozen=True)
class CompiledSequence:
    gates: tuple
    inverse: int
    n_physical: int


def clifford_compile(indices) -> CompiledSequence:
    """Compile Clifford indices plus the inverting Clifford into physical gates.

    An empty sequence compiles to no gates with the identity as its inverse.
    """
    idx = [int(i) for i in indices]
    if any(not 0 <= i < N_CLIFFORD for i in idx):
        raise ValueError("Clifford indices must lie in [0, 24)")
    tb = tables()
    if not idx:
        return CompiledSequence((), 0, 0)
    inv = int(tb.inverse[compose(idx)])
    gates = []
    for c in idx + [inv]:
        gates.extend(tb.decompositions[c])
    return CompiledSequence(tuple(gates), inv, physical_count(gates))


def sequence_unitary(gates) -> np.ndarray:
    u = _I2
    for g in gates:
        u = gate_unitary(g) @ u
    return u


def tail_maps(seqs: np.ndarray) -> np.ndarray:
    """Clifford applied after each slot of each sequence.

    Args:
        seqs: integer array ``(..., L)`` of Clifford indices in time order,
            including the final inverse.

    Returns:
        Array of the same shape; entry ``j`` is the product of elements
        ``j+1 .. L-1``, so an error inserted after slot ``j`` reaches the
        measurement conjugated by it.
    """
    tb = tables()
    seqs = np.asarray(seqs)
    out = np.empty_like(seqs)
    acc = np.zeros(seqs.shape[:-1], dtype=seqs.dtype)
    for j in range(seqs.shape[-1] - 1, -1, -1):
        out[..., j] = acc
        acc = tb.mult[acc, seqs[..., j]]
    return out
