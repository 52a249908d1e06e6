import itertools
import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dispersive_kit.synth.clifford import (
    PAULIS,
    clifford_compile,
    compose,
    gates_per_clifford,
    sequence_unitary,
    tables,
)
from dispersive_kit.synth.iq import gaussian_fidelity, gen_iq_shots
from dispersive_kit.synth.rb import (
    LeakageSpec,
    NoiseChannelSpec,
    RBDataset,
    expected_correlator,
    label_to_mask,
    load_rb_dataset,
    mask_to_label,
    simulate_leakage_rb,
    simulate_rb,
)
from dispersive_kit.synth.traces import DecayParams, gen_decay_trace
from dispersive_kit.synth.transmon import (
    NonConvergenceError,
    generalized_rabi_rate,
    simulate_coupled_drive,
    simulate_driven_transmon,
)
from dispersive_kit.crosstalk import epsilon_J_perturbative


def _same_up_to_phase(u, v):
    k = np.argmax(np.abs(v))
    ph = u.flat[k] / v.flat[k]
    return abs(abs(ph) - 1) < 1e-9 and np.allclose(u, ph * v, atol=1e-9)


# clifford -----------------------------------------------------------------


def test_clifford_group_table_matches_matrix_products():
    tb = tables()
    U = tb.unitaries
    assert len(U) == 24
    for a, b in itertools.product(range(24), repeat=2):
        assert _same_up_to_phase(U[a] @ U[b], U[tb.mult[a, b]])
    # every element is distinct up to phase
    for a, b in itertools.combinations(range(24), 2):
        assert not _same_up_to_phase(U[a], U[b])


def test_clifford_normalises_pauli_group():
    tb = tables()
    for c in range(24):
        for p in range(4):
            conj = tb.unitaries[c] @ PAULIS[p] @ tb.unitaries[c].conj().T
            assert _same_up_to_phase(conj, PAULIS[tb.pauli_conj[c, p]])


def test_decompositions_reproduce_elements():
    tb = tables()
    for c, gates in enumerate(tb.decompositions):
        assert _same_up_to_phase(sequence_unitary(gates), tb.unitaries[c])


def test_gates_per_clifford_is_exact_fraction():
    g = gates_per_clifford()
    assert isinstance(g, Fraction) and g == 1


@settings(max_examples=50, deadline=None)
@given(st.lists(st.integers(0, 23), min_size=1, max_size=30))
def test_compiled_sequence_is_identity(seq):
    comp = clifford_compile(seq)
    assert _same_up_to_phase(sequence_unitary(comp.gates), np.eye(2))
    assert tables().mult[comp.inverse, compose(seq)] == 0


def test_compile_edge_cases():
    assert clifford_compile([]).gates == ()
    with pytest.raises(ValueError):
        clifford_compile([24])


# traces -------------------------------------------------------------------


def test_t1_value_at_decay_constant():
    tr = gen_decay_trace("t1", DecayParams(T=179.0, amplitude=0.5, offset=0.5), [0.0, 179.0])
    assert tr.signal[1] == pytest.approx(0.5 * math.exp(-1) + 0.5)


def test_ramsey_zero_crossings():
    t = np.linspace(0.5, 12.5, 12001)
    tr = gen_decay_trace("ramsey", DecayParams(T=1e9, f_detune=0.25), t)
    s = tr.signal - 0.5
    idx = np.where((s[:-1] > 0) != (s[1:] > 0))[0]
    assert np.diff(t[idx]) == pytest.approx(2.0, abs=2e-3)


def test_trace_generation_is_seeded():
    a = gen_decay_trace("t1", DecayParams(T=50.0), np.arange(10.0), 0.1, 7)
    b = gen_decay_trace("t1", DecayParams(T=50.0), np.arange(10.0), 0.1, 7)
    np.testing.assert_array_equal(a.signal, b.signal)


# iq -----------------------------------------------------------------------


@pytest.mark.parametrize("sep", [1.0, 3.0, 4.5])
def test_iq_shots_match_gaussian_fidelity(sep):
    shots = gen_iq_shots(sep, 200_000, rng_seed=3)
    p10 = np.mean(shots.assigned[shots.labels == 0] == 1)
    p01 = np.mean(shots.assigned[shots.labels == 1] == 0)
    assert 1 - p10 - p01 == pytest.approx(gaussian_fidelity(sep), abs=0.01)


def test_iq_limits():
    assert gaussian_fidelity(math.inf) == 1.0
    assert gaussian_fidelity(0.0) == 0.0
    s = gen_iq_shots(math.inf, 100)
    np.testing.assert_array_equal(s.assigned, s.labels)
    with pytest.raises(ValueError):
        gen_iq_shots(1.0, 0)


# rb -----------------------------------------------------------------------


@given(st.integers(1, 15))
def test_label_mask_round_trip(mask):
    assert label_to_mask(mask_to_label(mask, 4)) == mask


def test_channel_validation_and_product():
    with pytest.raises(ValueError):
        NoiseChannelSpec(2, {4: 0.1})
    with pytest.raises(ValueError):
        NoiseChannelSpec(2, {1: 0.7, 2: 0.7})
    ch = NoiseChannelSpec.product([0.01, 0.02])
    assert ch.alpha(1) == pytest.approx(0.99)
    assert ch.alpha(3) == pytest.approx(1 - (1 - 0.99 * 0.98))
    assert NoiseChannelSpec(2, {"11": 0.1}).eps == {3: 0.1}


def test_rb_correlators_match_expected_mean():
    ch = NoiseChannelSpec(2, {1: 0.01, 2: 0.02, 3: 0.005})
    ds = simulate_rb(2, ch, [5, 40], seeds=40, shots=500, readout_error=0.01, rng_seed=11)
    for li, m in enumerate(ds.lengths):
        for mask in (1, 2, 3):
            vals = np.ones(ds.outcomes.shape[1:])
            for q in range(2):
                if mask >> q & 1:
                    vals = vals * (1 - 2 * ds.qubit_values(q)[li].astype(int))
            mean = vals.mean()
            se = vals.std() / math.sqrt(vals.size)
            assert abs(mean - expected_correlator(ch, mask, int(m), 0.01)) < 4 * se


def test_rb_deterministic_across_jobs_and_round_trip(tmp_path):
    ch = NoiseChannelSpec.product([0.003, 0.004, 0.002])
    a = simulate_rb(3, ch, [1, 10, 30], seeds=4, shots=50, rng_seed=5, jobs=1)
    b = simulate_rb(3, ch, [1, 10, 30], seeds=4, shots=50, rng_seed=5, jobs=2)
    np.testing.assert_array_equal(a.outcomes, b.outcomes)
    path = tmp_path / "ds.json"
    a.to_json(path)
    back = load_rb_dataset(path)
    assert isinstance(back, RBDataset)
    np.testing.assert_array_equal(back.outcomes, a.outcomes)
    np.testing.assert_array_equal(back.lengths, a.lengths)
    assert back.gates_per_clifford == a.gates_per_clifford


def test_rb_input_validation():
    ch = NoiseChannelSpec(1, {1: 0.01})
    with pytest.raises(ValueError):
        simulate_rb(2, ch, [1], 1, 1)
    with pytest.raises(ValueError):
        simulate_rb(1, ch, [-1], 1, 1)
    with pytest.raises(ValueError):
        simulate_rb(1, ch, [1], 1, 1, readout_error=0.6)


def test_leakage_simulation_tracks_rate_model():
    spec = LeakageSpec(L_up=2e-3, L_down=5e-3, eps=3e-3)
    lengths = [10, 100, 400]
    ds = simulate_leakage_rb(spec, lengths, seeds=10, shots=2000, rng_seed=2)
    vals = ds.qubit_values(0)
    n_steps = np.asarray(lengths) + 1
    leak = (vals == 2).mean(axis=(1, 2))
    surv = (vals == 0).mean(axis=(1, 2))
    np.testing.assert_allclose(leak, spec.leaked_population(n_steps), atol=0.01)
    np.testing.assert_allclose(surv, spec.survival(n_steps), atol=0.015)
    with pytest.raises(ValueError):
        LeakageSpec(-0.1, 0.0, 0.0)


# transmon -----------------------------------------------------------------


@pytest.mark.parametrize("m", [0.5, 2.0, 7.0])
def test_two_level_rate_equals_drive(m):
    assert simulate_driven_transmon(2, -200.0, m).rate == pytest.approx(m, rel=2e-3)


def test_detuned_two_level_generalised_rate():
    r = simulate_driven_transmon(2, -200.0, 1.0, detuning=3.0)
    assert r.rate == pytest.approx(generalized_rabi_rate(1.0, 3.0), rel=2e-3)


def test_ten_level_weak_drive_perturbative_limit():
    assert simulate_driven_transmon(10, -200.0, 2.0).rate == pytest.approx(2.0, rel=0.01)


def test_short_duration_raises():
    with pytest.raises(NonConvergenceError):
        simulate_driven_transmon(2, -200.0, 1.0, duration=0.5)


def test_coupled_drive_matches_perturbative_coupling():
    delta, alpha_j, J, drive = 64.0, -199.0, 1.0, 4.0
    r = simulate_coupled_drive(delta, -198.0, alpha_j, J, drive)
    assert r.rate == pytest.approx(abs(epsilon_J_perturbative(J, delta, alpha_j, drive) * drive), rel=0.02)
