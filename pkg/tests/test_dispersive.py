import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import solve_ivp

from dispersive_kit.dispersive import (
    SingularDetuningError,
    ac_stark_shift,
    chi_from_g,
    coherence_limited_epg,
    detuned_photons,
    dispersive_shift_numeric,
    excited_photons_resonant,
    measurement_dephasing_rate,
    n_crit,
    photon_calibration_constant,
    pure_dephasing_time,
    resonant_dephasing_rate,
    steady_state_photons,
)

from oracles import transmon_cavity_chi


def test_chi_matches_diagonalisation_example():
    assert chi_from_g(50, -4.0, 200) == pytest.approx(transmon_cavity_chi(50, -4.0, 200), rel=0.02)


@settings(max_examples=40, deadline=None)
@given(
    g=st.floats(10, 100),
    delta=st.floats(1.0, 5.0),
    sign=st.sampled_from((-1.0, 1.0)),
    ec=st.floats(150, 300),
)
def test_chi_within_two_percent_of_oracle_in_dispersive_regime(g, delta, sign, ec):
    d = sign * delta
    if g / abs(d * 1e3) > 0.05 or abs(d * 1e3 - ec) < 500:
        return
    assert chi_from_g(g, d, ec) == pytest.approx(transmon_cavity_chi(g, d, ec), rel=0.02)


def test_numeric_shift_agrees_with_independent_oracle():
    for g, d in ((50, -4.0), (124, -3.987), (80, 2.0)):
        assert dispersive_shift_numeric(g, d, 200, 15) == pytest.approx(transmon_cavity_chi(g, d, 200), rel=1e-9)


def test_chi_singular_and_invalid():
    with pytest.raises(SingularDetuningError):
        chi_from_g(50, 0.0, 200)
    with pytest.raises(SingularDetuningError):
        chi_from_g(50, 0.2, 200)
    with pytest.raises(ValueError):
        chi_from_g(-1, -1.0, 200)


def test_n_crit_values_and_errors():
    assert n_crit(-3.987, 124) == pytest.approx((3987 / 248) ** 2)
    assert round(n_crit(-3.987, 124)) == 258
    with pytest.raises(ZeroDivisionError):
        n_crit(-4.0, 0.0)
    with pytest.raises(ValueError):
        n_crit(-4.0, -10.0)


def test_stark_shift_is_linear():
    assert ac_stark_shift(-0.165, 10) == pytest.approx(-3.3)
    with pytest.raises(ValueError):
        ac_stark_shift(1.0, -1)


def _ode_photons(drive, kappa, detuning):
    # da/dt = -(i detuning + kappa/2) a - i drive, angular units
    w = 2 * np.pi
    rhs = lambda t, y: [
        (-(1j * w * detuning + w * kappa / 2) * (y[0] + 1j * y[1]) - 1j * w * drive).real,
        (-(1j * w * detuning + w * kappa / 2) * (y[0] + 1j * y[1]) - 1j * w * drive).imag,
    ]
    sol = solve_ivp(rhs, (0, 40 / kappa), [0.0, 0.0], rtol=1e-10, atol=1e-12)
    return sol.y[0, -1] ** 2 + sol.y[1, -1] ** 2


def test_steady_state_photons_example_and_ode_oracle():
    n = steady_state_photons(1.0, 0.1, 5.0)
    assert n == pytest.approx(0.0399, abs=1e-4)  # example value quoted to four decimals
    assert n == pytest.approx(_ode_photons(1.0, 0.1, 5.0), rel=1e-4)


def test_detuned_limit():
    assert detuned_photons(1.0, 50.0) == pytest.approx(steady_state_photons(1.0, 0.2, 50.0), rel=1e-4)
    with pytest.raises(ZeroDivisionError):
        detuned_photons(1.0, 0.0)


def test_dephasing_rates_consistent():
    chi, kappa, ng = -0.165, 0.2, 3.0
    ne = excited_photons_resonant(chi, kappa, ng)
    # at the bare resonator the general form reduces to the resonant one
    general = measurement_dephasing_rate(chi, kappa, ng, ne, detuning=0.0)
    assert general == pytest.approx(resonant_dephasing_rate(chi, kappa, ng), rel=1e-12)


def test_calibration_constant_inverts_dephasing_slope():
    chi, kappa, c_true = -0.165, 0.2, 7.3
    slope = resonant_dephasing_rate(chi, kappa, c_true * 1.0)  # per unit power
    assert photon_calibration_constant(kappa, chi, slope) == pytest.approx(c_true)
    with pytest.raises(ZeroDivisionError):
        photon_calibration_constant(kappa, 0.0, slope)


def test_pure_dephasing_time_edges():
    assert pure_dephasing_time(106, 101) == pytest.approx(1 / (1 / 101 - 1 / 212))
    assert pure_dephasing_time(100, 200) == math.inf
    with pytest.raises(ValueError):
        pure_dephasing_time(100, 250)


@given(T1=st.floats(20, 500), T2=st.floats(20, 500), tau=st.floats(5, 100))
def test_coherence_epg_small_tau_limit(T1, T2, tau):
    v = coherence_limited_epg(T1, T2, tau)
    approx = tau * 1e-3 / 6 * (1 / T1 + 2 / T2)
    assert v == pytest.approx(approx, rel=3e-3)  # second-order term ~ tau / (2 T)
    assert 0 < v < 0.5
