import math

import numpy as np
import pytest

from hvl.model import build_effective_coefficient
from hvl.observables import expectation, power_weight, state_norm
from hvl.oracles import (
    hydrogen_state,
    inverse_square_state,
    massless_kg_state,
    oscillator_state,
)
from hvl.specfun import bessel_i


def ode_residual(state):
    """|R'' + (2/r) R' + L R| relative to max |L R| on the grid interior."""
    r = state.grid.r
    sl = slice(2, -2)
    coeff = build_effective_coefficient(state.problem, state.eigenvalue)
    L = coeff.a(r) - state.l * (state.l + 1) / r ** 2
    resid = state.R2 + 2.0 / r * state.R1 + L * state.R
    return np.max(np.abs(resid[sl])) / np.max(np.abs(L[sl] * state.R[sl]))


def test_hydrogen_ground_state_values():
    st = hydrogen_state(1, 0)
    assert st.eigenvalue == pytest.approx(-0.5, rel=1e-14)
    # R = 2 exp(-r)
    i = np.searchsorted(st.grid.r, 1.0)
    assert st.R[i] == pytest.approx(2 * math.exp(-st.grid.r[i]), rel=1e-12)
    assert st.origin_fit().a_s == pytest.approx(2.0, rel=1e-14)


def test_hydrogen_2p():
    st = hydrogen_state(2, 1)
    assert st.eigenvalue == pytest.approx(-0.125, rel=1e-14)
    assert st.origin_fit().a_s == pytest.approx(1 / (2 * math.sqrt(6)), rel=1e-13)


def test_oracle_normalization():
    for st in [hydrogen_state(1, 0), hydrogen_state(3, 1),
               oscillator_state(1, 1), inverse_square_state(0.2, 1.0),
               massless_kg_state(0.3)]:
        assert st.norm_check == pytest.approx(1.0, abs=1e-10), st.provenance


def test_oracle_ode_residual():
    for st in [hydrogen_state(1, 0), hydrogen_state(2, 1),
               oscillator_state(0, 0), oscillator_state(2, 1),
               inverse_square_state(0.2, 1.0), massless_kg_state(0.2)]:
        assert ode_residual(st) < 1e-8, st.provenance


def test_oscillator_spectrum():
    assert oscillator_state(0, 0).eigenvalue == pytest.approx(1.5)
    assert oscillator_state(1, 0).eigenvalue == pytest.approx(3.5)
    assert oscillator_state(0, 0, omega=2.0).eigenvalue == pytest.approx(3.0)


def test_oscillator_ground_moment():
    st = oscillator_state(0, 0)
    assert expectation(st, power_weight(2)) == pytest.approx(1.5, rel=1e-7)


def test_hydrogen_moments():
    st = hydrogen_state(1, 0)
    assert expectation(st, power_weight(-1)) == pytest.approx(1.0, rel=1e-7)
    assert expectation(st, power_weight(1)) == pytest.approx(1.5, rel=1e-7)
    assert expectation(st, power_weight(-2)) == pytest.approx(2.0, rel=1e-7)
    st2 = hydrogen_state(2, 1)
    assert expectation(st2, power_weight(-4)) == pytest.approx(1 / 24, rel=1e-7)
    assert expectation(st2, power_weight(-3)) == pytest.approx(1 / 24, rel=1e-7)
    assert expectation(st2, power_weight(-1)) == pytest.approx(1 / 4, rel=1e-7)


def test_inverse_square_closures():
    st = inverse_square_state(0.2, 1.0, 1.0)
    assert st.eigenvalue == pytest.approx(-0.5, rel=1e-14)
    f = st.origin_fit()
    assert f.a_st * f.a_add == pytest.approx(-1.0 / (2 * 0.2 ** 2), rel=1e-12)
    # (P^2/m) a_st a_add = E exactly
    assert 0.2 ** 2 * f.a_st * f.a_add == pytest.approx(st.eigenvalue, rel=1e-12)


def test_massless_kg_closures():
    st = massless_kg_state(0.3, 1.0)
    f = st.origin_fit()
    assert 2 * 0.3 ** 2 * f.a_st * f.a_add == pytest.approx(-1.0, rel=1e-12)
    assert st.eigenvalue == 0.0


def test_massless_kg_equal_branch_weights():
    # expressing N sqrt(m/r) K_P(mr) in the growing/decaying pair of
    # modified Bessel functions gives opposite coefficients
    P, m = 0.3, 1.0
    st = massless_kg_state(P, m)
    r = st.grid.r[st.grid.i_switch + 10]
    # solve [I_P, I_-P] c = R sqrt(r)/N at two radii; expect c2 = -c1
    r2 = st.grid.r[st.grid.i_switch + 400]
    A = np.array([[bessel_i(P, m * r), bessel_i(-P, m * r)],
                  [bessel_i(P, m * r2), bessel_i(-P, m * r2)]])
    i1 = int(np.searchsorted(st.grid.r, r))
    i2 = int(np.searchsorted(st.grid.r, r2))
    b = np.array([st.R[i1] * math.sqrt(r), st.R[i2] * math.sqrt(r2)])
    c = np.linalg.solve(A, b)
    assert c[1] == pytest.approx(-c[0], rel=1e-8)


def test_massless_kg_large_r_decay():
    # r R e^{mr} tends to a constant (R itself falls like e^{-mr}/r)
    st = massless_kg_state(0.2, 1.0)
    r = st.grid.r
    i = int(np.searchsorted(r, 20.0))
    val = st.R[i] * math.exp(r[i]) * r[i]
    ref = st.R[i - 200] * math.exp(r[i - 200]) * r[i - 200]
    assert val / ref == pytest.approx(1.0, abs=1e-3)


def test_norm_via_state_norm_matches_norm_check():
    st = hydrogen_state(2, 0)
    assert state_norm(st) == pytest.approx(st.norm_check, rel=1e-12)
