import math

import numpy as np
import pytest

from hvl.errors import DivergenceError, PreconditionError
from hvl.model import (
    Coulomb,
    InverseSquare,
    PowerLaw,
    RadialProblem,
    Schroedinger,
    SumPotential,
)
from hvl.observables import (
    Weight,
    derivative_at_origin,
    expectation,
    fit_origin,
    power_weight,
    state_norm,
)
from hvl.oracles import hydrogen_state, inverse_square_state, oscillator_state
from hvl.solver import BoundaryCondition, solve_bound_state


def test_normalization_is_unity():
    for st in [hydrogen_state(1, 0), oscillator_state(0, 0)]:
        assert expectation(st, power_weight(0)) == pytest.approx(1.0, abs=1e-8)


def test_hydrogen_moments_at_stated_tolerances():
    st = hydrogen_state(1, 0)
    assert expectation(st, power_weight(-1)) == pytest.approx(1.0, rel=1e-7)
    assert expectation(st, power_weight(1)) == pytest.approx(1.5, rel=1e-7)


def test_oscillator_r2_moment():
    st = oscillator_state(0, 0)
    assert expectation(st, power_weight(2)) == pytest.approx(1.5, rel=1e-7)


def test_expectation_linearity():
    st = hydrogen_state(2, 0)
    a, b = 0.7, -2.3
    w1, w2 = power_weight(1), power_weight(-1)
    combo = Weight.from_power_terms([(a, 1.0), (b, -1.0)])
    lhs = expectation(st, combo)
    rhs = a * expectation(st, w1) + b * expectation(st, w2)
    assert lhs == pytest.approx(rhs, rel=1e-12)


def test_fit_origin_hydrogen_amplitude():
    st = hydrogen_state(1, 0)
    fit = fit_origin(st)
    assert fit.kind == "regular"
    assert fit.a_s == pytest.approx(2.0, abs=1e-4)
    assert fit.residual < 1e-3


def test_fit_origin_inverse_square_product():
    st = inverse_square_state(0.2, 1.0, 1.0)
    fit = fit_origin(st)
    assert fit.a_st * fit.a_add == pytest.approx(-12.5, rel=1e-3)


def test_fit_origin_solved_pure_standard_has_no_second_branch():
    # a confined inverse-square problem solved with tau = 0 must not leak
    # any second-branch coefficient through the fit
    problem = RadialProblem(
        Schroedinger(1.0),
        SumPotential([InverseSquare(0.105), PowerLaw(0.3, 1.0)]), l=0)
    pure = solve_bound_state(problem, BoundaryCondition.singular(0.2, 0.0),
                             0, (-4.0, 4.0))
    fit = fit_origin(pure)
    assert fit.a_add == 0.0


def test_fit_window_shift_robustness():
    st = inverse_square_state(0.2, 1.0, 1.0)
    base = fit_origin(st)
    shifted = fit_origin(st, r_lo=4e-6, r_hi=2e-4)
    assert shifted.a_st == pytest.approx(base.a_st, rel=5e-3)
    assert shifted.a_add == pytest.approx(base.a_add, rel=5e-3)


def test_singular_log_fit_reproduces_state():
    problem = RadialProblem(Schroedinger(1.0), InverseSquare(0.125), l=0)
    bc = BoundaryCondition.singular_log(1.0)
    kappa = 2.0 * math.exp(-0.5772156649015329) * math.e
    e_exact = -kappa ** 2 / 2.0
    st = solve_bound_state(problem, bc, 0, (1.3 * e_exact, 0.7 * e_exact))
    fit = fit_origin(st)
    assert fit.kind == "singular-log"
    assert fit.residual < 1e-3
    r = st.grid.r
    win = (r >= fit.fit_window[0]) & (r <= fit.fit_window[1])
    rms = np.sqrt(np.mean((fit.evaluate(r[win]) - st.R[win]) ** 2))
    assert rms < 1e-3 * np.sqrt(np.mean(st.R[win] ** 2))
    # mixing ratio reproduces the requested tau
    assert fit.a_add / fit.a_st == pytest.approx(1.0, rel=2e-3)


def test_derivative_at_origin_examples():
    assert derivative_at_origin(hydrogen_state(1, 0)) == pytest.approx(2.0, abs=1e-4)
    assert derivative_at_origin(hydrogen_state(2, 1)) == pytest.approx(
        1.0 / (2.0 * math.sqrt(6.0)), abs=1e-4)
    assert derivative_at_origin(oscillator_state(0, 0)) == pytest.approx(
        2.0 / math.pi ** 0.25, abs=1e-4)


def test_derivative_at_origin_rejects_singular():
    with pytest.raises(PreconditionError):
        derivative_at_origin(inverse_square_state(0.2, 1.0))


def test_singular_requires_declared_exponent():
    st = inverse_square_state(0.2, 1.0)
    with pytest.raises(PreconditionError):
        expectation(st, lambda r: 1.0 / r)


def test_declared_divergence_detected():
    st = inverse_square_state(0.2, 1.0)
    with pytest.raises(DivergenceError):
        expectation(st, power_weight(-2))
    # and the integrable neighbour is fine
    val = expectation(st, power_weight(-1))
    assert np.isfinite(val)


def test_quadrature_self_consistency_under_grid_doubling():
    st = hydrogen_state(1, 0)
    fine = hydrogen_state(1, 0, grid=st.grid.refined())
    for w in [power_weight(0), power_weight(1), power_weight(-1),
              power_weight(-2)]:
        a = expectation(st, w)
        b = expectation(fine, w)
        assert abs(a - b) / abs(b) < 1e-8, w.name


def test_norm_includes_origin_sliver():
    st = inverse_square_state(0.45, 1.0, 1.0)
    # the second branch contributes a visible [0, r_min] sliver at high P
    full = state_norm(st)
    assert full == pytest.approx(1.0, abs=1e-8)
