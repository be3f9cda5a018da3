import math

import numpy as np
import pytest
from scipy.integrate import quad

from hvl.errors import DivergenceError, PreconditionError
from hvl.identities import (
    IdentityReport,
    ProbeFunction,
    _kg_virial_weight,
    hypervirial_general,
    hypervirial_power,
    kg_virial,
    kramer_relation,
    origin_relations,
    oscillator_relation,
    recurrence_coefficients,
    virial,
)
from hvl.model import Coulomb, RadialProblem, Schroedinger
from hvl.observables import expectation, power_weight
from hvl.oracles import (
    hydrogen_state,
    inverse_square_state,
    massless_kg_state,
    oscillator_state,
)
from hvl.solver import BoundaryCondition, solve_bound_state


def test_probe_power_validates():
    ProbeFunction.power(2.5).validate()
    bad = ProbeFunction(
        f=lambda r: r ** 2, f1=lambda r: r, f2=lambda r: 2.0 * np.ones_like(np.asarray(r)),
        f3=lambda r: np.zeros_like(np.asarray(r)), small_r_terms=((1.0, 2.0),))
    with pytest.raises(PreconditionError):
        bad.validate()


def test_virial_hydrogen_ground():
    rep = virial(hydrogen_state(1, 0))
    assert rep.passed and rep.residual < 1e-6
    assert rep.lhs == pytest.approx(-0.5, rel=1e-12)
    assert rep.rhs == pytest.approx(-0.5, rel=1e-7)


def test_virial_oscillator_ground():
    rep = virial(oscillator_state(0, 0))
    assert rep.residual < 1e-6
    # V + rV'/2 = 2V for a quadratic potential: rhs = 2 <V> = 1.5
    assert rep.rhs == pytest.approx(1.5, rel=1e-7)


def test_virial_pure_inverse_square_is_all_boundary():
    # V + r V'/2 vanishes identically, so E equals the mixing term alone
    st = inverse_square_state(0.2, 1.0, 1.0)
    rep = virial(st)
    assert rep.residual < 1e-6
    f = st.origin_fit()
    assert rep.rhs == pytest.approx(0.2 ** 2 * f.a_st * f.a_add, rel=1e-12)
    assert rep.lhs == pytest.approx(-0.5)


def test_virial_extra_term_can_be_disabled():
    st = inverse_square_state(0.2, 1.0, 1.0)
    rep = virial(st, include_extra_term=False)
    assert not rep.passed  # demonstrates the mixing term is load-bearing


def test_hypervirial_general_f_r_reduces_to_virial():
    rep = hypervirial_general(hydrogen_state(1, 0), ProbeFunction.power(1))
    assert rep.residual < 1e-6


def test_hypervirial_general_const_probe_hydrogen():
    # f = 1: boundary term R(0)^2 = 4 equals -<A'> = 2m<V'> = 2<1/r^2> = 4
    rep = hypervirial_general(hydrogen_state(1, 0), ProbeFunction.power(0))
    assert rep.lhs == pytest.approx(4.0, rel=1e-10)
    assert rep.rhs == pytest.approx(4.0, rel=1e-6)
    assert rep.residual < 1e-6


def test_hypervirial_general_oscillator_cubic_probe_brute_force():
    st = oracle = oscillator_state(0, 0)
    rep = hypervirial_general(st, ProbeFunction.power(3))
    assert rep.residual < 1e-6
    # independent brute force with the analytic Gaussian state
    n2 = 4.0 / math.sqrt(math.pi)

    def dens(r):
        return n2 * math.exp(-r * r) * r * r

    def L(r):
        return 2.0 * (1.5 - 0.5 * r * r)

    def Lp(r):
        return -2.0 * r

    rhs_bf = -quad(lambda r: (2 * 3 * r ** 2 * L(r) + r ** 3 * Lp(r) + 3.0) * dens(r),
                   0, 12, limit=200)[0]
    # the moments cancel exactly here (27 - 30 + 3 = 0): compare at the
    # scale of the individual contributions
    scale = max(rep.terms)
    assert scale > 1.0
    assert abs(rep.rhs - rhs_bf) <= 1e-8 * scale
    assert rep.lhs == pytest.approx(0.0, abs=1e-12)


def test_hypervirial_power_virial_case_is_zero_sum():
    rep = hypervirial_power(hydrogen_state(1, 0), 1.0)
    assert rep.lhs == 0.0
    assert abs(rep.rhs) < 1e-6 * max(rep.terms)
    assert rep.residual < 1e-6


def test_hypervirial_power_2p_derivative_identity():
    # q = -2l on the 2p state: both sides equal (2l+1)^2 a_l^2 = 0.375
    rep = hypervirial_power(hydrogen_state(2, 1), -2.0)
    assert rep.lhs == pytest.approx(0.375, rel=1e-12)
    assert rep.rhs == pytest.approx(0.375, rel=1e-5)
    assert rep.residual < 1e-5


def test_hypervirial_power_singular_virial_member():
    st = inverse_square_state(0.2, 1.0, 1.0)
    rep = hypervirial_power(st, 1.0)
    # lhs = -4 P^2 a_st a_add = 2 kappa^2; rhs = -<2A + rA'> = -4mE
    assert rep.lhs == pytest.approx(2.0, rel=1e-12)
    assert rep.rhs == pytest.approx(2.0, rel=1e-4)
    assert rep.residual < 1e-4


def test_hypervirial_power_singular_delta_members():
    st = inverse_square_state(0.2, 1.0, 1.0)
    f = st.origin_fit()
    for q, lhs_expect in [(1.0 - 0.4, 4 * 0.04 * f.a_st ** 2),
                          (1.0 + 0.4, 4 * 0.04 * f.a_add ** 2)]:
        rep = hypervirial_power(st, q)
        assert rep.lhs == pytest.approx(lhs_expect, rel=1e-12)
        assert rep.residual < 1e-4, (q, rep)


def test_hypervirial_power_precondition_windows():
    with pytest.raises(PreconditionError):
        hypervirial_power(hydrogen_state(1, 0), -0.5)
    with pytest.raises(PreconditionError):
        hypervirial_power(inverse_square_state(0.2, 1.0), 0.5)


def _admissible_q(fit, rng):
    """A probe exponent whose averaged side converges for this state: above
    the boundary window, and for two-branch states either at one of the
    surviving boundary exponents or beyond the second branch's window."""
    if fit.kind == "regular":
        return -2.0 * fit.s + rng.uniform(0.0, 3.0)
    choices = [1.0 - 2.0 * fit.P, 1.0, 1.0 + 2.0 * fit.P,
               1.0 + 2.0 * fit.P + rng.uniform(0.1, 2.5)]
    return choices[rng.randint(len(choices))]


def test_general_matches_power_on_random_pairs():
    rng = np.random.RandomState(7)
    states = [hydrogen_state(1, 0), hydrogen_state(2, 1),
              oscillator_state(0, 0), inverse_square_state(0.2, 1.0)]
    for _ in range(20):
        st = states[rng.randint(len(states))]
        q = _admissible_q(st.origin_fit(), rng)
        a = hypervirial_power(st, q)
        b = hypervirial_general(st, ProbeFunction.power(q))
        scale = max(max(a.terms, default=0.0), abs(a.lhs), abs(a.rhs), 1e-300)
        assert abs(a.lhs - b.lhs) <= 1e-10 * scale
        assert abs(a.rhs - b.rhs) <= 1e-10 * scale


def test_kg_virial_massless_closure():
    for P in (0.2, 0.3):
        st = massless_kg_state(P, 1.0)
        rep = kg_virial(st)
        # <V^2/2 + (rV'/2)V - 2m^2> = -2 m^2 = 4 P^2 a_st a_add
        assert rep.lhs == pytest.approx(-2.0, rel=1e-9)
        assert rep.rhs == pytest.approx(-2.0, rel=1e-10)
        assert rep.residual < 1e-3


def test_kg_virial_attractive_and_repulsive_agree():
    a = kg_virial(massless_kg_state(0.2, 1.0, attractive=True))
    b = kg_virial(massless_kg_state(0.2, 1.0, attractive=False))
    assert a.passed and b.passed
    assert a.lhs == pytest.approx(b.lhs, rel=1e-12)


def test_kg_virial_free_limit_weight_vanishes():
    # V = 0 at M = 2m: every term of the combined weight cancels
    st = massless_kg_state(0.2, 1.0)

    class _Free:
        problem = type(st.problem)(st.problem.equation,
                                   st.problem.potential.__class__(1e-30), 0)

    from hvl.model import PowerLaw, KleinGordonTwoBody, RadialProblem
    free = type("S", (), {})()
    free.problem = RadialProblem(KleinGordonTwoBody(1.0), PowerLaw(0.0, 1.0), 0)
    w = _kg_virial_weight(free, 2.0)
    assert w.small_r_terms == ()
    r = np.array([0.5, 1.0, 3.0])
    assert np.allclose(w(r), 0.0)


def test_origin_relations_hydrogen_ground():
    reps = {r.identity_tag: r for r in origin_relations(hydrogen_state(1, 0))}
    amp = reps["origin-amplitude"]
    assert amp.lhs == pytest.approx(4.0, rel=1e-12)
    assert amp.residual < 1e-6
    dens = reps["origin-density"]
    assert dens.lhs == pytest.approx(1.0 / math.pi, rel=1e-12)
    assert dens.rhs == pytest.approx(1.0 / math.pi, rel=1e-6)


def test_origin_relations_2p():
    reps = {r.identity_tag: r for r in origin_relations(hydrogen_state(2, 1))}
    der = reps["origin-derivative"]
    assert der.lhs == pytest.approx(0.375, rel=1e-12)
    assert der.residual < 1e-5
    cent = reps["origin-centrifugal"]
    assert cent.lhs == pytest.approx(1.0 / 6.0, rel=1e-7)
    assert cent.rhs == pytest.approx(1.0 / 6.0, rel=1e-7)


def test_origin_relations_oscillator():
    reps = {r.identity_tag: r for r in origin_relations(oscillator_state(0, 0))}
    amp = reps["origin-amplitude"]
    assert amp.lhs == pytest.approx(4.0 / math.sqrt(math.pi), rel=1e-10)
    assert amp.residual < 1e-5


def test_origin_relations_refuse_singular():
    with pytest.raises(PreconditionError):
        origin_relations(inverse_square_state(0.2, 1.0))


def test_kramer_s0_and_s1_on_hydrogen():
    st = hydrogen_state(1, 0)
    rep0 = kramer_relation(0, 1.0, 1.0, 0).check(st)
    assert rep0.residual < 1e-7
    # s=0 reduces to <1/r> = -2E/alpha = 1
    assert expectation(st, power_weight(-1)) == pytest.approx(1.0, rel=1e-7)
    rep1 = kramer_relation(1, 1.0, 1.0, 0).check(st)
    assert rep1.residual < 1e-7
    # terms 2E*2*<r> = -3 and 3 alpha <1> = 3 cancel
    assert rep1.terms[0] == pytest.approx(-3.0, rel=1e-7)
    assert rep1.terms[1] == pytest.approx(3.0, rel=1e-10)


def test_oscillator_recurrence_s0():
    st = oscillator_state(0, 0)
    rep = oscillator_relation(0, 1.0, 1.0, 0).check(st)
    assert rep.residual < 1e-7
    assert rep.terms[0] == pytest.approx(3.0, rel=1e-9)
    assert rep.terms[1] == pytest.approx(-3.0, rel=1e-7)


def test_generic_recurrence_reduces_to_printed_forms():
    # Coulomb: v0 = -alpha, n = -1, q = s+1
    for s in [0.0, 1.0, 2.5]:
        gen = recurrence_coefficients(1.3, -0.8, -1.0, s + 1.0, 1)
        kra = kramer_relation(s, 1.3, 0.8, 1)
        for e in (-0.3, -0.11):
            assert gen.coefficients(e) == pytest.approx(kra.coefficients(e), rel=1e-14)
        assert gen.exponents == pytest.approx(kra.exponents)
    # harmonic: v0 = m omega^2/2, n = 2, q = s+1
    for s in [0.0, 2.0]:
        gen = recurrence_coefficients(1.0, 0.5 * 1.44, 2.0, s + 1.0, 0)
        osc = oscillator_relation(s, 1.0, 1.2, 0)
        for e in (1.5, 3.1):
            assert gen.coefficients(e) == pytest.approx(osc.coefficients(e), rel=1e-14)


def test_recurrences_on_numerically_solved_states():
    problem = RadialProblem(Schroedinger(1.0), Coulomb(1.0), l=0)
    st = solve_bound_state(problem, BoundaryCondition.regular(0), 0, (-0.6, -0.4))
    for s in (0, 1, 2, 3):
        rep = kramer_relation(s, 1.0, 1.0, 0).check(st)
        assert rep.residual < 1e-5, (s, rep.residual)


def test_virial_on_solved_singular_state():
    oracle = inverse_square_state(0.2, 1.0, 1.0)
    st = solve_bound_state(oracle.problem, oracle.bc, 0, (-0.7, -0.35))
    rep = virial(st, tolerance=1e-3)
    assert rep.passed, rep


def test_divergent_average_raises():
    st = inverse_square_state(0.2, 1.0, 1.0)
    with pytest.raises(DivergenceError):
        expectation(st, power_weight(-2))


def test_report_serialization_round_trip():
    rep = IdentityReport.build("virial", 1.0, 1.0 + 1e-9, 1e-6, "x", (2.0,))
    d = rep.as_dict()
    assert d["identity"] == "virial" and d["pass"]
    assert "norm" in d["inputs"]
