import math

import numpy as np
import pytest

from hvl.errors import ClassificationError
from hvl.model import (
    Coulomb,
    InverseSquare,
    KleinGordonOneBody,
    KleinGordonTwoBody,
    PowerLaw,
    RadialProblem,
    Schroedinger,
    SumPotential,
    build_effective_coefficient,
    classify_singularity,
)


def test_coulomb_is_regular_for_schroedinger():
    prob = RadialProblem(Schroedinger(1.0), Coulomb(1.0), l=0)
    assert classify_singularity(prob).kind == "regular"


def test_inverse_square_p_value():
    prob = RadialProblem(Schroedinger(1.0), InverseSquare(0.105), l=0)
    cls = classify_singularity(prob)
    assert cls.kind == "singular"
    assert cls.P == pytest.approx(0.2, abs=1e-14)


def test_log_case_at_exact_quarter():
    prob = RadialProblem(Schroedinger(1.0), InverseSquare(0.125), l=0)
    assert classify_singularity(prob).kind == "singular-log"


def test_two_body_kg_supercritical():
    prob = RadialProblem(KleinGordonTwoBody(1.0), Coulomb(1.2), l=0)
    assert classify_singularity(prob).kind == "supercritical"


def test_two_body_kg_singular_window():
    # P = sqrt(1/4 - alpha^2/4)
    prob = RadialProblem(KleinGordonTwoBody(1.0), Coulomb(0.8), l=0)
    cls = classify_singularity(prob)
    assert cls.kind == "singular"
    assert cls.P == pytest.approx(math.sqrt(0.25 - 0.16), rel=1e-14)


def test_one_body_kg_uses_unquartered_coupling():
    # P = sqrt((l+1/2)^2 - alpha^2): distinct from the two-body rule
    prob = RadialProblem(KleinGordonOneBody(1.0), Coulomb(0.3), l=0)
    cls = classify_singularity(prob)
    assert cls.P == pytest.approx(math.sqrt(0.25 - 0.09), rel=1e-14)


def test_standard_only_above_half():
    # same strength that is SAE-mixed at l=0 admits no second branch at l=1
    prob = RadialProblem(Schroedinger(1.0), InverseSquare(0.105), l=1)
    cls = classify_singularity(prob)
    assert cls.kind == "standard-only"
    assert cls.P > 0.5


def test_classification_ignores_regular_admixture():
    base = RadialProblem(Schroedinger(1.0), InverseSquare(0.105), l=0)
    mixed = base.with_potential(
        SumPotential([InverseSquare(0.105), Coulomb(0.7), PowerLaw(0.5, 2.0)])
    )
    a = classify_singularity(base)
    b = classify_singularity(mixed)
    assert b.kind == a.kind and b.P == pytest.approx(a.P, rel=1e-14)


def test_supersingular_rejected():
    prob = RadialProblem(Schroedinger(1.0), PowerLaw(-1.0, -3.0), l=0)
    with pytest.raises(ClassificationError):
        classify_singularity(prob)
    kg = RadialProblem(KleinGordonOneBody(1.0), InverseSquare(0.1), l=0)
    with pytest.raises(ClassificationError):
        classify_singularity(kg)


def test_p_closes_against_gamma():
    # P^2 + gamma = (l+1/2)^2 to machine precision whenever P is defined
    for l in [0, 1, 3]:
        for v0 in [0.02, 0.05, 0.09]:
            prob = RadialProblem(Schroedinger(1.3), InverseSquare(v0), l=l)
            cls = classify_singularity(prob)
            assert cls.kind in ("singular", "standard-only")
            assert cls.P ** 2 + cls.gamma == pytest.approx((l + 0.5) ** 2, rel=1e-14)


def test_effective_coefficient_schroedinger():
    prob = RadialProblem(Schroedinger(1.0), Coulomb(1.0), l=0)
    A = build_effective_coefficient(prob, -0.5)
    assert A.a(1.0) == pytest.approx(1.0, rel=1e-15)


def test_effective_coefficient_two_body_free():
    prob = RadialProblem(KleinGordonTwoBody(1.0), PowerLaw(0.0, 1.0), l=0)
    A = build_effective_coefficient(prob, 1.5)
    r = np.array([0.3, 2.0, 11.0])
    assert np.allclose(A.a(r), 1.5 ** 2 / 4 - 1.0, rtol=1e-15)


def test_effective_coefficient_one_body_kg():
    prob = RadialProblem(KleinGordonOneBody(1.0), Coulomb(0.5), l=0)
    A = build_effective_coefficient(prob, 0.9)
    assert A.a(1.0) == pytest.approx((0.9 + 0.5) ** 2 - 1.0, rel=1e-14)


def test_energy_shift_is_exactly_linear():
    prob = RadialProblem(Schroedinger(2.0), Coulomb(1.0), l=1)
    a1 = build_effective_coefficient(prob, -0.7)
    a2 = build_effective_coefficient(prob, -0.2)
    r = np.geomspace(1e-6, 30, 40)
    assert np.allclose(a2.a(r) - a1.a(r), 2 * 2.0 * 0.5, rtol=0, atol=1e-12)


def test_derivative_terms_match_numerical():
    prob = RadialProblem(
        KleinGordonTwoBody(1.0), SumPotential([Coulomb(0.8), PowerLaw(0.3, 1.0)]), l=0
    )
    A = build_effective_coefficient(prob, 0.7)
    r = np.array([0.2, 1.0, 4.0])
    h = 1e-6
    num = (A.a(r + h) - A.a(r - h)) / (2 * h)
    assert np.allclose(A.da(r), num, rtol=1e-8)


def test_virial_weight_kills_inverse_square():
    pot = SumPotential([InverseSquare(0.105), PowerLaw(0.3, 1.0)])
    terms = pot.virial_weight_terms()
    assert all(abs(n + 2.0) > 1e-9 for _, n in terms)
    # V + rV'/2 for v0 r is (3/2) v0 r
    assert terms == [(pytest.approx(0.45), 1.0)]
