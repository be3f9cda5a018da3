"""Domain model: central potentials, equation kinds, and the effective
radial coefficient A(r).

The governing radial equation in all three supported kinds is

    R'' + (2/r) R' + [A(r) - l(l+1)/r^2] R = 0

with A built from the potential and the current eigenvalue:

* nonrelativistic:        A = 2m (E - V)
* one-body relativistic:  A = (E - V)^2 - m^2
* two-body relativistic:  A = V^2/4 - M V/2 + M^2/4 - m^2   (equal masses,
  eigenvalue M = total mass of the composite)

Every potential decomposes into a finite sum of powers c * r^n.  That
decomposition, not numerical limits, drives the origin classification, and
it lets all identity integrands be assembled with exact cancellation of the
inverse-square pieces (which would otherwise be subtracted in floating
point at ~1e12 magnitudes near the inner grid edge).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np

from .errors import ClassificationError

__all__ = [
    "Potential", "Coulomb", "PowerLaw", "InverseSquare", "SumPotential",
    "Schroedinger", "KleinGordonOneBody", "KleinGordonTwoBody",
    "RadialProblem", "SingularityClass", "EffectiveCoefficient",
    "classify_singularity", "build_effective_coefficient", "merge_power_terms",
]


def merge_power_terms(terms, drop_tol=1e-12):
    """Combine (coef, exponent) pairs with equal exponents.

    Exponents are matched to 1e-9 (they come from float arithmetic on the
    same inputs, so genuine matches agree to an ulp).  Coefficients that
    cancel to below ``drop_tol`` of the largest magnitude seen for that
    exponent are dropped: this is what removes the inverse-square pieces
    from combinations in which they cancel identically.
    """
    groups: dict[float, list[float]] = {}
    for c, n in terms:
        if c == 0.0:
            continue
        key = round(float(n) * 1e9) / 1e9
        groups.setdefault(key, []).append((float(c), float(n)))
    out = []
    for key, entries in sorted(groups.items()):
        total = math.fsum(c for c, _ in entries)
        biggest = max(abs(c) for c, _ in entries)
        if biggest > 0 and abs(total) <= drop_tol * biggest:
            continue
        out.append((total, entries[0][1]))
    return out


class Potential:
    """Base class.  Subclasses provide power_terms(); V and V' follow."""

    def power_terms(self):
        raise NotImplementedError

    def v(self, r):
        r = np.asarray(r, dtype=float)
        total = np.zeros_like(r)
        for c, n in self.power_terms():
            total = total + c * r ** n
        return total

    def dv(self, r):
        r = np.asarray(r, dtype=float)
        total = np.zeros_like(r)
        for c, n in self.power_terms():
            if n != 0:
                total = total + c * n * r ** (n - 1.0)
        return total

    def dv_terms(self):
        return [(c * n, n - 1.0) for c, n in self.power_terms() if n != 0]

    def virial_weight_terms(self):
        """Power terms of V + r V'/2 with the r^-2 part cancelled exactly."""
        return merge_power_terms(
            [(c * (1.0 + n / 2.0), n) for c, n in self.power_terms()]
        )


@dataclass(frozen=True)
class Coulomb(Potential):
    """V = -alpha/r (attractive) or +alpha/r (repulsive), alpha > 0."""

    alpha: float
    attractive: bool = True

    def __post_init__(self):
        if self.alpha <= 0:
            raise ValueError("Coulomb coupling alpha must be positive")

    def power_terms(self):
        return [(-self.alpha if self.attractive else self.alpha, -1.0)]


@dataclass(frozen=True)
class PowerLaw(Potential):
    """V = v0 * r^n for real n."""

    v0: float
    n: float

    def power_terms(self):
        return [(self.v0, float(self.n))]


@dataclass(frozen=True)
class InverseSquare(Potential):
    """V = -v0 / r^2 with v0 > 0, i.e. r^2 V -> -v0 at the origin."""

    v0: float

    def __post_init__(self):
        if self.v0 <= 0:
            raise ValueError("InverseSquare strength v0 must be positive")

    def power_terms(self):
        return [(-self.v0, -2.0)]


@dataclass(frozen=True)
class SumPotential(Potential):
    terms: tuple = ()

    def __init__(self, terms: Sequence[Potential]):
        object.__setattr__(self, "terms", tuple(terms))

    def power_terms(self):
        out = []
        for t in self.terms:
            out.extend(t.power_terms())
        return merge_power_terms(out, drop_tol=0.0)


@dataclass(frozen=True)
class Schroedinger:
    mass: float

    def __post_init__(self):
        if self.mass <= 0:
            raise ValueError("mass must be positive")


@dataclass(frozen=True)
class KleinGordonOneBody:
    mass: float

    def __post_init__(self):
        if self.mass <= 0:
            raise ValueError("mass must be positive")


@dataclass(frozen=True)
class KleinGordonTwoBody:
    """Two equal-mass constituents; the eigenvalue is the total mass M."""

    mass: float

    def __post_init__(self):
        if self.mass <= 0:
            raise ValueError("mass must be positive")


EquationKind = Schroedinger | KleinGordonOneBody | KleinGordonTwoBody


@dataclass(frozen=True)
class RadialProblem:
    equation: EquationKind
    potential: Potential
    l: int = 0

    def __post_init__(self):
        if self.l < 0 or self.l != int(self.l):
            raise ValueError("l must be a non-negative integer")

    @property
    def s(self) -> int:
        # the centrifugal index equals l for all three equation kinds
        return self.l

    @property
    def eigenparameter_name(self) -> str:
        return "M" if isinstance(self.equation, KleinGordonTwoBody) else "E"

    def with_potential(self, potential):
        return replace(self, potential=potential)


@dataclass(frozen=True)
class SingularityClass:
    """Origin behaviour of the effective coefficient.

    kind is one of 'regular', 'singular', 'singular-log', 'standard-only',
    'supercritical'.  gamma = lim r^2 A(r); P = sqrt((l+1/2)^2 - gamma)
    where the radicand is non-negative.
    """

    kind: str
    P: float = 0.0
    gamma: float = 0.0

    @property
    def is_singular(self):
        return self.kind in ("singular", "singular-log", "standard-only")


def _coefficient_at(terms, exponent):
    return math.fsum(c for c, n in terms if abs(n - exponent) < 1e-12)


def classify_singularity(problem: RadialProblem) -> SingularityClass:
    """Classify the origin from potential metadata alone.

    gamma = lim r^2 A is assembled symbolically: for the nonrelativistic
    equation only an r^-2 potential term contributes (gamma = 2 m v0 with
    r^2 V -> -v0); for the relativistic kinds the square of an r^-1 term
    contributes (gamma = c1^2, or c1^2/4 for the two-body equation).
    """
    eq = problem.equation
    terms = problem.potential.power_terms()
    if any(n < -2.0 - 1e-12 for _, n in terms):
        raise ClassificationError("potential more singular than 1/r^2 is not supported")
    c2 = _coefficient_at(terms, -2.0)
    c1 = _coefficient_at(terms, -1.0)

    if isinstance(eq, Schroedinger):
        gamma = -2.0 * eq.mass * c2
    else:
        if c2 != 0.0:
            raise ClassificationError(
                "1/r^2 potential terms make the relativistic effective "
                "coefficient more singular than 1/r^2"
            )
        gamma = c1 * c1 / (4.0 if isinstance(eq, KleinGordonTwoBody) else 1.0)

    if gamma == 0.0:
        return SingularityClass("regular")

    radicand = (problem.l + 0.5) ** 2 - gamma
    if radicand < -1e-14:
        return SingularityClass("supercritical", gamma=gamma)
    if abs(radicand) <= 1e-14:
        return SingularityClass("singular-log", P=0.0, gamma=gamma)
    p = math.sqrt(radicand)
    if p >= 0.5:
        # no second square-integrable branch survives; only the standard
        # solution is admissible, so the mixing ratio is pinned to zero
        return SingularityClass("standard-only", P=p, gamma=gamma)
    return SingularityClass("singular", P=p, gamma=gamma)


@dataclass(frozen=True)
class EffectiveCoefficient:
    """A(r) = const + sum_k c_k r^{n_k}, with the analytic derivative.

    The power decomposition is retained so identity integrands can be
    merged exactly before any floating-point evaluation.
    """

    const: float
    terms: tuple = field(default_factory=tuple)

    def power_terms(self, include_const=True):
        out = [(self.const, 0.0)] if (include_const and self.const != 0.0) else []
        out.extend(self.terms)
        return out

    def a(self, r):
        r = np.asarray(r, dtype=float)
        total = np.full_like(r, self.const)
        for c, n in self.terms:
            total = total + c * r ** n
        return total

    def da(self, r):
        r = np.asarray(r, dtype=float)
        total = np.zeros_like(r)
        for c, n in self.terms:
            if n != 0:
                total = total + c * n * r ** (n - 1.0)
        return total

    def da_terms(self):
        return [(c * n, n - 1.0) for c, n in self.terms if n != 0]

    def l_callable(self, l):
        """L(r) = A(r) - l(l+1)/r^2 as a single callable."""
        cent = float(l * (l + 1))

        def L(r):
            r = np.asarray(r, dtype=float)
            return self.a(r) - cent / (r * r)

        return L


def _square_terms(terms):
    out = []
    for i, (ci, ni) in enumerate(terms):
        for cj, nj in terms:
            out.append((ci * cj, ni + nj))
    return merge_power_terms(out, drop_tol=0.0)


def build_effective_coefficient(problem: RadialProblem, eigenparameter: float) -> EffectiveCoefficient:
    """A(r) for the problem at the given eigenvalue (E, or M for two-body)."""
    eq = problem.equation
    vt = problem.potential.power_terms()
    if isinstance(eq, Schroedinger):
        const = 2.0 * eq.mass * eigenparameter
        terms = [(-2.0 * eq.mass * c, n) for c, n in vt]
    elif isinstance(eq, KleinGordonOneBody):
        e = eigenparameter
        const = e * e - eq.mass ** 2
        terms = [(-2.0 * e * c, n) for c, n in vt]
        terms.extend(_square_terms(vt))
    else:
        m_total = eigenparameter
        const = m_total ** 2 / 4.0 - eq.mass ** 2
        terms = [(-0.5 * m_total * c, n) for c, n in vt]
        terms.extend((0.25 * c, n) for c, n in _square_terms(vt))
    return EffectiveCoefficient(const, tuple(merge_power_terms(terms, drop_tol=0.0)))
