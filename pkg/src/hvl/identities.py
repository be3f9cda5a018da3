"""Bound-state identities evaluated as machine-checkable residuals.

Every check compares an origin/boundary quantity (left side) against a
combination of averages over the state (right side).  The master relation
for a probe function f(r) reads

    { f [R^2 - r^2 R R'' + r^2 R'^2] - f' r R (r R' + R)
      + (1/2) f'' r^2 R^2 }_{r -> 0}
        = -2 <f' L> - <f L'> - (1/2) <f'''>,

with L = A - l(l+1)/r^2 and <.> the unit-normalised r^2-measure average.
The boundary side is always evaluated analytically from the fitted origin
expansion (the bracket mixes individually divergent pieces for singular
states; only the power-law limit is stable), and the averaged side is
assembled as a single merged integrand so that inverse-square pieces
cancel exactly instead of catastrophically in floating point.

Specialising f = r^q gives the power family: a Kronecker-delta boundary
term against

    - < 2 q r^{q-1} A + r^q A' + [2 l(l+1)(1-q) + q(q-1)(q-2)/2] r^{q-3} >,

whose q = 1 member is the virial theorem.  For origin-singular states the
boundary side survives at q = 1 -+ 2P and q = 1 with the two-branch
coefficients; for the logarithmic case it survives at q = 1 with the
squared coefficient of the ln r branch (so the virial theorem acquires the
mixing term (P^2/m) a_st a_add, or -a_add^2/(4m) in the logarithmic case).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from .errors import DivergenceError, PreconditionError
from .model import (
    KleinGordonOneBody,
    KleinGordonTwoBody,
    Schroedinger,
    merge_power_terms,
)
from .observables import Weight, expectation, power_weight

__all__ = [
    "IdentityReport", "ProbeFunction", "hypervirial_general",
    "hypervirial_power", "virial", "kg_virial", "origin_relations",
    "recurrence_coefficients", "kramer_relation", "oscillator_relation",
    "RecurrenceRelation",
]

_NORM_NOTE = "unit r^2-measure norm"


@dataclass(frozen=True)
class IdentityReport:
    """One verified identity: both sides, the normalised residual, and the
    pass verdict at the applied tolerance.

    The residual is |lhs - rhs| / max(scale, |lhs|, |rhs|) where scale is
    the largest magnitude among the individually evaluated terms; this
    prevents false passes when both sides are near-zero differences of
    large contributions.
    """

    identity_tag: str
    lhs: float
    rhs: float
    residual: float
    tolerance: float
    passed: bool
    inputs_digest: str = ""
    terms: tuple = ()

    @classmethod
    def build(cls, tag, lhs, rhs, tolerance, digest="", terms=()):
        finite = [abs(t) for t in terms if np.isfinite(t)]
        scale = max([abs(lhs), abs(rhs)] + finite)
        residual = abs(lhs - rhs) / scale if scale > 0 else 0.0
        return cls(tag, float(lhs), float(rhs), float(residual),
                   float(tolerance), bool(residual <= tolerance),
                   digest + ("; " if digest else "") + _NORM_NOTE,
                   tuple(float(t) for t in terms))

    def as_dict(self):
        return {
            "identity": self.identity_tag,
            "lhs": self.lhs,
            "rhs": self.rhs,
            "residual": self.residual,
            "tolerance": self.tolerance,
            "pass": self.passed,
            "inputs": self.inputs_digest,
        }


@dataclass(frozen=True)
class ProbeFunction:
    """Three-times differentiable probe with small-r expansion metadata.

    The derivative callables must be consistent with f; ``validate`` spot
    checks them by central differences.  ``small_r_terms`` lists (coef,
    exponent) pairs describing f below the fit window.
    """

    f: Callable
    f1: Callable
    f2: Callable
    f3: Callable
    small_r_terms: tuple
    name: str = "probe"
    admissible: bool = True
    # True when small_r_terms describe f exactly everywhere, not just
    # asymptotically; lets the averaged side switch to the cancellation-free
    # merged form at small radii
    exact_power_terms: bool = False

    @classmethod
    def power(cls, q):
        q = float(q)
        return cls(
            f=lambda r: r ** q,
            f1=lambda r: q * r ** (q - 1.0),
            f2=lambda r: q * (q - 1.0) * r ** (q - 2.0),
            f3=lambda r: q * (q - 1.0) * (q - 2.0) * r ** (q - 3.0),
            small_r_terms=((1.0, q),),
            name=f"r^{q:g}",
            exact_power_terms=True,
        )

    @classmethod
    def from_power_terms(cls, terms, name="poly"):
        terms = tuple(merge_power_terms(terms))

        def mk(order):
            def fn(r):
                r = np.asarray(r, dtype=float)
                total = np.zeros_like(r)
                for c, e in terms:
                    cc = c
                    for j in range(order):
                        cc *= (e - j)
                    total = total + cc * r ** (e - order)
                return total
            return fn

        return cls(mk(0), mk(1), mk(2), mk(3), terms, name,
                   exact_power_terms=True)

    def validate(self, radii=(0.3, 1.1, 2.7), h=1e-5, tol=1e-6):
        for r in radii:
            fd1 = (self.f(r + h) - self.f(r - h)) / (2 * h)
            fd2 = (self.f1(r + h) - self.f1(r - h)) / (2 * h)
            fd3 = (self.f2(r + h) - self.f2(r - h)) / (2 * h)
            for got, want in ((self.f1(r), fd1), (self.f2(r), fd2),
                              (self.f3(r), fd3)):
                if abs(got - want) > tol * max(1.0, abs(want)):
                    raise PreconditionError(
                        f"probe derivatives inconsistent near r={r}")
        return True


# ---------------------------------------------------------------------------
# term algebra on (coef, exponent, ln-power) triples for the boundary limit

def _t_mul(a, b):
    return [(c1 * c2, e1 + e2, k1 + k2) for c1, e1, k1 in a for c2, e2, k2 in b]


def _t_diff(terms):
    out = []
    for c, e, k in terms:
        if e != 0.0:
            out.append((c * e, e - 1.0, k))
        if k > 0:
            out.append((c * k, e - 1.0, k - 1))
    return out


def _t_merge(terms, drop_tol=1e-9):
    groups = {}
    for c, e, k in terms:
        if c == 0.0:
            continue
        key = (round(e * 1e9), k)
        groups.setdefault(key, []).append(c)
    out = []
    for (ekey, k), cs in sorted(groups.items()):
        total = math.fsum(cs)
        biggest = max(abs(c) for c in cs)
        if biggest > 0 and abs(total) <= drop_tol * biggest:
            continue
        out.append((total, ekey / 1e9, k))
    return out


def _boundary_limit(f_terms, branches, tag=""):
    """r -> 0 limit of the probe boundary bracket for R = sum of branches.

    f_terms: (coef, exponent) pairs of the probe's small-r expansion;
    branches: (coef, exponent, ln-power) triples of R near the origin.
    """
    R = [(c, e, k) for c, e, k in branches]
    R1 = _t_diff(R)
    R2 = _t_diff(R1)
    r2 = [(1.0, 2.0, 0)]
    r1 = [(1.0, 1.0, 0)]
    total = []
    for cf, ef in f_terms:
        f = [(cf, ef, 0)]
        f1 = _t_diff(f)
        f2 = _t_diff(f1)
        part = _t_mul(f, _t_merge(_t_mul(R, R)
                                  + [(-c, e, k) for c, e, k in _t_mul(r2, _t_mul(R, R2))]
                                  + _t_mul(r2, _t_mul(R1, R1)), drop_tol=0.0))
        inner = _t_merge(_t_mul(r1, R1) + R, drop_tol=0.0)
        part += [(-c, e, k) for c, e, k in _t_mul(f1, _t_mul(r1, _t_mul(R, inner)))]
        part += [(0.5 * c, e, k) for c, e, k in _t_mul(f2, _t_mul(r2, _t_mul(R, R)))]
        total.extend(part)
    value = 0.0
    merged = _t_merge(total)
    scale = max([abs(c) for c, _, _ in merged], default=0.0)
    for c, e, k in merged:
        if e > 1e-9:
            continue
        if e < -1e-9 or k > 0:
            if abs(c) > 1e-9 * scale:
                raise DivergenceError(
                    f"boundary bracket diverges at the origin "
                    f"(term r^{e:g} ln^{k} with coefficient {c:.3g}){tag}")
            continue
        if k == 0:
            value += c
    return value


# ---------------------------------------------------------------------------
# merged integrand builders

def _l_terms(state):
    cent = float(state.l * (state.l + 1))
    terms = list(state.coeff.power_terms())
    if cent:
        terms.append((-cent, -2.0))
    return terms


def _l_prime_terms(state):
    cent = float(state.l * (state.l + 1))
    terms = [(c * n, n - 1.0) for c, n in state.coeff.power_terms() if n != 0]
    if cent:
        terms.append((2.0 * cent, -3.0))
    return terms


def _power_combo_weight(state, q):
    """2 q r^{q-1} A + r^q A' + [2 l(l+1)(1-q) + q(q-1)(q-2)/2] r^{q-3},
    merged so that inverse-square contributions cancel exactly where the
    algebra says they must."""
    a_terms = state.coeff.power_terms()
    da_terms = state.coeff.da_terms()
    l = state.l
    cdelta = 2.0 * l * (l + 1) * (1.0 - q) + 0.5 * q * (q - 1.0) * (q - 2.0)
    terms = [(2.0 * q * c, n + q - 1.0) for c, n in a_terms]
    terms += [(c, n + q) for c, n in da_terms]
    if cdelta != 0.0:
        terms.append((cdelta, q - 3.0))
    return Weight.from_power_terms(terms, name=f"power-combo(q={q:g})")


def _avg(state, weight):
    return expectation(state, weight)


def _term_scales(state, weight):
    """Individually finite |c <r^e>| magnitudes for residual normalisation."""
    out = []
    for c, e in weight.small_r_terms:
        try:
            out.append(abs(c) * abs(expectation(state, power_weight(e))))
        except DivergenceError:
            continue
    return out


def _digest(state, extra=""):
    base = f"state={getattr(state, 'provenance', 'state')}, bc={state.bc.kind}"
    ev = state.eigenvalue
    base += f", eig={ev:.12g}"
    return base + (", " + extra if extra else "")


# ---------------------------------------------------------------------------
# the identity operations

def hypervirial_general(state, probe: ProbeFunction, tolerance=1e-6):
    """Check the master probe identity on a state.

    The boundary side comes from the fitted origin expansion through exact
    term algebra; the averaged side is integrated as one combined weight
    with R'' never formed numerically (the combination only involves R and
    analytic coefficient functions).
    """
    if not probe.admissible:
        raise PreconditionError("probe marked inadmissible for bound states")
    fit = state.origin_fit()
    lhs = _boundary_limit(probe.small_r_terms, fit.r_branches(),
                          tag=f" [probe {probe.name}]")

    small = merge_power_terms(
        [(2.0 * c1 * c2, e1 + e2)
         for c1, e1 in [(c * e, e - 1.0) for c, e in probe.small_r_terms if e != 0.0]
         for c2, e2 in _l_terms(state)]
        + [(c1 * c2, e1 + e2)
           for c1, e1 in probe.small_r_terms
           for c2, e2 in _l_prime_terms(state)]
        + [(0.5 * c * e * (e - 1.0) * (e - 2.0), e - 3.0)
           for c, e in probe.small_r_terms]
    )
    cent = float(state.l * (state.l + 1))
    # below r_c the pointwise combination subtracts huge inverse powers; for
    # probes with exact power expansions the merged form is used there
    r_c = 0.05 if probe.exact_power_terms else 0.0

    def gfun(r):
        r = np.asarray(r, dtype=float)
        lvals = state.coeff.a(r) - cent / (r * r)
        lpvals = state.coeff.da(r) + (2.0 * cent / (r * r * r) if cent else 0.0)
        vals = 2.0 * probe.f1(r) * lvals + probe.f(r) * lpvals + 0.5 * probe.f3(r)
        if r_c > 0.0:
            inner = r < r_c
            if np.any(inner):
                ri = r[inner]
                merged = np.zeros_like(ri)
                for c, e in small:
                    merged = merged + c * ri ** e
                vals = vals.copy()
                vals[inner] = merged
        return vals

    combined = Weight(gfun, tuple(small), name=f"general({probe.name})",
                      declared=True)
    rhs = -_avg(state, combined)
    return IdentityReport.build(
        "hypervirial-general", lhs, rhs, tolerance,
        _digest(state, f"probe={probe.name}"),
        terms=_term_scales(state, combined))


def _delta_match(q, target):
    return abs(q - target) < 1e-9


def hypervirial_power(state, q, tolerance=1e-6):
    """The f = r^q member of the probe family with the printed
    boundary coefficients for each origin class."""
    q = float(q)
    fit = state.origin_fit()
    kind = fit.kind
    if kind == "regular":
        s = fit.s
        if q < -2 * s - 1e-12:
            raise PreconditionError(f"need q >= -2s = {-2 * s} for a regular state")
        lhs = (2 * s + 1) ** 2 * fit.a_st ** 2 if _delta_match(q, -2.0 * s) else 0.0
    elif kind in ("singular", "standard-only"):
        P = fit.P
        if q < 1.0 - 2.0 * P - 1e-12:
            raise PreconditionError(f"need q >= 1 - 2P = {1 - 2 * P:g} for this state")
        lhs = 0.0
        if _delta_match(q, 1.0 - 2.0 * P):
            lhs += (1.0 - q) * (0.5 + P - 0.5 * q) * fit.a_st ** 2
        if _delta_match(q, 1.0 + 2.0 * P):
            lhs += (1.0 - q) * (0.5 - P - 0.5 * q) * fit.a_add ** 2
        if _delta_match(q, 1.0):
            lhs += ((q - 1.0) ** 2 - 4.0 * P * P) * fit.a_st * fit.a_add
    else:  # singular-log
        if q < 1.0 - 1e-12:
            raise PreconditionError("need q >= 1 for a logarithmic-origin state")
        lhs = fit.a_add ** 2 if _delta_match(q, 1.0) else 0.0

    w = _power_combo_weight(state, q)
    rhs = -_avg(state, w)
    return IdentityReport.build(
        f"hypervirial-power(q={q:g})", lhs, rhs, tolerance, _digest(state),
        terms=_term_scales(state, w))


def virial(state, tolerance=1e-6, include_extra_term=True):
    """E = <V + r V'/2> plus the origin-mixing term for singular states.

    The mixing term is (P^2/m) a_st a_add for two-branch states and
    -a_add^2/(4m) for the logarithmic case; it vanishes for single-branch
    boundary conditions, recovering the familiar statement.
    """
    if not isinstance(state.problem.equation, Schroedinger):
        raise PreconditionError("virial in this form is nonrelativistic; "
                                "use kg_virial for the two-body equation")
    m = state.problem.equation.mass
    fit = state.origin_fit()
    w = Weight.from_power_terms(state.problem.potential.virial_weight_terms(),
                                name="V + rV'/2")
    avg = _avg(state, w)
    extra = 0.0
    if include_extra_term:
        if fit.kind == "singular":
            extra = fit.P ** 2 / m * fit.a_st * fit.a_add
        elif fit.kind == "singular-log":
            extra = -fit.a_add ** 2 / (4.0 * m)
    rhs = avg + extra
    return IdentityReport.build(
        "virial", state.eigenvalue, rhs, tolerance, _digest(state),
        terms=[avg, extra] + _term_scales(state, w))


def _kg_virial_weight(state, m_total):
    """V^2/2 - M V + (r V'/2)(V - M) + M^2/2 - 2 m^2 as merged powers."""
    vt = state.problem.potential.power_terms()
    m = state.problem.equation.mass
    terms = []
    # V^2/2 and (r V'/2) V
    for c1, n1 in vt:
        for c2, n2 in vt:
            terms.append((0.5 * c1 * c2, n1 + n2))
            terms.append((0.5 * c1 * n1 * c2, n1 + n2))
    # -M V and -(r V'/2) M
    for c, n in vt:
        terms.append((-m_total * c, n))
        terms.append((-0.5 * m_total * c * n, n))
    terms.append((0.5 * m_total ** 2 - 2.0 * m * m, 0.0))
    return Weight.from_power_terms(terms, name="kg-virial-combo")


def kg_virial(state, m_total=None, tolerance=1e-3):
    """Two-body virial identity: <V^2/2 - MV + (rV'/2)(V-M) + M^2/2 - 2m^2>
    equals 4 P^2 a_st a_add (zero for single-branch states)."""
    if not isinstance(state.problem.equation, KleinGordonTwoBody):
        raise PreconditionError("kg_virial applies to the two-body equation")
    if m_total is None:
        m_total = state.eigenvalue
    fit = state.origin_fit()
    w = _kg_virial_weight(state, float(m_total))
    lhs = _avg(state, w)
    if fit.kind == "singular":
        rhs = 4.0 * fit.P ** 2 * fit.a_st * fit.a_add
    elif fit.kind == "singular-log":
        rhs = -fit.a_add ** 2
    else:
        rhs = 0.0
    return IdentityReport.build(
        "kg-virial", lhs, rhs, tolerance, _digest(state, f"M={m_total:g}"),
        terms=_term_scales(state, w))


def origin_relations(state, tolerance=1e-4):
    """Origin-value identities for regular states.

    l = 0: a_0^2 = -<A'> and the full-wave-function density relation
    |psi(0)|^2 = (m/2 pi) <dV/dr> (nonrelativistic only).
    l > 0: the l-th derivative relation
    (2l+1)^2 |R^(l)(0)|^2 = (l!)^2 <4 l A r^{-2l-1} - A' r^{-2l}>
    and 2 l(l+1) <r^{-3}> = -<A'>.
    """
    fit = state.origin_fit()
    if fit.kind != "regular":
        raise PreconditionError("origin relations require a regular state")
    l = state.l
    reports = []
    wa = Weight.from_power_terms(state.coeff.da_terms(), name="A'")
    if l == 0:
        lhs = fit.a_st ** 2
        rhs = -_avg(state, wa)
        reports.append(IdentityReport.build(
            "origin-amplitude", lhs, rhs, tolerance, _digest(state),
            terms=_term_scales(state, wa)))
        if isinstance(state.problem.equation, Schroedinger):
            m = state.problem.equation.mass
            wv = Weight.from_power_terms(state.problem.potential.dv_terms(),
                                         name="V'")
            lhs = fit.a_st ** 2 / (4.0 * math.pi)
            rhs = m / (2.0 * math.pi) * _avg(state, wv)
            reports.append(IdentityReport.build(
                "origin-density", lhs, rhs, tolerance, _digest(state),
                terms=_term_scales(state, wv)))
    else:
        deriv = math.factorial(l) * fit.a_st
        lhs = (2 * l + 1) ** 2 * deriv ** 2
        combo = Weight.from_power_terms(
            [(4.0 * l * c, n - (2 * l + 1)) for c, n in state.coeff.power_terms()]
            + [(-c, n - 2 * l) for c, n in state.coeff.da_terms()],
            name="4lA/r^{2l+1} - A'/r^{2l}")
        rhs = math.factorial(l) ** 2 * _avg(state, combo)
        reports.append(IdentityReport.build(
            "origin-derivative", lhs, rhs, tolerance, _digest(state),
            terms=_term_scales(state, combo)))
        lhs = 2.0 * l * (l + 1) * _avg(state, power_weight(-3))
        rhs = -_avg(state, wa)
        reports.append(IdentityReport.build(
            "origin-centrifugal", lhs, rhs, tolerance, _digest(state),
            terms=_term_scales(state, wa)))
    return reports


@dataclass(frozen=True)
class RecurrenceRelation:
    """Three-term moment relation c1 <r^{q-1}> + c2 <r^{q+n-1}> +
    c3 <r^{q-3}> = 0 for a single power-law potential V = v0 r^n."""

    q: float
    n: float
    v0: float
    mass: float
    exponents: tuple
    name: str = "recurrence"

    def coefficients(self, energy):
        c1 = 2.0 * energy * self.q
        c2 = -self.v0 * (2.0 * self.q + self.n)
        return (c1, c2, self.c3)

    @property
    def c3(self):
        raise NotImplementedError

    def check(self, state, tolerance=1e-5):
        c1, c2, c3 = self.coefficients(state.eigenvalue)
        e1, e2, e3 = self.exponents
        terms = []
        total = 0.0
        for c, e in ((c1, e1), (c2, e2), (c3, e3)):
            if c == 0.0:
                terms.append(0.0)
                continue
            val = c * expectation(state, power_weight(e))
            terms.append(val)
            total += val
        return IdentityReport.build(
            self.name, total, 0.0, tolerance, _digest(state), terms=terms)


def recurrence_coefficients(mass, v0, n, q, l):
    """Moment recurrence for V = v0 r^n:

        2 E q <r^{q-1}> - v0 (2q+n) <r^{q+n-1}>
            + (q-1)/m [q(q-2)/4 - l(l+1)] <r^{q-3}> = 0.
    """
    q, n = float(q), float(n)
    if q < -2 * l - 1e-12:
        raise PreconditionError("q below the admissible window for this l")
    c3 = (q - 1.0) / mass * (q * (q - 2.0) / 4.0 - l * (l + 1))

    class _R(RecurrenceRelation):
        @property
        def c3(self):
            return c3

    return _R(q, n, float(v0), float(mass), (q - 1.0, q + n - 1.0, q - 3.0),
              name=f"power-recurrence(q={q:g},n={n:g})")


def kramer_relation(s, mass, alpha, l):
    """Coulomb moment recurrence, printed form:

        2E(s+1)<r^s> + alpha(2s+1)<r^{s-1}>
            + (s/m)[(s^2-1)/4 - l(l+1)] <r^{s-2}> = 0.
    """
    s = float(s)
    c3 = s / mass * ((s * s - 1.0) / 4.0 - l * (l + 1))

    class _K(RecurrenceRelation):
        def coefficients(self, energy):
            return (2.0 * energy * (s + 1.0), alpha * (2.0 * s + 1.0), c3)

        @property
        def c3(self):
            return c3

    return _K(s + 1.0, -1.0, -alpha, float(mass), (s, s - 1.0, s - 2.0),
              name=f"kramer(s={s:g})")


def oscillator_relation(s, mass, omega, l):
    """Harmonic-potential moment recurrence (V = m omega^2 r^2 / 2):

        2E(s+1)<r^s> - m omega^2 (s+2) <r^{s+2}>
            + (s/m)[(s^2-1)/4 - l(l+1)] <r^{s-2}> = 0.
    """
    s = float(s)
    v0 = 0.5 * mass * omega * omega
    c3 = s / mass * ((s * s - 1.0) / 4.0 - l * (l + 1))

    class _O(RecurrenceRelation):
        def coefficients(self, energy):
            return (2.0 * energy * (s + 1.0), -mass * omega * omega * (s + 2.0), c3)

        @property
        def c3(self):
            return c3

    return _O(s + 1.0, 2.0, v0, float(mass), (s, s + 2.0, s - 2.0),
              name=f"oscillator-recurrence(s={s:g})")
