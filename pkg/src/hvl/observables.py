"""Expectation values and near-origin coefficient extraction.

All averages use the radial measure  <f> = int_0^inf f(r) R(r)^2 r^2 dr
with the state normalised to <1> = 1.  That convention is applied to every
equation kind, including the relativistic ones, and is what the identity
checks assume.

The grid part of an integral is composite Simpson: in t = ln r on the
geometric segment (where the mesh is uniform in t) and in r on the uniform
segment.  The remaining [0, r_min] sliver is added analytically from the
fitted origin expansion; for the second singular branch that sliver is not
always negligible, and for weights like r^(q-3) it carries the divergence
bookkeeping.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Callable, Optional, Sequence

import numpy as np

from .errors import DivergenceError, PreconditionError
from .model import merge_power_terms

__all__ = [
    "Weight", "power_weight", "OriginFit", "fit_origin",
    "derivative_at_origin", "expectation", "state_norm", "grid_integrate",
]

# coefficients smaller than this (relative to the scale of their weight
# expansion) are treated as exact cancellations in divergence checks
_NEGLIGIBLE = 1e-10


@dataclass(frozen=True)
class Weight:
    """A radial weight function with its small-r power expansion.

    small_r_terms lists (coefficient, exponent) pairs valid below the fit
    window; they drive the analytic [0, r_min] tail and the divergence
    check against the state's origin branches.  ``declared`` records that
    the expansion is known even when it happens to be empty (a combination
    that cancels identically), as opposed to a bare callable with no
    metadata.
    """

    fn: Callable
    small_r_terms: tuple
    name: str = ""
    declared: bool = False

    def __call__(self, r):
        return self.fn(np.asarray(r, dtype=float))

    @classmethod
    def from_power_terms(cls, terms, name=""):
        terms = tuple(merge_power_terms(terms))

        def fn(r):
            r = np.asarray(r, dtype=float)
            total = np.zeros_like(r)
            for c, n in terms:
                total = total + c * r ** n
            return total

        return cls(fn, terms, name, declared=True)


def power_weight(exponent, coefficient=1.0, name=None):
    e = float(exponent)
    return Weight(lambda r: coefficient * np.asarray(r, float) ** e,
                  ((float(coefficient), e),),
                  name if name is not None else f"r^{e:g}", declared=True)


@dataclass(frozen=True)
class OriginFit:
    """Least-squares origin expansion of R in the basis of its boundary kind.

    regular:       R ~ a_st r^s                  (a_add fixed to 0)
    singular:      R ~ a_st r^(-1/2+P) + a_add r^(-1/2-P)
    singular-log:  R ~ a_st r^(-1/2) + a_add r^(-1/2) ln r
    standard-only: R ~ a_st r^(-1/2+P)
    """

    kind: str
    a_st: float
    a_add: float
    fit_window: tuple
    residual: float
    s: int = 0
    P: float = 0.0
    log_fallback: bool = False

    @property
    def a_s(self):
        return self.a_st

    def scaled(self, factor):
        return replace(self, a_st=self.a_st * factor, a_add=self.a_add * factor)

    def r_branches(self):
        """R near the origin as [(coef, exponent, ln-power)]."""
        if self.kind == "regular":
            return [(self.a_st, float(self.s), 0)]
        if self.kind == "singular":
            return [(self.a_st, -0.5 + self.P, 0), (self.a_add, -0.5 - self.P, 0)]
        if self.kind == "standard-only":
            return [(self.a_st, -0.5 + self.P, 0)]
        return [(self.a_st, -0.5, 0), (self.a_add, -0.5, 1)]

    def square_terms_with_measure(self):
        """R^2 r^2 near the origin as [(coef, exponent, ln-power)]."""
        out = {}
        for c1, e1, k1 in self.r_branches():
            for c2, e2, k2 in self.r_branches():
                key = (round((e1 + e2 + 2.0) * 1e9), k1 + k2)
                out[key] = out.get(key, 0.0) + c1 * c2
        return [(c, k[0] / 1e9, k[1]) for k, c in out.items() if c != 0.0]

    def evaluate(self, r):
        r = np.asarray(r, dtype=float)
        total = np.zeros_like(r)
        for c, e, k in self.r_branches():
            total = total + c * r ** e * (np.log(r) ** k if k else 1.0)
        return total


def _basis_columns(kind, r, s, P, g1=0.0):
    """Branch shapes of R near the origin, including the first correction
    (1 - g1 r / (2 nu)) from the r^-1 part of the effective coefficient
    (nu is the u-exponent of the branch).  Omitting it biases the weaker
    branch's coefficient by O(g1 r_hi / (2 nu)), which is fatal for small
    1/2 - P."""

    def corr(nu):
        return 1.0 - g1 * r / (2.0 * nu)

    if kind == "regular":
        return [r ** float(s) * corr(s + 1.0)]
    if kind == "singular":
        return [r ** (-0.5 + P) * corr(0.5 + P),
                r ** (-0.5 - P) * corr(0.5 - P)]
    if kind == "standard-only":
        return [r ** (-0.5 + P) * corr(0.5 + P)]
    return [r ** -0.5, r ** -0.5 * np.log(r)]


def _gamma_of(state):
    coeff = getattr(state, "coeff", None)
    if coeff is None:
        return 0.0
    return math.fsum(c for c, n in coeff.power_terms() if abs(n + 2.0) < 1e-9)


def fit_origin(state, r_lo=None, r_hi=None):
    """Fit the near-origin coefficients of a state on a small-r window.

    The window defaults to [2 r_min, 100 r_min] and shrinks (halving the
    top) until (a) the inverse-square part of the effective coefficient
    dominates it for singular kinds, and (b) the relative fit residual is
    below 1e-3.  A singular fit with P < 0.02 is ill-conditioned (the two
    exponents nearly coincide) and falls back to the logarithmic basis.
    """
    bc = state.bc
    kind = bc.kind
    P = bc.P
    log_fallback = False
    if kind == "singular" and P < 0.02:
        kind, log_fallback = "singular-log", True

    grid = state.grid
    rmin = grid.r_min
    r_lo = 2.0 * rmin if r_lo is None else r_lo
    r_hi = 100.0 * rmin if r_hi is None else r_hi
    r = grid.r

    gamma = _gamma_of(state)
    coeff = getattr(state, "coeff", None)
    g1 = 0.0
    if coeff is not None:
        g1 = math.fsum(c for c, n in coeff.power_terms() if abs(n + 1.0) < 1e-9)
    if gamma != 0.0 and coeff is not None:
        while r_hi > 8 * rmin:
            dev = abs(r_hi * r_hi * float(coeff.a(r_hi)) - gamma)
            if dev <= 0.05 * abs(gamma):
                break
            r_hi *= 0.5

    while True:
        i0, i1 = np.searchsorted(r, r_lo), np.searchsorted(r, r_hi)
        if i1 - i0 < 8:
            raise PreconditionError("origin fit window contains too few points")
        rw = r[i0:i1]
        y = state.R[i0:i1]
        cols = _basis_columns(kind, rw, bc.s, P, g1=g1)
        mat = np.column_stack(cols)
        scales = np.sqrt(np.mean(mat ** 2, axis=0))
        coefs, *_ = np.linalg.lstsq(mat / scales, y, rcond=None)
        coefs = coefs / scales
        fitvals = mat @ coefs
        denom = math.sqrt(float(np.mean(y ** 2))) or 1.0
        resid = math.sqrt(float(np.mean((y - fitvals) ** 2))) / denom
        if resid <= 1e-3 or r_hi <= 8 * rmin:
            break
        r_hi *= 0.5

    if kind in ("regular", "standard-only"):
        a_st, a_add = float(coefs[0]), 0.0
    else:
        a_st, a_add = float(coefs[0]), float(coefs[1])
        # a branch whose window contribution sits at the fit's own noise
        # floor is indistinguishable from absent; keep it at exactly zero
        # rather than leaking noise into mixing products and tail
        # integrability decisions
        contrib = [math.sqrt(float(np.mean((c * col) ** 2)))
                   for c, col in zip((a_st, a_add), cols)]
        floor = max(2.0 * resid, 1e-9) * denom
        if contrib[1] <= floor and contrib[1] < contrib[0]:
            a_add = 0.0
        elif contrib[0] <= floor and contrib[0] < contrib[1]:
            a_st = 0.0
    return OriginFit(kind, a_st, a_add, (float(r_lo), float(r_hi)),
                     float(resid), s=bc.s, P=P, log_fallback=log_fallback)


def derivative_at_origin(state):
    """R^(l)(0) = l! a_l for a regular state; undefined otherwise."""
    fit = state.origin_fit()
    if fit.kind != "regular":
        raise PreconditionError(
            "origin derivatives are only defined for regular states")
    return math.factorial(fit.s) * fit.a_st


_GREGORY_COEF = (1.0 / 12.0, 1.0 / 24.0, 19.0 / 720.0, 3.0 / 160.0,
                 863.0 / 60480.0)


def _gregory(y, h):
    """Gregory quadrature on a uniform mesh: trapezoid plus boundary
    difference corrections through fifth order (error O(h^7) for smooth
    integrands, any point count >= 7).

    integral = h [ sum - (f_0+f_N)/2 ] - h/12 (D1_end - D1_0)
               - h/24 (D2_end + D2_0) - 19h/720 (D3_end - D3_0) - ...
    with Dk_0 the k-th forward difference at the left edge and Dk_end the
    k-th backward difference at the right edge; odd orders enter with the
    (end - start) pattern, even orders with (end + start).
    """
    if len(y) < 7:
        raise PreconditionError("need at least 7 points per segment")
    total = float(y.sum() - 0.5 * (y[0] + y[-1]))
    for k, ck in enumerate(_GREGORY_COEF, start=1):
        d0 = float(np.diff(y[: k + 1], k)[0])
        dn = float(np.diff(y[-(k + 1):], k)[0])
        if k % 2:
            total -= ck * (dn - d0)
        else:
            total -= ck * (dn + d0)
    return h * total


def grid_integrate(grid, values):
    """Integral over [r_min, r_max] of point values given on the grid."""
    isw = grid.i_switch
    r = grid.r
    geo = _gregory(values[: isw + 1] * r[: isw + 1], grid.ht)
    uni = _gregory(values[isw:], grid.hu)
    return float(geo + uni)


def _tail_primitive(e, k, upper):
    """int_0^upper r^e ln(r)^k dr for e > -1 and k in {0, 1, 2}."""
    p = e + 1.0
    up = upper ** p
    lg = math.log(upper)
    if k == 0:
        return up / p
    if k == 1:
        return up * (lg / p - 1.0 / p ** 2)
    return up * (lg * lg / p - 2.0 * lg / p ** 2 + 2.0 / p ** 3)


def _tail_correction(fit, weight_terms, rmin):
    sq = fit.square_terms_with_measure()
    if not weight_terms or not sq:
        return 0.0
    scale_w = max(abs(c) for c, _ in weight_terms)
    scale_s = max(abs(c) for c, _, _ in sq)
    total = 0.0
    for cw, ew in weight_terms:
        for cs, es, k in sq:
            c = cw * cs
            x = ew + es
            if abs(c) <= _NEGLIGIBLE * scale_w * scale_s:
                continue
            if x <= -1.0 + 1e-12:
                raise DivergenceError(
                    f"average diverges at the origin: combined exponent {x:.6g} "
                    f"with coefficient {c:.3g}")
            total += c * _tail_primitive(x, k, rmin)
    return total


def _coerce_weight(f, small_r_exponent=None, small_r_coefficient=None):
    if isinstance(f, Weight):
        return f
    if small_r_exponent is None:
        return Weight(f, ())
    coef = 1.0 if small_r_coefficient is None else float(small_r_coefficient)
    return Weight(f, ((coef, float(small_r_exponent)),))


def expectation(state, f, small_r_exponent=None, small_r_coefficient=None):
    """<f> over the state, including the analytic [0, r_min] sliver.

    ``f`` may be a plain callable or a Weight.  A singular state requires
    the small-r behaviour of the weight to be declared (either through a
    Weight or the keyword arguments) so integrability against the second
    branch can be decided rather than guessed.
    """
    w = _coerce_weight(f, small_r_exponent, small_r_coefficient)
    fit = state.origin_fit()
    singularish = fit.kind in ("singular", "singular-log", "standard-only")
    if singularish and not (w.declared or w.small_r_terms):
        raise PreconditionError(
            "singular states need the weight's small-r exponent declared")
    vals = w(state.grid.r) * state.R ** 2 * state.grid.r ** 2
    if not np.isfinite(vals).all():
        raise DivergenceError("weight produced non-finite integrand values")
    main = grid_integrate(state.grid, vals)
    if w.small_r_terms:
        tail_terms = w.small_r_terms
    else:
        tail_terms = ((float(w(np.array([state.grid.r_min]))[0]), 0.0),)
    tail = _tail_correction(fit, tail_terms, state.grid.r_min)
    return main + tail


def state_norm(state):
    """<1> including the analytic origin sliver (used for normalisation)."""
    vals = state.R ** 2 * state.grid.r ** 2
    main = grid_integrate(state.grid, vals)
    fit = state._origin_fit if state._origin_fit is not None else state.origin_fit()
    tail = _tail_correction(fit, ((1.0, 0.0),), state.grid.r_min)
    return main + tail
