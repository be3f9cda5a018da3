"""Parameter derivatives of eigenvalues versus expectation-value identities.

For a parameter lam of the Hamiltonian, dE/dlam is computed by
finite-differencing full solves (with a Richardson consistency check) and
compared against the theorem's right side:

* regular (or single-branch) states:  dE/dlam = <dH/dlam>;
* two-branch singular states:         dE/dlam = <dH/dlam> + B/(2m), with
  B the origin limit of u d(du/dlam)/dr - (du/dlam) du/dr.  Expressed in
  the fitted branch coefficients, B = -2P [a_st a_add' - a_add a_st'] for
  the r^(1/2 +- P) pair and B = +[a_st a_add' - a_add a_st'] for the
  logarithmic pair at P = 0 (the basis Wronskians are -2P and +1).

The mixing ratio tau labels one fixed self-adjoint operator family, so it
is held fixed while lam varies unless the caller explicitly differentiates
along a tau(lam) path (including lam = tau itself, where <dH/dlam> = 0 and
the whole derivative is carried by the boundary term).

A parameter that enters the singularity index P is refused: its variation
makes the boundary limit divergent, so no finite identity exists.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Callable, Optional

import numpy as np

from .errors import FHRefusalError, NodeCountError, PreconditionError, SolverError
from .identities import IdentityReport
from .model import (
    Coulomb,
    InverseSquare,
    KleinGordonOneBody,
    KleinGordonTwoBody,
    PowerLaw,
    RadialProblem,
    Schroedinger,
    SumPotential,
    classify_singularity,
    merge_power_terms,
)
from .observables import Weight, expectation
from .solver import BoundaryCondition, SolverSettings, default_grid, solve_bound_state

__all__ = [
    "ParameterHandle", "StepTooLargeError", "dE_dlambda_numeric",
    "fh_regular", "fh_boundary_correction", "fh_singular_schrodinger",
    "fh_kg_onebody", "DerivativeEstimate",
]


class StepTooLargeError(SolverError):
    """The finite-difference step changed the state's node count."""


def _component_terms(potential):
    if isinstance(potential, SumPotential):
        return list(potential.terms)
    return [potential]


def _rebuild_potential(potential, index, new_term):
    parts = _component_terms(potential)
    parts[index] = new_term
    if isinstance(potential, SumPotential):
        return SumPotential(parts)
    return new_term


@dataclass(frozen=True)
class ParameterHandle:
    """Names which knob of the problem is being differentiated.

    name: 'm' (mass), 'coupling' (alpha / v0 of the addressed potential
    term), 'omega' (frequency of a quadratic term, v0 = m omega^2 / 2),
    'l' (angular momentum; never differentiable here, used for refusals)
    or 'tau' (the mixing ratio itself; the Hamiltonian's explicit
    lam-derivative is then zero).
    component selects a term of a sum potential (default: the only term).
    """

    name: str
    component: int = 0

    def _term(self, problem):
        return _component_terms(problem.potential)[self.component]

    def get(self, problem, bc=None):
        if self.name == "m":
            return problem.equation.mass
        if self.name == "l":
            return float(problem.l)
        if self.name == "tau":
            if bc is None:
                raise PreconditionError("tau handle needs the boundary condition")
            return bc.tau
        term = self._term(problem)
        if self.name == "coupling":
            if isinstance(term, Coulomb):
                return term.alpha
            if isinstance(term, (PowerLaw, InverseSquare)):
                return term.v0
            raise PreconditionError(f"no coupling on {term!r}")
        if self.name == "omega":
            if isinstance(term, PowerLaw) and term.n == 2.0:
                return math.sqrt(2.0 * term.v0 / problem.equation.mass)
            raise PreconditionError("omega handle needs a quadratic term")
        raise PreconditionError(f"unknown parameter {self.name!r}")

    def apply(self, problem, value):
        if self.name == "tau":
            return problem
        if self.name == "m":
            return RadialProblem(replace(problem.equation, mass=value),
                                 problem.potential, problem.l)
        if self.name == "l":
            raise PreconditionError("l is not numerically differentiable")
        term = self._term(problem)
        if self.name == "coupling":
            if isinstance(term, Coulomb):
                new = replace(term, alpha=value)
            else:
                new = replace(term, v0=value)
        else:  # omega
            new = replace(term, v0=0.5 * problem.equation.mass * value * value)
        return problem.with_potential(
            _rebuild_potential(problem.potential, self.component, new))

    def dv_weight(self, problem):
        """Power terms of dV/dlam for potential-type parameters."""
        if self.name == "tau":
            return Weight.from_power_terms([], name="dV/dtau")
        term = self._term(problem)
        if self.name == "coupling":
            if isinstance(term, Coulomb):
                return Weight.from_power_terms(
                    [(-1.0 if term.attractive else 1.0, -1.0)], name="dV/dalpha")
            if isinstance(term, InverseSquare):
                return Weight.from_power_terms([(-1.0, -2.0)], name="dV/dv0")
            return Weight.from_power_terms([(1.0, term.n)], name="dV/dv0")
        if self.name == "omega":
            m = problem.equation.mass
            omega = self.get(problem)
            return Weight.from_power_terms([(m * omega, 2.0)], name="dV/domega")
        raise PreconditionError(f"{self.name!r} has no potential derivative")

    def affects_P(self, problem):
        """True when the singularity index of this problem depends on the
        parameter (the refusal condition)."""
        cls = classify_singularity(problem)
        if not cls.is_singular:
            return False
        if self.name in ("l",):
            return True
        if self.name in ("tau", "omega"):
            return False
        if isinstance(problem.equation, Schroedinger):
            if self.name == "m":
                return True
            term = self._term(problem)
            return isinstance(term, InverseSquare) or (
                isinstance(term, PowerLaw) and term.n == -2.0)
        # relativistic kinds: P depends on the r^-1 coupling, not the mass
        if self.name == "m":
            return False
        term = self._term(problem)
        return isinstance(term, Coulomb) or (
            isinstance(term, PowerLaw) and term.n == -1.0)


@dataclass(frozen=True)
class DerivativeEstimate:
    value: float
    h: float
    coarse: float
    fine: float
    richardson_ok: bool
    states: tuple  # ((lam, Eigenstate), ...) at lam0 +- h, lam0 +- h/2


def _bc_at(problem, bc, tau_of_lambda, lam):
    """Boundary condition for the perturbed problem: same family (kind and
    mixing ratio, or the tau(lam) path), with the singularity index P
    recomputed from the perturbed problem.  P only moves for parameters
    that are either refused or restricted to single-branch states, where
    tracking it is exactly what 'the same extension family' means."""
    tau = bc.tau if tau_of_lambda is None else float(tau_of_lambda(lam))
    cls = classify_singularity(problem)
    rebuilt = BoundaryCondition.from_classification(cls, problem.l, tau=tau)
    if rebuilt.kind != bc.kind:
        raise StepTooLargeError(
            f"origin classification changed from {bc.kind!r} to "
            f"{rebuilt.kind!r} across the finite-difference step")
    return rebuilt


def dE_dlambda_numeric(problem, bc, nodes, handle, bracket, h=None,
                       grid=None, settings=SolverSettings(),
                       tau_of_lambda=None, richardson_tol=1e-6):
    """Central-difference dE/dlam with a step-halving consistency check.

    Solves at lam +- h and lam +- h/2 on one shared grid; accepts when the
    two central differences agree to richardson_tol relative and returns
    the Richardson-extrapolated value.
    """
    lam0 = handle.get(problem, bc)
    if h is None:
        h = 1e-4 * (abs(lam0) if lam0 != 0.0 else 1.0)
    if grid is None:
        grid = default_grid(problem, bracket, settings)
    # eigenvalue noise is amplified by 1/(2h) in the difference, so the
    # root refinement runs tighter than a plain solve, and every solve of
    # the family shares one matching radius (see solve_bound_state)
    settings = replace(settings, eig_tol=min(settings.eig_tol, 1e-13))
    from .solver import _matching_index, _Workspace
    ws0 = _Workspace(problem, grid)
    match_r = grid.r[_matching_index(ws0, 0.5 * (bracket[0] + bracket[1]))]
    energies = {}
    states = []
    for dlam in (h, -h, h / 2, -h / 2):
        lam = lam0 + dlam
        prob = handle.apply(problem, lam)
        bcl = _bc_at(prob, bc, tau_of_lambda, lam)
        try:
            st = solve_bound_state(prob, bcl, nodes, bracket, grid=grid,
                                   settings=settings, match_r=match_r)
        except NodeCountError as exc:
            raise StepTooLargeError(
                f"node count changed across lam = {lam0} +- {abs(dlam)}: {exc}"
            ) from exc
        energies[dlam] = st.eigenvalue
        states.append((lam, st))
    coarse = (energies[h] - energies[-h]) / (2.0 * h)
    fine = (energies[h / 2] - energies[-h / 2]) / h
    scale = max(abs(fine), 1e-12)
    ok = abs(coarse - fine) <= richardson_tol * scale
    if not ok:
        raise StepTooLargeError(
            f"derivative estimates disagree: {coarse!r} vs {fine!r}")
    value = (4.0 * fine - coarse) / 3.0
    return DerivativeEstimate(value, h, coarse, fine, ok, tuple(states))


def _mean_avg(state, weight):
    return expectation(state, weight)


def _dh_average(state, handle):
    """<dH/dlam> for the nonrelativistic equation."""
    problem = state.problem
    if handle.name == "m":
        m = problem.equation.mass
        v_w = Weight.from_power_terms(problem.potential.power_terms(), name="V")
        v_avg = _mean_avg(state, v_w)
        return -(state.eigenvalue - v_avg) / m
    return _mean_avg(state, handle.dv_weight(problem))


def _single_branch(bc):
    if bc.kind in ("regular", "standard-only"):
        return True
    return bc.tau == 0.0 or math.isinf(bc.tau)


def _fh_digest(handle, est, extra=""):
    s = (f"lam={handle.name}"
         + (f"[{handle.component}]" if handle.component else "")
         + f", h={est.h:g}, d_h={est.coarse:.10g}, d_h/2={est.fine:.10g}, "
         + f"richardson={'ok' if est.richardson_ok else 'FAIL'}")
    return s + (", " + extra if extra else "")


def fh_regular(state, handle, bracket=None, h=None, tolerance=1e-5,
               settings=SolverSettings()):
    """dE/dlam = <dH/dlam> for a regular or single-branch state."""
    if not isinstance(state.problem.equation, Schroedinger):
        raise PreconditionError("use fh_kg_onebody for the relativistic kind")
    if not _single_branch(state.bc):
        raise PreconditionError(
            "two-branch state: use fh_singular_schrodinger")
    if handle.affects_P(state.problem) and state.bc.kind not in (
            "regular", "standard-only") and state.bc.tau != 0.0:
        raise FHRefusalError(
            "parameter enters the singularity index; derivative refused")
    bracket = bracket or _auto_bracket(state)
    est = dE_dlambda_numeric(state.problem, state.bc, state.nodes, handle,
                             bracket, h=h, grid=state.grid, settings=settings)
    rhs = _dh_average(state, handle)
    return IdentityReport.build("fh-regular", est.value, rhs, tolerance,
                                _fh_digest(handle, est), terms=(est.value, rhs))


def _auto_bracket(state):
    e = state.eigenvalue
    delta = max(0.05 * abs(e), 1e-2)
    return (e - delta, e + delta)


def fh_boundary_correction(state_minus, state_plus, dlambda):
    """Boundary term B from the fitted coefficients of two solves at
    lam -+ h: B = W_basis * [a_st a_add' - a_add a_st'] with the basis
    Wronskian -2P (two-branch) or +1 (logarithmic).

    The two states must share a grid and orientation (they do when both
    come from the same deterministic seed construction).
    """
    fm, fp = state_minus.origin_fit(), state_plus.origin_fit()
    if fm.kind != fp.kind:
        raise PreconditionError("states have different boundary kinds")
    if fm.kind not in ("singular", "singular-log", "standard-only"):
        raise PreconditionError("boundary correction needs a singular state")
    a_st = 0.5 * (fm.a_st + fp.a_st)
    a_add = 0.5 * (fm.a_add + fp.a_add)
    d_st = (fp.a_st - fm.a_st) / dlambda
    d_add = (fp.a_add - fm.a_add) / dlambda
    bracket = a_st * d_add - a_add * d_st
    if fm.kind == "singular-log":
        return bracket, bracket
    return -2.0 * fm.P * bracket, bracket


def fh_singular_schrodinger(problem, bc, nodes, handle, bracket=None, h=None,
                            grid=None, tolerance=1e-3,
                            settings=SolverSettings(), tau_of_lambda=None):
    """dE/dlam = <dH/dlam> + B/(2m) for origin-singular states.

    Parameters entering P (the mass, the singular coupling, l) are always
    refused: their variation makes the origin limit divergent.
    """
    if not isinstance(problem.equation, Schroedinger):
        raise PreconditionError("use fh_kg_onebody for the relativistic kind")
    if handle.affects_P(problem):
        raise FHRefusalError(
            f"dP/d{handle.name} != 0: the boundary term diverges at the "
            "origin; no finite parameter-derivative identity exists")
    if bc.kind not in ("singular", "singular-log", "standard-only"):
        raise PreconditionError("problem is not origin-singular")
    if handle.name == "tau" and tau_of_lambda is None:
        tau_of_lambda = lambda lam: lam
    if grid is None and bracket is None:
        raise PreconditionError("need a bracket (or an explicit grid)")
    est = dE_dlambda_numeric(problem, bc, nodes, handle, bracket, h=h,
                             grid=grid, settings=settings,
                             tau_of_lambda=tau_of_lambda)
    # central state for the averages
    central = solve_bound_state(problem, bc, nodes, bracket,
                                grid=est.states[0][1].grid, settings=settings)
    m = problem.equation.mass
    avg = _dh_average(central, handle)
    lam_lo, st_lo = est.states[1]
    lam_hi, st_hi = est.states[0]
    if _single_branch(bc) and tau_of_lambda is None:
        b_term, mixing = 0.0, 0.0
    else:
        b_term, mixing = fh_boundary_correction(st_lo, st_hi, lam_hi - lam_lo)
    rhs = avg + b_term / (2.0 * m)
    tag = "fh-sae-log" if bc.kind == "singular-log" else "fh-sae"
    return IdentityReport.build(
        tag, est.value, rhs, tolerance,
        _fh_digest(handle, est, extra=f"B={b_term:.6g}"),
        terms=(est.value, avg, b_term / (2.0 * m)))


def fh_kg_onebody(problem, bc, nodes, handle, bracket, h=None, grid=None,
                  tolerance=1e-3, settings=SolverSettings(),
                  richardson_tol=1e-6):
    """Parameter-derivative identity for the one-body relativistic kind:

        generic lam:  dE/dlam = [ <(E - V) dV/dlam> + B/2 ] / (E - <V>)
        lam = m:      dE/dm   = [ m + B/2 ] / (E - <V>)

    with B = 0 for single-branch states.  The coupling of the r^-1 term
    and l enter P and are refused unless the state is single-branch.
    """
    if not isinstance(problem.equation, KleinGordonOneBody):
        raise PreconditionError("fh_kg_onebody needs the one-body "
                                "relativistic equation")
    if handle.affects_P(problem) and not _single_branch(bc):
        raise FHRefusalError(
            f"dP/d{handle.name} != 0 with a mixed boundary condition: "
            "the origin limit diverges; derivative refused")
    est = dE_dlambda_numeric(problem, bc, nodes, handle, bracket, h=h,
                             grid=grid, settings=settings,
                             richardson_tol=richardson_tol)
    central = solve_bound_state(problem, bc, nodes, bracket,
                                grid=est.states[0][1].grid, settings=settings)
    e0 = central.eigenvalue
    v_w = Weight.from_power_terms(problem.potential.power_terms(), name="V")
    v_avg = expectation(central, v_w)
    denom = e0 - v_avg
    if abs(denom) < 1e-10:
        raise SolverError("degenerate denominator E - <V> in the identity")
    if _single_branch(bc):
        b_term = 0.0
    else:
        lam_hi, st_hi = est.states[0]
        lam_lo, st_lo = est.states[1]
        b_term, _ = fh_boundary_correction(st_lo, st_hi, lam_hi - lam_lo)
    if handle.name == "m":
        num = problem.equation.mass + 0.5 * b_term
    else:
        dv = handle.dv_weight(problem)
        ev_terms = merge_power_terms(
            [(e0 * c, e) for c, e in dv.small_r_terms]
            + [(-cv * c, nv + e) for cv, nv in problem.potential.power_terms()
               for c, e in dv.small_r_terms])
        w = Weight.from_power_terms(ev_terms, name="(E-V) dV/dlam")
        num = expectation(central, w) + 0.5 * b_term
    rhs = num / denom
    return IdentityReport.build(
        "fh-kg", est.value, rhs, tolerance,
        _fh_digest(handle, est, extra=f"B={b_term:.6g}, E-<V>={denom:.8g}"),
        terms=(est.value, rhs))
