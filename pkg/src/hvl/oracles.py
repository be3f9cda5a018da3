"""Closed-form reference states used as ground truth by tests and demos.

Each constructor samples an exactly known bound state on a solver grid and
attaches its analytic origin coefficients, so downstream code sees the same
surface as a numerically solved state.  First and second radial derivatives
are also sampled analytically, which lets the test suite verify the
governing equation residual without any finite differencing.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numpy.polynomial import Polynomial
from scipy.special import genlaguerre

from . import observables
from .errors import PreconditionError
from .model import (
    Coulomb,
    InverseSquare,
    KleinGordonTwoBody,
    PowerLaw,
    RadialProblem,
    Schroedinger,
    build_effective_coefficient,
)
from .observables import OriginFit
from .solver import BoundaryCondition, Eigenstate, Grid, default_grid
from .specfun import bessel_k, bessel_k_derivative

__all__ = [
    "OracleState", "hydrogen_state", "oscillator_state",
    "inverse_square_state", "massless_kg_state",
]


@dataclass
class OracleState(Eigenstate):
    """Eigenstate surface plus the closed form it was built from."""

    R1: np.ndarray = None  # dR/dr, analytic
    R2: np.ndarray = None  # d2R/dr2, analytic


def _finish(problem, bc, grid, eig, R, R1, R2, nodes, fit, provenance):
    r = grid.r
    state = OracleState(
        eigenvalue=float(eig), grid=grid, R=R, u=r * R, l=problem.l,
        nodes=nodes, norm_check=0.0, bc=bc, problem=problem,
        coeff=build_effective_coefficient(problem, float(eig)),
        provenance=provenance, R1=R1, R2=R2,
    )
    state.set_origin_coefficients(fit)
    state.norm_check = observables.state_norm(state)
    return state


def hydrogen_state(n, l, m=1.0, alpha=1.0, grid=None):
    """Coulomb bound state: E = -m alpha^2 / (2 n^2)."""
    if not (n >= 1 and 0 <= l < n):
        raise PreconditionError("need n >= 1 and 0 <= l < n")
    problem = RadialProblem(Schroedinger(m), Coulomb(alpha), l)
    energy = -m * alpha * alpha / (2.0 * n * n)
    if grid is None:
        grid = default_grid(problem, (1.2 * energy, energy))
    c = 2.0 * m * alpha / n          # rho = c r
    beta = 0.5 * c
    nr = n - l - 1
    norm = math.sqrt(c ** 3 * math.factorial(nr) / (2.0 * n * math.factorial(n + l)))
    lag = genlaguerre(nr, 2 * l + 1)
    # polynomial part of R in rho: rho^l * L(rho)
    poly = Polynomial([0.0] * l + list(lag.coef[::-1])) * norm
    dpoly = poly.deriv()
    d2poly = dpoly.deriv()
    r = grid.r
    rho = c * r
    ex = np.exp(-0.5 * rho)
    q0, q1, q2 = poly(rho), dpoly(rho), d2poly(rho)
    R = ex * q0
    R1 = c * ex * (q1 - 0.5 * q0)
    R2 = c * c * ex * (q2 - q1 + 0.25 * q0)
    a_l = norm * c ** l * lag(0.0)
    fit = OriginFit("regular", float(a_l), 0.0, (2 * grid.r_min, 100 * grid.r_min),
                    0.0, s=l)
    return _finish(problem, BoundaryCondition.regular(l), grid, energy,
                   R, R1, R2, nr, fit, f"hydrogen(n={n},l={l})")


def oscillator_state(nr, l, m=1.0, omega=1.0, grid=None):
    """Isotropic harmonic state of V = m omega^2 r^2 / 2:
    E = omega (2 nr + l + 3/2)."""
    if nr < 0 or l < 0:
        raise PreconditionError("need nr >= 0 and l >= 0")
    problem = RadialProblem(Schroedinger(m), PowerLaw(0.5 * m * omega * omega, 2.0), l)
    energy = omega * (2 * nr + l + 1.5)
    if grid is None:
        grid = default_grid(problem, (0.0, energy))
    mw = m * omega
    norm = math.sqrt(2.0 * mw ** (l + 1.5) * math.factorial(nr)
                     / math.gamma(nr + l + 1.5))
    lag = genlaguerre(nr, l + 0.5)
    # polynomial part of R in r: r^l * L(mw r^2)
    coefs = np.zeros(2 * nr + l + 1)
    for k, ck in enumerate(lag.coef[::-1]):
        coefs[2 * k + l] = ck * mw ** k
    poly = Polynomial(coefs) * norm
    dpoly = poly.deriv()
    d2poly = dpoly.deriv()
    r = grid.r
    ex = np.exp(-0.5 * mw * r * r)
    q0, q1, q2 = poly(r), dpoly(r), d2poly(r)
    R = ex * q0
    R1 = ex * (q1 - mw * r * q0)
    R2 = ex * (q2 - 2.0 * mw * r * q1 + (mw * mw * r * r - mw) * q0)
    a_l = norm * lag(0.0)
    fit = OriginFit("regular", float(a_l), 0.0, (2 * grid.r_min, 100 * grid.r_min),
                    0.0, s=l)
    return _finish(problem, BoundaryCondition.regular(l), grid, energy,
                   R, R1, R2, nr, fit, f"oscillator(nr={nr},l={l})")


def _kp_state_values(P, kappa, grid):
    """R = N r^{-1/2} K_P(kappa r) with unit norm, plus analytic derivatives
    and the exact origin coefficients of both branches."""
    n2 = 2.0 * kappa * kappa * math.sin(math.pi * P) / (math.pi * P)
    norm = math.sqrt(n2)
    r = grid.r
    z = kappa * r
    k0 = bessel_k(P, z)
    k1 = bessel_k_derivative(P, z)
    # K'' from the modified Bessel equation
    k2 = (1.0 + P * P / (z * z)) * k0 - k1 / z
    rs = np.sqrt(r)
    R = norm * k0 / rs
    R1 = norm * (kappa * k1 / rs - 0.5 * k0 / (r * rs))
    R2 = norm * (kappa * kappa * k2 / rs - kappa * k1 / (r * rs)
                 + 0.75 * k0 / (r * r * rs))
    pref = norm * math.pi / (2.0 * math.sin(math.pi * P))
    a_st = -pref * (kappa / 2.0) ** P / math.gamma(1.0 + P)
    a_add = pref * (kappa / 2.0) ** (-P) / math.gamma(1.0 - P)
    return R, R1, R2, a_st, a_add


def inverse_square_state(P, kappa, m=1.0, grid=None):
    """The single self-adjoint-extension level of V = -v0/r^2 at l = 0:
    E = -kappa^2/(2m), with v0 fixed by P = sqrt(1/4 - 2 m v0)."""
    if not 0.0 < P < 0.5:
        raise PreconditionError("need 0 < P < 1/2")
    v0 = (0.25 - P * P) / (2.0 * m)
    problem = RadialProblem(Schroedinger(m), InverseSquare(v0), l=0)
    energy = -kappa * kappa / (2.0 * m)
    if grid is None:
        grid = default_grid(problem, (1.2 * energy, energy))
    R, R1, R2, a_st, a_add = _kp_state_values(P, kappa, grid)
    tau = a_add / a_st
    bc = BoundaryCondition.singular(P, tau)
    fit = OriginFit("singular", a_st, a_add,
                    (2 * grid.r_min, 100 * grid.r_min), 0.0, P=P)
    return _finish(problem, bc, grid, energy, R, R1, R2, 0, fit,
                   f"inverse-square(P={P},kappa={kappa})")


def massless_kg_state(P, m=1.0, attractive=True, grid=None):
    """Massless two-body composite of two mass-m constituents bound by a
    Coulomb potential: R = N r^{-1/2} K_P(m r), eigen-mass M = 0, with the
    coupling fixed by P = sqrt(1/4 - alpha^2/4) at l = 0."""
    if not 0.0 < P < 0.5:
        raise PreconditionError("need 0 < P < 1/2")
    alpha = 2.0 * math.sqrt(0.25 - P * P)
    problem = RadialProblem(KleinGordonTwoBody(m), Coulomb(alpha, attractive), l=0)
    if grid is None:
        grid = default_grid(problem, (0.0, 0.0))
    R, R1, R2, a_st, a_add = _kp_state_values(P, m, grid)
    tau = a_add / a_st
    bc = BoundaryCondition.singular(P, tau)
    fit = OriginFit("singular", a_st, a_add,
                    (2 * grid.r_min, 100 * grid.r_min), 0.0, P=P)
    return _finish(problem, bc, grid, 0.0, R, R1, R2, 0, fit,
                   f"massless-kg(P={P},{'attr' if attractive else 'rep'})")
