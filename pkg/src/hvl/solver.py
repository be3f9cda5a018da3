"""Two-sided shooting solver for the reduced radial equation u'' + L u = 0.

Layout of a solve:

* geometric inner segment [r_min, r_switch], integrated in t = ln r where
  the substitution w = u / sqrt(r) removes the first derivative and gives
  w'' + Q w = 0 with Q(t) = r^2 A(r) - (l + 1/2)^2; Numerov is then O(h^6)
  per step on the uniform t mesh.  Q stays finite at the origin even for
  inverse-square singular potentials (it tends to -P^2).
* uniform outer segment [r_switch, r_max], integrated in r directly.
* outward sweep from an origin seed, inward sweep from a decaying tail
  seed; the eigenvalue is the zero of the Wronskian mismatch at the
  matching radius (outermost classical turning point, clamped onto the
  uniform segment).
* eigenvalues are located by node-count bisection first, then a
  bisection/secant hybrid (Brent) on the mismatch inside the node window.

Rescaling: whenever a sweep exceeds 1e240 in magnitude the partial
solution is scaled down in place; solutions are defined up to scale, so
only bookkeeping of the matching ratio needs care.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.optimize import brentq

from . import observables
from .errors import (
    NodeCountError,
    NoEigenvalueError,
    PreconditionError,
    SolverError,
    SupercriticalError,
)
from .model import (
    KleinGordonTwoBody,
    RadialProblem,
    Schroedinger,
    build_effective_coefficient,
    classify_singularity,
)

_RESCALE_AT = 1e240

__all__ = [
    "Grid", "SolverSettings", "BoundaryCondition", "Eigenstate",
    "numerov_integrate", "origin_seed", "solve_bound_state",
    "solve_kg_masslessness", "find_bracket", "default_grid",
]


@dataclass(frozen=True)
class Grid:
    """Geometric-then-uniform radial mesh.

    points = n_geometric log-spaced radii on [r_min, r_switch] followed by
    n_uniform equally spaced radii on [r_switch, r_max] (switch point
    shared).
    """

    r_min: float = 1e-6
    r_switch: float = 1.0
    r_max: float = 30.0
    n_geometric: int = 2000
    n_uniform: int = 6000

    def __post_init__(self):
        if not (0 < self.r_min < self.r_switch < self.r_max):
            raise PreconditionError("grid radii must satisfy 0 < r_min < r_switch < r_max")
        if self.n_geometric < 16 or self.n_uniform < 16:
            raise PreconditionError("grid segments need at least 16 points")

    @property
    def t(self):
        return np.linspace(math.log(self.r_min), math.log(self.r_switch), self.n_geometric)

    @property
    def ht(self):
        return (math.log(self.r_switch) - math.log(self.r_min)) / (self.n_geometric - 1)

    @property
    def hu(self):
        return (self.r_max - self.r_switch) / (self.n_uniform - 1)

    @property
    def i_switch(self):
        return self.n_geometric - 1

    @property
    def r(self):
        geo = np.exp(self.t)
        geo[0] = self.r_min
        geo[-1] = self.r_switch
        uni = np.linspace(self.r_switch, self.r_max, self.n_uniform)
        return np.concatenate([geo, uni[1:]])

    def refined(self, factor=2):
        """Same span with every step halved (for convergence checks)."""
        return Grid(
            self.r_min, self.r_switch, self.r_max,
            (self.n_geometric - 1) * factor + 1,
            (self.n_uniform - 1) * factor + 1,
        )


@dataclass(frozen=True)
class SolverSettings:
    eig_tol: float = 1e-10        # absolute tolerance of the root refinement
    norm_tol: float = 1e-8        # residual tolerance on the final norm
    tail_exponent: float = 34.0   # WKB decay accumulated beyond the turning point
    node_window: float = 1e-3     # relative width of the node-count window


@dataclass(frozen=True)
class BoundaryCondition:
    """Origin behaviour of u = r R.

    kind 'regular':       u ~ r^(s+1)
    kind 'singular':      u ~ r^(1/2+P) + tau * r^(1/2-P)   (tau=inf: pure
                          second branch)
    kind 'singular-log':  u ~ sqrt(r) (1 + tau ln r)
    kind 'standard-only': u ~ r^(1/2+P) with P >= 1/2 (mixing forbidden)
    """

    kind: str
    s: int = 0
    P: float = 0.0
    tau: float = 0.0

    def __post_init__(self):
        if self.kind not in ("regular", "singular", "singular-log", "standard-only"):
            raise PreconditionError(f"unknown boundary kind {self.kind!r}")
        if self.kind == "singular" and not (0.0 < self.P < 0.5):
            raise PreconditionError("singular boundary requires 0 < P < 1/2")
        if self.kind == "standard-only" and self.P < 0.5:
            raise PreconditionError("standard-only boundary requires P >= 1/2")

    @classmethod
    def regular(cls, s):
        return cls("regular", s=int(s))

    @classmethod
    def singular(cls, P, tau):
        return cls("singular", P=float(P), tau=float(tau))

    @classmethod
    def singular_log(cls, tau):
        return cls("singular-log", tau=float(tau))

    @classmethod
    def standard_only(cls, P):
        return cls("standard-only", P=float(P))

    @classmethod
    def from_classification(cls, classification, l, tau=0.0):
        k = classification.kind
        if k == "regular":
            return cls.regular(l)
        if k == "singular":
            return cls.singular(classification.P, tau)
        if k == "singular-log":
            return cls.singular_log(tau)
        if k == "standard-only":
            return cls.standard_only(classification.P)
        raise SupercriticalError(
            "supercritical origin singularity: no self-adjoint bound-state "
            "problem exists"
        )

    def u_branches(self):
        """(exponent, log-power) basis of u near the origin, strongest last."""
        if self.kind == "regular":
            return [(self.s + 1.0, 0)]
        if self.kind == "singular":
            return [(0.5 + self.P, 0), (0.5 - self.P, 0)]
        if self.kind == "standard-only":
            return [(0.5 + self.P, 0)]
        return [(0.5, 0), (0.5, 1)]

    def u_seed(self, r, g1=0.0):
        """Leading origin behaviour of u, including the first correction
        r^nu (1 - g1 r / (2 nu)) driven by the r^-1 part of the effective
        coefficient (u'' + [... + g1/r + ...] u = 0).  Without it the seed
        contaminates the second branch at O(r_min^{2P}), which is the
        accuracy floor for Coulomb-type singular problems."""
        r = np.asarray(r, dtype=float)

        def branch(nu):
            return r ** nu * (1.0 - g1 * r / (2.0 * nu))

        if self.kind == "regular":
            return branch(self.s + 1.0)
        if self.kind == "standard-only":
            return branch(0.5 + self.P)
        if self.kind == "singular":
            if math.isinf(self.tau):
                return branch(0.5 - self.P)
            return branch(0.5 + self.P) + self.tau * branch(0.5 - self.P)
        # logarithmic pair: corrections mix powers and logs; the leading
        # form suffices for the potentials this artifact solves there
        if math.isinf(self.tau):
            return np.sqrt(r) * np.log(r)
        return np.sqrt(r) * (1.0 + self.tau * np.log(r))


@dataclass
class Eigenstate:
    """A normalised bound state sampled on the grid (R = u / r)."""

    eigenvalue: float
    grid: Grid
    R: np.ndarray
    u: np.ndarray
    l: int
    nodes: int
    norm_check: float
    bc: BoundaryCondition
    problem: Optional[RadialProblem] = None
    coeff: object = None
    provenance: str = "solver"
    _origin_fit: object = field(default=None, repr=False)

    @property
    def r(self):
        return self.grid.r

    def origin_fit(self):
        if self._origin_fit is None:
            self._origin_fit = observables.fit_origin(self)
        return self._origin_fit

    def set_origin_coefficients(self, fit):
        self._origin_fit = fit


def origin_seed(bc: BoundaryCondition, grid: Grid, g1=0.0):
    """First two u values implied by the origin asymptotics."""
    r = grid.r
    vals = bc.u_seed(r[:2], g1=g1)
    if not np.all(np.isfinite(vals)) or np.all(vals == 0):
        raise SolverError("origin seed degenerate")
    return float(vals[0]), float(vals[1])


def _numerov_sweep(q, h, y0, y1):
    """Propagate y'' + q y = 0 over the points carrying q (uniform step h).

    Uses the summed (difference) form of the Numerov recurrence,

        phi_n = (1 + h^2 q_n / 12) y_n,
        phi_{n+1} = phi_n + D_n,   D_n = D_{n-1} - h^2 q_n y_n,

    which avoids representing 1 + h^2 q/12 as a single float inside the
    update: the naive three-term form quantises the coefficient at
    eps/h^2 and acts like a random potential whose effect *grows* as the
    mesh is refined.

    The whole partial solution is rescaled when the magnitude guard trips
    (the ODE is linear, so scale is free).
    """
    n = len(q)
    h2 = h * h
    y = np.empty(n)
    y[0], y[1] = y0, y1
    phi_prev = y0 * (1.0 + h2 * q[0] / 12.0)
    phi = y1 * (1.0 + h2 * q[1] / 12.0)
    delta = phi - phi_prev
    cur = y1
    for i in range(2, n):
        delta -= h2 * q[i - 1] * cur
        phi += delta
        cur = phi / (1.0 + h2 * q[i] / 12.0)
        y[i] = cur
        if abs(cur) > _RESCALE_AT:
            s = 1.0 / abs(cur)
            y[: i + 1] *= s
            phi *= s
            delta *= s
            cur = y[i]
    if not np.isfinite(y).all():
        raise SolverError("non-finite values during integration")
    return y


def numerov_integrate(l_values, h, seed, direction="outward"):
    """Numerov integration of u'' + L u = 0 on a uniform mesh.

    l_values are L at the mesh points ordered in the sweep direction for
    'outward'; for 'inward' they are given in grid order and the sweep runs
    from the far end.  seed holds the first two u values in sweep order.
    """
    if direction not in ("outward", "inward"):
        raise PreconditionError("direction must be 'outward' or 'inward'")
    q = np.asarray(l_values, dtype=float)
    if not np.isfinite(q).all():
        raise SolverError("non-finite coefficient values")
    y0, y1 = seed
    if not (np.isfinite(y0) and np.isfinite(y1)) or (y0 == 0 and y1 == 0):
        raise PreconditionError("seed values must be finite and not both zero")
    if direction == "inward":
        out = _numerov_sweep(q[::-1], h, y0, y1)
        return out[::-1].copy()
    return _numerov_sweep(q, h, y0, y1)


class _Workspace:
    """Per-(problem, grid, l) arrays reused across eigenvalue iterations."""

    def __init__(self, problem, grid):
        self.problem = problem
        self.grid = grid
        self.r = grid.r
        self.ht = grid.ht
        self.hu = grid.hu
        self.isw = grid.i_switch
        # two virtual log points beyond the switch for the derivative stencil
        tsw = math.log(grid.r_switch)
        self.r_geo_ext = np.concatenate(
            [self.r[: self.isw + 1],
             [math.exp(tsw + grid.ht), math.exp(tsw + 2 * grid.ht)]])
        self.v_geo = problem.potential.v(self.r_geo_ext)
        self.v_uni = problem.potential.v(self.r[self.isw:])
        self.cent = float(problem.l * (problem.l + 1))

    def a_of(self, v, eig):
        eq = self.problem.equation
        if isinstance(eq, Schroedinger):
            return 2.0 * eq.mass * (eig - v)
        if isinstance(eq, KleinGordonTwoBody):
            return v * v / 4.0 - eig * v / 2.0 + eig * eig / 4.0 - eq.mass ** 2
        return (eig - v) ** 2 - eq.mass ** 2

    def q_geo(self, eig):
        # w'' + Q w = 0 in t = ln r;  Q = r^2 A - (l + 1/2)^2
        r = self.r_geo_ext
        return r * r * self.a_of(self.v_geo, eig) - (self.problem.l + 0.5) ** 2

    def l_uni(self, eig):
        r = self.r[self.isw:]
        return self.a_of(self.v_uni, eig) - self.cent / (r * r)

    def l_at(self, r, eig):
        r = np.asarray(r, dtype=float)
        return self.a_of(self.problem.potential.v(r), eig) - self.cent / (r * r)

    def g1(self, eig):
        """Coefficient of r^-1 in the effective coefficient at this
        eigenvalue (drives the first origin-seed correction)."""
        terms = build_effective_coefficient(self.problem, eig).power_terms()
        return math.fsum(c for c, n in terms if abs(n + 1.0) < 1e-12)


def _derivative_on_mesh(y, q, h, i):
    """O(h^6) derivative of y'' = -q y at mesh index i (needs i-2 .. i+2).

    y' = D1[y] + (h^2/6) D1[qy] - (7 h^4/360) D3[qy], with D1/D3 the
    central first/third differences; the qy corrections remove the
    truncation of the bare central difference using the equation itself.
    """
    qy = (q[i - 2] * y[i - 2], q[i - 1] * y[i - 1], 0.0,
          q[i + 1] * y[i + 1], q[i + 2] * y[i + 2])
    d1 = (y[i + 1] - y[i - 1]) / (2.0 * h)
    d1qy = (qy[3] - qy[1]) / (2.0 * h)
    d3qy = (qy[4] - 2.0 * qy[3] + 2.0 * qy[1] - qy[0]) / (2.0 * h ** 3)
    return d1 + h * h / 6.0 * d1qy - 7.0 * h ** 4 / 360.0 * d3qy


def _outward(ws: _Workspace, bc, eig, stop_index):
    """Sweep from the origin seed to (at least) stop_index on the full grid.

    Returns (u values on [0..stop], du/dr at stop) with the derivative taken
    from the uniform-mesh stencil.
    """
    grid = ws.grid
    isw = ws.isw
    q = ws.q_geo(eig)
    u0, u1 = origin_seed(bc, grid, g1=ws.g1(eig))
    r = ws.r
    w0 = u0 / math.sqrt(r[0])
    w1 = u1 / math.sqrt(r[1])
    w = _numerov_sweep(q, ws.ht, w0, w1)  # includes the virtual point
    u_geo = w[: isw + 1] * np.sqrt(ws.r_geo_ext[: isw + 1])

    # convert (w, w') at the switch into (u, u') in r
    wp = _derivative_on_mesh(w, q, ws.ht, isw)
    rs = grid.r_switch
    u_sw = u_geo[isw]
    up_sw = (wp + 0.5 * w[isw]) / math.sqrt(rs)

    # start the uniform segment with RK4 substeps over one mesh interval
    lu = ws.l_uni(eig)
    h = ws.hu
    nsub = 8
    hs = h / nsub
    uu, vv, rr = u_sw, up_sw, rs

    def acc(rx, ux):
        return -(ws.l_at(rx, eig)) * ux

    for _ in range(nsub):
        k1u, k1v = vv, acc(rr, uu)
        k2u, k2v = vv + 0.5 * hs * k1v, acc(rr + 0.5 * hs, uu + 0.5 * hs * k1u)
        k3u, k3v = vv + 0.5 * hs * k2v, acc(rr + 0.5 * hs, uu + 0.5 * hs * k2u)
        k4u, k4v = vv + hs * k3v, acc(rr + hs, uu + hs * k3u)
        uu = uu + hs / 6.0 * (k1u + 2 * k2u + 2 * k3u + k4u)
        vv = vv + hs / 6.0 * (k1v + 2 * k2v + 2 * k3v + k4v)
        rr = rr + hs
    n_uni = min(stop_index - isw + 3, len(lu))
    if n_uni < 5:
        raise SolverError("matching index too close to the segment switch")
    u_uni = _numerov_sweep(lu[:n_uni], h, u_sw, uu)
    u = np.concatenate([u_geo, u_uni[1:]])
    i_eval = isw + n_uni - 3
    upr = _derivative_on_mesh(u_uni, lu[:n_uni], h, n_uni - 3)
    return u, i_eval, upr


def _count_nodes(u):
    # sign changes only: the forbidden-region tail of an outward sweep can
    # exceed the oscillatory interior by hundreds of orders of magnitude,
    # so no amplitude threshold may be applied
    s = np.sign(u[u != 0.0])
    return int(np.count_nonzero(s[1:] != s[:-1]))


def _matching_index(ws: _Workspace, eig):
    """Index of the outermost classical turning point, clamped onto the
    uniform segment (falls back to the switch radius when L has no zero)."""
    lu = ws.l_uni(eig)
    pos = np.nonzero(lu > 0)[0]
    if len(pos) == 0:
        idx = 4
    else:
        idx = min(int(pos[-1]) + 1, len(lu) - 8)
        idx = max(idx, 4)
    return ws.isw + idx


def _mismatch(ws: _Workspace, bc, eig, im):
    """Normalised Wronskian of the outward and inward sweeps at index im."""
    u_out, _, _ = _outward(ws, bc, eig, im + 2)
    lu = ws.l_uni(eig)
    j = im - ws.isw
    h = ws.hu
    tail = lu[j - 2:]
    u_in_seg = _numerov_sweep(tail[::-1], h, 0.0, 1e-120)[::-1]
    uo = u_out[im]
    upo = _derivative_on_mesh(u_out[ws.isw:], lu, h, j)
    ui = u_in_seg[2]
    upi = _derivative_on_mesh(u_in_seg, tail, h, 2)
    scale = (abs(uo) + h * abs(upo)) * (abs(ui) + h * abs(upi))
    if scale == 0:
        raise SolverError("degenerate matching")
    return (upo * ui - uo * upi) / scale


def _full_outward_nodes(ws, bc, eig):
    u, _, _ = _outward(ws, bc, eig, len(ws.r) - 1)
    return _count_nodes(u)


def _compose_state(ws, bc, eig, im):
    u_out, _, _ = _outward(ws, bc, eig, im + 2)
    lu = ws.l_uni(eig)
    j = im - ws.isw
    tail = lu[j:]
    u_in = _numerov_sweep(tail[::-1], ws.hu, 0.0, 1e-120)[::-1]
    if u_in[0] == 0:
        raise SolverError("inward sweep vanished at the matching point")
    scale = u_out[im] / u_in[0]
    u = np.concatenate([u_out[:im], u_in * scale])
    u /= np.max(np.abs(u))
    return u


def default_grid(problem, bracket, settings=SolverSettings(), r_min=1e-6,
                 r_switch=1.0, n_geometric=2000, n_uniform=6000):
    """Grid with r_max fixed by accumulating WKB decay past the outermost
    turning point at the shallow bracket edge."""
    ws_probe = _Workspace(problem.with_potential(problem.potential), Grid(
        r_min, r_switch, max(10.0, 4 * r_switch), 32, 32))
    eig = bracket[1]
    r = max(2.0 * r_switch, 1.0)
    # march outward until the WKB phase integral of the decaying tail
    # reaches the requested exponent
    total = 0.0
    budget = settings.tail_exponent
    step = 0.05
    guard = 0
    while total < budget and guard < 200000:
        lval = float(ws_probe.l_at(r, eig))
        if lval < 0:
            total += math.sqrt(-lval) * step
        r += step
        step = max(0.05, 0.02 * r)
        guard += 1
    if guard >= 200000:
        raise SolverError("could not find a decaying-tail radius")
    return Grid(r_min, r_switch, r, n_geometric, n_uniform)


def _check_problem_bc(problem, bc):
    cls = classify_singularity(problem)
    if cls.kind == "supercritical":
        raise SupercriticalError(
            "origin singularity exceeds the self-adjoint window")
    expected = {
        "regular": "regular",
        "singular": "singular",
        "singular-log": "singular-log",
        "standard-only": "standard-only",
    }[cls.kind]
    if bc.kind != expected:
        raise PreconditionError(
            f"boundary condition kind {bc.kind!r} does not match the "
            f"problem's origin classification {cls.kind!r}")
    if bc.kind == "regular" and bc.s != problem.l:
        raise PreconditionError("regular boundary exponent must equal l")
    return cls


def solve_bound_state(problem, bc, nodes, bracket, grid=None,
                      settings=SolverSettings(), match_r=None):
    """Find the bound state with the requested node count in the bracket.

    The eigenvalue is the energy for the nonrelativistic and one-body
    relativistic equations and the total mass M for the two-body equation.
    ``match_r`` pins the two-sided matching radius explicitly; families of
    perturbed solves (finite-difference derivatives) must share it, or the
    eigenvalues inherit ~1e-10 jitter from the matching index hopping grid
    cells as the turning point moves.
    """
    _check_problem_bc(problem, bc)
    lo, hi = float(bracket[0]), float(bracket[1])
    if not lo < hi:
        raise PreconditionError("bracket must satisfy lo < hi")
    if grid is None:
        grid = default_grid(problem, (lo, hi), settings)
    ws = _Workspace(problem, grid)

    c_lo = _full_outward_nodes(ws, bc, lo)
    c_hi = _full_outward_nodes(ws, bc, hi)
    if c_lo > nodes:
        raise NodeCountError(
            f"bracket floor already has {c_lo} nodes (> requested {nodes})")
    if c_hi <= nodes:
        raise NodeCountError(
            f"bracket ceiling has only {c_hi} nodes (requested {nodes}); "
            "no eigenvalue with that node count inside")

    # bisect the node count to a narrow window around the jump
    a, b = lo, hi
    width_goal = settings.node_window * max(abs(lo), abs(hi), 1e-3)
    while b - a > width_goal:
        m = 0.5 * (a + b)
        if _full_outward_nodes(ws, bc, m) <= nodes:
            a = m
        else:
            b = m

    if match_r is None:
        im = _matching_index(ws, 0.5 * (lo + hi))
    else:
        im = int(np.searchsorted(grid.r, match_r))
        im = min(max(im, ws.isw + 4), len(grid.r) - 8)
    g = lambda e: _mismatch(ws, bc, e, im)
    ga, gb = g(a), g(b)
    if ga * gb > 0:
        # widen within the node window by scanning for the sign change
        grid_e = np.linspace(a, b, 17)
        vals = [g(e) for e in grid_e]
        found = False
        for i in range(len(vals) - 1):
            if vals[i] * vals[i + 1] <= 0:
                a, b, ga, gb = grid_e[i], grid_e[i + 1], vals[i], vals[i + 1]
                found = True
                break
        if not found:
            raise NoEigenvalueError(
                "no sign change of the matching mismatch inside the bracket")
    eig = brentq(g, a, b, xtol=settings.eig_tol, rtol=1e-14)

    u = _compose_state(ws, bc, eig, im)
    n_found = _count_nodes(u)
    if n_found != nodes:
        raise NodeCountError(
            f"converged state has {n_found} nodes, requested {nodes}")
    state = _finalise_state(problem, bc, grid, eig, u, n_found)
    _check_origin_condition(state)
    return state


def _finalise_state(problem, bc, grid, eig, u, nodes_found):
    r = grid.r
    R = u / r
    state = Eigenstate(
        eigenvalue=float(eig), grid=grid, R=R, u=u, l=problem.l,
        nodes=nodes_found, norm_check=0.0, bc=bc, problem=problem,
        coeff=build_effective_coefficient(problem, float(eig)),
    )
    fit = observables.fit_origin(state)
    state.set_origin_coefficients(fit)
    norm = observables.state_norm(state)
    scale = 1.0 / math.sqrt(norm)
    state.R = R * scale
    state.u = u * scale
    state.set_origin_coefficients(fit.scaled(scale))
    state.norm_check = observables.state_norm(state)
    return state


def _check_origin_condition(state, frac=1e-4):
    # lim r R -> 0, checked at the inner grid edge
    peak = np.max(np.abs(state.R))
    if abs(state.grid.r_min * state.R[0]) > frac * peak:
        raise SolverError("state violates the origin condition r R -> 0")


def find_bracket(problem, bc, nodes, lo, hi, samples=48, grid=None,
                 settings=SolverSettings()):
    """Scan [lo, hi] for a sub-interval whose node count jumps through
    ``nodes``; convenience for callers without an analytic spectrum."""
    if grid is None:
        grid = default_grid(problem, (lo, hi), settings)
    ws = _Workspace(problem, grid)
    es = np.linspace(lo, hi, samples)
    counts = [_full_outward_nodes(ws, bc, e) for e in es]
    for i in range(len(es) - 1):
        if counts[i] <= nodes < counts[i + 1]:
            return float(es[i]), float(es[i + 1])
    raise NoEigenvalueError(
        f"no node-count jump through {nodes} found in [{lo}, {hi}]")


def solve_kg_masslessness(problem, l, tau, grid=None, settings=SolverSettings(),
                          ladder=None):
    """Eigen-mass search for the two-body relativistic problem at fixed tau,
    including the M = 0 edge.

    M = 0 carries no adjustable parameter, so it is probed directly: the
    mixing ratio tau* that would make M = 0 an exact eigenvalue is computed
    from a standard-branch and a second-branch sweep, and the mismatch
    tau*(M) - tau is extrapolated to M -> 0.  If that root is confirmed the
    returned mass is the Newton estimate (0 up to integration error);
    otherwise the interior of (0, 2m) is scanned like any other bracket.
    """
    if not isinstance(problem.equation, KleinGordonTwoBody):
        raise PreconditionError("masslessness probe requires the two-body equation")
    prob = RadialProblem(problem.equation, problem.potential, l)
    cls = classify_singularity(prob)
    if cls.kind != "singular":
        raise PreconditionError(
            "masslessness probe needs an origin index P inside (0, 1/2), "
            f"got classification {cls.kind!r}")
    m = prob.equation.mass
    if grid is None:
        grid = default_grid(prob, (0.0, 0.2 * m), settings)
    ws = _Workspace(prob, grid)
    P = cls.P

    def tau_match(mass_eig):
        im = _matching_index(ws, mass_eig)
        bst = BoundaryCondition.singular(P, 0.0)
        badd = BoundaryCondition.singular(P, math.inf)
        lu = ws.l_uni(mass_eig)
        j = im - ws.isw
        h = ws.hu
        tail = lu[j - 2:]
        u_in = _numerov_sweep(tail[::-1], h, 0.0, 1e-120)[::-1]
        ui = u_in[2]
        upi = _derivative_on_mesh(u_in, tail, h, 2)
        out = {}
        for name, b in (("st", bst), ("add", badd)):
            u_o, _, _ = _outward(ws, b, mass_eig, im + 2)
            uo = u_o[im]
            upo = _derivative_on_mesh(u_o[ws.isw:], lu, h, j)
            out[name] = upo * ui - uo * upi
        if out["add"] == 0:
            raise SolverError("degenerate second-branch sweep")
        return -out["st"] / out["add"]

    g0 = tau_match(0.0) - tau
    delta = 1e-3 * m
    g1 = tau_match(delta) - tau
    if g1 != g0:
        newton = -g0 * delta / (g1 - g0)
    else:
        newton = math.inf
    tol = 1e-5 * m
    if abs(newton) <= tol and abs(g0) <= 1e-3 * (abs(tau) + 1.0):
        return float(newton)

    # no massless state: look for an interior eigen-mass at this tau
    if ladder is None:
        ladder = np.linspace(0.02 * m, 1.999 * m, 60)
    bc = BoundaryCondition.singular(P, tau)
    prev_m, prev_g = None, None
    for mm in ladder:
        try:
            im = _matching_index(ws, mm)
            gg = _mismatch(ws, bc, mm, im)
        except SolverError:
            prev_m, prev_g = None, None
            continue
        if prev_g is not None and prev_g * gg <= 0:
            im = _matching_index(ws, 0.5 * (prev_m + mm))
            root = brentq(lambda e: _mismatch(ws, bc, e, im), prev_m, mm,
                          xtol=settings.eig_tol, rtol=1e-14)
            return float(root)
        prev_m, prev_g = mm, gg
    raise NoEigenvalueError("no eigen-mass found in (0, 2m) at this tau")
