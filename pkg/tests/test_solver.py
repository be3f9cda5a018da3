import math

import numpy as np
import pytest

from hvl.errors import (
    NodeCountError,
    NoEigenvalueError,
    PreconditionError,
    SupercriticalError,
)
from hvl.model import (
    Coulomb,
    InverseSquare,
    KleinGordonTwoBody,
    PowerLaw,
    RadialProblem,
    Schroedinger,
    classify_singularity,
)
from hvl.oracles import hydrogen_state, inverse_square_state, massless_kg_state
from hvl.solver import (
    BoundaryCondition,
    Grid,
    SolverSettings,
    _derivative_on_mesh,
    _outward,
    _Workspace,
    default_grid,
    find_bracket,
    numerov_integrate,
    origin_seed,
    solve_bound_state,
    solve_kg_masslessness,
)


def test_numerov_constant_negative_coefficient_matches_sinh():
    # u'' = u with u = sinh has a closed form to integrate against
    h = 1e-3
    r = np.arange(0.0, 5.0 + h / 2, h)
    L = -np.ones_like(r)
    u = numerov_integrate(L, h, (math.sinh(r[0]), math.sinh(r[1])))
    assert u[-1] == pytest.approx(math.sinh(5.0), rel=1e-9)


def test_numerov_exact_on_linear_solution():
    h = 0.01
    r = np.arange(0.0, 1.0 + h / 2, h)
    L = np.zeros_like(r)
    u = numerov_integrate(L, h, (0.0, h))
    assert np.allclose(u, r, rtol=0, atol=1e-15)


def test_numerov_inward_direction():
    h = 1e-3
    r = np.arange(0.0, 3.0 + h / 2, h)
    L = -np.ones_like(r)
    # seed with the decaying exp(-r) from the far end
    u = numerov_integrate(L, h, (math.exp(-r[-1]), math.exp(-r[-2])),
                          direction="inward")
    assert u[0] == pytest.approx(1.0, rel=1e-9)


def test_outward_log_derivative_hydrogen():
    # u = 2 r e^{-r} at the ground state: u'/u = 1/r - 1.  Outward
    # integration drags an exponentially amplified admixture of the growing
    # solution across the forbidden region (factor e^{2 int kappa}), so the
    # achievable accuracy degrades with distance past the turning point at
    # r = 2: rounding alone floors the error at ~2e-5 by r = 10 in double
    # precision.  Check tight accuracy at r = 5 and the floor at r = 10.
    problem = RadialProblem(Schroedinger(1.0), Coulomb(1.0), l=0)
    grid = Grid(1e-6, 1.0, 14.0, 2000, 6000)
    ws = _Workspace(problem, grid)
    for r_probe, tol in [(5.0, 1e-6), (10.0, 1e-4)]:
        target = int(np.searchsorted(grid.r, r_probe))
        u, i_stop, upr = _outward(ws, BoundaryCondition.regular(0), -0.5, target)
        r_stop = grid.r[i_stop]
        expected = 1.0 / r_stop - 1.0
        assert upr / u[i_stop] == pytest.approx(expected, abs=tol)


def test_origin_seed_regular():
    grid = Grid()
    u0, u1 = origin_seed(BoundaryCondition.regular(0), grid)
    assert u1 / u0 == pytest.approx(grid.r[1] / grid.r[0], rel=1e-14)


def test_origin_seed_singular_pure_standard():
    grid = Grid()
    u0, u1 = origin_seed(BoundaryCondition.singular(0.2, 0.0), grid)
    assert u1 / u0 == pytest.approx((grid.r[1] / grid.r[0]) ** 0.7, rel=1e-14)


def test_origin_seed_singular_mixed_branch_dominance():
    grid = Grid()
    bc = BoundaryCondition.singular(0.2, 1.0)
    r0 = grid.r[0]
    u0, _ = origin_seed(bc, grid)
    # second branch exceeds the first by r^{-2P} ~ 251.19 at r = 1e-6
    ratio = r0 ** (0.5 - 0.2) / r0 ** (0.5 + 0.2)
    assert ratio == pytest.approx(251.188643, rel=1e-6)
    assert u0 == pytest.approx(r0 ** 0.7 + r0 ** 0.3, rel=1e-14)


def test_solve_hydrogen_ground():
    problem = RadialProblem(Schroedinger(1.0), Coulomb(1.0), l=0)
    st = solve_bound_state(problem, BoundaryCondition.regular(0), 0, (-0.6, -0.4))
    assert st.eigenvalue == pytest.approx(-0.5, abs=1e-8)
    assert st.nodes == 0
    assert st.norm_check == pytest.approx(1.0, abs=1e-8)


def test_solve_hydrogen_excited_by_nodes():
    problem = RadialProblem(Schroedinger(1.0), Coulomb(1.0), l=0)
    st = solve_bound_state(problem, BoundaryCondition.regular(0), 1, (-0.2, -0.05))
    assert st.eigenvalue == pytest.approx(-0.125, abs=1e-8)
    assert st.nodes == 1


def test_solve_oscillator_ground():
    problem = RadialProblem(Schroedinger(1.0), PowerLaw(0.5, 2.0), l=0)
    st = solve_bound_state(problem, BoundaryCondition.regular(0), 0, (1.0, 2.0))
    assert st.eigenvalue == pytest.approx(1.5, abs=1e-8)


def test_solve_inverse_square_with_oracle_mixing():
    oracle = inverse_square_state(0.2, 1.0, 1.0)
    problem = oracle.problem
    st = solve_bound_state(problem, oracle.bc, 0, (-0.7, -0.35))
    assert st.eigenvalue == pytest.approx(-0.5, abs=1e-6)


def test_two_brackets_agree():
    problem = RadialProblem(Schroedinger(1.0), Coulomb(1.0), l=0)
    grid = default_grid(problem, (-0.7, -0.3))
    e1 = solve_bound_state(problem, BoundaryCondition.regular(0), 0,
                           (-0.75, -0.42), grid=grid).eigenvalue
    e2 = solve_bound_state(problem, BoundaryCondition.regular(0), 0,
                           (-0.58, -0.31), grid=grid).eigenvalue
    assert e1 == pytest.approx(e2, abs=1e-10)


def test_solver_reproduces_oracle_eigenvalues():
    for oracle, bracket in [
        (hydrogen_state(2, 1), (-0.2, -0.06)),
        (inverse_square_state(0.3, 1.2, 1.0), (-1.1, -0.3)),
    ]:
        st = solve_bound_state(oracle.problem, oracle.bc, oracle.nodes,
                               bracket, grid=oracle.grid)
        assert st.eigenvalue == pytest.approx(oracle.eigenvalue, rel=1e-7)


def test_supercritical_refused():
    problem = RadialProblem(KleinGordonTwoBody(1.0), Coulomb(1.2), l=0)
    with pytest.raises(SupercriticalError):
        solve_bound_state(problem, BoundaryCondition.singular(0.1, 0.0), 0,
                          (0.1, 1.9))


def test_mismatched_bc_rejected():
    problem = RadialProblem(Schroedinger(1.0), Coulomb(1.0), l=0)
    with pytest.raises(PreconditionError):
        solve_bound_state(problem, BoundaryCondition.singular(0.2, 0.0), 0,
                          (-0.6, -0.4))


def test_empty_bracket_raises():
    problem = RadialProblem(Schroedinger(1.0), Coulomb(1.0), l=0)
    with pytest.raises((NodeCountError, NoEigenvalueError)):
        solve_bound_state(problem, BoundaryCondition.regular(0), 0,
                          (-0.45, -0.3))


def test_find_bracket():
    problem = RadialProblem(Schroedinger(1.0), Coulomb(1.0), l=0)
    lo, hi = find_bracket(problem, BoundaryCondition.regular(0), 0, -0.9, -0.2)
    assert lo < -0.5 < hi


def test_derivative_stencil_accuracy():
    h = 0.01
    x = np.arange(0.0, 1.0 + h / 2, h)
    q = np.ones_like(x)  # y'' = -y
    y = np.sin(x)
    d = _derivative_on_mesh(y, q, h, 50)
    assert d == pytest.approx(math.cos(x[50]), abs=1e-9)


def test_kg_massless_found_at_matching_tau():
    for P in (0.2, 0.3):
        oracle = massless_kg_state(P, 1.0)
        m_found = solve_kg_masslessness(oracle.problem, 0, oracle.bc.tau,
                                        grid=oracle.grid)
        assert abs(m_found) <= 1e-5


def test_kg_massless_repulsive_also_exists():
    oracle = massless_kg_state(0.2, 1.0, attractive=False)
    m_found = solve_kg_masslessness(oracle.problem, 0, oracle.bc.tau,
                                    grid=oracle.grid)
    assert abs(m_found) <= 1e-5


def test_kg_pure_standard_has_no_massless_state():
    oracle = massless_kg_state(0.2, 1.0)
    try:
        m_found = solve_kg_masslessness(oracle.problem, 0, 0.0, grid=oracle.grid)
    except NoEigenvalueError:
        return
    assert abs(m_found) > 1e-3  # whatever exists at tau=0 is far from massless


def test_grid_refinement_convergence():
    problem = RadialProblem(Schroedinger(1.0), Coulomb(1.0), l=0)
    grid = default_grid(problem, (-0.6, -0.4))
    e1 = solve_bound_state(problem, BoundaryCondition.regular(0), 0,
                           (-0.6, -0.4), grid=grid).eigenvalue
    e2 = solve_bound_state(problem, BoundaryCondition.regular(0), 0,
                           (-0.6, -0.4), grid=grid.refined()).eigenvalue
    assert abs(e2 - e1) / abs(e2) < 1e-7


def test_origin_condition_on_solved_states():
    problem = RadialProblem(Schroedinger(1.0), Coulomb(1.0), l=0)
    st = solve_bound_state(problem, BoundaryCondition.regular(0), 0, (-0.6, -0.4))
    assert abs(st.grid.r_min * st.R[0]) < 1e-4 * np.max(np.abs(st.R))
