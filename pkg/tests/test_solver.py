import numpy as np
import pytest

from hypcmc import (
    CapSolution,
    ConstraintViolation,
    DirichletProblem,
    GraphField,
    NonConvergence,
    SectionGrid,
    SolverConfig,
    ball_alpha,
    continuation_solve,
    dirichlet_solve,
    embed_graph,
    mean_curvature_oracle,
    ordering_check,
)
from hypcmc.solver import shifted


def _grid(n, theta=0.0, k=3):
    return SectionGrid(n, 2 * n, ball_alpha(k), theta)


def _cap_error(u, H):
    g = u.grid
    cap = CapSolution.through_ring(H, g.alpha[-1], 0.0)
    return np.max(np.abs(u.u - cap(g.node_alpha)))


@pytest.mark.parametrize("theta", [0.0, 1.0, -2.5])
def test_constant_boundary_minimal_leaf(theta):
    g = _grid(16, theta)
    u, rep = dirichlet_solve(DirichletProblem(g, 0.7, 0.0))
    assert rep.newton_iterations <= 2 and rep.converged
    assert np.max(np.abs(u.u - 0.7)) <= 1e-12


def test_cap_second_order():
    errs = [_cap_error(continuation_solve(DirichletProblem(_grid(n), 0.0, 0.5))[0], 0.5) for n in (16, 32, 64)]
    ratios = np.array(errs[:-1]) / np.array(errs[1:])
    assert np.all((ratios > 3.0) & (ratios < 5.0)), errs


def test_rejects_H_one():
    with pytest.raises(ConstraintViolation):
        DirichletProblem(_grid(8), 0.0, 1.0)


def test_rejects_bad_boundary_and_guess():
    g = _grid(8)
    with pytest.raises(ValueError):
        DirichletProblem(g, np.nan, 0.2)
    with pytest.raises(ValueError):
        DirichletProblem(g, 0.0, 0.2, initial=np.zeros(5))


def test_residual_history_strictly_decreasing():
    _, rep = dirichlet_solve(DirichletProblem(_grid(24), 0.0, 0.4))
    h = np.array(rep.residual_history)
    assert np.all(np.diff(h) < 0)
    assert rep.converged and rep.final_residual <= 1e-9
    assert rep.min_ellipticity > 0


def test_continuation_to_zero_is_single_solve():
    p = DirichletProblem(_grid(16, 1.0), 0.3, 0.0)
    u1, r1 = continuation_solve(p)
    u2, r2 = dirichlet_solve(p)
    assert np.array_equal(u1.u, u2.u) and r1.continuation_path == [0.0]


def test_continuation_reaches_H_0_9():
    g = _grid(32)
    u, rep = continuation_solve(DirichletProblem(g, 0.0, 0.9))
    assert rep.continuation_path[-1] == 0.9 and len(rep.continuation_path) == 10
    assert _cap_error(u, 0.9) < 1e-2
    mc = mean_curvature_oracle(embed_graph(u))
    assert mc.max_error(0.9) < 10 * g.h_alpha


def test_reflection_symmetry():
    g = _grid(24)
    up, _ = continuation_solve(DirichletProblem(g, 0.0, 0.5))
    um, _ = continuation_solve(DirichletProblem(g, 0.0, -0.5))
    assert np.max(np.abs(um.u + up.u)) < 1e-9


def test_iterative_solver_agrees_with_direct():
    p = DirichletProblem(_grid(20, 1.0), 0.0, 0.3)
    ud, _ = dirichlet_solve(p)
    ui, _ = dirichlet_solve(p, SolverConfig(linear_solver="iterative"))
    assert np.max(np.abs(ud.u - ui.u)) < 1e-9


def test_nonconvergence_carries_H():
    p = DirichletProblem(_grid(16), 0.0, 0.5)
    with pytest.raises(NonConvergence) as exc:
        continuation_solve(p, SolverConfig(max_newton=1, dH=0.25))
    assert exc.value.H is not None and "H=" in str(exc.value)


def test_ordering_self_is_zero():
    u, _ = dirichlet_solve(DirichletProblem(_grid(16), 0.0, 0.3))
    rep = ordering_check(u, u)
    assert rep.ordered and rep.worst_violation == 0.0


def test_ordering_caps_in_rho0():
    g = _grid(24)
    u1, _ = continuation_solve(DirichletProblem(g, 0.0, 0.5))
    u2, _ = continuation_solve(DirichletProblem(g, np.log(2.0), 0.5))
    rep = ordering_check(u1, u2)
    assert rep.boundary_ordered and rep.ordered


def test_ordering_against_barrier_cap():
    g = _grid(24, 1.0)
    u, _ = continuation_solve(DirichletProblem(g, 0.0, 0.5))
    upper = GraphField(g, np.full(g.n_nodes, np.arctanh(0.5)))
    assert ordering_check(u, upper).ordered
    assert u.u.max() <= np.arctanh(0.5)


def test_shift_commutes_with_solve():
    p = DirichletProblem(_grid(20, 1.0), 0.0, 0.4)
    u0, _ = continuation_solve(p)
    u1, _ = continuation_solve(shifted(p, 0.8))
    assert np.max(np.abs(u1.u - u0.u - 0.8)) < 1e-8
