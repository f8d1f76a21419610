"""Damped Newton and H-continuation for the Dirichlet problem Q_H[u] = 0 on a ball."""
import logging
from dataclasses import dataclass, field, replace

import numpy as np
import scipy.sparse.linalg as spla

from .errors import EllipticityLoss, NonConvergence
from .hyperbolic import check_mean_curvature
from .operator import GraphField, operator_for

logger = logging.getLogger(__name__)

__all__ = [
    "SolverConfig",
    "DirichletProblem",
    "SolveReport",
    "OrderingReport",
    "dirichlet_solve",
    "continuation_solve",
    "ordering_check",
]


@dataclass(frozen=True)
class SolverConfig:
    tol: float = 1e-9
    max_newton: int = 50
    dH: float = 0.1
    step_floor: float = 1e-4
    linear_solver: str = "direct"  # or "iterative"
    iterative_rtol: float = 1e-12

    def __post_init__(self):
        if self.tol <= 0 or self.dH <= 0 or self.max_newton < 1:
            raise ValueError("tolerances, dH and max_newton must be positive")
        if self.linear_solver not in ("direct", "iterative"):
            raise ValueError(f"unknown linear solver {self.linear_solver!r}")


@dataclass
class DirichletProblem:
    """Q_H[u] = 0 inside ``grid``, u = ``boundary`` on its outer ring."""

    grid: object
    boundary: np.ndarray
    H: float
    initial: np.ndarray | None = None

    def __post_init__(self):
        self.H = check_mean_curvature(self.H)
        self.boundary = np.broadcast_to(np.asarray(self.boundary, float), (self.grid.n_beta,)).copy()
        if not np.all(np.isfinite(self.boundary)):
            raise ValueError("boundary values must be finite")
        if self.initial is None:
            self.initial = np.full(self.grid.n_nodes, float(np.mean(self.boundary)))
        elif isinstance(self.initial, GraphField):
            self.initial = self.initial.u
        self.initial = np.asarray(self.initial, float).copy()
        if self.initial.shape != (self.grid.n_nodes,) or not np.all(np.isfinite(self.initial)):
            raise ValueError("initial guess must be a finite field on the grid")
        self.initial[self.grid.boundary] = self.boundary


@dataclass
class SolveReport:
    newton_iterations: int = 0
    residual_history: list = field(default_factory=list)
    converged: bool = False
    min_ellipticity: float = np.inf
    sup_u: float = np.nan
    inf_u: float = np.nan
    sup_gradient: float = np.nan
    continuation_path: list = field(default_factory=list)

    @property
    def initial_residual(self):
        return self.residual_history[0] if self.residual_history else np.nan

    @property
    def final_residual(self):
        return self.residual_history[-1] if self.residual_history else np.nan


def _linear_solve(J, rhs, cfg):
    if cfg.linear_solver == "direct":
        return spla.spsolve(J.tocsc(), rhs)
    ilu = spla.spilu(J.tocsc(), drop_tol=1e-5, fill_factor=10)
    M = spla.LinearOperator(J.shape, ilu.solve)
    x, info = spla.gmres(J, rhs, M=M, rtol=cfg.iterative_rtol, atol=0.0, restart=200, maxiter=2000)
    if info != 0:
        raise NonConvergence(f"GMRES did not converge (info={info})")
    return x


def dirichlet_solve(problem, cfg=None):
    """Newton iteration with backtracking on ||Q_H||_inf.

    Trial steps that produce non-finite values or a degenerate coefficient
    matrix are rejected by the line search, never regularized.
    """
    cfg = cfg or SolverConfig()
    grid = problem.grid
    H = check_mean_curvature(problem.H)
    op = operator_for(grid)
    m = op.eq_nodes.size
    u = problem.initial.copy()
    report = SolveReport()

    def evaluate(v):
        st = op.state(v, H)
        return np.max(np.abs(st.residual)), st

    rnorm, st = evaluate(u)
    if not (np.isfinite(rnorm) and np.all(st.ellipticity > 0)):
        raise EllipticityLoss("initial guess is not in the elliptic range of the operator")
    report.residual_history.append(rnorm)
    report.min_ellipticity = float(st.ellipticity.min())

    while rnorm > cfg.tol:
        if report.newton_iterations >= cfg.max_newton:
            raise NonConvergence(
                f"no convergence after {cfg.max_newton} Newton steps, residual {rnorm:.3e}",
                H=H,
                history=report.residual_history,
            )
        J = op.jacobian(u)[:, :m]
        delta = _linear_solve(J, -st.residual, cfg)
        lam = 1.0
        while True:
            trial = u.copy()
            trial[:m] += lam * delta
            t_norm, t_st = evaluate(trial)
            if np.isfinite(t_norm) and np.all(t_st.ellipticity > 0) and t_norm < rnorm:
                break
            lam *= 0.5
            if lam < cfg.step_floor:
                raise NonConvergence(
                    f"line search stalled at residual {rnorm:.3e}", H=H, history=report.residual_history
                )
        u, rnorm, st = trial, t_norm, t_st
        report.newton_iterations += 1
        report.residual_history.append(rnorm)
        ell = float(st.ellipticity.min())
        if not ell > 0:
            raise EllipticityLoss(f"A degenerate at accepted iterate {report.newton_iterations}")
        report.min_ellipticity = min(report.min_ellipticity, ell)
        logger.debug("newton %d: step %.3g, residual %.3e", report.newton_iterations, lam, rnorm)

    report.converged = True
    report.sup_u = float(u.max())
    report.inf_u = float(u.min())
    report.sup_gradient = float(op.gradient_norm(u).max())
    report.continuation_path = [H]
    return GraphField(grid, u), report


def _h_path(start, target, dH):
    if start == target:
        return [target]
    n = int(np.ceil(abs(target - start) / dH - 1e-12))
    return list(np.linspace(start, target, n + 1))


def continuation_solve(problem, cfg=None, start_H=0.0):
    """Solve at H = start_H, then step towards problem.H by at most cfg.dH, warm-starting each solve.

    Errors from an intermediate solve carry the failing H value.
    """
    cfg = cfg or SolverConfig()
    target = check_mean_curvature(problem.H)
    path = _h_path(float(start_H), target, cfg.dH)
    guess = problem.initial
    total = SolveReport()
    for Hc in path:
        sub = DirichletProblem(problem.grid, problem.boundary, Hc, guess)
        try:
            field_, rep = dirichlet_solve(sub, cfg)
        except NonConvergence as exc:
            exc.H = Hc
            raise
        guess = field_.u
        total.newton_iterations += rep.newton_iterations
        total.residual_history.extend(rep.residual_history)
        total.min_ellipticity = min(total.min_ellipticity, rep.min_ellipticity)
        total.continuation_path.append(Hc)
    total.converged = True
    total.sup_u, total.inf_u, total.sup_gradient = rep.sup_u, rep.inf_u, rep.sup_gradient
    # the reported history is the one of the final solve; the path is kept separately
    total.residual_history = rep.residual_history
    return field_, total


@dataclass
class OrderingReport:
    boundary_ordered: bool
    worst_violation: float
    ordered: bool
    tolerance: float


def ordering_check(u, v, H=None, tol=1e-9):
    """Check u <= v on the boundary ring implies u <= v inside, up to 10 * tol.

    ``H`` is accepted for symmetry with the solver calls; the check itself is
    a comparison of two fields on the same grid.
    """
    if u.grid is not v.grid and u.grid.n_nodes != v.grid.n_nodes:
        raise ValueError("fields live on different grids")
    g = u.grid
    diff = u.u - v.u
    bnd = bool(np.all(diff[g.boundary] <= 10 * tol))
    worst = float(max(diff[g.interior].max(), 0.0))
    return OrderingReport(bnd, worst, (not bnd) or worst <= 10 * tol, 10 * tol)


def shifted(problem, c):
    """The same problem with boundary data and initial guess translated by c along the flow."""
    return replace(problem, boundary=problem.boundary + c, initial=problem.initial + c)
