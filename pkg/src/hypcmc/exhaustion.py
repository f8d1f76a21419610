"""Exhaustion of the section by geodesic balls B_k, with height, gradient and Cauchy monitors."""
import logging
from dataclasses import dataclass, field

import numpy as np

from .curvature import mean_curvature_oracle
from .errors import BarrierViolation, EllipticityLoss, NonConvergence
from .hyperbolic import check_mean_curvature
from .operator import GraphField, embed_graph, operator_for
from .solver import DirichletProblem, SolverConfig, continuation_solve
from .submersion import SectionGrid, ball_alpha

logger = logging.getLogger(__name__)

__all__ = [
    "BoundaryTrace",
    "ExhaustionConfig",
    "ExhaustionReport",
    "StepRecord",
    "GradientVerdict",
    "extend_boundary",
    "barrier_bounds",
    "exhaustion_grid",
    "exhaustion_solve",
    "gradient_monitor",
]

_FINE = 4096


@dataclass(frozen=True)
class BoundaryTrace:
    """Continuous 2 pi-periodic datum phi(beta) on the asymptotic boundary.

    kind 'constant': data = (c,); 'fourier': data = (a0, a1, b1, a2, b2, ...)
    for a0 + sum a_n cos(n beta) + b_n sin(n beta); 'samples': uniform samples
    on [0, 2 pi) with periodic linear interpolation.
    """

    kind: str
    data: tuple

    def __post_init__(self):
        data = tuple(float(x) for x in np.atleast_1d(self.data))
        object.__setattr__(self, "data", data)
        if self.kind not in ("constant", "fourier", "samples"):
            raise ValueError(f"unknown boundary kind {self.kind!r}")
        if not data or not np.all(np.isfinite(data)):
            raise ValueError("boundary data must be a non-empty list of finite numbers")
        if self.kind == "constant" and len(data) != 1:
            raise ValueError("constant boundary takes a single value")
        if self.kind == "fourier" and len(data) % 2 == 0:
            raise ValueError("fourier boundary takes a0 followed by (a_n, b_n) pairs")

    @classmethod
    def constant(cls, c):
        return cls("constant", (c,))

    def __call__(self, beta):
        beta = np.asarray(beta, float)
        d = np.asarray(self.data)
        if self.kind == "constant":
            return np.full(beta.shape, d[0])
        if self.kind == "fourier":
            out = np.full(beta.shape, d[0])
            for n, (a, b) in enumerate(zip(d[1::2], d[2::2]), start=1):
                out = out + a * np.cos(n * beta) + b * np.sin(n * beta)
            return out
        nodes = np.arange(len(d) + 1) * 2 * np.pi / len(d)
        return np.interp(np.mod(beta, 2 * np.pi), nodes, np.append(d, d[0]))

    @property
    def mean(self):
        if self.kind == "samples":
            return float(np.mean(self.data))
        return self.data[0]

    def _extremes(self):
        if self.kind == "constant":
            return self.data[0], self.data[0]
        if self.kind == "samples":
            return min(self.data), max(self.data)
        v = self(np.arange(_FINE) * 2 * np.pi / _FINE)
        return float(v.min()), float(v.max())

    @property
    def inf(self):
        return self._extremes()[0]

    @property
    def sup(self):
        return self._extremes()[1]

    @property
    def oscillation(self):
        lo, hi = self._extremes()
        return hi - lo

    def rotated(self, beta0):
        """The trace beta -> phi(beta - beta0)."""
        if self.kind == "constant":
            return self
        if self.kind == "samples":
            n = len(self.data)
            shift = beta0 * n / (2 * np.pi)
            if abs(shift - round(shift)) > 1e-12:
                raise ValueError("samples can only be rotated by multiples of their spacing")
            return BoundaryTrace("samples", tuple(np.roll(self.data, int(round(shift)))))
        d = list(self.data)
        for n in range(1, (len(d) - 1) // 2 + 1):
            a, b = d[2 * n - 1], d[2 * n]
            c, s = np.cos(n * beta0), np.sin(n * beta0)
            d[2 * n - 1], d[2 * n] = a * c - b * s, a * s + b * c
        return BoundaryTrace("fourier", tuple(d))


def default_ramp(alpha):
    return np.sin(alpha) ** 2


def extend_boundary(phi, grid, ramp=default_ramp):
    """F = mean(phi) + m(alpha) (phi(beta) - mean(phi)), a continuous extension with trace phi."""
    m = ramp(grid.node_alpha)
    return GraphField(grid, phi.mean + m * (phi(grid.node_beta) - phi.mean))


def barrier_bounds(phi, H):
    """Height interval [inf phi - artanh|H|, sup phi + artanh|H|] given by the umbilic caps."""
    H = check_mean_curvature(H)
    w = float(np.arctanh(abs(H)))
    return phi.inf - w, phi.sup + w


@dataclass(frozen=True)
class ExhaustionConfig:
    k_max: int = 5
    k_min: int = 2
    cauchy_tol: float = 1e-6
    cauchy_radius: float = 2.0
    gradient_radius: float = 1.0
    solver: SolverConfig = field(default_factory=SolverConfig)
    curvature_oracle: bool = True
    ramp: object = default_ramp

    def __post_init__(self):
        if self.k_max < 3:
            raise ValueError("k_max must be at least 3")
        if not 1 <= self.k_min < self.k_max:
            raise ValueError("k_min must lie in [1, k_max)")
        if self.cauchy_tol <= 0:
            raise ValueError("cauchy_tol must be positive")


@dataclass
class StepRecord:
    k: int
    alpha_k: float  # angle of the boundary ring actually used
    n_rings: int
    report: object
    inf_u: float
    sup_u: float
    sup_grad_B1: float
    cauchy_delta_B2: float
    oracle_mc_max_err: float
    warm_residual: float
    cold_residual: float
    boundary_deviation: float
    started_warm: bool


@dataclass
class ExhaustionReport:
    H: float
    theta: float
    barrier: tuple
    steps: list = field(default_factory=list)
    cauchy_tol: float = 1e-6

    @property
    def solves_converged(self):
        return bool(self.steps) and all(s.report.converged for s in self.steps)

    @property
    def cauchy_converged(self):
        deltas = [s.cauchy_delta_B2 for s in self.steps if np.isfinite(s.cauchy_delta_B2)]
        return bool(deltas) and deltas[-1] <= self.cauchy_tol

    @property
    def converged(self):
        return self.solves_converged

    def column(self, name):
        return np.array([getattr(s, name) for s in self.steps])

    def within_barrier(self, slack):
        lo, hi = self.barrier
        return all(lo - slack <= s.inf_u and s.sup_u <= hi + slack for s in self.steps)


def exhaustion_grid(k_max, n_alpha, n_beta, theta):
    """One polar grid reaching the largest ball; smaller balls are its leading rings."""
    return SectionGrid(n_alpha, n_beta, ball_alpha(k_max), theta)


def _ball_rings(grid, k):
    return grid.ring_index_for(ball_alpha(k)) + 1


def _ring_matrix(u, n_rings, nb):
    R = np.empty((n_rings, nb))
    R[0] = u[0]
    R[1:] = u[1 : 1 + (n_rings - 1) * nb].reshape(n_rings - 1, nb)
    return R


def _radial_rescale(prev, n_prev, n_new, nb):
    """Stretch a field on the first n_prev rings over n_new rings (ring index scaled linearly)."""
    R = _ring_matrix(prev, n_prev, nb)
    s = np.arange(n_new) * (n_prev - 1) / (n_new - 1)
    lo = np.minimum(np.floor(s).astype(int), n_prev - 2)
    t = (s - lo)[:, None]
    S = (1 - t) * R[lo] + t * R[lo + 1]
    return np.concatenate([[S[0, 0]], S[1:].ravel()])


def _solve_ball(sub, boundary, H, F_sub, warm, cfg):
    op = operator_for(sub)
    cold_res = float(np.max(np.abs(op.residual(F_sub, H))))
    warm_res = np.inf
    if warm is not None:
        w = warm.copy()
        w[sub.boundary] = boundary
        st = op.state(w, H)
        if np.all(np.isfinite(st.residual)) and np.all(st.ellipticity > 0):
            warm_res = float(np.max(np.abs(st.residual)))
    use_warm = warm_res < cold_res
    if use_warm:
        try:
            u, rep = continuation_solve(DirichletProblem(sub, boundary, H, w), cfg, start_H=H)
            return u, rep, warm_res, cold_res, True
        except (NonConvergence, EllipticityLoss) as exc:
            logger.info("warm start failed (%s); falling back to continuation from H = 0", exc)
    u, rep = continuation_solve(DirichletProblem(sub, boundary, H, F_sub), cfg)
    return u, rep, warm_res, cold_res, False


def exhaustion_solve(phi, H, theta=0.0, n_alpha=64, n_beta=128, cfg=None, grid=None):
    """Solve Q_H[u_k] = 0 on B_k with u_k = F on the boundary ring, k = k_min..k_max.

    Returns the last iterate (on the largest ball) and the per-k monitors.
    """
    cfg = cfg or ExhaustionConfig()
    H = check_mean_curvature(H)
    grid = grid or exhaustion_grid(cfg.k_max, n_alpha, n_beta, theta)
    nb = grid.n_beta
    F = extend_boundary(phi, grid, cfg.ramp).u
    lo, hi = barrier_bounds(phi, H)
    slack = 10 * cfg.solver.tol
    report = ExhaustionReport(H, grid.theta, (lo, hi), cauchy_tol=cfg.cauchy_tol)

    ks = list(range(cfg.k_min, cfg.k_max + 1))
    rings = [_ball_rings(grid, k) for k in ks]
    if any(b <= a for a, b in zip(rings, rings[1:])) or rings[0] < 3:
        raise ValueError(f"grid too coarse to separate the balls B_{cfg.k_min}..B_{cfg.k_max}: rings {rings}")
    cauchy_mask = grid.ball_mask(ball_alpha(cfg.cauchy_radius))
    n_cauchy = int(cauchy_mask.sum())

    prev, prev_rings, u = None, None, None
    for k, n_k in zip(ks, rings):
        sub = grid.restrict(n_k)
        F_sub = grid.restrict_field(F, n_k)
        boundary = F_sub[sub.boundary]
        warm = None
        if prev is not None:
            warm = F_sub + _radial_rescale(prev - grid.restrict_field(F, prev_rings), prev_rings, n_k, nb)
        try:
            u, rep, warm_res, cold_res, started_warm = _solve_ball(sub, boundary, H, F_sub, warm, cfg.solver)
        except (NonConvergence, EllipticityLoss) as exc:
            exc.k = k
            raise
        vals = u.u
        if vals.min() < lo - slack or vals.max() > hi + slack:
            raise BarrierViolation(
                f"u_{k} leaves the barrier interval [{lo:.6g}, {hi:.6g}]: range [{vals.min():.6g}, {vals.max():.6g}]",
                k=k,
            )
        op = operator_for(sub)
        eq_alpha = sub.node_alpha[op.eq_nodes]
        grad = op.gradient_norm(vals)
        in_b1 = eq_alpha <= ball_alpha(cfg.gradient_radius) + 1e-12
        sup_grad = float(grad[in_b1].max()) if in_b1.any() else np.nan
        delta = np.nan
        if prev is not None and n_cauchy <= min(len(prev), len(vals)):
            delta = float(np.max(np.abs(vals[:n_cauchy] - prev[:n_cauchy])))
        mc_err = np.nan
        if cfg.curvature_oracle:
            mc_err = mean_curvature_oracle(embed_graph(u)).max_error(H)
        ring_dev = float(np.max(np.abs(boundary - phi(sub.beta))))
        report.steps.append(
            StepRecord(
                k=k,
                alpha_k=float(sub.alpha[-1]),
                n_rings=n_k,
                report=rep,
                inf_u=float(vals.min()),
                sup_u=float(vals.max()),
                sup_grad_B1=sup_grad,
                cauchy_delta_B2=delta,
                oracle_mc_max_err=mc_err,
                warm_residual=warm_res,
                cold_residual=cold_res,
                boundary_deviation=ring_dev,
                started_warm=started_warm,
            )
        )
        logger.info("k=%d rings=%d newton=%d delta=%.3e", k, n_k, rep.newton_iterations, delta)
        prev, prev_rings = vals, n_k
    return u, report


@dataclass
class GradientVerdict:
    values: np.ndarray
    stable: bool  # max <= 2 * median
    no_blowup: bool
    noise: float

    @property
    def bounded(self):
        return self.stable and self.no_blowup


def gradient_monitor(report_or_values, noise=1e-8):
    """Bounded-gradient verdict for sup_{B_1}|Du_k| over the recorded k.

    Stable means max <= 2 median (up to ``noise``).  A blowup trend is a
    strictly increasing sequence whose increments do not shrink.
    """
    if isinstance(report_or_values, ExhaustionReport):
        values = report_or_values.column("sup_grad_B1")
    else:
        values = np.asarray(report_or_values, float)
    if values.size < 3:
        raise ValueError("gradient monitor needs at least three values of k")
    if not np.all(np.isfinite(values)):
        return GradientVerdict(values, False, False, noise)
    stable = values.max() <= 2 * np.median(values) + noise
    inc = np.diff(values)
    growing = np.all(inc > noise)
    accelerating = np.all(np.diff(inc) >= -noise)
    return GradientVerdict(values, bool(stable), not (growing and accelerating), noise)
