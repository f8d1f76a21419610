"""The hemisphere Killing section and the orbit geometry of a loxodromic flow.

The section is P = {|q| = 1, z > 0} with polar chart (alpha, beta),
alpha measured from the pole o = (0, 0, 1).  Every orbit of the flow meets P
exactly once, at flow parameter s = log|q|.  In the coordinates
(alpha, beta, s) the hyperbolic metric splits as

    g = sigma + (1/f) (ds + omega)^2

with sigma the Riemannian submersion metric on P, f = 1/|Y|^2 and omega the
connection 1-form of the horizontal distribution (omega = omega_beta dbeta).
Everything here is independent of s and of beta.
"""
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .hyperbolic import KillingMotion, as_points, killing_vector, metric_inner

__all__ = [
    "H_GEOM",
    "SectionGrid",
    "KillingCylinder",
    "section_point",
    "project",
    "orbit_speed_factor",
    "orbit_speed_factor_dalpha",
    "connection_form",
    "submersion_metric",
    "submersion_metric_closed",
    "gamma_terms",
    "gamma_closed",
    "acceleration_term",
    "acceleration_numeric",
    "ball_alpha",
    "cylinder_mean_curvature",
]

H_GEOM = 1e-5


def _motion(motion):
    return motion if isinstance(motion, KillingMotion) else KillingMotion(float(motion))


def section_point(alpha, beta):
    alpha = np.asarray(alpha, dtype=float)
    beta = np.asarray(beta, dtype=float)
    sa = np.sin(alpha)
    return np.stack(
        [sa * np.cos(beta), sa * np.sin(beta), np.cos(alpha) * np.ones_like(beta)], axis=-1
    )


def _section_tangents(alpha, beta):
    """Ambient images of the chart vectors d/dalpha and d/dbeta at section_point(alpha, beta)."""
    ca, sa = np.cos(alpha), np.sin(alpha)
    cb, sb = np.cos(beta), np.sin(beta)
    d_alpha = np.stack([ca * cb, ca * sb, -sa * np.ones_like(cb)], axis=-1)
    d_beta = np.stack([-sa * sb, sa * cb, np.zeros_like(ca * cb)], axis=-1)
    return d_alpha, d_beta


def project(q, motion):
    """Projection along orbits onto P.  Returns ``(alpha, beta, s)`` with q = phi_s(section_point(alpha, beta))."""
    motion = _motion(motion)
    q = as_points(q)
    r = np.linalg.norm(q, axis=-1)
    s = np.log(r)
    p = q / r[..., None]
    ang = -motion.theta * s
    c, sn = np.cos(ang), np.sin(ang)
    px = c * p[..., 0] - sn * p[..., 1]
    py = sn * p[..., 0] + c * p[..., 1]
    alpha = np.arctan2(np.hypot(px, py), p[..., 2])
    beta = np.mod(np.arctan2(py, px), 2.0 * np.pi)
    return alpha, beta, s


def orbit_speed_factor(alpha, theta):
    """f = 1/|Y|^2 on P, as a function of the polar angle only."""
    s2 = np.sin(alpha) ** 2
    return np.cos(alpha) ** 2 / (1.0 + theta**2 * s2)


def orbit_speed_factor_dalpha(alpha, theta):
    sa, ca = np.sin(alpha), np.cos(alpha)
    return -2.0 * sa * ca * (1.0 + theta**2) / (1.0 + theta**2 * sa * sa) ** 2


def connection_form(alpha, theta):
    """The beta-component of omega; the alpha-component vanishes identically."""
    s2 = np.sin(alpha) ** 2
    return theta * s2 / (1.0 + theta**2 * s2)


def _horizontal(q, v, motion):
    Y, _ = killing_vector(q, motion)
    coef = metric_inner(q, v, Y) / metric_inner(q, Y, Y)
    return v - coef[..., None] * Y


def submersion_metric(alpha, beta, motion):
    """sigma at section_point(alpha, beta) from the horizontal projection of the chart vectors.

    Returns an array of shape ``(..., 2, 2)``.  Degenerates at the equator.
    """
    motion = _motion(motion)
    alpha = np.asarray(alpha, dtype=float)
    if np.any(alpha >= np.pi / 2):
        raise ValueError("submersion metric is degenerate at the equator alpha = pi/2")
    beta = np.asarray(beta, dtype=float) * np.ones_like(alpha)
    p = section_point(alpha, beta)
    ea, eb = _section_tangents(alpha, beta)
    ha, hb = _horizontal(p, ea, motion), _horizontal(p, eb, motion)
    g_aa = metric_inner(p, ha, ha)
    g_ab = metric_inner(p, ha, hb)
    g_bb = metric_inner(p, hb, hb)
    return np.stack([np.stack([g_aa, g_ab], -1), np.stack([g_ab, g_bb], -1)], -2)


def submersion_metric_closed(alpha, theta):
    """Closed form diag(sec^2, tan^2 / (1 + theta^2 sin^2)) of sigma in the polar chart."""
    alpha = np.asarray(alpha, dtype=float)
    ca2 = np.cos(alpha) ** 2
    s2 = np.sin(alpha) ** 2
    out = np.zeros(alpha.shape + (2, 2))
    out[..., 0, 0] = 1.0 / ca2
    out[..., 1, 1] = s2 / (ca2 * (1.0 + theta**2 * s2))
    return out


# ---------------------------------------------------------------------------
# Horizontal lifts as ambient vector fields, used for the numeric brackets.


def _lift_field(q, chart_vector, motion):
    """Basic horizontal field on M that is Pi-related to a chart vector field on P.

    ``chart_vector(alpha, beta)`` must return the ambient tangent vector on P.
    The flow is linear in q, so its differential is the same matrix.
    """
    alpha, beta, s = project(q, motion)
    p = section_point(alpha, beta)
    v = _horizontal(p, chart_vector(alpha, beta), motion)
    return flow_linear(s, v, motion)


def flow_linear(s, v, motion):
    s = np.asarray(s, dtype=float)
    ang = motion.theta * s
    c, sn = np.cos(ang), np.sin(ang)
    out = np.stack(
        [c * v[..., 0] - sn * v[..., 1], sn * v[..., 0] + c * v[..., 1], v[..., 2] * np.ones_like(c)],
        axis=-1,
    )
    return np.exp(s)[..., None] * out


def _bracket(q, X, Z, h):
    """[X, Z](q) for ambient vector fields given as callables, centered differences of step h."""
    xq, zq = X(q), Z(q)
    dZ_x = (Z(q + h * xq) - Z(q - h * xq)) / (2 * h)
    dX_z = (X(q + h * zq) - X(q - h * zq)) / (2 * h)
    return dZ_x - dX_z


def _chart_frames(chart):
    if chart == "polar":
        return (lambda a, b: _section_tangents(a, b)[0], lambda a, b: _section_tangents(a, b)[1])
    if chart == "cartesian":
        # orthographic chart (x, y) of the hemisphere, used at the pole
        def ex(a, b):
            p = section_point(a, b)
            return np.stack([np.ones_like(p[..., 0]), np.zeros_like(p[..., 0]), -p[..., 0] / p[..., 2]], -1)

        def ey(a, b):
            p = section_point(a, b)
            return np.stack([np.zeros_like(p[..., 0]), np.ones_like(p[..., 0]), -p[..., 1] / p[..., 2]], -1)

        return ex, ey
    raise ValueError(f"unknown chart {chart!r}")


def gamma_terms(alpha, beta, motion, h=H_GEOM, chart="polar"):
    """gamma_ki = f^(1/2) <[D_k, D_i], D_0> for the lifts D_1, D_2 of the chart frame.

    Computed from numerical brackets of the horizontal lifts in ambient
    coordinates.  Returns an antisymmetric array of shape ``(..., 2, 2)``.
    """
    motion = _motion(motion)
    alpha = np.asarray(alpha, dtype=float)
    if np.any(alpha >= np.pi / 2):
        raise ValueError("gamma is undefined at the equator")
    beta = np.asarray(beta, dtype=float) * np.ones_like(alpha)
    e1, e2 = _chart_frames(chart)
    q = section_point(alpha, beta)
    X = lambda x: _lift_field(x, e1, motion)  # noqa: E731
    Z = lambda x: _lift_field(x, e2, motion)  # noqa: E731
    br = _bracket(q, X, Z, h)
    Y, f = killing_vector(q, motion)
    # f^(1/2) <., f^(1/2) Y> = f <., Y>
    g12 = f * metric_inner(q, br, Y)
    out = np.zeros(alpha.shape + (2, 2))
    out[..., 0, 1] = g12
    out[..., 1, 0] = -g12
    return out


def vertical_covariant(alpha, beta, motion, h=H_GEOM):
    """G_ki = f <nabla_{D_k} D_i, Y> for all ordered pairs, by direct covariant differentiation.

    Each entry is computed separately, so antisymmetry of G (and 2 G = gamma)
    is a genuine check of the Killing structure rather than of the bracket formula.
    """
    motion = _motion(motion)
    alpha = np.asarray(alpha, dtype=float)
    beta = np.asarray(beta, dtype=float) * np.ones_like(alpha)
    q = section_point(alpha, beta)
    frames = _chart_frames("polar")
    fields = [lambda x, e=e: _lift_field(x, e, motion) for e in frames]
    Y, f = killing_vector(q, motion)
    out = np.zeros(alpha.shape + (2, 2))
    for k, Xk in enumerate(fields):
        xk = Xk(q)
        for i, Xi in enumerate(fields):
            vi = Xi(q)
            cov = (Xi(q + h * xk) - Xi(q - h * xk)) / (2 * h) + _levi_civita(q, xk, vi)
            out[..., k, i] = f * metric_inner(q, cov, Y)
    return out


def gamma_closed(alpha, theta):
    """gamma_12 in the polar chart, equal to -d(omega_beta)/d(alpha)."""
    sa, ca = np.sin(alpha), np.cos(alpha)
    return -2.0 * theta * sa * ca / (1.0 + theta**2 * sa * sa) ** 2


def acceleration_term(alpha, beta, motion):
    """Chart covector of Pi_* (nabla_{D0} D0), via the Killing identity nabla_{D0} D0 = grad f / (2 f).

    Only the alpha-component is nonzero because f depends on alpha alone.
    """
    motion = _motion(motion)
    alpha = np.asarray(alpha, dtype=float)
    if np.any(alpha >= np.pi / 2):
        raise ValueError("acceleration term is undefined at the equator")
    beta = np.asarray(beta, dtype=float) * np.ones_like(alpha)
    th = motion.theta
    out = np.zeros(alpha.shape + (2,))
    out[..., 0] = orbit_speed_factor_dalpha(alpha, th) / (2.0 * orbit_speed_factor(alpha, th))
    return out


def _levi_civita(q, X, V):
    """Christoffel part of nabla_X V for g = delta / z^2."""
    z = q[..., 2:3]
    xz, vz = X[..., 2:3], V[..., 2:3]
    xv = np.sum(X * V, axis=-1, keepdims=True)
    ez = np.zeros_like(q)
    ez[..., 2] = 1.0
    return -(xz / z) * V - (vz / z) * X + (xv / z) * ez


def acceleration_numeric(alpha, beta, motion, h=H_GEOM):
    """Direct covariant differentiation of D0 = Y/|Y| along itself, pushed to a chart covector.

    Independent of :func:`acceleration_term`; used to validate the Killing identity.
    """
    motion = _motion(motion)
    alpha = np.asarray(alpha, dtype=float)
    beta = np.asarray(beta, dtype=float) * np.ones_like(alpha)
    q = section_point(alpha, beta)

    def D0(x):
        Y, f = killing_vector(x, motion)
        return np.sqrt(f)[..., None] * Y

    d = D0(q)
    dir_deriv = (D0(q + h * d) - D0(q - h * d)) / (2 * h)
    acc = dir_deriv + _levi_civita(q, d, d)
    ea, eb = _section_tangents(alpha, beta)
    ha, hb = _horizontal(q, ea, motion), _horizontal(q, eb, motion)
    # acc is horizontal; its sigma-covector is (<acc, h_alpha>, <acc, h_beta>)
    return np.stack([metric_inner(q, acc, ha), metric_inner(q, acc, hb)], axis=-1)


def ball_alpha(rho):
    """Polar angle of the geodesic sphere of radius rho about the pole (theta = 0 induced metric)."""
    rho = np.asarray(rho, dtype=float)
    if np.any(rho <= 0):
        raise ValueError("ball radius must be positive")
    return np.arccos(1.0 / np.cosh(rho))


def cylinder_mean_curvature(d):
    """Mean curvature (average of principal curvatures, inner normal) of the tube of radius d about the axis."""
    d = np.asarray(d, dtype=float)
    if np.any(d <= 0):
        raise ValueError("tube radius must be positive")
    return 0.5 * (1.0 / np.tanh(d) + np.tanh(d))


@dataclass(frozen=True)
class KillingCylinder:
    """Equidistant tube of hyperbolic radius ``d`` about the axis geodesic."""

    d: float

    def __post_init__(self):
        if not self.d > 0:
            raise ValueError("tube radius must be positive")

    @property
    def cone_angle(self):
        # the tube is the Euclidean cone of half-angle psi with tan psi = sinh d
        return float(np.arctan(np.sinh(self.d)))

    @property
    def mean_curvature(self):
        return float(cylinder_mean_curvature(self.d))


# ---------------------------------------------------------------------------


class SectionGrid:
    """Uniform polar grid on {alpha <= alpha_max} of the section.

    Node 0 is the pole; ring ``i`` (1 <= i < n_alpha) holds ``n_beta`` nodes
    at alpha = i * h_alpha.  Flat node index of (i, j) is 1 + (i - 1) n_beta + j.
    The outermost ring is the Dirichlet boundary.  Instances are immutable
    after construction and can be shared.

    Per-node caches use the polar chart on rings and the orthographic
    (x, y) chart at the pole, where sigma is the identity.
    """

    def __init__(self, n_alpha, n_beta, alpha_max, theta=0.0, h_alpha=None):
        if n_alpha < 3:
            raise ValueError("need at least 3 rings (pole, interior, boundary)")
        if n_beta < 4 or n_beta % 2:
            raise ValueError("n_beta must be even and >= 4")
        if not 0 < alpha_max < np.pi / 2:
            raise ValueError("alpha_max must lie in (0, pi/2); the equator is never a node")
        self.n_alpha = int(n_alpha)
        self.n_beta = int(n_beta)
        self.theta = float(theta)
        self.motion = KillingMotion(self.theta)
        self.h_alpha = float(h_alpha) if h_alpha is not None else alpha_max / (n_alpha - 1)
        self.h_beta = 2.0 * np.pi / self.n_beta
        self.alpha = np.arange(self.n_alpha) * self.h_alpha
        self.alpha_max = float(self.alpha[-1])
        self.beta = np.arange(self.n_beta) * self.h_beta
        self.n_nodes = 1 + (self.n_alpha - 1) * self.n_beta

    def __repr__(self):
        return (
            f"SectionGrid(n_alpha={self.n_alpha}, n_beta={self.n_beta}, "
            f"alpha_max={self.alpha_max:.6g}, theta={self.theta:g})"
        )

    # -- bookkeeping -------------------------------------------------------

    def index(self, i, j):
        i = np.asarray(i)
        j = np.asarray(j) % self.n_beta
        return np.where(i == 0, 0, 1 + (i - 1) * self.n_beta + j)

    @cached_property
    def node_alpha(self):
        return np.concatenate([[0.0], np.repeat(self.alpha[1:], self.n_beta)])

    @cached_property
    def node_beta(self):
        return np.concatenate([[0.0], np.tile(self.beta, self.n_alpha - 1)])

    @cached_property
    def node_ring(self):
        return np.concatenate([[0], np.repeat(np.arange(1, self.n_alpha), self.n_beta)])

    @cached_property
    def interior(self):
        """Boolean mask of nodes carrying an equation (everything but the outer ring)."""
        return self.node_ring < self.n_alpha - 1

    @cached_property
    def boundary(self):
        return ~self.interior

    def rings(self, u):
        """View a flat field as (pole value, array of shape (n_alpha - 1, n_beta))."""
        u = np.asarray(u)
        return u[0], u[1:].reshape(self.n_alpha - 1, self.n_beta)

    def from_rings(self, pole, ring_values):
        return np.concatenate([[pole], np.asarray(ring_values, float).ravel()])

    def points(self):
        return section_point(self.node_alpha, self.node_beta)

    def ring_index_for(self, alpha):
        """Largest ring index whose angle does not exceed ``alpha``."""
        i = int(np.floor(alpha / self.h_alpha + 1e-9))
        return min(i, self.n_alpha - 1)

    def restrict(self, n_alpha):
        """Sub-grid made of the first ``n_alpha`` rings (same spacings, same node angles)."""
        if not 3 <= n_alpha <= self.n_alpha:
            raise ValueError(f"cannot restrict to {n_alpha} rings")
        return SectionGrid(n_alpha, self.n_beta, self.alpha[n_alpha - 1], self.theta, h_alpha=self.h_alpha)

    def restrict_field(self, u, n_alpha):
        return np.asarray(u)[: 1 + (n_alpha - 1) * self.n_beta]

    def ball_mask(self, alpha_radius):
        return self.node_alpha <= alpha_radius + 1e-12

    # -- cached per-node geometry ------------------------------------------

    @cached_property
    def f(self):
        return orbit_speed_factor(self.node_alpha, self.theta)

    @cached_property
    def df(self):
        out = np.zeros((self.n_nodes, 2))
        out[:, 0] = orbit_speed_factor_dalpha(self.node_alpha, self.theta)
        out[0] = 0.0
        return out

    @cached_property
    def sigma(self):
        out = submersion_metric_closed(self.node_alpha, self.theta)
        out[0] = np.eye(2)
        return out

    @cached_property
    def sigma_inv(self):
        return np.linalg.inv(self.sigma)

    @cached_property
    def gamma(self):
        # beta-independent: evaluate once per ring, numerically, then broadcast
        ring_gamma = gamma_terms(self.alpha[1:], 0.0, self.motion)
        pole_gamma = gamma_terms(0.0, 0.0, self.motion, chart="cartesian")
        out = np.empty((self.n_nodes, 2, 2))
        out[0] = pole_gamma
        out[1:] = np.repeat(ring_gamma, self.n_beta, axis=0)
        return out

    @cached_property
    def acceleration(self):
        out = acceleration_term(self.node_alpha, self.node_beta, self.motion)
        out[0] = 0.0
        return out

    @cached_property
    def omega(self):
        """Chart covector of the connection form at each node (zero at the pole)."""
        out = np.zeros((self.n_nodes, 2))
        out[:, 1] = connection_form(self.node_alpha, self.theta)
        out[0] = 0.0
        return out

    def check(self):
        """Assert the structural invariants of the cached coefficients."""
        for name in ("f", "df", "sigma", "sigma_inv", "gamma", "acceleration", "omega"):
            if not np.all(np.isfinite(getattr(self, name))):
                raise AssertionError(f"non-finite {name} cache")
        if np.any(self.f <= 0):
            raise AssertionError("f must be positive")
        if np.any(np.linalg.eigvalsh(self.sigma) <= 0):
            raise AssertionError("sigma must be positive definite")
        if not np.allclose(self.gamma, -np.swapaxes(self.gamma, -1, -2)):
            raise AssertionError("gamma must be antisymmetric")
        return True
