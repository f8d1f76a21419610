"""Discrete CMC Killing-graph operator on a :class:`SectionGrid`.

Write hat u = du + omega for the horizontal part of d(u - s), and
W^2 = f + |hat u|^2_sigma.  Twice the mean curvature of the Killing graph of u,
taken with respect to the unit normal eta with <Y, eta> <= 0, is

    M[u] = -(1/W) ( A^{ij} hat u_{j;i} - (f + W^2)/W^2 <a, hat u> ),

    A = sigma^{-1} - hat u hat u / W^2,    a = df / (2f),

and the operator is Q_H[u] = M[u] - 2H (surface dimension 2, averaged mean
curvature, so horospheres have H = 1).  ``a`` is the covector of the orbit
acceleration nabla_{D0} D0.  The covariant derivative hat u_{j;i} is the
sigma-Hessian of u, plus the symmetric part of nabla omega, plus gamma / 2.

Equivalently M[u] = -(1/nu) d_i(nu sigma^{ij} hat u_j / W) with
nu = sqrt(det sigma / f); :func:`divergence_operator` evaluates that form from
exact derivatives and serves as a cross-check.

Discretization: second-order centered differences at the nodes, coefficients
evaluated exactly.  On the rings this is the usual 9-point stencil.  At the
pole, the gradient and Hessian in the orthographic (x, y) chart come from the
Fourier modes 0, 1, 2 of ring 1.
"""
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
import scipy.sparse as sp

from .hyperbolic import flow
from .submersion import (
    SectionGrid,
    connection_form,
    orbit_speed_factor,
    orbit_speed_factor_dalpha,
    section_point,
    submersion_metric_closed,
)

__all__ = [
    "GraphField",
    "OperatorState",
    "CMCOperator",
    "operator_for",
    "assemble_residual",
    "assemble_jacobian",
    "pointwise_operator",
    "divergence_operator",
    "volume_weights",
    "Mesh",
    "embed_graph",
    "polar_faces",
]

_CSTEP = 1e-30


@dataclass(frozen=True)
class GraphField:
    """Flow-parameter heights of a Killing graph, one value per grid node."""

    grid: SectionGrid
    u: np.ndarray

    def __post_init__(self):
        u = np.asarray(self.u, dtype=float)
        if u.shape != (self.grid.n_nodes,):
            raise ValueError(f"expected {self.grid.n_nodes} values, got shape {u.shape}")
        if not np.all(np.isfinite(u)):
            raise ValueError("graph field has non-finite values")
        object.__setattr__(self, "u", u)

    def __add__(self, c):
        return GraphField(self.grid, self.u + c)


@dataclass
class OperatorState:
    """Per-node quantities of Q_H at the equation nodes (pole in the Cartesian frame)."""

    nodes: np.ndarray  # flat indices of equation nodes
    Du: np.ndarray  # (m, 2) chart gradient of u
    u_hat: np.ndarray  # (m, 2) Du + omega
    W: np.ndarray  # (m,)
    A: np.ndarray  # (m, 2, 2)
    residual: np.ndarray  # (m,)
    ellipticity: np.ndarray  # (m,) smallest eigenvalue of A relative to sigma^{-1}, i.e. f / W^2

    @property
    def elliptic(self):
        return bool(np.all(self.ellipticity > 0) and np.all(np.linalg.eigvalsh(self.A) > 0))


@dataclass(frozen=True)
class _Coefficients:
    """Metric data of the polar (or Cartesian, at the pole) chart at a set of points."""

    a: np.ndarray  # sigma_11
    b: np.ndarray  # sigma_22
    G1_11: np.ndarray  # Christoffel symbols of the diagonal metric diag(a, b)
    G1_22: np.ndarray
    G2_12: np.ndarray
    omega: np.ndarray  # omega_2 (omega_1 = 0)
    omega_sym: np.ndarray  # off-diagonal of sym(nabla omega); its diagonal vanishes
    gamma: np.ndarray  # gamma_12
    f: np.ndarray
    acc: np.ndarray  # first component of df / (2f); the second vanishes


def _polar_coefficients(alpha, theta):
    alpha = np.asarray(alpha, float)
    sa, ca = np.sin(alpha), np.cos(alpha)
    ta = sa / ca
    k = 1.0 + theta**2 * sa * sa
    a = 1.0 / ca**2
    b = ta * ta / k
    a_p = 2.0 * ta / ca**2
    b_p = 2.0 * ta / (ca**2 * k) - ta * ta * 2.0 * theta**2 * sa * ca / k**2
    om = connection_form(alpha, theta)
    om_p = 2.0 * theta * sa * ca / k**2
    G2_12 = b_p / (2 * b)
    f = orbit_speed_factor(alpha, theta)
    return _Coefficients(
        a=a,
        b=b,
        G1_11=a_p / (2 * a),
        G1_22=-b_p / (2 * a),
        G2_12=G2_12,
        omega=om,
        # entries (k, i) of nabla omega: (1, 2) = -G2_12 om, (2, 1) = om' - G2_12 om
        omega_sym=0.5 * om_p - G2_12 * om,
        gamma=-om_p,
        f=f,
        acc=orbit_speed_factor_dalpha(alpha, theta) / (2 * f),
    )


def _pole_coefficients(theta):
    one, zero = np.ones(1), np.zeros(1)
    # orthographic chart: sigma = I + O(r^2), omega ~ theta (x dy - y dx), f = 1 + O(r^2)
    return _Coefficients(one, one, zero, zero, zero, zero, zero, np.full(1, -2.0 * theta), one, zero)


def _concat(c1, c2):
    return _Coefficients(*(np.concatenate([getattr(c1, k), getattr(c2, k)]) for k in c1.__dataclass_fields__))


def _kernel(d, c, H):
    """Q_H from node derivatives d = (u1, u2, u11, u12, u22) and chart coefficients.

    Works on complex input so the Jacobian can be taken by complex step.
    Returns (Q, W2, up) where up is the sigma-raised hat u.
    """
    u1, u2, u11, u12, u22 = d
    h1 = u1
    h2 = u2 + c.omega
    p1 = h1 / c.a
    p2 = h2 / c.b
    W2 = c.f + p1 * h1 + p2 * h2
    # covariant derivative of hat u: sigma-Hessian of u + sym(nabla omega) + gamma/2 (antisymmetric)
    X11 = u11 - c.G1_11 * u1
    X22 = u22 - c.G1_22 * u1
    X12 = u12 - c.G2_12 * u2 + c.omega_sym + 0.5 * c.gamma
    X21 = u12 - c.G2_12 * u2 + c.omega_sym - 0.5 * c.gamma
    A11 = 1.0 / c.a - p1 * p1 / W2
    A22 = 1.0 / c.b - p2 * p2 / W2
    A12 = -p1 * p2 / W2
    contr = A11 * X11 + A12 * X21 + A12 * X12 + A22 * X22
    acc_term = (c.f + W2) / W2 * c.acc * p1
    W = np.sqrt(W2)
    return -(contr - acc_term) / W - 2.0 * H, W2, (p1, p2)


class CMCOperator:
    """Residual and Jacobian of Q_H on a fixed grid.

    The five derivative stencils are sparse matrices built once per grid, so a
    residual costs five sparse products plus pointwise algebra.  The Jacobian
    is sum_k diag(dQ/dd_k) D_k with dQ/dd_k from a complex step on the kernel,
    which is exact to rounding.
    """

    def __init__(self, grid):
        self.grid = grid
        g = grid
        n, nb, N = g.n_alpha, g.n_beta, g.n_nodes
        h, hb = g.h_alpha, g.h_beta
        idx = g.index
        self.eq_nodes = np.flatnonzero(g.interior)
        m = self.eq_nodes.size

        i = np.repeat(np.arange(1, n - 1), nb)
        j = np.tile(np.arange(nb), n - 2)
        r = 1 + (i - 1) * nb + j  # equation row of ring node (i, j)

        def stencil(entries):
            rows = np.concatenate([np.full(len(np.atleast_1d(c)), 0) if rr is None else rr for rr, c, _ in entries])
            cols = np.concatenate([c for _, c, _ in entries])
            vals = np.concatenate([np.broadcast_to(v, np.shape(c)) for _, c, v in entries])
            return sp.csr_matrix((vals, (rows, cols)), shape=(m, N))

        ring1 = idx(1, np.arange(nb))
        cb, sb = np.cos(g.beta), np.sin(g.beta)
        c2b, s2b = np.cos(2 * g.beta), np.sin(2 * g.beta)
        # pole rows from Fourier modes of ring 1 (mean m0, first and second harmonics)
        pole_x = [(None, ring1, 2.0 / (nb * h) * cb)]
        pole_y = [(None, ring1, 2.0 / (nb * h) * sb)]
        pole_xx = [(None, ring1, (2.0 / nb + 4.0 / nb * c2b) / h**2), (None, np.zeros(1, int), -2.0 / h**2)]
        pole_yy = [(None, ring1, (2.0 / nb - 4.0 / nb * c2b) / h**2), (None, np.zeros(1, int), -2.0 / h**2)]
        pole_xy = [(None, ring1, 4.0 / (nb * h * h) * s2b)]

        self.D1 = stencil(pole_x + [(r, idx(i + 1, j), 0.5 / h), (r, idx(i - 1, j), -0.5 / h)])
        self.D2 = stencil(pole_y + [(r, idx(i, j + 1), 0.5 / hb), (r, idx(i, j - 1), -0.5 / hb)])
        self.D11 = stencil(
            pole_xx + [(r, idx(i + 1, j), 1 / h**2), (r, idx(i, j), -2 / h**2), (r, idx(i - 1, j), 1 / h**2)]
        )
        self.D22 = stencil(
            pole_yy + [(r, idx(i, j + 1), 1 / hb**2), (r, idx(i, j), -2 / hb**2), (r, idx(i, j - 1), 1 / hb**2)]
        )
        q = 0.25 / (h * hb)
        self.D12 = stencil(
            pole_xy
            + [
                (r, idx(i + 1, j + 1), q),
                (r, idx(i + 1, j - 1), -q),
                (r, idx(i - 1, j + 1), -q),
                (r, idx(i - 1, j - 1), q),
            ]
        )
        self.stencils = (self.D1, self.D2, self.D11, self.D12, self.D22)
        self.coef = _concat(_pole_coefficients(g.theta), _polar_coefficients(g.node_alpha[self.eq_nodes[1:]], g.theta))

    def derivatives(self, u):
        """Node derivatives (u1, u2, u11, u12, u22), same values as the stencil matrices.

        Neighbour differences are formed first and combined afterwards, so the
        rounding error scales with the local variation of u rather than with
        |u| times the largest stencil weight (~ 1/(h h_beta)^2 next to the pole).
        """
        g = self.grid
        h, hb = g.h_alpha, g.h_beta
        u = np.asarray(u)
        P = u[0]
        R = u[1:].reshape(g.n_alpha - 1, g.n_beta)
        Rc = R[:-1]
        up = R[1:]
        um = np.concatenate([np.full((1, g.n_beta), P), R[:-2]])
        dap, dam = up - Rc, Rc - um
        dbp = np.roll(Rc, -1, axis=1) - Rc
        dbm = Rc - np.roll(Rc, 1, axis=1)
        ctr_up = np.roll(up, -1, axis=1) - np.roll(up, 1, axis=1)
        ctr_um = np.roll(um, -1, axis=1) - np.roll(um, 1, axis=1)
        ring = (
            (dap + dam) / (2 * h),
            (dbp + dbm) / (2 * hb),
            (dap - dam) / h**2,
            (ctr_up - ctr_um) / (4 * h * hb),
            (dbp - dbm) / hb**2,
        )
        v = R[0] - P
        nb = g.n_beta
        m0 = np.sum(v) / nb
        c1 = 2.0 / nb * np.sum(v * np.cos(g.beta))
        s1 = 2.0 / nb * np.sum(v * np.sin(g.beta))
        c2 = 2.0 / nb * np.sum(v * np.cos(2 * g.beta))
        s2 = 2.0 / nb * np.sum(v * np.sin(2 * g.beta))
        pole = (c1 / h, s1 / h, 2 * (m0 + c2) / h**2, 2 * s2 / h**2, 2 * (m0 - c2) / h**2)
        return tuple(np.concatenate([[p], r.ravel()]) for p, r in zip(pole, ring))

    def residual(self, u, H):
        return _kernel(self.derivatives(u), self.coef, H)[0]

    def curvature(self, u):
        """Twice the mean curvature of the graph at the equation nodes."""
        return self.residual(u, 0.0)

    def jacobian(self, u):
        """d Q / d u, shape (equation nodes, all nodes), CSR."""
        d = self.derivatives(u)
        J = None
        for k, D in enumerate(self.stencils):
            dc = [x.astype(complex) for x in d]
            dc[k] = dc[k] + 1j * _CSTEP
            dq = _kernel(dc, self.coef, 0.0)[0].imag / _CSTEP
            term = sp.diags(dq) @ D
            J = term if J is None else J + term
        return J.tocsr()

    def gradient(self, u):
        """Chart gradient at the equation nodes (pole in the Cartesian frame)."""
        return np.stack([self.D1 @ u, self.D2 @ u], axis=-1)

    def gradient_norm(self, u):
        """|du|_sigma at the equation nodes."""
        Du = self.gradient(u)
        return np.sqrt(Du[:, 0] ** 2 / self.coef.a + Du[:, 1] ** 2 / self.coef.b)

    def state(self, u, H):
        d = self.derivatives(u)
        Q, W2, (p1, p2) = _kernel(d, self.coef, H)
        c = self.coef
        A = np.empty((Q.size, 2, 2))
        A[:, 0, 0] = 1.0 / c.a - p1 * p1 / W2
        A[:, 1, 1] = 1.0 / c.b - p2 * p2 / W2
        A[:, 0, 1] = A[:, 1, 0] = -p1 * p2 / W2
        Du = np.stack([d[0], d[1]], axis=-1)
        u_hat = Du.copy()
        u_hat[:, 1] += c.omega
        return OperatorState(self.eq_nodes, Du, u_hat, np.sqrt(W2), A, Q, c.f / W2)


@lru_cache(maxsize=32)
def operator_for(grid):
    return CMCOperator(grid)


def _values(field):
    if isinstance(field, GraphField):
        return field.grid, field.u
    raise TypeError("expected a GraphField")


def assemble_residual(field, H):
    """Q_H at the equation nodes of ``field.grid`` and the per-node :class:`OperatorState`."""
    grid, u = _values(field)
    st = operator_for(grid).state(u, H)
    return st.residual, st


def assemble_jacobian(field, H=0.0):
    """Sparse Jacobian of the discrete residual (rows: equation nodes, columns: all nodes).

    H enters the residual as a constant shift, so the Jacobian does not depend on it.
    """
    grid, u = _values(field)
    return operator_for(grid).jacobian(u)


def volume_weights(grid):
    """Riemannian control volumes nu dalpha dbeta of the equation nodes; the pole cell is the cap alpha < h/2."""
    h = grid.h_alpha
    a = grid.alpha[1:-1]
    rings = np.sin(a) / np.cos(a) ** 3 * h * grid.h_beta
    pole = np.pi * np.tan(h / 2) ** 2
    return np.concatenate([[pole], np.repeat(rings, grid.n_beta)])


def pointwise_operator(alpha, derivs, theta, H):
    """Q_H at polar-chart points from exact derivatives (u_a, u_b, u_aa, u_ab, u_bb) of a smooth u."""
    c = _polar_coefficients(alpha, theta)
    return _kernel(tuple(np.asarray(x, float) for x in derivs), c, H)[0]


def divergence_operator(alpha, beta, u_fn, theta, H, h=1e-4):
    """Q_H of a smooth function from the divergence form, by nested centered differences.

    ``u_fn(alpha, beta)`` must be vectorized.  Independent of the kernel used
    by the discrete operator: only sigma, f and omega enter, not A, the
    Christoffel symbols or the acceleration covector.
    """
    alpha = np.asarray(alpha, float)
    beta = np.asarray(beta, float)

    def flux(a, b):
        sig = submersion_metric_closed(a, theta)
        f = orbit_speed_factor(a, theta)
        nu = np.sqrt(np.linalg.det(sig) / f)
        ua = (u_fn(a + h, b) - u_fn(a - h, b)) / (2 * h)
        ub = (u_fn(a, b + h) - u_fn(a, b - h)) / (2 * h) + connection_form(a, theta)
        W = np.sqrt(f + ua**2 / sig[..., 0, 0] + ub**2 / sig[..., 1, 1])
        return nu * ua / sig[..., 0, 0] / W, nu * ub / sig[..., 1, 1] / W

    Fa_p, _ = flux(alpha + h, beta)
    Fa_m, _ = flux(alpha - h, beta)
    _, Fb_p = flux(alpha, beta + h)
    _, Fb_m = flux(alpha, beta - h)
    sig = submersion_metric_closed(alpha, theta)
    nu = np.sqrt(np.linalg.det(sig) / orbit_speed_factor(alpha, theta))
    div = (Fa_p - Fa_m) / (2 * h) + (Fb_p - Fb_m) / (2 * h)
    return -div / nu - 2.0 * H


# ---------------------------------------------------------------------------
# Embedding of the graph as a triangle mesh


@dataclass
class Mesh:
    vertices: np.ndarray  # (V, 3) half-space coordinates
    faces: np.ndarray  # (F, 3) vertex indices, 0-based
    theta: float = 0.0
    # optional per-vertex reference direction picking the normal; None means -Y
    orientation: "np.ndarray | None" = None

    @property
    def n_vertices(self):
        return len(self.vertices)

    def edges(self):
        e = np.concatenate([self.faces[:, [0, 1]], self.faces[:, [1, 2]], self.faces[:, [2, 0]]])
        return np.unique(np.sort(e, axis=1), axis=0)

    def euler_characteristic(self):
        return self.n_vertices - len(self.edges()) + len(self.faces)


def polar_faces(n_alpha, n_beta):
    """Triangulation of the polar grid: a fan at the pole, two triangles per quad elsewhere."""
    idx = lambda i, j: 1 + (i - 1) * n_beta + (j % n_beta)  # noqa: E731
    j = np.arange(n_beta)
    fan = np.stack([np.zeros(n_beta, int), idx(1, j), idx(1, j + 1)], axis=1)
    quads = []
    for i in range(1, n_alpha - 1):
        a, b = idx(i, j), idx(i, j + 1)
        c, d = idx(i + 1, j + 1), idx(i + 1, j)
        quads.append(np.stack([a, d, c], axis=1))
        quads.append(np.stack([a, c, b], axis=1))
    return np.concatenate([fan] + quads).astype(np.int64)


def embed_graph(field):
    """Triangle mesh of Gr(u) = {phi(u(p), p)} in half-space coordinates."""
    grid, u = _values(field)
    p = section_point(grid.node_alpha, grid.node_beta)
    verts = flow(u, p, grid.motion)
    return Mesh(verts, polar_faces(grid.n_alpha, grid.n_beta), theta=grid.theta)
