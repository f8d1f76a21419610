"""Reference solutions: umbilic caps, the equivariant ODE, and test surfaces with known curvature."""
from dataclasses import dataclass

import numpy as np
from scipy.integrate import solve_ivp
from scipy.optimize import brentq

from .errors import ShootingFailure
from .hyperbolic import check_mean_curvature
from .operator import Mesh, polar_faces
from .submersion import (
    KillingCylinder,
    connection_form,
    orbit_speed_factor,
    section_point,
    submersion_metric_closed,
)

__all__ = [
    "CapSolution",
    "umbilic_cap",
    "cap_gradient_norm",
    "EquivariantProfile",
    "equivariant_ode_solve",
    "ReferenceSurface",
    "reference_surfaces",
]


def _cap_slope(H):
    return H / np.sqrt(1.0 - H * H)


def umbilic_cap(H, rho0, alpha):
    """Height u(alpha) of the CMC-H umbilic cap bounded by the circle of Euclidean radius rho0 at infinity.

    The cap is the Euclidean sphere of center (0, 0, a) and radius
    rho0 / sqrt(1 - H^2), a = H rho0 / sqrt(1 - H^2), seen as a graph over the
    unit hemisphere along the rays from the origin.
    """
    H = check_mean_curvature(H)
    if rho0 <= 0:
        raise ValueError("rho0 must be positive")
    a = H * rho0 / np.sqrt(1.0 - H * H)
    ca = np.cos(np.asarray(alpha, float))
    return np.log(a * ca + np.sqrt(a * a * ca * ca + rho0 * rho0))


def cap_gradient_norm(H, alpha):
    """|du|_sigma of a cap, cos(alpha) |u'(alpha)|; independent of rho0 (caps differ by flow translations)."""
    H = check_mean_curvature(H)
    alpha = np.asarray(alpha, float)
    # u'(alpha) = -H sin / sqrt(1 - H^2 sin^2)
    return np.cos(alpha) * np.abs(H) * np.sin(alpha) / np.sqrt(1.0 - H * H * np.sin(alpha) ** 2)


@dataclass(frozen=True)
class CapSolution:
    H: float
    rho0: float

    def __post_init__(self):
        check_mean_curvature(self.H)
        if self.rho0 <= 0:
            raise ValueError("rho0 must be positive")

    @property
    def a(self):
        return self.H * self.rho0 / np.sqrt(1.0 - self.H**2)

    def __call__(self, alpha):
        return umbilic_cap(self.H, self.rho0, alpha)

    @property
    def apex_height(self):
        """u(0) - u(pi/2), equal to artanh(H)."""
        return float(self(0.0) - self(np.pi / 2))

    @classmethod
    def through_ring(cls, H, alpha_ring, value):
        """The cap taking the value ``value`` on the circle alpha = alpha_ring of the section."""
        b = _cap_slope(H)
        return cls(H, float(np.exp(value - np.arcsinh(b * np.cos(alpha_ring)))))


@dataclass
class EquivariantProfile:
    theta: float
    H: float
    c: float
    alpha: np.ndarray
    u: np.ndarray
    _sol: object = None

    def __call__(self, alpha):
        alpha = np.asarray(alpha, float)
        return self._sol(np.maximum(alpha, self.alpha[0]))[0] + self._offset(alpha)

    def _offset(self, alpha):
        # below the first integration point use the pole series u(a) ~ u(a0) - H (a^2 - a0^2) / 2
        a0 = self.alpha[0]
        return np.where(alpha < a0, -0.5 * self.H * (alpha**2 - a0**2), 0.0)

    @property
    def pole_value(self):
        return float(self(0.0))


def _reduced_rhs(theta, H):
    """First-order system for a beta-independent graph: y = (u, P), P the radial flux.

    P = nu sigma^{11} u' / W and the equation is P' = -2 H nu, with
    nu = sqrt(det sigma / f) and W^2 = f + sigma^{11} u'^2 + sigma^{22} omega^2.
    """

    def rhs(alpha, y):
        sig = submersion_metric_closed(alpha, theta)
        f = orbit_speed_factor(alpha, theta)
        s11, s22 = 1.0 / sig[0, 0], 1.0 / sig[1, 1]
        nu = np.sqrt(sig[0, 0] * sig[1, 1] / f)
        om = connection_form(alpha, theta)
        E = f + s22 * om * om
        kappa = nu * s11
        P = y[1]
        disc = kappa * kappa - P * P * s11
        if disc <= 0:
            raise ShootingFailure(f"flux exceeds the graph bound at alpha={alpha:.6g}")
        du = P * np.sqrt(E) / np.sqrt(disc)
        return [du, -2.0 * H * nu]

    return rhs


def equivariant_ode_solve(theta, H, c, alpha_max, rtol=1e-12, atol=1e-14, alpha0=1e-4):
    """Solve the rotationally symmetric reduction with u'(0) = 0 and u(alpha_max) = c by shooting.

    Integrates from a small alpha0 with the pole series, shooting on the pole
    value with Brent's method.  Independent of the 2D grid code.
    """
    H = check_mean_curvature(H)
    if not 0 < alpha_max < np.pi / 2:
        raise ValueError("alpha_max must lie in (0, pi/2)")
    rhs = _reduced_rhs(theta, H)
    P0 = -H * np.tan(alpha0) ** 2  # -2H * integral of nu from 0 to alpha0

    def shoot(u0, dense=False):
        y0 = [u0 - 0.5 * H * alpha0**2, P0]
        sol = solve_ivp(rhs, (alpha0, alpha_max), y0, method="DOP853", rtol=rtol, atol=atol, dense_output=dense)
        if not sol.success:
            raise ShootingFailure(f"integration failed: {sol.message}")
        return sol

    def miss(u0):
        return shoot(u0).y[0, -1] - c

    width = np.arctanh(abs(H)) + 1.0
    lo, hi = c - width, c + width
    f_lo, f_hi = miss(lo), miss(hi)
    if f_lo * f_hi > 0:
        raise ShootingFailure("pole value not bracketed", bracket=(lo, hi, f_lo, f_hi))
    u0 = brentq(miss, lo, hi, xtol=1e-14, rtol=4 * np.finfo(float).eps)
    sol = shoot(u0, dense=True)
    return EquivariantProfile(theta, H, c, sol.t, sol.y[0], sol.sol)


# ---------------------------------------------------------------------------


@dataclass
class ReferenceSurface:
    name: str
    mesh: Mesh
    exact_H: float


def _grid_faces(n_rows, n_cols, periodic=False):
    idx = lambda r, c: r * n_cols + (c % n_cols)  # noqa: E731
    faces = []
    c_range = range(n_cols if periodic else n_cols - 1)
    for r in range(n_rows - 1):
        for c in c_range:
            a, b, cc, d = idx(r, c), idx(r, c + 1), idx(r + 1, c + 1), idx(r + 1, c)
            faces.append((a, d, cc))
            faces.append((a, cc, b))
    return np.array(faces, dtype=np.int64)


def horosphere_mesh(n=41, half_width=0.5, height=1.0):
    x = np.linspace(-half_width, half_width, n)
    X, Y = np.meshgrid(x, x, indexing="ij")
    verts = np.stack([X.ravel(), Y.ravel(), np.full(X.size, height)], axis=1)
    up = np.tile([0.0, 0.0, 1.0], (len(verts), 1))
    return Mesh(verts, _grid_faces(n, n), orientation=up)


def hemisphere_mesh(n_alpha=24, n_beta=64, alpha_max=1.0):
    a = np.arange(n_alpha) * alpha_max / (n_alpha - 1)
    b = np.arange(n_beta) * 2 * np.pi / n_beta
    pts = [section_point(0.0, 0.0)[None]]
    pts.append(section_point(np.repeat(a[1:], n_beta), np.tile(b, n_alpha - 1)))
    return Mesh(np.concatenate(pts), polar_faces(n_alpha, n_beta))


def tube_mesh(d=1.0, n_t=30, n_beta=96, t_range=(0.0, 1.0)):
    psi = KillingCylinder(d).cone_angle
    t = np.linspace(*t_range, n_t)
    b = np.arange(n_beta) * 2 * np.pi / n_beta
    T, B = np.meshgrid(t, b, indexing="ij")
    verts = np.exp(T.ravel())[:, None] * np.stack(
        [np.sin(psi) * np.cos(B.ravel()), np.sin(psi) * np.sin(B.ravel()), np.full(B.size, np.cos(psi))], axis=1
    )
    inward = np.stack([-verts[:, 0], -verts[:, 1], np.zeros(len(verts))], axis=1)
    return Mesh(verts, _grid_faces(n_t, n_beta, periodic=True), orientation=inward)


def reference_surfaces():
    """Deterministic test meshes with their exact hyperbolic mean curvature (average convention)."""
    tube = KillingCylinder(1.0)
    return {
        "hemisphere": ReferenceSurface("hemisphere", hemisphere_mesh(), 0.0),
        "horosphere": ReferenceSurface("horosphere", horosphere_mesh(), 1.0),
        "tube": ReferenceSurface("tube", tube_mesh(tube.d), tube.mean_curvature),
    }
