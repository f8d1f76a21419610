"""Upper half-space model of H^3 and its loxodromic one-parameter groups.

Points are numpy arrays with trailing dimension 3, ``(x, y, z)`` with ``z > 0``.
The metric is the Euclidean one divided by ``z**2`` (sectional curvature -1).
The flow of a :class:`KillingMotion` is a dilation by ``e**t`` composed with a
rotation by ``theta * t`` about the vertical axis, which translates the axis
geodesic ``s -> (0, 0, e**s)``.
"""
from dataclasses import dataclass, field

import numpy as np

from .errors import ConstraintViolation

__all__ = [
    "KillingMotion",
    "ModelSpec",
    "as_points",
    "axis_point",
    "flow",
    "killing_vector",
    "hyperbolic_distance",
    "metric_inner",
]


@dataclass(frozen=True)
class KillingMotion:
    """Screw motion along the vertical axis; ``theta`` is the rotation per unit translation."""

    theta: float = 0.0

    def __post_init__(self):
        if not np.isfinite(self.theta):
            raise ValueError("theta must be finite")


@dataclass(frozen=True)
class ModelSpec:
    motion: KillingMotion = field(default_factory=KillingMotion)
    H: float = 0.0
    # curvature is fixed at -1; kept as a field so reports can echo it
    alpha: float = 1.0

    def __post_init__(self):
        if self.alpha != 1.0:
            raise ValueError("only curvature -1 (alpha = 1) is supported")
        check_mean_curvature(self.H)


def check_mean_curvature(H):
    if not np.isfinite(H) or abs(H) >= 1.0:
        raise ConstraintViolation(
            f"|H| must be < 1 for a complete H-surface with prescribed asymptotic boundary, got H={H}"
        )
    return float(H)


def as_points(q):
    q = np.asarray(q, dtype=float)
    if q.shape[-1] != 3:
        raise ValueError(f"points must have trailing dimension 3, got shape {q.shape}")
    if np.any(q[..., 2] <= 0):
        raise ValueError("points of the half-space model need z > 0")
    return q


def axis_point(s):
    """The axis geodesic gamma(s) = (0, 0, e^s)."""
    s = np.asarray(s, dtype=float)
    return np.stack([np.zeros_like(s), np.zeros_like(s), np.exp(s)], axis=-1)


def _rotate(q, angle):
    c, s = np.cos(angle), np.sin(angle)
    x, y, z = q[..., 0], q[..., 1], q[..., 2]
    return np.stack([c * x - s * y, s * x + c * y, z * np.ones_like(c)], axis=-1)


def flow(t, q, motion):
    """Apply phi_t = e^t R_{theta t} to points ``q``. ``t`` broadcasts against ``q[..., 0]``."""
    q = as_points(q)
    t = np.asarray(t, dtype=float)
    scale = np.exp(t)[..., None]
    return scale * _rotate(q, motion.theta * t)


def killing_vector(q, motion):
    """Return the generator Y(q) = q + theta J q and f = 1 / |Y|^2 (hyperbolic norm)."""
    q = as_points(q)
    x, y, z = q[..., 0], q[..., 1], q[..., 2]
    th = motion.theta
    Y = np.stack([x - th * y, y + th * x, z], axis=-1)
    norm2 = (x * x + y * y + z * z + th * th * (x * x + y * y)) / (z * z)
    return Y, 1.0 / norm2


def hyperbolic_distance(p, q):
    p = as_points(p)
    q = as_points(q)
    d2 = np.sum((p - q) ** 2, axis=-1)
    # cosh d = 1 + d2 / (2 zp zq), written through sinh(d/2) to keep precision for close points
    return 2.0 * np.arcsinh(np.sqrt(d2 / (4.0 * p[..., 2] * q[..., 2])))


def metric_inner(q, v, w):
    q = as_points(q)
    return np.sum(np.asarray(v, float) * np.asarray(w, float), axis=-1) / q[..., 2] ** 2
