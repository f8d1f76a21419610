"""Mean curvature of triangle meshes in the half-space model, by local quadratic fitting.

This path shares nothing with the operator assembly: it fits a quadratic
height function to the 2-ring of each vertex in a Euclidean tangent frame,
takes the Euclidean mean curvature kappa_e of the fit, and converts with the
conformal change of the metric g = delta / z^2:

    H_hyp = z kappa_e + n_z

for the Euclidean unit normal n along which kappa_e is measured.
"""
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .hyperbolic import KillingMotion, killing_vector

__all__ = ["CurvatureResult", "mean_curvature_oracle"]


@dataclass
class CurvatureResult:
    H: np.ndarray  # per-vertex hyperbolic mean curvature (nan where the fit was degenerate)
    valid: np.ndarray  # fit succeeded
    interior: np.ndarray  # valid and the full 2-ring lies off the mesh boundary

    def max_error(self, target, mask=None):
        mask = self.interior if mask is None else mask & self.valid
        return float(np.max(np.abs(self.H[mask] - target))) if mask.any() else np.nan


def _adjacency(n, faces):
    e = np.concatenate([faces[:, [0, 1]], faces[:, [1, 2]], faces[:, [2, 0]]])
    A = sp.coo_matrix((np.ones(len(e)), (e[:, 0], e[:, 1])), shape=(n, n)).tocsr()
    return ((A + A.T) > 0).astype(np.int8)


def _boundary_vertices(n, faces):
    e = np.sort(np.concatenate([faces[:, [0, 1]], faces[:, [1, 2]], faces[:, [2, 0]]]), axis=1)
    uniq, counts = np.unique(e, axis=0, return_counts=True)
    mask = np.zeros(n, bool)
    mask[uniq[counts == 1].ravel()] = True
    return mask


def _vertex_normals(verts, faces):
    cross = np.cross(verts[faces[:, 1]] - verts[faces[:, 0]], verts[faces[:, 2]] - verts[faces[:, 0]])
    normals = np.zeros_like(verts)
    for k in range(3):
        np.add.at(normals, faces[:, k], cross)
    return normals / np.linalg.norm(normals, axis=1, keepdims=True)


def mean_curvature_oracle(mesh, cond_max=1e10):
    """Per-vertex hyperbolic mean curvature (average of principal curvatures).

    The normal is chosen on the side of ``mesh.orientation`` when given, and
    otherwise so that <Y, eta> <= 0 for the Killing field of ``mesh.theta``.
    """
    verts = np.asarray(mesh.vertices, float)
    faces = np.asarray(mesh.faces)
    n = len(verts)
    A = _adjacency(n, faces)
    ring2 = ((A + A @ A) > 0).tolil()
    ring2.setdiag(0)
    ring2 = ring2.tocsr()
    ring2.eliminate_zeros()

    normals = _vertex_normals(verts, faces)
    if mesh.orientation is not None:
        ref = np.asarray(mesh.orientation, float)
    else:
        Y, _ = killing_vector(verts, KillingMotion(mesh.theta))
        ref = -Y
    flip = np.sum(normals * ref, axis=1) < 0
    normals[flip] *= -1

    H = np.full(n, np.nan)
    valid = np.zeros(n, bool)
    counts = np.diff(ring2.indptr)
    for k in np.unique(counts):
        if k < 5:
            continue
        vs = np.flatnonzero(counts == k)
        nbrs = np.stack([ring2.indices[ring2.indptr[v] : ring2.indptr[v + 1]] for v in vs])
        H[vs], valid[vs] = _fit(verts, normals, vs, nbrs, cond_max)

    boundary = _boundary_vertices(n, faces)
    near = boundary | (A @ boundary.astype(np.int8) > 0)
    return CurvatureResult(H, valid, valid & ~near)


def _fit(verts, normals, vs, nbrs, cond_max):
    n0 = normals[vs]
    # tangent frame orthogonal to the estimated normal
    helper = np.where(np.abs(n0[:, [0]]) < 0.9, [[1.0, 0.0, 0.0]], [[0.0, 1.0, 0.0]])
    t1 = np.cross(n0, helper)
    t1 /= np.linalg.norm(t1, axis=1, keepdims=True)
    t2 = np.cross(n0, t1)
    d = verts[nbrs] - verts[vs][:, None, :]
    xi = np.einsum("gkc,gc->gk", d, t1)
    eta = np.einsum("gkc,gc->gk", d, t2)
    w = np.einsum("gkc,gc->gk", d, n0)
    scale = np.sqrt(np.mean(xi**2 + eta**2, axis=1, keepdims=True))
    x, y = xi / scale, eta / scale
    V = np.stack([x, y, x * x, x * y, y * y], axis=-1)
    M = np.einsum("gki,gkj->gij", V, V)
    rhs = np.einsum("gki,gk->gi", V, w / scale)
    ok = np.linalg.cond(M) < cond_max
    coef = np.zeros((len(vs), 5))
    coef[ok] = np.linalg.solve(M[ok], rhs[ok][..., None])[..., 0]
    # back to unscaled derivatives of w(xi, eta)
    s = scale[:, 0]
    wx, wy = coef[:, 0], coef[:, 1]
    wxx, wxy, wyy = 2 * coef[:, 2] / s, coef[:, 3] / s, 2 * coef[:, 4] / s
    g2 = 1.0 + wx * wx + wy * wy
    kappa_e = ((1 + wy * wy) * wxx - 2 * wx * wy * wxy + (1 + wx * wx) * wyy) / (2 * g2**1.5)
    normal = (n0 - wx[:, None] * t1 - wy[:, None] * t2) / np.sqrt(g2)[:, None]
    z = verts[vs, 2]
    H = z * kappa_e + normal[:, 2]
    H[~ok] = np.nan
    return H, ok
