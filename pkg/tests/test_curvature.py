import numpy as np

from hypcmc import Mesh, mean_curvature_oracle
from hypcmc.oracles import hemisphere_mesh, horosphere_mesh


def test_orientation_flip_changes_sign():
    m = horosphere_mesh()
    down = Mesh(m.vertices, m.faces, orientation=-m.orientation)
    up_H = mean_curvature_oracle(m)
    down_H = mean_curvature_oracle(down)
    assert np.allclose(up_H.H[up_H.interior], 1.0)
    assert np.allclose(down_H.H[down_H.interior], -1.0)


def test_interior_excludes_boundary_neighbourhood():
    m = horosphere_mesh(n=11)
    r = mean_curvature_oracle(m)
    # boundary and the ring next to it are excluded on an 11 x 11 patch
    assert r.interior.sum() == 7 * 7


def test_geodesic_sphere():
    # Euclidean sphere of center (0,0,a), radius R < a: hyperbolic sphere with H = a / R (inward normal)
    a, R = 2.0, 0.5
    th = np.linspace(0.2, np.pi - 0.2, 40)
    ph = np.arange(80) * 2 * np.pi / 80
    T, P = np.meshgrid(th, ph, indexing="ij")
    verts = np.stack([R * np.sin(T) * np.cos(P), R * np.sin(T) * np.sin(P), a + R * np.cos(T)], -1).reshape(-1, 3)
    idx = lambda i, j: i * 80 + j % 80  # noqa: E731
    faces = []
    for i in range(39):
        for j in range(80):
            faces += [(idx(i, j), idx(i + 1, j), idx(i + 1, j + 1)), (idx(i, j), idx(i + 1, j + 1), idx(i, j + 1))]
    inward = np.array([0, 0, a]) - verts
    r = mean_curvature_oracle(Mesh(verts, np.array(faces), orientation=inward))
    assert r.max_error(a / R) < 1e-2 * a / R


def test_default_orientation_uses_killing_field():
    m = hemisphere_mesh()
    r = mean_curvature_oracle(m)
    assert r.max_error(0.0) < 1e-2
    assert r.valid.all()


def test_max_error_empty_mask_is_nan():
    r = mean_curvature_oracle(horosphere_mesh(n=4))
    assert not r.interior.any()
    assert np.isnan(r.max_error(1.0))
