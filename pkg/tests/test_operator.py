import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from hypcmc import CapSolution, GraphField, SectionGrid, assemble_jacobian, assemble_residual, ball_alpha, embed_graph
from hypcmc.operator import divergence_operator, operator_for, pointwise_operator, volume_weights


def _grid(n, theta=0.0, k=3):
    return SectionGrid(n, 2 * n, ball_alpha(k), theta)


def _smooth(g):
    a, b = g.node_alpha, g.node_beta
    return 0.3 * np.cos(b) * np.sin(a) + 0.2 * np.sin(2 * b) * np.sin(a) ** 2 + 0.1 * np.cos(a)


@given(st.floats(-0.99, 0.99), st.floats(-3, 3), st.floats(-2, 2))
def test_constants_give_minus_two_H(H, theta, c):
    g = SectionGrid(8, 16, 1.2, theta)
    res, st_ = assemble_residual(GraphField(g, np.full(g.n_nodes, c)), H)
    assert np.allclose(res, -2 * H, atol=1e-12)
    assert st_.elliptic


@pytest.mark.parametrize("theta", [0.0, 1.0])
def test_cap_residual_second_order(theta):
    cap = CapSolution(0.5, 1.0)
    errs = []
    for n in (16, 32, 64):
        g = _grid(n, theta)
        errs.append(np.max(np.abs(operator_for(g).residual(cap(g.node_alpha), 0.5))))
    ratios = np.array(errs[:-1]) / np.array(errs[1:])
    assert np.all((ratios > 3.5) & (ratios < 4.6)), ratios


def test_curvature_of_cap_is_twice_H():
    g = _grid(64, 1.0)
    k = operator_for(g).curvature(CapSolution(-0.3, 2.0)(g.node_alpha))
    assert np.max(np.abs(k - 2 * -0.3)) < 5e-3


@pytest.mark.parametrize("theta", [0.0, 0.7, -1.5])
def test_pointwise_kernel_matches_divergence_form(theta):
    def u(a, b):
        return 0.3 * np.cos(b) * np.sin(a) + 0.2 * np.cos(a) ** 2 + 0.1 * np.sin(2 * b) * a**2

    a = np.linspace(0.2, 1.3, 7)
    b = np.linspace(0.1, 6.0, 7)
    h = 1e-4
    derivs = (
        (u(a + h, b) - u(a - h, b)) / (2 * h),
        (u(a, b + h) - u(a, b - h)) / (2 * h),
        (u(a + h, b) - 2 * u(a, b) + u(a - h, b)) / h**2,
        (u(a + h, b + h) - u(a + h, b - h) - u(a - h, b + h) + u(a - h, b - h)) / (4 * h * h),
        (u(a, b + h) - 2 * u(a, b) + u(a, b - h)) / h**2,
    )
    lhs = pointwise_operator(a, derivs, theta, 0.4)
    rhs = divergence_operator(a, b, u, theta, 0.4)
    assert np.allclose(lhs, rhs, atol=2e-5)


def test_discrete_matches_pointwise_away_from_pole():
    errs = []
    for n in (16, 32, 64):
        g = _grid(n, 1.0)
        op = operator_for(g)
        u = _smooth(g)
        nodes = op.eq_nodes
        a, b = g.node_alpha[nodes], g.node_beta[nodes]
        sel = (a > 0.5) & (a < 1.2)
        Ua = 0.3 * np.cos(b) * np.cos(a) + 0.4 * np.sin(2 * b) * np.sin(a) * np.cos(a) - 0.1 * np.sin(a)
        Ub = -0.3 * np.sin(b) * np.sin(a) + 0.4 * np.cos(2 * b) * np.sin(a) ** 2
        Uaa = -0.3 * np.cos(b) * np.sin(a) + 0.4 * np.sin(2 * b) * np.cos(2 * a) - 0.1 * np.cos(a)
        Uab = -0.3 * np.sin(b) * np.cos(a) + 0.8 * np.cos(2 * b) * np.sin(a) * np.cos(a)
        Ubb = -0.3 * np.cos(b) * np.sin(a) - 0.8 * np.sin(2 * b) * np.sin(a) ** 2
        exact = pointwise_operator(a[sel], (Ua[sel], Ub[sel], Uaa[sel], Uab[sel], Ubb[sel]), 1.0, 0.2)
        errs.append(np.max(np.abs(op.residual(u, 0.2)[sel] - exact)))
    assert errs[0] / errs[1] > 3.0 and errs[1] / errs[2] > 3.0, errs


def test_translation_invariance_bitwise_on_dyadic_data():
    g = _grid(24, 0.8)
    op = operator_for(g)
    u = np.round(_smooth(g) * 2**20) / 2**20
    assert np.array_equal(op.residual(u + 1.75, 0.3), op.residual(u, 0.3))


@given(st.floats(-5, 5))
def test_translation_invariance(c):
    g = _grid(16, 1.0)
    op = operator_for(g)
    u = _smooth(g)
    assert np.max(np.abs(op.residual(u + c, 0.3) - op.residual(u, 0.3))) < 1e-10


@pytest.mark.parametrize("seed", [0, 1, 2])
@pytest.mark.parametrize("theta", [0.0, 1.0])
def test_jacobian_directional_derivative(seed, theta):
    rng = np.random.default_rng(seed)
    g = _grid(20, theta)
    op = operator_for(g)
    u = _smooth(g) + 0.05 * rng.normal(size=g.n_nodes)
    v = rng.normal(size=g.n_nodes)
    eps = 1e-6
    fd = (op.residual(u + eps * v, 0.5) - op.residual(u - eps * v, 0.5)) / (2 * eps)
    Jv = assemble_jacobian(GraphField(g, u)) @ v
    assert np.max(np.abs(fd - Jv)) <= 1e-6 * np.max(np.abs(Jv))


def test_state_is_elliptic_for_smooth_data():
    g = _grid(16, 1.0)
    _, st_ = assemble_residual(GraphField(g, _smooth(g)), 0.2)
    assert st_.elliptic
    assert np.allclose(st_.ellipticity, g.f[st_.nodes] / st_.W**2)


def test_volume_weights_sum_to_area():
    g = _grid(64, k=1)
    # total nu-area of the disc alpha < alpha_max - h/2 is pi tan^2
    edge = g.alpha[-1] - g.h_alpha / 2
    assert volume_weights(g).sum() == pytest.approx(np.pi * np.tan(edge) ** 2, rel=1e-3)


def test_graph_field_validation():
    g = _grid(8)
    with pytest.raises(ValueError):
        GraphField(g, np.zeros(3))
    bad = np.zeros(g.n_nodes)
    bad[4] = np.nan
    with pytest.raises(ValueError):
        GraphField(g, bad)
    assert np.all((GraphField(g, np.zeros(g.n_nodes)) + 2.0).u == 2.0)


def test_embedding_of_zero_is_unit_hemisphere():
    g = _grid(12, 1.0)
    mesh = embed_graph(GraphField(g, np.zeros(g.n_nodes)))
    assert np.allclose(np.linalg.norm(mesh.vertices, axis=1), 1.0)
    assert mesh.euler_characteristic() == 1
    assert mesh.n_vertices == 12 * 24 - (24 - 1)


def test_embedding_of_constant_is_dilated():
    g = _grid(12, 0.0)
    mesh = embed_graph(GraphField(g, np.full(g.n_nodes, 0.5)))
    assert np.allclose(np.linalg.norm(mesh.vertices, axis=1), np.exp(0.5))
