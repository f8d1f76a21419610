import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from hypcmc import KillingCylinder, KillingMotion, SectionGrid, ball_alpha, cylinder_mean_curvature, flow, project, section_point
from hypcmc.submersion import (
    acceleration_numeric,
    acceleration_term,
    connection_form,
    gamma_closed,
    gamma_terms,
    orbit_speed_factor,
    submersion_metric,
    submersion_metric_closed,
    vertical_covariant,
)

alphas = st.floats(0.05, 1.45)
betas = st.floats(0.0, 2 * np.pi)
rates = st.floats(-2, 2)


@given(alphas, betas, st.floats(-2, 2), rates)
def test_projection_inverts_flow_of_section(a, b, s, theta):
    m = KillingMotion(theta)
    q = flow(s, section_point(a, b), m)
    a2, b2, s2 = project(q, m)
    assert a2 == pytest.approx(a, abs=1e-10)
    assert s2 == pytest.approx(s, abs=1e-10)
    assert np.cos(b2 - b) == pytest.approx(1.0, abs=1e-10)


@given(alphas, betas, rates)
def test_metric_matches_closed_form(a, b, theta):
    g = submersion_metric(a, b, KillingMotion(theta))
    assert np.allclose(g, submersion_metric_closed(a, theta), rtol=1e-9, atol=1e-12)


def test_metric_rejects_equator():
    with pytest.raises(ValueError):
        submersion_metric(np.pi / 2, 0.0, KillingMotion(1.0))


def test_gamma_reference_value():
    g = gamma_terms(np.pi / 4, 0.3, KillingMotion(1.0))
    assert g[0, 1] == pytest.approx(-4.0 / 9.0, abs=1e-7)
    assert g[0, 1] == pytest.approx(gamma_closed(np.pi / 4, 1.0), abs=1e-7)


@given(alphas, betas, rates)
def test_gamma_numeric_matches_closed(a, b, theta):
    g = gamma_terms(a, b, KillingMotion(theta))
    assert g[0, 1] == pytest.approx(gamma_closed(a, theta), abs=1e-6)
    assert g[1, 0] == -g[0, 1]


@given(alphas, betas, rates)
def test_vertical_part_is_antisymmetric_half_gamma(a, b, theta):
    G = vertical_covariant(a, b, KillingMotion(theta))
    assert abs(G[0, 0]) < 1e-7 and abs(G[1, 1]) < 1e-7
    assert G[0, 1] == pytest.approx(-G[1, 0], abs=1e-7)
    assert 2 * G[0, 1] == pytest.approx(gamma_closed(a, theta), abs=1e-6)


@given(alphas, betas)
def test_gamma_vanishes_without_rotation(a, b):
    assert np.max(np.abs(gamma_terms(a, b, KillingMotion(0.0)))) < 1e-9


@pytest.mark.parametrize("theta", [0.5, 1.0, -2.0])
def test_gamma_at_pole_cartesian(theta):
    g = gamma_terms(0.0, 0.0, KillingMotion(theta), chart="cartesian")
    assert g[0, 1] == pytest.approx(-2 * theta, abs=1e-6)


@given(alphas, betas, rates)
def test_acceleration_killing_identity(a, b, theta):
    m = KillingMotion(theta)
    assert np.allclose(acceleration_numeric(a, b, m), acceleration_term(a, b, m), atol=1e-6)


def test_connection_form_and_speed():
    a = np.pi / 3
    assert orbit_speed_factor(a, 1.0) == pytest.approx(1 / 7)
    assert connection_form(a, 1.0) == pytest.approx(0.75 / 1.75)
    assert connection_form(a, 0.0) == 0.0


def test_ball_alpha_reference_values():
    assert ball_alpha(2.0) == pytest.approx(1.3017603, abs=1e-6)
    with pytest.raises(ValueError):
        ball_alpha(0.0)
    # geodesic distance from the pole of the section
    from hypcmc import hyperbolic_distance

    q = section_point(ball_alpha(3.0), 0.7)
    assert hyperbolic_distance(np.array([0, 0, 1.0]), q) == pytest.approx(3.0)


@pytest.mark.parametrize("d", [0.5, 1.0, 2.0, 4.0])
def test_cylinder_bound(d):
    assert cylinder_mean_curvature(d) >= np.tanh(d)
    assert KillingCylinder(d).mean_curvature == pytest.approx((1 / np.tanh(d) + np.tanh(d)) / 2)


def test_cylinder_reference_value():
    assert cylinder_mean_curvature(1.0) == pytest.approx(1.037314, abs=1e-6)
    with pytest.raises(ValueError):
        KillingCylinder(0.0)


def test_grid_bookkeeping():
    g = SectionGrid(10, 16, 1.2, 0.5)
    assert g.n_nodes == 1 + 9 * 16
    assert g.index(0, 5) == 0
    assert g.index(2, 17) == 1 + 16 + 1
    assert g.boundary.sum() == 16 and g.interior.sum() == g.n_nodes - 16
    sub = g.restrict(6)
    assert sub.h_alpha == g.h_alpha and np.allclose(sub.node_alpha, g.node_alpha[: sub.n_nodes])
    assert g.ring_index_for(g.alpha[4] + 1e-3) == 4
    g.check()


@pytest.mark.parametrize("args", [(2, 16, 1.0), (10, 15, 1.0), (10, 2, 1.0), (10, 16, np.pi / 2)])
def test_grid_rejects_bad_shapes(args):
    with pytest.raises(ValueError):
        SectionGrid(*args)
