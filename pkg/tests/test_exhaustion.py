import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from hypcmc import (
    BoundaryTrace,
    CapSolution,
    ConstraintViolation,
    ExhaustionConfig,
    SectionGrid,
    ball_alpha,
    barrier_bounds,
    exhaustion_solve,
    extend_boundary,
    gradient_monitor,
)
from hypcmc.oracles import cap_gradient_norm

SMALL = dict(n_alpha=32, n_beta=64)


def test_trace_kinds():
    b = np.linspace(0, 2 * np.pi, 9)
    assert np.all(BoundaryTrace.constant(0.4)(b) == 0.4)
    f = BoundaryTrace("fourier", (0.1, 0.3, 0.0, 0.0, 0.2))
    assert np.allclose(f(b), 0.1 + 0.3 * np.cos(b) + 0.2 * np.sin(2 * b))
    s = BoundaryTrace("samples", (0.0, 1.0, 0.0, -1.0))
    assert s(np.pi / 4) == pytest.approx(0.5)
    assert s(2 * np.pi - np.pi / 4) == pytest.approx(-0.5)  # periodic wrap
    assert (s.inf, s.sup, s.mean) == (-1.0, 1.0, 0.0)


@pytest.mark.parametrize("kind, data", [("spline", (1.0,)), ("constant", (1.0, 2.0)), ("fourier", (0.0, 1.0)), ("samples", (np.nan,))])
def test_trace_validation(kind, data):
    with pytest.raises(ValueError):
        BoundaryTrace(kind, data)


def test_trace_sup_inf_fourier():
    f = BoundaryTrace("fourier", (0.2, 0.3, 0.4))
    assert f.sup == pytest.approx(0.7, abs=1e-6) and f.inf == pytest.approx(-0.3, abs=1e-6)
    assert f.oscillation == pytest.approx(1.0, abs=1e-6)


@given(st.floats(-np.pi, np.pi))
def test_trace_rotation(beta0):
    f = BoundaryTrace("fourier", (0.1, 0.3, -0.2, 0.05, 0.1))
    b = np.linspace(0, 2 * np.pi, 13)
    assert np.allclose(f.rotated(beta0)(b), f(b - beta0), atol=1e-12)


def test_extension_properties():
    g = SectionGrid(24, 48, 1.5, 1.0)
    assert np.all(extend_boundary(BoundaryTrace.constant(0.7), g).u == 0.7)
    phi = BoundaryTrace("fourier", (0.0, 0.3, 0.0))
    F = extend_boundary(phi, g).u
    assert F[0] == 0.0
    ring = F[g.boundary]
    m = np.sin(g.alpha[-1]) ** 2
    assert np.max(np.abs(ring - phi(g.beta))) <= (1 - m) * phi.oscillation + 1e-15


def test_barrier_bounds_examples():
    z = BoundaryTrace.constant(0.0)
    lo, hi = barrier_bounds(z, 0.5)
    assert (lo, hi) == (pytest.approx(-0.549306, abs=1e-6), pytest.approx(0.549306, abs=1e-6))
    phi = BoundaryTrace("samples", (-0.2, 0.1, 0.4))
    assert barrier_bounds(phi, 0.0) == (-0.2, 0.4)
    widths = [barrier_bounds(z, H)[1] for H in (0.1, 0.5, 0.9, 0.999)]
    assert np.all(np.diff(widths) > 0) and widths[-1] > 3.5
    with pytest.raises(ConstraintViolation):
        barrier_bounds(z, 1.0)


def test_config_validation():
    with pytest.raises(ValueError):
        ExhaustionConfig(k_max=2)
    with pytest.raises(ValueError):
        ExhaustionConfig(cauchy_tol=0.0)


@pytest.mark.parametrize("theta", [0.0, 1.0])
def test_leaf(theta):
    u, rep = exhaustion_solve(BoundaryTrace.constant(-0.2), 0.0, theta, **SMALL, cfg=ExhaustionConfig(k_max=4))
    assert np.all(u.u == -0.2)
    assert [s.cauchy_delta_B2 for s in rep.steps][1:] == [0.0, 0.0]
    assert rep.cauchy_converged and rep.converged


@pytest.fixture(scope="module")
def cap_run():
    return exhaustion_solve(BoundaryTrace.constant(0.0), 0.5, 0.0, **SMALL, cfg=ExhaustionConfig(k_max=4))


def test_cap_case_approaches_cap(cap_run):
    u, rep = cap_run
    assert [s.k for s in rep.steps] == [2, 3, 4]
    deltas = rep.column("cauchy_delta_B2")[1:]
    assert np.all(np.diff(deltas) < 0)
    # u_k is the cap lowered by the truncation offset arcsinh(b cos alpha_k), which shrinks with k
    b = 0.5 / np.sqrt(0.75)
    offsets = np.arcsinh(b * np.cos(rep.column("alpha_k")))
    assert np.all(np.diff(offsets) < 0)
    assert np.allclose(rep.column("sup_u"), np.arctanh(0.5) - offsets, atol=2e-3)
    g = u.grid
    mask = g.ball_mask(ball_alpha(2))
    dist = np.max(np.abs(u.u - CapSolution(0.5, 1.0)(g.node_alpha))[mask])
    assert dist == pytest.approx(offsets[-1], abs=2e-3)


def test_cap_case_monitors(cap_run):
    _, rep = cap_run
    assert rep.within_barrier(1e-8)
    a = np.linspace(0, ball_alpha(1), 2001)
    assert np.all(np.abs(rep.column("sup_grad_B1") - cap_gradient_norm(0.5, a).max()) < 1e-2)
    assert gradient_monitor(rep).bounded
    for s in rep.steps[1:]:
        assert s.started_warm and s.warm_residual <= s.cold_residual
        assert s.boundary_deviation == 0.0


def test_gradient_monitor_negative_control():
    assert not gradient_monitor([0.1, 0.3, 0.9, 2.7]).bounded
    assert not gradient_monitor([1.0, 1.5, 2.1, 2.8]).no_blowup
    assert gradient_monitor([0.0, 0.0, 0.0]).bounded
    assert gradient_monitor([0.41, 0.421, 0.4228, 0.4231]).bounded
    with pytest.raises(ValueError):
        gradient_monitor([1.0, 1.0])


def test_equivariance_and_translation():
    phi = BoundaryTrace("fourier", (0.0, 0.3, 0.0))
    cfg = ExhaustionConfig(k_max=3, curvature_oracle=False)
    u, _ = exhaustion_solve(phi, 0.4, 1.0, **SMALL, cfg=cfg)
    shift = 8
    ur, _ = exhaustion_solve(phi.rotated(2 * np.pi * shift / 64), 0.4, 1.0, **SMALL, cfg=cfg)
    rings = u.u[1:].reshape(-1, 64)
    rolled = np.concatenate([[u.u[0]], np.roll(rings, shift, axis=1).ravel()])
    assert np.max(np.abs(ur.u - rolled)) < 1e-8
    ut, _ = exhaustion_solve(BoundaryTrace("fourier", (0.5, 0.3, 0.0)), 0.4, 1.0, **SMALL, cfg=cfg)
    assert np.max(np.abs(ut.u - u.u - 0.5)) < 1e-8


def test_twisting_depends_on_sign_of_theta():
    phi = BoundaryTrace("fourier", (0.0, 0.3, 0.0))
    cfg = ExhaustionConfig(k_max=3, curvature_oracle=False)
    phases = {}
    for theta in (-1.0, 0.0, 1.0):
        u, _ = exhaustion_solve(phi, 0.4, theta, **SMALL, cfg=cfg)
        ring = u.u[1:].reshape(-1, 64)[15]
        c1 = np.sum(ring * np.exp(-1j * u.grid.beta))
        phases[theta] = np.angle(c1)
    assert abs(phases[0.0]) < 1e-10
    assert abs(phases[1.0]) > 1e-3
    assert phases[-1.0] == pytest.approx(-phases[1.0], abs=1e-10)


def test_coarse_grid_rejected():
    with pytest.raises(ValueError, match="too coarse"):
        exhaustion_solve(BoundaryTrace.constant(0.0), 0.2, 0.0, n_alpha=8, n_beta=16, cfg=ExhaustionConfig(k_max=6))
