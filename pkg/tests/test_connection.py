import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from embdyn import (Configuration, EmbeddingError, KnotField, PathOnQ, Section, Segment,
                    SingularStateError, ValidationError, acceleration, christoffel,
                    covariant_derivative_along, geodesic_residual, make_grid, metric,
                    one_sided_velocities, parallel_transport, velocity)
from embdyn.connection import christoffel_values, d2_time
from embdyn.harness import christoffel_symmetry_check, metric_compat_residual, reference_paths

G = make_grid(0.0, 1.0, 33)


def test_christoffel_identity(grid):
    x = grid.nodes
    phi = Configuration.from_values(grid, x)
    s = Section.from_values(grid, x)
    np.testing.assert_allclose(christoffel(phi, s, s).values, -2 * x, atol=1e-13)


def test_christoffel_converges_second_order():
    errs = []
    for n in (51, 101, 201):
        g = make_grid(0, 1, n)
        x = g.nodes
        phi, h, k = x + 0.1 * np.sin(3 * x), np.cos(x), np.exp(x)
        exact = -(h * np.exp(x) - k * np.sin(x)) / (1 + 0.3 * np.cos(3 * x))
        errs.append(np.max(np.abs(christoffel_values(phi, h, k, g.h) - exact)[1:-1]))
    np.testing.assert_allclose(np.log2(np.array(errs[:-1]) / np.array(errs[1:])), 2.0, atol=0.15)


def test_christoffel_needs_embedding(grid):
    x = grid.nodes
    bad = Configuration.from_values(grid, (x - 0.5) ** 2)
    s = Section.from_values(grid, x)
    with pytest.raises(EmbeddingError):
        christoffel(bad, s, s)


vals = arrays(np.float64, G.n_nodes, elements=st.floats(-10, 10))


@settings(max_examples=50, deadline=None)
@given(h=vals, k=vals, c=st.floats(-3, 3))
def test_christoffel_symmetry_and_sign(h, k, c):
    x = G.nodes
    phi = x + 0.2 * np.sin(np.pi * x) / np.pi
    g_hk = christoffel_values(phi, h, k, G.h)
    np.testing.assert_array_equal(g_hk, christoffel_values(phi, k, h, G.h))
    np.testing.assert_array_equal(christoffel_values(phi, -h, k, G.h), -g_hk)
    # reflecting the configuration flips the sign
    np.testing.assert_allclose(christoffel_values(-phi + c, h, k, G.h), -g_hk, rtol=1e-12, atol=1e-9)


def test_symmetry_check_is_exact():
    res = christoffel_symmetry_check(make_grid(0, 1, 201), seed=3)
    assert res["symmetry"] == 0.0
    assert res["bilinearity"] < 1e-12


def test_path_validation(grid):
    x = grid.nodes
    rows = np.array([x, x + 0.1, x + 0.2])
    with pytest.raises(ValidationError):
        Segment(0.0, 0.1, rows[:2])
    with pytest.raises(ValidationError):
        Segment(0.0, -0.1, rows)
    s1 = Segment(0.0, 0.1, rows)
    with pytest.raises(ValidationError):
        PathOnQ(grid, [s1, Segment(0.3, 0.1, rows + 0.2)])
    with pytest.raises(ValidationError):
        PathOnQ(grid, [s1, Segment(0.2, 0.1, rows + 0.3)])
    with pytest.raises(EmbeddingError):
        PathOnQ(grid, [Segment(0.0, 0.1, np.array([x, x ** 2 - x, x]))])
    p = PathOnQ(grid, [s1, Segment(0.2, 0.1, rows + 0.2)])
    assert p.knots == pytest.approx([0.0, 0.2, 0.4])


def test_one_sided_velocities_at_kink():
    g = make_grid(0, 1, 21)
    f1 = lambda t, x: x + 0.5 * t
    f2 = lambda t, x: x + 0.25 + 0.1 * (t - 0.5)
    path = PathOnQ.from_function(g, [f1, f2], [0, 0.5, 1], 10)
    left, right = one_sided_velocities(path, 0.5)
    np.testing.assert_allclose(left.values, 0.5, rtol=1e-12)
    np.testing.assert_allclose(right.values, 0.1, rtol=1e-12)
    np.testing.assert_allclose(velocity(path, 0.5).values, 0.1, rtol=1e-12)
    np.testing.assert_allclose(velocity(path, 1.0).values, 0.1, rtol=1e-12)
    with pytest.raises(ValidationError):
        velocity(path, 0.0, "left")
    with pytest.raises(ValidationError):
        velocity(path, 0.33)


def test_acceleration_of_quadratic_in_time(grid):
    # x + t^2 has gamma_tt = 2 and gamma_xt = 0
    path = PathOnQ.from_function(grid, lambda t, x: x + t ** 2, [0, 1], 20)
    for a in acceleration(path).segments:
        np.testing.assert_allclose(a, 2.0, rtol=1e-10)


def test_geodesic_residual_of_references():
    paths = reference_paths(101, 200)
    assert geodesic_residual(paths["translation"], "sup") < 1e-10
    assert geodesic_residual(paths["kinked_translation"], "sup") < 1e-10
    assert geodesic_residual(paths["scaling"]) < 1e-8
    assert geodesic_residual(paths["quadratic"]) > 0.1
    with pytest.raises(ValidationError):
        geodesic_residual(paths["translation"], "l7")


def test_d2_time_second_order_at_every_knot():
    errs = []
    for n in (20, 40, 80):
        t = np.linspace(0, 1, n + 1)
        errs.append(np.max(np.abs(d2_time(np.sin(2 * t)[:, None], 1 / n)[:, 0] + 4 * np.sin(2 * t))))
    np.testing.assert_allclose(np.log2(np.array(errs[:-1]) / np.array(errs[1:])), 2.0, atol=0.15)


def test_acceleration_matches_closed_form():
    # gamma = x + 0.2 sin(pi x) sin(2t): gamma_tt + 2 gamma_t gamma_xt / gamma_x
    errs = []
    for n, steps in ((101, 100), (201, 200)):
        g = make_grid(0, 1, n)
        x = g.nodes
        path = PathOnQ.from_function(g, lambda t, x: x + 0.2 * np.sin(np.pi * x) * np.sin(2 * t), [0, 1], steps)
        t = path.segments[0].times[:, None]
        gt = 0.4 * np.sin(np.pi * x) * np.cos(2 * t)
        gxt = 0.4 * np.pi * np.cos(np.pi * x) * np.cos(2 * t)
        gx = 1 + 0.2 * np.pi * np.cos(np.pi * x) * np.sin(2 * t)
        exact = -0.8 * np.sin(np.pi * x) * np.sin(2 * t) + 2 * gt * gxt / gx
        errs.append(np.max(np.abs(acceleration(path).segments[0] - exact)))
    assert np.log2(errs[0] / errs[1]) == pytest.approx(2.0, abs=0.2)


def test_covariant_derivative_pins_band():
    g = make_grid(0, 1, 41)
    path = PathOnQ.from_function(g, lambda t, x: x + 0.05 * np.sin(np.pi * x) * t, [0, 1], 20,
                                 boundary_mode="compact", band_width=2)
    V = path.sample(lambda t, x: np.cos(t) + x)
    dV = covariant_derivative_along(path, V)
    for s in dV.segments:
        np.testing.assert_array_equal(s[:, :2], 0.0)
        np.testing.assert_array_equal(s[:, -2:], 0.0)


def test_metric_compatibility_second_order():
    r1 = metric_compat_residual(make_grid(0, 1, 101), 1.0, 100)
    r2 = metric_compat_residual(make_grid(0, 1, 201), 1.0, 200)
    assert r2 < 1e-4
    assert np.log2(r1 / r2) == pytest.approx(2.0, abs=0.3)


def test_transport_along_identity_is_constant(grid):
    path = PathOnQ.from_function(grid, lambda t, x: x + 0 * t, [0, 1], 10)
    V0 = Section.from_values(grid, np.sin(grid.nodes))
    out = parallel_transport(path, V0)
    np.testing.assert_array_equal(out.last, V0.values)


def test_transport_conserves_metric_norm_on_deforming_path():
    g = make_grid(0, 1, 201)
    path = PathOnQ.from_function(g, lambda t, x: x + 0.1 * np.sin(np.pi * x) * np.sin(t) / np.pi,
                                 [0, 1], 400, boundary_mode="compact")
    V0 = Section.pinned(g, np.sin(np.pi * g.nodes) ** 2)
    out = parallel_transport(path, V0)
    phi1 = path.configuration(0, -1)
    n0 = metric(path.configuration(0, 0), V0, V0)
    V1 = Section.pinned(g, out.last)
    assert abs(metric(phi1, V1, V1) - n0) / n0 < 1e-5


def test_transport_reports_collapse():
    g = make_grid(0, 1, 21)
    # every sample is an embedding but the orientation flips, so the midpoint of the first step is flat
    x = g.nodes
    path = PathOnQ(g, [Segment(0.0, 1.0, np.array([x, -x, -3 * x]))])
    with pytest.raises(SingularStateError):
        parallel_transport(path, Section.from_values(g, np.ones(21)))


def test_knot_field_stacking():
    a = np.arange(6.0).reshape(3, 2)
    kf = KnotField((a, a + 10))
    st_ = kf.stacked()
    assert st_.shape == (5, 2)
    np.testing.assert_array_equal(st_[2], a[0] + 10)
    assert (2 * kf - kf).max_abs() == kf.max_abs() == 15.0
