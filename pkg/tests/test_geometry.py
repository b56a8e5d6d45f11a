import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cmgkit import catalog, geometry, germs
from cmgkit.geometry import ChartDomainError, DegeneratePlaneError, MetricChart, Plane2
from cmgkit.selftest import random_polynomial_germ

from _oracles import christoffel_fd, constant_curvature_tensor, riemann_fd


def polar_plane():
    return MetricChart(2, "polar", lambda x: [[1.0, 0.0], [0.0, x[0] * x[0]]])


def perturbed(n=3):
    return catalog.conformal_perturbation(catalog.sphere(n, 1.5), 0.3, "gauss")


CURVED = {
    "sphere3": catalog.sphere(3, 2.0),
    "hyperbolic3": catalog.hyperbolic(3, 0.5),
    "perturbed3": perturbed(),
    "revolution": catalog.revolution(catalog.profile("cubic", 1.0)),
    "s2xr": catalog.product(catalog.sphere(2), catalog.euclidean(1)),
}

points = st.lists(st.floats(-0.4, 0.4), min_size=3, max_size=3).map(np.array)


# -- Christoffel symbols ----------------------------------------------------


def test_euclidean_christoffel_vanishes():
    assert np.all(geometry.christoffel(catalog.euclidean(3), [0.3, -1.0, 2.0]) == 0)


def test_polar_christoffel():
    G = geometry.christoffel(polar_plane(), [2.0, 0.7])
    assert G[0, 1, 1] == pytest.approx(-2.0)
    assert G[1, 0, 1] == pytest.approx(0.5)
    assert G[1, 1, 0] == pytest.approx(0.5)


@pytest.mark.parametrize("name", sorted(CURVED))
def test_christoffel_matches_finite_differences(name):
    m = CURVED[name]
    q = np.array([0.21, -0.13, 0.08])[: m.dim]
    G = geometry.christoffel(m, q)
    oracle = christoffel_fd(lambda y: geometry.metric(m, y), q)
    np.testing.assert_allclose(G, oracle, atol=1e-8 * max(1, np.abs(G).max()))
    np.testing.assert_allclose(G, np.swapaxes(G, 1, 2), atol=1e-14)


# -- Riemann tensor ---------------------------------------------------------


@pytest.mark.parametrize("name", sorted(CURVED))
def test_riemann_matches_finite_differences(name):
    m = CURVED[name]
    q = np.array([0.21, -0.13, 0.08])[: m.dim]
    R = geometry.riemann(m, q)
    oracle = riemann_fd(lambda y: geometry.christoffel(m, y), lambda y: geometry.metric(m, y), q)
    np.testing.assert_allclose(R, oracle, atol=1e-7 * max(1, np.abs(R).max()))


@pytest.mark.parametrize("model, sign", [("sphere", 1), ("hyperbolic", -1)])
@pytest.mark.parametrize("n", [2, 3, 4])
@pytest.mark.parametrize("c", [0.5, 2.0])
def test_constant_curvature_oracle(model, sign, n, c):
    m = catalog.sphere(n, c) if model == "sphere" else catalog.hyperbolic(n, c)
    q = 0.3 / math.sqrt(c) * np.linspace(-1, 1, n)
    g = geometry.metric(m, q)
    R = geometry.riemann(m, q)
    np.testing.assert_allclose(R, constant_curvature_tensor(g, sign * c), atol=1e-10 * np.abs(R).max())


def test_flat_riemann_vanishes():
    assert np.abs(geometry.riemann(catalog.euclidean(4), [1, 2, 3, 4])).max() == 0


def test_product_block_structure():
    m = CURVED["s2xr"]
    q = np.array([0.3, -0.2, 5.0])
    R = geometry.riemann(m, q)
    g = geometry.metric(m, q)
    R2 = geometry.riemann(catalog.sphere(2), q[:2])
    np.testing.assert_allclose(R[:2, :2, :2, :2], R2, atol=1e-14)
    mask = np.ones_like(R, dtype=bool)
    mask[:2, :2, :2, :2] = False
    assert np.abs(R[mask]).max() < 1e-14
    e = np.eye(3)
    for u in (e[0], e[1], e[0] + 0.3 * e[1]):
        assert geometry.sectional(m, Plane2.from_vectors(m, q, u, e[2], g)) == pytest.approx(0.0, abs=1e-14)
    assert geometry.sectional(m, Plane2.from_vectors(m, q, e[0], e[1], g)) == pytest.approx(1.0, rel=1e-12)


@settings(max_examples=25, deadline=None)
@given(points)
def test_riemann_symmetries(q):
    R = geometry.riemann(CURVED["perturbed3"], q)
    tol = 1e-12 * max(1, np.abs(R).max())
    assert np.abs(R + R.transpose(1, 0, 2, 3)).max() < tol
    assert np.abs(R + R.transpose(0, 1, 3, 2)).max() < tol
    assert np.abs(R - R.transpose(2, 3, 0, 1)).max() < tol
    assert np.abs(R + R.transpose(1, 2, 0, 3) + R.transpose(2, 0, 1, 3)).max() < tol


# -- sectional curvature ----------------------------------------------------


@settings(max_examples=25, deadline=None)
@given(points, st.floats(-2, 2), st.floats(0.2, 3), st.floats(-2, 2))
def test_sectional_is_a_function_of_the_plane(q, a, d, b):
    m = CURVED["perturbed3"]
    u, w = np.array([1.0, 0.2, -0.1]), np.array([0.0, 1.0, 0.5])
    k1 = geometry.sectional(m, Plane2.from_vectors(m, q, u, w))
    k2 = geometry.sectional(m, Plane2.from_vectors(m, q, d * u, a * u + w))
    k3 = geometry.sectional(m, Plane2.from_vectors(m, q, w + b * u, u))
    assert k2 == pytest.approx(k1, rel=1e-10, abs=1e-10)
    assert k3 == pytest.approx(k1, rel=1e-10, abs=1e-10)


def test_sectional_on_sphere():
    m = catalog.sphere(2)
    q = np.array([0.4, -0.7])
    assert geometry.sectional(m, Plane2.from_vectors(m, q, [1, 0], [0.3, 1])) == pytest.approx(1.0, rel=1e-12)


def test_degenerate_plane():
    m = catalog.sphere(3)
    with pytest.raises(DegeneratePlaneError):
        Plane2.from_vectors(m, np.zeros(3), [1, 2, 3], [2, 4, 6])
    with pytest.raises(DegeneratePlaneError):
        Plane2.from_vectors(m, np.zeros(3), [0, 0, 0], [1, 0, 0])


# -- gradient, Hessian, third derivative --------------------------------------


def test_euclidean_gradient_and_hessian():
    m = catalog.euclidean(3)
    p = np.array([0.5, -1.0, 2.0])
    f = germs.quadratic_germ([1, 1, 1], base=p)
    q = np.array([1.0, 0.0, 0.0])
    np.testing.assert_allclose(geometry.gradient(m, f, q), 2 * (q - p))
    np.testing.assert_allclose(geometry.covariant_hessian(m, f, q), 2 * np.eye(3))
    assert np.abs(geometry.third_covariant(m, f, q, [1, 2, 3], [0, 1, 0])).max() == 0


def test_gradient_batched():
    m, f = germs.model_germ("sphere", 3, 1.0)
    pts = np.array([[0.1, 0.2, 0.3], [-0.2, 0.0, 0.1]])
    G = geometry.gradient(m, f, pts)
    assert G.shape == (2, 3)
    for b in range(2):
        np.testing.assert_allclose(G[b], geometry.gradient(m, f, pts[b]), rtol=1e-14)


def test_hessian_symmetric():
    m = CURVED["perturbed3"]
    f = random_polynomial_germ(3, np.random.default_rng(1))
    H = geometry.covariant_hessian(m, f, [0.1, 0.2, -0.1])
    np.testing.assert_allclose(H, H.T, atol=1e-13)


def test_third_covariant_is_bilinear():
    rng = np.random.default_rng(2)
    m = CURVED["perturbed3"]
    f = random_polynomial_germ(3, rng)
    q = np.array([0.1, -0.2, 0.05])
    Z1, Z2, X1, X2 = rng.normal(size=(4, 3))
    a, b = 1.7, -0.4
    T = lambda Z, X: geometry.third_covariant(m, f, q, Z, X)  # noqa: E731
    lhs = T(a * Z1 + b * Z2, X1 - 2 * X2)
    rhs = a * T(Z1, X1) - 2 * a * T(Z1, X2) + b * T(Z2, X1) - 2 * b * T(Z2, X2)
    assert np.abs(lhs - rhs).max() <= 1e-11 * max(1, np.abs(lhs).max())


@pytest.mark.parametrize("seed", range(6))
def test_ricci_identity_random_germs(seed):
    rng = np.random.default_rng(seed)
    m = catalog.sphere(3, 1.0)
    f = random_polynomial_germ(3, rng)
    q = rng.uniform(-0.4, 0.4, 3)
    Z, X = rng.normal(size=(2, 3))
    assert geometry.ricci_identity_residual(m, f, q, Z / np.linalg.norm(Z), X / np.linalg.norm(X)) <= 1e-8


def test_ricci_identity_model_germ_and_flat():
    m, f = germs.model_germ("hyperbolic", 3, 1.0)
    assert geometry.ricci_identity_residual(m, f, [0.3, 0.1, -0.2], [1, 0, 0], [0, 1, 1]) <= 1e-8
    p = random_polynomial_germ(3, np.random.default_rng(5))
    assert geometry.ricci_identity_residual(catalog.euclidean(3), p, [0.3, 0.1, -0.2], [1, 0, 0], [0, 1, 1]) <= 1e-12


# -- chart domains ----------------------------------------------------------


def test_chart_domain():
    m = catalog.hyperbolic(3, 1.0)
    with pytest.raises(ChartDomainError):
        geometry.metric(m, [0.8, 0.8, 0.0])
    with pytest.raises(ValueError):
        geometry.metric(m, [0.1, 0.1])
    assert list(m.valid([[0.1, 0, 0], [2, 0, 0]])) == [True, False]


def test_degenerate_metric_rejected():
    m = MetricChart(2, "degenerate", lambda x: [[1.0, 0.0], [0.0, x[0] * x[0]]])
    with pytest.raises(ChartDomainError):
        geometry.christoffel(m, [0.0, 1.0])
