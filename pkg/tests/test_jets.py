import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from cmgkit import jets
from cmgkit.jets import Jet, JetDomainError

from _oracles import partial


def multi_indices(n, order):
    for k in range(order + 1):
        for alpha in itertools.product(range(k + 1), repeat=n):
            if sum(alpha) == k:
                yield alpha


def jet_strategy(n=2, order=3):
    N = jets.n_coeffs(n, order)
    coeffs = arrays(np.float64, N, elements=st.floats(-3, 3, allow_nan=False, width=64))
    return coeffs.map(lambda c: Jet(c, n, order))


def close(a: Jet, b: Jet, tol=1e-9):
    return np.allclose(a.coeffs, b.coeffs, rtol=tol, atol=tol)


# -- derivatives against finite differences ---------------------------------

FUNCTIONS = {
    "poly": lambda x: x[0] ** 3 * x[1] - 2 * x[0] * x[1] ** 2 + 0.5,
    "sin-exp": lambda x: jets.sin(x[0] * x[1]) * jets.exp(0.3 * x[1]),
    "quotient": lambda x: (1 + x[0] ** 2) / (2 + x[1] ** 2 + x[0] * x[1]),
    "log-sqrt": lambda x: jets.log(1.5 + x[0] ** 2) * jets.sqrt(2 + x[1]),
    "atan-cosh": lambda x: jets.atan(x[0] - 2 * x[1]) + jets.cosh(x[0]) * jets.sinh(x[1]),
    "artanh-pow": lambda x: jets.artanh(0.3 * x[0]) * jets.power(1.2 + x[1] ** 2, 1.5),
}


def as_float_fn(F):
    return lambda y: F([float(v) for v in y])


@pytest.mark.parametrize("name", sorted(FUNCTIONS))
def test_derivatives_match_richardson(name):
    F = FUNCTIONS[name]
    p = np.array([0.4, -0.3])
    J = F(jets.variables(p, 3))
    for alpha in multi_indices(2, 3):
        exact = J.derivative(alpha)
        fd = partial(as_float_fn(F), p, alpha)
        assert exact == pytest.approx(float(fd), rel=1e-6, abs=1e-6), alpha


@pytest.mark.parametrize(
    "fn, derivs",
    [
        (jets.sin, lambda x: [math.sin(x), math.cos(x), -math.sin(x), -math.cos(x)]),
        (jets.exp, lambda x: [math.exp(x)] * 4),
        (jets.log, lambda x: [math.log(x), 1 / x, -1 / x**2, 2 / x**3]),
        (jets.atan, lambda x: [math.atan(x), 1 / (1 + x * x), -2 * x / (1 + x * x) ** 2,
                               (6 * x * x - 2) / (1 + x * x) ** 3]),
        (jets.sqrt, lambda x: [x**0.5, 0.5 * x**-0.5, -0.25 * x**-1.5, 0.375 * x**-2.5]),
        (jets.reciprocal, lambda x: [1 / x, -1 / x**2, 2 / x**3, -6 / x**4]),
    ],
)
@pytest.mark.parametrize("x0", [0.3, 1.7])
def test_univariate_closed_forms(fn, derivs, x0):
    (x,) = jets.variables([x0], 3)
    J = fn(x)
    for k, d in enumerate(derivs(x0)):
        assert J.derivative((k,)) == pytest.approx(d, rel=1e-13)


def test_named_operations():
    a, b = jets.variables([0.7, 0.4], 3)
    for op, expected in [("add", a + b), ("sub", a - b), ("mul", a * b), ("div", a / b)]:
        assert close(jets.jet_arith(a, b, op), expected)
    assert close(jets.jet_elem(a, "cosh"), jets.cosh(a))
    assert close(jets.jet_elem(b, "pow", 2.5), jets.power(b, 2.5))
    J = jets.jet_elem(a * b, "sin")
    assert jets.extract_derivative(J, (1, 1)) == pytest.approx(J.derivative((1, 1)))
    with pytest.raises(ValueError):
        jets.jet_elem(a, "tan")


def test_same_callable_on_floats_and_jets():
    F = FUNCTIONS["sin-exp"]
    p = [0.4, -0.3]
    assert F(jets.variables(p, 2)).value == pytest.approx(F(p), rel=1e-15)


def test_batched_equals_pointwise():
    F = FUNCTIONS["quotient"]
    pts = np.array([[0.1, 0.2], [-0.5, 0.3], [1.0, -1.0]])
    batched = F(jets.variables(pts, 3))
    for b, p in enumerate(pts):
        single = F(jets.variables(p, 3))
        np.testing.assert_allclose(batched.coeffs[b], single.coeffs, rtol=1e-14)


# -- algebraic structure ----------------------------------------------------


@settings(max_examples=60, deadline=None)
@given(jet_strategy(), jet_strategy(), jet_strategy())
def test_ring_axioms(a, b, c):
    assert close((a * b) * c, a * (b * c))
    assert close(a * b, b * a)
    assert close(a * (b + c), a * b + a * c)
    assert close(a - a, Jet.constant(0.0, 2, 3))
    assert close(a * Jet.constant(1.0, 2, 3), a)


@settings(max_examples=60, deadline=None)
@given(jet_strategy(), jet_strategy(), st.integers(0, 3))
def test_truncation_is_a_ring_homomorphism(a, b, k):
    assert close((a * b).truncate(k), a.truncate(k) * b.truncate(k))
    assert close((a + b).truncate(k), a.truncate(k) + b.truncate(k))


@settings(max_examples=40, deadline=None)
@given(jet_strategy().filter(lambda j: abs(j.coeffs[0]) > 0.5))
def test_reciprocal_inverts(a):
    one = a * jets.reciprocal(a)
    assert close(one, Jet.constant(1.0, 2, 3), tol=1e-8)


def test_lower_order_is_prefix():
    F = FUNCTIONS["atan-cosh"]
    p = [0.2, 0.1]
    J3 = F(jets.variables(p, 3))
    J2 = F(jets.variables(p, 2))
    np.testing.assert_allclose(J3.coeffs[: J2.coeffs.shape[-1]], J2.coeffs, rtol=1e-14)
    np.testing.assert_allclose(J3.truncate(2).coeffs, J2.coeffs, rtol=1e-14)


def test_grad_lowers_order_and_matches_derivative():
    J = FUNCTIONS["poly"](jets.variables([0.7, -0.2], 3))
    G = J.grad()
    assert G.order == 2 and G.shape == (2,)
    assert G[0].derivative((1, 0)) == pytest.approx(J.derivative((2, 0)))
    assert G[1].derivative((0, 2)) == pytest.approx(J.derivative((0, 3)))


def test_matrix_inverse():
    x = jets.variables([0.3, -0.4, 0.2], 3)
    M = jets.array([[2 + x[0] ** 2, x[1], 0.0], [x[1], 3 + jets.sin(x[2]), x[0] * x[2]], [0.0, x[0] * x[2], 1.5]])
    P = jets.contract("ij,jk->ik", M, jets.inv(M))
    np.testing.assert_allclose(P.coeffs[..., 0], np.eye(3), atol=1e-14)
    np.testing.assert_allclose(P.coeffs[..., 1:], 0.0, atol=1e-13)


# -- errors -----------------------------------------------------------------


def test_lift_errors():
    assert jets.lift([1.0, 2.0], 1, 2).value == 2.0
    with pytest.raises(IndexError):
        jets.lift([1.0, 2.0], 2, 2)
    with pytest.raises(ValueError):
        jets.lift([1.0, 2.0], 0, 4)


@pytest.mark.parametrize("fn, x0", [(jets.log, -1.0), (jets.sqrt, 0.0), (jets.artanh, 1.0),
                                    (lambda a: jets.power(a, 0.5), -0.2)])
def test_domain_errors(fn, x0):
    (x,) = jets.variables([x0], 3)
    with pytest.raises(JetDomainError):
        fn(x)


def test_singular_matrix_rejected():
    x = jets.variables([1.0, 1.0], 1)
    with pytest.raises(JetDomainError):
        jets.inv(jets.array([[x[0], x[1]], [x[0], x[1]]]))


def test_derivative_order_checked():
    J = FUNCTIONS["poly"](jets.variables([0.1, 0.2], 2))
    with pytest.raises(ValueError):
        J.derivative((3, 0))
