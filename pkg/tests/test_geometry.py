import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from symprealize.expr import parse
from symprealize.geometry import (
    BivectorField,
    CentralDifference,
    CovectorField,
    OneOneTensorField,
    TwoFormField,
    TwoFormMatrix,
    VectorField,
    exterior_derivative_1form,
    exterior_derivative_2form,
    jacobiator,
    koszul_bracket,
    nijenhuis_torsion,
    omega_can,
    poisson_bracket,
    pullback_2form,
    vf_lie_bracket,
)
from symprealize.nijenhuis import random_polynomial

from conftest import constant_bivector, random_antisymmetric


def brute_jacobiator(pi, x, h=1e-5):
    n = pi.dim
    P = pi.matrix(x)
    dP = np.zeros((n, n, n))
    for c in range(n):
        e = np.zeros(n)
        e[c] = h
        dP[:, :, c] = (pi.matrix(x + e) - pi.matrix(x - e)) / (2 * h)
    J = np.zeros((n, n, n))
    for i, j, k in itertools.product(range(n), repeat=3):
        J[i, j, k] = sum(P[i, l] * dP[j, k, l] + P[j, l] * dP[k, i, l] + P[k, l] * dP[i, j, l] for l in range(n))
    return J


def test_constant_jacobiator_vanishes(rng):
    pi = constant_bivector(random_antisymmetric(4, rng))
    assert np.max(np.abs(jacobiator(pi, rng.normal(size=4)))) == 0


def test_so3_jacobiator(so3):
    assert np.max(np.abs(jacobiator(so3, [1.0, 2.0, 3.0]))) <= 1e-12


def test_non_poisson_jacobiator_against_brute_force(rng):
    pi = BivectorField(3, {(0, 1): "x2", (1, 2): "1"})
    for _ in range(3):
        x = rng.uniform(-1, 1, 3)
        J = jacobiator(pi, x)
        np.testing.assert_allclose(J, brute_jacobiator(pi, x), atol=1e-8)
        assert abs(J[0, 1, 2]) == pytest.approx(1.0)


def test_x1_variant_is_actually_poisson(rng):
    # x1 d1^d2 + d2^d3: the cyclic sum vanishes identically
    pi = BivectorField(3, {(0, 1): "x1", (1, 2): "1"})
    x = rng.uniform(-1, 1, 3)
    assert np.max(np.abs(jacobiator(pi, x))) == 0
    np.testing.assert_allclose(brute_jacobiator(pi, x), 0, atol=1e-9)


def test_jacobiator_full_antisymmetry(rng):
    pi = BivectorField(3, {(0, 1): "x1*x3^2", (0, 2): "sin(x2)", (1, 2): "x1 - x2*x3"})
    J = jacobiator(pi, rng.uniform(-1, 1, 3))
    for perm in itertools.permutations(range(3)):
        sign = np.linalg.det(np.eye(3)[list(perm)])
        np.testing.assert_allclose(np.transpose(J, perm), sign * J, atol=1e-14)


def test_koszul_examples(so3):
    dx = [CovectorField.exact(i, 3) for i in range(3)]
    np.testing.assert_allclose(koszul_bracket(so3, dx[0], dx[1], [0.3, -0.2, 0.5]), [0, 0, 1], atol=1e-14)
    canon = BivectorField(2, {(0, 1): "1"})
    r = koszul_bracket(canon, CovectorField.exact(0, 2), CovectorField.exact(1, 2), [0.4, 0.1])
    np.testing.assert_allclose(r, 0, atol=1e-15)
    const = constant_bivector(np.array([[0, 1.5], [-1.5, 0]]))
    a = CovectorField(["2", "-1"])
    b = CovectorField(["0.5", "3"])
    np.testing.assert_allclose(koszul_bracket(const, a, b, [1.0, 2.0]), 0, atol=1e-15)


def test_koszul_exact_forms_give_d_of_poisson_bracket(so3, rng):
    f, g = parse("x1*x2 + x3^2"), parse("sin(x1) - x2*x3")
    x = rng.uniform(-1, 1, 3)
    # d{f, g} by finite differences of the bracket
    df = CovectorField([parse("x2"), parse("x1"), parse("2*x3")])
    dg = CovectorField([parse("cos(x1)"), parse("-x3"), parse("-x2")])
    h = 1e-5
    fd = np.array([(poisson_bracket(so3, f, g, x + h * e) - poisson_bracket(so3, f, g, x - h * e)) / (2 * h) for e in np.eye(3)])
    np.testing.assert_allclose(koszul_bracket(so3, df, dg, x), fd.reshape(-1), atol=1e-8)


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 10_000))
def test_koszul_leibniz_anchor_identity(seed):
    rng = np.random.default_rng(seed)
    names = ("x1", "x2", "x3")
    pi = BivectorField(3, {(i, j): random_polynomial(names, rng) for i in range(3) for j in range(i + 1, 3)})
    a = CovectorField([random_polynomial(names, rng) for _ in range(3)])
    b = CovectorField([random_polynomial(names, rng) for _ in range(3)])
    f = random_polynomial(names, rng)
    fb = CovectorField([f * b.component(i) for i in range(3)])
    x = rng.uniform(-1, 1, 3)
    lhs = koszul_bracket(pi, a, fb, x)
    from symprealize.expr import eval_jet

    fj = eval_jet(f, x, 1)
    anchor = pi.matrix(x).T @ a.value(x)  # X_a^i = pi^{ji} a_j
    rhs = fj.value * koszul_bracket(pi, a, b, x) + (anchor @ fj.grad) * b.value(x)
    assert np.max(np.abs(lhs - rhs)) <= 1e-9


def test_vector_field_brackets():
    d1, d2 = VectorField.coordinate(0, 2), VectorField.coordinate(1, 2)
    np.testing.assert_allclose(vf_lie_bracket(d1, d2, [0.3, 0.4]), 0)
    X = VectorField([None, "x1"])
    np.testing.assert_allclose(vf_lie_bracket(X, d1, [1.0, 1.0]), [0, -1])
    Y = VectorField(["x1*x2", "sin(x1)"])
    np.testing.assert_allclose(vf_lie_bracket(Y, Y, [0.2, 0.9]), 0, atol=1e-15)


def test_vector_bracket_against_flow_commutator():
    # [X, Y] = d/dt of the flow commutator, checked with second-order FD on explicit flows
    X = VectorField([None, "x1"])  # flow (x1, x2 + t x1)
    Y = VectorField.coordinate(0, 2)  # flow (x1 + t, x2)
    p = np.array([1.0, 1.0])
    t = 1e-4

    def fX(q, s):
        return np.array([q[0], q[1] + s * q[0]])

    def fY(q, s):
        return np.array([q[0] + s, q[1]])

    comm = fY(fX(fY(fX(p, t), t), -t), -t)
    np.testing.assert_allclose((comm - p) / t**2, vf_lie_bracket(X, Y, p), atol=1e-6)


def test_torsion_of_identity_constant_and_J(rng):
    X = VectorField(["x1*x2", "x2^2", "x3", "1"], ("x1", "x2", "x3", "x4"))
    Y = VectorField(["sin(x3)", "x1", "x4*x2", "x1^2"], ("x1", "x2", "x3", "x4"))
    J = OneOneTensorField.constant(np.block([[np.zeros((2, 2)), -np.eye(2)], [np.eye(2), np.zeros((2, 2))]]))
    C = OneOneTensorField.constant(np.round(rng.normal(size=(4, 4)), 3))
    for N in (OneOneTensorField.identity(4), C, J):
        assert np.max(np.abs(nijenhuis_torsion(N, X, Y, rng.uniform(-1, 1, 4)))) <= 1e-12


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 10_000))
def test_torsion_is_function_bilinear(seed):
    rng = np.random.default_rng(seed)
    names = ("x1", "x2")
    N = OneOneTensorField([[random_polynomial(names, rng) for _ in range(2)] for _ in range(2)])
    X = VectorField([random_polynomial(names, rng) for _ in range(2)])
    Y = VectorField([random_polynomial(names, rng) for _ in range(2)])
    f = random_polynomial(names, rng)
    fX = VectorField([f * X.component(i) for i in range(2)])
    x = rng.uniform(-1, 1, 2)
    from symprealize.expr import evaluate

    assert np.max(np.abs(nijenhuis_torsion(N, fX, Y, x) - evaluate(f, x) * nijenhuis_torsion(N, X, Y, x))) <= 1e-9


def test_exterior_derivative_examples():
    const = TwoFormField(4, {(0, 2): "1", (1, 3): "1"})
    assert np.max(np.abs(exterior_derivative_2form(const, np.zeros(4)))) == 0
    area = TwoFormField(2, {(0, 1): "1"})
    assert np.max(np.abs(exterior_derivative_2form(area, [0.3, 0.1]))) == 0
    w = TwoFormField(3, {(0, 1): "x3"})
    dw = exterior_derivative_2form(w, [0.2, 0.5, -0.1])
    assert dw[0, 1, 2] == pytest.approx(1.0, abs=1e-9)
    np.testing.assert_allclose(dw[1, 0, 2], -1.0, atol=1e-9)


def test_d_of_one_form_and_d_squared(rng):
    theta = CovectorField([None, "x1"])
    np.testing.assert_allclose(exterior_derivative_1form(theta, [0.1, 0.2]), [[0, 1], [-1, 0]])
    # d(d theta) by FD of the jet-based d theta
    names = ("x1", "x2", "x3")
    theta = CovectorField([random_polynomial(names, rng, 3) for _ in range(3)])

    def dtheta(points):
        return np.array([exterior_derivative_1form(theta, p) for p in points])

    dd = exterior_derivative_2form(dtheta, rng.uniform(-1, 1, 3))
    assert np.max(np.abs(dd)) <= 1e-7


def test_pullback_of_constant_form_is_closed():
    # w = G^* W3 for the map G(p) = (p1 + p2 p3, p1^2 + p2, sin(p2) + p3)
    def G_jac(p):
        return np.array([[1.0, p[2], p[1]], [2 * p[0], 1.0, 0.0], [0.0, np.cos(p[1]), 1.0]])

    W3 = np.zeros((3, 3))
    W3[0, 1], W3[1, 0] = 1.0, -1.0

    def w3(points):
        return np.array([pullback_2form(G_jac(p), W3).matrix for p in points])

    assert np.max(np.abs(exterior_derivative_2form(w3, [0.2, -0.3, 0.4]))) <= 1e-6


def test_pullback_rules(rng):
    W = random_antisymmetric(4, rng)
    np.testing.assert_allclose(pullback_2form(np.eye(4), W).matrix, W)
    np.testing.assert_allclose(pullback_2form(2 * np.eye(4), W).matrix, 4 * W)
    J1, J2 = rng.normal(size=(4, 4)), rng.normal(size=(4, 4))
    lhs = pullback_2form(J1 @ J2, W).matrix
    rhs = pullback_2form(J2, pullback_2form(J1, W).matrix).matrix
    np.testing.assert_allclose(lhs, rhs, atol=1e-12)
    t = 0.7
    P = random_antisymmetric(2, rng)
    J = np.block([[np.eye(2), t * P], [np.zeros((2, 2)), np.eye(2)]])
    out = pullback_2form(J, omega_can(2)).matrix
    np.testing.assert_allclose(out, np.block([[np.zeros((2, 2)), np.eye(2)], [-np.eye(2), -2 * t * P]]), atol=1e-15)


def test_omega_can_layout():
    W = omega_can(2)
    np.testing.assert_array_equal(W, [[0, 0, 1, 0], [0, 0, 0, 1], [-1, 0, 0, 0], [0, -1, 0, 0]])
    m = TwoFormMatrix(W)
    assert m.antisymmetry_defect() == 0
    assert m(np.array([1.0, 0, 0, 0]), np.array([0, 0, 1.0, 0])) == 1.0


def test_zero_fields_pass_through():
    z = BivectorField.zero(3)
    a = CovectorField.exact(0, 3)
    np.testing.assert_array_equal(koszul_bracket(z, a, a, [1.0, 2.0, 3.0]), 0)
    assert np.max(np.abs(jacobiator(z, [1.0, 2.0, 3.0]))) == 0


def test_richardson_improves_fd():
    w = TwoFormField(3, {(0, 1): "sin(3*x3)*x1", (1, 2): "exp(x1)*x2^2"})
    p = np.array([0.3, 0.2, -0.5])
    plain = exterior_derivative_2form(w, p, CentralDifference(1e-2, False))
    rich = exterior_derivative_2form(w, p, CentralDifference(1e-2, True))
    ref = exterior_derivative_2form(w, p, CentralDifference(1e-4, True))
    assert np.max(np.abs(rich - ref)) < np.max(np.abs(plain - ref))
