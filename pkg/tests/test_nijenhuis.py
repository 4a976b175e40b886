import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from symprealize.expr import evaluate, parse
from symprealize.geometry import (
    BivectorField,
    CovectorField,
    OneOneTensorField,
    TwoFormField,
    VectorField,
    exterior_derivative_1form,
    omega_can,
    vf_lie_bracket,
)
from symprealize.nijenhuis import (
    PNStructure,
    bialgebroid_morphism_check,
    coboundary_TMN,
    coboundary_commutator_residual,
    coboundary_square_residual,
    complete_lift,
    complete_lift_blocks,
    fiber_map_jacobian,
    lie_poisson_lift_residual,
    pi_N_jacobiator,
    pn_compatibility,
    random_polynomial,
    twisted_bivector,
    twisted_bracket,
    twisted_lie_poisson,
)

CANON = BivectorField(2, {(0, 1): "1"})
F_ID = "1 + 0.3*x1 + 0.2*x2^2"


def poly_N(n, seed):
    rng = np.random.default_rng(seed)
    names = tuple(f"x{i + 1}" for i in range(n))
    return OneOneTensorField([[random_polynomial(names, rng) for _ in range(n)] for _ in range(n)])


def fd_jacobian(field, x, h=1e-6):
    return np.column_stack([(field(x + h * e) - field(x - h * e)) / (2 * h) for e in np.eye(len(x))])


def test_pn_identity_and_counterexample(so3):
    x = np.array([0.3, -0.1, 0.8])
    res = pn_compatibility(so3, OneOneTensorField.identity(3), x)
    assert max(res.values()) <= 1e-14
    bad = pn_compatibility(CANON, OneOneTensorField.constant(np.diag([1.0, 2.0])), [0.1, 0.2])
    assert bad["matrix"] == pytest.approx(1.0)
    assert bad["bracket"] > 0.1


def test_pn_function_times_identity():
    N = OneOneTensorField([[F_ID, "0"], ["0", F_ID]])
    for x in ([0.1, 0.2], [-0.7, 0.9]):
        assert max(pn_compatibility(CANON, N, x).values()) <= 1e-12
        assert pi_N_jacobiator(PNStructure(CANON, N), x) <= 1e-12


def test_twisted_bivector_matrix(so3):
    N = poly_N(3, 3)
    x = np.array([0.2, 0.4, -0.6])
    # only the upper triangle is stored; P N^T is antisymmetric only for compatible pairs
    iu = np.triu_indices(3, 1)
    np.testing.assert_allclose(twisted_bivector(so3, N).matrix(x)[iu], (so3.matrix(x) @ N.matrix(x).T)[iu], atol=1e-14)
    g = OneOneTensorField([[F_ID, "0"], ["0", F_ID]])
    p = np.array([0.3, 0.5])
    np.testing.assert_allclose(twisted_bivector(CANON, g).matrix(p), CANON.matrix(p) @ g.matrix(p).T, atol=1e-14)


def test_twisted_bracket_identity_and_constant():
    X = VectorField(["x1*x2", "sin(x1)"])
    Y = VectorField(["x2^2", "x1 - x2"])
    p = [0.3, -0.4]
    np.testing.assert_allclose(twisted_bracket(OneOneTensorField.identity(2), X, Y, p), vf_lie_bracket(X, Y, p), atol=1e-14)
    C = OneOneTensorField.constant([[1.0, 2.0], [0.5, -1.0]])
    np.testing.assert_allclose(twisted_bracket(C, VectorField(["1", "2"]), VectorField(["-3", "0.5"]), p), 0)


def test_twisted_bracket_brute_force():
    # N = x1 Id, X = d1, Y = d2, evaluated term by term with FD Jacobians
    N = OneOneTensorField([["x1", "0"], ["0", "x1"]])
    X, Y = VectorField.coordinate(0, 2), VectorField.coordinate(1, 2)
    p = np.array([0.7, -0.2])

    def Nf(q):
        return q[0] * np.eye(2)

    def bracket(A, B, q):
        return fd_jacobian(B, q) @ A(q) - fd_jacobian(A, q) @ B(q)

    e1, e2 = (lambda q: np.array([1.0, 0.0])), (lambda q: np.array([0.0, 1.0]))
    NX, NY = (lambda q: Nf(q) @ e1(q)), (lambda q: Nf(q) @ e2(q))
    brute = bracket(NX, e2, p) + bracket(e1, NY, p) - Nf(p) @ bracket(e1, e2, p)
    np.testing.assert_allclose(twisted_bracket(N, X, Y, p), brute, atol=1e-8)


def test_complete_lift_cases(rng):
    z = rng.uniform(-1, 1, 4)
    np.testing.assert_array_equal(complete_lift(OneOneTensorField.identity(2), z), np.eye(4))
    M = np.array([[1.0, 2.0], [0.5, -1.0]])
    np.testing.assert_allclose(complete_lift(OneOneTensorField.constant(M), z), np.block([[M, np.zeros((2, 2))], [np.zeros((2, 2)), M.T]]))
    J = np.block([[np.zeros((2, 2)), -np.eye(2)], [np.eye(2), np.zeros((2, 2))]])
    Jc = complete_lift(OneOneTensorField.constant(J), rng.uniform(-1, 1, 8))
    np.testing.assert_allclose(Jc @ Jc, -np.eye(8), atol=1e-15)


@pytest.mark.parametrize("n", [2, 3])
def test_complete_lift_closed_form_and_vertical(n):
    N = poly_N(n, 11 + n)
    z = np.random.default_rng(n).uniform(-1, 1, 2 * n)
    Nc = complete_lift(N, z)
    j = N.jet(z[:n], 1)
    np.testing.assert_allclose(Nc, complete_lift_blocks(j.coeffs[0], j.coeffs[1], z[n:]).reshape(2 * n, 2 * n), atol=1e-13)
    # vertical vectors stay vertical
    assert np.max(np.abs(Nc[:n, n:])) == 0


def test_complete_lift_of_fiber_map(rng):
    # N^c^T omega = F^T omega F for the fiber map (x, l) -> (x, N^T l)
    N = poly_N(2, 5)
    z = rng.uniform(-1, 1, 4)
    F = fiber_map_jacobian(N, z)
    Nc = complete_lift(N, z)
    np.testing.assert_allclose(Nc.T @ omega_can(2), F.T @ omega_can(2) @ F, atol=1e-13)
    Finv = fiber_map_jacobian(N, z, inverse=True)
    # inverse map Jacobian at the image point composes to the identity
    img = np.concatenate([z[:2], N.matrix(z[:2]).T @ z[2:]])
    np.testing.assert_allclose(fiber_map_jacobian(N, img, inverse=True) @ F, np.eye(4), atol=1e-12)
    assert Finv.shape == (4, 4)


def test_twisted_lie_poisson_examples(rng):
    z = rng.uniform(-1, 1, 6)
    np.testing.assert_allclose(twisted_lie_poisson(OneOneTensorField.identity(3), z), np.linalg.inv(omega_can(3)))
    c = np.array([1.5, -2.0, 0.5])
    P = twisted_lie_poisson(OneOneTensorField.constant(np.diag(c)), z)
    for i in range(3):
        for j in range(3):
            assert P[3 + i, j] == (c[i] if i == j else 0.0)
            assert P[3 + i, 3 + j] == 0.0
            assert P[i, j] == 0.0
    Q = twisted_lie_poisson(poly_N(3, 2), z)
    np.testing.assert_allclose(Q, -Q.T, atol=1e-15)


@pytest.mark.parametrize("n", [2, 3])
def test_lie_poisson_lift_residual(n):
    rng = np.random.default_rng(40 + n)
    N = poly_N(n, 100 + n)
    for _ in range(10):
        assert lie_poisson_lift_residual(N, rng.uniform(-1, 1, 2 * n)) <= 1e-8


def test_coboundary_identity_is_de_rham(rng):
    I3 = OneOneTensorField.identity(3)
    f = parse("x1*x2^2 + sin(x3)")
    x = rng.uniform(-1, 1, 3)
    np.testing.assert_allclose(coboundary_TMN(I3, f, x), [x[1] ** 2, 2 * x[0] * x[1], np.cos(x[2])], atol=1e-14)
    a = CovectorField(["x2*x3", "x1^2", "sin(x2)"])
    np.testing.assert_allclose(coboundary_TMN(I3, a, x), exterior_derivative_1form(a, x), atol=1e-14)
    w = TwoFormField(3, {(0, 1): "x3", (1, 2): "x1*x2"})
    d = coboundary_TMN(I3, w, x)
    assert d[0, 1, 2] == pytest.approx(1.0 + x[1])


@settings(max_examples=15, deadline=None)
@given(st.integers(0, 5000))
def test_coboundary_squares_to_zero(seed):
    rng = np.random.default_rng(seed)
    names = ("x1", "x2", "x3")
    f = random_polynomial(names, rng, 3)
    a = CovectorField([random_polynomial(names, rng) for _ in range(3)])
    x = rng.uniform(-1, 1, 3)
    C = OneOneTensorField.constant(np.round(rng.normal(size=(3, 3)), 3))
    g = OneOneTensorField([["1 + 0.2*x1*x2", "0", "0"], ["0", "1 + 0.2*x1*x2", "0"], ["0", "0", "1 + 0.2*x1*x2"]])
    for N in (C, g):
        assert coboundary_square_residual(N, f, x) <= 1e-10
        assert coboundary_square_residual(N, a, x) <= 1e-10
        assert coboundary_commutator_residual(N, f, x) <= 1e-10


def test_bialgebroid(so3):
    x = np.array([0.4, 0.1, -0.3])
    assert max(bialgebroid_morphism_check(so3, OneOneTensorField.identity(3), None, x).values()) <= 1e-14
    bad = bialgebroid_morphism_check(CANON, OneOneTensorField.constant(np.diag([1.0, 2.0])), None, [0.2, 0.1])
    assert max(bad.values()) > 0.1
    N = OneOneTensorField([[F_ID, "0"], ["0", F_ID]])
    assert max(bialgebroid_morphism_check(CANON, N, None, [0.3, -0.5]).values()) <= 1e-12


def test_random_polynomial_is_seeded():
    names = ("x1", "x2")
    a = random_polynomial(names, np.random.default_rng(3))
    b = random_polynomial(names, np.random.default_rng(3))
    assert evaluate(a, [0.3, 0.4]) == evaluate(b, [0.3, 0.4])
