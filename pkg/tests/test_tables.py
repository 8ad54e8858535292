import random
from fractions import Fraction as F

import pytest
import sympy

from nloop.algebra import DeltaFraction, LaurentPoly
from nloop.diagrams import degree, loop_number
from nloop.errors import TooLarge
from nloop.tables import (
    ThetaMN,
    build_thetas,
    closed_form_pq,
    crude_bound,
    k_examples,
    legless_shape_count,
    solve_two_loop,
    theta_mn_count,
    theta_mn_set,
    theta_shapes,
    xset_3loop,
    xset_codes,
)


def test_theta_coefficients_a_one():
    T = build_thetas(1)
    assert T.coeffs1 == (1, F(-11, 6))
    assert T.coeffs2 == (-2, F(23, 3))


def test_theta_coefficients_range():
    for a in range(-5, 6):
        T = build_thetas(a)
        assert T.coeffs1 == (1, -2 * a + F(1, 6))
        assert T.coeffs2 == (-2, F(28, 3) * a - F(5, 3))
        assert T.determinant == F(16, 3) * a - F(4, 3) != 0


def test_reference_diagrams_are_two_loop():
    sh = theta_shapes()
    assert degree(sh["basis_deg3"]) == 3 and degree(sh["basis_deg5"]) == 5
    for k in ("theta1", "theta2_main", "theta2_correction", "basis_deg3", "basis_deg5"):
        assert loop_number(sh[k]) == 2


def test_corollary_symbolic():
    a, b1, b2, p, q = sympy.symbols("a b1 b2 p q")
    sol = sympy.solve(
        [p - 2 * q - b1, (-2 * a + sympy.Rational(1, 6)) * p + (sympy.Rational(28, 3) * a - sympy.Rational(5, 3)) * q - b2],
        [p, q])
    assert sympy.simplify(sol[p] - ((28 * a - 5) * b1 + 6 * b2) / (16 * a - 4)) == 0
    assert sympy.simplify(sol[q] - ((12 * a - 1) * b1 + 6 * b2) / (32 * a - 8)) == 0


def test_corollary_random_triples():
    rng = random.Random(2)
    x, y = sympy.symbols("x y")
    for _ in range(50):
        a = rng.randint(-20, 20)
        b1 = F(rng.randint(-30, 30), rng.randint(1, 12))
        b2 = F(rng.randint(-30, 30), rng.randint(1, 12))
        s = solve_two_loop(a, b1, b2)
        T = build_thetas(a)
        ref = sympy.solve([
            T.coeffs1[0] * x + T.coeffs2[0] * y - sympy.Rational(b1.numerator, b1.denominator),
            T.coeffs1[1] * x + T.coeffs2[1] * y - sympy.Rational(b2.numerator, b2.denominator),
        ], [x, y])
        assert (s.p, s.q) == (F(str(ref[x])), F(str(ref[y])))
        assert s.closed_form_ok
        assert s.three_term()[2] == s.q * F(4 * a - 1, 3)


def test_corollary_examples():
    z = solve_two_loop(3, 0, 0)
    assert (z.p, z.q) == (0, 0)
    s = solve_two_loop(1, 1, 0)
    assert (s.p, s.q) == (F(23, 12), F(11, 24))
    assert closed_form_pq(1, 1, 0) == (F(23, 12), F(11, 24))
    with pytest.raises(ValueError):
        build_thetas(F(1, 2))


def test_k_examples():
    K = k_examples(2)
    assert K.det01 == F(-3, 32)
    K0 = k_examples(0)
    assert K0.det01 == 0 and K0.det12 == F(-3, 8)
    assert k_examples(-1).det12 == F(-3, 8)
    for a in range(-10, 11):
        K = k_examples(a)
        A = F(a * (a + 1))
        (p0, q0), (p1, q1), (p2, q2) = K.pairs
        assert (p0, q0) == (-A / 16, A / 32)
        assert K.det01 == sympy.Matrix([[p0, q0], [p1, q1]]).det() == -A / 64
        assert K.det12 == sympy.Matrix([[p1, q1], [p2, q2]]).det() == F((a - 2) * (a + 3), 16)
        assert K.case_ok


def test_theta_mn():
    assert [(x.n, x.m) for x in theta_mn_set(1)] == [(1, 0), (2, 0), (2, 1)]
    assert theta_mn_count(2) == 8
    assert theta_mn_count(5) == 35
    for g in range(1, 13):
        assert theta_mn_count(g) == g * g + 2 * g
    with pytest.raises(ValueError):
        ThetaMN(2, 2)


def test_xset():
    X = xset_3loop()
    assert len(X) == 11
    assert all(loop_number(D) == 3 and not D.legs for D in X)
    assert len(set(xset_codes())) == 11
    u = LaurentPoly.u()
    for D in X:
        for _, lab in D.labels:
            num = lab.num if isinstance(lab, DeltaFraction) else lab
            assert isinstance(lab, DeltaFraction) and lab.dpow == 0
            assert any(num == u ** k for k in range(0, 4))


def test_crude_bound():
    assert legless_shape_count(2) == 2
    assert legless_shape_count(3) == 5
    assert crude_bound(2, 1) == 686
    assert crude_bound(2, 2) == 1458
    assert crude_bound(3, 1) == 5 * 7 ** 6
    with pytest.raises(TooLarge):
        crude_bound(6, 1)
    with pytest.raises(ValueError):
        crude_bound(1, 1)
