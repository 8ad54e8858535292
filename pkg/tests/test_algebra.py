from fractions import Fraction as F
from math import factorial

import pytest
import sympy
from hypothesis import given, settings, strategies as st

from nloop.algebra import (
    AlexanderPoly,
    DeltaFraction,
    HSeries,
    LaurentPoly,
    deg_Z,
    exp_substitute,
    is_in_Z,
    parse_label,
    parse_laurent,
    series_exp,
    series_invert,
    series_log,
)
from nloop.errors import NonUnit, NotInZ, ParseError

t = LaurentPoly.t()
u = LaurentPoly.u()
v = LaurentPoly.v()


def H(*cs):
    return HSeries([F(c) for c in cs], len(cs) - 1)


laurents = st.dictionaries(st.integers(-4, 4), st.fractions(max_denominator=6).filter(bool), max_size=5).map(
    lambda d: LaurentPoly(d.items()))


def test_is_in_Z():
    assert is_in_Z(LaurentPoly.const(1) + u.scale(2))
    assert not is_in_Z(t)
    assert is_in_Z(LaurentPoly.const(1))
    assert not is_in_Z(LaurentPoly.const(2))


def test_deg_Z():
    for a in (1, -3, 5):
        assert deg_Z(LaurentPoly.const(1) + u.scale(a)) == 1
    assert deg_Z(LaurentPoly.const(1)) == 0
    assert deg_Z(t - 1 + t.inv_t()) == 1
    with pytest.raises(NotInZ):
        deg_Z(t)


def test_exp_substitute_examples():
    assert exp_substitute(u, 4) == H(0, 0, 1, 0, F(1, 12))
    assert exp_substitute(v, 5) == H(0, 2, 0, F(1, 3), 0, F(1, 60))
    assert exp_substitute(LaurentPoly.const(1), 3) == H(1, 0, 0, 0)


def test_exp_substitute_against_sympy():
    h = sympy.Symbol("h")
    for f in (u, v, t ** 3 - t.inv_t().scale(2), u ** 2):
        expr = sum(sympy.Rational(c.numerator, c.denominator) * sympy.exp(e * h) for e, c in f.terms)
        ser = sympy.series(expr, h, 0, 7).removeO()
        got = exp_substitute(f, 6)
        assert all(got[k] == F(str(ser.coeff(h, k))) for k in range(7))


def test_series_invert_examples():
    a = F(3)
    s = H(1, 0, a, 0, a / 12)
    assert series_invert(s) == H(1, 0, -a, 0, a * a - a / 12)
    assert series_invert(H(1)) == H(1)
    assert series_invert(H(1, 1, 0)) == H(1, -1, 1)
    with pytest.raises(NonUnit):
        series_invert(H(0, 1))


def test_series_invert_by_long_division():
    s = exp_substitute(LaurentPoly.const(1) + u.scale(-2) + (u ** 2).scale(5), 8)
    inv = series_invert(s)
    # long division: solve sum_j s_j inv_{k-j} = delta_k0 term by term
    q = [F(0)] * 9
    for k in range(9):
        q[k] = (F(k == 0) - sum(s[j] * q[k - j] for j in range(1, k + 1))) / s[0]
    assert [inv[k] for k in range(9)] == q


def test_exp_log_inverse():
    x = H(0, 1, F(1, 2), F(-1, 3), 2)
    assert series_log(series_exp(x)) == x
    assert series_exp(x)[2] == F(1, 2) + F(1, 2)


@given(laurents, laurents)
@settings(max_examples=60, deadline=None)
def test_laurent_ring_laws(f, g):
    assert f * g == g * f
    assert (f + g) * g == f * g + g * g
    assert (f * g).inv_t() == f.inv_t() * g.inv_t()
    assert exp_substitute(f * g, 5) == exp_substitute(f, 5) * exp_substitute(g, 5)
    if g:
        assert (f * g).exact_div(g) == f


@given(laurents)
@settings(max_examples=40, deadline=None)
def test_inv_t_is_negate_h(f):
    assert exp_substitute(f.inv_t(), 6) == exp_substitute(f, 6).negate_h()


def test_u_basis_roundtrip():
    for coeffs in ([2], [1, -1], [0, 3, 1]):
        A = AlexanderPoly.from_u(coeffs)
        assert list(A.u_coeffs) == coeffs[: len(A.u_coeffs)]
        assert A.degree == len([c for c in coeffs]) - (1 if coeffs[-1] == 0 else 0)


def test_parse_laurent_and_labels():
    assert parse_laurent("t + t^-1 - 2") == u
    assert parse_laurent("3*t^2 - 1/2") == (t ** 2).scale(3) - F(1, 2)
    lab = parse_label("(t-t^-1)/D")
    assert isinstance(lab, DeltaFraction) and lab.dpow == 1 and lab.num == v
    assert parse_label("D").dpow == -1
    with pytest.raises(ParseError) as e:
        parse_laurent("t + * 2")
    assert e.value.column is not None


def test_delta_fraction_series():
    A = AlexanderPoly(LaurentPoly.const(1) + u.scale(2))
    s = parse_label("(t+t^-1-2)/D").series(4, A)
    assert s == H(0, 0, 1, 0, F(1, 12) - 2)
    assert parse_label("t").series(3) == H(1, 1, F(1, 2), F(1, 6))
    assert [parse_label("t").series(6)[k] for k in range(7)] == [F(1, factorial(k)) for k in range(7)]
