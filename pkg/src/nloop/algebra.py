"""Exact scalars, Laurent polynomials in t, truncated power series in h.

Everything here is immutable and uses :class:`fractions.Fraction`; there is
no floating point anywhere in the package.
"""
from fractions import Fraction
from math import factorial
import re

from .errors import NonUnit, NotInZ, ParseError

DEFAULT_ORDER = 7


def Q(x):
    """Coerce ints, Fractions and "p/q" strings to a Fraction."""
    if isinstance(x, Fraction):
        return x
    if isinstance(x, str):
        return Fraction(x.strip())
    return Fraction(x)


def qstr(x):
    x = Q(x)
    return str(x.numerator) if x.denominator == 1 else f"{x.numerator}/{x.denominator}"


class LaurentPoly:
    """Element of Q[t, t^-1], stored as a sorted tuple of (exponent, coeff)."""

    __slots__ = ("_terms", "_hash")

    def __init__(self, terms=None):
        acc = {}
        if isinstance(terms, dict):
            items = terms.items()
        else:
            items = terms or ()
        for e, c in items:
            c = Q(c)
            if c:
                acc[int(e)] = acc.get(int(e), 0) + c
        self._terms = tuple(sorted((e, c) for e, c in acc.items() if c))
        self._hash = None

    @classmethod
    def const(cls, c):
        return cls({0: c})

    @classmethod
    def monomial(cls, e, c=1):
        return cls({e: c})

    @classmethod
    def t(cls):
        return cls({1: 1})

    @classmethod
    def u(cls):
        """u = t + t^-1 - 2."""
        return cls({1: 1, -1: 1, 0: -2})

    @classmethod
    def v(cls):
        """v = t - t^-1."""
        return cls({1: 1, -1: -1})

    @property
    def terms(self):
        return self._terms

    def coeffs(self):
        return dict(self._terms)

    def coeff(self, e):
        for k, c in self._terms:
            if k == e:
                return c
        return Fraction(0)

    def __bool__(self):
        return bool(self._terms)

    def is_zero(self):
        return not self._terms

    @property
    def min_exp(self):
        return self._terms[0][0] if self._terms else 0

    @property
    def max_exp(self):
        return self._terms[-1][0] if self._terms else 0

    def support(self):
        return [e for e, _ in self._terms]

    def __eq__(self, other):
        if isinstance(other, (int, Fraction)):
            other = LaurentPoly.const(other)
        if not isinstance(other, LaurentPoly):
            return NotImplemented
        return self._terms == other._terms

    def __hash__(self):
        if self._hash is None:
            self._hash = hash(("L", self._terms))
        return self._hash

    def _coerce(self, other):
        if isinstance(other, LaurentPoly):
            return other
        if isinstance(other, (int, Fraction)):
            return LaurentPoly.const(other)
        return None

    def __add__(self, other):
        other = self._coerce(other)
        if other is None:
            return NotImplemented
        d = dict(self._terms)
        for e, c in other._terms:
            d[e] = d.get(e, 0) + c
        return LaurentPoly(d)

    __radd__ = __add__

    def __neg__(self):
        return LaurentPoly((e, -c) for e, c in self._terms)

    def __sub__(self, other):
        other = self._coerce(other)
        if other is None:
            return NotImplemented
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        other = self._coerce(other)
        if other is None:
            return NotImplemented
        d = {}
        for e1, c1 in self._terms:
            for e2, c2 in other._terms:
                d[e1 + e2] = d.get(e1 + e2, 0) + c1 * c2
        return LaurentPoly(d)

    __rmul__ = __mul__

    def __pow__(self, n):
        if n < 0:
            if len(self._terms) != 1:
                raise NonUnit("only monomials have Laurent inverses")
            (e, c), = self._terms
            return LaurentPoly({-e * (-n): Fraction(1) / c ** (-n)})
        result = LaurentPoly.const(1)
        base = self
        while n:
            if n & 1:
                result = result * base
            base = base * base
            n >>= 1
        return result

    def shift(self, k):
        return LaurentPoly((e + k, c) for e, c in self._terms)

    def scale(self, c):
        return LaurentPoly((e, c * x) for e, x in self._terms)

    def inv_t(self):
        """Substitute t -> t^-1."""
        return LaurentPoly((-e, c) for e, c in self._terms)

    def at_one(self):
        return sum((c for _, c in self._terms), Fraction(0))

    def __call__(self, t):
        return sum((c * Q(t) ** e for e, c in self._terms), Fraction(0))

    def is_symmetric(self):
        return self == self.inv_t()

    def is_integral(self):
        return all(c.denominator == 1 for _, c in self._terms)

    def is_monomial(self):
        return len(self._terms) == 1

    def divmod(self, other):
        """Exact Euclidean division in Q[t^{+-1}] after clearing the lowest powers.

        Returns (quotient, remainder) with the remainder reduced modulo the
        divisor viewed as an ordinary polynomial; remainder zero means exact.
        """
        if not other:
            raise ZeroDivisionError("division by zero Laurent polynomial")
        a_shift = self.min_exp
        b_shift = other.min_exp
        a = [c for c in _dense(self.shift(-a_shift))]
        b = [c for c in _dense(other.shift(-b_shift))]
        if len(a) < len(b):
            return LaurentPoly(), self
        q = [Fraction(0)] * (len(a) - len(b) + 1)
        a = list(a)
        lead = b[-1]
        for i in range(len(a) - len(b), -1, -1):
            coef = a[i + len(b) - 1] / lead
            q[i] = coef
            if coef:
                for j, bc in enumerate(b):
                    a[i + j] -= coef * bc
        quot = LaurentPoly(enumerate(q)).shift(a_shift - b_shift)
        rem = LaurentPoly(enumerate(a)).shift(a_shift)
        return quot, rem

    def exact_div(self, other):
        quot, rem = self.divmod(other)
        if rem:
            raise ArithmeticError(f"{other} does not divide {self}")
        return quot

    def to_json(self):
        return [[e, qstr(c)] for e, c in self._terms]

    @classmethod
    def from_json(cls, data):
        return cls((int(e), Q(c)) for e, c in data)

    def __repr__(self):
        return f"LaurentPoly({self})"

    def __str__(self):
        if not self._terms:
            return "0"
        parts = []
        for e, c in sorted(self._terms, key=lambda ec: -ec[0]):
            if e == 0:
                mono = ""
            elif e == 1:
                mono = "t"
            else:
                mono = f"t^{e}"
            if mono and c == 1:
                s = mono
            elif mono and c == -1:
                s = "-" + mono
            elif mono:
                s = f"{qstr(c)}*{mono}"
            else:
                s = qstr(c)
            parts.append(s)
        out = parts[0]
        for p in parts[1:]:
            out += " - " + p[1:] if p.startswith("-") else " + " + p
        return out


def _dense(p):
    if not p:
        return [Fraction(0)]
    out = [Fraction(0)] * (p.max_exp + 1)
    for e, c in p.terms:
        out[e] = c
    return out


class HSeries:
    """Power series in h truncated after h^order, exact coefficients."""

    __slots__ = ("order", "coeffs", "_hash")

    def __init__(self, coeffs, order=None):
        coeffs = [Q(c) for c in coeffs]
        if order is None:
            order = max(len(coeffs) - 1, 0)
        if order < 0:
            raise ValueError("order must be non-negative")
        coeffs = coeffs[: order + 1] + [Fraction(0)] * (order + 1 - len(coeffs))
        self.order = order
        self.coeffs = tuple(coeffs)
        self._hash = None

    @classmethod
    def const(cls, c, order):
        return cls([c], order)

    @classmethod
    def h(cls, order):
        return cls([0, 1], order)

    def __getitem__(self, k):
        return self.coeffs[k] if 0 <= k <= self.order else Fraction(0)

    def __eq__(self, other):
        if not isinstance(other, HSeries):
            return NotImplemented
        return self.order == other.order and self.coeffs == other.coeffs

    def __hash__(self):
        if self._hash is None:
            self._hash = hash(("H", self.order, self.coeffs))
        return self._hash

    def _other(self, other):
        if isinstance(other, HSeries):
            if other.order != self.order:
                raise ValueError("series orders differ")
            return other
        if isinstance(other, (int, Fraction)):
            return HSeries.const(other, self.order)
        return None

    def __add__(self, other):
        other = self._other(other)
        if other is None:
            return NotImplemented
        return HSeries([a + b for a, b in zip(self.coeffs, other.coeffs)], self.order)

    __radd__ = __add__

    def __neg__(self):
        return HSeries([-a for a in self.coeffs], self.order)

    def __sub__(self, other):
        other = self._other(other)
        if other is None:
            return NotImplemented
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, (int, Fraction)):
            return HSeries([a * other for a in self.coeffs], self.order)
        other = self._other(other)
        if other is None:
            return NotImplemented
        n = self.order
        a, b = self.coeffs, other.coeffs
        out = [Fraction(0)] * (n + 1)
        for i, x in enumerate(a):
            if x:
                for j in range(n + 1 - i):
                    if b[j]:
                        out[i + j] += x * b[j]
        return HSeries(out, n)

    __rmul__ = __mul__

    def __pow__(self, k):
        if k < 0:
            return series_invert(self) ** (-k)
        result = HSeries.const(1, self.order)
        for _ in range(k):
            result = result * self
        return result

    def __truediv__(self, other):
        if isinstance(other, (int, Fraction)):
            return self * (Fraction(1) / other)
        return self * series_invert(other)

    def negate_h(self):
        """Substitute h -> -h."""
        return HSeries([c if k % 2 == 0 else -c for k, c in enumerate(self.coeffs)], self.order)

    def truncate(self, order):
        return HSeries(self.coeffs[: order + 1], order)

    def valuation(self):
        for k, c in enumerate(self.coeffs):
            if c:
                return k
        return None

    def is_zero(self):
        return not any(self.coeffs)

    def to_json(self):
        return {"order": self.order, "coeffs": [qstr(c) for c in self.coeffs]}

    @classmethod
    def from_json(cls, data):
        return cls([Q(c) for c in data["coeffs"]], int(data["order"]))

    def __repr__(self):
        return f"HSeries({[qstr(c) for c in self.coeffs]}, order={self.order})"

    def __str__(self):
        parts = []
        for k, c in enumerate(self.coeffs):
            if c:
                mono = "" if k == 0 else ("h" if k == 1 else f"h^{k}")
                parts.append(qstr(c) + (("*" + mono) if mono else ""))
        return (" + ".join(parts) or "0") + f" + O(h^{self.order + 1})"


def series_invert(s):
    """Multiplicative inverse of a series with nonzero constant term."""
    c0 = s[0]
    if not c0:
        raise NonUnit("series has zero constant term")
    n = s.order
    inv = [Fraction(0)] * (n + 1)
    inv[0] = 1 / c0
    for k in range(1, n + 1):
        acc = Fraction(0)
        for j in range(1, k + 1):
            if s[j]:
                acc += s[j] * inv[k - j]
        inv[k] = -acc / c0
    return HSeries(inv, n)


def series_exp(s):
    """exp of a series with zero constant term."""
    if s[0]:
        raise NonUnit("exp needs zero constant term")
    n = s.order
    out = HSeries.const(1, n)
    term = HSeries.const(1, n)
    for k in range(1, n + 1):
        term = term * s * Fraction(1, k)
        out = out + term
    return out


def series_log(s):
    """log of a series with constant term 1."""
    if s[0] != 1:
        raise NonUnit("log needs constant term 1")
    n = s.order
    x = s - 1
    out = HSeries.const(0, n)
    power = HSeries.const(1, n)
    for k in range(1, n + 1):
        power = power * x
        out = out + power * Fraction((-1) ** (k + 1), k)
    return out


def exp_substitute(f, order=DEFAULT_ORDER):
    """f(e^h) truncated after h^order."""
    if order < 0:
        raise ValueError("order must be non-negative")
    coeffs = [Fraction(0)] * (order + 1)
    for e, c in f.terms:
        for k in range(order + 1):
            coeffs[k] += c * Fraction(e ** k, factorial(k))
    return HSeries(coeffs, order)


def is_in_Z(f):
    """Membership in {f in Z[t^+-1] : f(1) = 1, f(t) = f(t^-1)}."""
    return f.is_integral() and f.at_one() == 1 and f.is_symmetric()


def u_basis(f):
    """Coefficients a_0..a_m of a symmetric f written as sum a_j u^j, u = t + t^-1 - 2."""
    if not f.is_symmetric():
        raise NotInZ("u-basis rewrite needs a symmetric polynomial")
    u = LaurentPoly.u()
    out = []
    rest = f
    while rest:
        a = rest.at_one()
        out.append(a)
        rest = (rest - a).exact_div(u)
    return out or [Fraction(0)]


class AlexanderPoly:
    """A normalized Alexander polynomial: an element of Z (see is_in_Z)."""

    __slots__ = ("poly", "u_coeffs")

    def __init__(self, poly):
        if isinstance(poly, str):
            poly = parse_laurent(poly)
        if not is_in_Z(poly):
            raise NotInZ(f"{poly} is not a normalized Alexander polynomial")
        self.poly = poly
        a = u_basis(poly)
        while len(a) > 1 and a[-1] == 0:
            a.pop()
        self.u_coeffs = tuple(a[1:])

    @classmethod
    def from_u(cls, coeffs):
        """1 + sum_j coeffs[j-1] u^j."""
        u = LaurentPoly.u()
        p = LaurentPoly.const(1)
        for j, a in enumerate(coeffs, start=1):
            p = p + (u ** j).scale(Q(a))
        return cls(p)

    @property
    def degree(self):
        return len(self.u_coeffs)

    def series(self, order=DEFAULT_ORDER):
        return exp_substitute(self.poly, order)

    def __eq__(self, other):
        return isinstance(other, AlexanderPoly) and self.poly == other.poly

    def __hash__(self):
        return hash(("A", self.poly))

    def __repr__(self):
        return f"AlexanderPoly({self.poly})"


def deg_Z(f):
    if isinstance(f, LaurentPoly):
        f = AlexanderPoly(f)
    return f.degree


class DeltaFraction:
    """A symbolic label num(t) / Delta(t)^dpow with Delta fixed by context."""

    __slots__ = ("num", "dpow", "_hash")

    def __init__(self, num, dpow=0):
        if isinstance(num, (int, Fraction)):
            num = LaurentPoly.const(num)
        self.num = num
        self.dpow = int(dpow)
        self._hash = None

    def __eq__(self, other):
        return isinstance(other, DeltaFraction) and self.num == other.num and self.dpow == other.dpow

    def __hash__(self):
        if self._hash is None:
            self._hash = hash(("D", self.num, self.dpow))
        return self._hash

    def __mul__(self, other):
        if isinstance(other, DeltaFraction):
            return DeltaFraction(self.num * other.num, self.dpow + other.dpow)
        if isinstance(other, (int, Fraction, LaurentPoly)):
            return DeltaFraction(self.num * other, self.dpow)
        return NotImplemented

    __rmul__ = __mul__

    def __add__(self, other):
        if isinstance(other, (int, Fraction, LaurentPoly)):
            other = DeltaFraction(other)
        if self.dpow != other.dpow:
            raise ValueError("cannot add labels with different Delta powers")
        return DeltaFraction(self.num + other.num, self.dpow)

    def __neg__(self):
        return DeltaFraction(-self.num, self.dpow)

    def __sub__(self, other):
        return self + (-other)

    def inv_t(self):
        return DeltaFraction(self.num.inv_t(), self.dpow)

    def is_one(self):
        return self.dpow == 0 and self.num == 1

    def series(self, order, delta=None):
        s = exp_substitute(self.num, order)
        if self.dpow:
            if delta is None:
                from .errors import MissingDelta

                raise MissingDelta(f"label {self} needs an Alexander polynomial")
            d = delta.poly if isinstance(delta, AlexanderPoly) else delta
            ds = exp_substitute(d, order)
            if self.dpow > 0:
                s = s * series_invert(ds) ** self.dpow
            else:
                s = s * ds ** (-self.dpow)
        return s

    def key(self):
        return ("p", self.dpow, self.num.terms)

    def __repr__(self):
        return f"DeltaFraction({self})"

    def __str__(self):
        if self.dpow == 0:
            return str(self.num)
        if self.dpow < 0:
            k = -self.dpow
            return f"({self.num})*" + ("D" if k == 1 else f"D^{k}")
        den = "D" if self.dpow == 1 else f"D^{self.dpow}"
        return f"({self.num})/{den}"


# --- expression parser -------------------------------------------------

_TOKEN = re.compile(r"\s*(?:(\d+)|([A-Za-z]+)|(\S))")


def _tokenize(text):
    pos = 0
    out = []
    text = text.rstrip()
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if not m:
            raise ParseError(f"unexpected input {text[pos:]!r}", 1, pos + 1)
        col = m.start(m.lastindex) + 1
        if m.group(1):
            out.append(("num", int(m.group(1)), col))
        elif m.group(2):
            out.append(("name", m.group(2), col))
        else:
            out.append(("op", m.group(3), col))
        pos = m.end()
    return out


class _Parser:
    def __init__(self, text, allow_delta):
        self.toks = _tokenize(text)
        self.i = 0
        self.allow_delta = allow_delta
        self.text = text

    def peek(self):
        return self.toks[self.i] if self.i < len(self.toks) else (None, None, len(self.text) + 1)

    def take(self):
        tok = self.peek()
        self.i += 1
        return tok

    def error(self, msg):
        raise ParseError(msg, 1, self.peek()[2])

    def parse(self):
        val = self.expr()
        if self.peek()[0] is not None:
            self.error(f"unexpected token {self.peek()[1]!r}")
        return val

    def expr(self):
        val = self.term()
        while self.peek()[1] in ("+", "-") and self.peek()[0] == "op":
            op = self.take()[1]
            rhs = self.term()
            if val.dpow != rhs.dpow:
                self.error("cannot add terms with different powers of D")
            val = val + rhs if op == "+" else val - rhs
        return val

    def term(self):
        val = self.unary()
        while self.peek()[0] == "op" and self.peek()[1] in ("*", "/"):
            op = self.take()[1]
            rhs = self.unary()
            if op == "*":
                val = val * rhs
            else:
                if rhs.num.is_monomial():
                    (e, c), = rhs.num.terms
                    val = DeltaFraction(val.num * LaurentPoly({-e: 1 / c}), val.dpow - rhs.dpow)
                else:
                    self.error("can only divide by D, constants or monomials in t")
        return val

    def unary(self):
        if self.peek()[0] == "op" and self.peek()[1] == "-":
            self.take()
            return -self.unary()
        if self.peek()[0] == "op" and self.peek()[1] == "+":
            self.take()
            return self.unary()
        return self.power()

    def power(self):
        base = self.primary()
        if self.peek()[0] == "op" and self.peek()[1] == "^":
            self.take()
            sign = 1
            if self.peek()[0] == "op" and self.peek()[1] in "+-":
                sign = -1 if self.take()[1] == "-" else 1
            tok = self.take()
            if tok[0] != "num":
                raise ParseError("expected integer exponent", 1, tok[2])
            n = sign * tok[1]
            if n < 0:
                if not base.num.is_monomial():
                    raise ParseError("negative powers only of monomials", 1, tok[2])
            return DeltaFraction(base.num ** n, base.dpow * n)
        return base

    def primary(self):
        kind, val, col = self.take()
        if kind == "num":
            return DeltaFraction(LaurentPoly.const(val))
        if kind == "name":
            if val == "t":
                return DeltaFraction(LaurentPoly.t())
            if val == "u":
                return DeltaFraction(LaurentPoly.u())
            if val == "v":
                return DeltaFraction(LaurentPoly.v())
            if val in ("D", "Delta") and self.allow_delta:
                return DeltaFraction(LaurentPoly.const(1), -1)
            raise ParseError(f"unknown symbol {val!r}", 1, col)
        if kind == "op" and val == "(":
            inner = self.expr()
            tok = self.take()
            if tok[1] != ")":
                raise ParseError("expected ')'", 1, tok[2])
            return inner
        raise ParseError(f"unexpected {val!r}" if val else "unexpected end of input", 1, col)


def parse_label(text):
    """Parse "num/D^k" style expressions into a DeltaFraction."""
    return _Parser(text, allow_delta=True).parse()


def parse_laurent(text):
    """Parse an expression in t (and the shorthands u, v) into a LaurentPoly."""
    return _Parser(text, allow_delta=False).parse().num
