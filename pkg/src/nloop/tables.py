"""Concrete two- and three-loop computations for genus 1 knots and the
dimension bounds."""
import json
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from importlib import resources

from .algebra import AlexanderPoly, LaurentPoly
from .diagrams import LinearCombo, canonical_form, expand_combo
from .errors import TooLarge
from .formats import parse_diagram
from .spaces import Basis, SpaceId, connected_shapes

SHAPE_LOOP_LIMIT = 4


def _load(name):
    with resources.files("nloop.data").joinpath(name).open() as fh:
        return json.load(fh)


@lru_cache(maxsize=None)
def theta_shapes():
    data = _load("two_loop_thetas.json")
    return {k: parse_diagram(v) for k, v in data.items() if k != "note"}


def genus1_delta(a):
    t = LaurentPoly.t()
    return AlexanderPoly(LaurentPoly.const(1) + (t + t.inv_t() - 2).scale(a))


def _require_int(a):
    if isinstance(a, Fraction) and a.denominator == 1:
        a = int(a)
    if not isinstance(a, int):
        raise ValueError("a must be an integer")
    return a


@lru_cache(maxsize=None)
def _two_loop_basis(N):
    return Basis(SpaceId("Bn", N, loops=2))


@lru_cache(maxsize=None)
def _reference_coords(N):
    """Coordinates of the degree 3 and degree 5 reference diagrams."""
    B = _two_loop_basis(N)
    sh = theta_shapes()
    return B.coords(LinearCombo.of(sh["basis_deg3"])), B.coords(LinearCombo.of(sh["basis_deg5"]))


def reference_coefficients(c, a, N=5):
    """(x3, x5) with c = x3 * P3 + x5 * P5 + (higher degree)."""
    B = _two_loop_basis(N)
    v = B.coords(expand_combo(c, N, genus1_delta(a)))
    r3, r5 = _reference_coords(N)
    out = []
    for r in (r3, r5):
        k = next(i for i, x in enumerate(r) if x)
        x = v[k] / r[k]
        out.append(x)
    # the two references span the degree 3 and 5 parts; check nothing is left
    resid = [vi - out[0] * a3 - out[1] * a5 for vi, a3, a5 in zip(v, r3, r5)]
    if any(resid[i] for i, D in enumerate(B.basis) if _deg(D) in (3, 5)):
        raise ArithmeticError("expansion leaves the span of the reference diagrams")
    return tuple(out)


def _deg(D):
    from .diagrams import degree

    return degree(D)


@dataclass
class TwoLoopGenus1:
    a: int
    theta1: LinearCombo
    theta2: LinearCombo
    coeffs1: tuple
    coeffs2: tuple

    @property
    def determinant(self):
        (x1, y1), (x2, y2) = self.coeffs1, self.coeffs2
        return x1 * y2 - x2 * y1

    def to_json(self):
        return {
            "a": self.a,
            "theta1": [str(x) for x in self.coeffs1],
            "theta2": [str(x) for x in self.coeffs2],
            "determinant": str(self.determinant),
        }


def build_thetas(a, N=5):
    return _build_thetas(_require_int(a), N)


@lru_cache(maxsize=None)
def _build_thetas(a, N):
    sh = theta_shapes()
    th1 = LinearCombo.of(sh["theta1"])
    th2 = LinearCombo.of(sh["theta2_main"]) + LinearCombo.of(sh["theta2_correction"], Fraction(4 * a - 1, 3))
    return TwoLoopGenus1(a, th1, th2, reference_coefficients(th1, a, N), reference_coefficients(th2, a, N))


def solve2(m, rhs):
    """Cramer's rule for a 2x2 rational system."""
    (p, q), (r, s) = m
    det = p * s - q * r
    if det == 0:
        raise ZeroDivisionError("singular 2x2 system")
    x, y = rhs
    return (x * s - q * y) / det, (p * y - r * x) / det


def closed_form_pq(a, b1, b2):
    a = _require_int(a)
    assert 16 * a - 4 != 0 and 32 * a - 8 != 0
    b1, b2 = Fraction(b1), Fraction(b2)
    return ((28 * a - 5) * b1 + 6 * b2) / (16 * a - 4), ((12 * a - 1) * b1 + 6 * b2) / (32 * a - 8)


@dataclass
class TwoLoopSolution:
    a: int
    p: Fraction
    q: Fraction
    expansion: LinearCombo
    closed_form_ok: bool

    def three_term(self):
        """Coefficients of the three theta diagrams."""
        return (self.p, self.q, self.q * Fraction(4 * self.a - 1, 3))


def solve_two_loop(a, b1, b2):
    """p, q with Z2 = p theta1 + q theta2, given the degree 3 and 5 coefficients."""
    T = build_thetas(a)
    (x1, y1), (x2, y2) = T.coeffs1, T.coeffs2
    p, q = solve2(((x1, x2), (y1, y2)), (Fraction(b1), Fraction(b2)))
    expansion = T.theta1 * p + T.theta2 * q
    return TwoLoopSolution(T.a, p, q, expansion, (p, q) == closed_form_pq(a, b1, b2))


@dataclass
class KExamples:
    a: int
    pairs: tuple
    det01: Fraction
    det12: Fraction

    @property
    def case_ok(self):
        if self.a in (0, -1):
            return self.det01 == 0 and self.det12 != 0
        return self.det01 != 0


def _det(u, v):
    return u[0] * v[1] - u[1] * v[0]


def k_examples(a):
    a = _require_int(a)
    A = Fraction(a * (a + 1))
    pairs = ((-A / 16, A / 32), (-A / 16 + Fraction(1, 2), A / 32), (-A / 16, A / 32 - Fraction(3, 4)))
    return KExamples(a, pairs, _det(pairs[0], pairs[1]), _det(pairs[1], pairs[2]))


@dataclass(frozen=True)
class ThetaMN:
    n: int
    m: int

    def __post_init__(self):
        if not (self.n >= 1 and 0 <= 2 * self.m <= self.n):
            raise ValueError(f"bad index pair (n, m) = ({self.n}, {self.m})")


def theta_mn_set(g):
    if g < 1:
        raise ValueError("g >= 1 required")
    return [ThetaMN(n, m) for n in range(1, 2 * g + 1) for m in range(0, n // 2 + 1)]


def theta_mn_count(g):
    return len(theta_mn_set(g))


@lru_cache(maxsize=None)
def xset_3loop():
    return tuple(parse_diagram(s) for s in _load("xset_3loop.json")["diagrams"])


def xset_codes():
    return [canonical_form(D)[0].key() for D in xset_3loop()]


def legless_shape_count(n):
    """m_n: connected trivalent n-loop graphs without legs, up to isomorphism."""
    if n > SHAPE_LOOP_LIMIT:
        raise TooLarge(f"shape enumeration is limited to {SHAPE_LOOP_LIMIT} loops")
    return len(connected_shapes(n, 0))


def crude_bound(n, g):
    if n < 2 or g < 1:
        raise ValueError("need n >= 2 and g >= 1")
    return legless_shape_count(n) * (2 * g + 5) ** (3 * (n - 1))
