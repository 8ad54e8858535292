"""Equivariant linking matrices of surgery presentations and their inverses.

Matrix indices in the public functions that mirror the l^{ij} notation
(cofactor, linv, appendix_b_certificate) are 1-based.
"""
import random
from dataclasses import dataclass
from fractions import Fraction

from .algebra import AlexanderPoly, LaurentPoly, exp_substitute, is_in_Z, series_invert
from .errors import NormalizationFailure, ShapeMismatch, Singular

ONE = LaurentPoly.const(1)
ZERO = LaurentPoly()


@dataclass(frozen=True)
class TangleLinkingData:
    U: tuple
    V: tuple
    W: tuple

    def __post_init__(self):
        g = len(self.U)
        for name, block in (("U", self.U), ("V", self.V), ("W", self.W)):
            if len(block) != g or any(len(row) != g for row in block):
                raise ShapeMismatch(f"block {name} is not {g}x{g}")
        for name, block in (("U", self.U), ("V", self.V)):
            for i in range(g):
                for j in range(g):
                    if block[i][j] != block[j][i]:
                        raise ShapeMismatch(f"block {name} is not symmetric")

    @classmethod
    def of(cls, U, V, W):
        conv = lambda B: tuple(tuple(int(x) for x in row) for row in B)
        return cls(conv(U), conv(V), conv(W))

    @property
    def g(self):
        return len(self.U)

    def to_json(self):
        return {"g": self.g, "U": [list(r) for r in self.U], "V": [list(r) for r in self.V],
                "W": [list(r) for r in self.W]}


def random_tangle_data(g, rng, lo=-3, hi=3):
    U = [[0] * g for _ in range(g)]
    V = [[0] * g for _ in range(g)]
    for i in range(g):
        for j in range(i, g):
            U[i][j] = U[j][i] = rng.randint(lo, hi)
            V[i][j] = V[j][i] = rng.randint(lo, hi)
    W = [[rng.randint(lo, hi) for _ in range(g)] for _ in range(g)]
    return TangleLinkingData.of(U, V, W)


def sample_tangle_data(g, count, seed):
    rng = random.Random(seed)
    return [random_tangle_data(g, rng) for _ in range(count)]


class EqLinkingMatrix:
    """Square matrix over Q[t, t^-1] with l_ji(t) = l_ij(t^-1)."""

    def __init__(self, entries, g=None):
        self.rows = tuple(tuple(e if isinstance(e, LaurentPoly) else LaurentPoly.const(e) for e in row)
                          for row in entries)
        n = len(self.rows)
        if any(len(r) != n for r in self.rows):
            raise ShapeMismatch("matrix is not square")
        self.g = g
        if not self.is_equivariant():
            raise ShapeMismatch("matrix violates l_ji(t) = l_ij(t^-1)")

    @property
    def size(self):
        return len(self.rows)

    def __getitem__(self, ij):
        i, j = ij
        return self.rows[i][j]

    def is_equivariant(self):
        n = self.size
        return all(self.rows[j][i] == self.rows[i][j].inv_t() for i in range(n) for j in range(n))

    def to_json(self):
        return [[e.to_json() for e in row] for row in self.rows]


def build_surgery_matrix(d):
    """The 4g x 4g block matrix
    [[O, (t^-1 - 1)I, I, O], [(t - 1)I, O, O, I], [I, O, U, W], [O, I, W^T, V]].
    """
    g = d.g
    n = 4 * g
    t = LaurentPoly.t()
    a = t.inv_t() - 1
    b = t - 1
    M = [[ZERO] * n for _ in range(n)]
    for i in range(g):
        M[i][g + i] = a
        M[i][2 * g + i] = ONE
        M[g + i][i] = b
        M[g + i][3 * g + i] = ONE
        M[2 * g + i][i] = ONE
        M[3 * g + i][g + i] = ONE
        for j in range(g):
            M[2 * g + i][2 * g + j] = LaurentPoly.const(d.U[i][j])
            M[2 * g + i][3 * g + j] = LaurentPoly.const(d.W[i][j])
            M[3 * g + i][2 * g + j] = LaurentPoly.const(d.W[j][i])
            M[3 * g + i][3 * g + j] = LaurentPoly.const(d.V[i][j])
    return EqLinkingMatrix(M, g)


# --- fraction-free elimination ---------------------------------------------

def _rows(M):
    return [list(r) for r in (M.rows if isinstance(M, EqLinkingMatrix) else M)]


def bareiss_det(rows):
    """Determinant over the Laurent ring by fraction-free elimination."""
    A = [list(r) for r in rows]
    n = len(A)
    if n == 0:
        return ONE
    sign = 1
    prev = ONE
    for k in range(n - 1):
        piv = next((r for r in range(k, n) if A[r][k]), None)
        if piv is None:
            return ZERO
        if piv != k:
            A[k], A[piv] = A[piv], A[k]
            sign = -sign
        for i in range(k + 1, n):
            for j in range(k + 1, n):
                A[i][j] = (A[k][k] * A[i][j] - A[i][k] * A[k][j]).exact_div(prev)
            A[i][k] = ZERO
        prev = A[k][k]
    det = A[n - 1][n - 1]
    return det if sign > 0 else -det


def adjugate_solve(rows):
    """Return (d, R) with rows * R = d * I, by fraction-free Gauss-Jordan."""
    n = len(rows)
    A = [list(r) + [ONE if i == j else ZERO for j in range(n)] for i, r in enumerate(rows)]
    prev = ONE
    for k in range(n):
        piv = next((r for r in range(k, n) if A[r][k]), None)
        if piv is None:
            raise Singular("matrix is singular over the Laurent fraction field")
        if piv != k:
            A[k], A[piv] = A[piv], A[k]
        pk = A[k][k]
        for i in range(n):
            if i == k:
                continue
            aik = A[i][k]
            A[i] = [(pk * A[i][j] - aik * A[k][j]).exact_div(prev) for j in range(2 * n)]
        prev = pk
    # all diagonal entries now equal the last pivot (up to row-scaling history)
    d = A[n - 1][n - 1]
    R = []
    for i in range(n):
        di = A[i][i]
        if di != d:
            # rows finished early carry an older pivot; rescale exactly
            R.append([(x * d).exact_div(di) for x in A[i][n:]])
        else:
            R.append(A[i][n:])
    return d, R


def normalize_delta(d):
    """Return (eps, k, Delta) with d = eps * t^k * Delta and Delta in Z."""
    if not d:
        raise Singular("determinant is zero")
    lo, hi = d.min_exp, d.max_exp
    if (lo + hi) % 2:
        raise NormalizationFailure("determinant is not symmetric up to a power of t")
    k = (lo + hi) // 2
    shifted = d.shift(-k)
    v = shifted.at_one()
    if v == 0:
        raise NormalizationFailure("determinant vanishes at t = 1")
    eps = 1 if v > 0 else -1
    delta = shifted.scale(eps)
    if not is_in_Z(delta):
        raise NormalizationFailure(f"{delta} does not normalize into Z")
    return eps, k, delta


def invert_over_delta(M):
    """(Delta, Q) with M^-1 = Q / Delta exactly."""
    d, R = adjugate_solve(_rows(M))
    eps, k, delta = normalize_delta(d)
    Q = [[x.shift(-k).scale(eps) for x in row] for row in R]
    return AlexanderPoly(delta), Q


def q_support(Q):
    lo = min((x.min_exp for row in Q for x in row if x), default=0)
    hi = max((x.max_exp for row in Q for x in row if x), default=0)
    return lo, hi


def check_inverse(M, delta, Q):
    """M * Q == Delta * I, exactly."""
    rows = _rows(M)
    n = len(rows)
    d = delta.poly if isinstance(delta, AlexanderPoly) else delta
    for i in range(n):
        for j in range(n):
            s = ZERO
            for k in range(n):
                if rows[i][k] and Q[k][j]:
                    s = s + rows[i][k] * Q[k][j]
            if s != (d if i == j else ZERO):
                return False
    return True


# --- Laurent fractions -------------------------------------------------------------

class LaurentFraction:
    """num / den with Laurent polynomial numerator and denominator."""

    __slots__ = ("num", "den")

    def __init__(self, num, den=ONE):
        if not den:
            raise Singular("zero denominator")
        self.num = num
        self.den = den

    def __eq__(self, other):
        if isinstance(other, LaurentPoly):
            other = LaurentFraction(other)
        return isinstance(other, LaurentFraction) and self.num * other.den == other.num * self.den

    def __hash__(self):
        return hash("LF")

    def __mul__(self, other):
        if isinstance(other, LaurentPoly):
            return LaurentFraction(self.num * other, self.den)
        return LaurentFraction(self.num * other.num, self.den * other.den)

    __rmul__ = __mul__

    def __neg__(self):
        return LaurentFraction(-self.num, self.den)

    def inv_t(self):
        return LaurentFraction(self.num.inv_t(), self.den.inv_t())

    def at_one(self):
        d = self.den.at_one()
        if not d:
            raise Singular("denominator vanishes at t = 1")
        return self.num.at_one() / d

    def series(self, order):
        """f(e^h) to the given order; needs den(1) != 0."""
        return exp_substitute(self.num, order) * series_invert(exp_substitute(self.den, order))

    def __repr__(self):
        return f"LaurentFraction(({self.num}) / ({self.den}))"


def _minor(rows, i, j):
    return [r[:j] + r[j + 1:] for k, r in enumerate(rows) if k != i]


def cofactor(M, i, j):
    """C_ij / det M as a fraction; equals l^{j,i}.  Indices are 1-based."""
    rows = _rows(M)
    det = bareiss_det(rows)
    if not det:
        raise Singular("matrix is singular")
    c = bareiss_det(_minor(rows, i - 1, j - 1))
    if (i + j) % 2:
        c = -c
    return LaurentFraction(c, det)


def linv(delta, Q, i, j):
    """l^{ij} = Q[i][j] / Delta as a fraction, 1-based."""
    d = delta.poly if isinstance(delta, AlexanderPoly) else delta
    return LaurentFraction(Q[i - 1][j - 1], d)


@dataclass
class BCertificate:
    lgg_identity: bool
    value_at_1: Fraction
    r: Fraction
    r_half_integer: bool
    series_3g1_2g1: tuple
    series_2g1_3g1: tuple
    leading_ok: bool
    r_equal: bool

    @property
    def ok(self):
        return (self.lgg_identity and self.value_at_1 == 1 and self.r_half_integer
                and self.leading_ok and self.r_equal)

    def to_json(self):
        from .algebra import qstr

        return {
            "lgg_identity": self.lgg_identity,
            "value_at_1": qstr(self.value_at_1),
            "r": qstr(self.r),
            "r_half_integer": self.r_half_integer,
            "series_l_3g1_2g1": [qstr(x) for x in self.series_3g1_2g1],
            "series_l_2g1_3g1": [qstr(x) for x in self.series_2g1_3g1],
            "leading_ok": self.leading_ok,
            "r_equal": self.r_equal,
        }


def is_half_integer(x):
    x = Fraction(x)
    return x.denominator == 2


def appendix_b_certificate(M, inverse=None):
    g = M.g
    delta, Q = inverse if inverse is not None else invert_over_delta(M)
    t = LaurentPoly.t()
    a, b, c = 3 * g + 1, 2 * g + 1, 1
    q_ab = Q[a - 1][b - 1]
    q_cb = Q[c - 1][b - 1]
    lgg = q_ab == -(t - 1) * q_cb
    value = q_cb.at_one() / delta.poly.at_one()
    s1 = linv(delta, Q, a, b).series(2)
    s2 = linv(delta, Q, b, a).series(2)
    r = s1[2]
    return BCertificate(
        lgg_identity=lgg,
        value_at_1=value,
        r=r,
        r_half_integer=is_half_integer(r),
        series_3g1_2g1=tuple(s1.coeffs),
        series_2g1_3g1=tuple(s2.coeffs),
        leading_ok=(s1[0] == 0 and s1[1] == -1 and s2[0] == 0 and s2[1] == 1),
        r_equal=(s2[2] == r),
    )


def appendixB_certificate(M):
    return appendix_b_certificate(M)


def linv_series(delta, Q, order):
    """The matrix of series l^{ij}(e^h), 0-based."""
    dinv = series_invert(exp_substitute(delta.poly, order))
    return [[exp_substitute(q, order) * dinv for q in row] for row in Q]


def signature_counts(M):
    """(positive, negative) inertia of the symmetric rational matrix M(1)."""
    A = [[x.at_one() for x in row] for row in _rows(M)]
    n = len(A)
    pos = neg = 0
    while n:
        k = next((i for i in range(n) if A[i][i]), None)
        if k is None:
            pair = next(((i, j) for i in range(n) for j in range(n) if A[i][j]), None)
            if pair is None:
                break
            i, j = pair
            # replace row/column i by i + j to create a nonzero diagonal entry
            for c in range(n):
                A[i][c] += A[j][c]
            for r in range(n):
                A[r][i] += A[r][j]
            k = i
        p = A[k][k]
        if p > 0:
            pos += 1
        else:
            neg += 1
        rest = [i for i in range(n) if i != k]
        A = [[A[i][j] - A[i][k] * A[k][j] / p for j in rest] for i in rest]
        n -= 1
    return pos, neg
