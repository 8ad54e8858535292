"""The sl2 weight system on open Jacobi diagrams.

Convention: the invariant form is the trace form of the 2-dimensional
representation, B(H,H) = 2, B(E,F) = B(F,E) = 1, and a vertex with darts
(x, y, z) in cyclic order carries f(x, y, z) = B([x, y], z).  Legs live in
the symmetric algebra, whose invariant part is generated by the Casimir
c = H^2/2 + 2EF, so a strut evaluates to c.
"""
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

from .diagrams import Builder, LinearCombo, canonical_form, degree, expand_combo
from .errors import TooLarge, UnexpandedLabel


@dataclass(frozen=True)
class CasimirPoly:
    """sum_k coeffs[k] c^k, with the h-grading of the diagram it came from."""

    coeffs: tuple
    grading: int

    @classmethod
    def make(cls, coeffs, grading):
        c = list(coeffs)
        while c and c[-1] == 0:
            c.pop()
        return cls(tuple(Fraction(x) for x in c), grading)

    def is_zero(self):
        return not self.coeffs

    def __add__(self, other):
        if self.is_zero():
            return other
        if other.is_zero():
            return self
        if self.grading != other.grading:
            raise ValueError("adding weights of different gradings")
        n = max(len(self.coeffs), len(other.coeffs))
        a = self.coeffs + (0,) * (n - len(self.coeffs))
        b = other.coeffs + (0,) * (n - len(other.coeffs))
        return CasimirPoly.make([x + y for x, y in zip(a, b)], self.grading)

    def scale(self, k):
        return CasimirPoly.make([k * x for x in self.coeffs], self.grading)

    def ratio(self, other):
        """The constant q with self = q * other, or None."""
        if other.is_zero():
            return None
        k = max(i for i, x in enumerate(other.coeffs) if x)
        if len(self.coeffs) <= k:
            return None if not self.is_zero() else Fraction(0)
        q = self.coeffs[k] / other.coeffs[k]
        return q if self == other.scale(q) else None

    def to_json(self):
        return {"coeffs": [str(x) for x in self.coeffs], "grading": self.grading}

    def __str__(self):
        if self.is_zero():
            return "0"
        parts = []
        for k, x in enumerate(self.coeffs):
            if x:
                parts.append(f"{x}" + ("" if k == 0 else "*c" if k == 1 else f"*c^{k}"))
        return " + ".join(parts)


def _check(D):
    if D.labels:
        raise UnexpandedLabel("expand labels before taking the sl2 weight")
    if D.has_skeleton():
        raise ValueError("sl2 weight is defined here on diagrams without skeleton")


def sl2_weight(D):
    """Weight by recursive contraction of internal edges."""
    _check(D)
    C, s = canonical_form(D)
    if not s:
        return CasimirPoly.make([], degree(D))
    return CasimirPoly.make(_weight(C), degree(D)).scale(s)


def _splice(D, removed, bridge):
    """Drop the darts in removed, splicing through bridge; returns (diagram, circles)."""
    b = Builder()
    m = {}
    for v in D.tri:
        if v[0] in removed:
            continue
        m.update(zip(v, b.vertex()))
    for d, mark in D.legs:
        m[d] = b.leg(mark)
    seen = set()
    for d in m:
        if d in seen:
            continue
        x = D.partner[d]
        while x in bridge:
            seen.add(x)
            y = bridge[x]
            seen.add(y)
            x = D.partner[y]
        seen.add(d)
        seen.add(x)
        b.join(m[d], m[x])
    circles = 0
    for a in bridge:
        if a in seen:
            continue
        circles += 1
        x = a
        while x not in seen:
            seen.add(x)
            y = bridge[x]
            seen.add(y)
            x = D.partner[y]
    return b.build(), circles


def _rot(v, d, pos):
    i = v.index(d)
    return tuple(v[(i - pos + k) % 3] for k in range(3))


@lru_cache(maxsize=None)
def _weight(D):
    node = D.node_of()
    if not D.tri:
        return _power(len(D.legs) // 2)
    pick = None
    for i, v in enumerate(D.tri):
        targets = [node[D.partner[d]] for d in v]
        if any(t == ("t", i) for t in targets):
            return ()
        if sum(t[0] == "u" for t in targets) >= 2:
            return ()
        for d, t in zip(v, targets):
            if t[0] == "t" and pick is None:
                pick = (i, d, t[1])
    if pick is None:
        return ()
    i, e, j = pick
    a, b, _ = _rot(D.tri[i], e, 2)
    e2, c, d = _rot(D.tri[j], D.partner[e], 0)
    removed = set(D.tri[i]) | set(D.tri[j])
    out = {}
    for coef, pairs in ((2, ((a, d), (b, c))), (-2, ((a, c), (b, d)))):
        bridge = {}
        for x, y in pairs:
            bridge[x] = y
            bridge[y] = x
        E, circles = _splice(D, removed, bridge)
        C, s = canonical_form(E)
        if not s:
            continue
        w = _weight(C)
        k = coef * s * 3 ** circles
        for p, x in enumerate(w):
            out[p] = out.get(p, 0) + k * x
    n = max(out, default=-1) + 1
    res = [out.get(p, 0) for p in range(n)]
    while res and res[-1] == 0:
        res.pop()
    return tuple(res)


def _power(k):
    return (0,) * k + (1,)


# --- tensor contraction oracle ------------------------------------------------------

_E, _F, _H = 0, 1, 2
# bracket table: [x, y] as coefficient vectors in (E, F, H)
_BR = {
    (_H, _E): (2, 0, 0), (_E, _H): (-2, 0, 0),
    (_H, _F): (0, -2, 0), (_F, _H): (0, 2, 0),
    (_E, _F): (0, 0, 1), (_F, _E): (0, 0, -1),
}
_FORM = ((0, 1, 0), (1, 0, 0), (0, 0, 2))
# inverse form, used to contract the two ends of an edge
_INV = ((0, 1, 0), (1, 0, 0), (0, 0, Fraction(1, 2)))


def _structure():
    f = {}
    for x in range(3):
        for y in range(3):
            br = _BR.get((x, y), (0, 0, 0))
            for z in range(3):
                val = sum(br[k] * _FORM[k][z] for k in range(3))
                if val:
                    f[(x, y, z)] = val
    return f


_STRUCT = _structure()


def sl2_brute(D, max_vertices=8):
    """Direct contraction with explicit structure constants.

    Legs are evaluated at two points of sl2 (as commuting variables) and the
    result is matched against a multiple of c^(legs/2).
    """
    _check(D)
    if len(D.tri) > max_vertices:
        raise TooLarge(f"brute force contraction limited to {max_vertices} vertices")
    nlegs = len(D.legs)
    if nlegs % 2:
        return CasimirPoly.make([], degree(D))
    k = nlegs // 2
    # points (E, F, H) with c = H^2/2 + 2EF
    values = []
    for pt in ((0, 0, 1), (1, 1, 0)):
        cval = Fraction(pt[2] ** 2, 2) + 2 * pt[0] * pt[1]
        values.append((_contract(D, pt), cval ** k))
    (v1, c1), (v2, c2) = values
    lam = v1 / c1
    if lam * c2 != v2:
        raise ArithmeticError("contraction is not a multiple of a Casimir power")
    return CasimirPoly.make(list(_power(k)[:-1]) + [lam], degree(D))


def _contract(D, point):
    """Sum over basis indices on all darts; edges carry the inverse form."""
    n = len(D.partner)
    leg_of = dict(D.legs)
    edges = [(d, p) for d, p in enumerate(D.partner) if d < p]
    vert_of = {}
    for i, v in enumerate(D.tri):
        for d in v:
            vert_of[d] = i
    # assign an index per edge end; sum edge by edge with vertex factors
    # evaluated once all three darts are fixed (simple backtracking)
    order = edges
    idx = [None] * n
    total = Fraction(0)

    def vertex_value(i):
        a, b, c = D.tri[i]
        return _STRUCT.get((idx[a], idx[b], idx[c]), 0)

    def rec(k, acc):
        nonlocal total
        if k == len(order):
            total += acc
            return
        d, p = order[k]
        for x in range(3):
            for y in range(3):
                w = _INV[x][y]
                if not w:
                    continue
                idx[d], idx[p] = x, y
                val = acc * w
                ok = True
                for e in (d, p):
                    if e in vert_of:
                        i = vert_of[e]
                        if all(idx[z] is not None for z in D.tri[i]):
                            fv = vertex_value(i)
                            if not fv:
                                ok = False
                                break
                            val *= fv
                if ok:
                    for e in (d, p):
                        if e in leg_of:
                            val *= point[idx[e]]
                    if val:
                        rec(k + 1, val)
                idx[d], idx[p] = None, None

    rec(0, Fraction(1))
    return total


# --- certificates and the clasper family -----------------------------------------------

def combo_weight(c, order=None):
    """sl2 weight of a combo, expanding labels first if needed."""
    if any(D.labels for D in c):
        if order is None:
            order = max((degree(D) for D in c), default=0) + 6
        c = expand_combo(c, order)
    total = CasimirPoly.make([], 0)
    for D, x in c.items():
        w = sl2_weight(D).scale(x)
        if w.is_zero():
            continue
        total = w if total.is_zero() else total + w
    return total


def nonvanishing_certificate(c):
    """True iff the sl2 image is nonzero, which certifies c != 0."""
    if not isinstance(c, LinearCombo):
        c = LinearCombo.of(c)
    if not c:
        return False
    return not combo_weight(c).is_zero()


def family_diagram(n, d, mark=("f", "h")):
    """D_{n,d}: the wheel with 2d spokes whose rim edge from the first spoke
    vertex to the second carries n - 1 bubbles in a row."""
    if n < 1 or d < 1:
        raise ValueError("need n >= 1 and d >= 1")
    b = Builder()
    k = 2 * d
    vs = [b.vertex() for _ in range(k)]
    for i in range(k):
        b.join(vs[i][2], b.leg(mark))
    for i in range(1, k):
        b.join(vs[i][1], vs[(i + 1) % k][0])
    prev = vs[0][1]
    for _ in range(n - 1):
        u, w = b.vertex(), b.vertex()
        b.join(prev, u[0])
        b.join(u[1], w[1])
        b.join(u[2], w[0])
        prev = w[2]
    b.join(prev, vs[1 % k][0])
    return b.build()


def family_ratio(n, d):
    """sl2_weight(D_{n,d}) / (4^(n-1) * 2 * (2c)^d)."""
    ref = CasimirPoly.make(list(_power(d)[:-1]) + [Fraction(4 ** (n - 1) * 2 * 2 ** d)], 0)
    w = sl2_weight(family_diagram(n, d))
    return w.ratio(CasimirPoly(ref.coeffs, w.grading)), w
