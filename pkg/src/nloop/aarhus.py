"""Gluing pairings, the Gaussian strut exponential, the rational Aarhus
integral, unknot normalization and the clasper difference pipeline."""
import json
from dataclasses import dataclass
from fractions import Fraction
from importlib import resources
from itertools import permutations, product

from .algebra import DEFAULT_ORDER, DeltaFraction, HSeries, series_log
from .diagrams import (
    Builder,
    Diagram,
    LinearCombo,
    copy_into,
    degree,
    empty_diagram,
    expand_labels,
    insert_legs,
    is_connected,
    label_inverse,
    label_mul,
    loop_number,
    product_combo,
)
from .errors import InsufficientNu, NonUnitConstant, PPartViolation, UnsupportedLabel
from .linking import appendix_b_certificate, invert_over_delta, linv_series


def xmark(i):
    """Mark of the i-th surgery component (1-based)."""
    return ("f", f"x{i}")


H = ("f", "h")


# --- gluing -----------------------------------------------------------------

class _LabelContext:
    def __init__(self, order=None, delta=None):
        self.order = order
        self.delta = delta

    def mul(self, a, b):
        if a is None or b is None or type(a) is type(b):
            return label_mul(a, b)
        if self.order is None:
            raise UnsupportedLabel("mixing symbolic and series labels needs a truncation order")
        if isinstance(a, DeltaFraction):
            a = a.series(self.order, self.delta)
        if isinstance(b, DeltaFraction):
            b = b.series(self.order, self.delta)
        return label_mul(a, b)


def glue(D, pairs, ctx=None):
    """Remove paired legs and splice their edges.

    pairs: list of (a, b, label) with legs a, b of D; label (possibly None)
    sits on the bridge from a to b and is read from a.
    """
    ctx = ctx or _LabelContext()
    bridge = {}
    for a, b, lab in pairs:
        bridge[a] = (b, lab)
        bridge[b] = (a, label_inverse(lab) if lab is not None else None)
    b_ = Builder()
    m = {}
    for v in D.tri:
        m.update(zip(v, b_.vertex()))
    for d, mark in D.legs:
        if d not in bridge:
            m[d] = b_.leg(mark)
    visited = set()
    for d in range(len(D.partner)):
        if d in bridge or d in visited:
            continue
        lab = D.label_from(d)
        x = D.partner[d]
        while x in bridge:
            visited.add(x)
            y, bl = bridge[x]
            visited.add(y)
            lab = ctx.mul(lab, bl)
            lab = ctx.mul(lab, D.label_from(y))
            x = D.partner[y]
        visited.add(d)
        visited.add(x)
        b_.join(m[d], m[x])
        if lab is not None:
            b_.labels[m[d]] = lab
    if any(a not in visited for a in bridge):
        raise PPartViolation("gluing closes a circle with no vertices")
    return b_.build()


def _legs_by_mark(D, marks):
    out = {x: [] for x in marks}
    for d, m in D.legs:
        if m in out:
            out[m].append(d)
    return out


def pair_diagrams(D1, D2, X, ctx=None):
    """All ways of gluing the X-marked legs of D1 to those of D2."""
    X = [x if isinstance(x, tuple) else ("f", x) for x in X]
    l1 = _legs_by_mark(D1, X)
    l2 = _legs_by_mark(D2, X)
    if any(len(l1[x]) != len(l2[x]) for x in X):
        return LinearCombo()
    b = Builder()
    m1 = copy_into(b, D1)
    m2 = copy_into(b, D2)
    U = b.build()
    out = LinearCombo()
    choices = [list(permutations(l2[x])) for x in X]
    for perms in product(*choices):
        pairs = []
        for x, perm in zip(X, perms):
            for a, c in zip(l1[x], perm):
                pairs.append((m1[a], m2[c], None))
        out._add(glue(U, pairs, ctx), 1)
    return out


def pair(C1, C2, X, order=None, delta=None):
    """Bilinear gluing pairing, by enumerating all per-label bijections."""
    ctx = _LabelContext(order, delta)
    out = LinearCombo()
    for D1, c1 in C1.items():
        for D2, c2 in C2.items():
            for E, c in pair_diagrams(D1, D2, X, ctx).items():
                out._add(E, c1 * c2 * c, canonical=True)
    return out


# --- Gaussian part --------------------------------------------------------------

class GaussianPart:
    """Strut series s[i][j] = l^{ij}(e^h) for marks x1..xn; the Gaussian is
    exp(-1/2 sum_ij strut(x_i, x_j; s_ij)) with the label read from x_i."""

    def __init__(self, series, marks=None):
        n = len(series)
        self.series = series
        self.marks = tuple(marks) if marks is not None else tuple(xmark(i + 1) for i in range(n))
        self.index = {m: i for i, m in enumerate(self.marks)}
        self.order = series[0][0].order if n else DEFAULT_ORDER
        for i in range(n):
            for j in range(n):
                if series[j][i] != series[i][j].negate_h():
                    raise ValueError("Gaussian part is not equivariant")

    @classmethod
    def from_inverse(cls, delta, Q, order):
        return cls(linv_series(delta, Q, order))

    @classmethod
    def from_matrix(cls, M, order):
        delta, Q = invert_over_delta(M)
        return cls.from_inverse(delta, Q, order)

    def strut(self, i, j):
        b = Builder()
        a = b.leg(self.marks[i])
        c = b.leg(self.marks[j])
        b.join(a, c, self.series[i][j])
        return b.build()

    def exponent(self):
        """-1/2 sum_ij strut_ij as a combo."""
        out = LinearCombo()
        n = len(self.marks)
        for i in range(n):
            for j in range(n):
                out._add(self.strut(i, j), Fraction(-1, 2))
        return out

    def exponential(self, max_struts):
        return exp_combo(self.exponent(), max_struts)


def perfect_matchings(items):
    if not items:
        yield []
        return
    a = items[0]
    for k in range(1, len(items)):
        rest = items[1:k] + items[k + 1:]
        for m in perfect_matchings(rest):
            yield [(a, items[k])] + m


def wick_pair(G, P, delta=None):
    """<exp(-1/2 sum strut_ij l^{ij}), P> by summing over perfect matchings of
    P's X-legs; each matched pair (a, b) becomes an edge with -l^{ab}."""
    ctx = _LabelContext(G.order, delta)
    out = LinearCombo()
    for D, c in P.items():
        legs = [d for d, m in D.legs if m in G.index]
        if len(legs) % 2:
            continue
        mark = dict(D.legs)
        for matching in perfect_matchings(legs):
            pairs = []
            for a, b in matching:
                i, j = G.index[mark[a]], G.index[mark[b]]
                pairs.append((a, b, G.series[i][j]))
            sign = -1 if len(matching) % 2 else 1
            out._add(glue(D, pairs, ctx), c * sign)
    return out


def brute_gaussian_pair(G, P, delta=None):
    """The same pairing through the explicit exponential and all bijections."""
    out = LinearCombo()
    X = list(G.marks)
    for D, c in P.items():
        legs = [d for d, m in D.legs if m in G.index]
        if len(legs) % 2:
            continue
        k = len(legs) // 2
        E = exp_combo(G.exponent(), k).filter(lambda S: len(S.legs) == 2 * k)
        out = out + pair(E, LinearCombo.of(D, c), X, G.order, delta)
    return out


def aarhus_integral(P, G, N, delta=None):
    """Pair P against the Gaussian, then expand all labels up to degree N."""
    glued = wick_pair(G, P, delta)
    out = LinearCombo()
    for D, c in glued.items():
        for E, x in expand_labels(D, N, delta).items():
            out._add(E, c * x, canonical=True)
    return out


# --- exp / log in the disjoint-union algebra ---------------------------------------

def exp_combo(c, max_power, max_degree=None):
    """sum_{k <= max_power} c^k / k!."""
    out = LinearCombo.one()
    term = LinearCombo.one()
    for k in range(1, max_power + 1):
        term = product_combo(term, c, max_degree) * Fraction(1, k)
        if not term:
            break
        out = out + term
    return out


def log_combo(c, N):
    """Group-like logarithm, truncated at degree N."""
    one = empty_diagram()
    if c.terms.get(one, 0) != 1:
        raise NonUnitConstant("logarithm needs constant term 1")
    x = c - LinearCombo.one()
    x = x.truncate(N)
    out = LinearCombo()
    power = LinearCombo.one()
    for k in range(1, N + 1):
        power = product_combo(power, x, N)
        if not power:
            break
        out = out + power * Fraction((-1) ** (k + 1), k)
    return out


def inverse_combo(c, N):
    """Multiplicative inverse of a combo with constant term 1, to degree N."""
    one = empty_diagram()
    if c.terms.get(one, 0) != 1:
        raise NonUnitConstant("inverse needs constant term 1")
    x = LinearCombo.one() - c.truncate(N)
    out = LinearCombo.one()
    power = LinearCombo.one()
    for _ in range(N):
        power = product_combo(power, x, N)
        if not power:
            break
        out = out + power
    return out


def power_combo(c, k, N):
    out = LinearCombo.one()
    for _ in range(k):
        out = product_combo(out, c, N)
    return out


def loop_project(c, n):
    """Connected terms of first Betti number n."""
    return c.filter(lambda D: is_connected(D) and D.partner and loop_number(D) == n)


# --- unknot normalization -------------------------------------------------------------

def wheel(k, mark=H):
    """The wheel with k spokes."""
    b = Builder()
    vs = [b.vertex() for _ in range(k)]
    for i in range(k):
        b.join(vs[i][1], vs[(i + 1) % k][0])
        b.join(vs[i][2], b.leg(mark))
    return b.build()


def theta():
    b = Builder()
    u, v = b.vertex(), b.vertex()
    for x, y in zip(u, v):
        b.join(x, y)
    return b.build()


@dataclass
class NuData:
    """Wheel coefficients b_2, b_4, ... of the unknot value, up to a degree cutoff."""

    coeffs: dict
    cutoff: int
    provenance: str = ""

    @classmethod
    def default(cls, cutoff=6):
        with resources.files("nloop.data").joinpath("nu_wheels.json").open() as fh:
            data = json.load(fh)
        coeffs = {int(k): Fraction(v) for k, v in data["b"].items() if int(k) <= cutoff}
        if cutoff > data["max_degree"]:
            raise InsufficientNu(f"shipped wheel data stops at degree {data['max_degree']}")
        return cls(coeffs, cutoff, data.get("note", ""))

    def omega(self, mark=H, max_degree=None):
        """exp(sum b_2n w_2n) as a combo, up to the cutoff."""
        N = self.cutoff if max_degree is None else max_degree
        w = LinearCombo()
        for k, b in self.coeffs.items():
            if k <= N:
                w._add(wheel(k, mark), b)
        return exp_combo(w, N // 2, N)

    def self_pairing(self, N):
        """<Omega, Omega> to degree N, a combo of closed diagrams."""
        if N > self.cutoff:
            raise InsufficientNu(f"wheel data covers degree {self.cutoff}, {N} requested")
        key = (tuple(sorted(self.coeffs.items())), N)
        if key not in _SELF_PAIRING:
            x = ("f", "nu")
            om = self.omega(x, N)
            _SELF_PAIRING[key] = pair(om, om, [x]).truncate(N)
        return _SELF_PAIRING[key]


_SELF_PAIRING = {}


def wheels_series(order):
    """1/2 log(sinh(h/2)/(h/2)) as a series: the coefficients b_2n."""
    from math import factorial

    c = [Fraction(0)] * (order + 1)
    for k in range(0, order // 2 + 1):
        c[2 * k] = Fraction(1, 4 ** k * factorial(2 * k + 1))
    return series_log(HSeries(c, order)) * Fraction(1, 2)


def normalize_unknots(c, sigma_plus, sigma_minus, nu, N):
    """Divide by U+^sigma_plus U-^sigma_minus with U+- = <nu,nu>^-1 exp(-+theta/16)."""
    if sigma_plus == 0 and sigma_minus == 0:
        return c.truncate(N)
    if N > nu.cutoff:
        raise InsufficientNu(f"wheel data covers degree {nu.cutoff}, {N} requested")
    nn = nu.self_pairing(N)
    factor = power_combo(nn, sigma_plus + sigma_minus, N)
    s = sigma_plus - sigma_minus
    if s:
        factor = product_combo(factor, exp_combo(LinearCombo.of(theta(), Fraction(s, 16)), N, N), N)
    return product_combo(c, factor, N)


# --- clasper difference --------------------------------------------------------------------

@dataclass
class ClasperResult:
    delta: LinearCombo
    expanded: LinearCombo
    leading: LinearCombo
    closed: Diagram
    r: Fraction
    coefficients: tuple
    leading_matches: bool

    @property
    def vanishes_at_zero(self):
        return self.coefficients[0] == 0


def clasper_diagram(n, g, d=1):
    """An n-loop diagram with legs x_{2g+1} and x_{3g+1}: the wheel with two
    spokes carrying n - 1 bubbles on one rim edge (d = 1 of the D_{n,d} family)."""
    from .sl2 import family_diagram

    D = family_diagram(n, d)
    legs = [dd for dd, _ in D.legs]
    marks = {legs[0]: xmark(2 * g + 1), legs[1]: xmark(3 * g + 1)}
    return Diagram(D.tri, [(dd, marks[dd]) for dd, _ in D.legs], D.partner, D.labels)


def clasper_difference(M, clasper, N=None):
    """Leading pairing term of the clasper change and the coefficient r."""
    g = M.g
    a_mark, b_mark = xmark(2 * g + 1), xmark(3 * g + 1)
    marks = sorted(m for _, m in clasper.legs)
    if marks != sorted([a_mark, b_mark]):
        raise ValueError("clasper diagram needs exactly the legs x_{2g+1} and x_{3g+1}")
    delta_poly, Q = invert_over_delta(M)
    cert = appendix_b_certificate(M, (delta_poly, Q))
    base_deg = degree(clasper)
    order = (N if N is not None else base_deg + 1) + 1
    G = GaussianPart.from_inverse(delta_poly, Q, order)
    glued = wick_pair(G, LinearCombo.of(clasper))
    (D, coeff), = glued.items()
    bare = Diagram(D.tri, D.legs, D.partner, (), check=False)
    ldict = dict(D.labels)
    (dart, lab), = ldict.items()
    expanded = LinearCombo()
    for E, x in expand_labels(D, base_deg - 1 + 2).items():
        expanded._add(E, coeff * x, canonical=True)
    leading = expanded.filter(lambda E: len(E.legs) == 2)
    s = lab
    coeffs = tuple(s[k] for k in range(3))
    # the label was read from some end; normalize to read from the x_{2g+1} end
    expected = LinearCombo.of(insert_legs(bare, dart, 2), coeff * s[2])
    return ClasperResult(
        delta=glued,
        expanded=expanded,
        leading=leading,
        closed=bare,
        r=cert.r,
        coefficients=coeffs,
        leading_matches=(leading == expected and abs(s[2]) == abs(cert.r)),
    )
