"""Jacobi diagrams as dart (half-edge) structures.

A diagram has trivalent vertices (an ordered triple of darts; the cyclic
order is the vertex orientation), univalent vertices ("legs", one dart and a
mark) and a fixed-point-free pairing of darts into edges.  A mark is either
a free label ``("f", name)`` or a skeleton attachment ``("L", comp, pos)``
for lines and ``("C", comp, pos)`` for circles.

An edge may carry one label, stored on one of its darts and read from that
dart: the label ``f`` read from ``d`` means "legs of f attached on the left
of the edge travelling from d to partner(d)".  Read from the other end the
same label is ``f(t^-1)`` (equivalently ``f(-h)``).
"""
from collections import defaultdict
from fractions import Fraction
from functools import lru_cache
from itertools import product

from .algebra import DeltaFraction, HSeries, LaurentPoly, Q
from .errors import (
    Malformed,
    SiteNotFound,
    SkeletonMismatch,
    UnsupportedLabel,
)


def free(name):
    return ("f", name)


def on_line(comp, pos):
    return ("L", comp, pos)


def on_circle(comp, pos):
    return ("C", comp, pos)


def is_free(mark):
    return mark[0] == "f"


# --- labels -------------------------------------------------------------

def label_inverse(label):
    if isinstance(label, DeltaFraction):
        return label.inv_t()
    if isinstance(label, HSeries):
        return label.negate_h()
    raise UnsupportedLabel(f"unknown label type {type(label).__name__}")


def label_is_one(label):
    if isinstance(label, DeltaFraction):
        return label.is_one()
    if isinstance(label, HSeries):
        return label[0] == 1 and all(c == 0 for c in label.coeffs[1:])
    return False


def label_mul(a, b):
    if a is None:
        return b
    if b is None:
        return a
    if isinstance(a, DeltaFraction) and isinstance(b, DeltaFraction):
        return a * b
    if isinstance(a, HSeries) and isinstance(b, HSeries):
        if a.order != b.order:
            n = min(a.order, b.order)
            a, b = a.truncate(n), b.truncate(n)
        return a * b
    raise UnsupportedLabel("cannot multiply a symbolic label with a series label; expand first")


def label_key(label):
    if label is None:
        return ()
    if isinstance(label, DeltaFraction):
        return label.key()
    return ("s", label.order, label.coeffs)


def as_label(x):
    """Coerce strings, Laurent polynomials and series to label objects."""
    if x is None or isinstance(x, (DeltaFraction, HSeries)):
        return x
    if isinstance(x, LaurentPoly):
        return DeltaFraction(x)
    if isinstance(x, str):
        from .algebra import parse_label

        return parse_label(x)
    raise UnsupportedLabel(f"cannot use {x!r} as an edge label")


# --- the diagram ----------------------------------------------------------

class Diagram:
    __slots__ = ("tri", "legs", "partner", "labels", "_key", "_hash", "_node")

    def __init__(self, tri, legs, partner, labels=(), check=True):
        self.tri = tuple(tuple(int(x) for x in v) for v in tri)
        self.partner = tuple(int(p) for p in partner)
        legs = tuple((int(d), tuple(m)) for d, m in legs)
        self.legs = _normalize_positions(legs)
        lab = {}
        items = labels.items() if isinstance(labels, dict) else labels
        for d, f in items:
            f = as_label(f)
            if f is None:
                continue
            d = int(d)
            p = self.partner[d]
            lo = min(d, p)
            here = f if d == lo else label_inverse(f)
            lab[lo] = label_mul(lab.get(lo), here)
        self.labels = tuple(sorted((d, f) for d, f in lab.items() if not label_is_one(f)))
        self._key = None
        self._hash = None
        self._node = None
        if check:
            self.validate()

    # structure -----------------------------------------------------------
    @property
    def n_darts(self):
        return len(self.partner)

    def validate(self):
        seen = []
        for v in self.tri:
            if len(v) != 3:
                raise Malformed("trivalent vertex without three darts")
            seen.extend(v)
        seen.extend(d for d, _ in self.legs)
        if sorted(seen) != list(range(len(self.partner))):
            raise Malformed("every dart must belong to exactly one vertex")
        for d, p in enumerate(self.partner):
            if p == d or self.partner[p] != d:
                raise Malformed("edge pairing is not a fixed-point-free involution")

    def key(self):
        if self._key is None:
            self._key = (self.tri, self.legs, self.partner,
                         tuple((d, label_key(f)) for d, f in self.labels))
        return self._key

    def __eq__(self, other):
        return isinstance(other, Diagram) and self.key() == other.key()

    def __hash__(self):
        if self._hash is None:
            self._hash = hash(self.key())
        return self._hash

    def node_of(self):
        """dart -> ("t", i) or ("u", j)."""
        if self._node is None:
            node = [None] * len(self.partner)
            for i, v in enumerate(self.tri):
                for d in v:
                    node[d] = ("t", i)
            for j, (d, _) in enumerate(self.legs):
                node[d] = ("u", j)
            self._node = tuple(node)
        return self._node

    def label_dict(self):
        return dict(self.labels)

    def label_from(self, d):
        lab = self.label_dict()
        if d in lab:
            return lab[d]
        p = self.partner[d]
        if p in lab:
            return label_inverse(lab[p])
        return None

    def is_labeled(self):
        return bool(self.labels)

    def leg_marks(self):
        return [m for _, m in self.legs]

    def has_skeleton(self):
        return any(m[0] in ("L", "C") for _, m in self.legs)

    def skeleton_components(self):
        comps = defaultdict(list)
        for d, m in self.legs:
            if m[0] in ("L", "C"):
                comps[(m[0], m[1])].append((m[2], d))
        return {k: [d for _, d in sorted(v)] for k, v in comps.items()}

    def __repr__(self):
        return f"Diagram(tri={self.tri}, legs={self.legs}, partner={self.partner}, labels={self.labels})"

    def __str__(self):
        from .formats import diagram_to_text

        return diagram_to_text(self)


def _normalize_positions(legs):
    comps = defaultdict(list)
    for d, m in legs:
        if m[0] in ("L", "C"):
            comps[(m[0], m[1])].append(m[2])
    rank = {}
    for k, positions in comps.items():
        if len(set(positions)) != len(positions):
            raise Malformed(f"two legs share a position on skeleton component {k[1]!r}")
        for r, p in enumerate(sorted(positions)):
            rank[(k, p)] = r
    out = []
    for d, m in legs:
        if m[0] in ("L", "C"):
            m = (m[0], m[1], rank[((m[0], m[1]), m[2])])
        out.append((d, m))
    return tuple(sorted(out))


class Builder:
    """Mutable helper for assembling diagrams dart by dart."""

    def __init__(self):
        self.tri = []
        self.legs = []
        self.partner = {}
        self.labels = {}
        self.n = 0

    def dart(self):
        self.n += 1
        return self.n - 1

    def vertex(self):
        v = (self.dart(), self.dart(), self.dart())
        self.tri.append(v)
        return v

    def leg(self, mark):
        d = self.dart()
        self.legs.append((d, mark))
        return d

    def join(self, a, b, label=None):
        if a in self.partner or b in self.partner:
            raise Malformed("dart joined twice")
        self.partner[a] = b
        self.partner[b] = a
        if label is not None:
            self.labels[a] = label_mul(self.labels.get(a), as_label(label))

    def build(self):
        partner = [self.partner[d] for d in range(self.n)]
        return Diagram(self.tri, self.legs, partner, self.labels)


def copy_into(builder, D):
    """Append D's darts to builder; returns old->new dart map."""
    m = {}
    for v in D.tri:
        nv = builder.vertex()
        for a, b in zip(v, nv):
            m[a] = b
    for d, mark in D.legs:
        m[d] = builder.leg(mark)
    for d, p in enumerate(D.partner):
        if d < p:
            builder.partner[m[d]] = m[p]
            builder.partner[m[p]] = m[d]
    for d, f in D.labels:
        builder.labels[m[d]] = f
    return m


def relabel_diagram(D, perm, tri=None, legs=None):
    """Apply a dart permutation (old->new)."""
    n = len(D.partner)
    partner = [0] * n
    for d, p in enumerate(D.partner):
        partner[perm[d]] = perm[p]
    tri = tri if tri is not None else [tuple(perm[x] for x in v) for v in D.tri]
    legs = legs if legs is not None else [(perm[d], m) for d, m in D.legs]
    return Diagram(tri, legs, partner, [(perm[d], f) for d, f in D.labels], check=False)


# --- invariants -----------------------------------------------------------

def components(D):
    """Connected components of the graph part, as sorted lists of darts."""
    parent = list(range(len(D.partner)))

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    def union(a, b):
        ra, rb = find(a), find(b)
        if ra != rb:
            parent[max(ra, rb)] = min(ra, rb)

    for v in D.tri:
        union(v[0], v[1])
        union(v[0], v[2])
    for d, p in enumerate(D.partner):
        union(d, p)
    groups = defaultdict(list)
    for d in range(len(D.partner)):
        groups[find(d)].append(d)
    return sorted(groups.values())


def degree(D):
    v = len(D.tri) + len(D.legs)
    if v % 2:
        raise Malformed("odd number of vertices")
    return v // 2


def loop_number(D):
    e = len(D.partner) // 2
    v = len(D.tri) + len(D.legs)
    return e - v + len(components(D))


def is_connected(D):
    return len(components(D)) <= 1


def leg_count(D, mark=None):
    if mark is None:
        return len(D.legs)
    return sum(1 for _, m in D.legs if m == mark)


def free_leg_counts(D):
    counts = defaultdict(int)
    for _, m in D.legs:
        if m[0] == "f":
            counts[m[1]] += 1
    return dict(counts)


def disjoint_union(D1, D2):
    if D1.has_skeleton() or D2.has_skeleton():
        raise SkeletonMismatch("disjoint union is defined for diagrams on marks only")
    b = Builder()
    copy_into(b, D1)
    copy_into(b, D2)
    return b.build()


def sub_diagram(D, darts):
    """The sub-diagram on a union of connected components."""
    darts = sorted(darts)
    idx = {d: i for i, d in enumerate(darts)}
    tri = [tuple(idx[x] for x in v) for v in D.tri if v[0] in idx]
    legs = [(idx[d], m) for d, m in D.legs if d in idx]
    partner = [idx[D.partner[d]] for d in darts]
    labels = [(idx[d], f) for d, f in D.labels if d in idx]
    return Diagram(tri, legs, partner, labels, check=False)


def split_components(D):
    return [sub_diagram(D, c) for c in components(D)]


def empty_diagram():
    return Diagram((), (), ())


# --- canonical forms -------------------------------------------------------

def _even(triple):
    """True iff the cyclic order of three distinct integers is increasing."""
    a, b, c = triple
    return (a < b < c) or (b < c < a) or (c < a < b)


class _Canon:
    def __init__(self, D):
        self.D = D
        n = len(D.partner)
        self.n = n
        self.partner = D.partner
        sib = [()] * n
        for v in D.tri:
            for d in v:
                sib[d] = tuple(x for x in v if x != d)
        self.sib = sib
        kinds = [None] * n
        for v in D.tri:
            for d in v:
                kinds[d] = ("t",)
        for d, m in D.legs:
            kinds[d] = ("u",) + tuple(m)
        self.kinds = kinds
        labs = [label_key(D.label_from(d)) for d in range(n)]
        self.labs = labs
        init = [(kinds[d], labs[d], labs[D.partner[d]]) for d in range(n)]
        self.init = _rank(init)

    def refine(self, colors):
        n = self.n
        partner = self.partner
        sib = self.sib
        ncls = len(set(colors))
        while True:
            sigs = []
            for d in range(n):
                s = sib[d]
                if s:
                    a, b = colors[s[0]], colors[s[1]]
                    sigs.append((colors[d], colors[partner[d]], a, b) if a < b else (colors[d], colors[partner[d]], b, a))
                else:
                    sigs.append((colors[d], colors[partner[d]]))
            new = _rank(sigs)
            k = max(new) + 1
            if k == ncls:
                return new
            colors, ncls = new, k

    def leaf_code(self, colors):
        n = self.n
        code = []
        inv = [0] * n
        for d, c in enumerate(colors):
            inv[c] = d
        for i in range(n):
            d = inv[i]
            code.append((self.kinds[d], self.labs[d], colors[self.partner[d]],
                         tuple(sorted(colors[s] for s in self.sib[d]))))
        return tuple(code)

    def leaf_sign(self, colors):
        s = 1
        for v in self.D.tri:
            if not _even(tuple(colors[x] for x in v)):
                s = -s
        return s

    def run(self):
        """Search with orbit pruning from automorphisms found on the way."""
        self.best = None
        self.first = None
        self.gens = []
        self.odd = False
        self._search(self.init, ())
        code, colors, sign = self.best
        return code, colors, 0 if self.odd else sign

    def _leaf(self, colors):
        code = self.leaf_code(colors)
        sign = self.leaf_sign(colors)
        for ref in (self.first, self.best):
            if ref is not None and ref[0] == code:
                inv = [0] * self.n
                for d, c in enumerate(ref[1]):
                    inv[c] = d
                self.gens.append(tuple(inv[colors[d]] for d in range(self.n)))
                if sign != ref[2]:
                    self.odd = True
                return
        if self.first is None:
            self.first = (code, colors, sign)
        if self.best is None or code < self.best[0]:
            self.best = (code, colors, sign)

    def _orbit_rep(self, path):
        parent = list(range(self.n))

        def find(x):
            while parent[x] != x:
                parent[x] = parent[parent[x]]
                x = parent[x]
            return x

        for g in self.gens:
            if all(g[p] == p for p in path):
                for x in range(self.n):
                    a, b = find(x), find(g[x])
                    if a != b:
                        parent[max(a, b)] = min(a, b)
        return find

    def _search(self, colors, path):
        colors = self.refine(colors)
        counts = defaultdict(int)
        for c in colors:
            counts[c] += 1
        cells = [c for c, k in counts.items() if k > 1]
        if not cells:
            self._leaf(colors)
            return
        target = min(cells, key=lambda c: (counts[c], c))
        members = [d for d in range(self.n) if colors[d] == target]
        done = []
        seen_gens = 0
        find = None
        for d in members:
            if done and self.gens:
                if find is None or seen_gens != len(self.gens):
                    find = self._orbit_rep(path)
                    seen_gens = len(self.gens)
                if find(d) in {find(e) for e in done}:
                    continue
            done.append(d)
            self._search(_rank([(c, 0 if x == d else 1) for x, c in enumerate(colors)]), path + (d,))

    def run_exhaustive(self):
        """Unpruned search over every leaf; used as an oracle in tests."""
        best = None
        signs = set()
        stack = [self.init]
        while stack:
            colors = self.refine(stack.pop())
            counts = defaultdict(int)
            for c in colors:
                counts[c] += 1
            cells = [c for c, k in counts.items() if k > 1]
            if not cells:
                code = self.leaf_code(colors)
                sign = self.leaf_sign(colors)
                if best is None or code < best[0]:
                    best, signs = (code, colors), {sign}
                elif code == best[0]:
                    signs.add(sign)
                continue
            target = min(cells, key=lambda c: (counts[c], c))
            for d in [d for d in range(self.n) if colors[d] == target]:
                stack.append(_rank([(c, 0 if x == d else 1) for x, c in enumerate(colors)]))
        return best[0], best[1], 0 if len(signs) > 1 else signs.pop()


def _rank(keys):
    order = {k: i for i, k in enumerate(sorted(set(keys)))}
    return [order[k] for k in keys]


def _canonical_connected(D):
    """(code, canonical diagram, sign) for a diagram searched as one piece."""
    if not D.partner:
        return (), D, 1
    code, colors, sign = _Canon(D).run()
    canon = _apply_colors(D, colors)
    return code, canon, sign


def _apply_colors(D, colors):
    tri = sorted(tuple(sorted(colors[x] for x in v)) for v in D.tri)
    legs = sorted((colors[d], m) for d, m in D.legs)
    return relabel_diagram(D, colors, tri=tri, legs=legs)


def _circle_rotations(D):
    comps = D.skeleton_components()
    circ = [(k, darts) for k, darts in comps.items() if k[0] == "C"]
    if not circ:
        yield D
        return
    for shifts in product(*[range(len(darts)) for _, darts in circ]):
        newmark = {}
        for (k, darts), s in zip(circ, shifts):
            n = len(darts)
            for i, d in enumerate(darts):
                newmark[d] = ("C", k[1], (i - s) % n)
        legs = [(d, newmark.get(d, m)) for d, m in D.legs]
        yield Diagram(D.tri, legs, D.partner, D.labels, check=False)


@lru_cache(maxsize=400000)
def canonical_form(D):
    """Return (canonical diagram, sign) with D = sign * canonical in the quotient.

    sign is 0 when D has an orientation-reversing automorphism (D = -D).
    """
    if D.has_skeleton():
        best = None
        for variant in _circle_rotations(D):
            code, canon, sign = _canonical_connected(variant)
            if best is None or code < best[0]:
                best = [code, canon, sign]
            elif code == best[0] and sign != best[2]:
                best[2] = 0
        return best[1], best[2]
    parts = []
    sign = 1
    for comp in components(D):
        code, canon, s = _canonical_connected(sub_diagram(D, comp))
        parts.append((code, canon))
        sign *= s
    parts.sort(key=lambda p: p[0])
    if len(parts) == 1:
        return parts[0][1], sign
    b = Builder()
    for _, canon in parts:
        copy_into(b, canon)
    return b.build(), sign


def canonicalize(D):
    """(code, sign): code is a byte string identifying the isomorphism class."""
    canon, sign = canonical_form(D)
    return repr(canon.key()).encode(), sign


def is_zero_diagram(D):
    return canonical_form(D)[1] == 0


# --- linear combinations ------------------------------------------------------

class LinearCombo:
    """Formal Q-linear combination of diagrams, merged on canonical forms."""

    __slots__ = ("terms",)

    def __init__(self, terms=None):
        self.terms = {}
        if terms:
            items = terms.items() if isinstance(terms, dict) else terms
            for D, c in items:
                self._add(D, c)

    def _add(self, D, c, canonical=False):
        c = Q(c)
        if not c:
            return
        if not canonical:
            D, s = canonical_form(D)
            if not s:
                return
            c = c * s
        new = self.terms.get(D, 0) + c
        if new:
            self.terms[D] = new
        else:
            self.terms.pop(D, None)

    @classmethod
    def of(cls, D, c=1):
        out = cls()
        out._add(D, c)
        return out

    @classmethod
    def one(cls):
        return cls.of(empty_diagram())

    def copy(self):
        out = LinearCombo()
        out.terms = dict(self.terms)
        return out

    def items(self):
        return self.terms.items()

    def sorted_items(self):
        return sorted(self.terms.items(), key=lambda kv: kv[0].key())

    def __iter__(self):
        return iter(self.terms)

    def __len__(self):
        return len(self.terms)

    def __bool__(self):
        return bool(self.terms)

    def is_zero(self):
        return not self.terms

    def coeff(self, D):
        canon, s = canonical_form(D)
        return s * self.terms.get(canon, Fraction(0))

    def __eq__(self, other):
        if isinstance(other, (int, Fraction)) and other == 0:
            return not self.terms
        return isinstance(other, LinearCombo) and self.terms == other.terms

    def __add__(self, other):
        out = self.copy()
        for D, c in other.terms.items():
            out._add(D, c, canonical=True)
        return out

    def __sub__(self, other):
        return self + other * -1

    def __neg__(self):
        return self * -1

    def __mul__(self, other):
        if isinstance(other, (int, Fraction)):
            out = LinearCombo()
            if other:
                out.terms = {D: c * other for D, c in self.terms.items()}
            return out
        if isinstance(other, LinearCombo):
            return product_combo(self, other)
        return NotImplemented

    def __rmul__(self, other):
        if isinstance(other, (int, Fraction)):
            return self * other
        return NotImplemented

    def map_terms(self, fn):
        """Sum of c * fn(D), where fn returns a LinearCombo or Diagram."""
        out = LinearCombo()
        for D, c in self.terms.items():
            r = fn(D)
            if isinstance(r, Diagram):
                out._add(r, c)
            else:
                for D2, c2 in r.terms.items():
                    out._add(D2, c * c2, canonical=True)
        return out

    def filter(self, pred):
        out = LinearCombo()
        out.terms = {D: c for D, c in self.terms.items() if pred(D)}
        return out

    def truncate(self, max_degree):
        return self.filter(lambda D: degree(D) <= max_degree)

    def homogeneous(self, deg):
        return self.filter(lambda D: degree(D) == deg)

    def constant_term(self):
        return self.terms.get(empty_diagram(), Fraction(0))

    def __repr__(self):
        return "LinearCombo(" + ", ".join(f"{c}*{D!r}" for D, c in self.sorted_items()) + ")"

    def __str__(self):
        if not self.terms:
            return "0"
        from .formats import diagram_to_text

        return "\n+ ".join(f"({c}) * {diagram_to_text(D)}" for D, c in self.sorted_items())


def product_combo(a, b, max_degree=None):
    """Product in the disjoint-union algebra."""
    out = LinearCombo()
    for D1, c1 in a.terms.items():
        for D2, c2 in b.terms.items():
            if max_degree is not None and degree(D1) + degree(D2) > max_degree:
                continue
            out._add(disjoint_union(D1, D2), c1 * c2)
    return out


# --- local relations -------------------------------------------------------------

def as_flip(D, vertex):
    """D with the orientation of one trivalent vertex reversed."""
    if not 0 <= vertex < len(D.tri):
        raise SiteNotFound(f"no trivalent vertex {vertex}")
    tri = list(D.tri)
    a, b, c = tri[vertex]
    tri[vertex] = (a, c, b)
    return Diagram(tri, D.legs, D.partner, D.labels, check=False)


def apply_AS(D, vertex):
    """AS: D equals minus the diagram with one vertex orientation reversed."""
    return LinearCombo.of(as_flip(D, vertex), -1)


def _tri_vertex_of(D, dart):
    node = D.node_of()[dart]
    if node is None or node[0] != "t":
        return None
    return node[1]


def _rotate_to(triple, dart, pos):
    """Rotate a cyclic triple so dart sits at index pos."""
    i = triple.index(dart)
    t = triple[i:] + triple[:i]
    return t[-pos:] + t[:-pos] if pos else t


def ihx_terms(D, dart):
    """The three diagrams of the Jacobi identity around the edge through dart.

    With u = (e, a, b) and v = (e', c, d) the terms are
    u=(e,a,b) v=(e',c,d);  u=(e,b,c) v=(e',a,d);  u=(e,c,a) v=(e',b,d),
    and their sum vanishes.  a, b, c, d keep their edges (and labels).
    """
    p = D.partner[dart]
    iu, iv = _tri_vertex_of(D, dart), _tri_vertex_of(D, p)
    if iu is None or iv is None or iu == iv:
        raise SiteNotFound("IHX needs an edge between two distinct trivalent vertices")
    lab = D.label_dict()
    if dart in lab or p in lab:
        raise SiteNotFound("IHX is only applied on unlabeled internal edges")
    e, a, b = _rotate_to(D.tri[iu], dart, 0)
    e2, c, d = _rotate_to(D.tri[iv], p, 0)
    out = []
    for ut, vt in (((e, a, b), (e2, c, d)), ((e, b, c), (e2, a, d)), ((e, c, a), (e2, b, d))):
        tri = list(D.tri)
        tri[iu] = ut
        tri[iv] = vt
        out.append(Diagram(tri, D.legs, D.partner, D.labels, check=False))
    return out


def ihx_relation(D, dart):
    rel = LinearCombo()
    for T in ihx_terms(D, dart):
        rel._add(T, 1)
    return rel


def apply_IHX(D, dart):
    """IHX: D equals minus the sum of the two re-wirings."""
    _, d2, d3 = ihx_terms(D, dart)
    return LinearCombo([(d2, -1), (d3, -1)])


def internal_edges(D):
    """One dart per unlabeled edge joining two distinct trivalent vertices."""
    node = D.node_of()
    lab = D.label_dict()
    out = []
    for d, p in enumerate(D.partner):
        if d < p and node[d][0] == "t" and node[p][0] == "t" and node[d] != node[p]:
            if d not in lab and p not in lab:
                out.append(d)
    return out


def _line_leg_at(D, comp, pos):
    for d, m in D.legs:
        if m[0] == "L" and m[1] == comp and m[2] == pos:
            return d
    return None


def stu_merge(D, comp, pos):
    """The S diagram obtained by merging legs at pos and pos+1 of a line.

    Convention: T - U = S where T has the x-leg at pos, the y-leg at pos+1,
    and the new vertex of S is ordered (x-side, y-side, skeleton).
    """
    d1 = _line_leg_at(D, comp, pos)
    d2 = _line_leg_at(D, comp, pos + 1)
    if d1 is None or d2 is None:
        raise SiteNotFound(f"no adjacent legs at {comp}:{pos},{pos + 1}")
    b = Builder()
    m = {}
    for v in D.tri:
        nv = b.vertex()
        m.update(zip(v, nv))
    for d, mark in D.legs:
        if d in (d1, d2):
            continue
        if mark[0] == "L" and mark[1] == comp and mark[2] > pos:
            mark = ("L", comp, mark[2] - 1)
        m[d] = b.leg(mark)
    w = b.vertex()
    new_leg = b.leg(("L", comp, pos))
    m[d1], m[d2] = w[0], w[1]
    b.join(w[2], new_leg)
    for d in range(len(D.partner)):
        p = D.partner[d]
        if d < p:
            b.join(m[d], m[p])
    for d, f in D.labels:
        b.labels[m[d]] = f
    return b.build()


def stu_swap(D, comp, pos):
    """D with the legs at pos and pos+1 of a line exchanged."""
    d1 = _line_leg_at(D, comp, pos)
    d2 = _line_leg_at(D, comp, pos + 1)
    if d1 is None or d2 is None:
        raise SiteNotFound(f"no adjacent legs at {comp}:{pos},{pos + 1}")
    legs = []
    for d, mark in D.legs:
        if d == d1:
            mark = ("L", comp, pos + 1)
        elif d == d2:
            mark = ("L", comp, pos)
        legs.append((d, mark))
    return Diagram(D.tri, legs, D.partner, D.labels, check=False)


def apply_STU(D, site):
    """STU at adjacent legs (comp, pos): D = U + S."""
    comp, pos = site
    return LinearCombo([(stu_swap(D, comp, pos), 1), (stu_merge(D, comp, pos), 1)])


def stu_split(D, vertex, dart=None):
    """For a trivalent vertex joined to a line leg, return (T, U) with S = T - U.

    dart picks which edge of the vertex runs to the skeleton (default: the first).
    """
    v = D.tri[vertex]
    node = D.node_of()
    legpos = None
    for s in v:
        if dart is not None and s != dart:
            continue
        n = node[D.partner[s]]
        if n[0] == "u" and D.legs[n[1]][1][0] == "L":
            legpos = s
            break
    if legpos is None:
        raise SiteNotFound("vertex is not adjacent to a skeleton leg")
    x, y, s = _rotate_to(v, legpos, 2)
    leg_dart = D.partner[s]
    mark = D.legs[node[leg_dart][1]][1]
    comp, pos = mark[1], mark[2]
    lab = D.label_dict()
    if s in lab or leg_dart in lab:
        raise SiteNotFound("STU is only applied when the skeleton edge is unlabeled")

    def build(first, second):
        b = Builder()
        m = {}
        for i, t in enumerate(D.tri):
            if i == vertex:
                continue
            m.update(zip(t, b.vertex()))
        for d, mk in D.legs:
            if d == leg_dart:
                continue
            if mk[0] == "L" and mk[1] == comp and mk[2] > pos:
                mk = ("L", comp, mk[2] + 1)
            m[d] = b.leg(mk)
        m[first] = b.leg(("L", comp, pos))
        m[second] = b.leg(("L", comp, pos + 1))
        for d in range(len(D.partner)):
            p = D.partner[d]
            if d < p and d not in (s, leg_dart):
                b.join(m[d], m[p])
        for d, f in D.labels:
            b.labels[m[d]] = f
        return b.build()

    return build(x, y), build(y, x)


def stu_relation(D, vertex, dart=None):
    """S - T + U, which vanishes in the quotient."""
    T, U = stu_split(D, vertex, dart)
    return LinearCombo([(D, 1), (T, -1), (U, 1)])


def skeleton_vertices(D):
    """Trivalent vertices adjacent to a line leg (STU sites)."""
    return sorted({v for v, _ in skeleton_sites(D)})


def skeleton_sites(D):
    """(vertex, dart) pairs where the dart's edge ends on a line leg."""
    node = D.node_of()
    out = []
    for i, v in enumerate(D.tri):
        for s in v:
            n = node[D.partner[s]]
            if n[0] == "u" and D.legs[n[1]][1][0] == "L":
                out.append((i, s))
    return out


def adjacent_leg_sites(D):
    out = []
    for (kind, comp), darts in D.skeleton_components().items():
        if kind == "L":
            out.extend((comp, i) for i in range(len(darts) - 1))
    return out


# --- labels to legs -----------------------------------------------------------------

def insert_legs(D, dart, k, mark=("f", "h")):
    """Subdivide the edge at dart with k new vertices carrying legs on its left."""
    if k == 0:
        return D
    b = Builder()
    m = copy_into(b, D)
    p = D.partner[dart]
    a0, p0 = m[dart], m[p]
    del b.partner[a0]
    del b.partner[p0]
    lab_here = b.labels.pop(a0, None)
    lab_there = b.labels.pop(p0, None)
    prev = a0
    for _ in range(k):
        w = b.vertex()
        b.join(prev, w[0])
        b.join(w[2], b.leg(mark))
        prev = w[1]
    b.join(prev, p0)
    if lab_here is not None:
        b.labels[a0] = lab_here
    if lab_there is not None:
        b.labels[p0] = lab_there
    return b.build()


def expand_labels(D, order, delta=None, mark=("f", "h")):
    """Replace every label f(h) = sum c_k h^k by sum_k c_k (k legs on the edge).

    Terms of total degree above ``order`` are dropped.
    """
    if not D.labels:
        return LinearCombo.of(D)
    base_deg = degree(D)
    room = order - base_deg
    if room < 0:
        return LinearCombo()
    bare = Diagram(D.tri, D.legs, D.partner, (), check=False)
    edges = []
    for d, f in D.labels:
        s = f if isinstance(f, HSeries) else f.series(order, delta)
        edges.append((d, s))
    out = LinearCombo()
    # collect leg counts first, then build each diagram once
    plans = []

    def rec_plan(i, ks, coeff, left):
        if i == len(edges):
            plans.append((ks, coeff))
            return
        d, s = edges[i]
        for k in range(0, min(left, s.order) + 1):
            c = s[k]
            if c:
                rec_plan(i + 1, ks + (k,), coeff * c, left - k)

    rec_plan(0, (), Fraction(1), room)
    for ks, coeff in plans:
        out._add(_insert_many(bare, [(d, k) for (d, _), k in zip(edges, ks)], mark), coeff)
    return out


def _insert_many(D, plan, mark):
    b = Builder()
    m = copy_into(b, D)
    for d, k in plan:
        if not k:
            continue
        a0, p0 = m[d], m[D.partner[d]]
        del b.partner[a0]
        del b.partner[p0]
        prev = a0
        for _ in range(k):
            w = b.vertex()
            b.join(prev, w[0])
            b.join(w[2], b.leg(mark))
            prev = w[1]
        b.join(prev, p0)
    return b.build()


def expand_combo(c, order, delta=None, mark=("f", "h")):
    return c.map_terms(lambda D: expand_labels(D, order, delta, mark))


def move_label(D, dart):
    """Push a t^{+-1} label across the vertex at the dart's end.

    The label is read outward from that vertex.  At a trivalent vertex a
    label t^s on one edge equals t^-s on the other two edges (all read
    outward); at an h-marked leg the label disappears, since every inserted
    leg would sit on a fork with it.
    """
    f = D.label_from(dart)
    if f is None:
        return LinearCombo.of(D)
    if not (isinstance(f, DeltaFraction) and f.dpow == 0 and f.num.is_monomial()
            and f.num.terms[0][1] == 1 and abs(f.num.terms[0][0]) == 1):
        raise UnsupportedLabel("move_label needs a t or t^-1 label")
    s = f.num.terms[0][0]
    node = D.node_of()[dart]
    lab = {}
    for d in range(len(D.partner)):
        if d < D.partner[d]:
            g = D.label_from(d)
            if g is not None:
                lab[d] = g
    lo = min(dart, D.partner[dart])
    lab.pop(lo, None)
    if node[0] == "u":
        mark = D.legs[node[1]][1]
        if mark != ("f", "h"):
            raise UnsupportedLabel("labels only vanish at h-marked legs")
        return LinearCombo.of(Diagram(D.tri, D.legs, D.partner, lab, check=False))
    inv = DeltaFraction(LaurentPoly.monomial(-s))
    for other in D.tri[node[1]]:
        if other == dart:
            continue
        o_lo = min(other, D.partner[other])
        here = lab.pop(o_lo, None)
        if here is not None and o_lo != other:
            here = label_inverse(here)
        new = label_mul(here, inv)
        lab[other] = new
    return LinearCombo.of(Diagram(D.tri, D.legs, D.partner, lab, check=False))
