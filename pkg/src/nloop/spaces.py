"""Graded quotient spaces of Jacobi diagrams, the PBW maps, and label-class tests."""
from collections import defaultdict
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from itertools import permutations, product
from math import factorial

from .algebra import DeltaFraction, LaurentPoly
from .diagrams import (
    Builder,
    Diagram,
    LinearCombo,
    adjacent_leg_sites,
    apply_STU,
    canonical_form,
    copy_into,
    degree,
    expand_labels,
    ihx_relation,
    insert_legs,
    internal_edges,
    loop_number,
    skeleton_sites,
    stu_merge,
    stu_relation,
    stu_swap,
)
from .errors import MissingLine, NotInSpace, TooLarge

MAX_DEGREE = 6
SHAPE = ("f", "*")


# --- space descriptors -----------------------------------------------------

@dataclass(frozen=True)
class SpaceId:
    """kind is one of B, Bconn, Bn, A_line, A_marks, At, E0, E1.

    marks: free labels (or line names for A_line).  loops: n for Bn/E0/E1.
    m and delta parametrize E0/E1.  max_legs bounds legs per diagram when set.
    """

    kind: str
    degree: int
    marks: tuple = ("h",)
    loops: int = None
    m: int = None
    delta: object = field(default=None, compare=False)
    max_legs: int = None

    def __post_init__(self):
        kinds = {"B", "Bconn", "Bn", "A_line", "A_marks", "At", "E0", "E1"}
        if self.kind not in kinds:
            raise ValueError(f"unknown space kind {self.kind!r}")
        if self.kind in ("Bn", "E0", "E1") and (self.loops is None or self.loops < 0):
            raise ValueError("loop number n >= 0 required")
        if self.kind in ("E0", "E1") and (self.m is None or self.m < 1):
            raise ValueError("m >= 1 required")
        if self.degree < 0:
            raise ValueError("degree cutoff must be non-negative")

    @classmethod
    def parse(cls, text, degree):
        """Parse names like 'Bn:2', 'B', 'A_line:x', 'A_marks:x,y', 'E0:2:3'."""
        parts = text.split(":")
        kind = parts[0]
        if kind == "Bn":
            return cls("Bn", degree, loops=int(parts[1]))
        if kind in ("A_line", "A_marks", "At"):
            marks = tuple(parts[1].split(",")) if len(parts) > 1 else ("x",)
            return cls(kind, degree, marks=marks)
        if kind in ("E0", "E1"):
            return cls(kind, degree, loops=int(parts[1]), m=int(parts[2]))
        return cls(kind, degree)


# --- connected shapes -------------------------------------------------------

def _leg_darts(D):
    return [d for d, _ in D.legs]


def _canon(D):
    return canonical_form(D)[0]


def _dedupe(ds):
    seen = {}
    for D in ds:
        c = _canon(D)
        if c not in seen:
            seen[c] = c
    return sorted(seen, key=_sort_key)


@lru_cache(maxsize=None)
def _sort_key(D):
    return (degree(D), len(D.legs), len(D.tri), repr(D.key()))


def _strut(mark=SHAPE):
    b = Builder()
    b.join(b.leg(mark), b.leg(mark))
    return b.build()


def _tadpole(mark=SHAPE):
    b = Builder()
    v = b.vertex()
    b.join(v[0], v[1])
    b.join(v[2], b.leg(mark))
    return b.build()


def _close_legs(D, a, c):
    """Join the edges ending at legs a and c, removing both legs."""
    pa, pc = D.partner[a], D.partner[c]
    if pa == c:
        return None
    b = Builder()
    m = {}
    for v in D.tri:
        m.update(zip(v, b.vertex()))
    for d, mark in D.legs:
        if d not in (a, c):
            m[d] = b.leg(mark)
    for d, p in enumerate(D.partner):
        if d < p and d not in (a, c) and p not in (a, c):
            b.join(m[d], m[p])
    b.join(m[pa], m[pc])
    return b.build()


def _add_leg(D, mark=SHAPE):
    out = []
    for d, p in enumerate(D.partner):
        if d < p:
            out.append(insert_legs(D, d, 1, mark))
    return out


def _has_fork(D):
    """A vertex carrying two legs with the same mark: zero by AS."""
    node = D.node_of()
    lab = D.label_dict()
    for v in D.tri:
        marks = []
        for s in v:
            p = D.partner[s]
            if node[p][0] == "u" and s not in lab and p not in lab:
                marks.append(D.legs[node[p][1]][1])
        if len(marks) != len(set(marks)):
            return True
    return False


@lru_cache(maxsize=None)
def connected_shapes(n, u, prune=False):
    """Connected n-loop diagrams with u legs, all marked '*', up to isomorphism.

    With prune=True, diagrams with two legs on one vertex are dropped (they
    vanish when all legs carry one mark); removing a leg never creates such a
    vertex, so the pruned families are still generated completely.  Other
    diagrams that vanish by AS are kept since they are needed as parents.
    """
    if n < 0 or u < 0:
        return ()
    if n == 0:
        if u < 2:
            return ()
        if u == 2:
            return (_canon(_strut()),)
        prev = connected_shapes(0, u - 1, prune)
    elif n == 1:
        if u == 0:
            return ()
        if u == 1:
            return (_canon(_tadpole()),)
        prev = connected_shapes(1, u - 1, prune)
    else:
        if u == 0:
            closed = []
            for D in connected_shapes(n - 1, 2):
                a, c = _leg_darts(D)
                E = _close_legs(D, a, c)
                if E is not None:
                    closed.append(E)
            return tuple(_dedupe(closed))
        prev = connected_shapes(n, u - 1, prune)
    grown = []
    for D in prev:
        for E in _add_leg(D):
            if not (prune and _has_fork(E)):
                grown.append(E)
    return tuple(_dedupe(grown))


def _shape_degree(n, u):
    return u - 1 if n == 0 else u + n - 1


def _assign_marks(D, marks):
    """All ways of replacing the '*' marks by elements of marks, deduped."""
    legs = [d for d, _ in D.legs]
    out = []
    for choice in product(marks, repeat=len(legs)):
        new = [(d, ("f", x)) for d, x in zip(legs, choice)]
        out.append(Diagram(D.tri, new, D.partner, D.labels, check=False))
    return _dedupe(out)


def connected_diagrams(deg, marks=("h",), loops=None, min_legs=0, max_legs=None, prune=True):
    """Connected open diagrams of exactly the given degree on free marks.

    prune drops diagrams zero by a same-mark leg pair (only valid off the skeleton).
    """
    out = []
    for n in range(0, deg + 2):
        if loops is not None and n != loops:
            continue
        u = deg + 1 - n if n >= 1 else deg + 1
        if u < min_legs or (max_legs is not None and u > max_legs):
            continue
        if n >= 2 and u == 0 and n - 1 != deg:
            continue
        for D in connected_shapes(n, u, prune and len(marks) == 1):
            out.extend(_assign_marks(D, marks))
    return out


def _multisets(conn_by_degree, deg):
    """Multisets of connected diagrams with total degree deg."""
    items = []
    for d in range(1, deg + 1):
        items.extend((d, D) for D in conn_by_degree.get(d, []))
    results = []

    def rec(start, left, chosen):
        if left == 0:
            results.append(list(chosen))
            return
        for i in range(start, len(items)):
            d, D = items[i]
            if d <= left:
                chosen.append(D)
                rec(i, left - d, chosen)
                chosen.pop()

    rec(0, deg, [])
    return results


def _union(parts):
    b = Builder()
    for D in parts:
        copy_into(b, D)
    return b.build()


def _leg_orders(D, lines):
    """Attach the free legs of D to lines in every order; deduped."""
    by_mark = defaultdict(list)
    for d, m in D.legs:
        if m[0] != "f" or m[1] not in lines:
            raise MissingLine(f"no line for label {m[1]!r}")
        by_mark[m[1]].append(d)
    marks = sorted(by_mark)
    out = []
    for orders in product(*[permutations(by_mark[x]) for x in marks]):
        pos = {}
        for x, order in zip(marks, orders):
            for i, d in enumerate(order):
                pos[d] = ("L", x, i)
        legs = [(d, pos[d]) for d, _ in D.legs]
        out.append(Diagram(D.tri, legs, D.partner, D.labels, check=False))
    return out


def enumerate_diagrams(spec, max_degree=MAX_DEGREE):
    """Canonical spanning diagrams of each degree 0..spec.degree, in a fixed order."""
    if spec.degree > max_degree:
        raise TooLarge(f"degree cutoff {spec.degree} exceeds the configured maximum {max_degree}")
    out = []
    for deg in range(spec.degree + 1):
        out.extend(diagrams_of_degree(spec, deg))
    return out


def diagrams_of_degree(spec, deg):
    kind = spec.kind
    if kind in ("Bconn", "Bn"):
        loops = spec.loops if kind == "Bn" else None
        return _dedupe(connected_diagrams(deg, spec.marks, loops, max_legs=spec.max_legs))
    if kind in ("B", "A_marks", "A_line"):
        min_legs = 0 if kind == "B" else 1
        conn = {d: connected_diagrams(d, spec.marks, min_legs=min_legs, max_legs=spec.max_legs,
                                      prune=kind != "A_line")
                for d in range(1, deg + 1)}
        found = []
        for parts in _multisets(conn, deg):
            D = _union(parts)
            if spec.max_legs is not None and len(D.legs) > spec.max_legs:
                continue
            if kind == "A_line":
                found.extend(_leg_orders(D, spec.marks))
            else:
                found.append(D)
        if deg == 0:
            found.append(Diagram((), (), ()))
        return _dedupe(found)
    if kind in ("E0", "E1"):
        shapes = _dedupe(connected_diagrams(deg, ("h",), spec.loops, max_legs=0))
        return _dedupe(D2 for D in shapes for D2 in _token_labelings(D, e_tokens(spec.kind, spec.m)))
    if kind == "At":
        conn = {d: connected_diagrams(d, spec.marks, max_legs=spec.max_legs) for d in range(1, deg + 1)}
        found = []
        for parts in _multisets(conn, deg):
            D = _union(parts)
            found.extend(_token_labelings(D, at_tokens()))
        if deg == 0:
            found.append(Diagram((), (), ()))
        return _dedupe(found)
    raise ValueError(kind)


def _token_labelings(D, tokens):
    edges = [d for d, p in enumerate(D.partner) if d < p]
    out = []
    for choice in product([None] + list(tokens), repeat=len(edges)):
        lab = [(d, f) for d, f in zip(edges, choice) if f is not None]
        out.append(Diagram(D.tri, D.legs, D.partner, lab, check=False))
    return out


# --- relations ---------------------------------------------------------------

def relations(D):
    """All AS/IHX/STU relations with a site in D (AS is carried by signs)."""
    return list(_relations(D))


@lru_cache(maxsize=None)
def _relations(D):
    rels = []
    for e in internal_edges(D):
        rels.append(ihx_relation(D, e))
    if not D.labels:
        for v, s in skeleton_sites(D):
            rels.append(stu_relation(D, v, s))
    return tuple(rels)


def as_relations(D):
    """D plus its AS flip at each vertex: zero by construction."""
    from .diagrams import as_flip

    return [LinearCombo([(D, 1), (as_flip(D, v), 1)]) for v in range(len(D.tri))]


def stu_pair_relations(D):
    """T - U - S at every adjacent leg pair on a line."""
    rels = []
    for site in adjacent_leg_sites(D):
        rels.append(LinearCombo.of(D) - apply_STU(D, site))
    return rels


# --- sparse elimination -------------------------------------------------------

class Basis:
    """Quotient basis of one space, degree by degree.

    pivot_order 'asc' makes the lexicographically largest diagram of each
    relation its pivot; 'desc' the smallest.  Basis elements are the
    non-pivot diagrams.
    """

    def __init__(self, spec, pivot_order="asc", max_degree=MAX_DEGREE, delta=None, workers=1):
        self.workers = workers
        self.spec = spec
        self.pivot_order = pivot_order
        self.columns = {}
        self.rank = {}
        self.pivots = {}
        self.basis = []
        self.n_relations = 0
        self._index = None
        self.delta = delta if delta is not None else spec.delta
        if spec.degree > max_degree:
            raise TooLarge(f"degree cutoff {spec.degree} exceeds the configured maximum {max_degree}")
        for deg in range(spec.degree + 1):
            self._build_degree(deg)

    def _key(self, D):
        r = self.rank[D]
        return r if self.pivot_order == "asc" else -r

    def _build_degree(self, deg):
        diagrams = [D for D in diagrams_of_degree(self.spec, deg)]
        for D in diagrams:
            self.rank[D] = len(self.rank)
            self.columns[D] = deg
        live = [D for D in diagrams if canonical_form(D)[1] != 0]
        rows = []
        if self.workers > 1 and len(live) > 1:
            # relation generation is independent per diagram; elimination stays serial
            with ProcessPoolExecutor(self.workers) as ex:
                for rs in ex.map(relations, live, chunksize=max(1, len(live) // (4 * self.workers))):
                    rows.extend(rs)
        else:
            for D in live:
                rows.extend(relations(D))
        zero_cols = [D for D in diagrams if canonical_form(D)[1] == 0]
        self.n_relations += len(rows)
        for r in rows:
            self._insert(dict(r.terms))
        self._back_substitute()
        for D in diagrams:
            if D not in self.pivots and D not in zero_cols:
                self.basis.append(D)
        self.basis.sort(key=lambda D: (self.columns[D], self.rank[D]))

    def _insert(self, row):
        for D in row:
            if D not in self.rank:
                raise NotInSpace("relation leaves the enumerated space")
        while row:
            top = max(row, key=self._key)
            if top in self.pivots:
                c = row[top]
                for D, x in self.pivots[top].items():
                    v = row.get(D, 0) - c * x
                    if v:
                        row[D] = v
                    else:
                        row.pop(D, None)
                continue
            c = row[top]
            self.pivots[top] = {D: x / c for D, x in row.items()}
            return

    def _back_substitute(self):
        order = sorted(self.pivots, key=self._key)
        for p in order:
            row = self.pivots[p]
            changed = True
            while changed:
                changed = False
                for D in list(row):
                    if D != p and D in self.pivots and row.get(D):
                        c = row[D]
                        for E, x in self.pivots[D].items():
                            v = row.get(E, 0) - c * x
                            if v:
                                row[E] = v
                            else:
                                row.pop(E, None)
                        changed = True

    @property
    def dim(self):
        return len(self.basis)

    def dims(self):
        out = defaultdict(int)
        for D in self.basis:
            out[self.columns[D]] += 1
        return [out[d] for d in range(self.spec.degree + 1)]

    def index(self):
        if self._index is None or len(self._index) != len(self.basis):
            self._index = {D: i for i, D in enumerate(self.basis)}
        return self._index

    def reduce(self, c):
        """Reduced combo supported on basis diagrams."""
        out = defaultdict(Fraction)
        for D, x in c.items():
            if D not in self.columns:
                raise NotInSpace(f"diagram outside the space: {D!r}")
            if D in self.pivots:
                for E, y in self.pivots[D].items():
                    if E != D:
                        out[E] -= x * y
            else:
                out[D] += x
        return {D: x for D, x in out.items() if x}

    def coords(self, c):
        if isinstance(c, Diagram):
            c = LinearCombo.of(c)
        idx = self.index()
        vec = [Fraction(0)] * len(self.basis)
        for D, x in self.reduce(c).items():
            if D not in idx:
                raise NotInSpace("reduction left a residue outside the basis")
            vec[idx[D]] = x
        return vec

    def element(self, vec):
        return LinearCombo([(D, x) for D, x in zip(self.basis, vec) if x])


def quotient_basis(spec, pivot_order="asc", max_degree=MAX_DEGREE):
    if spec.kind in ("E0", "E1", "At"):
        return LabeledImage(spec, pivot_order, max_degree)
    return Basis(spec, pivot_order, max_degree)


def coords(c, B):
    return B.coords(c)


class LabeledImage:
    """Span of a labeled spanning set inside the unlabeled quotient.

    Labeled diagrams are read as elements of the completed unlabeled space
    via expand_labels; the image is row-reduced in the target basis.
    """

    def __init__(self, spec, pivot_order="asc", max_degree=MAX_DEGREE):
        self.spec = spec
        if spec.kind == "At":
            target = SpaceId("B", spec.degree, marks=tuple(spec.marks) + ("h",))
        else:
            target = SpaceId("Bconn", spec.degree, marks=("h",))
        self.target = Basis(target, pivot_order, max_degree)
        gens = []
        for deg in range(spec.degree + 1):
            gens.extend(diagrams_of_degree(spec, deg))
        self.generators = gens
        rows = []
        for D in gens:
            v = self.target.coords(expand_labels(D, spec.degree, spec.delta))
            rows.append(v)
        self.rank = _rank_of(rows)

    @property
    def dim(self):
        return self.rank


def _rank_of(rows):
    rows = [list(r) for r in rows if any(r)]
    rank = 0
    ncols = len(rows[0]) if rows else 0
    for c in range(ncols):
        piv = next((i for i in range(rank, len(rows)) if rows[i][c]), None)
        if piv is None:
            continue
        rows[rank], rows[piv] = rows[piv], rows[rank]
        p = rows[rank]
        for i in range(len(rows)):
            if i != rank and rows[i][c]:
                f = rows[i][c] / p[c]
                rows[i] = [a - f * b for a, b in zip(rows[i], p)]
        rank += 1
    return rank


# --- PBW --------------------------------------------------------------------------

def chi(c, lines=None):
    """Symmetrize free legs onto lines: average over all leg orders per label."""
    if isinstance(c, Diagram):
        c = LinearCombo.of(c)
    out = LinearCombo()
    for D, x in c.items():
        names = lines if lines is not None else sorted({m[1] for _, m in D.legs if m[0] == "f"})
        counts = defaultdict(int)
        for _, m in D.legs:
            if m[0] == "f":
                counts[m[1]] += 1
        w = Fraction(1)
        for k in counts.values():
            w /= factorial(k)
        for E in _leg_orders(D, names):
            out._add(E, x * w)
    return out


def _forget_order(D):
    legs = [(d, ("f", m[1]) if m[0] == "L" else m) for d, m in D.legs]
    return Diagram(D.tri, legs, D.partner, D.labels, check=False)


def _bubble_terms(D, comp, target):
    """Sum of S-terms with D - D' = sum, where D' has the legs of comp in target order."""
    order = D.skeleton_components()[("L", comp)]
    rank = {d: i for i, d in enumerate(target)}
    current = list(order)
    terms = []
    cur = D
    # bubble sort towards target; each swap contributes T - U = S
    n = len(current)
    for i in range(n):
        for j in range(n - 1 - i):
            if rank[current[j]] > rank[current[j + 1]]:
                terms.append(stu_merge(cur, comp, j))
                cur = stu_swap(cur, comp, j)
                current[j], current[j + 1] = current[j + 1], current[j]
    return terms, cur


@lru_cache(maxsize=None)
def _chi_inverse_canonical(D):
    out = LinearCombo.of(_forget_order(D))
    comps = [k[1] for k in D.skeleton_components() if k[0] == "L"]
    comps.sort()
    if not comps:
        return out
    orders = [D.skeleton_components()[("L", x)] for x in comps]
    w = Fraction(1)
    for o in orders:
        w /= factorial(len(o))
    acc = LinearCombo()
    for perms in product(*[permutations(o) for o in orders]):
        cur = D
        for x, target in zip(comps, perms):
            terms, cur = _bubble_terms(cur, x, list(target))
            for S in terms:
                acc._add(S, 1)
    if acc:
        out = out + chi_inverse(acc) * w
    return out


def chi_inverse(c):
    """Inverse PBW map from diagrams on lines to diagrams on free marks."""
    if isinstance(c, Diagram):
        c = LinearCombo.of(c)
    out = LinearCombo()
    for D, x in c.items():
        for E, y in _chi_inverse_canonical(D).items():
            out._add(E, x * y, canonical=True)
    return out


# --- label classes ---------------------------------------------------------------

def at_tokens():
    return (DeltaFraction(LaurentPoly.t()), DeltaFraction(LaurentPoly.monomial(-1)))


def e_tokens(kind, m):
    out = []
    for k in list(range(-m, 0)) + list(range(1, m + 1)):
        num = LaurentPoly.monomial(k)
        if kind == "E1":
            num = num - 1
        out.append(DeltaFraction(num, 1))
    return tuple(out)


def _label_ok(f, tokens):
    return f in tokens or f.inv_t() in tokens


def in_At(c):
    if isinstance(c, Diagram):
        c = [(c, 1)]
    else:
        c = c.items()
    tokens = at_tokens()
    for D, _ in c:
        for _, f in D.labels:
            if not isinstance(f, DeltaFraction) or not _label_ok(f, tokens):
                return False
    return True


def in_E(c, spec):
    """Every label is a token of the E0/E1 family (read from either side)."""
    if isinstance(c, Diagram):
        c = [(c, 1)]
    else:
        c = c.items()
    tokens = e_tokens(spec.kind, spec.m)
    for D, _ in c:
        if spec.loops is not None and loop_number(D) != spec.loops:
            return False
        for _, f in D.labels:
            if not isinstance(f, DeltaFraction) or not _label_ok(f, tokens):
                return False
    return True
