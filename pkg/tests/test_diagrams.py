import random
from fractions import Fraction as F
from itertools import permutations

import pytest

from nloop.aarhus import theta, wheel
from nloop.algebra import parse_label
from nloop.diagrams import (
    Builder,
    Diagram,
    LinearCombo,
    _Canon,
    apply_AS,
    apply_IHX,
    apply_STU,
    canonical_form,
    canonicalize,
    degree,
    disjoint_union,
    expand_labels,
    internal_edges,
    loop_number,
    move_label,
    on_line,
)
from nloop.errors import Malformed, SkeletonMismatch, UnsupportedLabel
from nloop.spaces import Basis, SpaceId, connected_diagrams

h = ("f", "h")


def shuffle(D, rng, flip=None):
    """An isomorphic copy with darts renumbered and triples rotated; flip
    swaps two darts of that vertex (reversing its orientation)."""
    n = len(D.partner)
    perm = list(range(n))
    rng.shuffle(perm)
    tri = []
    for i, v in enumerate(D.tri):
        v = tuple(perm[x] for x in v)
        k = rng.randrange(3)
        v = v[k:] + v[:k]
        if flip == i:
            v = (v[1], v[0], v[2])
        tri.append(v)
    rng.shuffle(tri)
    legs = [(perm[d], m) for d, m in D.legs]
    partner = [0] * n
    for d, p in enumerate(D.partner):
        partner[perm[d]] = perm[p]
    labels = [(perm[d], f) for d, f in D.labels]
    return Diagram(tri, legs, partner, labels)


def tadpole():
    b = Builder()
    v = b.vertex()
    b.join(v[0], v[1])
    b.join(v[2], b.leg(h))
    return b.build()


def dumbbell(lab_left=None, lab_right=None):
    b = Builder()
    x, y = b.vertex(), b.vertex()
    b.join(x[0], x[1], lab_left)
    b.join(y[0], y[1], lab_right)
    b.join(x[2], y[2])
    return b.build()


def brute_automorphism_signs(D):
    """Signs of all dart bijections preserving partner, legs and unordered triples."""
    n = len(D.partner)
    signs = set()
    verts = [set(v) for v in D.tri]
    for p in permutations(range(n)):
        if any(p[D.partner[d]] != D.partner[p[d]] for d in range(n)):
            continue
        if any(dict(D.legs).get(p[d]) != m for d, m in D.legs):
            continue
        s = 1
        ok = True
        for v in D.tri:
            img = tuple(p[x] for x in v)
            if set(img) not in verts:
                ok = False
                break
            target = next(w for w in D.tri if set(w) == set(img))
            rot = [target[i:] + target[:i] for i in range(3)]
            s *= 1 if img in rot else -1
        if ok:
            signs.add(s)
    return signs


def test_theta_code_invariant():
    rng = random.Random(1)
    code, sign = canonicalize(theta())
    assert sign in (1, -1)
    for _ in range(10):
        assert canonicalize(shuffle(theta(), rng)) == (code, sign)
    c2, s2 = canonicalize(shuffle(theta(), rng, flip=0))
    assert c2 == code and s2 == -sign


def test_tadpole_sign_zero():
    assert canonicalize(tadpole())[1] == 0
    assert -1 in brute_automorphism_signs(tadpole())


def test_dumbbell_labelings_identified():
    tt = parse_label("t")
    a = dumbbell(tt, None)
    b = dumbbell(None, tt)
    assert canonicalize(a)[0] == canonicalize(b)[0]
    assert canonicalize(dumbbell())[1] == 0


def test_pruned_search_matches_exhaustive():
    rng = random.Random(5)
    for deg in range(1, 5):
        for D in connected_diagrams(deg, ("h", "x"), prune=False)[:60]:
            E = shuffle(D, rng)
            c1 = _Canon(E).run()
            c2 = _Canon(E).run_exhaustive()
            assert c1[0] == c2[0]
            assert c1[2] == c2[2]


def test_sign_zero_matches_brute_automorphisms():
    for D in connected_diagrams(2, ("h",), prune=False):
        if len(D.partner) > 9:
            continue
        odd = -1 in brute_automorphism_signs(D)
        assert (canonical_form(D)[1] == 0) == odd


def test_as_involution():
    from nloop.diagrams import as_flip

    D = theta()
    assert as_flip(as_flip(D, 0), 0) == D
    once = apply_AS(D, 0)
    assert once == LinearCombo.of(D)
    twice = LinearCombo()
    for X, x in once.items():
        for Y, y in apply_AS(X, 0).items():
            twice._add(Y, x * y, canonical=True)
    assert twice == LinearCombo.of(D)


def test_ihx_on_theta_keeps_class():
    B = Basis(SpaceId("Bn", 1, loops=2))
    D = theta()
    for e in internal_edges(D):
        assert B.coords(apply_IHX(D, e)) == B.coords(LinearCombo.of(D))


def test_stu_two_chords():
    # chords (0, 2) and (1, 3) on one line: swapping legs 1 and 2 gives (0,1)(2,3)-type
    b = Builder()
    legs = [b.leg(on_line("x", i)) for i in range(4)]
    b.join(legs[0], legs[2])
    b.join(legs[1], legs[3])
    D = b.build()
    res = apply_STU(D, ("x", 1))
    assert len(res) == 2
    shapes = sorted((len(E.tri), c) for E, c in res.items())
    assert shapes[0][0] == 0 and shapes[1][0] == 1


def test_expand_labels_examples():
    D = theta()
    one = Diagram(D.tri, D.legs, D.partner, {0: parse_label("1")})
    assert expand_labels(one, 5) == LinearCombo.of(D)
    W = wheel(2)
    tl = Diagram(W.tri, W.legs, W.partner, {W.tri[0][1]: parse_label("t")})
    res = expand_labels(tl, 6)
    from nloop.diagrams import insert_legs

    for k in range(0, 5):
        ref = LinearCombo.of(insert_legs(W, W.tri[0][1], k))
        coeff = [x for E, x in ref.items()]
        if coeff:
            (E, s), = ref.items()
            assert res.coeff(E) == s * F(1, [1, 1, 2, 6, 24][k])


def test_expand_odd_label_on_theta():
    # the one-leg theta is zero by AS, so the (t - t^-1) label contributes only
    # through diagrams without an odd automorphism; check coefficients on the
    # raw leg insertions instead
    from nloop.diagrams import insert_legs

    D = theta()
    lab = Diagram(D.tri, D.legs, D.partner, {0: parse_label("t-t^-1")})
    assert not expand_labels(lab, 3)
    assert canonical_form(insert_legs(D, 0, 1))[1] == 0
    W = wheel(2)
    W = Diagram(W.tri, [(W.legs[0][0], ("f", "x")), (W.legs[1][0], ("f", "y"))], W.partner)
    lw = Diagram(W.tri, W.legs, W.partner, {W.tri[0][1]: parse_label("t-t^-1")})
    res = expand_labels(lw, 5)
    for k, c in ((1, 2), (3, F(1, 3))):
        (E, s), = LinearCombo.of(insert_legs(W, W.tri[0][1], k)).items()
        assert res.coeff(E) == s * c


def quotient4():
    return Basis(SpaceId("Bconn", 4))


def test_move_label_keeps_class():
    B = quotient4()
    W = wheel(2)
    for lab in ("t", "t^-1"):
        for dart in W.tri[0]:
            D = Diagram(W.tri, W.legs, W.partner, {dart: parse_label(lab)})
            before = B.coords(LinearCombo.of(D).map_terms(lambda X: expand_labels(X, 4)))
            after = B.coords(move_label(D, dart).map_terms(lambda X: expand_labels(X, 4)))
            assert before == after
    leg = W.legs[0][0]
    D = Diagram(W.tri, W.legs, W.partner, {leg: parse_label("t")})
    assert B.coords(LinearCombo.of(D).map_terms(lambda X: expand_labels(X, 4))) == \
        B.coords(move_label(D, leg).map_terms(lambda X: expand_labels(X, 4)))
    assert move_label(W, W.tri[0][0]) == LinearCombo.of(W)
    with pytest.raises(UnsupportedLabel):
        move_label(Diagram(W.tri, W.legs, W.partner, {0: parse_label("t^2")}), 0)


def test_degree_loops_union():
    assert degree(theta()) == 1 and loop_number(theta()) == 2
    assert degree(wheel(4)) == 4 and loop_number(wheel(4)) == 1
    U = disjoint_union(theta(), wheel(2))
    assert degree(U) == 3 and len(U.tri) == 4
    b = Builder()
    b.join(b.leg(on_line("x", 0)), b.leg(on_line("x", 1)))
    c = Builder()
    c.join(c.leg(on_line("y", 0)), c.leg(on_line("y", 1)))
    with pytest.raises(SkeletonMismatch):
        disjoint_union(b.build(), c.build())


def test_malformed_rejected():
    with pytest.raises(Malformed):
        Diagram([(0, 1, 2)], [], [1, 0, 2])
