from fractions import Fraction as F

import pytest
import sympy

from nloop.aarhus import (
    H,
    GaussianPart,
    NuData,
    aarhus_integral,
    brute_gaussian_pair,
    clasper_diagram,
    clasper_difference,
    exp_combo,
    log_combo,
    loop_project,
    normalize_unknots,
    pair,
    power_combo,
    theta,
    wheel,
    wheels_series,
    wick_pair,
    xmark,
)
from nloop.algebra import parse_label
from nloop.diagrams import (
    Builder,
    Diagram,
    LinearCombo,
    degree,
    expand_labels,
    insert_legs,
    loop_number,
)
from nloop.errors import InsufficientNu, NonUnitConstant, PPartViolation
from nloop.linking import build_surgery_matrix, is_half_integer, sample_tangle_data

X = ("f", "x")


def strut(a=X, b=X, label=None):
    bb = Builder()
    bb.join(bb.leg(a), bb.leg(b), label)
    return bb.build()


def relabel(D, marks):
    """Replace the leg marks of D in order."""
    return Diagram(D.tri, [(d, m) for (d, _), m in zip(D.legs, marks)], D.partner, D.labels)


def expanded(c, N):
    out = LinearCombo()
    for D, x in c.items():
        for E, y in expand_labels(D, N).items():
            out._add(E, x * y, canonical=True)
    return out


def test_pair_with_one_is_identity():
    D = wheel(3)
    assert pair(LinearCombo.one(), LinearCombo.of(D), [X]) == LinearCombo.of(D)


def join_legs(D, label=None):
    """D with its two legs removed and their edges spliced, by hand."""
    (a, _), (b, _) = D.legs
    pa, pb = D.partner[a], D.partner[b]
    b_ = Builder()
    m = {}
    for v in D.tri:
        m.update(zip(v, b_.vertex()))
    done = set()
    for d in m:
        if d in done or d in (pa, pb):
            continue
        b_.join(m[d], m[D.partner[d]])
        done |= {d, D.partner[d]}
    b_.join(m[pa], m[pb], label)
    return b_.build()


def test_strut_against_two_leg_diagram_gives_two_gluings():
    W = wheel(2, X)
    for lab in (None, parse_label("t")):
        res = pair(LinearCombo.of(strut(label=lab)), LinearCombo.of(W), [X])
        assert res == LinearCombo.of(join_legs(W, lab), 2)
        for E, _ in res.items():
            assert degree(E) == degree(W) + 1 - 2


def test_strut_against_fork_is_zero():
    b = Builder()
    v = b.vertex()
    b.join(v[0], b.leg(X))
    b.join(v[1], b.leg(X))
    b.join(v[2], b.leg(H))
    assert not pair(LinearCombo.of(strut()), LinearCombo.of(b.build()), [X])


def test_vertexless_circle_is_an_error():
    with pytest.raises(PPartViolation):
        pair(LinearCombo.of(strut()), LinearCombo.of(strut()), [X])


def test_mismatched_leg_counts_pair_to_zero():
    assert not pair(LinearCombo.of(strut()), LinearCombo.of(wheel(3, X)), [X])


def gaussian(seed=1, order=6):
    d = sample_tangle_data(1, 1, seed)[0]
    return GaussianPart.from_matrix(build_surgery_matrix(d), order)


def sample_p():
    x1, x2, x3, x4 = (xmark(i) for i in range(1, 5))
    return [
        relabel(wheel(2), [x1, x2]),
        relabel(wheel(2), [x3, x4]),
        relabel(wheel(4), [x1, x2, H, x3]),
        relabel(wheel(4), [x1, x1, x2, x4]),
        relabel(theta_with_legs(), [x3, x3]),
    ]


def theta_with_legs():
    return insert_legs(theta(), 0, 2)


def test_wick_matches_brute_bijections():
    G = gaussian()
    for D in sample_p():
        P = LinearCombo.of(D, F(3, 2))
        assert expanded(wick_pair(G, P), 5) == expanded(brute_gaussian_pair(G, P), 5)


def test_six_leg_oracle():
    G = gaussian(seed=4, order=5)
    x1, x2, x3 = xmark(1), xmark(2), xmark(3)
    D = relabel(wheel(6), [x1, x2, x3, x1, x2, x3])
    P = LinearCombo.of(D)
    assert expanded(wick_pair(G, P), 6) == expanded(brute_gaussian_pair(G, P), 6)


def test_gaussian_equivariance_checked():
    G = gaussian()
    bad = [row[:] for row in G.series]
    bad[0][1] = bad[0][1] + bad[0][1]
    with pytest.raises(ValueError):
        GaussianPart(bad)


def test_aarhus_integral_basics():
    G = gaussian()
    assert aarhus_integral(LinearCombo.one(), G, 4) == LinearCombo.one()
    P = LinearCombo.of(sample_p()[0])
    a = aarhus_integral(P, G, 4)
    assert a and aarhus_integral(P * F(5, 3), G, 4) == a * F(5, 3)
    for E, _ in a.items():
        assert all(m == H for _, m in E.legs)


def test_log_exp_roundtrip():
    for coeffs in ((1, 0, 0), (F(1, 2), F(-2, 3), 0), (2, 1, F(1, 7))):
        beta = LinearCombo()
        for D, c in zip((theta(), wheel(2), wheel(4)), coeffs):
            if c:
                beta._add(D, F(c))
        N = 5
        assert log_combo(exp_combo(beta, N, N), N) == beta.truncate(N)
    with pytest.raises(NonUnitConstant):
        log_combo(LinearCombo.of(theta()), 3)


def test_loop_project():
    beta = LinearCombo.of(wheel(2), F(1, 48)) + LinearCombo.of(wheel(4), F(-1, 5760)) + LinearCombo.of(theta())
    c = log_combo(exp_combo(beta, 4, 4), 4)
    one = loop_project(c, 1)
    assert one == LinearCombo.of(wheel(2), F(1, 48)) + LinearCombo.of(wheel(4), F(-1, 5760))
    assert loop_project(one, 1) == one
    assert loop_project(c, 2) == LinearCombo.of(theta())
    # products of connected pieces are not projected
    assert not loop_project(power_combo(beta, 2, 4), 1)


def test_wheel_coefficients_against_sympy():
    h = sympy.Symbol("h")
    ser = sympy.series(sympy.log(sympy.sinh(h / 2) / (h / 2)) / 2, h, 0, 14).removeO()
    got = wheels_series(12)
    nu = NuData.default(12)
    for k in range(13):
        ref = F(str(ser.coeff(h, k)))
        assert got[k] == ref
        if k % 2 == 0 and k:
            assert nu.coeffs[k] == ref
    with pytest.raises(InsufficientNu):
        NuData.default(14)


def test_normalize_unknots():
    nu = NuData.default(4)
    N = 4
    c = LinearCombo.one() + LinearCombo.of(theta(), F(1, 3))
    assert normalize_unknots(c, 0, 0, nu, N) == c
    nn = nu.self_pairing(N)
    both = normalize_unknots(LinearCombo.one(), 1, 1, nu, N)
    assert both == power_combo(nn, 2, N)
    step = normalize_unknots(normalize_unknots(c, 1, 0, nu, N), 0, 1, nu, N)
    assert step == normalize_unknots(c, 1, 1, nu, N)
    plus = normalize_unknots(LinearCombo.one(), 1, 0, nu, N)
    assert plus.coeff(theta()) == F(1, 16) + nn.coeff(theta())
    with pytest.raises(InsufficientNu):
        normalize_unknots(c, 1, 0, nu, 6)


def test_clasper_pipeline():
    for d in sample_tangle_data(1, 8, 21):
        M = build_surgery_matrix(d)
        for n in (1, 2):
            C = clasper_diagram(n, 1)
            R = clasper_difference(M, C)
            assert is_half_integer(R.r)
            assert R.leading_matches
            assert R.vanishes_at_zero
            assert loop_number(R.closed) == n + 1 and not R.closed.legs
            assert R.coefficients[1] == -1
            # the leading term is the closed diagram with two h-legs inserted
            (D, c), = R.leading.items()
            assert loop_number(D) == n + 1 and len(D.legs) == 2
    with pytest.raises(ValueError):
        clasper_difference(M, wheel(2))
