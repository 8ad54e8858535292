"""Reproduction blocks run by `nloop reproduce SECTION`."""
import random
from fractions import Fraction


def two_loop(report, args):
    from .tables import build_thetas, closed_form_pq, k_examples, solve_two_loop

    rng = random.Random(args.seed)
    for a in range(-10, 11):
        T = build_thetas(a)
        det = Fraction(16 * a - 4, 3)
        report.check(f"theta_coefficients a={a}",
                     T.coeffs1 == (1, -2 * a + Fraction(1, 6)) and T.coeffs2 == (-2, Fraction(28 * a - 5, 3)),
                     theta1=T.coeffs1, theta2=T.coeffs2)
        report.check(f"determinant a={a}", T.determinant == det and det != 0, value=T.determinant)
        K = k_examples(a)
        report.check(f"k_examples a={a}", K.case_ok, det01=K.det01, det12=K.det12)
    for a in range(-5, 6):
        ok = True
        for _ in range(10):
            b1 = Fraction(rng.randint(-20, 20), rng.randint(1, 9))
            b2 = Fraction(rng.randint(-20, 20), rng.randint(1, 9))
            s = solve_two_loop(a, b1, b2)
            ok = ok and s.closed_form_ok and (s.p, s.q) == closed_form_pq(a, b1, b2)
        report.check(f"corollary a={a}", ok)


def theta_count(report, args):
    from .tables import theta_mn_count

    counts = {g: theta_mn_count(g) for g in range(1, 13)}
    report.outputs["theta_counts"] = counts
    for g, c in counts.items():
        report.check(f"theta_count g={g}", c == g * g + 2 * g, count=c)


def appendix_b(report, args):
    from .linking import appendix_b_certificate, build_surgery_matrix, check_inverse, invert_over_delta, q_support

    for g in (1, 2):
        fails = 0
        worst = (0, 0)
        for td in _samples(g, args):
            M = build_surgery_matrix(td)
            delta, Q = invert_over_delta(M)
            lo, hi = q_support(Q)
            worst = (min(worst[0], lo), max(worst[1], hi))
            if not (check_inverse(M, delta, Q) and appendix_b_certificate(M, (delta, Q)).ok):
                fails += 1
        report.check(f"appendixB g={g}", fails == 0, samples=args.samples, failures=fails)
        report.check(f"q_support g={g}", -g <= worst[0] and worst[1] <= g, support=list(worst))


def _samples(g, args):
    from .linking import sample_tangle_data

    return sample_tangle_data(g, args.samples, args.seed + g)


def appendix_a(report, args):
    from .aarhus import clasper_diagram, clasper_difference
    from .linking import build_surgery_matrix, is_half_integer, sample_tangle_data
    from .sl2 import family_diagram, family_ratio, nonvanishing_certificate

    ratios = {}
    for n, d in ((2, 1), (2, 2), (3, 1)):
        q, w = family_ratio(n, d)
        ratios[f"{n},{d}"] = q
        report.check(f"family_nonzero n={n} d={d}", nonvanishing_certificate(family_diagram(n, d)), weight=str(w))
    vals = set(ratios.values())
    report.outputs["family_ratios"] = ratios
    report.check("family_ratio_constant", len(vals) == 1 and None not in vals and 0 not in vals)
    bad = 0
    for td in sample_tangle_data(1, 20, args.seed):
        R = clasper_difference(build_surgery_matrix(td), clasper_diagram(2, 1))
        if not (is_half_integer(R.r) and R.leading_matches and nonvanishing_certificate(R.leading)):
            bad += 1
    report.check("clasper_pipeline", bad == 0, samples=20, failures=bad)


def crude_bound(report, args):
    from .tables import crude_bound as cb, legless_shape_count

    report.check("m2", legless_shape_count(2) == 2)
    report.check("m3", legless_shape_count(3) == 5)
    table = {f"{n},{g}": cb(n, g) for n in (2, 3) for g in range(1, 5)}
    report.outputs["crude_bound"] = table
    report.check("bound n=2 g=1", table["2,1"] == 686)
    report.check("bound n=2 g=2", table["2,2"] == 1458)


def xset(report, args):
    from .diagrams import loop_number
    from .tables import xset_3loop, xset_codes

    X = xset_3loop()
    report.check("xset_size", len(X) == 11, size=len(X))
    report.check("xset_three_loop", all(loop_number(D) == 3 for D in X))
    report.check("xset_distinct", len(set(xset_codes())) == len(X))


SECTIONS = {
    "two-loop": two_loop,
    "theta-count": theta_count,
    "appendixB": appendix_b,
    "appendixA": appendix_a,
    "crude-bound": crude_bound,
    "xset": xset,
}
