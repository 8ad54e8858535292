"""Command line interface: nloop <command> [options]."""
import argparse
import csv
import hashlib
import io
import json
import random
import sys
import time
from fractions import Fraction
from importlib import resources

from . import __version__
from .algebra import qstr
from .errors import InputError, NloopError, ParseError, TooLarge

EXIT_OK, EXIT_FAIL, EXIT_INPUT, EXIT_LIMIT = 0, 1, 2, 3


# --- reports --------------------------------------------------------------------

class RunReport:
    """Deterministic record of one invocation.  Wall time is only included
    when asked for, so identical inputs give byte-identical reports."""

    def __init__(self, argv, seed=None):
        self.command = list(argv)
        self.seed = seed
        self.inputs = {}
        self.outputs = {}
        self.certificates = []
        self.wall_time = None

    def add_input(self, path):
        with open(path, "rb") as fh:
            self.inputs[path] = hashlib.sha256(fh.read()).hexdigest()

    def check(self, name, ok, **detail):
        self.certificates.append({"name": name, "ok": bool(ok), "detail": _jsonable(detail)})
        return ok

    @property
    def ok(self):
        return all(c["ok"] for c in self.certificates)

    def to_json(self):
        out = {
            "version": __version__,
            "command": self.command,
            "seed": self.seed,
            "inputs": self.inputs,
            "outputs": _jsonable(self.outputs),
            "certificates": self.certificates,
            "status": "PASS" if self.ok else "FAIL",
        }
        if self.wall_time is not None:
            out["wall_time"] = round(self.wall_time, 3)
        return out


def report_schema():
    with resources.files("nloop.data").joinpath("run_report.schema.json").open() as fh:
        return json.load(fh)


def _jsonable(x):
    if isinstance(x, Fraction):
        return qstr(x)
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if hasattr(x, "to_json"):
        return _jsonable(x.to_json())
    if x is None or isinstance(x, (bool, int, float, str)):
        return x
    return str(x)


def emit(report, fmt, out, table=None):
    if fmt == "json":
        out.write(json.dumps(report.to_json(), indent=2, sort_keys=True) + "\n")
        return
    if fmt == "csv":
        if table is None:
            raise InputError("this command has no tabular output; use --format json or text")
        w = csv.writer(out, lineterminator="\n")
        w.writerow(table[0])
        for row in table[1]:
            w.writerow([_jsonable(x) for x in row])
        return
    for k, v in report.outputs.items():
        out.write(f"{k}: {_text(v)}\n")
    for c in report.certificates:
        out.write(f"{'PASS' if c['ok'] else 'FAIL'} {c['name']}\n")
    if report.wall_time is not None:
        out.write(f"wall_time: {report.wall_time:.3f}s\n")


def _text(v):
    v = _jsonable(v)
    if isinstance(v, str):
        return v
    return json.dumps(v, sort_keys=True)


def parse_range(text):
    """'3' or '1..5' (inclusive)."""
    try:
        if ".." in text:
            lo, hi = text.split("..")
            return list(range(int(lo), int(hi) + 1))
        return [int(text)]
    except ValueError:
        raise InputError(f"bad integer range {text!r}") from None


def _read_combo(path, report, max_vertices):
    from .formats import read_diagram_file

    try:
        c = read_diagram_file(path)
    except OSError as e:
        raise InputError(f"cannot read {path}: {e.strerror}") from None
    report.add_input(path)
    big = max((len(D.tri) for D in c), default=0)
    if big > max_vertices:
        raise TooLarge(f"input has a diagram with {big} trivalent vertices (limit {max_vertices})")
    return c


def _read_linking(path, report):
    from .linking import TangleLinkingData

    try:
        with open(path) as fh:
            data = json.load(fh)
    except OSError as e:
        raise InputError(f"cannot read {path}: {e.strerror}") from None
    except json.JSONDecodeError as e:
        raise ParseError(f"invalid JSON: {e.msg}", e.lineno, e.colno) from None
    report.add_input(path)
    try:
        return TangleLinkingData.of(data["U"], data["V"], data["W"])
    except (KeyError, TypeError, ValueError) as e:
        raise InputError(f"linking data needs integer blocks U, V, W: {e}") from None


def _space(args):
    from .spaces import SpaceId

    try:
        return SpaceId.parse(args.space, args.degree)
    except (ValueError, IndexError) as e:
        raise InputError(str(e)) from None


# --- commands -----------------------------------------------------------------------

def cmd_reduce(args, report):
    from .formats import diagram_to_text
    from .spaces import quotient_basis

    c = _read_combo(args.file, report, args.max_vertices)
    B = quotient_basis(_space(args), args.pivot_order)
    vec = B.coords(c)
    report.outputs["space"] = args.space
    report.outputs["dims"] = B.dims()
    report.outputs["coords"] = vec
    if args.show_basis and hasattr(B, "basis"):
        report.outputs["basis"] = [diagram_to_text(D) for D in B.basis]


def cmd_spaces_dump(args, report):
    from .formats import diagram_to_text
    from .spaces import quotient_basis

    if 2 * args.degree > args.max_vertices:
        raise TooLarge(f"degree {args.degree} needs more than {args.max_vertices} vertices")
    B = quotient_basis(_space(args), args.pivot_order)
    report.outputs["space"] = args.space
    report.outputs["dims"] = B.dims()
    if hasattr(B, "basis"):
        report.outputs["basis"] = [diagram_to_text(D) for D in B.basis]


def _linking_input(args, report):
    from .linking import build_surgery_matrix, sample_tangle_data

    if args.data:
        td = _read_linking(args.data, report)
    else:
        td = sample_tangle_data(args.g, 1, args.seed)[0]
    report.outputs["tangle"] = td.to_json()
    return build_surgery_matrix(td)


def cmd_linking_invert(args, report):
    from .linking import appendix_b_certificate, check_inverse, invert_over_delta, q_support

    M = _linking_input(args, report)
    delta, Q = invert_over_delta(M)
    report.outputs["delta"] = str(delta.poly)
    report.outputs["q_support"] = list(q_support(Q))
    if args.show_matrix:
        report.outputs["Q"] = [[str(x) for x in row] for row in Q]
    report.check("inverse_exact", check_inverse(M, delta, Q))
    cert = appendix_b_certificate(M, (delta, Q))
    report.check("appendix_b", cert.ok, **cert.to_json())


def cmd_aarhus_integrate(args, report):
    from .aarhus import GaussianPart, NuData, aarhus_integral, log_combo, loop_project, normalize_unknots
    from .formats import combo_to_text
    from .linking import invert_over_delta, signature_counts

    M = _linking_input(args, report)
    P = _read_combo(args.p, report, args.max_vertices)
    delta, Q = invert_over_delta(M)
    N = args.truncate
    G = GaussianPart.from_inverse(delta, Q, N + 1)
    raw = aarhus_integral(P, G, N, delta)
    sp, sm = signature_counts(M)
    normed = normalize_unknots(raw, sp, sm, NuData.default(max(N, 2)), N) if args.normalize else raw
    report.outputs["delta"] = str(delta.poly)
    report.outputs["signature"] = [sp, sm]
    if args.loops is not None:
        # group-like results are projected after taking the logarithm
        if normed.constant_term() == 1:
            normed = log_combo(normed, N)
        normed = loop_project(normed, args.loops)
    report.outputs["result"] = combo_to_text(normed)
    report.outputs["terms"] = len(normed)


def cmd_aarhus_clasper(args, report):
    from .aarhus import clasper_diagram, clasper_difference
    from .formats import combo_to_text, diagram_to_text
    from .linking import is_half_integer
    from .sl2 import combo_weight, nonvanishing_certificate

    M = _linking_input(args, report)
    C = clasper_diagram(args.n, M.g)
    R = clasper_difference(M, C)
    report.outputs["clasper"] = diagram_to_text(C)
    report.outputs["r"] = R.r
    report.outputs["label_coefficients"] = list(R.coefficients)
    report.outputs["leading"] = combo_to_text(R.leading)
    report.outputs["sl2_leading"] = str(combo_weight(R.leading))
    report.check("r_half_integer", is_half_integer(R.r), r=R.r)
    report.check("vanishes_at_h0", R.vanishes_at_zero)
    report.check("leading_is_r_times_closed_clasper", R.leading_matches)
    report.check("leading_nonzero_sl2", nonvanishing_certificate(R.leading))


def cmd_weights_sl2(args, report):
    from .sl2 import combo_weight, sl2_brute, sl2_weight

    c = _read_combo(args.diagram, report, args.max_vertices)
    report.outputs["weight"] = str(combo_weight(c))
    if args.oracle:
        total = None
        for D, x in c.items():
            w = sl2_brute(D).scale(x)
            total = w if total is None else total + w
        report.outputs["oracle"] = str(total) if total is not None else "0"
        agree = all(sl2_weight(D) == sl2_brute(D) for D in c)
        report.check("oracle_agrees", agree)


def cmd_tables(args, report):
    from . import tables as T
    from .formats import diagram_to_text

    which = args.table
    if which == "two-loop":
        header = ["a", "b1", "b2", "p", "q", "correction", "closed_form_ok"]
        rows = []
        for a in parse_range(args.a):
            s = T.solve_two_loop(a, Fraction(args.b1), Fraction(args.b2))
            rows.append([a, Fraction(args.b1), Fraction(args.b2), s.p, s.q, s.three_term()[2], s.closed_form_ok])
            report.check(f"closed_form_a={a}", s.closed_form_ok)
    elif which == "thetas":
        header = ["a", "theta1_deg3", "theta1_deg5", "theta2_deg3", "theta2_deg5", "determinant"]
        rows = []
        for a in parse_range(args.a):
            t = T.build_thetas(a)
            rows.append([a, *t.coeffs1, *t.coeffs2, t.determinant])
    elif which == "k-examples":
        header = ["a", "det01", "det12", "case_ok"]
        rows = []
        for a in parse_range(args.a):
            k = T.k_examples(a)
            rows.append([a, k.det01, k.det12, k.case_ok])
    elif which == "theta-count":
        header = ["g", "value"]
        rows = [[g, T.theta_mn_count(g)] for g in parse_range(args.g)]
    elif which == "xset":
        header = ["index", "diagram"]
        rows = [[i, diagram_to_text(D)] for i, D in enumerate(T.xset_3loop())]
    elif which == "crude-bound":
        header = ["n", "g", "value"]
        rows = [[n, g, T.crude_bound(n, g)] for n in parse_range(args.n) for g in parse_range(args.g)]
    else:
        raise InputError(f"unknown table {which!r}")
    report.outputs["table"] = which
    report.outputs["columns"] = header
    report.outputs["rows"] = rows
    return header, rows


def cmd_reproduce(args, report):
    from .reproduce import SECTIONS

    names = list(SECTIONS) if args.section == "all" else [args.section]
    for name in names:
        if name not in SECTIONS:
            raise InputError(f"unknown section {name!r}; choose from {', '.join(SECTIONS)}")
        SECTIONS[name](report, args)


# --- parser ---------------------------------------------------------------------------

def _common():
    p = argparse.ArgumentParser(add_help=False)
    p.add_argument("--format", choices=("json", "csv", "text"), default="text")
    p.add_argument("--seed", type=int, default=7)
    p.add_argument("--truncate", type=int, default=7)
    p.add_argument("--max-vertices", type=int, default=12)
    p.add_argument("--timing", action="store_true", help="include wall time in the report")
    return p


def build_parser():
    common = _common()
    ap = argparse.ArgumentParser(prog="nloop", description="Jacobi diagram computations for n-loop invariants.")
    ap.add_argument("--version", action="version", version=__version__)
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("reduce", parents=[common], help="coordinates of a combo in a quotient basis")
    p.add_argument("file")
    p.add_argument("--space", required=True)
    p.add_argument("--degree", type=int, required=True)
    p.add_argument("--pivot-order", choices=("asc", "desc"), default="asc")
    p.add_argument("--show-basis", action="store_true")
    p.set_defaults(func=cmd_reduce)

    sp = sub.add_parser("spaces", help="quotient spaces").add_subparsers(dest="sub", required=True)
    p = sp.add_parser("dump", parents=[common])
    p.add_argument("--space", required=True)
    p.add_argument("--degree", type=int, required=True)
    p.add_argument("--pivot-order", choices=("asc", "desc"), default="asc")
    p.set_defaults(func=cmd_spaces_dump)

    sp = sub.add_parser("linking", help="equivariant linking matrices").add_subparsers(dest="sub", required=True)
    p = sp.add_parser("invert", parents=[common])
    p.add_argument("--data", help="JSON file with integer blocks U, V, W")
    p.add_argument("--g", type=int, default=1, help="genus for random data when --data is absent")
    p.add_argument("--show-matrix", action="store_true")
    p.set_defaults(func=cmd_linking_invert)

    sp = sub.add_parser("aarhus", help="rational Aarhus integral").add_subparsers(dest="sub", required=True)
    p = sp.add_parser("integrate", parents=[common])
    p.add_argument("--data", help="JSON linking data")
    p.add_argument("--g", type=int, default=1)
    p.add_argument("--p", required=True, help="non-Gaussian part, diagram file with legs x1..x4g and h")
    p.add_argument("--loops", type=int)
    p.add_argument("--normalize", action="store_true", help="divide by the unknot factors")
    p.set_defaults(func=cmd_aarhus_integrate)
    p = sp.add_parser("clasper", parents=[common])
    p.add_argument("--data", help="JSON linking data")
    p.add_argument("--g", type=int, default=1)
    p.add_argument("--n", type=int, default=2, help="loop number of the clasper")
    p.set_defaults(func=cmd_aarhus_clasper)

    sp = sub.add_parser("weights", help="weight systems").add_subparsers(dest="sub", required=True)
    p = sp.add_parser("sl2", parents=[common])
    p.add_argument("--diagram", required=True)
    p.add_argument("--oracle", action="store_true")
    p.set_defaults(func=cmd_weights_sl2)

    p = sub.add_parser("tables", parents=[common], help="two-loop and counting tables")
    p.add_argument("table", choices=("two-loop", "thetas", "k-examples", "theta-count", "xset", "crude-bound"))
    p.add_argument("--a", default="1")
    p.add_argument("--b1", default="1")
    p.add_argument("--b2", default="0")
    p.add_argument("--g", default="1..4")
    p.add_argument("--n", default="2")
    p.set_defaults(func=cmd_tables)

    p = sub.add_parser("reproduce", parents=[common], help="rerun the computations and report PASS/FAIL")
    p.add_argument("section", help="two-loop, theta-count, appendixB, appendixA, crude-bound, xset or all")
    p.add_argument("--samples", type=int, default=200)
    p.set_defaults(func=cmd_reproduce)
    return ap


def main(argv=None, out=None):
    out = out or sys.stdout
    argv = list(sys.argv[1:] if argv is None else argv)
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as e:
        return EXIT_INPUT if e.code else EXIT_OK
    random.seed(args.seed)
    report = RunReport(["nloop", *argv], args.seed)
    start = time.perf_counter()
    try:
        table = args.func(args, report)
    except NloopError as e:
        sys.stderr.write(f"nloop: error: {e}\n")
        return e.exit_code
    except (ZeroDivisionError, ValueError) as e:
        sys.stderr.write(f"nloop: error: {e}\n")
        return EXIT_INPUT
    if args.timing:
        report.wall_time = time.perf_counter() - start
    buf = io.StringIO()
    try:
        emit(report, args.format, buf, table)
    except NloopError as e:
        sys.stderr.write(f"nloop: error: {e}\n")
        return e.exit_code
    out.write(buf.getvalue())
    return EXIT_OK if report.ok else EXIT_FAIL


def main_entry():
    sys.exit(main())
