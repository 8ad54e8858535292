"""Text and JSON formats for diagrams and linear combinations.

Text grammar::

    combo   := term (("+" | "-") term)*
    term    := [rational "*"] diagram
    diagram := "diagram" "{" "tri:" vertex* ";" "uni:" leg* ";" "edges:" edge* ";" "}"
    vertex  := name "(" name "," name "," name ")"
    leg     := name "=" label ["@" ("line" | "circle") [suffix] ":" int]
    edge    := name "-" name ["[" expression "]"]

Edge labels are read from the first-named dart.  A leg ``x@line:2`` sits
at position 2 of the line named ``x``; a bare leg ``h`` is a free mark.
"""
import json
import re
from fractions import Fraction

from .algebra import DeltaFraction, HSeries, parse_label, qstr
from .diagrams import Builder, Diagram, LinearCombo
from .errors import Malformed, ParseError

_TOK = re.compile(r"""
    (?P<ws>\s+|\#[^\n]*)
  | (?P<num>\d+(?:/\d+)?)
  | (?P<name>[A-Za-z_][A-Za-z0-9_']*)
  | (?P<sym>[{}();:=,@*+\-\[\]/^])
""", re.X)


class _Lexer:
    def __init__(self, text):
        self.text = text
        self.toks = []
        pos, line, col = 0, 1, 1
        while pos < len(text):
            m = _TOK.match(text, pos)
            if not m:
                raise ParseError(f"unexpected character {text[pos]!r}", line, col)
            s = m.group(0)
            if m.lastgroup != "ws":
                self.toks.append((m.lastgroup, s, line, col, pos))
            for ch in s:
                if ch == "\n":
                    line, col = line + 1, 1
                else:
                    col += 1
            pos = m.end()
        self.toks.append(("eof", "", line, col, pos))
        self.i = 0

    def peek(self):
        return self.toks[self.i]

    def next(self):
        t = self.toks[self.i]
        self.i += 1
        return t

    def error(self, msg, tok=None):
        tok = tok or self.peek()
        return ParseError(msg, tok[2], tok[3])

    def expect(self, value):
        t = self.next()
        if t[1] != value:
            raise self.error(f"expected {value!r}, found {t[1] or 'end of input'!r}", t)
        return t

    def name(self):
        t = self.next()
        if t[0] != "name":
            raise self.error(f"expected a name, found {t[1] or 'end of input'!r}", t)
        return t[1]

    def bracketed(self):
        """Raw text between [ and the matching ]."""
        start = self.expect("[")
        depth = 1
        while True:
            t = self.next()
            if t[0] == "eof":
                raise self.error("unterminated label", start)
            if t[1] == "[":
                depth += 1
            elif t[1] == "]":
                depth -= 1
                if depth == 0:
                    return self.text[start[4] + 1:t[4]], start


def _parse_diagram(lx):
    lx.expect("diagram")
    lx.expect("{")
    b = Builder()
    darts = {}
    names_seen = set()

    def fresh(name, tok):
        if name in darts or name in names_seen:
            raise lx.error(f"name {name!r} used twice", tok)

    lx.expect("tri")
    lx.expect(":")
    while lx.peek()[1] != ";":
        tok = lx.peek()
        vname = lx.name()
        if vname in names_seen:
            raise lx.error(f"name {vname!r} used twice", tok)
        names_seen.add(vname)
        lx.expect("(")
        ds = []
        for k in range(3):
            t = lx.peek()
            dn = lx.name()
            fresh(dn, t)
            ds.append((dn, t))
            if k < 2:
                lx.expect(",")
        lx.expect(")")
        v = b.vertex()
        for (dn, _), d in zip(ds, v):
            darts[dn] = d
    lx.expect(";")
    lx.expect("uni")
    lx.expect(":")
    while lx.peek()[1] != ";":
        tok = lx.peek()
        ln = lx.name()
        fresh(ln, tok)
        lx.expect("=")
        label = lx.name()
        mark = ("f", label)
        if lx.peek()[1] == "@":
            lx.next()
            kt = lx.peek()
            kind = lx.name()
            if kind.startswith("line"):
                k = "L"
            elif kind.startswith("circle"):
                k = "C"
            else:
                raise lx.error(f"unknown skeleton kind {kind!r}", kt)
            lx.expect(":")
            pt = lx.next()
            if pt[0] != "num" or "/" in pt[1]:
                raise lx.error("expected an integer position", pt)
            mark = (k, label, int(pt[1]))
        darts[ln] = b.leg(mark)
    lx.expect(";")
    lx.expect("edges")
    lx.expect(":")
    while lx.peek()[1] != ";":
        ta = lx.peek()
        a = lx.name()
        lx.expect("-")
        tb = lx.peek()
        c = lx.name()
        for n, t in ((a, ta), (c, tb)):
            if n not in darts:
                raise lx.error(f"unknown half-edge {n!r}", t)
            if darts[n] in b.partner:
                raise lx.error(f"half-edge {n!r} is already joined", t)
        if a == c:
            raise lx.error("an edge needs two distinct half-edges", ta)
        label = None
        if lx.peek()[1] == "[":
            raw, st = lx.bracketed()
            try:
                label = parse_label(raw)
            except ParseError as e:
                col = st[3] + 1 + (e.column or 1) - 1
                raise ParseError(f"bad label {raw!r}: {e.args[0].split(' (')[0]}", st[2], col) from None
        b.join(darts[a], darts[c], label)
    lx.expect(";")
    end = lx.expect("}")
    missing = [n for n, d in darts.items() if d not in b.partner]
    if missing:
        raise lx.error(f"half-edge {sorted(missing)[0]!r} is not on any edge", end)
    try:
        return b.build()
    except Malformed as e:
        raise lx.error(str(e), end) from None


def parse_diagram(text):
    lx = _Lexer(text)
    D = _parse_diagram(lx)
    if lx.peek()[0] != "eof":
        raise lx.error("trailing input after diagram")
    return D


def parse_combo(text):
    lx = _Lexer(text)
    out = LinearCombo()
    sign = 1
    first = True
    while True:
        t = lx.peek()
        if t[1] in "+-" and t[0] == "sym":
            lx.next()
            sign = -1 if t[1] == "-" else 1
        elif not first:
            raise lx.error("expected '+' or '-' between terms")
        coeff = Fraction(1)
        if lx.peek()[0] == "num":
            coeff = Fraction(lx.next()[1])
            lx.expect("*")
        out = out + LinearCombo.of(_parse_diagram(lx), sign * coeff)
        first = False
        sign = 1
        if lx.peek()[0] == "eof":
            return out


def parse_any(text):
    """A file holds either text-grammar input or its JSON mirror."""
    s = text.lstrip()
    if s.startswith("{") or s.startswith("["):
        try:
            data = json.loads(text)
        except json.JSONDecodeError as e:
            raise ParseError(f"invalid JSON: {e.msg}", e.lineno, e.colno) from None
        return combo_from_json(data)
    return parse_combo(text)


# --- writing ----------------------------------------------------------

def _label_text(f):
    if isinstance(f, DeltaFraction):
        return str(f)
    if isinstance(f, HSeries):
        raise Malformed("series labels have no text form; expand them first")
    return str(f)


def _mark_text(m):
    if m[0] == "f":
        return m[1]
    kind = "line" if m[0] == "L" else "circle"
    return f"{m[1]}@{kind}:{m[2]}"


def diagram_to_text(D):
    tri = " ".join(f"v{i}(d{a},d{b},d{c})" for i, (a, b, c) in enumerate(D.tri))
    uni = " ".join(f"d{d}={_mark_text(m)}" for d, m in D.legs)
    lab = dict(D.labels)
    edges = []
    for d, p in enumerate(D.partner):
        if d < p:
            s = f"d{d}-d{p}"
            if d in lab:
                s += f"[{_label_text(lab[d])}]"
            edges.append(s)
    return "diagram { tri: " + tri + "; uni: " + uni + "; edges: " + " ".join(edges) + "; }"


def combo_to_text(c):
    if not c:
        return "0"
    parts = []
    for D, coeff in c.sorted_items():
        parts.append(f"{qstr(coeff)} * {diagram_to_text(D)}")
    return "\n+ ".join(parts)


def diagram_to_json(D):
    lab = dict(D.labels)
    edges = []
    for d, p in enumerate(D.partner):
        if d < p:
            e = [f"d{d}", f"d{p}"]
            if d in lab:
                e.append(_label_text(lab[d]))
            edges.append(e)
    return {
        "tri": {f"v{i}": [f"d{x}" for x in v] for i, v in enumerate(D.tri)},
        "uni": {f"d{d}": _mark_text(m) for d, m in D.legs},
        "edges": edges,
    }


def combo_to_json(c):
    return [{"coeff": qstr(coeff), "diagram": diagram_to_json(D)} for D, coeff in c.sorted_items()]


def diagram_from_json(data):
    if not isinstance(data, dict) or not {"tri", "uni", "edges"} <= set(data):
        raise Malformed("a diagram object needs tri, uni and edges")
    parts = ["diagram { tri:"]
    for v, ds in data["tri"].items():
        if len(ds) != 3:
            raise Malformed(f"vertex {v} needs three half-edges")
        parts.append(f"{v}({ds[0]},{ds[1]},{ds[2]})")
    parts.append("; uni:")
    parts.extend(f"{k}={m}" for k, m in data["uni"].items())
    parts.append("; edges:")
    for e in data["edges"]:
        s = f"{e[0]}-{e[1]}"
        if len(e) > 2 and e[2] is not None:
            s += f"[{e[2]}]"
        parts.append(s)
    parts.append("; }")
    return parse_diagram(" ".join(parts))


def combo_from_json(data):
    if isinstance(data, dict) and "diagram" not in data:
        return LinearCombo.of(diagram_from_json(data))
    if isinstance(data, dict):
        data = [data]
    out = LinearCombo()
    for item in data:
        out = out + LinearCombo.of(diagram_from_json(item["diagram"]), Fraction(str(item.get("coeff", 1))))
    return out


def read_diagram_file(path):
    with open(path) as fh:
        return parse_any(fh.read())


__all__ = [
    "parse_diagram", "parse_combo", "parse_any", "diagram_to_text", "combo_to_text",
    "diagram_to_json", "combo_to_json", "diagram_from_json", "combo_from_json",
    "read_diagram_file", "Diagram",
]
