import csv
import io
import json
import subprocess
import sys

import jsonschema
import pytest

from nloop.cli import main, parse_range, report_schema
from nloop.errors import InputError

THETA = """diagram {
  tri: u(a1,a2,a3) w(b1,b2,b3);
  uni: ;
  edges: a1-b1 a2-b2 a3-b3;
}
"""

THETA_FLIPPED = """diagram {
  tri: u(a1,a2,a3) w(b2,b1,b3);
  uni: ;
  edges: a1-b1 a2-b2 a3-b3;
}
"""


def run(*argv):
    buf = io.StringIO()
    code = main(list(argv), buf)
    return code, buf.getvalue()


@pytest.fixture
def theta_file(tmp_path):
    p = tmp_path / "theta.diag"
    p.write_text(THETA)
    return str(p)


def test_reduce_basis_element_is_unit_vector(theta_file):
    code, out = run("reduce", theta_file, "--space", "Bn:2", "--degree", "3", "--format", "json")
    assert code == 0
    data = json.loads(out)
    assert sorted(data["outputs"]["coords"]) in (["0", "1"], ["-1", "0"])


def test_reduce_as_image_is_zero(tmp_path):
    p = tmp_path / "as.diag"
    p.write_text(THETA + "\n+ " + THETA_FLIPPED)
    code, out = run("reduce", str(p), "--space", "Bn:2", "--degree", "3", "--format", "json")
    assert code == 0
    assert all(x == "0" for x in json.loads(out)["outputs"]["coords"])


def test_malformed_file_exit_code_and_location(tmp_path, capsys):
    p = tmp_path / "bad.diag"
    p.write_text(THETA.replace("a2-b2", "a2-"))
    code, _ = run("reduce", str(p), "--space", "Bn:2", "--degree", "3")
    assert code == 2
    err = capsys.readouterr().err
    assert "line 4" in err and "column" in err


def test_resource_cutoff_exit_code(theta_file):
    code, _ = run("reduce", theta_file, "--space", "B", "--degree", "40")
    assert code == 3
    code, _ = run("reduce", theta_file, "--space", "Bn:2", "--degree", "3", "--max-vertices", "1")
    assert code == 3


def test_usage_errors():
    assert run("tables", "nosuch")[0] == 2
    assert run("tables", "theta-count", "--g", "x..y")[0] == 2
    with pytest.raises(InputError):
        parse_range("1..")
    assert parse_range("2..4") == [2, 3, 4] and parse_range("5") == [5]


def test_tables_csv_two_loop():
    code, out = run("tables", "two-loop", "--a", "1", "--b1", "1", "--b2", "0", "--format", "csv")
    assert code == 0
    rows = list(csv.reader(io.StringIO(out)))
    assert "a" in rows[0]
    row = dict(zip(rows[0], rows[1]))
    assert row["p"] == "23/12" and row["q"] == "11/24"


def test_tables_theta_count_csv():
    code, out = run("tables", "theta-count", "--g", "1..4", "--format", "csv")
    rows = list(csv.reader(io.StringIO(out)))
    assert code == 0 and rows[0][0] == "g"
    assert [r[-1] for r in rows[1:]] == ["3", "8", "15", "24"]


def test_other_tables():
    for args in (("k-examples", "--a=-1..2"), ("xset",), ("crude-bound", "--n", "2", "--g", "1..2"), ("thetas", "--a", "2")):
        code, out = run("tables", *args, "--format", "json")
        assert code == 0, args
        jsonschema.validate(json.loads(out), report_schema())


def test_reports_are_deterministic_and_valid():
    a = run("reproduce", "theta-count", "--format", "json")
    b = run("reproduce", "theta-count", "--format", "json")
    assert a == b and a[0] == 0
    data = json.loads(a[1])
    jsonschema.validate(data, report_schema())
    assert "wall_time" not in data
    assert data["outputs"]["theta_counts"]["4"] == 24
    code, out = run("reproduce", "theta-count", "--format", "json", "--timing")
    jsonschema.validate(json.loads(out), report_schema())
    assert "wall_time" in json.loads(out)


def test_reproduce_sections_text():
    for section in ("two-loop", "crude-bound", "xset"):
        code, out = run("reproduce", section)
        assert code == 0
        assert "FAIL" not in out and "PASS" in out


def test_reproduce_appendix_b_small():
    code, out = run("reproduce", "appendixB", "--samples", "10", "--seed", "7", "--format", "json")
    assert code == 0
    data = json.loads(out)
    assert all(c["ok"] for c in data["certificates"])


def test_linking_and_aarhus_commands(tmp_path):
    d = tmp_path / "link.json"
    d.write_text(json.dumps({"U": [[1]], "V": [[0]], "W": [[2]]}))
    code, out = run("linking", "invert", "--data", str(d), "--format", "json")
    assert code == 0
    data = json.loads(out)
    jsonschema.validate(data, report_schema())
    assert str(d) in data["inputs"]
    code, out = run("aarhus", "clasper", "--data", str(d), "--n", "2", "--format", "json")
    assert code == 0
    p = tmp_path / "p.diag"
    p.write_text("diagram { tri: u(a1,a2,a3) w(b1,b2,b3); uni: c1=x1 c2=x2; edges: a1-b1 a2-b2 a3-c1 b3-c2; }")
    code, out = run("aarhus", "integrate", "--data", str(d), "--p", str(p), "--truncate", "4", "--format", "json")
    assert code == 0


def test_weights_command(theta_file):
    code, out = run("weights", "sl2", "--diagram", theta_file, "--oracle", "--format", "json")
    assert code == 0
    certs = json.loads(out)["certificates"]
    assert certs and all(c["ok"] for c in certs)


def test_module_entry_point():
    r = subprocess.run([sys.executable, "-m", "nloop", "reproduce", "theta-count"], capture_output=True, text=True)
    assert r.returncode == 0 and "PASS theta_count g=12" in r.stdout
