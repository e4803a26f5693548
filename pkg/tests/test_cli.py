import io
import json
import os
import subprocess
import sys

import pytest

from twistpf.cli import ParseError, main, parse_graph_file

SUNSET = ["--graph", "sunset3.fgraph", "--delta", "1", "--set", "m1=1", "--set", "m2=1", "--set", "m3=1",
          "--set", "psq=t"]
BOX = ["--graph", "box.fgraph", "--t", "X", "--set", "s=1", "--set", "u=X"]


def run(*argv):
    out = io.StringIO()
    code = main(list(argv), out=out)
    return code, out.getvalue()


def test_bundled_fixtures_parse():
    from twistpf.cli import find_graph_file
    g, k = parse_graph_file(find_graph_file("sunset3.fgraph").read_text())
    assert len(g.vertices) == 2 and len(g.edges) == 3
    assert [e.mass for e in g.edges] == ["m1", "m2", "m3"]
    assert k.get("p", "p") == "psq"
    g, k = parse_graph_file(find_graph_file("box.fgraph").read_text())
    assert len(g.vertices) == 4 and len(g.edges) == 4 and len(g.legs) == 4
    assert all(e.mass == "0" for e in g.edges)


@pytest.mark.parametrize("text, line, col, fragment", [
    ("", 1, 1, "empty"),
    ("# only a comment\n", 1, 1, "empty"),
    ("vertices a b\nedge e1 a c\n", 2, 11, "unknown vertex"),
    ("vertices a b\nedge e1 a b mass m1 +\n", 2, 22, "cannot parse"),
    ("vertices a b\nedge e1 a b\nleg p a\nleg q b\ndot p.p = 1\n", 4, 5, "missing dot product"),
    ("vertices a b\nedge e1 a b\nfoo\n", 3, 1, "unknown keyword"),
    ("vertices a b\nedge e1 a a\n", 2, 11, "self-loop"),
    ("edge e1 a b\n", 1, 1, "before vertices"),
    ("vertices a b c\nedge e1 a b\n", 1, 1, "not connected"),
    ("vertices a b\nedge e1 a b\nleg p a\nleg q a\n", 4, 7, "already carries"),
    ("vertices a b\nedge e1 a b\ndot p.p 1\n", 3, 1, "expected: dot"),
])
def test_parse_errors(text, line, col, fragment):
    with pytest.raises(ParseError) as exc:
        parse_graph_file(text)
    assert (exc.value.line, exc.value.col) == (line, col)
    assert fragment in str(exc.value)
    assert str(exc.value).startswith(f"syntax error at {line}:{col}:")


def test_mass_expression_with_spaces():
    g, _ = parse_graph_file("vertices a b\nedge e1 a b mass 2 * m\n")
    assert g.edges[0].mass == "2 * m"


def test_polys_sunset3():
    code, out = run("polys", "--graph", "sunset3.fgraph")
    assert code == 0
    lines = out.splitlines()
    assert lines[0] == "U = x1*x2 + x1*x3 + x2*x3"
    assert lines[1] == "V = (psq)*x1*x2*x3"
    assert lines[2].startswith("F = ")


def test_operator_box_text():
    code, out = run("operator", *BOX)
    assert code == 0
    assert out == "(X^2 + X)*DX + (X + eps + 1)\n"


def test_structured_output_is_deterministic():
    a = run("operator", *SUNSET, "--format", "structured")
    b = run("operator", *SUNSET, "--format", "structured")
    assert a == b and a[0] == 0
    tree = json.loads(a[1])
    assert tree["order"] == 2 and tree["t"] == "t"
    assert tree["text"].startswith("(t^3 - 10*t^2 + 9*t)*Dt^2")
    assert set(tree["residue_ranks"]) == {"2", "1", "0"}


def test_certificate_roundtrip_and_tamper(tmp_path):
    cert = tmp_path / "c.json"
    code, _ = run("operator", *SUNSET, "--emit-certificate", str(cert))
    assert code == 0
    code, out = run("verify", *SUNSET, "--certificate", str(cert))
    assert code == 0 and out.startswith("ok:")
    code, out = run("singular", *SUNSET, "--certificate", str(cert))
    assert code == 0
    assert sorted(line.split("\t")[0] for line in out.splitlines()) == ["t", "t - 1", "t - 9"]
    tree = json.loads(cert.read_text())
    entry = tree["certificate"][0]["C"]
    comp = next(c for c in entry if c)
    comp[0][1] = comp[0][1] + " + 1"
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps(tree))
    code, out = run("verify", *SUNSET, "--certificate", str(bad))
    assert code == 1 and out.startswith("FAILED:")
    code, out = run("verify", *SUNSET, "--certificate", str(bad), "--format", "structured")
    rep = json.loads(out)
    assert code == 1 and rep["ok"] is False


def test_verify_rejects_foreign_certificate(tmp_path, capsys):
    cert = tmp_path / "c.json"
    assert run("operator", *BOX, "--emit-certificate", str(cert))[0] == 0
    code, _ = run("verify", *SUNSET, "--certificate", str(cert))
    assert code == 1
    assert "different job" in capsys.readouterr().err


def test_order_bound_exit_code(capsys):
    code, _ = run("operator", *SUNSET, "--max-order", "1")
    assert code == 2
    assert "order bound exceeded" in capsys.readouterr().err


@pytest.mark.parametrize("argv, fragment", [
    (["operator", "--graph", "nope.fgraph"], "not found"),
    (["operator", *BOX, "--set", "eps=0"], "regulator"),
    (["operator", *BOX, "--set", "X=2"], "derivative variable"),
    (["operator", *BOX, "--nu", "1,2"], "needs 4 entries"),
    (["operator", *BOX, "--threads", "0"], "threads"),
    (["verify", *BOX], "--certificate"),
    (["operator", *BOX, "--set", "s"], "NAME=EXPR"),
])
def test_errors_exit_one(argv, fragment, capsys):
    code, _ = run(*argv)
    assert code == 1
    assert fragment in capsys.readouterr().err


def test_empty_graph_file(tmp_path, capsys):
    p = tmp_path / "empty.fgraph"
    p.write_text("")
    assert run("polys", "--graph", str(p))[0] == 1
    assert "syntax error at 1:1" in capsys.readouterr().err


def test_warns_when_t_absent(caplog):
    code, _ = run("polys", "--graph", "sunset3.fgraph")
    assert code == 0
    assert any("does not appear in F" in r.getMessage() for r in caplog.records)


def test_console_script_runs():
    env = dict(os.environ, TWISTPF_NUMBA="0")
    p = subprocess.run([sys.executable, "-m", "twistpf", "operator", *BOX], capture_output=True, text=True, env=env)
    assert p.returncode == 0
    assert p.stdout == "(X^2 + X)*DX + (X + eps + 1)\n"
