"""Script language and command-line front end."""
import json
import math
from fractions import Fraction as F

import pytest
from hypothesis import given, settings, strategies as st

from pcmellin import cli
from pcmellin.errors import SyntaxErrorAt
from pcmellin.lang import BinOp, Call, Command, Name, Neg, Num, parse, parse_expr, pretty

HEADER = """a(x) = 1 + x/2; b(x) = 2 + x;
cell A: x in (0, 1), y in (0, a(x));
cell B: x in (0, 1), y in (a(x), inf);
"""
EX1 = "a(x)*b(x)/(a(x)*b(x) - y) on A"
EX2_MELLIN = "y^(-1)*(1 + a(x)/(b(x)*y))^s on B"


def run_cli(tmp_path, capsys, text, *args):
    p = tmp_path / "script.txt"
    p.write_text(text, encoding="utf-8")
    code = cli.main([str(p), *args])
    out = capsys.readouterr()
    return code, out.out, out.err


# --- parsing -------------------------------------------------------------------

def test_parse_cell_with_function_bound():
    sc = parse("cell B: x in (0,1), y in (a(x), inf); a(x) = 1 + x;")
    out = cli.run(sc)
    assert "inf" in out["cells"]["B"]
    sess = cli.Session(sc)
    assert sess.cells["B"].unbounded


def test_parse_integrate_command():
    sc = parse("integrate y: y^(s-2) * (1 + a(x)/(b(x)*y))^s on B")
    cmd = sc.command
    assert isinstance(cmd, Command) and cmd.kind == "integrate" and cmd.var == "y"
    assert cmd.pieces[0].cells == ("B",)
    assert isinstance(cmd.pieces[0].expr, BinOp) and cmd.pieces[0].expr.op == "*"


def test_syntax_error_column():
    with pytest.raises(SyntaxErrorAt) as ei:
        parse_expr("y^^2")
    assert (ei.value.line, ei.value.col) == (1, 2)
    with pytest.raises(SyntaxErrorAt) as ei:
        parse("y^^2")
    assert ei.value.col == 2
    with pytest.raises(SyntaxErrorAt) as ei:
        parse("a(x) = 1;\ncell B: x in (0, 1), y in (a(x) inf)")
    assert ei.value.line == 2


def test_powers_are_right_associative_and_bind_tighter_than_minus():
    assert parse_expr("2^3^2") == BinOp("^", Num(F(2)), BinOp("^", Num(F(3)), Num(F(2))))
    assert parse_expr("-y^2") == Neg(BinOp("^", Name("y"), Num(F(2))))


names = st.sampled_from(["x", "y", "s", "a", "r2"])
nums = st.one_of(st.integers(0, 50).map(lambda n: Num(F(n))),
                 st.sampled_from([Num(F(1, 2)), Num(F(5, 4)), Num(F(3, 10))]))
atoms = st.one_of(names.map(Name), nums)


def _extend(children):
    return st.one_of(
        st.tuples(st.sampled_from(["+", "-", "*", "/", "^"]), children, children)
          .map(lambda t: BinOp(*t)),
        children.map(Neg),
        st.tuples(st.sampled_from(["log", "abs", "a"]), children).map(lambda t: Call(t[0], (t[1],))),
    )


exprs = st.recursive(atoms, _extend, max_leaves=12)


@settings(max_examples=200)
@given(exprs)
def test_pretty_parse_round_trip(e):
    first = parse_expr(pretty(e))
    assert parse_expr(pretty(first)) == first


def test_script_round_trip():
    text = HEADER + "const r2 = sqrt(2);\nverify mellin y: " + EX1 + " | " + EX2_MELLIN + \
        " at s = 0.5 + 0.3*i, x = 0.5, N = 4"
    sc = parse(text)
    assert parse(pretty(sc)) == sc


# --- commands --------------------------------------------------------------------

def test_verify_example_one(tmp_path, capsys):
    code, out, _ = run_cli(tmp_path, capsys, HEADER + f"verify mellin y: {EX1} "
                           "at s = 0.5, s = 0.5 + 0.3*i, s = 1.7 - i, x = 0.5")
    data = json.loads(out)
    assert code == 0 and data["status"] == "ok" and data["max_rel_err"] < 1e-6


def test_locus_example_three(tmp_path, capsys):
    code, out, _ = run_cli(tmp_path, capsys, HEADER + f"locus mellin y: {EX1} | {EX2_MELLIN}")
    assert code == 0
    assert json.loads(out)["strips"] == [{"re_lo": 0, "re_hi": 1}]


def test_poles_example_one(tmp_path, capsys):
    code, out, _ = run_cli(tmp_path, capsys, HEADER + f"poles mellin y: {EX1}")
    data = json.loads(out)
    lat = data["new_poles"]["lattices"]
    assert code == 0 and len(lat) == 1 and lat[0]["set"] == "-s in N"
    assert lat[0]["offset"] == [0.0, 0.0] and lat[0]["step"] == [-1.0, 0.0]


def test_integrate_prepare_asymp(tmp_path, capsys):
    code, out, _ = run_cli(tmp_path, capsys, HEADER + "integrate y: y^(s-2)*(1 + a(x)/(b(x)*y))^s "
                           "on B at s = 0.5, x = 0.5")
    data = json.loads(out)
    assert code == 0 and data["H"][0]["coef"] == "[-1]*(1/2*x+1)^(s-1)"
    code, out, _ = run_cli(tmp_path, capsys, HEADER + f"prepare y: {EX1}")
    gens = json.loads(out)["generators"]
    assert code == 0 and gens[0]["class"] == "K"
    code, out, _ = run_cli(tmp_path, capsys, HEADER + "asymp y: y^(s-2)*(1 + a(x)/(b(x)*y))^s "
                           "on B at s = 0.3, x = 0.5, N = 3")
    terms = json.loads(out)["terms"]
    assert code == 0 and len(terms) == 3
    assert [t["exponent"][0] for t in terms] == pytest.approx([-1.7, -2.7, -3.7])


def test_grid_data_and_csv(tmp_path, capsys):
    code, out, _ = run_cli(tmp_path, capsys, "grid data: (1, -1), (-1, 0) at d = 1",
                           "--window=-2,2,-1,1")
    data = json.loads(out)
    assert code == 0 and data["epsilon_gap"] > 0
    assert [l["re"] for l in data["lines"]] == [-1.0, 0.0, 1.0]
    code, out, _ = run_cli(tmp_path, capsys, "grid data: (1, -1) at d = 1", "--csv",
                           "--window=-2,2,-1,1")
    assert code == 0 and out.startswith("cell,dim,x0,y0,x1,y1")


def test_noncomp(tmp_path, capsys):
    code, out, _ = run_cli(tmp_path, capsys, "noncomp y: y^(-1)*(y^i - y^(2*i)) at eps = 0.5")
    data = json.loads(out)
    assert code == 0 and data["verdict"] == "non-integrable"
    assert data["witness"]["status"] == "found" and data["pair"]["status"] == "found"


def test_exit_codes(tmp_path, capsys):
    code, _, err = run_cli(tmp_path, capsys, "y^^2")
    assert code == 1 and json.loads(err)["col"] == 2
    code, _, err = run_cli(tmp_path, capsys, "cell B: x in (0, 1), y in (1, inf);\n"
                           "integrate y: abs(y - 2) on B")
    assert code == 2 and json.loads(err)["subterm"] == "abs(y-2)"
    code, _, err = run_cli(tmp_path, capsys, "const r2 = sqrt(2); const t = sqrt(8);\n"
                           "cell B: x in (0, 1), y in (1, inf);\n"
                           "integrate y: y^(r2 - t/2 - 2) on B")
    assert code == 3
    code, out, _ = run_cli(tmp_path, capsys, HEADER + f"verify mellin y: {EX1} at s = 0.5, x = 0.5",
                           "--order", "5")
    assert code == 4 and json.loads(out)["status"] == "mismatch"


def test_output_is_deterministic(tmp_path, capsys):
    text = HEADER + f"mellin y: {EX1} | {EX2_MELLIN} at s = 0.4 + 0.2*i, x = 0.25"
    _, a, _ = run_cli(tmp_path, capsys, text)
    _, b, _ = run_cli(tmp_path, capsys, text)
    assert a == b and "-0.0" not in a
