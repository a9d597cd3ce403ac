"""Parsing dialects, report rendering and the command-line interface."""

import json
import random
import subprocess
import sys
from fractions import Fraction

import pytest

from conftest import BILINEAR_SYSTEM, EX52_SYSTEM, EX52_TEXT, lin, random_poly
from deltaeps import (
    DEPolynomial,
    ParseError,
    ValidationError,
    flf,
    mm,
    parse_linear,
    parse_poly,
    parse_system,
    render_poly,
    render_report,
    simulate_autonomous,
)
from deltaeps.cli import main
from deltaeps.cli_io import parse_equation, parse_rationals, parse_trajectory_csv

P = parse_poly


# -- parsing -------------------------------------------------------------------

@pytest.mark.parametrize("text, expected", [
    ("d0 - 2*d1", DEPolynomial.monomial((0,)) + DEPolynomial.monomial((1,), (), -2)),
    ("-1/4*d0^2*e0", DEPolynomial.monomial((0, 0), (0,), Fraction(-1, 4))),
    ("3*e2", DEPolynomial.monomial((), (2,), 3)),
    ("(d0 + d1)*(d0 - d1)", P("d0^2 - d1^2")),
    ("2*(1/2*d3)", P("d3")),
])
def test_operator_dialect(text, expected):
    assert P(text) == expected


def test_signal_dialect_matches_operator_dialect():
    assert P("y[t] - 2*y[t-1]*u(t-2)^2") == P("d0 - 2*d1*e2^2")
    assert P("y(t-3)*y[t-1]") == P("d1*d3")


def test_parameters_in_coefficients():
    p = P("(w[1,1,0,0] + 2)*d1 - s[1,0,0,1]*e0")
    assert {str(x) for x in p.params()} == {"w[1,1,0,0]", "s[1,0,0,1]"}


def test_equation_form():
    assert parse_equation(BILINEAR_SYSTEM) == P("d0 + d1 - e1 - d2*e1")
    assert parse_equation(EX52_SYSTEM) == P(EX52_TEXT)


@pytest.mark.parametrize("bad, pos", [
    ("y[t+1]", 0),
    ("d1^1/2", 4),
    ("0.5*d1", 0),
    ("d1 +", 4),
    ("d1 * * d2", 5),
    ("x1", 0),
])
def test_syntax_errors_carry_position(bad, pos):
    with pytest.raises(ParseError) as info:
        P(bad)
    assert info.value.pos == pos
    assert "position" in str(info.value)


def test_parse_linear():
    assert parse_linear("-2*d0 + d1") == lin(-2, 1)
    assert parse_linear("3*e2").axis == "e"
    with pytest.raises(ParseError):
        parse_linear("d1^2")


def test_parse_system_validates():
    sys_ = parse_system("# aircraft\n" + EX52_SYSTEM + "\n")
    assert sys_.k == 2
    with pytest.raises(ValidationError):
        parse_system("y[t-1]^2 = u[t-1]")
    with pytest.raises(ParseError):
        parse_system("  # nothing\n")


def test_rationals_and_csv():
    assert parse_rationals("2, 1,-1/2") == [2, 1, Fraction(-1, 2)]
    with pytest.raises(ParseError):
        parse_rationals("1,0.5")
    traj = parse_trajectory_csv("t,value\n0,1\n1,-1/3\n")
    assert list(traj) == [1, Fraction(-1, 3)]
    with pytest.raises(ParseError):
        parse_trajectory_csv("0,1\n2,1\n")


def test_round_trip_random():
    rng = random.Random(2024)
    for _ in range(200):
        p = random_poly(rng, max_deg=4, max_delay=5, max_terms=5)
        assert P(render_poly(p)) == p


def test_round_trip_fixtures(ex41, ex52, bilinear):
    for p in (ex41, ex52, bilinear):
        assert P(render_poly(p)) == p
    # formal factors with parametric coefficients survive the text form as well
    for e in flf(ex52).entries:
        if e.L is not None:
            assert parse_linear(str(e.L)) == e.L
        assert P(f"({e.companion})*d0") == DEPolynomial.monomial((0,), (), e.companion)


# -- reports -------------------------------------------------------------------

def test_flf_report_of_linear_polynomial():
    data = json.loads(render_report(flf(P("d0 - 2*d1"))))
    assert len(data["entries"]) == 1
    assert data["entries"][0]["L"] == "d0 - 2*d1"
    assert data["remainders"] == {"delta": {}, "eps": {}, "cross": None}


def test_match_report_lists_factor(ex52):
    data = json.loads(render_report(mm(ex52, lin(-6, 1, 1))))
    assert [m["factor"] for m in data["f3"]] == ["-2*d0 + d1"]
    assert data["f1"] == [] and data["f2"] == []


def test_trajectory_csv_report():
    y = simulate_autonomous(lin(-2, 1), [2], 2)
    assert render_report(y, "text") == "0,2\n1,1\n2,1/2"
    assert json.loads(render_report(y)) == ["2", "1", "1/2"]


def test_reports_are_deterministic(ex52):
    out = mm(ex52, lin(-6, 1, 1))
    assert render_report(out) == render_report(out)
    assert render_report(flf(ex52), "text") == render_report(flf(ex52), "text")


def test_unknown_report_format():
    with pytest.raises(ValidationError):
        render_report(P("d0"), "yaml")


# -- command line ---------------------------------------------------------------

def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def test_cli_star_and_dot(capsys):
    assert run(capsys, "star", "d0^2", "d0 + d1")[:2] == (0, "d0^2 + 2*d0*d1 + d1^2\n")
    assert run(capsys, "dot", "d1 + e1", "d1 - e1")[:2] == (0, "-e1^2 + d1^2\n")


def test_cli_parse_file(capsys, tmp_path):
    f = tmp_path / "plant.txt"
    f.write_text(EX52_SYSTEM + "\n")
    code, out, _ = run(capsys, "parse", str(f))
    assert code == 0 and json.loads(out)["k"] == 2


def test_cli_factor_json(capsys):
    code, out, _ = run(capsys, "factor", BILINEAR_SYSTEM, "--json")
    data = json.loads(out)
    assert code == 0 and data["h_star"] == 0
    assert data["remainders"]["cross"] is not None


def test_cli_match(capsys):
    code, out, _ = run(capsys, "match", EX52_SYSTEM, "--desired=-6*d0 + d1 + d2", "--format", "json")
    data = json.loads(out)
    assert code == 0
    assert data["laws"][0]["S"] == "-5/8*d1"


def test_cli_match_without_law_exits_2(capsys):
    code, _, _ = run(capsys, "match", "y[t] - 2*y[t-1] = u[t-1]", "--desired=-3*d0 + d1")
    assert code == 2


def test_cli_simulate(capsys, tmp_path):
    u = tmp_path / "u.csv"
    u.write_text("t,u\n" + "".join(f"{t},1\n" for t in range(6)))
    code, out, _ = run(capsys, "simulate", BILINEAR_SYSTEM, "--init", "0,0", "--steps", "5", "--input", str(u))
    assert code == 0
    assert out.strip().splitlines() == ["0,0", "1,0", "2,1", "3,0", "4,2", "5,-1"]


def test_cli_verify_pass_and_fail(capsys):
    ok = run(capsys, "verify", EX52_SYSTEM, "--feedback=-5/8*d1", "--desired=-6*d0 + d1 + d2",
             "--phi-tilde=-2*d0 + d1", "--steps", "30", "--trials", "5")
    assert ok[0] == 0
    bad = run(capsys, "verify", EX52_SYSTEM, "--feedback=5/8*d1", "--desired=-6*d0 + d1 + d2",
              "--phi-tilde=-2*d0 + d1", "--steps", "6", "--trials", "3")
    assert bad[0] == 2


def test_cli_invalid_input_exits_1(capsys):
    code, _, err = run(capsys, "factor", "y[t+1] = u[t]")
    assert code == 1 and "position" in err
    code, _, _ = run(capsys, "simulate", EX52_SYSTEM, "--steps", "3", "--init", "1")
    assert code == 1
    with pytest.raises(SystemExit) as info:
        main(["frobnicate"])
    assert info.value.code == 1


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "deltaeps", "star", "d1", "d0 + d1"],
                          capture_output=True, text=True, timeout=60)
    assert proc.returncode == 0 and proc.stdout.strip() == "d1 + d2"
