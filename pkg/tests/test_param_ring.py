"""Coefficient ring: arithmetic, substitution, rules and the rules file format."""

from fractions import Fraction

import pytest
import sympy as sp
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import pid, sym_coeff
from deltaeps import ParamId, ParamPoly, ParseError, Rule, RuleConflictError, parse_rules
from deltaeps.param_ring import pp_arith, pp_substitute, pp_sum

W = [ParamPoly.var(ParamId("w", 1, 1, 0, k)) for k in range(4)]
S = [ParamPoly.var(ParamId("s", 1, 0, 0, k)) for k in range(3)]
ALL_VARS = W + S
PIDS = [ParamId("w", 1, 1, 0, k) for k in range(4)] + [ParamId("s", 1, 0, 0, k) for k in range(3)]


@st.composite
def param_polys(draw):
    """Small random ParamPoly built from a few products of variables."""
    total = ParamPoly.const(0)
    for _ in range(draw(st.integers(0, 4))):
        term = ParamPoly.const(Fraction(draw(st.integers(-6, 6)), draw(st.integers(1, 5))))
        for _ in range(draw(st.integers(0, 3))):
            term = term * draw(st.sampled_from(ALL_VARS))
        total = total + term
    return total


rationals = st.fractions(min_value=-5, max_value=5, max_denominator=6)


def test_param_id_roundtrip():
    p = ParamId.parse("w[1,1,0,3]")
    assert p == ParamId("w", 1, 1, 0, 3)
    assert str(p) == "w[1,1,0,3]"


def test_param_id_rejects_garbage():
    with pytest.raises(ParseError):
        ParamId.parse("x[1,2]")


def test_subtract_to_zero():
    w = ParamPoly.var(pid("w[1,1,0,3]"))
    assert pp_arith(w, w, "sub").is_zero()


def test_printed_coefficient_form():
    s = ParamPoly.var(pid("s[1,0,0,1]"))
    c = Fraction(-1, 16) + s * Fraction(1, 4)
    assert str(c) == "-1/16 + 1/4*s[1,0,0,1]"


def test_difference_of_squares():
    a, b = W[0], S[1]
    assert pp_arith(a + b, a - b, "mul") == a * a - b * b


def test_substitute_printed_rule():
    s = ParamPoly.var(pid("s[1,0,0,1]"))
    c = Fraction(-1, 16) + s / 4
    assert pp_substitute(c, Rule({pid("s[1,0,0,1]"): 0})) == ParamPoly.const(Fraction(-1, 16))


def test_substitute_empty_rule_is_identity():
    p = W[0] * W[1] + 3
    assert pp_substitute(p, Rule()) == p


def test_substitute_eliminates_coefficient():
    p = ParamPoly.var(pid("w[1,1,0,2]")) + 4
    assert pp_substitute(p, {pid("w[1,1,0,2]"): -4}).is_zero()


def test_partial_rule_keeps_unbound_parameters():
    p = W[0] * W[1] + W[2]
    out = p.substitute({PIDS[0]: 2})
    assert out == 2 * W[1] + W[2]
    assert out.params() == {PIDS[1], PIDS[2]}


def test_substitute_parametric_value():
    p = W[0] ** 2
    assert p.substitute({PIDS[0]: W[1] + 1}) == W[1] * W[1] + 2 * W[1] + 1


def test_const_value_requires_constant():
    with pytest.raises(Exception):
        (W[0] + 1).const_value()
    assert ParamPoly.const(Fraction(3, 4)).const_value() == Fraction(3, 4)


def test_degree_queries():
    p = W[0] ** 3 * W[1] + W[1] ** 2
    assert p.degree() == 4
    assert p.degree_in(PIDS[0]) == 3
    assert p.degree_in(PIDS[5]) == 0
    uni = p.as_univariate(PIDS[1])
    assert uni == {1: W[0] ** 3, 2: ParamPoly.const(1)}


def test_sum_of_many():
    polys = [W[0] / 3, W[0] / 6, -W[0] / 2, S[0]]
    assert pp_sum(polys) == S[0]


@given(param_polys(), param_polys(), param_polys())
@settings(max_examples=80, deadline=None)
def test_ring_axioms(a, b, c):
    assert a + b == b + a
    assert a * b == b * a
    assert (a + b) + c == a + (b + c)
    assert (a * b) * c == a * (b * c)
    assert a * (b + c) == a * b + a * c
    assert (a - a).is_zero()


@given(param_polys(), param_polys())
@settings(max_examples=80, deadline=None)
def test_arithmetic_matches_sympy(a, b):
    for op, f in (("add", lambda x, y: x + y), ("sub", lambda x, y: x - y), ("mul", lambda x, y: x * y)):
        assert sp.expand(sym_coeff(pp_arith(a, b, op)) - f(sym_coeff(a), sym_coeff(b))) == 0


@given(param_polys(), param_polys(), st.lists(rationals, min_size=7, max_size=7))
@settings(max_examples=60, deadline=None)
def test_substitution_is_homomorphism(a, b, values):
    rule = Rule(dict(zip(PIDS[:4], values)))
    for op in ("add", "sub", "mul"):
        lhs = pp_substitute(pp_arith(a, b, op), rule)
        rhs = pp_arith(pp_substitute(a, rule), pp_substitute(b, rule), op)
        assert lhs == rhs


@given(param_polys(), st.lists(rationals, min_size=7, max_size=7))
@settings(max_examples=60, deadline=None)
def test_full_substitution_is_constant(a, values):
    out = a.substitute(Rule(dict(zip(PIDS, values))))
    assert out.is_const() and out.degree() == 0


@given(param_polys())
def test_equal_polys_hash_equal(a):
    b = ParamPoly({m: c for m, c in a.items()})
    assert a == b and hash(a) == hash(b)


def test_rule_conflict():
    with pytest.raises(RuleConflictError):
        Rule([(PIDS[0], 1), (PIDS[0], 2)])
    with pytest.raises(RuleConflictError):
        Rule({PIDS[0]: 1}).compose({PIDS[0]: 3})
    assert Rule({PIDS[0]: 1}).compose({PIDS[1]: 3}) == {PIDS[0]: 1, PIDS[1]: 3}


def test_rules_file_format():
    text = "# printed rule\nw[1,1,0,3] = 0\ns[1,0,0,1] = -1/3  # trailing comment\n\n"
    rule = parse_rules(text)
    assert rule == {pid("w[1,1,0,3]"): 0, pid("s[1,0,0,1]"): Fraction(-1, 3)}
    assert parse_rules(rule.to_text()) == rule


@pytest.mark.parametrize("bad", ["w[1,1,0,3] 0", "w[1,1,0] = 1", "w[1,1,0,3] = 0.5"])
def test_rules_file_errors(bad):
    with pytest.raises(ParseError):
        parse_rules(bad)
