"""Formal linear factorization: entries, remainders, border conditions, derived sets."""

import random

import pytest
import sympy as sp
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import U, Y, oracle_star, pid, random_poly, to_sympy
from deltaeps import (
    DEOperator,
    DEPolynomial,
    LinearDelta,
    ParamPoly,
    ValidationError,
    derived_sets,
    evaluate_rule,
    flf,
    parse_poly,
    reconstruct,
)
from deltaeps.flf import check_border_conditions, factor_zero_powers, remainder

P = parse_poly


def var(text):
    return ParamPoly.var(pid(text))


def oracle_reconstruct(res):
    """Expand every entry with sympy substitution instead of the package star product."""
    total = sp.Integer(0)
    for e in res.entries:
        b = e.L.to_de() if e.L is not None else P("d0")
        c = e.M.to_de() if e.M is not None else P("e0")
        body = oracle_star(DEPolynomial({e.op: e.companion}), b, c)
        total += Y(0) ** e.kappa * U(0) ** e.sigma * body
    for r in res.remainders():
        total += Y(0) ** r.kappa * U(0) ** r.sigma * to_sympy(r.poly)
    return sp.expand(total)


# -- worked nonlinear example -----------------------------------------------------

def test_example_entry_count_and_depth(ex41):
    res = flf(ex41)
    assert len(res.entries) == 57
    assert res.h_star == 1
    assert all(r.poly.is_zero() for r in res.remainders())


def test_example_companions(ex41):
    res = flf(ex41)
    assert res.find(1, 1, 0, 0).companion == ParamPoly.const(1) / 4
    assert res.find(2, 1, 0, 0).companion == -var("w[1,1,0,3]") / 2
    assert res.find(1, 0, 0, 0).companion == ParamPoly.const(-1) / 4
    assert res.find(2, 0, 0, 0).companion == ParamPoly.const(-1) / 16 + var("s[1,0,0,1]") / 4


def test_example_formal_factors(ex41):
    res = flf(ex41)
    first = res.find(1, 1, 0, 0)
    assert first.op == DEOperator.make((0, 0))
    assert first.L == LinearDelta({k: var(f"w[1,1,0,{k}]") for k in range(4)} | {4: 1})
    assert res.find(0, 1, 0, 0).L == LinearDelta.from_list([1, -2])


def test_example_reconstructs(ex41):
    res = flf(ex41)
    assert reconstruct(res) == ex41
    assert oracle_reconstruct(res) == to_sympy(ex41)


def test_example_border_conditions(ex41):
    assert check_border_conditions(flf(ex41)) == []


def test_example_derived_set_sizes(ex41):
    sets = derived_sets(flf(ex41))
    assert len(sets.L) == len(sets.L_star) + 1
    assert len(sets.M) == len(sets.M_star) + 1
    assert set(sets.L_bar_star) <= set(sets.L_star)


# -- small systems ---------------------------------------------------------------

def test_linear_input_gives_linear_entries_only():
    res = flf(P("d0 - 2*d1 + 3*e2"))
    assert [(e.lam, e.u, e.omega) for e in res.entries] == [(0, 1, 0), (0, 0, 1)]
    assert res.entries[0].L == LinearDelta.from_list([1, -2])
    assert res.entries[1].M == LinearDelta({2: 3}, "e")
    assert not res.params()


def test_aircraft_model_sets(ex52):
    res = flf(ex52)
    sets = derived_sets(res)
    assert [f.label for f in sets.L_star] == ["L[1,1,0]", "L[2,1,0]", "L[3,1,0]", "L[0,2,0]"]
    assert [f.label for f in sets.M] == ["M[0,1,0]"]
    assert sets.M_star == ()
    assert res.find(2, 1, 0, 0).companion == ParamPoly.const(-2) / 3 - 2 * var("w[1,1,0,1]") / 3
    assert reconstruct(res) == ex52


def test_bilinear_factor_list(bilinear):
    res = flf(bilinear)
    cross = [e for e in res.entries if e.phase == "cross"]
    assert [e.lam for e in cross] == [1, 2, 3, 4, 5]
    assert all(e.op == DEOperator.make((0,), (0,)) for e in cross)
    assert res.find(1, 0, 0, 0).companion == ParamPoly.const(-1)
    assert res.find(5, 0, 0, 0).L == LinearDelta.from_list([1])
    expected = (var("s[1,0,0,0]") * var("w[1,0,0,0]") - var("s[1,0,0,0]") * var("w[2,0,0,0]")
                - var("s[5,0,0,0]") * var("w[1,0,0,0]")
                - var("s[1,0,0,0]") * var("w[1,0,0,1]") * var("w[4,0,0,0]")
                + var("s[1,0,0,0]") * var("w[2,0,0,1]") * var("w[4,0,0,0]")
                - var("s[3,0,0,0]") * var("w[1,0,0,1]") * var("w[3,0,0,0]")
                + var("s[3,0,0,0]") * var("w[1,0,0,1]") * var("w[4,0,0,0]")
                + var("s[5,0,0,0]") * var("w[1,0,0,1]") * var("w[3,0,0,0]"))
    assert res.r_de.poly == DEPolynomial({DEOperator.make((0,), (0,)): expected})


def test_evaluate_rule_substitutes_everywhere(bilinear):
    res = flf(bilinear)
    rule = {pid("s[1,0,0,0]"): 0, pid("w[1,0,0,1]"): 0}
    fixed = evaluate_rule(res, rule)
    assert fixed.find(2, 0, 0, 0).companion.is_zero()
    assert fixed.find(3, 0, 0, 0).companion.is_zero()
    assert pid("s[1,0,0,0]") not in fixed.params()
    assert reconstruct(fixed) == bilinear
    sets = evaluate_rule(derived_sets(res), rule)
    assert sets.M_star[0].poly == LinearDelta({1: 1}, "e")


def test_rejects_constant_term():
    with pytest.raises(ValidationError):
        flf(P("1 + d0"))


# -- subroutines ------------------------------------------------------------------

def test_remainder_of_linear_polynomial():
    r, entries = remainder(P("d0 - 2*d1"), 1, 0, 0)
    assert r.is_zero()
    assert len(entries) == 1 and entries[0].lam == 0


def test_remainder_keeps_zero_terms():
    r, entries = remainder(P("d0^2 + d0*d0"), 1, 0, 0)
    assert r == P("2*d0^2") and entries == []


def test_remainder_phase_checks():
    with pytest.raises(ValidationError):
        remainder(P("d0*e1"), 1, 0, 0)
    with pytest.raises(ValidationError):
        remainder(P("e1"), 1, 1, 0)


def test_factor_zero_powers():
    k, s, rest = factor_zero_powers(P("3*d0^2*e0 + d0*e0^2"), True, True)
    assert (k, s) == (1, 1)
    assert rest == P("3*d0 + e0")


# -- round trip -------------------------------------------------------------------

@given(st.integers(0, 2**32 - 1))
@settings(max_examples=60, deadline=None)
def test_round_trip_small(seed):
    rng = random.Random(seed)
    a = random_poly(rng, max_deg=2, max_delay=3, max_terms=3)
    res = flf(a)
    assert reconstruct(res) == a
    assert check_border_conditions(res) == []


@given(st.integers(0, 2**32 - 1))
@settings(max_examples=15, deadline=None)
def test_round_trip_against_oracle(seed):
    rng = random.Random(seed)
    a = random_poly(rng, max_deg=2, max_delay=2, max_terms=2)
    assert oracle_reconstruct(flf(a)) == to_sympy(a)
