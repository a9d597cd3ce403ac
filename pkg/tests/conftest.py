"""Shared fixtures, random generators and an independent sympy oracle."""

import random
from fractions import Fraction

import pytest
import sympy as sp
from hypothesis import strategies as st

from deltaeps import DEPolynomial, LinearDelta, parse_poly
from deltaeps.param_ring import ParamId, ParamPoly

# -- fixture polynomials -------------------------------------------------------

EX41_TEXT = (
    "d0 - 2*d1 + 2*d1*d2 + 4*d2^2 + 1/2*d2*d3 - 2*d2*d4 + 1/4*d4^2"
    " + 3*e2 + 16*e1^2 - 18*e1*e2 - 2*e1^2*e2 + 5*e2^2 + 2*e1*e2^2 - 1/2*e2^3"
    " + e1^2*e3 - e1*e2*e3 + 1/4*e2^2*e3"
    " + d1*d2*e1 + 1/4*d2^2*e1 + 1/2*d1*d3*e1 - 1/16*d3^2*e1"
    " - 4*d1*d2*e2 + d2^2*e2 + 2*d1*d3*e2 - 1/4*d3^2*e2"
)
EX52_TEXT = "-1/3*d0 + d1 - 2/3*d1*d2 + 1/3*d2^2 + 1/3*e2"
EX52_SYSTEM = "-1/3*y[t] + y[t-1] - 2/3*y[t-1]*y[t-2] + 1/3*y[t-2]^2 = -1/3*u[t-2]"
BILINEAR_SYSTEM = "y[t] + y[t-1] = u[t-1] + y[t-2]*u[t-1]"
BILINEAR_TEXT = "d0 + d1 - e1 - d2*e1"


@pytest.fixture
def ex41():
    return parse_poly(EX41_TEXT)


@pytest.fixture
def ex52():
    return parse_poly(EX52_TEXT)


@pytest.fixture
def bilinear():
    return parse_poly(BILINEAR_TEXT)


def lin(*coeffs, axis="d"):
    """LinearDelta from the coefficient list c0, c1, ..."""
    return LinearDelta.from_list([Fraction(c) for c in coeffs], axis)


def pid(text):
    return ParamId.parse(text)


# -- random generators ---------------------------------------------------------

def random_rational(rng, bound=5):
    return Fraction(rng.randint(-bound, bound) or 1, rng.randint(1, 4))


def random_poly(rng, max_deg=3, max_delay=4, max_terms=3, kind="de"):
    """Random nonzero polynomial without constant term.

    Each term has degree 1..max_deg, delays 0..max_delay; ``kind`` selects
    pure delta ("d"), pure eps ("e") or mixed ("de") operators.
    """
    p = DEPolynomial.zero()
    while p.is_zero():
        for _ in range(rng.randint(1, max_terms)):
            n = rng.randint(1, max_deg)
            nd = n if kind == "d" else 0 if kind == "e" else rng.randint(0, n)
            d = [rng.randint(0, max_delay) for _ in range(nd)]
            e = [rng.randint(0, max_delay) for _ in range(n - nd)]
            p = p + DEPolynomial.monomial(d, e, random_rational(rng))
    return p


def random_linear(rng, max_delay=4, axis="d"):
    while True:
        coeffs = [Fraction(rng.randint(-4, 4), rng.randint(1, 3)) for _ in range(rng.randint(1, max_delay + 1))]
        l = LinearDelta.from_list(coeffs, axis)
        if not l.is_zero():
            return l


def random_trajectory(rng, length):
    return [Fraction(rng.randint(-6, 6), rng.randint(1, 5)) for _ in range(length)]


@st.composite
def polys(draw, max_deg=3, max_delay=4, max_terms=3, kind="de"):
    seed = draw(st.integers(0, 2**32 - 1))
    return random_poly(random.Random(seed), max_deg, max_delay, max_terms, kind)


@st.composite
def linears(draw, max_delay=4, axis="d"):
    seed = draw(st.integers(0, 2**32 - 1))
    return random_linear(random.Random(seed), max_delay, axis)


# -- sympy oracle --------------------------------------------------------------

def Y(k):
    return sp.Symbol(f"Y{k}")


def U(k):
    return sp.Symbol(f"U{k}")


def sym_param(p: ParamId):
    return sp.Symbol(str(p))


def sym_coeff(c: ParamPoly):
    total = sp.Integer(0)
    for mono, q in c.items():
        term = sp.Rational(q.numerator, q.denominator)
        for p, e in mono:
            term *= sym_param(p) ** e
        total += term
    return total


def to_sympy(p: DEPolynomial):
    """Signal-level expression: Y<k> stands for y(t-k), U<k> for u(t-k)."""
    total = sp.Integer(0)
    for op, c in p.items():
        term = sym_coeff(c)
        for k in op.delta:
            term *= Y(k)
        for k in op.eps:
            term *= U(k)
        total += term
    return sp.expand(total)


def sym_shift(expr, k):
    """Delay a signal-level expression by k samples."""
    syms = sorted(expr.free_symbols, key=str)
    mapping = {}
    for s in syms:
        name = s.name
        if name[0] in "YU" and name[1:].isdigit():
            mapping[s] = sp.Symbol(f"{name[0]}{int(name[1:]) + k}")
    return expr.xreplace(mapping)


def oracle_star(a: DEPolynomial, b: DEPolynomial, c: DEPolynomial | None = None):
    """A * [B, C] by substituting the delayed expressions of B and C into A."""
    eb = to_sympy(b)
    ec = to_sympy(c) if c is not None else U(0)
    total = sp.Integer(0)
    for op, coeff in a.items():
        term = sym_coeff(coeff)
        for k in op.delta:
            term *= sym_shift(eb, k)
        for k in op.eps:
            term *= sym_shift(ec, k)
        total += term
    return sp.expand(total)


X = sp.Symbol("x")


def sym_uni(l: LinearDelta):
    """phi-image of a linear polynomial as a sympy polynomial in x."""
    return sp.expand(sum(sym_coeff(c) * X**k for k, c in l.items()))
