"""Multi-indexes, delta-epsilon operators and polynomials over `ParamPoly`.

An operator ``delta_i eps_j`` acts on an output sequence y and an input
sequence u as ``y(t-i1)...y(t-in) * u(t-j1)...u(t-jm)``.  A polynomial is a
finite sum of such operators with coefficients in the parameter ring.
"""

from __future__ import annotations

from collections.abc import Mapping
from fractions import Fraction
from typing import Callable, Iterable, NamedTuple, Sequence, Union

from .errors import ParametricEvaluationError, UndefinedMeasureError, ValidationError
from .param_ring import ONE, ZERO, ParamPoly, format_rational

LESS, EQUAL, GREATER = -1, 0, 1


class MultiIndex(tuple):
    """Ascending tuple of nonnegative delays.  The empty index is the null index e."""

    __slots__ = ()

    def __new__(cls, entries: Iterable[int] = ()):
        items = tuple(sorted(int(x) for x in entries))
        if items and items[0] < 0:
            raise ValidationError(f"negative delay in multi-index {items}")
        return super().__new__(cls, items)

    @classmethod
    def _sorted(cls, items: tuple) -> "MultiIndex":
        return tuple.__new__(cls, items)

    @property
    def dim(self) -> int:
        return len(self)

    def is_null(self) -> bool:
        return not self

    def key(self):
        """Sort key: dimension first, then the rightmost differing entry."""
        return (len(self), self[::-1])

    def concat(self, other: "MultiIndex") -> "MultiIndex":
        return mi_concat(self, other)

    def shift(self, k: int) -> "MultiIndex":
        return mi_shift(self, k)

    def __repr__(self) -> str:
        return f"MultiIndex({tuple(self)})"


NULL_INDEX = MultiIndex()


def mi_concat(i: MultiIndex, j: MultiIndex) -> MultiIndex:
    """Juxtapose two multi-indexes (sorted multiset union)."""
    if not i:
        return j if isinstance(j, MultiIndex) else MultiIndex(j)
    if not j:
        return i if isinstance(i, MultiIndex) else MultiIndex(i)
    return MultiIndex._sorted(tuple(sorted(i + j)))


def mi_shift(j: MultiIndex, i: int) -> MultiIndex:
    """Add ``i`` to every delay; the null index stays null."""
    if i < 0:
        raise ValidationError("shift amount must be nonnegative")
    if not j or i == 0:
        return j if isinstance(j, MultiIndex) else MultiIndex(j)
    return MultiIndex._sorted(tuple(x + i for x in j))


class DEOperator(NamedTuple):
    """Pair (delta, eps) of multi-indexes acting on outputs and inputs."""

    delta: MultiIndex
    eps: MultiIndex

    @classmethod
    def make(cls, delta: Iterable[int] = (), eps: Iterable[int] = ()) -> "DEOperator":
        return cls(MultiIndex(delta), MultiIndex(eps))

    @property
    def degree(self) -> int:
        return len(self.delta) + len(self.eps)

    def key(self):
        return (self.delta.key(), self.eps.key())

    def is_null(self) -> bool:
        return not self.delta and not self.eps

    def dot(self, other: "DEOperator") -> "DEOperator":
        return DEOperator(mi_concat(self.delta, other.delta), mi_concat(self.eps, other.eps))

    def shift(self, k: int) -> "DEOperator":
        return DEOperator(mi_shift(self.delta, k), mi_shift(self.eps, k))

    def min_delay(self) -> int:
        firsts = [m[0] for m in (self.delta, self.eps) if m]
        if not firsts:
            raise UndefinedMeasureError("null operator has no delays")
        return min(firsts)

    def __str__(self) -> str:
        return render_operator(self)


NULL_OP = DEOperator(NULL_INDEX, NULL_INDEX)


def render_operator(op: DEOperator) -> str:
    """Canonical text, e.g. ``d1^2*d2*e1^2*e3^3``; the null operator renders as ``1``."""
    parts = []
    for letter, mi in (("d", op.delta), ("e", op.eps)):
        i = 0
        while i < len(mi):
            j = i
            while j < len(mi) and mi[j] == mi[i]:
                j += 1
            n = j - i
            parts.append(f"{letter}{mi[i]}" + (f"^{n}" if n > 1 else ""))
            i = j
    return "*".join(parts) if parts else "1"


def compare(a, b) -> int:
    """Three-valued comparison of two MultiIndexes or two DEOperators."""
    if isinstance(a, DEOperator) and isinstance(b, DEOperator):
        ka, kb = a.key(), b.key()
    elif isinstance(a, DEOperator) or isinstance(b, DEOperator):
        raise TypeError("cannot compare an operator with a multi-index")
    else:
        ka, kb = MultiIndex(a).key(), MultiIndex(b).key()
    return LESS if ka < kb else GREATER if ka > kb else EQUAL


Coeff = Union[int, Fraction, ParamPoly]


class DEPolynomial:
    """Immutable finite map DEOperator -> ParamPoly with no zero coefficients."""

    __slots__ = ("_terms", "_hash")

    def __init__(self, terms: Mapping | Iterable = ()):
        acc: dict = {}
        items = terms.items() if isinstance(terms, Mapping) else terms
        for op, c in items:
            if not isinstance(op, DEOperator):
                op = DEOperator(MultiIndex(op[0]), MultiIndex(op[1]))
            c = ParamPoly.coerce(c)
            if op in acc:
                acc[op] = acc[op] + c
            else:
                acc[op] = c
        self._terms = {op: c for op, c in acc.items() if c}
        self._hash = None

    @classmethod
    def _raw(cls, terms: dict) -> "DEPolynomial":
        obj = cls.__new__(cls)
        obj._terms = terms
        obj._hash = None
        return obj

    # -- constructors ---------------------------------------------------
    @classmethod
    def zero(cls) -> "DEPolynomial":
        return cls._raw({})

    @classmethod
    def constant(cls, c: Coeff = 1) -> "DEPolynomial":
        return cls({NULL_OP: c})

    @classmethod
    def monomial(cls, delta: Iterable[int] = (), eps: Iterable[int] = (), coeff: Coeff = 1) -> "DEPolynomial":
        return cls({DEOperator.make(delta, eps): coeff})

    @classmethod
    def delta_linear(cls, coeffs: Mapping) -> "DEPolynomial":
        """Linear delta-polynomial from {delay: coefficient}."""
        return cls({DEOperator.make((k,), ()): c for k, c in coeffs.items()})

    @classmethod
    def eps_linear(cls, coeffs: Mapping) -> "DEPolynomial":
        return cls({DEOperator.make((), (k,)): c for k, c in coeffs.items()})

    # -- inspection -----------------------------------------------------
    @property
    def terms(self) -> dict:
        return dict(self._terms)

    def items(self):
        return self._terms.items()

    def operators(self):
        return self._terms.keys()

    def coeff(self, op: DEOperator) -> ParamPoly:
        return self._terms.get(op, ZERO)

    def __len__(self) -> int:
        return len(self._terms)

    def __bool__(self) -> bool:
        return bool(self._terms)

    def is_zero(self) -> bool:
        return not self._terms

    def sorted_items(self, reverse: bool = False) -> list:
        return sorted(self._terms.items(), key=lambda oc: oc[0].key(), reverse=reverse)

    def has_constant_term(self) -> bool:
        return NULL_OP in self._terms

    def is_linear(self) -> bool:
        return all(op.degree == 1 for op in self._terms)

    def is_delta_only(self) -> bool:
        return all(not op.eps for op in self._terms)

    def is_eps_only(self) -> bool:
        return all(not op.delta for op in self._terms)

    def params(self) -> set:
        out = set()
        for c in self._terms.values():
            out |= c.params()
        return out

    def is_parameter_free(self) -> bool:
        return all(c.is_const() for c in self._terms.values())

    # -- measures -------------------------------------------------------
    def min_delay(self) -> int:
        if not self._terms:
            raise UndefinedMeasureError("minimum delay of the zero polynomial is undefined")
        delays = [op.min_delay() for op in self._terms if not op.is_null()]
        if not delays:
            raise UndefinedMeasureError("constant polynomial has no delays")
        return min(delays)

    def degree(self) -> int:
        if not self._terms:
            raise UndefinedMeasureError("degree of the zero polynomial is undefined")
        return max(op.degree for op in self._terms)

    def max_term(self) -> DEOperator:
        if not self._terms:
            raise UndefinedMeasureError("maximum term of the zero polynomial is undefined")
        return max(self._terms, key=DEOperator.key)

    def max_delay(self) -> int:
        best = -1
        for op in self._terms:
            for mi in (op.delta, op.eps):
                if mi and mi[-1] > best:
                    best = mi[-1]
        return best

    # -- arithmetic -----------------------------------------------------
    def __add__(self, other) -> "DEPolynomial":
        if not isinstance(other, DEPolynomial):
            return NotImplemented
        return self._combine(other, False)

    def _combine(self, other: "DEPolynomial", subtract: bool) -> "DEPolynomial":
        if not other._terms:
            return self
        if not self._terms:
            return -other if subtract else other
        out = dict(self._terms)
        for op, c in other._terms.items():
            v = out.get(op)
            if v is None:
                out[op] = -c if subtract else c
            else:
                v = v - c if subtract else v + c
                if v:
                    out[op] = v
                else:
                    del out[op]
        return DEPolynomial._raw(out)

    def __neg__(self) -> "DEPolynomial":
        return DEPolynomial._raw({op: -c for op, c in self._terms.items()})

    def __sub__(self, other) -> "DEPolynomial":
        if not isinstance(other, DEPolynomial):
            return NotImplemented
        return self._combine(other, True)

    def scale(self, c: Coeff) -> "DEPolynomial":
        c = ParamPoly.coerce(c)
        if not c:
            return DEPolynomial.zero()
        out = {}
        for op, v in self._terms.items():
            p = v * c
            if p:
                out[op] = p
        return DEPolynomial._raw(out)

    def __mul__(self, other) -> "DEPolynomial":
        if isinstance(other, DEPolynomial):
            return de_dot(self, other)
        if isinstance(other, (int, Fraction, ParamPoly)):
            return self.scale(other)
        return NotImplemented

    def __rmul__(self, other) -> "DEPolynomial":
        if isinstance(other, (int, Fraction, ParamPoly)):
            return self.scale(other)
        return NotImplemented

    def dot(self, other: "DEPolynomial") -> "DEPolynomial":
        return de_dot(self, other)

    def star(self, b: "DEPolynomial", c: "DEPolynomial | None" = None) -> "DEPolynomial":
        return de_star(self, b, c)

    def shift(self, k: int) -> "DEPolynomial":
        """Shift every delay (both parts) by k."""
        if k == 0:
            return self
        return DEPolynomial._raw({op.shift(k): c for op, c in self._terms.items()})

    def substitute(self, rule: Mapping) -> "DEPolynomial":
        if not rule:
            return self
        out = {}
        for op, c in self._terms.items():
            v = c.substitute(rule)
            if v:
                out[op] = v
        return DEPolynomial._raw(out)

    def map_coeffs(self, fn: Callable[[ParamPoly], ParamPoly]) -> "DEPolynomial":
        return DEPolynomial({op: fn(c) for op, c in self._terms.items()})

    # -- comparison / rendering -----------------------------------------
    def __eq__(self, other) -> bool:
        if not isinstance(other, DEPolynomial):
            return NotImplemented
        return self._terms == other._terms

    def __hash__(self) -> int:
        if self._hash is None:
            self._hash = hash(frozenset(self._terms.items()))
        return self._hash

    def __str__(self) -> str:
        return render_poly(self)

    def __repr__(self) -> str:
        return f"DEPolynomial({render_poly(self)!r})"


def render_coeff_times(c: ParamPoly, body: str) -> tuple[str, str]:
    """Return (sign, text) for ``c * body`` with ``body`` possibly ``'1'``."""
    if c.is_const():
        v = c.const_value()
        sign = "-" if v < 0 else "+"
        mag = abs(v)
        if body == "1":
            return sign, format_rational(mag)
        if mag == 1:
            return sign, body
        return sign, f"{format_rational(mag)}*{body}"
    text = str(c)
    if c.needs_parens():
        text = f"({text})"
        sign = "+"
    else:
        sign = "-" if text.startswith("-") else "+"
        text = text.lstrip("-")
    return sign, text if body == "1" else f"{text}*{body}"


def render_poly(p: DEPolynomial) -> str:
    """Signed term list in ascending operator order, e.g. ``-2*d0 + d1``."""
    if p.is_zero():
        return "0"
    out = ""
    for n, (op, c) in enumerate(p.sorted_items()):
        sign, text = render_coeff_times(c, render_operator(op))
        if n == 0:
            out = ("-" if sign == "-" else "") + text
        else:
            out += f" {sign} {text}"
    return out


# -- products ---------------------------------------------------------------
def de_add(a: DEPolynomial, b: DEPolynomial) -> DEPolynomial:
    return a + b


def de_dot(a: DEPolynomial, b: DEPolynomial) -> DEPolynomial:
    """Bilinear extension of the operator dot-product (pointwise sequence product)."""
    if not a._terms or not b._terms:
        return DEPolynomial.zero()
    out: dict = {}
    for opa, ca in a._terms.items():
        for opb, cb in b._terms.items():
            op = opa.dot(opb)
            v = ca * cb
            old = out.get(op)
            out[op] = v if old is None else old + v
    return DEPolynomial._raw({op: c for op, c in out.items() if c})


IDENTITY_Y = DEPolynomial.monomial(delta=(0,))
IDENTITY_U = DEPolynomial.monomial(eps=(0,))


class _ShiftPowers:
    """Memo of ``shift(P, k) ** n`` under the dot-product."""

    def __init__(self, p: DEPolynomial):
        self.p = p
        self.cache: dict = {}

    def get(self, k: int, n: int) -> DEPolynomial:
        key = (k, n)
        hit = self.cache.get(key)
        if hit is not None:
            return hit
        if n == 1:
            val = self.p.shift(k)
        else:
            val = de_dot(self.get(k, n - 1), self.get(k, 1))
        self.cache[key] = val
        return val


def _run_lengths(mi: MultiIndex):
    i = 0
    while i < len(mi):
        j = i
        while j < len(mi) and mi[j] == mi[i]:
            j += 1
        yield mi[i], j - i
        i = j


def de_star(a: DEPolynomial, b: DEPolynomial, c: DEPolynomial | None = None) -> DEPolynomial:
    """Star product ``A * [B, C]``: substitute y -> B[y,u] and u -> C[y,u] in A.

    With ``C`` omitted the inputs are left untouched (``C = eps_0``).
    """
    if c is None:
        c = IDENTITY_U
    yb, uc = _ShiftPowers(b), _ShiftPowers(c)
    one = DEPolynomial.constant(1)
    out = DEPolynomial.zero()
    acc: dict = {}
    for op, coeff in a._terms.items():
        prod = one
        for k, n in _run_lengths(op.delta):
            prod = de_dot(prod, yb.get(k, n))
            if not prod:
                break
        if prod:
            for k, n in _run_lengths(op.eps):
                prod = de_dot(prod, uc.get(k, n))
                if not prod:
                    break
        for pop, pc in prod._terms.items():
            v = pc * coeff
            old = acc.get(pop)
            acc[pop] = v if old is None else old + v
    out = DEPolynomial._raw({op: v for op, v in acc.items() if v})
    return out


# -- decomposition / measures ------------------------------------------------
class Decomposition(NamedTuple):
    """Pure delta, pure eps and cross parts, with linear/nonlinear splits."""

    delta: DEPolynomial
    eps: DEPolynomial
    cross: DEPolynomial
    delta_l: DEPolynomial
    delta_nl: DEPolynomial
    eps_l: DEPolynomial
    eps_nl: DEPolynomial


def decompose(a: DEPolynomial) -> Decomposition:
    parts = {name: {} for name in ("dl", "dnl", "el", "enl", "x", "c")}
    for op, c in a.items():
        if op.delta and op.eps:
            parts["x"][op] = c
        elif op.delta:
            parts["dl" if len(op.delta) == 1 else "dnl"][op] = c
        elif op.eps:
            parts["el" if len(op.eps) == 1 else "enl"][op] = c
        else:
            parts["c"][op] = c
    if parts["c"]:
        # constants belong to no part; keep them in the delta part so that the sum is exact
        parts["dnl"].update(parts["c"])
    d = {k: DEPolynomial._raw(v) for k, v in parts.items()}
    return Decomposition(
        delta=d["dl"] + d["dnl"],
        eps=d["el"] + d["enl"],
        cross=d["x"],
        delta_l=d["dl"],
        delta_nl=d["dnl"],
        eps_l=d["el"],
        eps_nl=d["enl"],
    )


class Measures(NamedTuple):
    d: int
    deg: int
    max_term: DEOperator


def measures(a: DEPolynomial) -> Measures:
    return Measures(a.min_delay(), a.degree(), a.max_term())


# -- evaluation -------------------------------------------------------------
Sequence_ = Union[Sequence, Callable[[int], Fraction]]


def _reader(seq) -> Callable[[int], Fraction]:
    if callable(seq):
        return lambda t: Fraction(0) if t < 0 else seq(t)
    return lambda t: Fraction(0) if t < 0 else seq[t]


def evaluate(a: DEPolynomial, y, u, t: int) -> Fraction:
    """Exact value of ``A[y, u](t)``; samples at negative times read as 0."""
    ry, ru = _reader(y), _reader(u)
    total = Fraction(0)
    for op, c in a.items():
        if not c.is_const():
            raise ParametricEvaluationError(f"coefficient {c} of {render_operator(op)} is not numeric")
        v = c.const_value()
        for k in op.delta:
            v *= ry(t - k)
            if not v:
                break
        if v:
            for k in op.eps:
                v *= ru(t - k)
                if not v:
                    break
        total += v
    return total


def star_oracle_sequences(b: DEPolynomial, c: DEPolynomial, y, u, length: int):
    """Sequences ``B[y,u]`` and ``C[y,u]`` over t = 0..length-1 (used by the homomorphism check)."""
    w = [evaluate(b, y, u, t) for t in range(length)]
    v = [evaluate(c, y, u, t) for t in range(length)]
    return w, v
