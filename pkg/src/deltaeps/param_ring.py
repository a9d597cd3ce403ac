"""Exact coefficient ring: polynomials over Q in the formal parameters w and s.

A `ParamPoly` is an immutable sparse map from monomials to rationals.  A
monomial is a tuple of ``(ParamId, exponent)`` pairs sorted by `ParamId`.
`Rule` is a partial assignment of rationals to parameters.
"""

from __future__ import annotations

import re
from bisect import bisect_right
from collections.abc import Mapping
from fractions import Fraction
from functools import lru_cache
from math import gcd
from typing import Iterable, Iterator, NamedTuple, Union

from .errors import ParametricEvaluationError, ParseError, RuleConflictError

KINDS = ("w", "s", "q")


class ParamId(NamedTuple):
    """Formal parameter ``kind[lam, phase, h, k]``.

    ``phase`` is the u counter for w-parameters and the omega counter for
    s-parameters.  Kind ``q`` is reserved for auxiliary unknowns introduced by
    the matching module (free feedback coefficients).
    """

    kind: str
    lam: int
    phase: int
    h: int
    k: int

    def __str__(self) -> str:
        return f"{self.kind}[{self.lam},{self.phase},{self.h},{self.k}]"

    @classmethod
    def parse(cls, text: str) -> "ParamId":
        m = _PID_RE.fullmatch(text.strip())
        if not m:
            raise ParseError("malformed parameter name", text, 0)
        kind = m.group(1)
        nums = [int(x) for x in m.group(2).split(",")]
        if len(nums) != 4:
            raise ParseError("parameter needs four indexes", text, 0)
        return cls(kind, *nums)


_PID_RE = re.compile(r"([wsq])\[\s*(\d+\s*,\s*\d+\s*,\s*\d+\s*,\s*\d+)\s*\]")

Monomial = tuple  # public form: tuple[tuple[ParamId, int], ...] sorted by ParamId
Scalar = Union[int, Fraction]

# Internally a monomial is the ascending tuple of interned parameter indexes,
# one entry per unit of exponent, so a product is a sorted concatenation.
_INDEX: dict = {}
_PIDS: list = []


def _intern(pid: ParamId) -> int:
    i = _INDEX.get(pid)
    if i is None:
        i = _INDEX[pid] = len(_PIDS)
        _PIDS.append(pid)
    return i


def _mono_mul(a: tuple, b: tuple) -> tuple:
    if not a:
        return b
    if not b:
        return a
    return tuple(sorted(a + b))


def _to_internal(m: Monomial) -> tuple:
    out = []
    for pid, e in m:
        if e < 0:
            raise ValueError("negative exponent in a monomial")
        out.extend([_intern(pid)] * e)
    return tuple(sorted(out))


@lru_cache(maxsize=1 << 16)
def _to_public(m: tuple) -> Monomial:
    counts: dict = {}
    for i in m:
        counts[i] = counts.get(i, 0) + 1
    return tuple(sorted((_PIDS[i], e) for i, e in counts.items()))


def _mono_degree(m: Monomial) -> int:
    return sum(e for _, e in m)


def _grlex_key(m: Monomial):
    return (_mono_degree(m), m)


class ParamPoly:
    """Immutable multivariate polynomial with rational coefficients.

    Stored as integer numerators over one positive common denominator, kept
    in lowest terms so that equal polynomials have equal representations.
    """

    __slots__ = ("_num", "_den", "_hash")

    def __init__(self, terms: Mapping | None = None):
        acc: dict = {}
        for m, c in (terms.items() if terms else ()):
            k = _to_internal(m)
            acc[k] = acc.get(k, 0) + Fraction(c)
        num, den = _to_common(acc)
        self._num, self._den = _normalize(num, den)
        self._hash = None

    @classmethod
    def _raw(cls, num: dict, den: int = 1) -> "ParamPoly":
        """Wrap numerators that are already nonzero and in lowest terms."""
        obj = cls.__new__(cls)
        obj._num = num
        obj._den = den
        obj._hash = None
        return obj

    @classmethod
    def _make(cls, num: dict, den: int) -> "ParamPoly":
        num, den = _normalize({m: c for m, c in num.items() if c}, den)
        return cls._raw(num, den)

    @classmethod
    def const(cls, value: Scalar) -> "ParamPoly":
        value = Fraction(value)
        return cls._raw({(): value.numerator}, value.denominator) if value else ZERO

    @classmethod
    def var(cls, pid: ParamId) -> "ParamPoly":
        return cls._raw({(_intern(pid),): 1})

    @staticmethod
    def coerce(x) -> "ParamPoly":
        if isinstance(x, ParamPoly):
            return x
        if isinstance(x, ParamId):
            return ParamPoly.var(x)
        if isinstance(x, (int, Fraction)):
            return ParamPoly.const(x)
        raise TypeError(f"cannot use {type(x).__name__} as a ParamPoly")

    # -- inspection -----------------------------------------------------
    @property
    def terms(self) -> dict:
        return dict(self.items())

    def items(self):
        d = self._den
        return [(_to_public(m), Fraction(c, d)) for m, c in self._num.items()]

    def coeff(self, m: Monomial) -> Fraction:
        return Fraction(self._num.get(_to_internal(m), 0), self._den)

    def is_zero(self) -> bool:
        return not self._num

    def is_const(self) -> bool:
        return not self._num or (len(self._num) == 1 and () in self._num)

    def const_value(self) -> Fraction:
        if not self.is_const():
            raise ParametricEvaluationError(f"coefficient {self} still depends on parameters")
        return self.constant_term()

    def constant_term(self) -> Fraction:
        return Fraction(self._num.get((), 0), self._den)

    def params(self) -> set:
        idx = set()
        for m in self._num:
            idx.update(m)
        return {_PIDS[i] for i in idx}

    def degree(self) -> int:
        return max((len(m) for m in self._num), default=0)

    def degree_in(self, pid: ParamId) -> int:
        i = _INDEX.get(pid)
        if i is None:
            return 0
        return max((m.count(i) for m in self._num), default=0)

    def as_univariate(self, pid: ParamId) -> dict:
        """Coefficients of `self` seen as a polynomial in `pid`: {exponent: ParamPoly}."""
        i = _INDEX.get(pid)
        buckets: dict = {}
        for m, c in self._num.items():
            e = m.count(i)
            rest = tuple(x for x in m if x != i) if e else m
            buckets.setdefault(e, {})[rest] = c
        return {e: ParamPoly._make(d, self._den) for e, d in buckets.items()}

    def __len__(self) -> int:
        return len(self._num)

    # -- arithmetic -----------------------------------------------------
    def __add__(self, other) -> "ParamPoly":
        try:
            other = ParamPoly.coerce(other)
        except TypeError:
            return NotImplemented
        return self._combine(other, 1)

    def _combine(self, other: "ParamPoly", sign: int) -> "ParamPoly":
        """``self + sign * other`` for sign in {1, -1}."""
        if not other._num:
            return self
        if not self._num:
            return other if sign == 1 else -other
        da, db = self._den, other._den
        g = gcd(da, db)
        fa, fb = db // g, sign * (da // g)
        den = da * fa
        out = {m: c * fa for m, c in self._num.items()} if fa != 1 else dict(self._num)
        get = out.get
        for m, c in other._num.items():
            v = get(m)
            if v is None:
                out[m] = c * fb
            else:
                v += c * fb
                if v:
                    out[m] = v
                else:
                    del out[m]
        if den == 1:
            return ParamPoly._raw(out)
        return ParamPoly._raw(*_normalize(out, den))

    __radd__ = __add__

    def __neg__(self) -> "ParamPoly":
        return ParamPoly._raw({m: -c for m, c in self._num.items()}, self._den)

    def __sub__(self, other) -> "ParamPoly":
        try:
            other = ParamPoly.coerce(other)
        except TypeError:
            return NotImplemented
        return self._combine(other, -1)

    def __rsub__(self, other) -> "ParamPoly":
        return ParamPoly.coerce(other) - self

    def scale(self, k: Scalar) -> "ParamPoly":
        k = Fraction(k)
        if not k or not self._num:
            return ZERO
        p, q = k.numerator, k.denominator
        if p == 1 and q == 1:
            return self
        return ParamPoly._raw(*_normalize({m: c * p for m, c in self._num.items()}, self._den * q))

    def __mul__(self, other) -> "ParamPoly":
        if isinstance(other, (int, Fraction)):
            return self.scale(other)
        try:
            other = ParamPoly.coerce(other)
        except TypeError:
            return NotImplemented
        if not self._num or not other._num:
            return ZERO
        a, b = self._num, other._num
        if len(b) == 1 and () in b:
            return self.scale(Fraction(b[()], other._den))
        if len(a) == 1 and () in a:
            return other.scale(Fraction(a[()], self._den))
        if len(a) < len(b):
            a, b = b, a
        # multiplying by one monomial is injective, so each partial product has no collisions
        out = None
        for mb, cb in b.items():
            if len(mb) == 1:
                j = mb[0]
                part = {}
                for ma, ca in a.items():
                    k = bisect_right(ma, j)
                    part[ma[:k] + mb + ma[k:]] = ca * cb
            elif mb:
                part = {tuple(sorted(ma + mb)): ca * cb for ma, ca in a.items()}
            else:
                part = {ma: ca * cb for ma, ca in a.items()}
            if out is None:
                out = part
                get = out.get
                continue
            for m, c in part.items():
                v = get(m)
                if v is None:
                    out[m] = c
                else:
                    v += c
                    if v:
                        out[m] = v
                    else:
                        del out[m]
        return ParamPoly._raw(*_normalize(out, self._den * other._den))

    __rmul__ = __mul__

    def __truediv__(self, k) -> "ParamPoly":
        if isinstance(k, ParamPoly):
            k = k.const_value()
        return self.scale(1 / Fraction(k))

    def __pow__(self, n: int) -> "ParamPoly":
        if n < 0:
            raise ValueError("negative power")
        result = ONE
        base = self
        while n:
            if n & 1:
                result = result * base
            base = base * base
            n >>= 1
        return result

    # -- substitution ---------------------------------------------------
    def substitute(self, rule: Mapping) -> "ParamPoly":
        """Replace bound parameters; values may be rationals or ParamPolys."""
        if not rule or not self._num:
            return self
        kept: dict = {}
        result = ZERO
        cache: dict = {}
        for m, c in self._num.items():
            rest = []
            factor = None
            for p, e in _to_public(m):
                if p in rule:
                    key = (p, e)
                    val = cache.get(key)
                    if val is None:
                        v = rule[p]
                        val = (ParamPoly.coerce(v) if not isinstance(v, (int, Fraction)) else ParamPoly.const(v)) ** e
                        cache[key] = val
                    factor = val if factor is None else factor * val
                else:
                    rest.extend([_INDEX[p]] * e)
            if factor is None:
                kept[m] = c
            else:
                result = result + factor * ParamPoly._raw({tuple(sorted(rest)): c})
        return ParamPoly._make(kept, self._den) + result.scale(Fraction(1, self._den))

    def evaluate(self, values: Mapping) -> Fraction:
        return self.substitute(values).const_value()

    # -- comparison / rendering -----------------------------------------
    def __eq__(self, other) -> bool:
        if isinstance(other, (int, Fraction)):
            other = ParamPoly.const(other)
        if not isinstance(other, ParamPoly):
            return NotImplemented
        return self._den == other._den and self._num == other._num

    def __hash__(self) -> int:
        if self._hash is None:
            self._hash = hash((self._den, frozenset(self._num.items())))
        return self._hash

    def __bool__(self) -> bool:
        return bool(self._num)

    def sorted_terms(self) -> list:
        """Monomials in ascending graded-lexicographic order (constant first)."""
        return sorted(self.items(), key=lambda mc: _grlex_key(mc[0]))

    def __str__(self) -> str:
        if not self._num:
            return "0"
        parts = []
        for m, c in self.sorted_terms():
            mono = "*".join(str(p) if e == 1 else f"{p}^{e}" for p, e in m)
            if not mono:
                body = format_rational(abs(c))
            elif abs(c) == 1:
                body = mono
            else:
                body = f"{format_rational(abs(c))}*{mono}"
            sign = "-" if c < 0 else "+"
            parts.append((sign, body))
        first_sign, first_body = parts[0]
        out = ("-" if first_sign == "-" else "") + first_body
        for sign, body in parts[1:]:
            out += f" {sign} {body}"
        return out

    def __repr__(self) -> str:
        return f"ParamPoly({str(self)!r})"

    def needs_parens(self) -> bool:
        return len(self._num) > 1


def _to_common(terms: dict) -> tuple[dict, int]:
    """Fractions -> (integer numerators, common denominator)."""
    den = 1
    for c in terms.values():
        den = den * c.denominator // gcd(den, c.denominator)
    return {m: c.numerator * (den // c.denominator) for m, c in terms.items() if c}, den


def _normalize(num: dict, den: int) -> tuple[dict, int]:
    """Divide out the common content so the representation is canonical."""
    if not num:
        return {}, 1
    if den == 1:
        return num, 1
    g = gcd(den, *num.values())
    if g == 1:
        return num, den
    return {m: c // g for m, c in num.items()}, den // g


ZERO = ParamPoly._raw({})
ONE = ParamPoly._raw({(): 1})


def format_rational(q: Fraction) -> str:
    q = Fraction(q)
    return str(q.numerator) if q.denominator == 1 else f"{q.numerator}/{q.denominator}"


def pp_arith(a, b, op: str) -> ParamPoly:
    """Ring operation ``op`` in {'add', 'sub', 'mul'} on two coefficients."""
    a, b = ParamPoly.coerce(a), ParamPoly.coerce(b)
    if op == "add":
        return a + b
    if op == "sub":
        return a - b
    if op == "mul":
        return a * b
    raise ValueError(f"unknown operation {op!r}")


def pp_sum(polys: Iterable) -> ParamPoly:
    """Sum of many ParamPolys accumulated in a single dictionary."""
    polys = [p for p in polys if p._num]
    if not polys:
        return ZERO
    if len(polys) == 1:
        return polys[0]
    den = 1
    for p in polys:
        den = den * p._den // gcd(den, p._den)
    out: dict = {}
    get = out.get
    for p in polys:
        f = den // p._den
        for m, c in p._num.items():
            v = get(m)
            out[m] = c * f if v is None else v + c * f
    return ParamPoly._make(out, den)


def pp_substitute(p: ParamPoly, r: Mapping) -> ParamPoly:
    return ParamPoly.coerce(p).substitute(r)


class Rule(Mapping):
    """Partial assignment ParamId -> Fraction.  Unbound parameters stay symbolic."""

    __slots__ = ("_b",)

    def __init__(self, bindings: Mapping | Iterable | None = None):
        self._b: dict = {}
        if bindings is None:
            return
        items = bindings.items() if isinstance(bindings, Mapping) else bindings
        for pid, value in items:
            if isinstance(pid, str):
                pid = ParamId.parse(pid)
            value = Fraction(value)
            old = self._b.get(pid)
            if old is not None and old != value:
                raise RuleConflictError(f"{pid} bound to both {old} and {value}")
            self._b[pid] = value

    def __getitem__(self, pid):
        return self._b[pid]

    def __iter__(self) -> Iterator:
        return iter(sorted(self._b))

    def __len__(self) -> int:
        return len(self._b)

    def __hash__(self) -> int:
        return hash(frozenset(self._b.items()))

    def __eq__(self, other) -> bool:
        if isinstance(other, Rule):
            return self._b == other._b
        if isinstance(other, Mapping):
            return self._b == dict(other)
        return NotImplemented

    def compose(self, other: Mapping) -> "Rule":
        """Union of two rules; conflicting bindings raise RuleConflictError."""
        return Rule(list(self._b.items()) + list(Rule(other)._b.items()))

    def restrict(self, pids: Iterable) -> "Rule":
        keep = set(pids)
        return Rule({p: v for p, v in self._b.items() if p in keep})

    def __str__(self) -> str:
        return "{" + ", ".join(f"{p} = {format_rational(self._b[p])}" for p in self) + "}"

    def __repr__(self) -> str:
        return f"Rule({str(self)})"

    def to_text(self) -> str:
        return "".join(f"{p} = {format_rational(self._b[p])}\n" for p in self)


def parse_rational(text: str) -> Fraction:
    """Parse an exact rational ``p`` or ``p/q``; decimals are rejected."""
    t = text.strip()
    if not re.fullmatch(r"[+-]?\d+(/\d+)?", t):
        raise ParseError("expected a rational p or p/q", text, 0)
    value = Fraction(t)
    return value


def parse_rules(text: str) -> Rule:
    """Read the plain-text rule format: one ``w[1,1,0,3] = 0`` per line, ``#`` comments."""
    bindings = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ParseError(f"line {lineno}: expected 'name = value'", raw, 0)
        lhs, rhs = line.split("=", 1)
        try:
            pid = ParamId.parse(lhs)
            value = parse_rational(rhs)
        except ParseError as exc:
            raise ParseError(f"line {lineno}: {exc}", raw, 0) from None
        bindings.append((pid, value))
    return Rule(bindings)
