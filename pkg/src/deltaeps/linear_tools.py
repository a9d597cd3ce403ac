"""Linear delta/eps polynomials and their univariate images.

The map phi sends ``sum m_i delta_i`` to ``sum m_i x^i``; under it the star
product of linear polynomials becomes ordinary polynomial multiplication.
This module builds gcds, resultants, Diophantine solutions and causal
feedback families on top of that correspondence.
"""

from __future__ import annotations

from collections.abc import Mapping
from fractions import Fraction
from math import gcd as igcd
from typing import Iterable, NamedTuple, Sequence

from .core_algebra import DEOperator, DEPolynomial, MultiIndex, render_coeff_times
from .errors import NoSolutionError, ValidationError
from .param_ring import ONE, ZERO, ParamPoly


def _is_zero(c) -> bool:
    return c == 0


def _norm(c):
    """Store parameter-free coefficients as Fractions and the rest as ParamPolys."""
    if isinstance(c, ParamPoly):
        return c.const_value() if c.is_const() else c
    return Fraction(c)


class UniPoly:
    """Dense univariate polynomial, coefficients listed from x^0 upward."""

    __slots__ = ("coeffs",)

    def __init__(self, coeffs: Iterable = ()):
        cs = [_norm(c) for c in coeffs]
        while cs and _is_zero(cs[-1]):
            cs.pop()
        self.coeffs = tuple(cs)

    @property
    def degree(self) -> int:
        """Degree; the zero polynomial has degree -1."""
        return len(self.coeffs) - 1

    def is_zero(self) -> bool:
        return not self.coeffs

    def lead(self):
        return self.coeffs[-1]

    def is_numeric(self) -> bool:
        return all(isinstance(c, Fraction) for c in self.coeffs)

    def __eq__(self, other) -> bool:
        return isinstance(other, UniPoly) and self.coeffs == other.coeffs

    def __hash__(self) -> int:
        return hash(self.coeffs)

    def __add__(self, other: "UniPoly") -> "UniPoly":
        a, b = self.coeffs, other.coeffs
        n = max(len(a), len(b))
        return UniPoly((a[i] if i < len(a) else 0) + (b[i] if i < len(b) else 0) for i in range(n))

    def __neg__(self) -> "UniPoly":
        return UniPoly(-c for c in self.coeffs)

    def __sub__(self, other: "UniPoly") -> "UniPoly":
        return self + (-other)

    def __mul__(self, other) -> "UniPoly":
        if not isinstance(other, UniPoly):
            return UniPoly(c * other for c in self.coeffs)
        a, b = self.coeffs, other.coeffs
        if not a or not b:
            return UniPoly()
        out = [Fraction(0)] * (len(a) + len(b) - 1)
        for i, x in enumerate(a):
            if _is_zero(x):
                continue
            for j, y in enumerate(b):
                out[i + j] = out[i + j] + x * y
        return UniPoly(out)

    __rmul__ = __mul__

    def divmod(self, other: "UniPoly") -> tuple["UniPoly", "UniPoly"]:
        """Euclidean division over Q; both operands must be parameter-free."""
        if other.is_zero():
            raise ZeroDivisionError("division by the zero polynomial")
        if not (self.is_numeric() and other.is_numeric()):
            raise ValidationError("polynomial division needs rational coefficients")
        r = list(self.coeffs)
        dq = len(r) - len(other.coeffs)
        if dq < 0:
            return UniPoly(), self
        q = [Fraction(0)] * (dq + 1)
        lead = other.coeffs[-1]
        for k in range(dq, -1, -1):
            c = r[k + len(other.coeffs) - 1] / lead
            q[k] = c
            if c:
                for i, b in enumerate(other.coeffs):
                    r[k + i] -= c * b
        return UniPoly(q), UniPoly(r[: len(other.coeffs) - 1])

    def __floordiv__(self, other: "UniPoly") -> "UniPoly":
        return self.divmod(other)[0]

    def __mod__(self, other: "UniPoly") -> "UniPoly":
        return self.divmod(other)[1]

    def monic(self) -> "UniPoly":
        if self.is_zero():
            return self
        return self * (1 / Fraction(self.lead()))

    def __call__(self, x):
        acc = Fraction(0)
        for c in reversed(self.coeffs):
            acc = acc * x + c
        return acc

    def __repr__(self) -> str:
        return f"UniPoly({[str(c) for c in self.coeffs]})"


def uni_egcd(a: UniPoly, b: UniPoly) -> tuple[UniPoly, UniPoly, UniPoly]:
    """Monic g with s*a + t*b = g (extended Euclid over Q)."""
    r0, r1 = a, b
    s0, s1 = UniPoly([1]), UniPoly()
    t0, t1 = UniPoly(), UniPoly([1])
    while not r1.is_zero():
        q, r = r0.divmod(r1)
        r0, r1 = r1, r
        s0, s1 = s1, s0 - q * s1
        t0, t1 = t1, t0 - q * t1
    if r0.is_zero():
        return r0, s0, t0
    inv = 1 / Fraction(r0.lead())
    return r0 * inv, s0 * inv, t0 * inv


def uni_gcd(a: UniPoly, b: UniPoly) -> UniPoly:
    return uni_egcd(a, b)[0]


def rational_roots(p: UniPoly) -> list[Fraction]:
    """Distinct rational roots of a parameter-free polynomial (root 0 included if present)."""
    if p.is_zero() or p.degree < 1:
        return []
    cs = list(p.coeffs)
    roots = []
    if cs[0] == 0:
        roots.append(Fraction(0))
        while cs and cs[0] == 0:
            cs.pop(0)
    if len(cs) < 2:
        return roots
    den = 1
    for c in cs:
        den = den * c.denominator // igcd(den, c.denominator)
    ints = [int(c * den) for c in cs]
    a0, an = abs(ints[0]), abs(ints[-1])
    if a0 > 10**8 or an > 10**8:
        return roots  # divisor enumeration would be too slow; callers fall back to the pool
    q = UniPoly(cs)
    for num in _divisors(a0):
        for d in _divisors(an):
            for sign in (1, -1):
                r = Fraction(sign * num, d)
                if r not in roots and q(r) == 0:
                    roots.append(r)
    return sorted(roots)


def _divisors(n: int) -> list[int]:
    out = []
    i = 1
    while i * i <= n:
        if n % i == 0:
            out.append(i)
            if i * i != n:
                out.append(n // i)
        i += 1
    return out


class LinearDelta:
    """Linear delta- or eps-polynomial ``sum c_k * axis_k`` with coefficients in ParamPoly."""

    __slots__ = ("axis", "_c")

    def __init__(self, coeffs: Mapping | Iterable = (), axis: str = "d"):
        if axis not in ("d", "e"):
            raise ValidationError("axis must be 'd' or 'e'")
        self.axis = axis
        acc: dict = {}
        items = coeffs.items() if isinstance(coeffs, Mapping) else coeffs
        for k, c in items:
            k = int(k)
            if k < 0:
                raise ValidationError("negative delay")
            acc[k] = acc.get(k, ZERO) + ParamPoly.coerce(c)
        self._c = {k: c for k, c in sorted(acc.items()) if c}

    @classmethod
    def from_list(cls, values: Sequence, axis: str = "d") -> "LinearDelta":
        return cls(enumerate(values), axis)

    @classmethod
    def from_de(cls, p: DEPolynomial) -> "LinearDelta":
        """Convert a linear pure-delta or pure-eps DEPolynomial."""
        if p.is_zero():
            return cls({}, "d")
        if not p.is_linear():
            raise ValidationError(f"{p} is not linear")
        if p.is_delta_only():
            return cls({op.delta[0]: c for op, c in p.items()}, "d")
        if p.is_eps_only():
            return cls({op.eps[0]: c for op, c in p.items()}, "e")
        raise ValidationError(f"{p} mixes outputs and inputs")

    # -- inspection -----------------------------------------------------
    @property
    def coeffs(self) -> dict:
        return dict(self._c)

    def coeff(self, k: int) -> ParamPoly:
        return self._c.get(k, ZERO)

    def items(self):
        return self._c.items()

    def is_zero(self) -> bool:
        return not self._c

    @property
    def degree(self) -> int:
        """Highest delay (the degree of the phi-image); -1 for zero."""
        return max(self._c, default=-1)

    def min_delay(self) -> int:
        if not self._c:
            raise ValidationError("minimum delay of the zero polynomial is undefined")
        return min(self._c)

    def params(self) -> set:
        out = set()
        for c in self._c.values():
            out |= c.params()
        return out

    def is_parameter_free(self) -> bool:
        return all(c.is_const() for c in self._c.values())

    def is_unit(self) -> bool:
        """True for a nonzero multiple of delta_0 (phi-image a nonzero constant)."""
        return list(self._c) == [0]

    # -- conversions ----------------------------------------------------
    def to_de(self) -> DEPolynomial:
        if self.axis == "d":
            return DEPolynomial({DEOperator(MultiIndex((k,)), MultiIndex()): c for k, c in self._c.items()})
        return DEPolynomial({DEOperator(MultiIndex(), MultiIndex((k,))): c for k, c in self._c.items()})

    def with_axis(self, axis: str) -> "LinearDelta":
        return LinearDelta(self._c, axis)

    def substitute(self, rule: Mapping) -> "LinearDelta":
        return LinearDelta({k: c.substitute(rule) for k, c in self._c.items()}, self.axis)

    # -- arithmetic -----------------------------------------------------
    def __add__(self, other: "LinearDelta") -> "LinearDelta":
        out = dict(self._c)
        for k, c in other._c.items():
            out[k] = out.get(k, ZERO) + c
        return LinearDelta(out, self.axis)

    def __neg__(self) -> "LinearDelta":
        return LinearDelta({k: -c for k, c in self._c.items()}, self.axis)

    def __sub__(self, other: "LinearDelta") -> "LinearDelta":
        return self + (-other)

    def scale(self, c) -> "LinearDelta":
        c = ParamPoly.coerce(c)
        return LinearDelta({k: v * c for k, v in self._c.items()}, self.axis)

    def star(self, other: "LinearDelta") -> "LinearDelta":
        """Star product of linear polynomials (convolution of coefficients)."""
        out: dict = {}
        for i, a in self._c.items():
            for j, b in other._c.items():
                out[i + j] = out.get(i + j, ZERO) + a * b
        return LinearDelta(out, self.axis)

    def monic(self) -> "LinearDelta":
        if not self._c:
            return self
        lead = self._c[self.degree]
        return self.scale(1 / lead.const_value())

    def __eq__(self, other) -> bool:
        return isinstance(other, LinearDelta) and self.axis == other.axis and self._c == other._c

    def __hash__(self) -> int:
        return hash((self.axis, tuple(self._c.items())))

    def __str__(self) -> str:
        if not self._c:
            return "0"
        out = ""
        for n, (k, c) in enumerate(self._c.items()):
            sign, text = render_coeff_times(c, f"{self.axis}{k}")
            out = (("-" if sign == "-" else "") + text) if n == 0 else f"{out} {sign} {text}"
        return out

    def __repr__(self) -> str:
        return f"LinearDelta({str(self)!r})"


def phi(l: LinearDelta) -> UniPoly:
    """Univariate image: delay i maps to the coefficient of x^i."""
    if not isinstance(l, LinearDelta):
        l = LinearDelta.from_de(l)
    if l.is_zero():
        return UniPoly()
    return UniPoly(l.coeff(i) for i in range(l.degree + 1))


def phi_inv(p: UniPoly, axis: str = "d") -> LinearDelta:
    return LinearDelta(enumerate(p.coeffs), axis)


def lin_gcd(ps: Sequence[LinearDelta]) -> LinearDelta:
    """Monic gcd of parameter-free linear polynomials; delta_0 when coprime."""
    if not ps:
        raise ValidationError("gcd of an empty list")
    axis = ps[0].axis
    g = None
    for p in ps:
        if p.is_zero():
            raise ValidationError("gcd input contains the zero polynomial")
        if not p.is_parameter_free():
            raise ValidationError(f"gcd input {p} still has parameters")
        q = phi(p)
        g = q.monic() if g is None else uni_gcd(g, q)
    return phi_inv(g, axis)


def divides(d: LinearDelta, p: LinearDelta) -> bool:
    """Whether phi(d) divides phi(p) over Q (both parameter-free)."""
    if p.is_zero():
        return True
    return phi(p).divmod(phi(d))[1].is_zero()


def exact_quotient(p: LinearDelta, d: LinearDelta) -> LinearDelta:
    q, r = phi(p).divmod(phi(d))
    if not r.is_zero():
        raise NoSolutionError(f"{d} does not divide {p}", witness=phi_inv(r, p.axis))
    return phi_inv(q, p.axis)


# -- resultants --------------------------------------------------------------
def _det(matrix: list[list]) -> ParamPoly:
    """Determinant over ParamPoly by Laplace expansion memoized on column subsets."""
    n = len(matrix)
    memo: dict = {}

    def rec(row: int, mask: int) -> ParamPoly:
        if row == n:
            return ONE
        hit = memo.get(mask)
        if hit is not None:
            return hit
        total = ZERO
        sign = 1
        for col in range(n):
            if mask >> col & 1:
                continue
            entry = matrix[row][col]
            if entry:
                sub = rec(row + 1, mask | (1 << col))
                if sub:
                    term = entry * sub
                    total = total + term if sign > 0 else total - term
            sign = -sign
        memo[mask] = total
        return total

    return rec(0, 0)


def sylvester_matrix(p: Sequence, q: Sequence) -> list[list]:
    """Sylvester matrix of two coefficient lists given from the leading term down."""
    m, n = len(p) - 1, len(q) - 1
    size = m + n
    rows = []
    for i in range(n):
        rows.append([ParamPoly.coerce(0)] * i + [ParamPoly.coerce(c) for c in p] + [ZERO] * (size - m - 1 - i))
    for i in range(m):
        rows.append([ParamPoly.coerce(0)] * i + [ParamPoly.coerce(c) for c in q] + [ZERO] * (size - n - 1 - i))
    return rows


def resultant(p: LinearDelta, q: LinearDelta) -> ParamPoly:
    """Sylvester resultant of the phi-images (parametric coefficients allowed).

    Degrees are the formal degrees (highest delay with a nonzero coefficient).
    """
    a = [p.coeff(i) for i in range(p.degree + 1)]
    b = [q.coeff(i) for i in range(q.degree + 1)]
    if len(a) < 2 and len(b) < 2:
        raise ValidationError("resultant of two constants is undefined")
    if not a or not b:
        return ZERO
    return _det(sylvester_matrix(a[::-1], b[::-1]))


def poly_resultant(p: ParamPoly, q: ParamPoly, var) -> ParamPoly:
    """Resultant of two ParamPolys with respect to the parameter ``var``."""
    pa, qa = p.as_univariate(var), q.as_univariate(var)
    a = [pa.get(i, ZERO) for i in range(max(pa, default=0) + 1)]
    b = [qa.get(i, ZERO) for i in range(max(qa, default=0) + 1)]
    if len(a) < 2 and len(b) < 2:
        raise ValidationError(f"neither polynomial involves {var}")
    return _det(sylvester_matrix(a[::-1], b[::-1]))


# -- linear systems over Q ---------------------------------------------------
class LinearSolution(NamedTuple):
    particular: list
    nullspace: list


def solve_linear_system(rows: Sequence[Sequence], rhs: Sequence, nvars: int) -> LinearSolution:
    """Gaussian elimination over Q.  Raises NoSolutionError when inconsistent."""
    m = [[Fraction(x) for x in r] + [Fraction(b)] for r, b in zip(rows, rhs)]
    pivots = []
    r = 0
    for col in range(nvars):
        piv = next((i for i in range(r, len(m)) if m[i][col] != 0), None)
        if piv is None:
            continue
        m[r], m[piv] = m[piv], m[r]
        inv = 1 / m[r][col]
        m[r] = [x * inv for x in m[r]]
        for i in range(len(m)):
            if i != r and m[i][col] != 0:
                f = m[i][col]
                m[i] = [x - f * y for x, y in zip(m[i], m[r])]
        pivots.append(col)
        r += 1
    for i in range(r, len(m)):
        if m[i][-1] != 0:
            raise NoSolutionError("inconsistent linear system")
    part = [Fraction(0)] * nvars
    for i, col in enumerate(pivots):
        part[col] = m[i][-1]
    free = [c for c in range(nvars) if c not in pivots]
    basis = []
    for f in free:
        v = [Fraction(0)] * nvars
        v[f] = Fraction(1)
        for i, col in enumerate(pivots):
            v[col] = -m[i][f]
        basis.append(v)
    return LinearSolution(part, basis)


# -- Diophantine and causality -------------------------------------------------
class DiophantineSolution(NamedTuple):
    R0: LinearDelta
    Z0: LinearDelta
    g: LinearDelta


def diophantine(phi_: LinearDelta, B: LinearDelta, A: LinearDelta) -> DiophantineSolution:
    """Solve ``R * phi_ + Z * B = A`` with Z of least degree."""
    for name, p in (("phi", phi_), ("B", B), ("A", A)):
        if not p.is_parameter_free():
            raise ValidationError(f"{name} must be parameter-free")
    if phi_.is_zero():
        raise ValidationError("modulus must be nonzero")
    P, Bu, Au = phi(phi_), phi(B), phi(A)
    if Bu.is_zero():
        g, s, t = P.monic(), UniPoly([1 / Fraction(P.lead())]), UniPoly()
    else:
        g, s, t = uni_egcd(P, Bu)
    q, rem = Au.divmod(g)
    if not rem.is_zero():
        raise NoSolutionError(f"gcd {phi_inv(g)} does not divide {A}", witness=phi_inv(g))
    mod = P.divmod(g)[0]
    z0 = (t * q) % mod if mod.degree >= 1 else UniPoly()
    r0, r_rem = (Au - z0 * Bu).divmod(P)
    if not r_rem.is_zero():
        raise NoSolutionError("internal: Diophantine remainder nonzero")
    return DiophantineSolution(phi_inv(r0), phi_inv(z0), phi_inv(g))


class CausalLaw(NamedTuple):
    Q: LinearDelta
    S: LinearDelta


def causalize(Z0: LinearDelta, phi_: LinearDelta, min_delay: int = 1, max_deg: int | None = None) -> CausalLaw:
    """Find the least-degree Q with S = Z0 + Q * phi_ nonzero and free of delays below `min_delay`."""
    if not (Z0.is_parameter_free() and phi_.is_parameter_free()):
        raise ValidationError("causalize needs parameter-free inputs")
    if phi_.is_zero():
        raise ValidationError("phi must be nonzero")
    if max_deg is None:
        max_deg = max(Z0.degree, phi_.degree) + min_delay + 2
    z = [Z0.coeff(k).const_value() for k in range(max(Z0.degree + 1, min_delay))]
    f = [phi_.coeff(k).const_value() for k in range(phi_.degree + 1)]
    if not Z0.is_zero() and Z0.min_delay() >= min_delay and Z0.degree <= max_deg:
        return CausalLaw(LinearDelta({}, Z0.axis), Z0)
    for dq in range(0, max_deg - phi_.degree + 1):
        rows = []
        rhs = []
        for k in range(min_delay):
            rows.append([f[k - i] if 0 <= k - i < len(f) else Fraction(0) for i in range(dq + 1)])
            rhs.append(-(z[k] if k < len(z) else Fraction(0)))
        try:
            sol = solve_linear_system(rows, rhs, dq + 1)
        except NoSolutionError:
            continue
        candidates = [sol.particular] + [
            [p + b for p, b in zip(sol.particular, basis)] for basis in sol.nullspace
        ]
        for qv in candidates:
            Q = LinearDelta(enumerate(qv), Z0.axis)
            S = Z0 + Q.star(phi_)
            if S.is_zero() or S.degree > max_deg:
                continue
            if S.min_delay() >= min_delay:
                return CausalLaw(Q, S)
    raise NoSolutionError(f"no causal feedback of degree <= {max_deg} in the family {Z0} + Q*({phi_})")


# -- reduction modulo the shift ideal of a linear recurrence ------------------
def _linear_forms(phi_: LinearDelta, max_delay: int) -> list[list[Fraction]]:
    """y(t-m) expressed in the basis y(t), ..., y(t-n+1) on solutions of phi_ y = 0."""
    n = phi_.degree
    f = [phi_.coeff(k).const_value() for k in range(n + 1)]
    forms = []
    for m in range(max_delay + 1):
        if m < n:
            v = [Fraction(0)] * n
            v[m] = Fraction(1)
        else:
            # sum_i f_i y(t-(m-n)-i) = 0 solved for the highest delay i = n
            v = [Fraction(0)] * n
            for i in range(n):
                src = forms[m - n + i]
                c = -f[i] / f[n]
                if c:
                    for j in range(n):
                        v[j] += c * src[j]
        forms.append(v)
    return forms


def reduce_mod_recurrence(G: DEPolynomial, phi_: LinearDelta) -> dict:
    """Reduce a delta-only polynomial onto the free values of solutions of ``phi_ y = 0``.

    Returns {exponent vector: ParamPoly}.  The map is empty exactly when G
    vanishes on every solution of the recurrence.  Requires a nonzero
    delta_0 coefficient in ``phi_`` so that n consecutive values are free.
    """
    if not G.is_delta_only():
        raise ValidationError("reduction needs a delta-only polynomial")
    if not phi_.is_parameter_free() or phi_.degree < 1:
        raise ValidationError("recurrence must be parameter-free of degree >= 1")
    if phi_.coeff(0) == 0:
        raise ValidationError("recurrence must have a nonzero delta_0 coefficient")
    n = phi_.degree
    forms = _linear_forms(phi_, max(G.max_delay(), 0))
    lin_cache: dict = {}

    def lin(m: int) -> dict:
        hit = lin_cache.get(m)
        if hit is None:
            hit = {}
            for j, c in enumerate(forms[m]):
                if c:
                    e = [0] * n
                    e[j] = 1
                    hit[tuple(e)] = c
            lin_cache[m] = hit
        return hit

    def mul(a: dict, b: dict) -> dict:
        out: dict = {}
        for ea, ca in a.items():
            for eb, cb in b.items():
                e = tuple(x + y for x, y in zip(ea, eb))
                out[e] = out.get(e, 0) + ca * cb
        return {e: c for e, c in out.items() if c}

    result: dict = {}
    for op, c in G.items():
        prod = {tuple([0] * n): Fraction(1)}
        for k in op.delta:
            prod = mul(prod, lin(k))
            if not prod:
                break
        for e, v in prod.items():
            result[e] = result.get(e, ZERO) + c * v
    return {e: v for e, v in result.items() if v}


def in_shift_ideal(G: DEPolynomial, phi_: LinearDelta) -> bool:
    """True when G vanishes on all solutions of ``phi_ y = 0``."""
    return not reduce_mod_recurrence(G, phi_)


def linear_factor(root: Fraction) -> LinearDelta:
    """Monic first-order polynomial whose phi-image vanishes at `root`: -root*d0 + d1."""
    return LinearDelta({0: -Fraction(root), 1: 1})
