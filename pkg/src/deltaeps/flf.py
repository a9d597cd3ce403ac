"""Formal linear factorization of delta-epsilon polynomials.

`flf` peels the maximum non-zero term off a polynomial again and again, each
time subtracting ``c * op * [L, M]`` where L and M are linear polynomials
with fresh parameter coefficients and a unit leading coefficient.  What is
left consists of zero terms; powers of delta_0 / eps_0 are factored out and
the process repeats on the cofactor.  `reconstruct` re-expands everything
and must return the input exactly.
"""

from __future__ import annotations

from collections.abc import Mapping
from dataclasses import dataclass, field, replace
from typing import Optional

from .core_algebra import (
    IDENTITY_U,
    IDENTITY_Y,
    NULL_INDEX,
    DEOperator,
    DEPolynomial,
    MultiIndex,
    de_dot,
    de_star,
    decompose,
    render_operator,
)
from .errors import InternalInvariantError, ValidationError
from .linear_tools import LinearDelta
from .param_ring import ONE, ParamId, ParamPoly, pp_sum

DELTA, EPS, CROSS = "delta", "eps", "cross"


@dataclass(frozen=True)
class FLFEntry:
    """One summand ``delta_0^kappa eps_0^sigma . (c * op * [L, M])``.

    ``L``/``M`` are None for the null factor.  ``kappa``/``sigma`` are the
    accumulated exponents of every delta_0/eps_0 factored out before the
    entry was produced.
    """

    lam: int
    u: int
    omega: int
    h: int
    companion: ParamPoly
    op: DEOperator
    L: Optional[LinearDelta]
    M: Optional[LinearDelta]
    kappa: int = 0
    sigma: int = 0

    @property
    def phase(self) -> str:
        if self.u >= 1:
            return DELTA
        if self.omega >= 1:
            return EPS
        return CROSS

    def is_linear_part(self) -> bool:
        return self.lam == 0

    def term(self) -> DEPolynomial:
        """The expanded contribution of this entry."""
        b = self.L.to_de() if self.L is not None else IDENTITY_Y
        c = self.M.to_de() if self.M is not None else IDENTITY_U
        body = de_star(DEPolynomial({self.op: self.companion}), b, c)
        return _prefactor(self.kappa, self.sigma, body)

    def substitute(self, rule: Mapping) -> "FLFEntry":
        return replace(
            self,
            companion=self.companion.substitute(rule),
            L=self.L.substitute(rule) if self.L is not None else None,
            M=self.M.substitute(rule) if self.M is not None else None,
        )


@dataclass(frozen=True)
class Remainder:
    """A remainder polynomial together with its accumulated delta_0/eps_0 prefactor."""

    poly: DEPolynomial
    kappa: int = 0
    sigma: int = 0

    def term(self) -> DEPolynomial:
        return _prefactor(self.kappa, self.sigma, self.poly)

    def substitute(self, rule: Mapping) -> "Remainder":
        return replace(self, poly=self.poly.substitute(rule))


@dataclass(frozen=True)
class FLFResult:
    """Output of `flf`: entries, exponents, remainders and h*."""

    entries: tuple
    theta: dict = field(default_factory=dict)      # (u, h) -> delta_0 exponent factored in the delta-phase
    rho: dict = field(default_factory=dict)        # (omega, h) -> eps_0 exponent factored in the eps-phase
    level: dict = field(default_factory=dict)      # h -> (kappa, sigma) factored before level h+1
    r_delta: dict = field(default_factory=dict)    # h -> Remainder
    r_eps: dict = field(default_factory=dict)      # h -> Remainder
    r_de: Remainder = field(default_factory=lambda: Remainder(DEPolynomial.zero()))
    h_star: int = 0

    @property
    def L(self) -> list:
        return [e for e in self.entries if e.L is not None]

    @property
    def M(self) -> list:
        return [e for e in self.entries if e.M is not None]

    @property
    def companions(self) -> list:
        return [e.companion for e in self.entries]

    @property
    def operators(self) -> list:
        return [e.op for e in self.entries]

    def find(self, lam: int, u: int, omega: int, h: int) -> FLFEntry:
        for e in self.entries:
            if (e.lam, e.u, e.omega, e.h) == (lam, u, omega, h):
                return e
        raise KeyError((lam, u, omega, h))

    def remainders(self) -> list:
        return list(self.r_delta.values()) + list(self.r_eps.values()) + [self.r_de]

    def params(self) -> set:
        out = set()
        for e in self.entries:
            out |= e.companion.params()
            for f in (e.L, e.M):
                if f is not None:
                    out |= f.params()
        for r in self.remainders():
            out |= r.poly.params()
        return out


def _prefactor(kappa: int, sigma: int, body: DEPolynomial) -> DEPolynomial:
    if kappa == 0 and sigma == 0:
        return body
    pre = DEPolynomial({DEOperator(MultiIndex([0] * kappa), MultiIndex([0] * sigma)): ONE})
    return de_dot(pre, body)


# -- zero terms and factoring -------------------------------------------------------
def is_zero_term(op: DEOperator, phase: str) -> bool:
    """Zero term for the given phase: the relevant parts all start at delay 0."""
    if phase == DELTA:
        return bool(op.delta) and op.delta[0] == 0
    if phase == EPS:
        return bool(op.eps) and op.eps[0] == 0
    return bool(op.delta) and op.delta[0] == 0 and bool(op.eps) and op.eps[0] == 0


def _zero_multiplicity(mi: MultiIndex) -> int:
    n = 0
    for x in mi:
        if x:
            break
        n += 1
    return n


def _strip(op: DEOperator, k: int, s: int) -> DEOperator:
    return DEOperator(MultiIndex._sorted(op.delta[k:]), MultiIndex._sorted(op.eps[s:]))


def factor_zero_powers(r: DEPolynomial, use_delta: bool, use_eps: bool) -> tuple[int, int, DEPolynomial]:
    """Largest delta_0^k eps_0^s dividing R such that the cofactor has no constant term."""
    if r.is_zero():
        return 0, 0, r
    k = min(_zero_multiplicity(op.delta) for op in r.operators()) if use_delta else 0
    s = min(_zero_multiplicity(op.eps) for op in r.operators()) if use_eps else 0

    def makes_constant(k: int, s: int) -> bool:
        return any(len(op.delta) == k and len(op.eps) == s for op in r.operators())

    while makes_constant(k, s):
        if s > 0:
            s -= 1
        elif k > 0:
            k -= 1
        else:
            raise InternalInvariantError("constant term in a remainder")
    out = DEPolynomial({_strip(op, k, s): c for op, c in r.items()})
    return k, s, out


def only_zero_operators(p: DEPolynomial) -> bool:
    """Every term is built from delta_0 and eps_0 alone."""
    return all(all(x == 0 for x in op.delta) and all(x == 0 for x in op.eps) for op in p.operators())


# -- REMAINDER ---------------------------------------------------------------------
def formal_linear(kind: str, lam: int, phase: int, h: int, top: int, axis: str) -> LinearDelta:
    """``kind[lam,phase,h,0] x0 + ... + kind[lam,phase,h,top-1] x_{top-1} + x_top``."""
    coeffs = {k: ParamPoly.var(ParamId(kind, lam, phase, h, k)) for k in range(top)}
    coeffs[top] = ONE
    return LinearDelta(coeffs, axis)


def _normalized_op(op: DEOperator) -> DEOperator:
    d = op.delta
    e = op.eps
    nd = MultiIndex._sorted(tuple(x - d[0] for x in d)) if d else NULL_INDEX
    ne = MultiIndex._sorted(tuple(x - e[0] for x in e)) if e else NULL_INDEX
    return DEOperator(nd, ne)


def remainder(a: DEPolynomial, u: int, omega: int, h: int, kappa: int = 0, sigma: int = 0,
              check: bool = True) -> tuple[DEPolynomial, list]:
    """Run the REMAINDER subroutine on one phase polynomial.

    Returns the residue (zero terms only) and the new entries, each tagged
    with the prefactor exponents ``kappa``/``sigma`` supplied by the caller.
    """
    if a.has_constant_term():
        raise ValidationError("polynomial has a constant term")
    if u >= 1 and omega == 0:
        phase = DELTA
        if not a.is_delta_only():
            raise ValidationError("delta-phase input must be a pure delta-polynomial")
    elif u == 0 and omega >= 1:
        phase = EPS
        if not a.is_eps_only():
            raise ValidationError("eps-phase input must be a pure eps-polynomial")
    elif u == 0 and omega == 0:
        phase = CROSS
    else:
        raise ValidationError("invalid phase counters")

    entries = []
    linear = DEPolynomial({op: c for op, c in a.items() if op.degree == 1})
    r = DEPolynomial({op: c for op, c in a.items() if op.degree != 1})
    if linear:
        if phase == DELTA:
            entries.append(FLFEntry(0, u, 0, h, ONE, DEOperator.make((0,), ()),
                                    LinearDelta.from_de(linear), None, kappa, sigma))
        elif phase == EPS:
            entries.append(FLFEntry(0, 0, omega, h, ONE, DEOperator.make((), (0,)),
                                    None, LinearDelta.from_de(linear), kappa, sigma))
        else:
            raise InternalInvariantError("cross part has a linear term")

    lam = 0
    prev_key = None
    while True:
        nonzero = [op for op in r.operators() if not is_zero_term(op, phase)]
        if not nonzero:
            break
        top = max(nonzero, key=DEOperator.key)
        if check and prev_key is not None and not top.key() < prev_key:
            raise InternalInvariantError("maximum non-zero term did not decrease")
        prev_key = top.key()
        lam += 1
        c = r.coeff(top)
        L = formal_linear("w", lam, u, h, top.delta[0], "d") if top.delta else None
        M = formal_linear("s", lam, omega, h, top.eps[0], "e") if top.eps else None
        op = _normalized_op(top)
        entry = FLFEntry(lam, u, omega, h, c, op, L, M, kappa, sigma)
        b = L.to_de() if L is not None else IDENTITY_Y
        cc = M.to_de() if M is not None else IDENTITY_U
        r = r - de_star(DEPolynomial({op: c}), b, cc)
        entries.append(entry)
        if check and r.coeff(top):
            raise InternalInvariantError("maximum term was not eliminated")
    return r, entries


# -- driver ------------------------------------------------------------------------
def flf(a: DEPolynomial, check: bool = True) -> FLFResult:
    """Formal linear factorization of a polynomial without constant term."""
    if a.has_constant_term():
        raise ValidationError("FLF input must not contain a constant term")
    entries: list = []
    theta: dict = {}
    rho: dict = {}
    level: dict = {}
    r_delta: dict = {}
    r_eps: dict = {}
    K = S = 0  # accumulated level prefactor
    h = 0
    current = a
    while True:
        parts = decompose(current)

        # delta-phase
        u = 1
        ad = parts.delta
        kd = 0
        while True:
            r, new = remainder(ad, u, 0, h, K + kd, S, check)
            entries.extend(new)
            t, _, ad_next = factor_zero_powers(r, True, False)
            if check and r and ad_next.degree() >= r.degree():
                raise InternalInvariantError("factoring did not lower the degree")
            theta[(u, h)] = t
            kd += t
            ad = ad_next
            u += 1
            if ad.is_zero() or only_zero_operators(ad):
                break
        r_delta[h] = Remainder(ad, K + kd, S)

        # eps-phase
        omega = 1
        ae = parts.eps
        se = 0
        while True:
            r, new = remainder(ae, 0, omega, h, K, S + se, check)
            entries.extend(new)
            _, s, ae_next = factor_zero_powers(r, False, True)
            if check and r and ae_next.degree() >= r.degree():
                raise InternalInvariantError("factoring did not lower the degree")
            rho[(omega, h)] = s
            se += s
            ae = ae_next
            omega += 1
            if ae.is_zero() or only_zero_operators(ae):
                break
        r_eps[h] = Remainder(ae, K, S + se)

        # cross phase
        ax = parts.cross
        if ax.is_zero() or only_zero_operators(ax):
            r_de = Remainder(ax, K, S)
            break
        r, new = remainder(ax, 0, 0, h, K, S, check)
        entries.extend(new)
        if r.is_zero() or only_zero_operators(r):
            r_de = Remainder(r, K, S)
            break
        k, s, rt = factor_zero_powers(r, True, True)
        if check and rt.degree() >= r.degree():
            raise InternalInvariantError("factoring did not lower the degree")
        level[h] = (k, s)
        K += k
        S += s
        current = rt
        h += 1
    return FLFResult(tuple(entries), theta, rho, level, r_delta, r_eps, r_de, h)


def reconstruct(res: FLFResult) -> DEPolynomial:
    """Expand every entry and remainder; equals the factorized input."""
    parts: dict = {}
    for t in [e.term() for e in res.entries] + [r.term() for r in res.remainders()]:
        for op, c in t.items():
            parts.setdefault(op, []).append(c)
    return DEPolynomial({op: pp_sum(cs) for op, cs in parts.items()})


def check_border_conditions(res: FLFResult) -> list[str]:
    """Return violated structural conditions (empty when all hold)."""
    problems = []
    for e in res.entries:
        if e.lam == 0 and e.companion != ONE:
            problems.append(f"linear entry {e.u},{e.omega},{e.h} has companion {e.companion}")
        if e.lam == 0 and e.phase == DELTA and e.op != DEOperator.make((0,), ()):
            problems.append("linear delta entry operator is not delta_0")
        if e.lam == 0 and e.phase == EPS and e.op != DEOperator.make((), (0,)):
            problems.append("linear eps entry operator is not eps_0")
        if e.phase == EPS and e.op.delta:
            problems.append("eps-phase operator has a delta part")
        if e.phase == DELTA and e.op.eps:
            problems.append("delta-phase operator has an eps part")
        if e.phase == CROSS and e.lam == 0:
            problems.append("cross phase produced a linear entry")
        if e.phase == DELTA and e.u == 1 and e.kappa != _level_kappa(res, e.h):
            problems.append("first delta phase carries a delta_0 prefactor")
        if e.phase == EPS and e.omega == 1 and e.sigma != _level_sigma(res, e.h):
            problems.append("first eps phase carries an eps_0 prefactor")
    for h, r in res.r_delta.items():
        if not all(is_zero_term(op, DELTA) or all(x == 0 for x in op.delta) for op in r.poly.operators()):
            problems.append(f"delta remainder {h} has a non-zero term")
    for h, r in res.r_eps.items():
        if not all(is_zero_term(op, EPS) for op in r.poly.operators()):
            problems.append(f"eps remainder {h} has a non-zero term")
    if not all(is_zero_term(op, CROSS) for op in res.r_de.poly.operators()):
        problems.append("cross remainder has a non-zero term")
    return problems


def _level_kappa(res: FLFResult, h: int) -> int:
    return sum(res.level.get(x, (0, 0))[0] for x in range(h))


def _level_sigma(res: FLFResult, h: int) -> int:
    return sum(res.level.get(x, (0, 0))[1] for x in range(h))


# -- derived sets -------------------------------------------------------------------
@dataclass(frozen=True)
class FactorRef:
    """A linear factor with a back-reference to its entry (and companion coefficient)."""

    poly: LinearDelta
    entry: FLFEntry

    @property
    def companion(self) -> ParamPoly:
        return self.entry.companion

    @property
    def label(self) -> str:
        e = self.entry
        if self.poly.axis == "d":
            return f"L[{e.lam},{e.u},{e.h}]"
        return f"M[{e.lam},{e.omega},{e.h}]"

    def substitute(self, rule: Mapping) -> "FactorRef":
        return FactorRef(self.poly.substitute(rule), self.entry.substitute(rule))


@dataclass(frozen=True)
class FactorSets:
    L: tuple
    M: tuple
    L_star: tuple
    M_star: tuple
    L_delta: tuple
    L_bar: tuple
    M_bar: tuple
    L_bar_star: tuple
    M_bar_star: tuple

    NAMES = ("L", "M", "L_star", "M_star", "L_delta", "L_bar", "M_bar", "L_bar_star", "M_bar_star")

    def as_dict(self) -> dict:
        return {n: getattr(self, n) for n in self.NAMES}


def _is_input_linear_delta(e: FLFEntry) -> bool:
    return e.lam == 0 and e.u == 1 and e.h == 0


def _is_input_linear_eps(e: FLFEntry) -> bool:
    return e.lam == 0 and e.omega == 1 and e.h == 0


def derived_sets(res: FLFResult) -> FactorSets:
    L = tuple(FactorRef(e.L, e) for e in res.entries if e.L is not None)
    M = tuple(FactorRef(e.M, e) for e in res.entries if e.M is not None)
    L_star = tuple(f for f in L if not _is_input_linear_delta(f.entry))
    M_star = tuple(f for f in M if not _is_input_linear_eps(f.entry))
    L_delta = tuple(f for f in L if f.entry.h == 0 and f.entry.u >= 1)
    L_bar = tuple(f for f in L if f.entry.u != 0)
    M_bar = tuple(f for f in M if f.entry.omega != 0)
    L_bar_star = tuple(f for f in L_bar if not _is_input_linear_delta(f.entry))
    M_bar_star = tuple(f for f in M_bar if not _is_input_linear_eps(f.entry))
    return FactorSets(L, M, L_star, M_star, L_delta, L_bar, M_bar, L_bar_star, M_bar_star)


# -- evaluation over rules ----------------------------------------------------------
def evaluate_rule(x, rule: Mapping):
    """Substitute a rule into an FLFResult, FactorSets, FactorRef, FLFEntry or LinearDelta."""
    if isinstance(x, FLFResult):
        return replace(
            x,
            entries=tuple(e.substitute(rule) for e in x.entries),
            r_delta={h: r.substitute(rule) for h, r in x.r_delta.items()},
            r_eps={h: r.substitute(rule) for h, r in x.r_eps.items()},
            r_de=x.r_de.substitute(rule),
        )
    if isinstance(x, FactorSets):
        return FactorSets(**{n: tuple(f.substitute(rule) for f in getattr(x, n)) for n in FactorSets.NAMES})
    if isinstance(x, (FactorRef, FLFEntry, LinearDelta, DEPolynomial, ParamPoly, Remainder)):
        return x.substitute(rule)
    raise TypeError(f"cannot evaluate {type(x).__name__} over a rule")


def describe_entry(e: FLFEntry) -> str:
    return (f"c[{e.lam},{e.u},{e.omega},{e.h}] = {e.companion}; op = {render_operator(e.op)}; "
            f"L = {e.L if e.L is not None else 'null'}; M = {e.M if e.M is not None else 'null'}")
