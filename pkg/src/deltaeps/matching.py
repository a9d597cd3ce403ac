"""Parameter search for common linear factors and linear feedback synthesis.

The search works candidate-first: for each monic linear polynomial Phi that
could be a common factor, every formal factor either has its companion
coefficient vanish or is divisible by Phi.  The resulting polynomial
equalities and disequalities are handed to `solve_constraints`, which uses
linear elimination, rational roots, resultants and bounded enumeration.
Every returned rule is re-verified by exact substitution.
"""

from __future__ import annotations

from collections.abc import Mapping
from dataclasses import dataclass, field, replace
from fractions import Fraction
from itertools import product
from typing import Iterable, Optional, Sequence

from .core_algebra import DEPolynomial, de_star, decompose
from .errors import NoSolutionError, ValidationError
from .flf import FactorRef, FLFResult, derived_sets, flf
from .linear_tools import (
    LinearDelta,
    UniPoly,
    causalize,
    diophantine,
    lin_gcd,
    phi,
    phi_inv,
    poly_resultant,
    rational_roots,
    reduce_mod_recurrence,
)
from .param_ring import ONE, ZERO, ParamId, ParamPoly, Rule

DEFAULT_POOL = tuple(Fraction(x) for x in ("0", "1", "-1", "2", "-2", "1/2", "-1/2", "1/4", "-1/4", "4", "-4"))
ROOT_POOL = tuple(x for x in DEFAULT_POOL if x != 0)


@dataclass(frozen=True)
class SearchBudget:
    """Bounds for the exponential parts of the search."""

    subset_max: int = 6
    pool: tuple = DEFAULT_POOL
    max_nodes: int = 1500
    max_solutions: int = 4
    resultant_depth: int = 3
    resultant_terms: int = 64
    leaf_nodes: int = 150


@dataclass(frozen=True)
class ConstraintSet:
    """Polynomials that must vanish and polynomials that must not."""

    equalities: tuple = ()
    disequalities: tuple = ()

    def __and__(self, other: "ConstraintSet") -> "ConstraintSet":
        return ConstraintSet(self.equalities + other.equalities, self.disequalities + other.disequalities)

    def params(self) -> set:
        out = set()
        for p in self.equalities + self.disequalities:
            out |= p.params()
        return out

    @classmethod
    def from_rule(cls, rule: Mapping) -> "ConstraintSet":
        return cls(tuple(ParamPoly.var(p) - v for p, v in rule.items()))

    def holds(self, rule: Mapping) -> bool:
        """Exact check: equalities vanish identically, disequalities do not."""
        return all(e.substitute(rule).is_zero() for e in self.equalities) and all(
            not d.substitute(rule).is_zero() for d in self.disequalities
        )


# -- constraint solving ------------------------------------------------------------------
class _Budget:
    def __init__(self, nodes: int):
        self.nodes = nodes

    def spend(self) -> bool:
        self.nodes -= 1
        return self.nodes >= 0


def _bind(bind: dict, p: ParamId, value: ParamPoly) -> dict:
    sub = {p: value}
    out = {q: v.substitute(sub) for q, v in bind.items()}
    out[p] = value
    return out


def _simplify(eqs: list, neqs: list, bind: dict, substituted: bool = False):
    """Linear elimination with constant pivots.  Returns (eqs, neqs, bind) or None if inconsistent.

    With ``substituted`` the inputs are known to be free of bound parameters already.
    """
    if bind and not substituted:
        eqs = [e.substitute(bind) for e in eqs]
        neqs = [d.substitute(bind) for d in neqs]
    while True:
        eqs = [e for e in eqs if not e.is_zero()]
        if any(e.is_const() for e in eqs):
            return None
        if any(d.is_zero() for d in neqs):
            return None
        neqs = [d for d in neqs if not d.is_const()]
        pivot = None
        for e in sorted(eqs, key=len):
            for p in sorted(e.params()):
                if e.degree_in(p) == 1:
                    coeffs = e.as_univariate(p)
                    a = coeffs.get(1, ZERO)
                    if a.is_const() and not a.is_zero():
                        pivot = (p, -(coeffs.get(0, ZERO)) / a.const_value())
                        break
            if pivot:
                break
        if pivot is None:
            return eqs, neqs, bind
        p, value = pivot
        sub = {p: value}
        bind = _bind(bind, p, value)
        eqs = [e.substitute(sub) for e in eqs]
        neqs = [d.substitute(sub) for d in neqs]


def _common_variable(e: ParamPoly) -> Optional[ParamId]:
    common = None
    for m, _ in e.items():
        vars_ = {p for p, _ in m}
        common = vars_ if common is None else common & vars_
        if not common:
            return None
    return min(common) if common else None


def _univariate_roots(e: ParamPoly, p: ParamId) -> list:
    coeffs = e.as_univariate(p)
    uni = UniPoly(coeffs.get(i, ZERO).const_value() for i in range(max(coeffs) + 1))
    return rational_roots(uni)


def _instantiate(neqs: list, bind: dict, pool: Sequence, budget: _Budget) -> Optional[dict]:
    """Give numeric values to the free parameters left in the bindings and disequalities."""
    free = set()
    for d in neqs:
        free |= d.params()
    for v in bind.values():
        free |= v.params()
    free = sorted(free)

    def rec(i: int, neqs: list, bind: dict):
        if not budget.spend():
            return None
        if any(d.is_zero() for d in neqs):
            return None
        if i == len(free):
            return bind
        p = free[i]
        for v in pool:
            sub = {p: ParamPoly.const(v)}
            out = rec(i + 1, [d.substitute(sub) for d in neqs], _bind(bind, p, ParamPoly.const(v)))
            if out is not None:
                return out
        return None

    return rec(0, list(neqs), dict(bind))


def _to_rule(bind: dict) -> Rule:
    return Rule({p: v.const_value() for p, v in bind.items()})


@dataclass(frozen=True)
class Solution:
    """A verified numeric rule and the symbolic family it was instantiated from.

    ``family`` maps solved parameters to ParamPolys in the parameters left
    free; any values of the free parameters that keep the disequalities
    nonzero give another solution.
    """

    rule: Rule
    family: dict


def solve_constraints(cs: ConstraintSet, budget: SearchBudget = SearchBudget()) -> list:
    """Rules satisfying every equality identically and no disequality (may be empty)."""
    return [s.rule for s in solve_families(cs, budget)]


def solve_families(cs: ConstraintSet, budget: SearchBudget = SearchBudget(),
                   counter: Optional[_Budget] = None, bind: Optional[dict] = None) -> list:
    """Like `solve_constraints` but keeps the symbolic family behind each rule.

    ``counter`` lets a caller share one node budget across several solves;
    ``bind`` holds parameters already solved for (their values in the rest).
    """
    if counter is None:
        counter = _Budget(budget.max_nodes)
    solutions: list = []
    seen = set()

    def rec(eqs: list, neqs: list, bind: dict, depth: int):
        if len(solutions) >= budget.max_solutions or not counter.spend():
            return
        st = _simplify(eqs, neqs, bind)
        if st is None:
            return
        eqs, neqs, bind = st
        if not eqs:
            full = _instantiate(neqs, bind, budget.pool, counter)
            if full is None:
                return
            rule = _to_rule(full)
            if rule not in seen and cs.holds(rule):
                seen.add(rule)
                solutions.append(Solution(rule, dict(bind)))
            return
        eqs = sorted(eqs, key=lambda e: (len(e.params()), len(e)))
        e = eqs[0]
        # a variable common to every monomial splits the equation
        v = _common_variable(e)
        if v is not None:
            rec(eqs + [ParamPoly.var(v)], neqs, bind, depth)
            rest = ParamPoly({tuple((q, k - 1) if q == v else (q, k) for q, k in m if (q, k) != (v, 1)): c
                              for m, c in e.items()})
            rec([rest] + eqs[1:], neqs + [ParamPoly.var(v)], bind, depth)
            return
        # univariate equation: branch on its rational roots
        if len(e.params()) == 1:
            p = next(iter(e.params()))
            for r in _univariate_roots(e, p):
                rec(eqs + [ParamPoly.var(p) - r], neqs, bind, depth)
            return
        # eliminate a shared parameter by a resultant
        if depth < budget.resultant_depth:
            for other in eqs[1:]:
                shared = sorted(e.params() & other.params())
                for p in shared:
                    if (len(e) * len(other) > budget.resultant_terms
                            or e.degree_in(p) + other.degree_in(p) > 6):
                        continue
                    res = poly_resultant(e, other, p)
                    if res.is_zero() or res.is_const():
                        if res.is_const() and not res.is_zero():
                            # no common root in p for any value of the rest: inconsistent unless leading terms vanish
                            break
                        continue
                    if len(res.params()) < len(e.params() | other.params()):
                        rec(eqs + [res], neqs, bind, depth + 1)
                        return
        # bounded enumeration on the most frequent parameter
        counts: dict = {}
        for q in eqs:
            for p in q.params():
                counts[p] = counts.get(p, 0) + 1
        p = max(sorted(counts), key=lambda x: counts[x])
        for val in budget.pool:
            rec(eqs + [ParamPoly.var(p) - val], neqs, bind, depth)

    rec(list(cs.equalities), list(cs.disequalities), dict(bind or {}), 0)
    return solutions


# -- common factors ----------------------------------------------------------------------
def divisibility_conditions(P: LinearDelta, Phi: LinearDelta) -> list:
    """Remainder coefficients of phi(P) modulo the monic, numeric phi(Phi)."""
    f = [Phi.coeff(i).const_value() for i in range(Phi.degree + 1)]
    n = len(f) - 1
    lead = f[-1]
    r = [P.coeff(i) for i in range(P.degree + 1)]
    for k in range(len(r) - 1, n - 1, -1):
        c = r[k]
        if c.is_zero():
            continue
        q = c / lead
        for i in range(n + 1):
            r[k - n + i] = r[k - n + i] - q * f[i]
    return [c for c in r[:n] if not c.is_zero()]


@dataclass(frozen=True)
class GCDMatch:
    """A verified rule under which the nonvanishing members share `factor`."""

    rule: Rule
    factor: LinearDelta
    candidate: LinearDelta
    subset: tuple
    family: dict = field(default_factory=dict, compare=False)


def _member_poly(m: FactorRef) -> LinearDelta:
    return m.poly.with_axis("d")


def member_candidates(members: Sequence[FactorRef], pool: Sequence = ROOT_POOL) -> list:
    """Monic candidates from the pool roots and from the numeric members."""
    roots = [Fraction(r) for r in pool if r != 0]
    whole = []
    for m in members:
        p = _member_poly(m)
        if p.is_parameter_free() and p.degree >= 1:
            for r in rational_roots(phi(p)):
                if r != 0 and r not in roots:
                    roots.append(r)
            if p.coeff(0) != 0 and p.degree >= 2:
                whole.append(p.monic())
    out = [LinearDelta({0: -r, 1: 1}) for r in roots]
    return out + [p for p in whole if p not in out]


def gcd_values(members: Sequence[FactorRef], candidates: Optional[Iterable[LinearDelta]] = None,
               base: ConstraintSet = ConstraintSet(), budget: SearchBudget = SearchBudget()) -> list:
    """Rules making every nonvanishing member share a candidate factor.

    Each member either has its companion coefficient set to zero or is made
    divisible by the candidate; members with a constant companion must be
    divisible.  Returns verified `GCDMatch` records, one per distinct factor.
    """
    if candidates is None:
        candidates = member_candidates(members, [r for r in budget.pool if r != 0])
    results = []
    for Phi in candidates:
        Phi = Phi.with_axis("d").monic()
        if Phi.degree < 1:
            continue
        for found in _gcd_values_for(members, Phi, base, budget):
            if not any(r.factor == found.factor for r in results):
                results.append(found)
    return results


def _gcd_values_for(members, Phi, base, budget) -> list:
    forced_eqs: list = []
    optional = []
    for m in members:
        conds = divisibility_conditions(_member_poly(m), Phi)
        c = m.companion
        if c.is_const():
            if c.is_zero():
                continue
            if any(x.is_const() for x in conds):
                return []
            forced_eqs.extend(conds)
        elif any(x.is_const() for x in conds):
            forced_eqs.append(c)  # cannot be divisible: companion must vanish
        else:
            optional.append((m, conds))
    counter = _Budget(budget.max_nodes)
    found: list = []

    def leaf(eqs, neqs, bind):
        sub = _Budget(min(budget.leaf_nodes, max(counter.nodes, 0)))
        start = sub.nodes
        sols = solve_families(ConstraintSet(tuple(eqs), tuple(neqs)), replace(budget, max_solutions=1),
                              sub, bind)
        counter.nodes -= start - max(sub.nodes, 0)
        for sol in sols:
            match = _verify_match(members, Phi, sol.rule, base)
            if match is not None:
                found.append(replace(match, family=sol.family))
                return True
        return False

    def rec(i: int, eqs: list, neqs: list, bind: dict, kept: int):
        if found or not counter.spend():
            return
        st = _simplify(eqs, neqs, bind, substituted=True)
        if st is None:
            return
        eqs, neqs, bind = st
        if i == len(optional):
            leaf(eqs, neqs, bind)
            return
        m, conds = optional[i]
        c = m.companion.substitute(bind)
        if kept < budget.subset_max:
            rec(i + 1, eqs + [x.substitute(bind) for x in conds], neqs + [c], bind, kept + 1)
        rec(i + 1, eqs + [c], neqs, bind, kept)

    rec(0, list(base.equalities) + forced_eqs, list(base.disequalities), {}, 0)
    return found


def _verify_match(members, Phi, rule: Rule, base: ConstraintSet) -> Optional[GCDMatch]:
    if not base.holds(rule):
        return None
    alive = []
    for m in members:
        c = m.companion.substitute(rule)
        if c.is_zero():
            continue
        if not c.is_const():
            return None
        p = _member_poly(m).substitute(rule)
        if not p.is_parameter_free():
            return None
        alive.append((m, p))
    if not alive:
        return None
    nonzero = [p for _, p in alive if not p.is_zero()]
    if not nonzero:
        return None
    g = lin_gcd(nonzero)
    if g.degree < 1 or divisibility_conditions(g, Phi):
        return None
    return GCDMatch(rule, g, Phi, tuple(m.label for m, _ in alive))


# -- MM algorithm ------------------------------------------------------------------------
@dataclass(frozen=True)
class MatchedFactor:
    factor: LinearDelta
    witness: Rule
    sets: str
    subset: tuple = ()


@dataclass
class MatchOutcome:
    f1: list = field(default_factory=list)
    f2: list = field(default_factory=list)
    f3: list = field(default_factory=list)
    flf: Optional[FLFResult] = None
    diagnostics: list = field(default_factory=list)

    def factors(self, branch: int) -> list:
        return [m.factor for m in (self.f1, self.f2, self.f3)[branch - 1]]


def linear_parts(F: DEPolynomial) -> tuple[LinearDelta, LinearDelta]:
    """(A, B) with A the linear output part and -B the linear input part, both on the delta axis."""
    parts = decompose(F)
    A = LinearDelta.from_de(parts.delta_l) if parts.delta_l else LinearDelta({}, "d")
    B = (-LinearDelta.from_de(parts.eps_l)).with_axis("d") if parts.eps_l else LinearDelta({}, "d")
    return A, B


def closed_loop(F: DEPolynomial, S: LinearDelta) -> DEPolynomial:
    """``F[y, S y]`` as a delta-polynomial."""
    return de_star(F, DEPolynomial.monomial(delta=(0,)), S.with_axis("d").to_de())


def _vanishes_on(G: DEPolynomial, Phi: LinearDelta) -> bool:
    return not reduce_mod_recurrence(G, Phi)


def candidate_factors(F: DEPolynomial, res: FLFResult, A_d: Optional[LinearDelta] = None,
                      pool: Sequence = ROOT_POOL) -> list:
    """Monic candidates: pool roots, rational roots of numeric members, and factors of A_d."""
    roots = [Fraction(r) for r in pool if r != 0]
    polys = []
    for e in res.entries:
        for f in (e.L, e.M):
            if f is not None and f.is_parameter_free() and f.degree >= 1:
                polys.append(f.with_axis("d"))
    extra = []
    if A_d is not None and A_d.degree >= 1:
        polys.append(A_d)
        extra.append(A_d.monic())
    for p in polys:
        for r in rational_roots(phi(p)):
            if r != 0 and r not in roots:
                roots.append(r)
    out = [LinearDelta({0: -r, 1: 1}) for r in roots]
    for p in extra:
        if p.degree >= 2 and p.coeff(0) != 0 and p not in out:
            out.append(p)
    return out


def _q_feedback(n: int = 2) -> LinearDelta:
    return LinearDelta({i: ParamPoly.var(ParamId("q", 0, 0, 0, i)) for i in range(1, n + 1)})


def _remainder_constraints(res: FLFResult, which: str) -> ConstraintSet:
    polys = []
    if which == "DR":
        if 0 in res.r_delta:
            polys.append(res.r_delta[0].poly)
    else:
        polys.extend(r.poly for r in res.remainders())
    eqs = tuple(c for p in polys for _, c in p.items() if not c.is_zero())
    return ConstraintSet(eqs)


def _prefilter(F: DEPolynomial, Phi: LinearDelta, branch: int, A: LinearDelta, B: LinearDelta) -> Optional[str]:
    """Necessary closed-loop condition for Phi in branch `branch`; returns a reason when it fails."""
    if branch == 1:
        G = closed_loop(F, LinearDelta({}, "d"))
        return None if _vanishes_on(G, Phi) else "output part does not vanish on solutions of Phi"
    if branch == 2:
        G = closed_loop(F, _q_feedback())
        return None if _vanishes_on(G, Phi) else "closed loop depends on the feedback modulo Phi"
    try:
        sol = diophantine(Phi, B, A)
    except NoSolutionError:
        return "gcd(B, Phi) does not divide A"
    G = closed_loop(F, sol.Z0)
    return None if _vanishes_on(G, Phi) else "closed loop with Z0 does not vanish on solutions of Phi"


def mm(F: DEPolynomial, A_d: Optional[LinearDelta] = None, budget: SearchBudget = SearchBudget(),
       rules: Optional[Sequence[Mapping]] = None, res: Optional[FLFResult] = None) -> MatchOutcome:
    """Run the factorization and fill the three factor sets with verified witnesses."""
    if res is None:
        res = flf(F)
    sets = derived_sets(res)
    A, B = linear_parts(F)
    seeds = [ConstraintSet.from_rule(r) for r in rules] if rules else [ConstraintSet()]
    out = MatchOutcome(flf=res)
    cands = candidate_factors(F, res, A_d, [r for r in budget.pool if r != 0])
    DR = _remainder_constraints(res, "DR")
    RV = _remainder_constraints(res, "RV")
    plans = [
        (1, [("L_delta", sets.L_delta)], DR),
        (2, [("L+M_bar", sets.L + sets.M_bar), ("L_bar+M", sets.L_bar + sets.M)], RV),
        (3, [("L_star+M_bar_star", sets.L_star + sets.M_bar_star),
             ("L_bar_star+M_star", sets.L_bar_star + sets.M_star)], RV),
    ]
    for branch, families, remainder_cs in plans:
        target = (out.f1, out.f2, out.f3)[branch - 1]
        for Phi in cands:
            reason = _prefilter(F, Phi, branch, A, B)
            if reason:
                out.diagnostics.append(f"F{branch}: {Phi} rejected: {reason}")
                continue
            hit = False
            for name, members in families:
                for seed in seeds:
                    matches = gcd_values(members, [Phi], remainder_cs & seed, budget)
                    for mt in matches:
                        if not any(x.factor == mt.factor for x in target):
                            target.append(MatchedFactor(mt.factor, mt.rule, name, mt.subset))
                        hit = True
                    if hit:
                        break
                if hit:
                    break
            if not hit:
                out.diagnostics.append(f"F{branch}: {Phi} passes the closed-loop test but no witness rule was found")
    return out


# -- feedback synthesis ------------------------------------------------------------------
@dataclass(frozen=True)
class FeedbackLaw:
    S: LinearDelta
    branch: int
    phi_tilde: LinearDelta
    witness: Rule
    factor: LinearDelta
    Z0: LinearDelta
    Q: LinearDelta
    unconstrained: bool

    def describe(self) -> str:
        cons = "any initial conditions" if self.unconstrained else f"initial conditions with ({self.phi_tilde}) y0 = 0"
        return f"branch {self.branch}: u(t) = ({self.S}) y(t); factor {self.factor}; {cons}"


def synthesize(F: DEPolynomial, A_d: LinearDelta, outcome: MatchOutcome, max_deg: Optional[int] = None,
               diagnostics: Optional[list] = None) -> list:
    """Feedback laws u = S y for every usable factor, each checked against the closed loop."""
    A, B = linear_parts(F)
    A_d = A_d.with_axis("d")
    if A_d.degree < 1:
        raise ValidationError("desired system must have degree >= 1")
    laws = []
    diag = diagnostics if diagnostics is not None else []
    for branch, group in ((1, outcome.f1), (2, outcome.f2), (3, outcome.f3)):
        for mf in group:
            g = lin_gcd([A_d, mf.factor])
            if g.degree < 1:
                diag.append(f"F{branch}: {mf.factor} is coprime to A_d")
                continue
            unconstrained = g == A_d.monic()
            modulus = g
            try:
                if branch == 1:
                    Z0 = LinearDelta({}, "d")
                    law = causalize(Z0, modulus, 1, max_deg)
                elif branch == 2:
                    Z0 = LinearDelta({}, "d")
                    law = causalize(LinearDelta({1: 1}), modulus, 1, max_deg)
                else:
                    Z0 = diophantine(modulus, B, A).Z0
                    law = causalize(Z0, modulus, 1, max_deg)
            except NoSolutionError as exc:
                diag.append(f"F{branch}: {mf.factor}: {exc}")
                continue
            if not _vanishes_on(closed_loop(F, law.S), modulus):
                diag.append(f"F{branch}: {mf.factor}: closed loop with S = {law.S} is not divisible by {modulus}")
                continue
            phi_tilde = LinearDelta({0: 1}) if unconstrained else modulus
            laws.append(FeedbackLaw(law.S, branch, phi_tilde, mf.witness, mf.factor, Z0, law.Q, unconstrained))
    return laws
