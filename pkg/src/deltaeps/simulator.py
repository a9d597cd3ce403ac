"""Exact rational simulation of open-loop, closed-loop and autonomous systems."""

from __future__ import annotations

import json
import random
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Iterable, Optional, Sequence

from .core_algebra import DEOperator, DEPolynomial, evaluate
from .errors import ValidationError
from .linear_tools import LinearDelta
from .param_ring import format_rational

D0 = DEOperator.make((0,), ())


class Trajectory:
    """Causal sequence of rationals starting at t = 0; negative times read as 0."""

    __slots__ = ("values",)

    def __init__(self, values: Iterable = ()):
        self.values = [Fraction(v) for v in values]

    def __getitem__(self, t):
        if isinstance(t, slice):
            return self.values[t]
        if t < 0:
            return Fraction(0)
        return self.values[t]

    def __len__(self) -> int:
        return len(self.values)

    def __iter__(self):
        return iter(self.values)

    def __eq__(self, other) -> bool:
        if isinstance(other, Trajectory):
            return self.values == other.values
        if isinstance(other, (list, tuple)):
            return self.values == [Fraction(v) for v in other]
        return NotImplemented

    def __repr__(self) -> str:
        return f"Trajectory([{', '.join(format_rational(v) for v in self.values)}])"

    def append(self, v) -> None:
        self.values.append(Fraction(v))

    def first_divergence(self, other: "Trajectory") -> Optional[int]:
        for t, (a, b) in enumerate(zip(self.values, other.values)):
            if a != b:
                return t
        if len(self.values) != len(other.values):
            return min(len(self.values), len(other.values))
        return None

    def to_csv(self) -> str:
        return "".join(f"{t},{format_rational(v)}\n" for t, v in enumerate(self.values))

    def to_json(self) -> str:
        return json.dumps([format_rational(v) for v in self.values])


def _as_reader(u) -> Callable[[int], Fraction]:
    if u is None:
        return lambda t: Fraction(0)
    if callable(u) and not isinstance(u, Trajectory):
        return lambda t: Fraction(0) if t < 0 else Fraction(u(t))
    seq = u if isinstance(u, Trajectory) else Trajectory(u)
    return lambda t: seq[t]


@dataclass(frozen=True)
class SystemDef:
    """Plant ``f[y, u] = 0`` solvable for y(t) through its linear delta_0 term."""

    f: DEPolynomial
    k: int = field(init=False)
    c0: Fraction = field(init=False)

    def __post_init__(self):
        f = self.f
        if f.is_zero():
            raise ValidationError("system polynomial is zero")
        if not f.is_parameter_free():
            raise ValidationError("system coefficients must be numeric")
        if f.has_constant_term():
            raise ValidationError("system has a constant term")
        c0 = f.coeff(D0)
        if not c0:
            raise ValidationError("y(t) does not appear in the linear part (c0 = 0)")
        for op in f.operators():
            if op != D0 and op.delta and op.delta[0] == 0:
                raise ValidationError(f"y(t) appears nonlinearly in term {op}; it must occur only linearly")
        object.__setattr__(self, "c0", c0.const_value())
        object.__setattr__(self, "k", max((op.delta[-1] for op in f.operators() if op.delta), default=0))

    @property
    def rest(self) -> DEPolynomial:
        """``f - c0 * delta_0``."""
        return DEPolynomial({op: c for op, c in self.f.items() if op != D0})

    @property
    def max_input_delay(self) -> int:
        return max((op.eps[-1] for op in self.f.operators() if op.eps), default=-1)

    def closed_loop_order(self, S: LinearDelta) -> int:
        """Largest output delay of the loop closed with u = S y."""
        if S.is_zero() or self.max_input_delay < 0:
            return self.k
        return max(self.k, self.max_input_delay + S.degree)


def _check_init(y0: Sequence, k: int, exact: bool) -> list:
    y0 = [Fraction(v) for v in y0]
    if exact and len(y0) != k:
        raise ValidationError(f"expected {k} initial conditions, got {len(y0)}")
    if len(y0) < k:
        raise ValidationError(f"expected at least {k} initial conditions, got {len(y0)}")
    return y0


def simulate_open(sys: SystemDef, u, y0: Sequence, T: int) -> Trajectory:
    """Trajectory y(0..T) driven by input u with prefix y0 (len(y0) = k)."""
    y = Trajectory(_check_init(y0, sys.k, True))
    ru = _as_reader(u)
    rest = sys.rest
    for t in range(len(y), T + 1):
        y.append(-evaluate(rest, y, ru, t) / sys.c0)
    return Trajectory(y.values[: T + 1])


def apply_linear(S: LinearDelta, y, t: int) -> Fraction:
    return sum((c.const_value() * y[t - k] for k, c in S.items()), Fraction(0))


def _closed_steps(sys: SystemDef, S: LinearDelta, y0: Sequence):
    """Yield the closed-loop trajectory one sample at a time, prefix first."""
    if not S.is_zero() and S.min_delay() < 1:
        raise ValidationError("non-causal feedback: S has a delta_0 term")
    if not S.is_parameter_free():
        raise ValidationError("feedback has unresolved parameters")
    y = Trajectory(_check_init(y0, sys.k, False))
    rest = sys.rest
    u_cache: dict = {}

    def u(t: int) -> Fraction:
        if t < 0:
            return Fraction(0)
        v = u_cache.get(t)
        if v is None:
            v = apply_linear(S, y, t)
            u_cache[t] = v
        return v

    yield from y.values
    t = len(y)
    while True:
        y.append(-evaluate(rest, y, u, t) / sys.c0)
        yield y[t]
        t += 1


def simulate_closed(sys: SystemDef, S: LinearDelta, y0: Sequence, T: int) -> Trajectory:
    """Closed loop with u(t) = S y(t); S must not use y(t) itself."""
    steps = _closed_steps(sys, S, y0)
    return Trajectory(next(steps) for _ in range(T + 1))


def _autonomous_parts(G: DEPolynomial) -> tuple[Fraction, DEPolynomial, int]:
    if not G.is_delta_only():
        raise ValidationError("autonomous system must not contain inputs")
    if not G.is_parameter_free():
        raise ValidationError("autonomous system has unresolved parameters")
    g0 = G.coeff(D0)
    if not g0:
        raise ValidationError("delta_0 coefficient is zero; recurrence cannot be solved for y(t)")
    rest = DEPolynomial({op: c for op, c in G.items() if op != D0})
    for op in rest.operators():
        if op.delta and op.delta[0] == 0:
            raise ValidationError("y(t) appears nonlinearly")
    order = max((op.delta[-1] for op in G.operators() if op.delta), default=0)
    return g0.const_value(), rest, order


def simulate_autonomous(G, y0: Sequence, T: int) -> Trajectory:
    """Solve ``G y = 0`` forward from the prefix y0 (len(y0) >= order of G)."""
    if isinstance(G, LinearDelta):
        G = G.to_de()
    g0, rest, order = _autonomous_parts(G)
    y = Trajectory(_check_init(y0, order, False))
    zero = lambda t: Fraction(0)  # noqa: E731
    for t in range(len(y), T + 1):
        y.append(-evaluate(rest, y, zero, t) / g0)
    return Trajectory(y.values[: T + 1])


def identical_init(k: int, desired, psi0: Sequence) -> list:
    """Extend psi0 by the desired system's recurrence up to length k."""
    psi0 = [Fraction(v) for v in psi0]
    if len(psi0) > k:
        raise ValidationError(f"{len(psi0)} initial values exceed the target order {k}")
    if len(psi0) == k:
        return psi0
    return list(simulate_autonomous(desired, psi0, k - 1))


def constrained_init(phi_tilde: LinearDelta, length: int, free_values: Sequence) -> list:
    """Initial values whose every window satisfies ``phi_tilde y = 0``.

    The first ``deg phi_tilde`` values are free; each later value is solved
    from ``sum tau_i y(t-i) = 0``.  A unit ``phi_tilde`` imposes nothing.
    """
    m = max(phi_tilde.degree, 0)
    if m == 0:
        return [Fraction(v) for v in free_values[:length]]
    tau0 = phi_tilde.coeff(0).const_value()
    if tau0 == 0:
        raise ValidationError("constraint polynomial has no delta_0 term")
    y = [Fraction(v) for v in free_values[:m]]
    for t in range(m, length):
        acc = sum((phi_tilde.coeff(i).const_value() * y[t - i] for i in range(1, m + 1)), Fraction(0))
        y.append(-acc / tau0)
    return y[:length]


def satisfies_constraint(phi_tilde: LinearDelta, y0: Sequence) -> bool:
    """Check ``sum tau_i y_{k-1-i} = 0`` for the last window of y0 (unit phi_tilde: always true)."""
    m = phi_tilde.degree
    if m <= 0:
        return True
    k = len(y0)
    return sum((phi_tilde.coeff(i).const_value() * Fraction(y0[k - 1 - i]) for i in range(m + 1)
                if k - 1 - i >= 0), Fraction(0)) == 0


def random_rational(rng: random.Random, bound: int = 9) -> Fraction:
    return Fraction(rng.randint(-bound, bound), rng.randint(1, bound))


@dataclass
class TrialResult:
    index: int
    passed: bool
    first_divergence: Optional[int]
    init: list


@dataclass
class MatchReport:
    trials: list
    closed_loop_order: int
    steps: int

    @property
    def passed(self) -> bool:
        return all(t.passed for t in self.trials)

    def summary(self) -> str:
        ok = sum(t.passed for t in self.trials)
        return f"{ok}/{len(self.trials)} trials matched over {self.steps} steps"


def verify_match(sys: SystemDef, law, A_d: LinearDelta, T: int, trials: int, seed: int = 0) -> MatchReport:
    """Compare closed loop and desired system from identical, constrained initial conditions.

    ``law`` needs attributes ``S`` and ``phi_tilde`` (LinearDelta).
    """
    S, phi_tilde = law.S, law.phi_tilde
    rng = random.Random(seed)
    kc = sys.closed_loop_order(S)
    kd = A_d.degree
    n = max(kc, kd)
    results = []
    for i in range(trials):
        free = [random_rational(rng) for _ in range(max(kd, 1))]
        psi0 = constrained_init(phi_tilde, kd, free)
        desired = simulate_autonomous(A_d, psi0, T)
        init = identical_init(n, A_d, psi0)
        # stop at the first mismatch: a diverging nonlinear loop grows too fast to finish
        div = None
        for t, v in zip(range(T + 1), _closed_steps(sys, S, init)):
            if v != desired[t]:
                div = t
                break
        results.append(TrialResult(i, div is None, div, psi0))
    return MatchReport(results, kc, T)
