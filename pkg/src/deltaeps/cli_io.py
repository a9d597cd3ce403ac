"""Text formats: systems, polynomials, rational lists and JSON reports.

Both input dialects share one grammar::

    expr    := term (("+" | "-") term)*
    term    := ["+" | "-"] power ("*" power)*
    power   := atom ["^" INT]
    atom    := RATIONAL | signal | operator | param | "(" expr ")"
    signal  := ("y" | "u") ("[" | "(") "t" ["-" INT] ("]" | ")")
    operator:= ("d" | "e") INT
    param   := ("w" | "s" | "q") "[" INT "," INT "," INT "," INT "]"

``y[t-i]`` and ``d<i>`` denote the same delta operator, ``u[t-i]`` and
``e<i>`` the same epsilon operator.  Products are dot products.
"""

from __future__ import annotations

import json
import re
from fractions import Fraction
from typing import Optional

from .core_algebra import DEPolynomial, render_operator, render_poly
from .errors import ParseError, ValidationError
from .flf import FactorSets, FLFResult, derived_sets, describe_entry
from .linear_tools import LinearDelta
from .param_ring import ParamId, ParamPoly, Rule, format_rational
from .simulator import MatchReport, SystemDef, Trajectory

_TOKEN = re.compile(
    r"""
    (?P<ws>\s+)
  | (?P<num>\d+(?:\.\d*)?)
  | (?P<signal>[yu])\s*[\[(]\s*t\s*(?:(?P<sop>[-+])\s*(?P<sdelay>\d+)\s*)?[\])]
  | (?P<param>[wsq])\s*\[\s*\d+\s*,\s*\d+\s*,\s*\d+\s*,\s*\d+\s*\]
  | (?P<op>[de])(?P<opdelay>\d+)
  | (?P<sym>[-+*/^()=])
    """,
    re.VERBOSE,
)


class _Tok:
    __slots__ = ("kind", "text", "pos", "value")

    def __init__(self, kind, text, pos, value=None):
        self.kind, self.text, self.pos, self.value = kind, text, pos, value


def tokenize(text: str) -> list:
    toks = []
    pos = 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if not m:
            raise ParseError(f"unexpected character {text[pos]!r}", text, pos)
        if m.group("ws"):
            pos = m.end()
            continue
        if m.group("num") is not None:
            if "." in m.group("num"):
                raise ParseError("decimal literals are not allowed; write p/q", text, pos)
            toks.append(_Tok("num", m.group(0), pos, int(m.group("num"))))
        elif m.group("signal"):
            if m.group("sop") == "+":
                raise ParseError("negative delay (future sample) is not allowed", text, pos)
            delay = int(m.group("sdelay")) if m.group("sdelay") else 0
            toks.append(_Tok("signal", m.group(0), pos, (m.group("signal"), delay)))
        elif m.group("param"):
            toks.append(_Tok("param", m.group(0), pos, ParamId.parse(m.group(0))))
        elif m.group("op"):
            toks.append(_Tok("signal", m.group(0), pos, ("y" if m.group("op") == "d" else "u", int(m.group("opdelay")))))
        else:
            toks.append(_Tok(m.group("sym"), m.group(0), pos))
        pos = m.end()
    toks.append(_Tok("end", "", len(text)))
    return toks


class _Parser:
    def __init__(self, text: str):
        self.text = text
        self.toks = tokenize(text)
        self.i = 0

    @property
    def cur(self) -> _Tok:
        return self.toks[self.i]

    def take(self, kind: str) -> _Tok:
        tok = self.cur
        if tok.kind != kind:
            want = "end of input" if kind == "end" else repr(kind)
            raise ParseError(f"expected {want}, found {tok.text or 'end of input'!r}", self.text, tok.pos)
        self.i += 1
        return tok

    def expr(self) -> DEPolynomial:
        acc = self.term()
        while self.cur.kind in "+-":
            sign = self.take(self.cur.kind).kind
            t = self.term(allow_sign=False)
            acc = acc + t if sign == "+" else acc - t
        return acc

    def term(self, allow_sign: bool = True) -> DEPolynomial:
        neg = False
        if allow_sign and self.cur.kind in "+-":
            neg = self.take(self.cur.kind).kind == "-"
        acc = self.power()
        while self.cur.kind == "*":
            self.take("*")
            acc = acc * self.power()
        return -acc if neg else acc

    def power(self) -> DEPolynomial:
        base = self.atom()
        if self.cur.kind == "^":
            self.take("^")
            tok = self.cur
            if tok.kind != "num":
                raise ParseError("exponent must be a nonnegative integer", self.text, tok.pos)
            self.take("num")
            if self.cur.kind == "/":
                raise ParseError("exponent must be an integer", self.text, self.cur.pos)
            out = DEPolynomial.constant(1)
            for _ in range(tok.value):
                out = out * base
            return out
        return base

    def atom(self) -> DEPolynomial:
        tok = self.cur
        if tok.kind == "num":
            self.take("num")
            value = Fraction(tok.value)
            if self.cur.kind == "/":
                self.take("/")
                den = self.cur
                if den.kind != "num":
                    raise ParseError("expected a denominator", self.text, den.pos)
                self.take("num")
                if den.value == 0:
                    raise ParseError("zero denominator", self.text, den.pos)
                value /= den.value
            return DEPolynomial.constant(value)
        if tok.kind == "signal":
            self.take("signal")
            which, delay = tok.value
            if which == "y":
                return DEPolynomial.monomial(delta=(delay,))
            return DEPolynomial.monomial(eps=(delay,))
        if tok.kind == "param":
            self.take("param")
            return DEPolynomial.constant(ParamPoly.var(tok.value))
        if tok.kind == "(":
            self.take("(")
            inner = self.expr()
            self.take(")")
            return inner
        raise ParseError(f"unexpected {tok.text or 'end of input'!r}", self.text, tok.pos)


def parse_poly(text: str) -> DEPolynomial:
    """Parse either dialect into a canonical DEPolynomial."""
    p = _Parser(text)
    out = p.expr()
    p.take("end")
    return out


def parse_linear(text: str) -> LinearDelta:
    """Parse a linear delta- or epsilon-polynomial."""
    p = parse_poly(text)
    try:
        return LinearDelta.from_de(p)
    except ValidationError as exc:
        raise ParseError(f"expected a linear polynomial: {exc}", text, 0) from None


def parse_equation(text: str) -> DEPolynomial:
    """``lhs = rhs`` becomes ``lhs - rhs``; a bare expression means ``expr = 0``."""
    p = _Parser(text)
    lhs = p.expr()
    if p.cur.kind == "=":
        p.take("=")
        rhs = p.expr()
        p.take("end")
        return lhs - rhs
    p.take("end")
    return lhs


def parse_system(text: str) -> SystemDef:
    """Parse and validate a plant description."""
    lines = [ln.split("#", 1)[0].strip() for ln in text.splitlines()]
    body = " ".join(ln for ln in lines if ln)
    if not body:
        raise ParseError("empty system description", text, 0)
    return SystemDef(parse_equation(body))


def parse_rationals(text: str) -> list:
    """Comma-separated exact rationals such as ``2,1,-1/2``."""
    out = []
    pos = 0
    for part in text.split(","):
        item = part.strip()
        if not re.fullmatch(r"[+-]?\d+(/\d+)?", item):
            raise ParseError("expected a rational p or p/q", text, pos)
        out.append(Fraction(item))
        pos += len(part) + 1
    return out


def parse_trajectory_csv(text: str) -> Trajectory:
    """Read ``t,value`` lines (or bare values); times must be 0, 1, 2, ..."""
    values = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line or line.lower().startswith("t,"):
            continue
        fields = [f.strip() for f in line.split(",")]
        if len(fields) == 2:
            if int(fields[0]) != len(values):
                raise ParseError(f"line {lineno}: expected time {len(values)}", raw, 0)
            fields = fields[1:]
        if len(fields) != 1 or not re.fullmatch(r"[+-]?\d+(/\d+)?", fields[0]):
            raise ParseError(f"line {lineno}: expected a rational value", raw, 0)
        values.append(Fraction(fields[0]))
    return Trajectory(values)


# -- reports ---------------------------------------------------------------------------
def _rule_json(rule: Optional[Rule]) -> dict:
    return {} if rule is None else {str(p): format_rational(v) for p, v in rule.items()}


def _flf_json(res: FLFResult) -> dict:
    entries = []
    for e in res.entries:
        entries.append({
            "lam": e.lam, "u": e.u, "omega": e.omega, "h": e.h,
            "phase": e.phase,
            "companion": str(e.companion),
            "operator": render_operator(e.op),
            "L": None if e.L is None else str(e.L),
            "M": None if e.M is None else str(e.M),
            "kappa": e.kappa, "sigma": e.sigma,
        })

    def rem(r):
        return {"poly": render_poly(r.poly), "kappa": r.kappa, "sigma": r.sigma}

    sets = derived_sets(res)
    return {
        "sets": {name: [f.label for f in getattr(sets, name)] for name in FactorSets.NAMES},
        "h_star": res.h_star,
        "entries": entries,
        "remainders": {
            "delta": {str(h): rem(r) for h, r in sorted(res.r_delta.items()) if not r.poly.is_zero()},
            "eps": {str(h): rem(r) for h, r in sorted(res.r_eps.items()) if not r.poly.is_zero()},
            "cross": rem(res.r_de) if not res.r_de.poly.is_zero() else None,
        },
    }


def _to_json(obj):
    from .matching import FeedbackLaw, MatchOutcome  # matching imports nothing from here

    if isinstance(obj, DEPolynomial):
        return render_poly(obj)
    if isinstance(obj, (LinearDelta, ParamPoly)):
        return str(obj)
    if isinstance(obj, Rule):
        return _rule_json(obj)
    if isinstance(obj, Trajectory):
        return [format_rational(v) for v in obj]
    if isinstance(obj, FLFResult):
        return _flf_json(obj)
    if isinstance(obj, MatchOutcome):
        def branch(items):
            return [{"factor": str(m.factor), "witness": _rule_json(m.witness), "sets": m.sets,
                     "subset": list(m.subset)} for m in items]
        return {"f1": branch(obj.f1), "f2": branch(obj.f2), "f3": branch(obj.f3),
                "diagnostics": list(obj.diagnostics)}
    if isinstance(obj, FeedbackLaw):
        return {"S": str(obj.S), "branch": obj.branch, "factor": str(obj.factor),
                "phi_tilde": str(obj.phi_tilde), "unconstrained": obj.unconstrained,
                "Z0": str(obj.Z0), "Q": str(obj.Q), "witness": _rule_json(obj.witness)}
    if isinstance(obj, MatchReport):
        return {"passed": obj.passed, "closed_loop_order": obj.closed_loop_order, "steps": obj.steps,
                "trials": [{"index": t.index, "passed": t.passed, "first_divergence": t.first_divergence,
                            "init": [format_rational(v) for v in t.init]} for t in obj.trials]}
    if isinstance(obj, SystemDef):
        return {"f": render_poly(obj.f), "k": obj.k, "c0": format_rational(obj.c0)}
    if isinstance(obj, dict):
        return {str(k): _to_json(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_to_json(v) for v in obj]
    if isinstance(obj, Fraction):
        return format_rational(obj)
    return obj


def render_report(obj, fmt: str = "json") -> str:
    """Deterministic JSON (default) or plain-text rendering of any result object."""
    if fmt == "json":
        return json.dumps(_to_json(obj), indent=2, sort_keys=True)
    if fmt != "text":
        raise ValidationError(f"unknown report format {fmt!r}")
    return _to_text(obj)


def _to_text(obj) -> str:
    from .matching import FeedbackLaw, MatchOutcome

    if isinstance(obj, FLFResult):
        lines = [describe_entry(e) for e in obj.entries]
        lines.append(f"h* = {obj.h_star}")
        for r in obj.remainders():
            if not r.poly.is_zero():
                lines.append(f"remainder (kappa={r.kappa}, sigma={r.sigma}): {render_poly(r.poly)}")
        return "\n".join(lines)
    if isinstance(obj, MatchOutcome):
        lines = []
        for name, items in (("F1", obj.f1), ("F2", obj.f2), ("F3", obj.f3)):
            if not items:
                lines.append(f"{name}: empty")
            for m in items:
                lines.append(f"{name}: {m.factor}  via {m.sets}  witness {m.witness}")
        return "\n".join(lines)
    if isinstance(obj, FeedbackLaw):
        return obj.describe()
    if isinstance(obj, Trajectory):
        return obj.to_csv().rstrip("\n")
    if isinstance(obj, MatchReport):
        lines = [obj.summary()]
        for t in obj.trials:
            if not t.passed:
                lines.append(f"trial {t.index}: diverged at t = {t.first_divergence}")
        return "\n".join(lines)
    if isinstance(obj, DEPolynomial):
        return render_poly(obj)
    if isinstance(obj, (list, tuple)):
        return "\n".join(_to_text(x) for x in obj)
    return str(obj)
