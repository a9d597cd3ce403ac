"""Command-line entry point.

Exit codes: 0 on success or a passing verification, 1 on invalid input,
2 when a verification or synthesis fails.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .cli_io import (
    parse_linear,
    parse_poly,
    parse_rationals,
    parse_system,
    parse_trajectory_csv,
    render_report,
)
from .core_algebra import de_star, render_poly
from .errors import DeltaEpsError
from .flf import flf
from .matching import DEFAULT_POOL, SearchBudget, mm, synthesize
from .param_ring import parse_rules
from .simulator import simulate_closed, simulate_open, verify_match

EXIT_OK, EXIT_INVALID, EXIT_FAILED = 0, 1, 2


def _text_arg(value: str) -> str:
    """Treat an argument naming an existing file as that file's contents."""
    p = Path(value)
    try:
        if p.is_file():
            return p.read_text()
    except OSError:
        pass
    return value


class _Law:
    def __init__(self, S, phi_tilde):
        self.S, self.phi_tilde = S, phi_tilde


def cmd_parse(args) -> int:
    sys_ = parse_system(_text_arg(args.system))
    print(render_report(sys_, args.format))
    return EXIT_OK


def cmd_star(args) -> int:
    a, b = parse_poly(_text_arg(args.A)), parse_poly(_text_arg(args.B))
    c = parse_poly(_text_arg(args.C)) if args.C else None
    print(render_poly(de_star(a, b, c)))
    return EXIT_OK


def cmd_dot(args) -> int:
    print(render_poly(parse_poly(_text_arg(args.A)).dot(parse_poly(_text_arg(args.B)))))
    return EXIT_OK


def cmd_factor(args) -> int:
    res = flf(parse_system(_text_arg(args.system)).f)
    print(render_report(res, "json" if args.json else "text"))
    return EXIT_OK


def _budget(args) -> SearchBudget:
    pool = tuple(parse_rationals(args.pool)) if args.pool else DEFAULT_POOL
    return SearchBudget(subset_max=args.subset_max, pool=pool)


def cmd_match(args) -> int:
    plant = parse_system(_text_arg(args.system))
    A_d = parse_linear(_text_arg(args.desired)).with_axis("d")
    rules = [parse_rules(Path(args.rules).read_text())] if args.rules else None
    outcome = mm(plant.f, A_d, _budget(args), rules)
    diagnostics: list = []
    laws = synthesize(plant.f, A_d, outcome, diagnostics=diagnostics) if any(
        (outcome.f1, outcome.f2, outcome.f3)) else []
    report = {"outcome": outcome, "laws": laws, "synthesis_diagnostics": diagnostics}
    if args.format == "json":
        print(render_report(report, "json"))
    else:
        print(render_report(outcome, "text"))
        for law in laws:
            print(law.describe())
        for d in diagnostics:
            print(d)
    return EXIT_OK if laws else EXIT_FAILED


def cmd_simulate(args) -> int:
    plant = parse_system(_text_arg(args.system))
    y0 = parse_rationals(args.init) if args.init else []
    if args.feedback:
        traj = simulate_closed(plant, parse_linear(args.feedback).with_axis("d"), y0, args.steps)
    else:
        u = parse_trajectory_csv(Path(args.input).read_text()) if args.input else None
        traj = simulate_open(plant, u, y0, args.steps)
    if args.format == "json":
        print(traj.to_json())
    else:
        print(traj.to_csv(), end="")
    return EXIT_OK


def cmd_verify(args) -> int:
    plant = parse_system(_text_arg(args.system))
    law = _Law(parse_linear(args.feedback).with_axis("d"),
               parse_linear(args.phi_tilde).with_axis("d") if args.phi_tilde else parse_linear("d0"))
    A_d = parse_linear(_text_arg(args.desired)).with_axis("d")
    report = verify_match(plant, law, A_d, args.steps, args.trials, args.seed)
    print(render_report(report, args.format))
    return EXIT_OK if report.passed else EXIT_FAILED


class _Parser(argparse.ArgumentParser):
    """Usage errors count as invalid input (exit 1); exit 2 is reserved for failed checks."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INVALID, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="deltaeps", description="Delta-epsilon polynomial toolkit",
                epilog="Pass values that start with '-' as --option=value.")
    sub = p.add_subparsers(dest="command", required=True)

    def fmt(sp, default="text"):
        sp.add_argument("--format", choices=("text", "json"), default=default)

    sp = sub.add_parser("parse", help="parse and validate a system")
    sp.add_argument("system", help="system text or file")
    fmt(sp, "json")
    sp.set_defaults(func=cmd_parse)

    sp = sub.add_parser("star", help="star product A*[B, C]")
    sp.add_argument("A")
    sp.add_argument("B")
    sp.add_argument("C", nargs="?")
    sp.set_defaults(func=cmd_star)

    sp = sub.add_parser("dot", help="dot product A.B")
    sp.add_argument("A")
    sp.add_argument("B")
    sp.set_defaults(func=cmd_dot)

    sp = sub.add_parser("factor", help="formal linear factorization")
    sp.add_argument("system")
    sp.add_argument("--json", action="store_true")
    sp.set_defaults(func=cmd_factor)

    sp = sub.add_parser("match", help="search common factors and synthesize feedback laws")
    sp.add_argument("system")
    sp.add_argument("--desired", required=True)
    sp.add_argument("--rules")
    sp.add_argument("--subset-max", type=int, default=6)
    sp.add_argument("--pool", help="comma-separated rationals")
    fmt(sp, "json")
    sp.set_defaults(func=cmd_match)

    sp = sub.add_parser("simulate", help="exact open- or closed-loop simulation")
    sp.add_argument("system")
    group = sp.add_mutually_exclusive_group()
    group.add_argument("--input", help="CSV file with t,value lines (default: zero input)")
    group.add_argument("--feedback", help="linear feedback polynomial S")
    sp.add_argument("--init", default="")
    sp.add_argument("--steps", type=int, required=True)
    sp.add_argument("--format", choices=("csv", "json"), default="csv")
    sp.set_defaults(func=cmd_simulate)

    sp = sub.add_parser("verify", help="compare closed loop with the desired system")
    sp.add_argument("system")
    sp.add_argument("--feedback", required=True)
    sp.add_argument("--desired", required=True)
    sp.add_argument("--phi-tilde")
    sp.add_argument("--steps", type=int, default=50)
    sp.add_argument("--trials", type=int, default=20)
    sp.add_argument("--seed", type=int, default=0)
    fmt(sp)
    sp.set_defaults(func=cmd_verify)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except DeltaEpsError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
