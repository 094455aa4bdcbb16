"""Command-line front end.

Exit codes: 0 success, 1 usage or input error, 2 solver stopped at a limit.
Results go to stdout; logs go to stderr at the level named by
``MIMFRELAX_LOG_LEVEL`` (default ``WARNING``).
"""
from __future__ import annotations

import argparse
import json
import logging
import math
import os
import sys
from typing import List, Optional

from .bench import build_relaxed_milp, emit_table, generate_instance, run_experiment
from .io import MpsError, SchemaError, dump_instance, load_instance, read_mps, write_mps
from .model import ModelError
from .oracle import OracleError, check_projection_conjecture, random_term
from .relaxations import Formulation
from .solver import DEFAULT_NODE_LIMIT, LPSolver, SolveStatus, solve_milp

log = logging.getLogger("mimfrelax")

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_LIMIT = 2

LIMIT_STATUSES = {SolveStatus.NODE_LIMIT, SolveStatus.ITER_LIMIT}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    """argparse exits with 2 on bad arguments; usage errors here are 1."""

    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(f"{self.prog}: error: {message}")


def _formulation(text: str) -> Formulation:
    aliases = {"flambda": Formulation.FLAMBDA, "lambda": Formulation.FLAMBDA,
               "frmc": Formulation.FRMC, "rmc": Formulation.FRMC}
    try:
        return aliases[text.lower()]
    except KeyError:
        raise argparse.ArgumentTypeError(f"unknown formulation {text!r} (use flambda or frmc)") from None


def _int_list(text: str) -> List[int]:
    try:
        return [int(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def _seeds(text: str) -> List[int]:
    """``3`` means seeds 0,1,2; ``4,9`` lists seeds explicitly."""
    vals = _int_list(text)
    if len(vals) == 1 and "," not in text:
        if vals[0] < 1:
            raise argparse.ArgumentTypeError("seed count must be positive")
        return list(range(vals[0]))
    return vals


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="mimfrelax", description="Relaxations of mixed-integer multilinear terms.")
    sub = p.add_subparsers(dest="command", metavar="command", parser_class=_Parser)
    sub.required = True

    g = sub.add_parser("generate", help="write a benchmark instance as JSON")
    g.add_argument("-n", type=int, required=True)
    g.add_argument("-k", type=int, required=True)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--demand-factor", type=float, default=0.7)
    g.add_argument("-o", "--output")

    b = sub.add_parser("build", help="relax an instance into an MPS model")
    b.add_argument("instance", help="instance JSON path, or - for stdin")
    b.add_argument("-f", "--formulation", type=_formulation, default=Formulation.FLAMBDA)
    b.add_argument("-o", "--output")

    s = sub.add_parser("solve", help="solve an MPS model or an instance")
    s.add_argument("input", help="MPS or instance JSON path, or - for stdin")
    s.add_argument("--mode", choices=["lp", "milp"], default="milp")
    s.add_argument("-f", "--formulation", type=_formulation, default=Formulation.FLAMBDA,
                   help="relaxation used when the input is an instance")
    s.add_argument("--node-limit", type=int, default=DEFAULT_NODE_LIMIT)
    s.add_argument("--with-point", action="store_true", help="include the primal point")
    s.add_argument("-o", "--output")

    v = sub.add_parser("verify-hull", help="probe whether a relaxation projects onto the hull")
    v.add_argument("--ni", type=int, required=True, help="continuous factors")
    v.add_argument("--nj", type=int, required=True, help="binary factors")
    v.add_argument("--directions", type=int, default=200)
    v.add_argument("--seed", type=int, default=0)
    v.add_argument("-f", "--formulation", type=_formulation, default=Formulation.FLAMBDA)
    v.add_argument("-o", "--output")

    r = sub.add_parser("bench", help="run the benchmark family and print a table")
    r.add_argument("-k", type=int, default=4)
    r.add_argument("-n", type=_int_list, default=[20], help="comma-separated sizes")
    r.add_argument("--seeds", type=_seeds, default=[0], help="count, or comma-separated list")
    r.add_argument("--format", choices=["csv", "markdown"], default="csv")
    r.add_argument("--formulations", type=lambda t: [_formulation(x) for x in t.split(",")],
                   default=[Formulation.FLAMBDA, Formulation.FRMC])
    r.add_argument("--node-limit", type=int, default=DEFAULT_NODE_LIMIT)
    r.add_argument("--workers", type=int, default=1)
    r.add_argument("-o", "--output")
    return p


def _read(path: str) -> str:
    if path == "-":
        return sys.stdin.read()
    with open(path, encoding="utf-8") as fh:
        return fh.read()


def _write(text: str, path: Optional[str]) -> None:
    if path:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _jsonable(v):
    if isinstance(v, float) and not math.isfinite(v):
        return None
    return v


def cmd_generate(args) -> int:
    inst = generate_instance(args.n, args.k, args.seed, args.demand_factor)
    _write(dump_instance(inst), args.output)
    return EXIT_OK


def cmd_build(args) -> int:
    inst = load_instance(_read(args.instance))
    _write(write_mps(build_relaxed_milp(inst, args.formulation).model), args.output)
    return EXIT_OK


def cmd_solve(args) -> int:
    text = _read(args.input)
    if text.lstrip().startswith("{"):
        model = build_relaxed_milp(load_instance(text), args.formulation).model
    else:
        model = read_mps(text)
    if args.mode == "lp" or not model.binary_ids():
        res = LPSolver(model).solve()
    else:
        res = solve_milp(model, args.node_limit)
    out = {k: _jsonable(v) for k, v in res.to_dict().items() if k in
           ("status", "objective", "bound", "lp_iterations", "bb_nodes", "wall_time")}
    out["mode"] = args.mode
    if args.with_point and res.point is not None:
        out["point"] = {v.name: float(x) for v, x in zip(model.variables, res.point)}
    _write(json.dumps(out, indent=2) + "\n", args.output)
    log.info("solve finished: %s", res.status.value)
    return EXIT_LIMIT if res.status in LIMIT_STATUSES else EXIT_OK


def cmd_verify_hull(args) -> int:
    term = random_term(args.ni, args.nj, args.seed)
    rep = check_projection_conjecture(term, args.directions, args.seed, args.formulation)
    d = rep.to_dict()
    d["bounds"] = [list(b) for b in term.bounds]
    _write(json.dumps(d, indent=2) + "\n", args.output)
    return EXIT_OK


def cmd_bench(args) -> int:
    rows = run_experiment(args.n, args.k, args.seeds, args.formulations,
                          workers=args.workers, node_limit=args.node_limit)
    _write(emit_table(rows, args.format), args.output)
    return EXIT_LIMIT if any(r.status != SolveStatus.OPTIMAL.value for r in rows) else EXIT_OK


COMMANDS = {
    "generate": cmd_generate,
    "build": cmd_build,
    "solve": cmd_solve,
    "verify-hull": cmd_verify_hull,
    "bench": cmd_bench,
}


def main(argv: Optional[List[str]] = None) -> int:
    level = os.environ.get("MIMFRELAX_LOG_LEVEL", "WARNING").upper()
    logging.basicConfig(stream=sys.stderr, level=getattr(logging, level, logging.WARNING),
                        format="%(levelname)s %(name)s: %(message)s")
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_USAGE
    except SystemExit as exc:  # --help
        return EXIT_OK if not exc.code else EXIT_USAGE
    try:
        return COMMANDS[args.command](args)
    except (OSError, MpsError, SchemaError, ModelError, OracleError, ValueError) as exc:
        print(f"mimfrelax {args.command}: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
