"""Command-line front end: ``mcvx verify | minimal-sets | solve | examples``."""

from __future__ import annotations

import argparse
import csv
import json
import sys
from pathlib import Path

import numpy as np

from .bcd import TRACE_COLUMNS, SolveSettings, objective_trace, solve_restarts
from .document import DocumentError, dumps, parse_problem
from .errors import DomainError, NotDMCPError
from .examples import EXAMPLES, get_example
from .multiconvex import block_verdicts, find_minimal_sets

EXIT_OK, EXIT_PARSE, EXIT_NOT_DMCP, EXIT_SOLVER = 0, 2, 3, 4

# flag -> SolveSettings field
FLAG_FIELDS = {
    "update": "update", "mu0": "mu_0", "rho": "rho", "mu_max": "mu_max", "lambd": "lambd",
    "max_iter": "max_iter", "seed": "seed", "tol_obj": "tol_obj", "tol_slack": "tol_slack",
}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_PARSE, f"{self.prog}: error: {message}\n")


def _tensor(value) -> float | list:
    arr = np.asarray(value, dtype=float)
    if arr.size == 1:
        return float(arr.reshape(-1)[0])
    if arr.ndim == 2 and arr.shape[1] == 1:
        return arr[:, 0].tolist()
    return arr.tolist()


def _number(x: float):
    return x if np.isfinite(x) else str(x)


def _emit(payload: dict, out: str | None) -> None:
    text = json.dumps(payload, indent=1) + "\n"
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def _load(path: str):
    try:
        return parse_problem(path)
    except OSError as err:
        raise DocumentError(path, err.strerror or str(err)) from None


def cmd_verify(args) -> int:
    doc = _load(args.problem)
    p = doc.problem
    verdicts = block_verdicts(p)
    blocks = [{"index": i, "name": v.name, "dcp_with_others_fixed": ok}
              for i, (v, ok) in enumerate(zip(p.variables(), verdicts))]
    dmcp = all(verdicts)
    _emit({"dmcp": dmcp, "blocks": blocks}, args.out)
    return EXIT_OK if dmcp else EXIT_NOT_DMCP


def cmd_minimal_sets(args) -> int:
    doc = _load(args.problem)
    p = doc.problem
    sets = find_minimal_sets(p)
    names = [v.name for v in p.variables()]
    _emit({"sets": [list(s) for s in sets],
           "names": [[names[i] for i in s] for s in sets]}, args.out)
    return EXIT_OK


def _settings(args, base: SolveSettings) -> SolveSettings:
    changes = {field: getattr(args, flag) for flag, field in FLAG_FIELDS.items()
               if getattr(args, flag) is not None}
    return base.replace(**changes)


def _write_trace(path: str, result) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(TRACE_COLUMNS)
        w.writerows(objective_trace(result))


def cmd_solve(args) -> int:
    doc = _load(args.problem)
    try:
        settings = _settings(args, doc.settings)
    except ValueError as err:
        raise DocumentError("flags", str(err)) from None
    base_seed = settings.seed if settings.seed is not None else 0
    seeds = [base_seed + k for k in range(max(1, args.restarts))]
    try:
        r = solve_restarts(doc.problem, settings, seeds)
    except DomainError as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_SOLVER
    payload = {
        "status": r.status,
        "objective": _number(r.objective),
        "penalized_objective": _number(r.penalized_objective),
        "slack_inf": _number(r.slack_inf),
        "cycles": r.cycles,
        "variables": {name: _tensor(val) for name, val in r.values.items()},
    }
    if r.message:
        payload["message"] = r.message
    _emit(payload, args.out)
    if args.trace:
        _write_trace(args.trace, r)
    return EXIT_SOLVER if r.status == "subproblem_failure" else EXIT_OK


def cmd_examples(args) -> int:
    if args.action == "list":
        for name in EXAMPLES:
            print(f"{name}\t{get_example(name).description}")
        return EXIT_OK
    if not args.name:
        raise DocumentError("examples", "emit needs an example name")
    try:
        ex = get_example(args.name)
    except KeyError as err:
        raise DocumentError("examples", err.args[0]) from None
    text = dumps(ex.document())
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="mcvx", description="Multi-convex modeling and block coordinate descent.")
    sub = ap.add_subparsers(dest="command", required=True, parser_class=_Parser)

    v = sub.add_parser("verify", help="check that a problem document is DMCP")
    v.add_argument("problem")
    v.add_argument("--out")
    v.set_defaults(run=cmd_verify)

    m = sub.add_parser("minimal-sets", help="print the minimal fixed sets")
    m.add_argument("problem")
    m.add_argument("--out")
    m.set_defaults(run=cmd_minimal_sets)

    s = sub.add_parser("solve", help="run block coordinate descent")
    s.add_argument("problem")
    s.add_argument("--update", choices=("minimize", "proximal", "prox_linear"))
    s.add_argument("--mu0", type=float)
    s.add_argument("--rho", type=float)
    s.add_argument("--mu-max", dest="mu_max", type=float)
    s.add_argument("--lambda", dest="lambd", type=float)
    s.add_argument("--max-iter", dest="max_iter", type=int)
    s.add_argument("--seed", type=int)
    s.add_argument("--restarts", type=int, default=1)
    s.add_argument("--tol-obj", dest="tol_obj", type=float)
    s.add_argument("--tol-slack", dest="tol_slack", type=float)
    s.add_argument("--trace", help="write the iteration trace as CSV")
    s.add_argument("--out", help="write the result JSON here instead of stdout")
    s.set_defaults(run=cmd_solve)

    e = sub.add_parser("examples", help="list or emit bundled example problems")
    e.add_argument("action", choices=("list", "emit"))
    e.add_argument("name", nargs="?")
    e.add_argument("--out")
    e.set_defaults(run=cmd_examples)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.run(args)
    except DocumentError as err:
        print(f"parse error: {err}", file=sys.stderr)
        return EXIT_PARSE
    except NotDMCPError as err:
        print(f"not DMCP: {err}", file=sys.stderr)
        return EXIT_NOT_DMCP


if __name__ == "__main__":
    sys.exit(main())
