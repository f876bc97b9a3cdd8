"""Command line interface: ``python -m budgeted_assignment <command> ...``.

Exit status is 0 on success, 2 when a checked guarantee fails (dominance or
feasibility), and 1 for usage or input errors.
"""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import exact, gen, harness
from .colgen import EXACT, SCALED, solve_relaxation
from .lp import LpError
from .model import InstanceError, check_feasible, dumps_instance, instance_from_dict
from .rounding import ALGORITHMS

EXIT_OK, EXIT_USAGE, EXIT_ASSERT = 0, 1, 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def load_any(path: str):
    """Core instance JSON, or a line-planning JSON (recognized by its ``graph`` key) mapped to one."""
    try:
        doc = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise UsageError(f"cannot read instance {path}: {exc}") from exc
    if "graph" in doc:
        return gen.rlpp_build(gen.RlppInstance.from_dict(doc))
    return instance_from_dict(doc)


def _out_path(args, name: str | None, default: str) -> Path:
    base = Path(args.out_dir)
    target = Path(name) if name else Path(default)
    path = target if target.is_absolute() else base / target
    path.parent.mkdir(parents=True, exist_ok=True)
    return path


def _emit(args, text: str, name: str | None, default: str | None = None) -> None:
    if name is None and default is None:
        sys.stdout.write(text)
        return
    path = _out_path(args, name, default)
    path.write_text(text)
    print(f"wrote {path}")


# --- commands --------------------------------------------------------------------

def cmd_generate(args) -> int:
    rng = np.random.default_rng(args.seed)
    if args.kind == "random":
        params = gen.RandomParams(num_bins=args.bins, num_items=args.items, dims=(1, args.dims_max),
                                  rho=(1, args.rho_max), zero_assign_costs=args.zero_assign_costs,
                                  uniform_rewards=args.uniform_rewards,
                                  budget_k=(args.k, args.k) if args.k else (2.0, 8.0))
        text = dumps_instance(gen.random_instance(params, rng))
    elif args.kind in ("mkc", "rlpp-mkc"):
        sets = []
        while len(sets) < args.sets:
            mask = rng.random(args.elements) < 0.5
            if mask.any():
                sets.append(tuple(int(i) for i in np.nonzero(mask)[0]))
        mkc = gen.MaxKCoverInstance(args.elements, tuple(sets), args.cover_k)
        if args.kind == "mkc":
            text = dumps_instance(gen.from_max_k_cover(mkc))
        else:
            text = gen.rlpp_from_max_k_cover(mkc).to_json()
    else:
        text = gen.rlpp_grid(args.rows, args.cols, args.lines, args.trips, args.capacity,
                             args.welfare, args.budget_fraction, rng).to_json()
    _emit(args, text, args.out)
    return EXIT_OK


def cmd_solve_lp(args) -> int:
    inst = load_any(args.instance)
    mode = SCALED if args.mode == "scaled" else EXACT
    sol = solve_relaxation(inst, mode, args.epsilon if mode == SCALED else None,
                           max_iters=args.max_iters, timeout_secs=args.timeout_secs)
    if not sol.converged:
        print("warning: column generation stopped before convergence", file=sys.stderr)
    _emit(args, sol.to_json(), args.out)
    return EXIT_OK


def _salt(args, alg: str) -> int:
    return 0 if args.shared_randomness else ALGORITHMS.index(alg) + 1


def cmd_round(args) -> int:
    inst = load_any(args.instance)
    stats = harness.simulate(inst, args.alg, args.epsilon, args.trials, args.seed,
                             salt=_salt(args, args.alg), workers=args.threads)
    _emit(args, harness.raw_csv(stats), args.out, f"{args.alg}_raw.csv")
    return EXIT_OK


def cmd_simulate(args) -> int:
    inst = load_any(args.instance)
    stats = harness.simulate(inst, args.alg, args.epsilon, args.trials, args.seed,
                             workers=args.threads)
    raw, best = harness.export(stats, args.out_dir, skip_first=args.skip_first)
    print(json.dumps(stats.summary(), indent=1))
    print(f"wrote {raw}\nwrote {best}")
    return EXIT_OK


def cmd_compare(args) -> int:
    inst = load_any(args.instance)
    algs = [a.strip() for a in args.algs.split(",") if a.strip()]
    for a in algs:
        if a not in ALGORITHMS:
            raise UsageError(f"unknown algorithm {a!r}")
    result = harness.compare(inst, algs, args.epsilon, args.trials, args.seed,
                             shared=args.shared_randomness, workers=args.threads,
                             raise_on_violation=False)
    for st in result.stats.values():
        harness.export(st, args.out_dir, skip_first=args.skip_first)
    report = result.report()
    _out_path(args, "comparison.txt", "comparison.txt").write_text(report)
    sys.stdout.write(report)
    return EXIT_OK if result.ok else EXIT_ASSERT


def cmd_exact(args) -> int:
    inst = load_any(args.instance)
    try:
        sol = exact.brute_force(inst)
    except InstanceError as exc:
        raise UsageError(f"refusing to brute-force this instance: {exc}") from exc
    doc = {"objective": sol.objective, "total_cost": sol.total_cost,
           "open_bins": [int(l) for l in np.nonzero(sol.y)[0]],
           "assignments": [[l, p] for l, p in sol.assigned()],
           "feasible": check_feasible(inst, sol).ok}
    _emit(args, json.dumps(doc, indent=1) + "\n", args.out)
    return EXIT_OK


# --- parser ----------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=argparse.SUPPRESS, help="master random seed")
    common.add_argument("--threads", type=int, default=argparse.SUPPRESS,
                        help="worker processes for trials")
    common.add_argument("--out-dir", default=argparse.SUPPRESS, help="directory for output files")

    p = _Parser(prog="budgeted_assignment",
                description="Budgeted assignment with interval capacities: LP, rounding, experiments.")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--out-dir", default=".")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    g = sub.add_parser("generate", parents=[common], help="write a random or reduction instance")
    g.add_argument("--kind", choices=["random", "mkc", "rlpp-mkc", "rlpp-grid"], default="random")
    g.add_argument("--bins", type=int, default=5)
    g.add_argument("--items", type=int, default=10)
    g.add_argument("--dims-max", type=int, default=4)
    g.add_argument("--rho-max", type=int, default=2)
    g.add_argument("--k", type=float, default=None, help="normalized budget B / max configuration cost")
    g.add_argument("--zero-assign-costs", action="store_true")
    g.add_argument("--uniform-rewards", action="store_true")
    g.add_argument("--elements", type=int, default=6)
    g.add_argument("--sets", type=int, default=4)
    g.add_argument("--cover-k", type=int, default=2)
    g.add_argument("--rows", type=int, default=8)
    g.add_argument("--cols", type=int, default=8)
    g.add_argument("--lines", type=int, default=20)
    g.add_argument("--trips", type=int, default=200)
    g.add_argument("--capacity", type=int, default=5)
    g.add_argument("--welfare", choices=[gen.BINARY, gen.CAR_MILES], default=gen.CAR_MILES)
    g.add_argument("--budget-fraction", type=float, default=0.25)
    g.add_argument("--out", default=None, help="output file (default: stdout)")
    g.set_defaults(func=cmd_generate)

    s = sub.add_parser("solve-lp", parents=[common], help="solve the configuration LP")
    s.add_argument("instance")
    s.add_argument("--mode", choices=["exact", "scaled"], default="exact")
    s.add_argument("--epsilon", type=float, default=0.25)
    s.add_argument("--max-iters", type=int, default=10_000)
    s.add_argument("--timeout-secs", type=float, default=None)
    s.add_argument("--out", default=None)
    s.set_defaults(func=cmd_solve_lp)

    r = sub.add_parser("round", parents=[common], help="run rounding trials, write per-trial CSV")
    r.add_argument("instance")
    r.add_argument("--alg", choices=ALGORITHMS, required=True)
    r.add_argument("--epsilon", type=float, default=0.25)
    r.add_argument("--trials", type=int, default=1)
    r.add_argument("--shared-randomness", action="store_true",
                   help="draw from the seed's common streams (replayable by other algorithms)")
    r.add_argument("--out", default=None)
    r.set_defaults(func=cmd_round)

    m = sub.add_parser("simulate", parents=[common], help="trials plus summary and best-so-far CSV")
    m.add_argument("instance")
    m.add_argument("--alg", choices=ALGORITHMS, required=True)
    m.add_argument("--epsilon", type=float, default=0.25)
    m.add_argument("--trials", type=int, default=10_000)
    m.add_argument("--skip-first", type=int, default=0)
    m.set_defaults(func=cmd_simulate)

    c = sub.add_parser("compare", parents=[common], help="several algorithms on shared randomness")
    c.add_argument("instance")
    c.add_argument("--algs", default="baseline,alg2,alg6")
    c.add_argument("--epsilon", type=float, default=0.25)
    c.add_argument("--trials", type=int, default=10_000)
    c.add_argument("--skip-first", type=int, default=0)
    c.add_argument("--shared-randomness", action=argparse.BooleanOptionalAction, default=True)
    c.set_defaults(func=cmd_compare)

    e = sub.add_parser("exact", parents=[common], help="brute-force optimum of a tiny instance")
    e.add_argument("instance")
    e.add_argument("--out", default=None)
    e.set_defaults(func=cmd_exact)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.threads < 1:
        parser.error("--threads must be >= 1")
    try:
        return args.func(args)
    except AssertionError as exc:
        print(f"assertion failed: {exc}", file=sys.stderr)
        return EXIT_ASSERT
    except (UsageError, InstanceError, LpError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
