"""Monte-Carlo driver: repeated rounding trials, statistics, CSV export.

Trial ``t`` of a run with master seed ``s`` always draws from the same
substreams (see :class:`~budgeted_assignment.rounding.TrialStreams`), so a
run is fully determined by (instance, algorithm, eps, trials, seed) and does
not depend on how trials are split into batches or across worker processes.
"""
from __future__ import annotations

import csv
import io
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from itertools import combinations
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .colgen import EXACT, FractionalSolution, solve_relaxation
from .model import Instance, check_feasible_batch
from .rounding import (ALGORITHMS, DISCARDED, PATH_NAMES, RoundingPlan, lp_mode,
                       trial_streams)

CHUNK = 1000
TIE_TOL = 1e-9
# pairs (a, b) where a must never lose to b when both replay the same randomness
DOMINANCE_PAIRS = (("alg6", "baseline"), ("alg1", "alg3"))


class FeasibilityError(AssertionError):
    pass


class DominanceError(AssertionError):
    pass


@dataclass
class TrialStats:
    algorithm: str
    epsilon: float | None
    seed: int
    lp_value: float
    objective: np.ndarray
    feasible: np.ndarray
    path: list[str]
    salt: int = 0

    @property
    def trials(self) -> int:
        return len(self.path)

    @property
    def kept(self) -> np.ndarray:
        return np.array([p != PATH_NAMES[DISCARDED] for p in self.path], dtype=bool)

    @property
    def mean(self) -> float:
        k = self.kept
        return float(self.objective[k].mean()) if k.any() else math.nan

    @property
    def standard_error(self) -> float:
        vals = self.objective[self.kept]
        if vals.size < 2:
            return math.nan
        return float(vals.std(ddof=1) / math.sqrt(vals.size))

    @property
    def discard_rate(self) -> float:
        return float(1.0 - self.kept.mean()) if self.trials else 0.0

    def best_so_far(self, skip_first: int = 0) -> np.ndarray:
        """Running maximum of the objective; discarded trials count as 0 and the curve starts at 0."""
        vals = np.where(self.kept, self.objective, 0.0)[skip_first:]
        return np.maximum.accumulate(np.maximum(vals, 0.0)) if vals.size else vals

    def summary(self) -> dict:
        return {"algorithm": self.algorithm, "epsilon": self.epsilon, "seed": self.seed,
                "trials": self.trials, "lp_value": self.lp_value, "mean": self.mean,
                "standard_error": self.standard_error, "discard_rate": self.discard_rate,
                "best": float(self.best_so_far()[-1]) if self.trials else 0.0}


def _run_chunk(plan: RoundingPlan, seed: int, salt: int, start: int, stop: int):
    batch = plan.run(trial_streams(seed, range(start, stop), salt))
    kept = batch.path != DISCARDED
    feasible = np.zeros(len(batch), dtype=bool)
    if kept.any():
        feasible[kept] = check_feasible_batch(plan.instance, batch.x[kept], batch.y[kept])
    return batch.objective, batch.path, feasible


def run_plan(plan: RoundingPlan, trials: int, seed: int, salt: int = 0, workers: int = 1,
             chunk: int = CHUNK) -> tuple[np.ndarray, list[str], np.ndarray]:
    """Run ``trials`` trials of a prepared plan; returns objectives, path names and feasibility flags."""
    if plan.algorithm in ("alg1", "alg3", "alg4"):
        plan.type0()  # compute thresholds once, before any fan-out
    if plan.algorithm == "alg3":
        plan.typep()
    bounds = [(s, min(s + chunk, trials)) for s in range(0, trials, chunk)]
    if workers > 1 and len(bounds) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(_run_chunk, *zip(*[(plan, seed, salt, a, b) for a, b in bounds])))
    else:
        parts = [_run_chunk(plan, seed, salt, a, b) for a, b in bounds]
    if not parts:
        return np.zeros(0), [], np.zeros(0, dtype=bool)
    objective = np.concatenate([p[0] for p in parts])
    codes = np.concatenate([p[1] for p in parts])
    feasible = np.concatenate([p[2] for p in parts])
    bad = (codes != DISCARDED) & ~feasible
    if bad.any():
        raise FeasibilityError(
            f"{plan.algorithm}: {int(bad.sum())} of {trials} trials produced infeasible solutions")
    return objective, [PATH_NAMES[c] for c in codes], feasible


def solve_for(instance: Instance, algorithm: str, epsilon: float | None,
              cache: dict | None = None) -> FractionalSolution:
    mode = lp_mode(algorithm)
    key = (mode, None if mode == EXACT else epsilon)
    if cache is not None and key in cache:
        return cache[key]
    sol = solve_relaxation(instance, mode, None if mode == EXACT else epsilon)
    if cache is not None:
        cache[key] = sol
    return sol


def simulate(instance: Instance, algorithm: str, epsilon: float | None, trials: int, seed: int, *,
             solution: FractionalSolution | None = None, salt: int = 0, workers: int = 1,
             lp_cache: dict | None = None) -> TrialStats:
    """Solve the needed LP once, then run ``trials`` independent rounding trials."""
    if trials < 1:
        raise ValueError("trials must be >= 1")
    solution = solution or solve_for(instance, algorithm, epsilon, lp_cache)
    plan = RoundingPlan(instance, solution, algorithm, epsilon)
    objective, path, feasible = run_plan(plan, trials, seed, salt, workers)
    return TrialStats(algorithm, epsilon, seed, solution.lp_value, objective, feasible, path, salt)


@dataclass
class PairCount:
    first: str
    second: str
    greater: int
    equal: int
    less: int

    @property
    def at_least(self) -> int:
        return self.greater + self.equal


@dataclass
class ComparisonResult:
    stats: dict[str, TrialStats]
    shared: bool
    pairs: list[PairCount] = field(default_factory=list)
    violations: list[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations

    def report(self) -> str:
        lines = [f"shared randomness: {'yes' if self.shared else 'no'}"]
        for name, st in self.stats.items():
            lines.append(f"{name}: mean {st.mean:.6g} (se {st.standard_error:.3g}), "
                         f"discard rate {st.discard_rate:.4f}, best {st.best_so_far()[-1]:.6g}")
        if self.shared:
            for pc in self.pairs:
                lines.append(f"{pc.first} vs {pc.second}: > {pc.greater}, = {pc.equal}, < {pc.less}")
        lines.extend(f"VIOLATION: {v}" for v in self.violations)
        return "\n".join(lines) + "\n"


def compare(instance: Instance, algorithms: Sequence[str], epsilon: float | None, trials: int,
            seed: int, shared: bool = True, workers: int = 1, raise_on_violation: bool = True,
            lp_cache: dict | None = None) -> ComparisonResult:
    """Run several algorithms; with ``shared`` every algorithm replays the same per-trial randomness."""
    cache = {} if lp_cache is None else lp_cache
    stats = {}
    for alg in algorithms:
        salt = 0 if shared else ALGORITHMS.index(alg) + 1
        stats[alg] = simulate(instance, alg, epsilon, trials, seed, salt=salt, workers=workers,
                              lp_cache=cache)
    result = ComparisonResult(stats, shared)
    if not shared:
        return result
    for a, b in combinations(algorithms, 2):
        da = stats[a].objective - stats[b].objective
        result.pairs.append(PairCount(a, b, int(np.sum(da > TIE_TOL)),
                                      int(np.sum(np.abs(da) <= TIE_TOL)), int(np.sum(da < -TIE_TOL))))
    for a, b in DOMINANCE_PAIRS:
        if a in stats and b in stats:
            lose = np.nonzero(stats[a].objective < stats[b].objective - TIE_TOL)[0]
            if lose.size:
                result.violations.append(
                    f"{a} < {b} on {lose.size} of {trials} shared trials (first: trial {int(lose[0])})")
    if result.violations and raise_on_violation:
        raise DominanceError("; ".join(result.violations))
    return result


# --- CSV ------------------------------------------------------------------------

RAW_HEADER = ("trial", "objective", "feasible", "path")
BEST_HEADER = ("trial", "best_objective")


def raw_csv(stats: TrialStats) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(RAW_HEADER)
    for t, (obj, ok, path) in enumerate(zip(stats.objective, stats.feasible, stats.path)):
        w.writerow((t, repr(float(obj)), "true" if ok else "false", path))
    return buf.getvalue()


def best_csv(stats: TrialStats, skip_first: int = 0) -> str:
    """Running best per trial; ``skip_first`` drops the first trials (a plotting convention)."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(BEST_HEADER)
    for t, best in enumerate(stats.best_so_far(skip_first), start=skip_first):
        w.writerow((t, repr(float(best))))
    return buf.getvalue()


def export(stats: TrialStats, out_dir: str | Path, prefix: str | None = None,
           skip_first: int = 0) -> tuple[Path, Path]:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    name = prefix or stats.algorithm
    raw, best = out / f"{name}_raw.csv", out / f"{name}_best.csv"
    raw.write_text(raw_csv(stats))
    best.write_text(best_csv(stats, skip_first))
    return raw, best


def read_raw_csv(path: str | Path, algorithm: str = "", epsilon: float | None = None,
                 seed: int = 0, lp_value: float = math.nan) -> TrialStats:
    rows = _read_rows(Path(path).read_text(), RAW_HEADER)
    return TrialStats(algorithm, epsilon, seed, lp_value,
                      np.array([float(r[1]) for r in rows]),
                      np.array([r[2] == "true" for r in rows], dtype=bool),
                      [r[3] for r in rows])


def _read_rows(text: str, header: Iterable[str]) -> list[list[str]]:
    reader = csv.reader(io.StringIO(text))
    first = next(reader, None)
    if first is None or tuple(first) != tuple(header):
        raise ValueError(f"expected CSV header {','.join(header)}")
    return [row for row in reader if row]
