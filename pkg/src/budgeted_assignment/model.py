"""Problem data model: instances, configurations, assignments, feasibility.

An instance has ``L`` bins and ``P`` items.  Bin ``l`` has a capacity vector
``f_l`` of length ``n_l`` and an opening cost ``c_l``.  Item ``p`` placed in
bin ``l`` occupies the half-open run of dimensions ``[lo, hi)`` (one unit per
dimension), earns ``v_lp`` and costs ``c_lp``.  Pairs with ``lo == -1`` are
incompatible.  Each item may be placed in at most ``rho_p`` bins and the total
cost of open bins plus assignments may not exceed the budget ``B``.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

INCOMPATIBLE = -1

# Relative slack on the budget comparison.  Costs are sums of floats.
BUDGET_RTOL = 1e-9


class InstanceError(ValueError):
    """Raised when an operation cannot proceed on the given instance."""


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class Instance:
    capacities: tuple[np.ndarray, ...]
    bin_costs: np.ndarray
    lo: np.ndarray
    hi: np.ndarray
    rewards: np.ndarray
    assign_costs: np.ndarray
    rho: np.ndarray
    budget: float

    def __post_init__(self):
        caps = tuple(_frozen(np.asarray(f, dtype=np.int64).reshape(-1)) for f in self.capacities)
        object.__setattr__(self, "capacities", caps)
        L = len(caps)
        for name, dtype in (("lo", np.int64), ("hi", np.int64),
                            ("rewards", np.float64), ("assign_costs", np.float64)):
            arr = np.asarray(getattr(self, name), dtype=dtype)
            if arr.ndim != 2 or arr.shape[0] != L:
                raise InstanceError(f"{name} must have shape (L, P) with L={L}")
            object.__setattr__(self, name, _frozen(arr))
        P = self.lo.shape[1]
        for name in ("hi", "rewards", "assign_costs"):
            if getattr(self, name).shape != (L, P):
                raise InstanceError(f"{name} must have shape ({L}, {P})")
        bc = np.asarray(self.bin_costs, dtype=np.float64).reshape(-1)
        if bc.shape != (L,):
            raise InstanceError(f"bin_costs must have length {L}")
        object.__setattr__(self, "bin_costs", _frozen(bc))
        rho = np.asarray(self.rho, dtype=np.int64).reshape(-1)
        if rho.shape != (P,):
            raise InstanceError(f"rho must have length {P}")
        object.__setattr__(self, "rho", _frozen(rho))
        object.__setattr__(self, "budget", float(self.budget))

    @classmethod
    def from_links(cls, capacities: Sequence[Sequence[int]], bin_costs: Sequence[float],
                   rho: Sequence[int], links: Iterable[tuple], budget: float) -> "Instance":
        """Build from sparse ``(l, p, lo, hi, v, c)`` tuples; absent pairs are incompatible."""
        L, P = len(capacities), len(rho)
        lo = np.full((L, P), INCOMPATIBLE, dtype=np.int64)
        hi = np.full((L, P), INCOMPATIBLE, dtype=np.int64)
        v = np.zeros((L, P))
        c = np.zeros((L, P))
        for l, p, a, b, val, cost in links:
            lo[l, p], hi[l, p], v[l, p], c[l, p] = a, b, val, cost
        return cls(tuple(capacities), bin_costs, lo, hi, v, c, rho, budget)

    @property
    def num_bins(self) -> int:
        return len(self.capacities)

    @property
    def num_items(self) -> int:
        return self.lo.shape[1]

    @property
    def dims(self) -> np.ndarray:
        return np.array([len(f) for f in self.capacities], dtype=np.int64)

    @cached_property
    def compatible(self) -> np.ndarray:
        return _frozen(self.lo != INCOMPATIBLE)

    @property
    def rho_min(self) -> int:
        return int(self.rho.min()) if self.num_items else 0

    def has_assignment_costs(self) -> bool:
        return bool(np.any(self.assign_costs[self.compatible] != 0))

    def has_uniform_rewards(self) -> bool:
        """True when every item earns the same reward in every compatible bin."""
        for p in range(self.num_items):
            vals = self.rewards[self.compatible[:, p], p]
            if vals.size and np.any(vals != vals[0]):
                return False
        return True

    def config_cost(self, l: int, items: Sequence[int]) -> float:
        return float(self.bin_costs[l] + sum(self.assign_costs[l, p] for p in items))

    def config_reward(self, l: int, items: Sequence[int]) -> float:
        return float(sum(self.rewards[l, p] for p in items))

    def fits(self, l: int, items: Sequence[int]) -> bool:
        """Capacity check for a set of items in bin ``l``."""
        items = list(items)
        if any(self.lo[l, p] == INCOMPATIBLE for p in items):
            return False
        n = len(self.capacities[l])
        diff = np.zeros(n + 1, dtype=np.int64)
        for p in items:
            diff[self.lo[l, p]] += 1
            diff[self.hi[l, p]] -= 1
        return bool(np.all(np.cumsum(diff[:n]) <= self.capacities[l]))

    @property
    def dim_offsets(self) -> np.ndarray:
        return np.concatenate([[0], np.cumsum(self.dims)]).astype(np.int64)

    @property
    def flat_capacities(self) -> np.ndarray:
        if not self.capacities:
            return np.zeros(0, dtype=np.int64)
        return np.concatenate(self.capacities)


@dataclass(frozen=True)
class Configuration:
    bin: int
    items: tuple[int, ...]
    cost: float

    @classmethod
    def make(cls, instance: Instance, l: int, items: Iterable[int]) -> "Configuration":
        s = tuple(sorted(int(p) for p in items))
        return cls(int(l), s, instance.config_cost(l, s))


@dataclass(frozen=True)
class FeasibilityReport:
    budget: bool
    capacity: bool
    rho: bool
    linkage: bool

    @property
    def ok(self) -> bool:
        return self.budget and self.capacity and self.rho and self.linkage

    def __bool__(self) -> bool:
        return self.ok


@dataclass(eq=False)
class AssignmentSolution:
    y: np.ndarray
    x: np.ndarray
    objective: float = 0.0
    total_cost: float = 0.0
    certificate: FeasibilityReport | None = field(default=None)

    @classmethod
    def from_x(cls, instance: Instance, x: np.ndarray, y: np.ndarray | None = None) -> "AssignmentSolution":
        """Build from an assignment matrix; bins are open iff they hold an item unless ``y`` is given."""
        x = np.asarray(x, dtype=bool)
        y = x.any(axis=1) if y is None else np.asarray(y, dtype=bool)
        sol = cls(y, x)
        sol.objective = objective(instance, sol)
        sol.total_cost = total_cost(instance, sol)
        return sol

    @classmethod
    def empty(cls, instance: Instance) -> "AssignmentSolution":
        return cls.from_x(instance, np.zeros((instance.num_bins, instance.num_items), dtype=bool))

    def assigned(self) -> list[tuple[int, int]]:
        return [(int(l), int(p)) for l, p in zip(*np.nonzero(self.x))]


@dataclass(frozen=True)
class ScaledInstance:
    """Budget normalization: costs divided by the largest configuration cost.

    After scaling every configuration costs at most 1 and the budget is ``k``.
    """
    base: Instance
    k: float
    cost_scale: float

    def scaled_cost(self, cost: float) -> float:
        return cost / self.cost_scale

    def unscaled_cost(self, scaled: float) -> float:
        return scaled * self.cost_scale

    @property
    def scaled_bin_costs(self) -> np.ndarray:
        return self.base.bin_costs / self.cost_scale

    @property
    def scaled_assign_costs(self) -> np.ndarray:
        return self.base.assign_costs / self.cost_scale


def validate(instance: Instance) -> list[str]:
    out: list[str] = []
    L, P = instance.num_bins, instance.num_items
    if L < 2:
        out.append(f"L >= 2 required (L={L})")
    for l, f in enumerate(instance.capacities):
        if len(f) < 1:
            out.append(f"bins[{l}].n must be >= 1")
        if np.any(f < 0):
            out.append(f"bins[{l}].f has negative capacity")
        c = instance.bin_costs[l]
        if not np.isfinite(c) or c < 0:
            out.append(f"bins[{l}].c must be finite and nonnegative")
    for p, r in enumerate(instance.rho):
        if r < 1:
            out.append(f"items[{p}].rho must be a positive integer")
    n = instance.dims
    for l in range(L):
        for p in range(P):
            a, b = instance.lo[l, p], instance.hi[l, p]
            v, c = instance.rewards[l, p], instance.assign_costs[l, p]
            if a == INCOMPATIBLE:
                if b != INCOMPATIBLE or v != 0 or c != 0:
                    out.append(f"links[{l},{p}]: incompatible pair must carry v = c = 0")
                continue
            if not (0 <= a < b <= n[l]):
                out.append(f"links[{l},{p}]: interval [{a}, {b}) outside [0, {n[l]})")
            if not np.isfinite(v) or v < 0:
                out.append(f"links[{l},{p}]: reward must be finite and nonnegative")
            if not np.isfinite(c) or c < 0:
                out.append(f"links[{l},{p}]: cost must be finite and nonnegative")
    if not np.isfinite(instance.budget) or instance.budget < 0:
        out.append("B must be finite and nonnegative")
    return out


def _check_dims(instance: Instance, sol: AssignmentSolution) -> None:
    L, P = instance.num_bins, instance.num_items
    if sol.x.shape != (L, P) or sol.y.shape != (L,):
        raise InstanceError(
            f"solution shape x{sol.x.shape}, y{sol.y.shape} does not match instance ({L}, {P})")


def objective(instance: Instance, sol: AssignmentSolution) -> float:
    _check_dims(instance, sol)
    return float(instance.rewards[sol.x].sum())


def total_cost(instance: Instance, sol: AssignmentSolution) -> float:
    _check_dims(instance, sol)
    return float(instance.bin_costs[sol.y].sum() + instance.assign_costs[sol.x].sum())


def within_budget(cost: float, budget: float) -> bool:
    return cost <= budget + BUDGET_RTOL * max(1.0, abs(budget))


def bin_loads(instance: Instance, x: np.ndarray) -> np.ndarray:
    """Per-dimension load of every bin, flattened in bin order (difference array)."""
    ls, ps = np.nonzero(x)
    off = instance.dim_offsets
    total = int(off[-1])
    if ls.size == 0:
        return np.zeros(total, dtype=np.int64)
    starts = off[ls] + instance.lo[ls, ps]
    ends = off[ls] + instance.hi[ls, ps]
    diff = np.bincount(starts, minlength=total + 1) - np.bincount(ends, minlength=total + 1)
    return np.cumsum(diff[:total])


def check_feasible(instance: Instance, sol: AssignmentSolution) -> FeasibilityReport:
    _check_dims(instance, sol)
    x, y = np.asarray(sol.x, dtype=bool), np.asarray(sol.y, dtype=bool)
    linkage = bool(not np.any(x & ~y[:, None]))
    compatible = bool(not np.any(x & ~instance.compatible))
    if compatible:
        capacity = bool(np.all(bin_loads(instance, x) <= instance.flat_capacities))
    else:
        capacity = False
    rho = bool(np.all(x.sum(axis=0) <= instance.rho))
    budget = within_budget(total_cost(instance, sol), instance.budget)
    return FeasibilityReport(budget=budget, capacity=capacity, rho=rho, linkage=linkage)


def max_config_cost(instance: Instance) -> float | None:
    """Largest ``c_l + sum c_lp`` over nonempty feasible configurations, or None if none exist."""
    from .lp import solve  # circular at import time

    best = None
    for l in range(instance.num_bins):
        cand = [p for p in range(instance.num_items)
                if instance.compatible[l, p] and instance.fits(l, [p])]
        if not cand:
            continue
        priced = [p for p in cand if instance.assign_costs[l, p] > 0]
        extra = 0.0
        if priced:
            lp = interval_packing_lp(instance, l, priced, instance.assign_costs[l, priced])
            res = solve(lp, integral=True)
            extra = res.objective
        value = float(instance.bin_costs[l] + extra)
        best = value if best is None else max(best, value)
    return best


def interval_packing_lp(instance: Instance, l: int, items: Sequence[int], weights):
    """Bounded LP ``max w.x`` s.t. per-dimension loads of bin ``l`` within capacity, ``0 <= x <= 1``."""
    from .lp import LinearProgram

    items = list(items)
    n = len(instance.capacities[l])
    A = np.zeros((n, len(items)))
    for j, p in enumerate(items):
        A[instance.lo[l, p]:instance.hi[l, p], j] = 1.0
    return LinearProgram(np.asarray(weights, dtype=float), A,
                         instance.capacities[l].astype(float), np.ones(len(items)))


def scale_budget(instance: Instance) -> ScaledInstance:
    cmax = max_config_cost(instance)
    if cmax is None:
        raise InstanceError("trivial instance: no bin admits a nonempty feasible configuration")
    if cmax <= 0:
        raise InstanceError("k undefined: every configuration costs 0")
    return ScaledInstance(instance, instance.budget / cmax, cmax)


# --- JSON file format -------------------------------------------------------

def instance_to_dict(instance: Instance) -> dict:
    links = []
    for l in range(instance.num_bins):
        for p in range(instance.num_items):
            if instance.compatible[l, p]:
                links.append({"l": l, "p": p,
                              "lo": int(instance.lo[l, p]), "hi": int(instance.hi[l, p]),
                              "v": float(instance.rewards[l, p]),
                              "c": float(instance.assign_costs[l, p])})
    return {
        "L": instance.num_bins,
        "P": instance.num_items,
        "bins": [{"n": len(f), "f": [int(x) for x in f], "c": float(c)}
                 for f, c in zip(instance.capacities, instance.bin_costs)],
        "items": [{"rho": int(r)} for r in instance.rho],
        "links": links,
        "B": float(instance.budget),
    }


def instance_from_dict(doc: dict) -> Instance:
    bins = doc["bins"]
    if len(bins) != doc["L"] or len(doc["items"]) != doc["P"]:
        raise InstanceError("L/P do not match the bins/items arrays")
    for i, b in enumerate(bins):
        if len(b["f"]) != b["n"]:
            raise InstanceError(f"bins[{i}]: n does not match len(f)")
    links = [(d["l"], d["p"], d["lo"], d["hi"], d["v"], d["c"]) for d in doc["links"]]
    return Instance.from_links([b["f"] for b in bins], [b["c"] for b in bins],
                               [it["rho"] for it in doc["items"]], links, doc["B"])


def dumps_instance(instance: Instance) -> str:
    return json.dumps(instance_to_dict(instance), indent=1) + "\n"


def save_instance(instance: Instance, path: str | Path) -> None:
    Path(path).write_text(dumps_instance(instance))


def load_instance(path: str | Path) -> Instance:
    return instance_from_dict(json.loads(Path(path).read_text()))


def check_feasible_batch(instance: Instance, x: np.ndarray, y: np.ndarray) -> np.ndarray:
    """:func:`check_feasible` over a batch: ``x`` is ``(T, L, P)``, ``y`` is ``(T, L)``; returns ``(T,)`` bools."""
    from scipy.sparse import csr_matrix

    x = np.asarray(x, dtype=bool)
    y = np.asarray(y, dtype=bool)
    T = x.shape[0]
    L, P = instance.num_bins, instance.num_items
    if x.shape[1:] != (L, P) or y.shape != (T, L):
        raise InstanceError(f"batch shapes x{x.shape}, y{y.shape} do not match instance ({L}, {P})")
    linkage = ~np.any(x & ~y[:, :, None], axis=(1, 2))
    compatible = ~np.any(x & ~instance.compatible, axis=(1, 2))
    rho = np.all(x.sum(axis=1) <= instance.rho, axis=1)
    cost = y @ instance.bin_costs + np.einsum("tlp,lp->t", x, instance.assign_costs)
    budget = cost <= instance.budget + BUDGET_RTOL * max(1.0, abs(instance.budget))
    # pair (l, p) -> the dimensions it occupies, flattened over bins
    ls, ps = np.nonzero(instance.compatible)
    off = instance.dim_offsets
    rows, cols = [], []
    for l, p in zip(ls, ps):
        dims = np.arange(off[l] + instance.lo[l, p], off[l] + instance.hi[l, p])
        rows.append(np.full(dims.size, l * P + p))
        cols.append(dims)
    total = int(off[-1])
    if rows:
        r, c = np.concatenate(rows), np.concatenate(cols)
        incidence = csr_matrix((np.ones(r.size), (r, c)), shape=(L * P, total))
        loads = (incidence.T @ x.reshape(T, L * P).T.astype(float)).T
        capacity = np.all(loads <= instance.flat_capacities + 0.5, axis=1)
    else:
        capacity = np.ones(T, dtype=bool)
    return linkage & compatible & capacity & rho & budget
