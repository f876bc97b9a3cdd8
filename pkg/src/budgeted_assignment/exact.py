"""Brute-force oracles for tiny instances.

These exist to certify the fast code paths, so they favor obvious
correctness over speed: every configuration is enumerated explicitly.
"""
from __future__ import annotations

import numpy as np

from .colgen import EXACT, FractionalSolution, master_lp, zero_solution
from .lp import LpError, solve
from .model import (AssignmentSolution, Configuration, Instance, InstanceError,
                    check_feasible, max_config_cost, within_budget)

MAX_ITEMS_PER_BIN = 20
MAX_SEARCH = 50_000_000
MAX_COLUMNS = 10_000


def _candidates(instance: Instance, l: int) -> list[int]:
    return [p for p in range(instance.num_items) if instance.compatible[l, p]]


def enumerate_configs(instance: Instance, l: int) -> list[Configuration]:
    """All nonempty capacity-feasible item sets of bin ``l``.

    Order follows the bitmask over the bin's compatible items (bit ``j`` is
    the ``j``-th compatible item), so ``{a}, {b}, {a, b}`` for two items.
    """
    cand = _candidates(instance, l)
    if len(cand) > MAX_ITEMS_PER_BIN:
        raise InstanceError(
            f"bin {l} has {len(cand)} compatible items; enumeration is limited to {MAX_ITEMS_PER_BIN}")
    cap = instance.capacities[l]
    found: list[tuple[int, tuple[int, ...]]] = []
    load = np.zeros(len(cap), dtype=np.int64)

    def extend(j: int, mask: int, chosen: list[int]) -> None:
        for i in range(j, len(cand)):
            p = cand[i]
            a, b = instance.lo[l, p], instance.hi[l, p]
            load[a:b] += 1
            if np.all(load[a:b] <= cap[a:b]):
                chosen.append(p)
                found.append((mask | (1 << i), tuple(chosen)))
                extend(i + 1, mask | (1 << i), chosen)
                chosen.pop()
            load[a:b] -= 1

    extend(0, 0, [])
    found.sort()
    return [Configuration.make(instance, l, items) for _, items in found]


def search_size(instance: Instance) -> int:
    size = 1
    for l in range(instance.num_bins):
        size *= len(enumerate_configs(instance, l)) + 1
    return size


def brute_force(instance: Instance) -> AssignmentSolution:
    """Exact optimum by enumerating one configuration (or nothing) per bin."""
    L, P = instance.num_bins, instance.num_items
    if L == 0:
        return AssignmentSolution.empty(instance)
    per_bin = [enumerate_configs(instance, l) for l in range(L)]
    size = int(np.prod([len(c) + 1 for c in per_bin], dtype=object))
    if size > MAX_SEARCH:
        raise InstanceError(f"instance too large for brute force ({size} combinations > {MAX_SEARCH})")

    # row 0 of every table is the empty choice (bin closed)
    members, costs, rewards = [], [], []
    for l, cfgs in enumerate(per_bin):
        m = np.zeros((len(cfgs) + 1, P), dtype=np.int64)
        c = np.zeros(len(cfgs) + 1)
        v = np.zeros(len(cfgs) + 1)
        for i, cfg in enumerate(cfgs, start=1):
            m[i, list(cfg.items)] = 1
            c[i] = cfg.cost
            v[i] = instance.config_reward(l, cfg.items)
        members.append(m)
        costs.append(c)
        rewards.append(v)
    suffix = np.concatenate([np.cumsum([r.max() for r in rewards][::-1])[::-1], [0.0]])
    rho = instance.rho
    B = instance.budget

    best_value = -1.0
    best_choice: list[int] = []
    choice = [0] * L

    def visit(l: int, counts: np.ndarray, cost: float, value: float) -> None:
        nonlocal best_value, best_choice
        if value + suffix[l] <= best_value:
            return
        if l == L - 1:
            ok = np.all(members[l] + counts <= rho, axis=1)
            ok &= np.array([within_budget(cost + c, B) for c in costs[l]])
            if not ok.any():
                return
            vals = np.where(ok, rewards[l], -np.inf)
            i = int(np.argmax(vals))
            if value + vals[i] > best_value:
                best_value = value + vals[i]
                choice[l] = i
                best_choice = list(choice)
            return
        for i in range(len(costs[l])):
            nc = counts + members[l][i]
            if np.any(nc > rho) or not within_budget(cost + costs[l][i], B):
                continue
            choice[l] = i
            visit(l + 1, nc, cost + costs[l][i], value + rewards[l][i])
        choice[l] = 0

    visit(0, np.zeros(P, dtype=np.int64), 0.0, 0.0)
    x = np.zeros((L, P), dtype=bool)
    for l, i in enumerate(best_choice):
        if i:
            x[l, list(per_bin[l][i - 1].items)] = True
    sol = AssignmentSolution.from_x(instance, x)
    sol.certificate = check_feasible(instance, sol)
    if not sol.certificate.ok:
        raise AssertionError("brute force produced an infeasible solution")
    return sol


def full_lp(instance: Instance) -> FractionalSolution:
    """Configuration LP over every enumerated column, in original cost units."""
    columns = [c for l in range(instance.num_bins) for c in enumerate_configs(instance, l)]
    if len(columns) > MAX_COLUMNS:
        raise InstanceError(f"{len(columns)} columns exceed the limit of {MAX_COLUMNS}")
    cmax = max_config_cost(instance)
    k = instance.budget / cmax if cmax else 0.0
    if not columns:
        return zero_solution(instance, EXACT, None, k)
    res = solve(master_lp(instance, columns, instance.budget, 1.0))
    if not res.optimal:
        raise LpError(f"full LP ended {res.status.value}")
    x = np.clip(res.x, 0.0, None)
    used = float(np.array([c.cost for c in columns]) @ x)
    return FractionalSolution(columns, x, float(res.objective), used, instance.budget, k, 1.0,
                              instance.num_bins, EXACT, None, True, 0, [float(res.objective)])
