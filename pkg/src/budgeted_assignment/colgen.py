"""Configuration LP by column generation, and the cost round-up grid.

Master LP over columns ``X_lS`` (one per bin/configuration pair)::

    max  sum v(S) X_lS
    s.t. sum_S X_lS <= 1                 for each bin l        (dual q_l)
         sum_{l, S containing p} X_lS <= rho_p   for each item  (dual lambda_p)
         sum c_lS X_lS <= budget side                          (dual alpha)

with costs in scaled units (largest configuration costs exactly 1).  The
budget side is ``k`` in exact mode and ``k (1 - eps)`` in scaled mode.
Pricing a bin is an interval-packing LP whose constraint matrix has the
consecutive-ones property, so its vertex optima are 0/1.
"""
from __future__ import annotations

import json
import time
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .lp import BoundedSimplex, LinearProgram, LpError, solve
from .model import (Configuration, Instance, InstanceError, ScaledInstance,
                    interval_packing_lp, scale_budget)

EXACT = "exact"
SCALED = "scaled"
PRICE_TOL = 1e-7
# weight of the stability center when smoothing duals for pricing
SMOOTHING = 0.8
LEMMA_TOL = 1e-9


@dataclass(frozen=True)
class DualPrices:
    q: np.ndarray
    lam: np.ndarray
    alpha: float

    @classmethod
    def zeros(cls, instance: Instance) -> "DualPrices":
        return cls(np.zeros(instance.num_bins), np.zeros(instance.num_items), 0.0)


@dataclass
class FractionalSolution:
    columns: list[Configuration]
    values: np.ndarray
    lp_value: float
    budget_used: float
    budget_side: float
    k: float
    cost_scale: float
    num_bins: int
    mode: str = EXACT
    epsilon: float | None = None
    converged: bool = True
    iterations: int = 0
    history: list[float] = field(default_factory=list)
    duals: DualPrices | None = None

    @property
    def scaled_costs(self) -> np.ndarray:
        return np.array([c.cost for c in self.columns]) / self.cost_scale

    def bin_totals(self) -> np.ndarray:
        out = np.zeros(self.num_bins)
        for col, x in zip(self.columns, self.values):
            out[col.bin] += x
        return out

    def item_totals(self, num_items: int) -> np.ndarray:
        out = np.zeros(num_items)
        for col, x in zip(self.columns, self.values):
            for p in col.items:
                out[p] += x
        return out

    def support(self, tol: float = 1e-12) -> list[tuple[Configuration, float]]:
        return [(c, float(x)) for c, x in zip(self.columns, self.values) if x > tol]

    def to_dict(self) -> dict:
        return {
            "mode": self.mode,
            "epsilon": self.epsilon,
            "k": self.k,
            "cost_scale": self.cost_scale,
            "lp_value": self.lp_value,
            "budget_used": self.budget_used,
            "budget_side": self.budget_side,
            "converged": self.converged,
            "iterations": self.iterations,
            "columns": [{"bin": c.bin, "items": list(c.items), "cost": c.cost, "value": float(x)}
                        for c, x in zip(self.columns, self.values)],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=1) + "\n"


def zero_solution(instance: Instance, mode: str = EXACT, epsilon: float | None = None,
                  k: float = 0.0, cost_scale: float = 1.0) -> FractionalSolution:
    return FractionalSolution([], np.zeros(0), 0.0, 0.0, 0.0, k, cost_scale,
                              instance.num_bins, mode, epsilon, True, 0, [0.0])


def price_bin(instance: Instance, l: int, duals: DualPrices,
              cost_scale: float = 1.0) -> tuple[Configuration | None, float]:
    """Most violated dual constraint for bin ``l``.

    Returns the best configuration and its reduced value
    ``sum_S (v - lambda - alpha c_lp) - (q_l + alpha c_l)``; the configuration
    is None unless that value exceeds ``PRICE_TOL``.
    """
    if np.any(duals.q < 0) or np.any(duals.lam < 0) or duals.alpha < 0:
        raise ValueError("dual prices must be nonnegative")
    alpha = duals.alpha / cost_scale
    threshold = float(duals.q[l] + alpha * instance.bin_costs[l])
    reduced = instance.rewards[l] - duals.lam - alpha * instance.assign_costs[l]
    cand = np.nonzero(instance.compatible[l] & (reduced > 0))[0].tolist()
    if not cand:
        return None, -threshold
    res = solve(interval_packing_lp(instance, l, cand, reduced[cand]), integral=True)
    if not res.optimal:
        raise LpError(f"pricing LP for bin {l} ended {res.status.value}")
    if np.any((res.x != 0) & (res.x != 1)):
        raise LpError(f"pricing LP for bin {l} returned a fractional vertex")
    items = [p for p, xv in zip(cand, res.x) if xv == 1]
    value = float(sum(reduced[p] for p in items)) - threshold
    if not items or value <= PRICE_TOL:
        return None, value
    return Configuration.make(instance, l, items), value


def separation(instance: Instance, duals: DualPrices, cost_scale: float = 1.0):
    """First bin (lowest index) with a violated dual constraint, as ``(config, value)``, or None."""
    for l in range(instance.num_bins):
        col, val = price_bin(instance, l, duals, cost_scale)
        if col is not None:
            return col, val
    return None


def _greedy_singletons(instance: Instance) -> list[Configuration]:
    out = []
    for l in range(instance.num_bins):
        best = None
        for p in range(instance.num_items):
            if instance.compatible[l, p] and instance.fits(l, [p]):
                if best is None or instance.rewards[l, p] > instance.rewards[l, best]:
                    best = p
        if best is not None:
            out.append(Configuration.make(instance, l, [best]))
    return out


def _lagrangian_bound(rho, side, duals: DualPrices, best: np.ndarray) -> float:
    """Upper bound on the LP from item and budget prices: bins keep their at-most-one-column rows."""
    return float(rho @ duals.lam + side * duals.alpha + np.maximum(best, 0.0).sum())


def _price_round(instance, duals, center, center_bound, rho, side, scale, pool):
    """Price every bin at smoothed duals; fall back to the master duals if that finds nothing.

    Smoothing mixes the master duals with the stability center (the prices
    with the best Lagrangian bound so far), which damps the dual oscillation
    that makes plain column generation tail off.  A column is only kept if
    it is violated for the master duals, so termination is unchanged: stop
    when pricing at the master duals finds nothing.
    """
    L = instance.num_bins
    trials = [duals] if center is None else [_mix(center, duals), duals]
    for sep in trials:
        best = np.empty(L)
        new = []
        for l in range(L):
            col, value = price_bin(instance, l, sep, scale)
            best[l] = value + sep.q[l]
            if col is None or (col.bin, col.items) in pool:
                continue
            reduced = (instance.config_reward(l, col.items) - duals.lam[list(col.items)].sum()
                       - duals.alpha * col.cost / scale - duals.q[l])
            if reduced > PRICE_TOL:
                new.append(col)
        bound = _lagrangian_bound(rho, side, sep, best)
        if bound < center_bound:
            center, center_bound = sep, bound
        if new:
            break
    return new, center, center_bound


def _mix(center: DualPrices, duals: DualPrices) -> DualPrices:
    w = SMOOTHING
    return DualPrices(w * center.q + (1 - w) * duals.q, w * center.lam + (1 - w) * duals.lam,
                      w * center.alpha + (1 - w) * duals.alpha)


def _column(instance: Instance, col: Configuration, cost_scale: float) -> np.ndarray:
    L, P = instance.num_bins, instance.num_items
    a = np.zeros(L + P + 1)
    a[col.bin] = 1.0
    for p in col.items:
        a[L + p] = 1.0
    a[-1] = col.cost / cost_scale
    return a


def master_lp(instance: Instance, columns: Sequence[Configuration], budget_side: float,
              cost_scale: float = 1.0) -> LinearProgram:
    """Restricted master over the given columns (costs divided by ``cost_scale``)."""
    L, P = instance.num_bins, instance.num_items
    m = L + P + 1
    A = (np.column_stack([_column(instance, c, cost_scale) for c in columns])
         if columns else np.zeros((m, 0)))
    c = np.array([instance.config_reward(col.bin, col.items) for col in columns])
    b = np.concatenate([np.ones(L), instance.rho.astype(float), [budget_side]])
    return LinearProgram(c, A, b)


def solve_relaxation(instance: Instance, mode: str = EXACT, epsilon: float | None = None, *,
                     scaled: ScaledInstance | None = None, max_iters: int = 10_000,
                     timeout_secs: float | None = None) -> FractionalSolution:
    """Column generation for the configuration LP (``mode='exact'``) or its ε-scaled variant."""
    if mode not in (EXACT, SCALED):
        raise ValueError(f"unknown mode {mode!r}")
    if mode == SCALED and not (epsilon is not None and 0 < epsilon < 1):
        raise ValueError("scaled mode needs epsilon in (0, 1)")
    if scaled is None:
        try:
            scaled = scale_budget(instance)
        except InstanceError as exc:
            if str(exc).startswith("trivial"):
                return zero_solution(instance, mode, epsilon)
            raise
    k, scale = scaled.k, scaled.cost_scale
    side = k if mode == EXACT else k * (1.0 - epsilon)
    L, P = instance.num_bins, instance.num_items

    columns = _greedy_singletons(instance)
    pool = {(c.bin, c.items) for c in columns}
    simplex = BoundedSimplex(master_lp(instance, columns, side, scale))
    start = time.monotonic()
    history: list[float] = []
    converged = False
    iterations = 0
    rho = instance.rho.astype(float)
    center, center_bound = None, np.inf
    while True:
        res = simplex.solve()
        if not res.optimal:
            raise LpError(f"restricted master ended {res.status.value}")
        history.append(res.objective)
        y = np.maximum(res.duals, 0.0)
        duals = DualPrices(y[:L], y[L:L + P], float(y[-1]))
        new, center, center_bound = _price_round(instance, duals, center, center_bound,
                                                 rho, side, scale, pool)
        if not new:
            converged = True
            break
        iterations += 1
        for col in new:
            pool.add((col.bin, col.items))
            columns.append(col)
        simplex.add_columns(np.column_stack([_column(instance, c, scale) for c in new]),
                            [instance.config_reward(c.bin, c.items) for c in new])
        if iterations >= max_iters:
            break
        if timeout_secs is not None and time.monotonic() - start > timeout_secs:
            break
    if not converged:
        # the last batch of columns has not been optimized yet
        res = simplex.solve()
        history.append(res.objective)
    x = np.clip(res.x, 0.0, None)
    costs = np.array([c.cost for c in columns]) / scale
    return FractionalSolution(columns, x, float(res.objective), float(costs @ x) if columns else 0.0,
                              side, k, scale, L, mode, epsilon, converged, iterations,
                              history, duals)


# --- cost round-up -----------------------------------------------------------

def grid_exponent(num_bins: int, epsilon: float) -> int:
    """``m = 1 + ceil(log_L 2 - log_L eps)``, computed with integer powers."""
    if num_bins < 2:
        raise InstanceError("L >= 2 required for the round-up grid")
    if not 0 < epsilon < 1:
        raise ValueError("epsilon must lie in (0, 1)")
    j = 1
    while num_bins ** j * epsilon < 2.0 * (1 - 1e-12):
        j += 1
    return 1 + j


@dataclass(frozen=True)
class RoundedCostGrid:
    m: int
    units_per_mana: int
    units: np.ndarray

    @property
    def resolution(self) -> float:
        return 1.0 / self.units_per_mana

    @property
    def rounded(self) -> np.ndarray:
        return self.units / self.units_per_mana


def round_costs(scaled_costs: np.ndarray, num_bins: int, epsilon: float) -> RoundedCostGrid:
    m = grid_exponent(num_bins, epsilon)
    G = num_bins ** (2 * m)
    c = np.asarray(scaled_costs, dtype=float)
    units = np.ceil(c * G - 1e-9).astype(np.int64)
    return RoundedCostGrid(m, G, np.maximum(units, 0))


def round_up_costs(solution: FractionalSolution, epsilon: float) -> RoundedCostGrid:
    """Round scaled column costs up to multiples of ``1/L^(2m)`` and check the budget still holds."""
    if solution.mode != SCALED:
        raise ValueError("round-up applies to the eps-scaled LP solution")
    grid = round_costs(solution.scaled_costs, solution.num_bins, epsilon)
    used = float(grid.rounded @ solution.values) if solution.columns else 0.0
    if used > solution.k + LEMMA_TOL:
        raise AssertionError(
            f"rounded budget {used:.12g} exceeds k = {solution.k:.12g}; the eps-scaled solution is wrong")
    return grid


def grid_size(num_bins: int, epsilon: float) -> int:
    return num_bins ** (2 * grid_exponent(num_bins, epsilon))
