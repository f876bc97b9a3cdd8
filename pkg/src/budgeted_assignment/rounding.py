"""Randomized rounding of the configuration LP.

Every algorithm starts the same way: each bin independently draws one of
its LP columns (or nothing) with the LP weights as probabilities, all
sampled items are tentatively assigned, and items placed in more than
``rho_p`` bins keep only their ``rho_p`` most rewarding bins.  What differs
is what happens when that tentative assignment breaks the budget:

* ``alg1``: a budget magician (type 0) watched the bins in order and
  decided which to keep; keep only those.
* ``alg2`` / ``alg6``: walk the bins by decreasing LP reward-per-cost and
  keep a prefix that fits the budget (``alg2`` rounds the exact LP,
  ``alg6`` the eps-scaled LP).
* ``baseline``: give up on the trial.

``alg3`` and ``alg4`` are the analysis variants that additionally cap every
item by a per-item rule (a Bernoulli magician in ``alg3``, a reverse scan
over sampled bins in ``alg4``) instead of pruning.

Trials are run in batches: arrays are shaped ``(trials, bins, items)``.
Randomness for trial ``t`` comes from :class:`TrialStreams`, independent
counter-based substreams for the bin draws, the budget magician's coins and
the per-item magicians' coins.  Sampling consumes one uniform per bin in
the original bin order, so algorithms that reorder bins still see the same
draws when they share a seed.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import magician as mg
from .colgen import EXACT, SCALED, FractionalSolution, round_costs
from .model import BUDGET_RTOL, AssignmentSolution, Instance, InstanceError

ALGORITHMS = ("alg1", "alg2", "baseline", "alg6", "alg3", "alg4")
MAGICIAN_ALGORITHMS = ("alg1", "alg3", "alg4")
GREEDY_ALGORITHMS = ("alg2", "alg6")

DIRECT, MAGICIAN_FALLBACK, GREEDY_FALLBACK, DISCARDED, MAGICIAN = range(5)
PATH_NAMES = ("direct", "magician-fallback", "greedy-fallback", "discarded", "magician")

SAMPLING, TYPE0_COINS, TYPEP_COINS = 0, 1, 2
_SUPPORT_TOL = 1e-12


def lp_mode(algorithm: str) -> str:
    """Which LP an algorithm rounds: the exact LP for ``alg2``, the eps-scaled LP otherwise."""
    if algorithm not in ALGORITHMS:
        raise ValueError(f"unknown algorithm {algorithm!r}; expected one of {', '.join(ALGORITHMS)}")
    return EXACT if algorithm == "alg2" else SCALED


# --- randomness ---------------------------------------------------------------

class TrialStreams:
    """Named random substreams of one trial.

    Stream ``s`` of trial ``t`` is Philox keyed by the master seed (and a
    salt) with counter ``(0, 0, t, s)``, so any trial can be replayed alone
    and two algorithms given the same seed and salt see identical draws.
    Every call to :meth:`stream` starts the substream from its beginning.
    """

    def __init__(self, seed: int, trial: int = 0, salt: int = 0):
        self.seed = int(seed) % 2**64
        self.trial = int(trial)
        self.salt = int(salt)

    def stream(self, sid: int) -> np.random.Generator:
        bitgen = np.random.Philox(key=self.seed | (self.salt << 64),
                                  counter=[0, 0, self.trial, sid])
        return np.random.Generator(bitgen)


def trial_streams(seed: int, trials: Sequence[int] | int, salt: int = 0) -> list[TrialStreams]:
    if isinstance(trials, int):
        trials = range(trials)
    return [TrialStreams(seed, t, salt) for t in trials]


def as_streams(rng) -> TrialStreams:
    """Accept a :class:`TrialStreams`, an integer seed, or a numpy Generator (one draw picks a seed)."""
    if isinstance(rng, TrialStreams):
        return rng
    if isinstance(rng, np.random.Generator):
        return TrialStreams(int(rng.integers(2**63)))
    if rng is None:
        return TrialStreams(int(np.random.default_rng().integers(2**63)))
    return TrialStreams(int(rng))


# --- result types ---------------------------------------------------------------

@dataclass
class SampledConfigs:
    """One draw per bin: ``choice[l]`` indexes the solution's columns, ``-1`` for the empty set."""
    choice: np.ndarray
    items: list[tuple[int, ...]]
    seed: int
    trial: int


@dataclass
class RoundingOutcome:
    solution: AssignmentSolution | None
    path: str
    z: np.ndarray | None = None
    sampled: SampledConfigs | None = None

    @property
    def objective(self) -> float:
        return 0.0 if self.solution is None else self.solution.objective


@dataclass
class BatchOutcome:
    x: np.ndarray          # (T, L, P) bool
    y: np.ndarray          # (T, L) bool
    path: np.ndarray       # (T,) path codes
    objective: np.ndarray  # (T,)
    cost: np.ndarray       # (T,)
    choice: np.ndarray     # (T, L) sampled column per bin, -1 for none
    z: np.ndarray | None = None

    def __len__(self) -> int:
        return len(self.path)

    def outcome(self, instance: Instance, i: int, streams: TrialStreams | None = None,
                columns=None) -> RoundingOutcome:
        items = [() if c < 0 or columns is None else columns[c].items for c in self.choice[i]]
        sampled = SampledConfigs(self.choice[i].copy(), items,
                                 streams.seed if streams else 0, streams.trial if streams else 0)
        z = None if self.z is None else self.z[i].copy()
        if self.path[i] == DISCARDED:
            return RoundingOutcome(None, PATH_NAMES[DISCARDED], z, sampled)
        sol = AssignmentSolution.from_x(instance, self.x[i], self.y[i])
        return RoundingOutcome(sol, PATH_NAMES[self.path[i]], z, sampled)


# --- shared building blocks -------------------------------------------------------

def _budget_ok(cost: np.ndarray, budget: float) -> np.ndarray:
    return cost <= budget + BUDGET_RTOL * max(1.0, abs(budget))


def prune_order(instance: Instance) -> tuple[np.ndarray, np.ndarray]:
    """Per item, bins by decreasing reward (ties: lower bin first), and each bin's rank in that order."""
    L, P = instance.num_bins, instance.num_items
    order = np.empty((L, P), dtype=np.int64)
    bins = np.arange(L)
    for p in range(P):
        order[:, p] = np.lexsort((bins, -instance.rewards[:, p]))
    rank = np.argsort(order, axis=0)
    return order, rank


def prune_rho(instance: Instance, x: np.ndarray, order=None) -> np.ndarray:
    """Keep each item only in its ``rho_p`` most rewarding bins (ties: lowest bin index).

    ``x`` is ``(L, P)`` or a batch ``(T, L, P)``.
    """
    x = np.asarray(x, dtype=bool)
    single = x.ndim == 2
    xb = x[None] if single else x
    order, rank = order if order is not None else prune_order(instance)
    xo = np.take_along_axis(xb, np.broadcast_to(order, xb.shape), axis=1)
    keep = xo & (np.cumsum(xo, axis=1) <= instance.rho)
    out = np.take_along_axis(keep, np.broadcast_to(rank, xb.shape), axis=1)
    return out[0] if single else out


def greedy_order(instance: Instance, solution: FractionalSolution) -> np.ndarray:
    """Bins by nonincreasing LP reward per unit opening cost (0/0 counts as 0; stable)."""
    L = instance.num_bins
    num = np.zeros(L)
    den = np.zeros(L)
    for col, xv in zip(solution.columns, solution.values):
        num[col.bin] += xv * instance.config_reward(col.bin, col.items)
        den[col.bin] += xv
    ratio = np.zeros(L)
    for l in range(L):
        if num[l] <= 0:
            ratio[l] = 0.0
        elif instance.bin_costs[l] == 0:
            ratio[l] = np.inf
        else:
            ratio[l] = num[l] / (instance.bin_costs[l] * den[l])
    return np.argsort(-ratio, kind="stable")


class RoundingPlan:
    """Everything about one (instance, LP solution, algorithm) that does not depend on the trial."""

    def __init__(self, instance: Instance, solution: FractionalSolution, algorithm: str,
                 epsilon: float | None = None):
        lp_mode(algorithm)
        self.instance = instance
        self.solution = solution
        self.algorithm = algorithm
        self.epsilon = epsilon if epsilon is not None else solution.epsilon
        L, P = instance.num_bins, instance.num_items
        self.L, self.P = L, P
        if solution.num_bins != L:
            raise InstanceError("LP solution does not belong to this instance")

        if algorithm in GREEDY_ALGORITHMS:
            if instance.has_assignment_costs():
                raise InstanceError("Algorithm 2 requires zero assignment costs")
            if solution.columns and solution.k < 1 - 1e-12:
                raise InstanceError(f"greedy rounding needs k >= 1 (k = {solution.k:.6g})")
        if algorithm in MAGICIAN_ALGORITHMS and solution.k <= 1:
            raise InstanceError(
                f"k = {solution.k:.6g} <= 1: the budget magician has no room; "
                "use exact or greedy algorithm")
        if algorithm == "alg4" and not instance.has_uniform_rewards():
            raise InstanceError("alg4 requires uniform rewards (v_lp equal across bins for every item)")

        # sampling tables over the positive-support columns, grouped by bin
        keep = [j for j, xv in enumerate(solution.values) if xv > _SUPPORT_TOL]
        self.columns = [solution.columns[j] for j in keep]
        values = np.array([solution.values[j] for j in keep], dtype=float)
        self.col_ids: list[np.ndarray] = []
        self.cum: list[np.ndarray] = []
        self.bin_probs: list[np.ndarray] = []
        for l in range(L):
            ids = np.array([i for i, c in enumerate(self.columns) if c.bin == l], dtype=np.int64)
            probs = values[ids] if ids.size else np.zeros(0)
            total = probs.sum()
            if total > 1.0:
                probs = probs / total
            self.col_ids.append(ids)
            self.bin_probs.append(probs)
            self.cum.append(np.cumsum(probs))
        n = len(self.columns)
        # last row stands for the empty choice
        self.members = np.zeros((n + 1, P), dtype=bool)
        for i, c in enumerate(self.columns):
            self.members[i, list(c.items)] = True
        self.order = prune_order(instance)
        self._type0 = None
        self._typep = None
        self.greedy = greedy_order(instance, solution) if algorithm in GREEDY_ALGORITHMS else None

    # -- magicians ----------------------------------------------------------
    def type0(self):
        """Budget magician: thresholds over bins in ascending order, on the round-up grid."""
        if self._type0 is None:
            sol = self.solution
            if sol.mode != SCALED:
                raise InstanceError("magician rounding needs the eps-scaled LP solution")
            grid = round_costs(np.array([c.cost for c in self.columns]) / sol.cost_scale,
                               self.L, self.epsilon)
            G = grid.units_per_mana
            units = grid.units
            boxes = []
            for l in range(self.L):
                ids, probs = self.col_ids[l], self.bin_probs[l]
                empty = max(0.0, 1.0 - probs.sum())
                p = np.concatenate([[empty], probs])
                boxes.append(mg.BoxDistribution(np.concatenate([[0], units[ids]]), p / p.sum(), G))
            mean_loss = sum(float(b.units @ b.probs) for b in boxes) / G
            if mean_loss > sol.k + 1e-9:
                raise AssertionError(
                    f"rounded LP cost {mean_loss:.12g} exceeds k = {sol.k:.12g}")
            theta, r, _ = mg.plan(mg.conservative_gamma(sol.k), sol.k, G, boxes)
            mana = int(np.floor(sol.k * G + 1e-9))
            self._type0 = (theta, r, np.concatenate([units, [0]]), mana)
        return self._type0

    def typep(self):
        """Per-item 0/1 magicians over bins in descending order."""
        if self._typep is None:
            hit = np.zeros((self.L, self.P))
            for l in range(self.L):
                if self.col_ids[l].size:
                    hit[l] = self.bin_probs[l] @ self.members[self.col_ids[l]]
            hit = np.minimum(hit, 1.0)
            rho = self.instance.rho
            gammas = np.array([mg.bernoulli_gamma(int(r)) for r in rho])
            theta, r = mg.bernoulli_plan(gammas, rho, hit[::-1])
            self._typep = (theta, r)
        return self._typep

    # -- trial pieces ----------------------------------------------------------
    def sample(self, streams: Sequence[TrialStreams]) -> np.ndarray:
        T = len(streams)
        U = np.array([s.stream(SAMPLING).random(self.L) for s in streams]).reshape(T, self.L)
        choice = np.full((T, self.L), -1, dtype=np.int64)
        for l in range(self.L):
            if self.col_ids[l].size == 0:
                continue
            idx = np.searchsorted(self.cum[l], U[:, l], side="right")
            hit = idx < self.col_ids[l].size
            choice[hit, l] = self.col_ids[l][idx[hit]]
        return choice

    def _tentative(self, choice: np.ndarray) -> np.ndarray:
        return self.members[np.where(choice < 0, len(self.columns), choice)]

    def _finish(self, x: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        inst = self.instance
        y = x.any(axis=2)
        cost = y @ inst.bin_costs + np.einsum("tlp,lp->t", x, inst.assign_costs)
        return y, cost, np.einsum("tlp,lp->t", x, inst.rewards)

    def _type0_decisions(self, choice: np.ndarray, streams: Sequence[TrialStreams]) -> np.ndarray:
        theta, r, units, mana = self.type0()
        T = len(streams)
        coins = np.array([s.stream(TYPE0_COINS).random(self.L) for s in streams]).reshape(T, self.L)
        loss = units[np.where(choice < 0, len(self.columns), choice)]
        w = np.zeros(T, dtype=np.int64)
        z = np.zeros((T, self.L), dtype=bool)
        for l in range(self.L):
            z[:, l] = (w < theta[l]) | ((w == theta[l]) & (coins[:, l] < r[l]))
            w += np.where(z[:, l], loss[:, l], 0)
        if np.any(w > mana):
            raise AssertionError("Theorem 1 violated: budget magician lost more than k mana")
        return z

    # -- algorithms -------------------------------------------------------------
    def run(self, streams: Sequence[TrialStreams]) -> BatchOutcome:
        choice = self.sample(streams)
        x0 = self._tentative(choice)
        alg = self.algorithm
        T = len(streams)
        z = None
        if alg in ("alg3", "alg4"):
            z = self._type0_decisions(choice, streams)
            x = self._alg3(x0, z, streams) if alg == "alg3" else self._alg4(x0, z)
            y, cost, obj = self._finish(x)
            path = np.full(T, MAGICIAN)
            self._assert_budget(cost, "per-item magician rounding")
            return BatchOutcome(x, y, path, obj, cost, choice, z)

        x = prune_rho(self.instance, x0, self.order)
        y, cost, obj = self._finish(x)
        ok = _budget_ok(cost, self.instance.budget)
        path = np.where(ok, DIRECT, DISCARDED)
        if alg == "alg1":
            z = self._type0_decisions(choice, streams)
        bad = ~ok
        if bad.any() and alg != "baseline":
            if alg == "alg1":
                xf = prune_rho(self.instance, x0[bad] & z[bad][:, :, None], self.order)
                code = MAGICIAN_FALLBACK
            else:
                xf = prune_rho(self.instance, self._greedy(x0[bad], choice[bad]), self.order)
                code = GREEDY_FALLBACK
            yf, cf, of = self._finish(xf)
            self._assert_budget(cf, PATH_NAMES[code])
            x[bad], y[bad], cost[bad], obj[bad] = xf, yf, cf, of
            path[bad] = code
        if alg == "baseline":
            x[bad] = False
            y[bad] = False
            obj[bad] = 0.0
            cost[bad] = 0.0
        return BatchOutcome(x, y, path, obj, cost, choice, z)

    def _assert_budget(self, cost: np.ndarray, what: str) -> None:
        if not np.all(_budget_ok(cost, self.instance.budget)):
            raise AssertionError(f"{what} exceeded the budget")

    def _greedy(self, x0: np.ndarray, choice: np.ndarray) -> np.ndarray:
        B = self.instance.budget
        tol = BUDGET_RTOL * max(1.0, abs(B))
        remaining = np.full(len(x0), B)
        keep = np.zeros(choice.shape, dtype=bool)
        for l in self.greedy:
            remaining = remaining - self.instance.bin_costs[l] * (choice[:, l] >= 0)
            keep[:, l] = (remaining >= -tol) & (choice[:, l] >= 0)
        return x0 & keep[:, :, None]

    def _alg3(self, x0: np.ndarray, z: np.ndarray, streams: Sequence[TrialStreams]) -> np.ndarray:
        theta, r = self.typep()
        T = len(streams)
        coins = np.array([s.stream(TYPEP_COINS).random((self.L, self.P)) for s in streams])
        coins = coins.reshape(T, self.L, self.P)
        rho = self.instance.rho
        w = np.zeros((T, self.P), dtype=np.int64)
        out = np.zeros_like(x0)
        for i, l in enumerate(range(self.L - 1, -1, -1)):
            opened = (w < theta[i]) | ((w == theta[i]) & (coins[:, i] < r[i]))
            w += opened & x0[:, l]
            out[:, l] = x0[:, l] & opened & z[:, l, None]
        if np.any(w > rho):
            raise AssertionError("Theorem 1 violated: an item magician lost more than rho_p mana")
        return out

    def _alg4(self, x0: np.ndarray, z: np.ndarray) -> np.ndarray:
        # number of sampled bins above l holding p
        later = np.cumsum(x0[:, ::-1], axis=1)[:, ::-1] - x0
        return x0 & (later < self.instance.rho) & z[:, :, None]


# --- single-trial entry points -----------------------------------------------------

def sample_configurations(solution: FractionalSolution, rng, instance: Instance | None = None) -> SampledConfigs:
    """Draw one column (or nothing) per bin with the LP values as probabilities."""
    streams = as_streams(rng)
    L = solution.num_bins
    U = streams.stream(SAMPLING).random(L)
    choice = np.full(L, -1, dtype=np.int64)
    items: list[tuple[int, ...]] = [()] * L
    for l in range(L):
        ids = [j for j, c in enumerate(solution.columns) if c.bin == l and solution.values[j] > _SUPPORT_TOL]
        if not ids:
            continue
        probs = np.array([solution.values[j] for j in ids])
        if probs.sum() > 1:
            probs = probs / probs.sum()
        idx = int(np.searchsorted(np.cumsum(probs), U[l], side="right"))
        if idx < len(ids):
            choice[l] = ids[idx]
            items[l] = solution.columns[ids[idx]].items
    return SampledConfigs(choice, items, streams.seed, streams.trial)


def round_once(instance: Instance, solution: FractionalSolution, algorithm: str, rng,
               epsilon: float | None = None, plan: RoundingPlan | None = None) -> RoundingOutcome:
    plan = plan or RoundingPlan(instance, solution, algorithm, epsilon)
    streams = as_streams(rng)
    batch = plan.run([streams])
    out = batch.outcome(instance, 0, streams, plan.columns)
    if out.sampled is not None:
        # report indices into the caller's solution rather than the plan's support list
        lookup = {id(c): j for j, c in enumerate(solution.columns)}
        out.sampled.choice = np.array([-1 if c < 0 else lookup[id(plan.columns[c])]
                                       for c in batch.choice[0]], dtype=np.int64)
    return out


def alg1_magician_round(instance, solution, epsilon, rng, plan=None) -> RoundingOutcome:
    return round_once(instance, solution, "alg1", rng, epsilon, plan)


def alg2_greedy_round(instance, solution, rng, plan=None) -> RoundingOutcome:
    return round_once(instance, solution, "alg2", rng, None, plan)


def alg_baseline_round(instance, solution, rng, plan=None) -> RoundingOutcome:
    return round_once(instance, solution, "baseline", rng, None, plan)


def alg6_modified_round(instance, solution, epsilon, rng, plan=None) -> RoundingOutcome:
    return round_once(instance, solution, "alg6", rng, epsilon, plan)


def analysis_alg3(instance, solution, epsilon, rng, plan=None) -> RoundingOutcome:
    return round_once(instance, solution, "alg3", rng, epsilon, plan)


def analysis_alg4_uniform(instance, solution, epsilon, rng, plan=None) -> RoundingOutcome:
    return round_once(instance, solution, "alg4", rng, epsilon, plan)
