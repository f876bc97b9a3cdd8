"""Generalized gamma-conservative magician.

A magician with ``k`` units of mana sees boxes one at a time.  Before box
``i`` it knows the ex-ante distribution of the mana already lost, ``W_i``.  It
opens the box for sure when ``W_i < theta_i``, with probability ``r_i`` when
``W_i == theta_i`` and never otherwise, where ``theta_i`` is the smallest
loss level whose CDF reaches ``gamma``.  Every box is then opened with ex-ante
probability exactly ``gamma``, and for ``gamma <= 1 - 1/sqrt(k)`` the
threshold never exceeds ``k - 1`` so the magician cannot run out of mana.

Losses live on a grid of ``1/G`` mana; all internal arithmetic on loss levels
is in integer grid units.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

EXACT_TOL = 1e-9
_CDF_TOL = 1e-13


class MagicianError(RuntimeError):
    pass


def conservative_gamma(k: float) -> float:
    """``1 - 1/sqrt(k)``, the general-loss guarantee."""
    return 1.0 - 1.0 / math.sqrt(k)


def bernoulli_gamma(k: int) -> float:
    """``1 - 1/sqrt(k + 3)``, the guarantee for 0/1 losses and integer mana."""
    return 1.0 - 1.0 / math.sqrt(k + 3)


@dataclass(frozen=True)
class BoxDistribution:
    units: np.ndarray
    probs: np.ndarray
    grid: int

    def __post_init__(self):
        u = np.asarray(self.units, dtype=np.int64).reshape(-1)
        p = np.asarray(self.probs, dtype=float).reshape(-1)
        if u.shape != p.shape:
            raise ValueError("units and probs differ in length")
        if np.any(u < 0) or np.any(u > self.grid):
            raise ValueError("losses must lie in [0, 1]")
        if np.any(p < -1e-15) or abs(p.sum() - 1.0) > 1e-12:
            raise ValueError("probabilities must be nonnegative and sum to 1")
        object.__setattr__(self, "units", u)
        object.__setattr__(self, "probs", np.maximum(p, 0.0))

    @classmethod
    def from_losses(cls, losses: Sequence[float], probs: Sequence[float], grid: int) -> "BoxDistribution":
        x = np.asarray(losses, dtype=float) * grid
        units = np.rint(x)
        if np.any(np.abs(x - units) > 1e-9 * max(1, grid)):
            raise MagicianError("loss value off the magician's grid")
        return cls(units.astype(np.int64), probs, grid)

    @classmethod
    def bernoulli(cls, p: float) -> "BoxDistribution":
        p = min(max(float(p), 0.0), 1.0)
        return cls(np.array([0, 1]), np.array([1.0 - p, p]), 1)

    @property
    def mean(self) -> float:
        return float(self.units @ self.probs) / self.grid


@dataclass(frozen=True)
class BoxRecord:
    theta_units: int
    r: float
    open_prob: float
    sand_distance: float
    grid: int

    @property
    def theta(self) -> float:
        return self.theta_units / self.grid


class MagicianState:
    """Exact dynamic program over the distribution of lost mana, plus a live decision path."""

    def __init__(self, gamma: float, k: float, grid: int = 1):
        if not 0 <= gamma < 1:
            raise ValueError("gamma must lie in [0, 1)")
        if k <= 0:
            raise ValueError("mana k must be positive")
        if grid < 1:
            raise ValueError("grid size must be >= 1")
        self.gamma = float(gamma)
        self.k = float(k)
        self.grid = int(grid)
        self.mass = np.array([1.0])
        self.records: list[BoxRecord] = []
        self.w = 0
        self._current: BoxRecord | None = None
        self._opened = False

    @property
    def cdf(self) -> np.ndarray:
        return np.cumsum(self.mass)

    @property
    def mana_units(self) -> int:
        return int(math.floor(self.k * self.grid + 1e-9))

    def _threshold(self) -> tuple[int, float]:
        cdf = np.cumsum(self.mass)
        hits = np.nonzero(cdf >= self.gamma - _CDF_TOL)[0]
        theta = int(hits[0]) if hits.size else len(cdf) - 1
        below = float(cdf[theta - 1]) if theta > 0 else 0.0
        at = float(self.mass[theta])
        r = 1.0 if at <= 0 else min(max((self.gamma - below) / at, 0.0), 1.0)
        return theta, r

    def sand_distance(self, theta: int) -> float:
        """Mean distance of the loss mass from ``theta + 1`` mana (mass beyond counts as 0)."""
        top = theta + self.grid
        n = min(len(self.mass), top + 1)
        w = np.arange(n)
        return float(((top - w) * self.mass[:n]).sum() / self.grid)

    def present_box(self, dist: BoxDistribution) -> BoxRecord:
        if dist.grid != self.grid:
            if self.grid % dist.grid:
                raise MagicianError("box grid incompatible with the magician's grid")
            dist = BoxDistribution(dist.units * (self.grid // dist.grid), dist.probs, self.grid)
        theta, r = self._threshold()
        sel = self.mass[:theta + 1].copy()
        sel[theta] *= r
        open_prob = float(sel.sum())
        if abs(open_prob - self.gamma) > EXACT_TOL:
            raise MagicianError(f"ex-ante open probability {open_prob!r} != gamma {self.gamma!r}")
        record = BoxRecord(theta, r, open_prob, self.sand_distance(theta), self.grid)
        top = int(dist.units.max()) if dist.units.size else 0
        new = np.zeros(max(len(self.mass), theta + 1 + top))
        new[:len(self.mass)] = self.mass
        new[:theta + 1] -= sel
        for u, p in zip(dist.units, dist.probs):
            if p > 0:
                new[u:u + theta + 1] += p * sel
        np.maximum(new, 0.0, out=new)
        self.mass = new
        self.records.append(record)
        self._current = record
        self._opened = False
        return record

    def decide(self, rng) -> bool:
        """Open the current box?  Consumes exactly one uniform draw from ``rng``."""
        if self._current is None:
            raise MagicianError("decide called before present_box")
        u = rng.random() if hasattr(rng, "random") else float(rng)
        rec = self._current
        self._current = None
        self._opened = self.w < rec.theta_units or (self.w == rec.theta_units and u < rec.r)
        return self._opened

    def record_loss(self, x: float | int, units: bool = False) -> int:
        if not self._opened:
            raise MagicianError("record_loss is only allowed after an opened box")
        self._opened = False
        if units:
            xu = int(x)
        else:
            xu = int(round(float(x) * self.grid))
            if abs(xu - float(x) * self.grid) > 1e-9 * self.grid:
                raise MagicianError("loss value off the magician's grid")
        if not 0 <= xu <= self.grid:
            raise MagicianError("loss must lie in [0, 1]")
        if self.w + xu > self.mana_units:
            raise MagicianError("Theorem 1 violated: lost mana would exceed k")
        self.w += xu
        return self.w


def new_magician(gamma: float, k: float, grid: int = 1) -> MagicianState:
    return MagicianState(gamma, k, grid)


def plan(gamma: float, k: float, grid: int, boxes: Iterable[BoxDistribution]):
    """Run the ex-ante recursion over all boxes; returns (theta units, r, records)."""
    state = MagicianState(gamma, k, grid)
    recs = [state.present_box(b) for b in boxes]
    theta = np.array([r.theta_units for r in recs], dtype=np.int64)
    rr = np.array([r.r for r in recs])
    return theta, rr, recs


def bernoulli_plan(gamma: float, k: int, probs: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Thresholds for many independent 0/1-loss magicians at once.

    ``probs`` has shape ``(boxes, magicians)``; row ``i`` holds the success
    probability of box ``i`` for each magician.  ``k`` may be an array (one
    mana budget per magician).  Vectorized version of :func:`plan` with G = 1.
    """
    probs = np.asarray(probs, dtype=float)
    nbox, nmag = probs.shape
    gamma = np.broadcast_to(np.asarray(gamma, dtype=float), (nmag,))
    kk = np.broadcast_to(np.asarray(k, dtype=np.int64), (nmag,))
    size = int(kk.max()) + 2 if nmag else 2
    mass = np.zeros((nmag, size + nbox))
    mass[:, 0] = 1.0
    theta = np.zeros((nbox, nmag), dtype=np.int64)
    r = np.zeros((nbox, nmag))
    cols = np.arange(mass.shape[1])
    rows = np.arange(nmag)
    for i in range(nbox):
        cdf = np.cumsum(mass, axis=1)
        th = np.argmax(cdf >= gamma[:, None] - _CDF_TOL, axis=1)
        below = np.where(th > 0, cdf[rows, np.maximum(th - 1, 0)], 0.0)
        at = mass[rows, th]
        with np.errstate(divide="ignore", invalid="ignore"):
            ri = np.where(at > 0, (gamma - below) / at, 1.0)
        ri = np.clip(ri, 0.0, 1.0)
        sel = np.where(cols[None, :] < th[:, None], mass, 0.0)
        sel[rows, th] = mass[rows, th] * ri
        p = probs[i][:, None]
        moved = p * sel
        mass = mass - moved
        mass[:, 1:] += moved[:, :-1]
        np.maximum(mass, 0.0, out=mass)
        theta[i], r[i] = th, ri
    return theta, r
