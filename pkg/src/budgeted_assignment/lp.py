"""Dense bounded-variable primal simplex.

Solves ``max c.x  s.t.  A x <= b,  0 <= x <= u`` and returns a basic (vertex)
optimum together with row duals.  Upper bounds may be ``inf``.  The solver
object keeps its basis between calls so columns can be appended and the
problem re-optimized from the previous vertex, which is what column
generation needs.

Entering columns are chosen by Devex pricing; a long run of degenerate
pivots switches to Bland's rule until the current solve finishes.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np
from scipy import sparse

FEAS_TOL = 1e-9
OPT_TOL = 1e-9
PIVOT_TOL = 1e-9
SNAP_TOL = 1e-6
REFACTOR_EVERY = 64
# consecutive degenerate pivots tolerated before switching to Bland's rule
DEGENERATE_SWITCH = 20
# devex weights above this restart the reference framework
DEVEX_RESET = 1e8
# matrices with at most this many entries are priced densely
DENSE_PRICING = 50_000
# tied leaving rows must have a pivot at least this fraction of the largest tied pivot
STABLE_PIVOT = 1e-3

_STRUCT, _SLACK, _ARTIF = 0, 1, 2


class LpError(RuntimeError):
    pass


class LpStatus(enum.Enum):
    OPTIMAL = "optimal"
    INFEASIBLE = "infeasible"
    UNBOUNDED = "unbounded"


@dataclass
class LinearProgram:
    c: np.ndarray
    A: np.ndarray
    b: np.ndarray
    upper: np.ndarray | None = None

    def __post_init__(self):
        self.c = np.asarray(self.c, dtype=float).reshape(-1)
        n = self.c.size
        self.A = np.asarray(self.A, dtype=float).reshape(-1, n) if n else np.zeros((len(self.b), 0))
        self.b = np.asarray(self.b, dtype=float).reshape(-1)
        if self.upper is None:
            self.upper = np.full(n, np.inf)
        self.upper = np.asarray(self.upper, dtype=float).reshape(-1)
        if self.A.shape != (self.b.size, n) or self.upper.size != n:
            raise ValueError("inconsistent LP dimensions")
        for name in ("c", "A", "b"):
            if not np.all(np.isfinite(getattr(self, name))):
                raise ValueError(f"non-finite entries in {name}")
        if np.any(self.upper < 0):
            raise ValueError("upper bounds must be nonnegative")

    @property
    def shape(self) -> tuple[int, int]:
        return self.A.shape


@dataclass
class LpResult:
    status: LpStatus
    x: np.ndarray
    duals: np.ndarray
    objective: float
    reduced_costs: np.ndarray
    basis: np.ndarray
    iterations: int = 0

    @property
    def optimal(self) -> bool:
        return self.status is LpStatus.OPTIMAL


class BoundedSimplex:
    """Revised simplex with an explicit basis inverse, warm-startable."""

    def __init__(self, lp: LinearProgram, max_iter: int | None = None):
        m, n = lp.shape
        self.m = m
        self.b = lp.b.copy()
        self.max_iter = max_iter
        neg = np.nonzero(self.b < 0)[0]
        cols = [lp.A, np.eye(m)]
        art = np.zeros((m, neg.size))
        art[neg, np.arange(neg.size)] = -1.0
        cols.append(art)
        self._cols = np.hstack(cols) if m else np.zeros((0, n + neg.size))
        self._cost = np.concatenate([lp.c, np.zeros(m + neg.size)])
        self._upper = np.concatenate([lp.upper, np.full(m, np.inf), np.full(neg.size, np.inf)])
        self._kind = np.concatenate([np.full(n, _STRUCT), np.full(m, _SLACK),
                                     np.full(neg.size, _ARTIF)]).astype(np.int8)
        self._struct = list(range(n))
        basis = np.arange(n, n + m)
        basis[neg] = n + m + np.arange(neg.size)
        self.basis = basis
        self.at_upper = np.zeros(self._cost.size, dtype=bool)
        self.Binv = np.eye(m)
        self.Binv[neg, neg] = -1.0
        self.phase1_done = neg.size == 0
        self.iterations = 0
        self.bland = False
        self._cols_t = None
        self._refactor()

    # -- bookkeeping -------------------------------------------------------
    @property
    def num_vars(self) -> int:
        return self._cost.size

    def add_columns(self, A_new: np.ndarray, c_new: np.ndarray, upper_new: np.ndarray | None = None) -> None:
        A_new = np.asarray(A_new, dtype=float).reshape(self.m, -1)
        c_new = np.asarray(c_new, dtype=float).reshape(-1)
        k = c_new.size
        if upper_new is None:
            upper_new = np.full(k, np.inf)
        start = self.num_vars
        self._cols = np.hstack([self._cols, A_new])
        self._cost = np.concatenate([self._cost, c_new])
        self._upper = np.concatenate([self._upper, np.asarray(upper_new, dtype=float).reshape(-1)])
        self._kind = np.concatenate([self._kind, np.full(k, _STRUCT, dtype=np.int8)])
        self.at_upper = np.concatenate([self.at_upper, np.zeros(k, dtype=bool)])
        self._struct.extend(range(start, start + k))
        self._cols_t = None

    def _priced(self, y: np.ndarray) -> np.ndarray:
        """``y @ A`` over all columns; a sparse transpose keeps this cheap for master LPs."""
        if self._cols.size <= DENSE_PRICING:
            return y @ self._cols
        if self._cols_t is None:
            self._cols_t = sparse.csr_matrix(self._cols.T)
        return self._cols_t @ y

    def _nonbasic_value(self) -> np.ndarray:
        v = np.where(self.at_upper, self._upper, 0.0)
        v[self.basis] = 0.0
        return v

    def _refactor(self) -> None:
        if self.m:
            B = self._cols[:, self.basis]
            self.Binv = np.linalg.inv(B)
            self.xB = self.Binv @ (self.b - self._cols @ self._nonbasic_value())
        else:
            self.xB = np.zeros(0)
        self._since_refactor = 0

    def _values(self) -> np.ndarray:
        v = self._nonbasic_value()
        v[self.basis] = self.xB
        return v

    # -- iterations --------------------------------------------------------
    def _run(self, cost: np.ndarray) -> LpStatus:
        limit = self.max_iter or 200 * (self.m + self.num_vars) + 1000
        start = self.iterations
        degenerate = 0
        self.bland = False
        # devex reference weights, reset to the current nonbasic set
        weight = np.ones(self.num_vars)
        while True:
            if self.iterations - start > limit:
                raise LpError("degeneracy limit: iteration cap exceeded")
            y = cost[self.basis] @ self.Binv if self.m else np.zeros(0)
            d = cost - self._priced(y) if self.m else cost.copy()
            d[self.basis] = 0.0
            movable = self._upper > 0
            inc = (~self.at_upper) & movable & (d > OPT_TOL)
            dec = self.at_upper & (d < -OPT_TOL)
            cand = np.nonzero(inc | dec)[0]
            if cand.size == 0:
                return LpStatus.OPTIMAL
            if self.bland:
                j = int(cand[0])
            else:
                j = int(cand[np.argmax(d[cand] ** 2 / weight[cand])])
            direction = 1.0 if inc[j] else -1.0
            alpha = self.Binv @ self._cols[:, j] if self.m else np.zeros(0)
            rate = direction * alpha
            t_best = self._upper[j]
            leave = -1
            leave_to_upper = False
            if self.m:
                r = self._harris_row(rate)
                if r >= 0:
                    t_row = self._step(rate, r)
                    if t_row < t_best:
                        leave, leave_to_upper, t_best = r, bool(rate[r] < 0), t_row
            if not np.isfinite(t_best):
                return LpStatus.UNBOUNDED
            self.iterations += 1
            if t_best <= 1e-12:
                degenerate += 1
                if degenerate >= DEGENERATE_SWITCH:
                    self.bland = True
            else:
                # the objective moved, so no cycle can pass through here; back to Devex
                degenerate = 0
                self.bland = False
            if self.m:
                self.xB = self.xB - t_best * rate
            if leave < 0:
                self.at_upper[j] = not self.at_upper[j]
                continue
            entering_value = (t_best if direction > 0 else self._upper[j] - t_best)
            out = self.basis[leave]
            self.at_upper[out] = leave_to_upper
            self.at_upper[j] = False
            piv = alpha[leave]
            if not self.bland:
                with np.errstate(over="ignore", invalid="ignore"):
                    ratio = self._priced(self.Binv[leave]) / piv
                    weight = np.maximum(weight, ratio ** 2 * weight[j])
                    weight[out] = max(weight[j] / piv ** 2, 1.0)
                if not weight.max() <= DEVEX_RESET:
                    weight = np.ones(self.num_vars)
            row = self.Binv[leave] / piv
            self.Binv -= np.outer(alpha, row)
            self.Binv[leave] = row
            self.basis[leave] = j
            self.xB[leave] = entering_value
            self._since_refactor += 1
            if self._since_refactor >= REFACTOR_EVERY:
                self._refactor()

    def _step(self, rate: np.ndarray, r: int) -> float:
        if rate[r] > 0:
            return max(self.xB[r], 0.0) / rate[r]
        return max(self._upper[self.basis[r]] - self.xB[r], 0.0) / -rate[r]

    def _harris_row(self, rate: np.ndarray) -> int:
        """Two-pass ratio test: bound the step with a small feasibility slack,
        then take the largest pivot among rows that block within it."""
        ub = self._upper[self.basis]
        down = rate > PIVOT_TOL
        up = (rate < -PIVOT_TOL) & np.isfinite(ub)
        if not (down.any() or up.any()):
            return -1
        slack = np.full(self.m, np.inf)
        exact = np.full(self.m, np.inf)
        xd, xu = np.maximum(self.xB[down], 0.0), np.maximum(ub[up] - self.xB[up], 0.0)
        slack[down] = (xd + FEAS_TOL) / rate[down]
        slack[up] = (xu + FEAS_TOL) / -rate[up]
        exact[down] = xd / rate[down]
        exact[up] = xu / -rate[up]
        rows = np.nonzero(exact <= slack.min())[0]
        size = np.abs(rate[rows])
        if self.bland:
            rows = rows[size >= STABLE_PIVOT * size.max()]
            return int(rows[np.argmin(self.basis[rows])])
        return int(rows[np.argmax(size)])

    def solve(self, integral: bool = False) -> LpResult:
        if not self.phase1_done:
            cost1 = np.where(self._kind == _ARTIF, -1.0, 0.0)
            self._run(cost1)
            self._refactor()
            infeas = float(np.sum(self._values()[self._kind == _ARTIF]))
            if infeas > FEAS_TOL * (1.0 + float(np.abs(self.b).sum())):
                return self._result(LpStatus.INFEASIBLE, integral)
            self._upper[self._kind == _ARTIF] = 0.0
            self.at_upper[self._kind == _ARTIF] = False
            self.phase1_done = True
            self.bland = False
        status = self._run(self._cost)
        self._refactor()
        return self._result(status, integral)

    def _result(self, status: LpStatus, integral: bool) -> LpResult:
        vals = self._values()
        x = vals[self._struct].copy()
        x[np.abs(x) < 1e-12] = 0.0
        ub = self._upper[self._struct]
        x = np.minimum(np.maximum(x, 0.0), ub)
        if integral:
            r = np.round(x)
            snap = np.abs(x - r) <= SNAP_TOL
            x[snap] = r[snap]
        y = self._cost[self.basis] @ self.Binv if self.m else np.zeros(0)
        d = self._cost - y @ self._cols if self.m else self._cost.copy()
        d[self.basis] = 0.0
        c = self._cost[self._struct]
        return LpResult(status=status, x=x, duals=y, objective=float(c @ x),
                        reduced_costs=d[self._struct], basis=self.basis.copy(),
                        iterations=self.iterations)


def solve(lp: LinearProgram, integral: bool = False, max_iter: int | None = None) -> LpResult:
    """One-shot solve.  ``integral`` snaps values within 1e-6 of an integer (for TU systems)."""
    return BoundedSimplex(lp, max_iter=max_iter).solve(integral=integral)


def dual_objective(lp: LinearProgram, res: LpResult) -> float:
    """Objective of the dual built from the row duals: ``b.y + sum u_j max(0, d_j)``."""
    d = lp.c - res.duals @ lp.A if lp.A.size else lp.c.copy()
    pos = np.maximum(d, 0.0)
    mask = pos > OPT_TOL
    return float(lp.b @ res.duals + np.sum(lp.upper[mask] * pos[mask]))
