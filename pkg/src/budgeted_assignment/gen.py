"""Instance generators and problem reductions.

* :func:`random_instance` draws desk-scale instances.
* :func:`from_max_k_cover` and :func:`rlpp_from_max_k_cover` turn a
  max-k-cover instance into an equivalent assignment / line-planning instance.
* :func:`rlpp_build` maps a line-planning instance on a road graph to the
  core assignment model: lines become bins with one dimension per edge and
  passengers become items occupying the edges between their stops.
"""
from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import shortest_path

from .model import INCOMPATIBLE, Instance, InstanceError, max_config_cost

BINARY = "binary"
CAR_MILES = "car-miles"


def as_generator(seed) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


# --- random instances -------------------------------------------------------

@dataclass(frozen=True)
class RandomParams:
    num_bins: int = 4
    num_items: int = 8
    dims: tuple[int, int] = (1, 4)
    capacity: tuple[int, int] = (1, 3)
    bin_cost: tuple[float, float] = (1.0, 5.0)
    assign_cost: tuple[float, float] = (0.0, 1.0)
    reward: tuple[float, float] = (1.0, 10.0)
    rho: tuple[int, int] = (1, 2)
    incompatible_prob: float = 0.3
    zero_assign_costs: bool = False
    uniform_rewards: bool = False
    # normalized budget B / max configuration cost, drawn from this range
    budget_k: tuple[float, float] = (2.0, 8.0)
    # absolute budget; overrides budget_k when given
    budget: float | None = None


def random_instance(params: RandomParams = RandomParams(), seed=None) -> Instance:
    rng = as_generator(seed)
    L, P = params.num_bins, params.num_items
    if L < 1 or P < 0:
        raise ValueError("need at least one bin")
    dims = rng.integers(params.dims[0], params.dims[1] + 1, size=L)
    caps = [rng.integers(params.capacity[0], params.capacity[1] + 1, size=n) for n in dims]
    bin_costs = rng.uniform(*params.bin_cost, size=L)
    rho = rng.integers(params.rho[0], params.rho[1] + 1, size=P)
    lo = np.full((L, P), INCOMPATIBLE, dtype=np.int64)
    hi = np.full((L, P), INCOMPATIBLE, dtype=np.int64)
    v = np.zeros((L, P))
    c = np.zeros((L, P))
    item_reward = rng.uniform(*params.reward, size=P)
    for l in range(L):
        n = int(dims[l])
        spans = [(a, b) for a in range(n) for b in range(a + 1, n + 1)]
        for p in range(P):
            if rng.random() < params.incompatible_prob:
                continue
            lo[l, p], hi[l, p] = spans[rng.integers(len(spans))]
            v[l, p] = item_reward[p] if params.uniform_rewards else rng.uniform(*params.reward)
            if not params.zero_assign_costs:
                c[l, p] = rng.uniform(*params.assign_cost)
    inst = Instance(tuple(caps), bin_costs, lo, hi, v, c, rho, 0.0)
    if params.budget is not None:
        budget = float(params.budget)
    else:
        cmax = max_config_cost(inst) or 0.0
        budget = float(rng.uniform(*params.budget_k)) * cmax
    return Instance(inst.capacities, inst.bin_costs, lo, hi, v, c, rho, budget)


# --- max-k-cover -------------------------------------------------------------

@dataclass(frozen=True)
class MaxKCoverInstance:
    n: int
    sets: tuple[tuple[int, ...], ...]
    k: int

    def __post_init__(self):
        sets = tuple(tuple(sorted(set(int(e) for e in s))) for s in self.sets)
        object.__setattr__(self, "sets", sets)
        for s in sets:
            if not s:
                raise ValueError("max-k-cover sets must be nonempty")
            if s[0] < 0 or s[-1] >= self.n:
                raise ValueError(f"set {s} is not a subset of range({self.n})")
        if self.k < 0:
            raise ValueError("k must be nonnegative")


def cover_optimum(mkc: MaxKCoverInstance) -> int:
    """Largest union over at most ``k`` sets, by enumeration."""
    best = 0
    for combo in itertools.combinations(mkc.sets, min(mkc.k, len(mkc.sets))):
        best = max(best, len(set().union(*combo)))
    return best


def canonical_form(mkc: MaxKCoverInstance) -> tuple:
    """Representative invariant under relabeling elements and reordering sets."""
    best = None
    for perm in itertools.permutations(range(mkc.n)):
        key = tuple(sorted(tuple(sorted(perm[e] for e in s)) for s in mkc.sets))
        if best is None or key < best:
            best = key
    return (mkc.n, mkc.k, best)


def from_max_k_cover(mkc: MaxKCoverInstance) -> Instance:
    """Each set becomes a bin with capacity 1 on the elements it covers; each element is a unit item."""
    L, n = len(mkc.sets), mkc.n
    caps = []
    for s in mkc.sets:
        f = np.zeros(n, dtype=np.int64)
        f[list(s)] = 1
        caps.append(f)
    lo = np.tile(np.arange(n), (L, 1))
    return Instance(tuple(caps), np.ones(L), lo, lo + 1, np.ones((L, n)), np.zeros((L, n)),
                    np.ones(n, dtype=np.int64), float(mkc.k))


# --- line planning -------------------------------------------------------------

@dataclass(frozen=True)
class Line:
    stops: tuple[int, ...]
    frequency: int = 1
    cost: float = 1.0


@dataclass
class RlppInstance:
    num_nodes: int
    edges: list[tuple[int, int, float]]
    lines: list[Line]
    capacity: int
    trips: list[tuple[int, int]]
    welfare: str = BINARY
    budget: float = 0.0
    walk_radius: float = 0.0
    _dist: np.ndarray | None = field(default=None, repr=False, compare=False)

    def validate(self) -> list[str]:
        out = []
        edge_set = {(min(u, v), max(u, v)) for u, v, _ in self.edges}
        if self.capacity < 1:
            out.append("capacity C must be >= 1")
        if self.welfare not in (BINARY, CAR_MILES):
            out.append(f"unknown welfare rule {self.welfare!r}")
        for u, v, w in self.edges:
            if not (0 <= u < self.num_nodes and 0 <= v < self.num_nodes) or w < 0:
                out.append(f"bad edge ({u}, {v}, {w})")
        for i, line in enumerate(self.lines):
            if len(line.stops) < 2:
                out.append(f"line {i} needs at least two stops")
            if line.frequency < 1:
                out.append(f"line {i} frequency must be >= 1")
            for a, b in zip(line.stops, line.stops[1:]):
                if (min(a, b), max(a, b)) not in edge_set:
                    out.append(f"line {i}: ({a}, {b}) is not an edge")
        for o, d in self.trips:
            if not (0 <= o < self.num_nodes and 0 <= d < self.num_nodes):
                out.append(f"trip ({o}, {d}) references a missing node")
        return out

    def distances(self) -> np.ndarray:
        if self._dist is None:
            n = self.num_nodes
            if self.edges:
                # keep the shortest parallel edge; csr would otherwise sum duplicates
                best: dict[tuple[int, int], float] = {}
                for a, b, c in self.edges:
                    key = (min(a, b), max(a, b))
                    best[key] = min(best.get(key, np.inf), float(c))
                keys = list(best)
                rows = [a for a, _ in keys]
                cols = [b for _, b in keys]
                # zero-length edges would vanish from a sparse matrix
                vals = [max(best[k], 1e-300) for k in keys]
                g = csr_matrix((vals, (rows, cols)), shape=(n, n))
                self._dist = shortest_path(g, directed=False)
                self._dist[self._dist < 1e-200] = 0.0
            else:
                self._dist = np.where(np.eye(n, dtype=bool), 0.0, np.inf)
        return self._dist

    def to_dict(self) -> dict:
        return {
            "graph": {"nodes": self.num_nodes, "edges": [[u, v, w] for u, v, w in self.edges]},
            "lines": [{"stops": list(l.stops), "frequency": l.frequency, "cost": l.cost}
                      for l in self.lines],
            "capacity": self.capacity,
            "trips": [[o, d] for o, d in self.trips],
            "welfare": self.welfare,
            "walk_radius": self.walk_radius,
            "budget": self.budget,
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "RlppInstance":
        g = doc["graph"]
        return cls(int(g["nodes"]), [(int(u), int(v), float(w)) for u, v, w in g["edges"]],
                   [Line(tuple(int(s) for s in l["stops"]), int(l.get("frequency", 1)),
                         float(l.get("cost", 1.0))) for l in doc["lines"]],
                   int(doc["capacity"]), [(int(o), int(d)) for o, d in doc["trips"]],
                   doc.get("welfare", BINARY), float(doc.get("budget", 0.0)),
                   float(doc.get("walk_radius", 0.0)))

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=1) + "\n"


def load_rlpp(path: str | Path) -> RlppInstance:
    return RlppInstance.from_dict(json.loads(Path(path).read_text()))


def rlpp_from_max_k_cover(mkc: MaxKCoverInstance) -> RlppInstance:
    """Complete graph on ``2n`` nodes; element ``i`` is a trip ``2i -> 2i+1``; set ``j`` is a line threading its trips."""
    nodes = 2 * mkc.n
    edges = [(a, b, 1.0) for a in range(nodes) for b in range(a + 1, nodes)]
    lines = [Line(tuple(x for i in s for x in (2 * i, 2 * i + 1)), 1, 1.0) for s in mkc.sets]
    trips = [(2 * i, 2 * i + 1) for i in range(mkc.n)]
    return RlppInstance(nodes, edges, lines, 1, trips, BINARY, float(mkc.k))


def _best_stop_pair(first: np.ndarray, last: np.ndarray) -> tuple[int, int, float]:
    """Boarding index ``i`` and alighting index ``j != i`` minimizing ``first[i] + last[j]``."""
    total = first[:, None] + last[None, :]
    np.fill_diagonal(total, np.inf)
    flat = int(np.argmin(total))  # row-major: earliest boarding, then earliest alighting
    i, j = divmod(flat, total.shape[1])
    return i, j, float(total[i, j])


def rlpp_build(rlpp: RlppInstance) -> Instance:
    problems = rlpp.validate()
    if problems:
        raise InstanceError("; ".join(problems))
    D = rlpp.distances()
    L, P = len(rlpp.lines), len(rlpp.trips)
    lo = np.full((L, P), INCOMPATIBLE, dtype=np.int64)
    hi = np.full((L, P), INCOMPATIBLE, dtype=np.int64)
    v = np.zeros((L, P))
    caps = []
    for l, line in enumerate(rlpp.lines):
        stops = np.array(line.stops)
        caps.append(np.full(len(stops) - 1, rlpp.capacity * line.frequency, dtype=np.int64))
        for p, (o, d) in enumerate(rlpp.trips):
            first, last = D[o, stops], D[stops, d]
            if not (np.all(np.isfinite(first)) and np.all(np.isfinite(last)) and np.isfinite(D[o, d])):
                raise InstanceError(f"graph disconnected: trip {p} cannot reach line {l}")
            i, j, detour = _best_stop_pair(first, last)
            if rlpp.welfare == BINARY:
                if min(first.min(), last.min()) > rlpp.walk_radius:
                    continue
                value = 1.0
            else:
                value = float(D[o, d]) - detour
                if value <= 0:
                    continue
            lo[l, p], hi[l, p] = min(i, j), max(i, j)
            v[l, p] = value
    return Instance(tuple(caps), [line.cost for line in rlpp.lines], lo, hi, v,
                    np.zeros((L, P)), np.ones(P, dtype=np.int64), rlpp.budget)


def rlpp_grid(rows: int = 8, cols: int = 8, num_lines: int = 20, num_trips: int = 200,
              capacity: int = 5, welfare: str = CAR_MILES, budget_fraction: float = 0.25,
              seed=None) -> RlppInstance:
    """Line-planning instance on a ``rows x cols`` unit grid.

    Lines are random monotone staircase paths between nodes at least half the
    grid diameter apart; frequencies are 1 to 3 and a line costs its length
    times its frequency.  The budget is ``budget_fraction`` of the total line cost.
    """
    rng = as_generator(seed)

    def node(r, c):
        return r * cols + c

    edges = []
    for r in range(rows):
        for c in range(cols):
            if c + 1 < cols:
                edges.append((node(r, c), node(r, c + 1), 1.0))
            if r + 1 < rows:
                edges.append((node(r, c), node(r + 1, c), 1.0))
    min_len = max(2, (rows + cols - 2) // 2)
    lines = []
    while len(lines) < num_lines:
        r1, r2 = rng.integers(rows, size=2)
        c1, c2 = rng.integers(cols, size=2)
        if abs(r1 - r2) + abs(c1 - c2) < min_len:
            continue
        moves = ["r"] * abs(int(r2 - r1)) + ["c"] * abs(int(c2 - c1))
        rng.shuffle(moves)
        r, c = int(r1), int(c1)
        stops = [node(r, c)]
        for m in moves:
            if m == "r":
                r += 1 if r2 > r1 else -1
            else:
                c += 1 if c2 > c1 else -1
            stops.append(node(r, c))
        freq = int(rng.integers(1, 4))
        lines.append(Line(tuple(stops), freq, float((len(stops) - 1) * freq)))
    trips = []
    while len(trips) < num_trips:
        o, d = (int(x) for x in rng.integers(rows * cols, size=2))
        if o != d:
            trips.append((o, d))
    budget = budget_fraction * sum(line.cost for line in lines)
    return RlppInstance(rows * cols, edges, lines, capacity, trips, welfare, budget)
