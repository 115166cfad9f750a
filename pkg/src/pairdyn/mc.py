"""Agent-based Monte Carlo on finite regular graphs.

Each node plays the 1+k games organised by itself and its neighbours; the
payoff lookup goes straight to the model's generalized payoff matrix.  One
sweep is N elementary updates.  All randomness for a sweep is drawn up front
from a per-replica numpy Generator, so a run is a pure function of its seeds.
"""

from __future__ import annotations

import csv
import io
import json
import math
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numba
import numpy as np
from scipy import sparse, stats

from . import config_space as cs
from .pair_approx import edge_closure
from .payoffs import PayoffModel

RULES = ("pc", "db")
MAX_RESTARTS = 100_000


class GraphConstructionError(RuntimeError):
    pass


# -- graphs ---------------------------------------------------------------------------


@dataclass(frozen=True)
class RegularGraph:
    N: int
    k: int
    adjacency: np.ndarray  # (N, k) neighbour indices
    triangle_count: int
    generator: str = "random"
    seed: Optional[int] = None
    restarts: int = 0

    @property
    def tree_like(self) -> bool:
        """Heuristic: fewer triangles than nodes/10 (a ring lattice never qualifies)."""
        return self.triangle_count < max(1, self.N // 10)

    def edges(self) -> np.ndarray:
        u = np.repeat(np.arange(self.N), self.k)
        v = self.adjacency.ravel()
        keep = u < v
        return np.stack([u[keep], v[keep]], axis=1)


def count_triangles(adjacency: np.ndarray) -> int:
    N, k = adjacency.shape
    rows = np.repeat(np.arange(N), k)
    A = sparse.csr_matrix((np.ones(N * k, dtype=np.int64), (rows, adjacency.ravel())), shape=(N, N))
    return int((A @ A).multiply(A).sum()) // 6


def _check_graph_args(N: int, k: int) -> None:
    if k < 1 or N <= k:
        raise ValueError(f"need 1 <= k < N, got N={N}, k={k}")
    if (N * k) % 2:
        raise ValueError(f"N*k must be even, got N={N}, k={k}")


def random_regular_graph(N: int, k: int, seed: Optional[int] = None, max_restarts: int = MAX_RESTARTS) -> RegularGraph:
    """Pairing (configuration) model: shuffle N*k stubs, pair them up, restart on any loop or multi-edge.

    A single attempt succeeds with probability ~exp(-(k^2 - 1)/4), so this is
    practical up to about k = 6.
    """
    _check_graph_args(N, k)
    rng = np.random.default_rng(seed)
    stubs = np.repeat(np.arange(N), k)
    for attempt in range(max_restarts):
        pairs = rng.permutation(stubs).reshape(-1, 2)
        u, v = pairs[:, 0], pairs[:, 1]
        if np.any(u == v):
            continue
        lo, hi = np.minimum(u, v), np.maximum(u, v)
        keys = lo.astype(np.int64) * N + hi
        if np.unique(keys).size != keys.size:
            continue
        both = np.concatenate([np.stack([u, v], 1), np.stack([v, u], 1)])
        both = both[np.lexsort((both[:, 1], both[:, 0]))]
        adjacency = both[:, 1].reshape(N, k)
        return RegularGraph(N, k, adjacency, count_triangles(adjacency), "random", seed, attempt)
    raise GraphConstructionError(
        f"pairing model found no simple {k}-regular graph on {N} nodes in {max_restarts} restarts (seed={seed})"
    )


def ring_lattice(N: int, k: int) -> RegularGraph:
    """Each node linked to its k/2 nearest neighbours on each side.  Full of triangles for k >= 4."""
    _check_graph_args(N, k)
    if k % 2:
        raise ValueError("ring lattice needs even k")
    offsets = np.concatenate([-np.arange(k // 2, 0, -1), np.arange(1, k // 2 + 1)])
    adjacency = (np.arange(N)[:, None] + offsets[None, :]) % N
    return RegularGraph(N, k, adjacency, count_triangles(adjacency), "ring")


# -- payoff lookup ----------------------------------------------------------------


def _lookup(model: PayoffModel) -> tuple[np.ndarray, np.ndarray]:
    """Dense mixed-radix code -> configuration column, plus the radix weights."""
    n, k = model.n, model.k
    radix = (k + 1) ** np.arange(n, dtype=np.int64)
    radix[-1] = 0  # last count is implied by the total
    lut = np.full((k + 1) ** (n - 1), -1, dtype=np.int64)
    for col, cfg in enumerate(cs.enumerate_configurations(n, k)):
        lut[int(np.dot(cfg, radix))] = col
    return lut, radix


@numba.njit(cache=True)
def _payoff(v, strat, adj, nc, table, lut, radix):
    s = strat[v]
    n = nc.shape[1]
    total = 0.0
    # own game: co-players are exactly v's neighbours
    code = 0
    for j in range(n):
        code += nc[v, j] * radix[j]
    total += table[s, lut[code]]
    for slot in range(adj.shape[1]):
        g = adj[v, slot]
        code = 0
        for j in range(n):
            cnt = nc[g, j]
            if j == strat[g]:
                cnt += 1
            if j == s:
                cnt -= 1
            code += cnt * radix[j]
        total += table[s, lut[code]]
    return total


@numba.njit(cache=True)
def _flip(v, new, strat, adj, nc, counts):
    old = strat[v]
    if old == new:
        return
    for slot in range(adj.shape[1]):
        u = adj[v, slot]
        nc[u, old] -= 1
        nc[u, new] += 1
    counts[old] -= 1
    counts[new] += 1
    strat[v] = new


@numba.njit(cache=True)
def _sweep(rule_db, delta, focal, slot, unif, strat, adj, nc, counts, table, lut, radix):
    k = adj.shape[1]
    weights = np.empty(k)
    for t in range(focal.shape[0]):
        a = focal[t]
        if rule_db:
            first = strat[adj[a, 0]]
            uniform = True
            for m in range(1, k):
                if strat[adj[a, m]] != first:
                    uniform = False
                    break
            if uniform:
                _flip(a, first, strat, adj, nc, counts)
                continue
            if delta == 0.0:
                for m in range(k):
                    weights[m] = 1.0
            else:
                top = -np.inf
                for m in range(k):
                    weights[m] = delta * _payoff(adj[a, m], strat, adj, nc, table, lut, radix)
                    if weights[m] > top:
                        top = weights[m]
                for m in range(k):
                    weights[m] = math.exp(weights[m] - top)
            total = 0.0
            for m in range(k):
                total += weights[m]
            target = unif[t] * total
            acc = 0.0
            pick = k - 1
            for m in range(k):
                acc += weights[m]
                if target < acc:
                    pick = m
                    break
            _flip(a, strat[adj[a, pick]], strat, adj, nc, counts)
        else:
            b = adj[a, slot[t]]
            if strat[a] == strat[b]:
                continue
            if delta == 0.0:
                p = 0.5
            else:
                diff = _payoff(b, strat, adj, nc, table, lut, radix) - _payoff(a, strat, adj, nc, table, lut, radix)
                p = 1.0 / (1.0 + math.exp(-delta * diff))
            if unif[t] < p:
                _flip(a, strat[b], strat, adj, nc, counts)


@numba.njit(cache=True)
def _edge_counts(strat, nc, n):
    """out[j, i] = directed edge ends from i-nodes to j-nodes."""
    out = np.zeros((n, n), dtype=np.int64)
    for v in range(strat.shape[0]):
        s = strat[v]
        for j in range(n):
            out[j, s] += nc[v, j]
    return out


def fermi(delta: float, pi_a: float, pi_b: float) -> float:
    """Probability that A adopts B's strategy."""
    return 1.0 / (1.0 + math.exp(-delta * (pi_b - pi_a)))


# -- world -------------------------------------------------------------------------


class World:
    """Strategy labels on a graph plus the per-node neighbourhood counts kept in sync with them."""

    def __init__(self, graph: RegularGraph, model: PayoffModel, strategies: np.ndarray) -> None:
        if graph.k != model.k:
            raise ValueError(f"graph degree {graph.k} != game's co-player count {model.k}")
        strategies = np.asarray(strategies, dtype=np.int64)
        if strategies.shape != (graph.N,) or strategies.min() < 0 or strategies.max() >= model.n:
            raise ValueError("strategy labels must be N integers in [0, n)")
        self.graph, self.model = graph, model
        self.adj = np.ascontiguousarray(graph.adjacency, dtype=np.int64)
        self.strat = strategies.copy()
        self.table = np.ascontiguousarray(model.table)
        self.lut, self.radix = _lookup(model)
        self.counts = np.bincount(self.strat, minlength=model.n).astype(np.int64)
        self.nc = np.zeros((graph.N, model.n), dtype=np.int64)
        np.add.at(self.nc, (np.repeat(np.arange(graph.N), graph.k), self.strat[self.adj.ravel()]), 1)

    @property
    def n(self) -> int:
        return self.model.n

    def payoff(self, node: int) -> float:
        return float(_payoff(node, self.strat, self.adj, self.nc, self.table, self.lut, self.radix))

    def frequencies(self) -> np.ndarray:
        return self.counts / self.graph.N

    def edge_frequencies(self) -> np.ndarray:
        """q[j, i]: share of an i-node's edges that end at a j-node (NaN column if i is extinct)."""
        ends = _edge_counts(self.strat, self.nc, self.n).astype(float)
        with np.errstate(invalid="ignore", divide="ignore"):
            return ends / (self.graph.k * self.counts[None, :])

    def sweep(self, rule: str, delta: float, rng: np.random.Generator, updates: Optional[int] = None) -> None:
        m = self.graph.N if updates is None else updates
        focal = rng.integers(0, self.graph.N, m)
        slot = rng.integers(0, self.graph.k, m)
        unif = rng.random(m)
        _sweep(rule == "db", float(delta), focal, slot, unif, self.strat, self.adj, self.nc, self.counts, self.table, self.lut, self.radix)


def accumulated_payoff(world: World, node: int) -> float:
    return world.payoff(node)


def step_pc(world: World, rng: np.random.Generator, delta: float) -> None:
    world.sweep("pc", delta, rng, updates=1)


def step_db(world: World, rng: np.random.Generator, delta: float) -> None:
    world.sweep("db", delta, rng, updates=1)


# -- runs ---------------------------------------------------------------------------


@dataclass
class SimConfig:
    N: int
    k: int
    model: PayoffModel
    rule: str = "pc"
    delta: float = 0.02
    x0: Optional[Sequence[float]] = None
    labels: Optional[Sequence[int]] = None
    steps: int = 200
    measure_every: int = 1
    replicas: int = 20
    seed: int = 0
    graph: str = "random"
    graph_seed: Optional[int] = None  # one shared graph for all replicas when set

    def __post_init__(self) -> None:
        if self.rule not in RULES:
            raise ValueError(f"rule must be one of {RULES}, got {self.rule!r}")
        if not self.delta >= 0:
            raise ValueError(f"selection strength must be >= 0, got {self.delta}")
        if self.steps < 1 or self.measure_every < 1 or self.replicas < 1:
            raise ValueError("steps, measure_every and replicas must be >= 1")
        if self.k != self.model.k:
            raise ValueError(f"k={self.k} does not match the game's k={self.model.k}")
        if (self.x0 is None) == (self.labels is None):
            raise ValueError("give exactly one of x0 (frequencies) or labels (explicit strategies)")
        if self.x0 is not None:
            x = np.asarray(self.x0, dtype=float)
            if x.shape != (self.model.n,) or np.any(x < 0) or abs(x.sum() - 1) > 1e-9:
                raise ValueError(f"x0 must be a length-{self.model.n} simplex vector")
        if self.graph not in ("random", "ring"):
            raise ValueError("graph must be 'random' or 'ring'")

    def echo(self) -> dict:
        return {
            "N": self.N,
            "k": self.k,
            "model": self.model.name,
            "rule": self.rule,
            "delta": self.delta,
            "x0": None if self.x0 is None else [float(v) for v in self.x0],
            "labels": None if self.labels is None else "explicit",
            "steps": self.steps,
            "measure_every": self.measure_every,
            "replicas": self.replicas,
            "seed": self.seed,
            "graph": self.graph,
            "graph_seed": self.graph_seed,
        }


@dataclass
class SimResult:
    sweeps: np.ndarray  # measurement times (in sweeps)
    x: np.ndarray  # (replicas, T, n)
    q: np.ndarray  # (replicas, T, n, n), q[..., j, i]
    terminal: np.ndarray  # (replicas, n)
    seeds: list  # per replica: (master seed, spawn index)
    graphs: list = field(default_factory=list)  # per replica: (restarts, triangle_count)
    config: dict = field(default_factory=dict)

    @property
    def n(self) -> int:
        return self.x.shape[-1]

    def to_csv(self) -> str:
        n = self.n
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(
            ["replica", "sweep"]
            + [f"x{i + 1}" for i in range(n)]
            + [f"q{j + 1}|{i + 1}" for j in range(n) for i in range(n)]
        )
        for r in range(self.x.shape[0]):
            for t, sw in enumerate(self.sweeps):
                w.writerow(
                    [r, int(sw)]
                    + [repr(float(v)) for v in self.x[r, t]]
                    + [repr(float(v)) for v in self.q[r, t].ravel()]
                )
        return buf.getvalue()

    def summary(self) -> dict:
        R = self.x.shape[0]
        final = self.x[:, -1]
        se = final.std(axis=0, ddof=1) / math.sqrt(R) if R > 1 else np.full(self.n, float("nan"))
        return {
            "config": self.config,
            "replicas": R,
            "final_mean": final.mean(axis=0).tolist(),
            "final_se": se.tolist(),
            "initial_mean": self.x[:, 0].mean(axis=0).tolist(),
            "seeds": [list(s) for s in self.seeds],
            "graphs": [list(g) for g in self.graphs],
        }


def _initial_labels(cfg: SimConfig, rng: np.random.Generator) -> np.ndarray:
    if cfg.labels is not None:
        return np.asarray(cfg.labels, dtype=np.int64)
    # exact counts by largest remainder, then a random placement
    x = np.asarray(cfg.x0, dtype=float)
    raw = x * cfg.N
    counts = np.floor(raw).astype(np.int64)
    short = cfg.N - counts.sum()
    counts[np.argsort(-(raw - counts), kind="stable")[:short]] += 1
    return rng.permutation(np.repeat(np.arange(x.size), counts))


def _run_replica(cfg: SimConfig, index: int) -> tuple:
    child = np.random.SeedSequence(cfg.seed).spawn(cfg.replicas)[index]
    graph_ss, init_ss, dyn_ss = child.spawn(3)
    if cfg.graph == "ring":
        graph = ring_lattice(cfg.N, cfg.k)
    else:
        gseed = cfg.graph_seed if cfg.graph_seed is not None else int(graph_ss.generate_state(1)[0])
        graph = random_regular_graph(cfg.N, cfg.k, gseed)
    world = World(graph, cfg.model, _initial_labels(cfg, np.random.default_rng(init_ss)))
    rng = np.random.default_rng(dyn_ss)
    xs, qs = [world.frequencies()], [world.edge_frequencies()]
    for sweep in range(1, cfg.steps + 1):
        world.sweep(cfg.rule, cfg.delta, rng)
        if sweep % cfg.measure_every == 0:
            xs.append(world.frequencies())
            qs.append(world.edge_frequencies())
    return np.array(xs), np.array(qs), (graph.restarts, graph.triangle_count)


def run(cfg: SimConfig, jobs: int = 1) -> SimResult:
    if jobs > 1 and cfg.replicas > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            outs = list(pool.map(_run_replica, [cfg] * cfg.replicas, range(cfg.replicas)))
    else:
        outs = [_run_replica(cfg, r) for r in range(cfg.replicas)]
    sweeps = np.concatenate([[0], np.arange(cfg.measure_every, cfg.steps + 1, cfg.measure_every)])
    x = np.stack([o[0] for o in outs])
    q = np.stack([o[1] for o in outs])
    return SimResult(
        sweeps=sweeps,
        x=x,
        q=q,
        terminal=x[:, -1].copy(),
        seeds=[(cfg.seed, r) for r in range(cfg.replicas)],
        graphs=[o[2] for o in outs],
        config=cfg.echo(),
    )


# -- validation -----------------------------------------------------------------------


@dataclass
class ClosureReport:
    max_abs_deviation: float
    deviation: np.ndarray  # replica-mean of (time-averaged q_hat - closure), [j, i]
    z_scores: np.ndarray
    replica_max: np.ndarray  # per-replica max |deviation|
    burn_in: int

    def as_dict(self) -> dict:
        return {
            "max_abs_deviation": self.max_abs_deviation,
            "deviation": self.deviation.tolist(),
            "z_scores": self.z_scores.tolist(),
            "replica_max": self.replica_max.tolist(),
            "burn_in": self.burn_in,
        }


def validate_closure(result: SimResult, k: Optional[int] = None, burn_in: int = 20) -> ClosureReport:
    """Time-averaged measured q_hat versus the closure evaluated at the concurrent x_hat."""
    k = k if k is not None else int(result.config.get("k"))
    keep = result.sweeps >= burn_in
    if not keep.any():
        raise ValueError(f"no measurements after burn-in of {burn_in} sweeps")
    R = result.x.shape[0]
    dev = np.empty((R,) + result.q.shape[2:])
    # columns of extinct strategies are NaN throughout; they stay NaN in the report
    with warnings.catch_warnings(), np.errstate(invalid="ignore", divide="ignore"):
        warnings.simplefilter("ignore", RuntimeWarning)
        for r in range(R):
            qhat = np.nanmean(result.q[r, keep], axis=0)
            closure = np.mean([edge_closure(x, k) for x in result.x[r, keep]], axis=0)
            dev[r] = qhat - closure
        mean = np.nanmean(dev, axis=0)
        se = np.nanstd(dev, axis=0, ddof=1) / np.sqrt(np.sum(~np.isnan(dev), axis=0))
        z = np.where(se > 0, mean / se, 0.0)
        worst = float(np.nanmax(np.abs(mean)))
        replica_max = np.nanmax(np.abs(dev.reshape(R, -1)), axis=1)
    return ClosureReport(worst, mean, z, replica_max, burn_in)


@dataclass
class DriftReport:
    strategy: int
    drifts: np.ndarray  # per replica x_hat(end) - x_hat(0)
    negatives: int
    p_value: float  # one-sided binomial, H0: sign is a fair coin
    direction: str  # decreasing | increasing | undetermined
    mean: float
    se: float


def drift_sign_test(result: SimResult, strategy: int, level: float = 0.05) -> DriftReport:
    """Majority-sign test on per-replica net change of one strategy's frequency."""
    d = result.x[:, -1, strategy] - result.x[:, 0, strategy]
    nonzero = d[d != 0]
    neg = int(np.sum(nonzero < 0))
    pos = nonzero.size - neg
    p_dec = stats.binomtest(neg, nonzero.size, 0.5, alternative="greater").pvalue if nonzero.size else 1.0
    p_inc = stats.binomtest(pos, nonzero.size, 0.5, alternative="greater").pvalue if nonzero.size else 1.0
    if p_dec < level:
        direction, p = "decreasing", p_dec
    elif p_inc < level:
        direction, p = "increasing", p_inc
    else:
        direction, p = "undetermined", min(p_dec, p_inc)
    se = float(d.std(ddof=1) / math.sqrt(d.size)) if d.size > 1 else float("nan")
    return DriftReport(strategy, d, neg, float(p), direction, float(d.mean()), se)
