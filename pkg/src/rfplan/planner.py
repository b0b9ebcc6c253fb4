"""RRT* with a pluggable state sampler and Euclidean path length as cost.

Sample accounting follows the benchmark protocol: ``samples_drawn`` counts
every state taken from the sampler, including baseline draws rejected against
the free space, while ``feasible_samples`` counts only those that were free.
Goal-biased iterations count as one drawn and one feasible sample.
"""
from dataclasses import dataclass, field, replace
import math
import time

import numpy as np

from . import _kernels
from .errors import ContractViolation, PlanningError
from .kde import unit_ball_volume
from .sampler import RandomStream, generate

TERMINATIONS = ("first_feasible", "cost_below", "sample_budget")
_BATCH = 256


def path_cost(path):
    """Sum of segment lengths of a polyline."""
    path = np.asarray(path, dtype=float)
    if path.ndim != 2 or len(path) < 2:
        raise ContractViolation("a path needs at least two points")
    return float(np.sum(np.linalg.norm(np.diff(path, axis=0), axis=1)))


def default_gamma(workspace):
    """1.1 x the asymptotic-optimality lower bound on the RRT* radius constant."""
    p = workspace.dimension
    gamma_star = 2 * (1 + 1 / p) ** (1 / p) * (workspace.volume / unit_ball_volume(p)) ** (1 / p)
    return 1.1 * gamma_star


@dataclass(frozen=True)
class PlannerParams:
    """Steering step, near-radius constant, goal tolerance and goal bias.

    ``None`` fields are filled by ``resolve``: step = 5 % of the free1 bounding
    box diagonal, gamma = ``default_gamma``, goal tolerance = step / 2.
    """

    step: float = None
    gamma: float = None
    goal_tolerance: float = None
    goal_bias: float = 0.05

    def resolve(self, workspace):
        lo, hi = workspace.bbox
        step = self.step or 0.05 * float(np.linalg.norm(hi - lo))
        gamma = self.gamma or default_gamma(workspace)
        tol = self.goal_tolerance if self.goal_tolerance is not None else step / 2
        if step <= 0 or gamma <= 0 or tol < 0 or not 0 <= self.goal_bias < 1:
            raise ContractViolation(f"invalid planner parameters {self}")
        return replace(self, step=float(step), gamma=float(gamma), goal_tolerance=float(tol))

    @classmethod
    def from_dict(cls, doc):
        return cls(**{k: doc[k] for k in ("step", "gamma", "goal_tolerance", "goal_bias") if k in doc})


@dataclass(frozen=True)
class Termination:
    kind: str = "first_feasible"
    threshold: float = None
    budget: int = None
    max_samples: int = None
    max_time: float = None

    def __post_init__(self):
        if self.kind not in TERMINATIONS:
            raise ContractViolation(f"termination must be one of {TERMINATIONS}")
        if self.kind == "cost_below" and not (self.threshold and self.threshold > 0):
            raise ContractViolation("cost_below needs a positive threshold")
        if self.kind == "sample_budget" and self.budget is None:
            raise ContractViolation("sample_budget needs a budget")
        if self.max_samples is None and self.max_time is None and self.budget is None:
            raise ContractViolation("set at least one of max_samples, max_time or budget")

    @property
    def sample_cap(self):
        caps = [c for c in (self.max_samples, self.budget) if c is not None]
        return min(caps) if caps else math.inf


@dataclass(eq=False)
class PlanResult:
    path: np.ndarray
    cost: float
    samples_drawn: int
    feasible_samples: int
    nodes: int
    wall_time: float
    seed: int
    cost_history: list = field(default_factory=list)
    tree: object = field(default=None, repr=False)

    @property
    def solved(self):
        return self.path is not None


class Tree:
    """Growable node store; the coordinate buffer doubles as the spatial index
    scanned by the compiled nearest and near kernels."""

    def __init__(self, root, capacity=1024):
        root = np.asarray(root, dtype=float)
        self.points = np.empty((capacity, len(root)))
        self.parent = np.empty(capacity, dtype=np.int64)
        self.cost = np.empty(capacity)
        self.children = [[]]
        self.points[0] = root
        self.parent[0] = -1
        self.cost[0] = 0.0
        self.n = 1

    def __len__(self):
        return self.n

    def add(self, x, parent, cost):
        if self.n == len(self.cost):
            grow = len(self.cost)
            self.points = np.concatenate([self.points, np.empty_like(self.points[:grow])])
            self.parent = np.concatenate([self.parent, np.empty(grow, dtype=np.int64)])
            self.cost = np.concatenate([self.cost, np.empty(grow)])
        k = self.n
        self.points[k] = x
        self.parent[k] = parent
        self.cost[k] = cost
        self.children.append([])
        self.children[parent].append(k)
        self.n += 1
        return k

    def reparent(self, j, new_parent, new_cost):
        self.children[self.parent[j]].remove(j)
        self.children[new_parent].append(j)
        self.parent[j] = new_parent
        delta = new_cost - self.cost[j]
        stack = [j]
        while stack:
            v = stack.pop()
            self.cost[v] += delta
            stack.extend(self.children[v])

    def path_to(self, i):
        out = []
        while i >= 0:
            out.append(self.points[i])
            i = self.parent[i]
        return np.array(out[::-1])

    def recomputed_costs(self):
        """Cost-to-come of every node re-derived from parent pointers."""
        costs = np.zeros(self.n)
        order = [0]
        for v in order:
            for c in self.children[v]:
                costs[c] = costs[v] + float(np.linalg.norm(self.points[c] - self.points[v]))
                order.append(c)
        if len(order) != self.n:
            raise AssertionError("parent pointers do not form a tree rooted at node 0")
        return costs


class _Draws:
    """Buffered sampler output, one state at a time, with free-space flags."""

    def __init__(self, spec, workspace, stream):
        self.spec = spec
        self.workspace = workspace
        self.stream = stream
        self.pos = _BATCH
        self.points = self.ok = None

    def next(self):
        if self.pos == _BATCH:
            batch = generate(self.spec, _BATCH, self.stream)
            self.points = batch.points
            if self.spec.rejection_free:
                self.ok = np.ones(_BATCH, dtype=bool)
            else:
                self.ok = batch.from_kde | self.workspace.contains_many(batch.points)
            self.pos = 0
        k = self.pos
        self.pos += 1
        return self.points[k], self.ok[k]


class _Coins:
    def __init__(self, stream):
        self.gen = stream.generator
        self.pos = _BATCH
        self.buf = None

    def next(self):
        if self.pos == _BATCH:
            self.buf = self.gen.random(_BATCH)
            self.pos = 0
        self.pos += 1
        return self.buf[self.pos - 1]


def plan(workspace, start, goal, sampler, termination, params=None, rng=0, keep_tree=False):
    """Run RRT* from ``start`` to ``goal`` in ``workspace`` drawing states from ``sampler``.

    The near radius is ``min(gamma * (log n / n)^(1/p), step)``. A goal
    connection is recorded for any node within the goal tolerance whose
    straight segment to the goal is free; the returned path ends exactly at
    the goal. The best cost never increases over iterations.
    """
    t_start = time.perf_counter()
    stream = rng if isinstance(rng, RandomStream) else RandomStream(rng)
    start = np.asarray(start, dtype=float)
    goal = np.asarray(goal, dtype=float)
    for name, pt in (("start", start), ("goal", goal)):
        if pt.shape != (workspace.dimension,) or not workspace.contains(pt):
            raise PlanningError(f"{name} {pt.tolist()} is not in the free space")
    if np.array_equal(start, goal):
        return PlanResult(np.array([start, goal]), 0.0, 0, 0, 1, time.perf_counter() - t_start,
                          stream.seed, [(0, 0.0)])
    params = (params or PlannerParams()).resolve(workspace)
    eta, gamma, tol, beta = params.step, params.gamma, params.goal_tolerance, params.goal_bias
    p = workspace.dimension
    draws = _Draws(sampler, workspace, stream.child(0))
    coins = _Coins(stream.child(1))
    nearest_index = _kernels.nearest_index
    near_indices = _kernels.near_indices
    segs_free = workspace.segments_free_from

    tree = Tree(start)
    goal_nodes = []
    goal_gap = []
    best = math.inf
    history = []
    drawn = feasible = 0
    cap = termination.sample_cap
    kind = termination.kind
    threshold = termination.threshold
    max_time = termination.max_time

    while True:
        if kind == "first_feasible" and best < math.inf:
            break
        if kind == "cost_below" and best < threshold:
            break
        if drawn >= cap:
            break
        if max_time is not None and drawn % 64 == 0 and time.perf_counter() - t_start > max_time:
            break
        drawn += 1
        if beta and coins.next() < beta:
            s = goal
        else:
            s, ok = draws.next()
            if not ok:
                continue
        feasible += 1

        pts = tree.points
        i = nearest_index(pts, tree.n, s)
        xi = pts[i]
        d = math.sqrt(float(np.dot(s - xi, s - xi)))
        if d == 0.0:
            continue
        new = s if d <= eta else xi + (s - xi) * (eta / d)
        if not segs_free(xi, new[None, :])[0]:
            continue
        n = tree.n
        radius = min(gamma * (math.log(n + 1) / (n + 1)) ** (1 / p), eta)
        near = near_indices(pts, n, new, radius)
        near = near[near != i]
        free = segs_free(new, pts[near]) if len(near) else np.zeros(0, dtype=bool)
        near = np.concatenate([[i], near[free]])
        dists = np.sqrt(np.einsum("ij,ij->i", pts[near] - new, pts[near] - new))
        via = tree.cost[near] + dists
        k = int(np.argmin(via))
        parent = int(near[k])
        c_new = float(via[k])
        idx = tree.add(new, parent, c_new)

        costs = tree.cost
        for j, dj in zip(near.tolist(), dists.tolist()):
            if j != parent and c_new + dj < costs[j] - 1e-12:
                tree.reparent(j, idx, c_new + dj)
                costs = tree.cost

        dg = math.sqrt(float(np.dot(new - goal, new - goal)))
        if dg <= tol and (dg == 0.0 or segs_free(new, goal[None, :])[0]):
            goal_nodes.append(idx)
            goal_gap.append(dg)
        if goal_nodes:
            cand = float(np.min(tree.cost[goal_nodes] + np.asarray(goal_gap)))
            if cand < best:
                best = cand
                history.append((drawn, best))

    path = None
    if goal_nodes:
        cand = tree.cost[goal_nodes] + np.asarray(goal_gap)
        k = int(np.argmin(cand))
        path = tree.path_to(goal_nodes[k])
        if goal_gap[k] > 0:
            path = np.vstack([path, goal])
    return PlanResult(path, best, drawn, feasible, tree.n, time.perf_counter() - t_start,
                      stream.seed, history, tree if keep_tree else None)
