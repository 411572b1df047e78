"""RRT and RRT* in the composite configuration space of a robot team.

The planner owns the sampling, tree growth and edge validation; the
collision status of each new node comes from a certificate
:class:`~multicert.certificates.Strategy`. Strategies never touch the random
stream and always report the exact free/occupied status, so for a fixed seed
the tree is the same whichever strategy is used. Edges are always validated
with the exact segment test.
"""
from __future__ import annotations

import math
import time
from dataclasses import dataclass, replace
from typing import List, Optional, Tuple, Union

import numpy as np

from .certificates import CertOutcome, Strategy, make_strategy
from .geometry import flat_dist
from .metrics import TrialLog
from .spatial_index import KdTree
from .workspace import Workspace

PLANNERS = ("rrt", "rrtstar")


@dataclass(frozen=True)
class PlannerParams:
    """Planner settings. ``None`` fields are filled in by :meth:`resolve`."""

    iterations: int = 10_000
    step_size: Optional[float] = None
    goal_bias: float = 0.05
    rrtstar_gamma: Optional[float] = None
    rng_seed: int = 0
    edge_resolution: Optional[float] = None

    def resolve(self, w: Workspace, num_robots: int) -> "PlannerParams":
        lo, hi = np.array(w.bounds.lo), np.array(w.bounds.hi)
        d = num_robots * w.dim
        diag = math.sqrt(num_robots) * float(np.linalg.norm(hi - lo))
        eps = self.step_size if self.step_size is not None else 0.05 * diag
        gamma = self.rrtstar_gamma
        if gamma is None:
            volume = float(np.prod(hi - lo)) ** num_robots
            gamma = 2.0 * (1.0 + 1.0 / d) ** (1.0 / d) * volume ** (1.0 / d)
        res = self.edge_resolution if self.edge_resolution is not None else eps / 10
        out = replace(self, step_size=eps, rrtstar_gamma=gamma, edge_resolution=res)
        out.validate()
        return out

    def validate(self):
        if self.iterations < 0:
            raise ValueError("iterations must be >= 0")
        if not 0.0 <= self.goal_bias <= 1.0:
            raise ValueError("goal_bias must be in [0, 1]")
        for name in ("step_size", "rrtstar_gamma", "edge_resolution"):
            v = getattr(self, name)
            if v is not None and not v > 0:
                raise ValueError(f"{name} must be positive")
        if self.rng_seed < 0:
            raise ValueError("rng_seed must be unsigned")


@dataclass
class IterationEvent:
    iteration: int
    check_fraction: float
    accepted: bool
    node: int
    outcome: CertOutcome


class PlanTree:
    """Tree of team configurations; node ``i`` is the ``i``-th kd-tree entry."""

    def __init__(self, dim: int, capacity: int = 1024):
        self.kd = KdTree(dim, capacity)
        self.parent: List[int] = []
        self.cost: List[float] = []
        self.edge_len: List[float] = []
        self.children: List[List[int]] = []

    def __len__(self):
        return len(self.parent)

    def add(self, q: np.ndarray, parent: int, edge_len: float) -> int:
        node = self.kd.insert(q)
        self.parent.append(parent)
        self.edge_len.append(edge_len)
        self.cost.append(0.0 if parent < 0 else self.cost[parent] + edge_len)
        self.children.append([])
        if parent >= 0:
            self.children[parent].append(node)
        return node

    def config(self, i: int) -> np.ndarray:
        return self.kd.pts[i]

    def configs(self) -> np.ndarray:
        return self.kd.points()

    def reparent(self, node: int, parent: int, edge_len: float) -> None:
        self.children[self.parent[node]].remove(node)
        self.parent[node] = parent
        self.edge_len[node] = edge_len
        self.children[parent].append(node)
        stack = [node]
        while stack:
            x = stack.pop()
            self.cost[x] = self.cost[self.parent[x]] + self.edge_len[x]
            stack.extend(self.children[x])


def goal_cost(tree: PlanTree, goal: np.ndarray, tol: float = 0.0) -> float:
    """Cheapest tree cost among nodes within ``tol`` of ``goal``; ``inf`` if none."""
    pts = tree.configs()
    d = np.sqrt(((pts - np.asarray(goal, dtype=float)) ** 2).sum(axis=1))
    hits = np.flatnonzero(d <= tol)
    if hits.size == 0:
        return math.inf
    return min(tree.cost[i] for i in hits)

def sample(w: Workspace, num_robots: int, params: PlannerParams, rng: np.random.Generator,
           goal: Optional[np.ndarray] = None) -> np.ndarray:
    """Uniform team configuration over ``bounds^R``, or the team goal with
    probability ``goal_bias``."""
    if goal is None:
        goal = np.array(w.goals[:num_robots], dtype=float).reshape(-1)
    if rng.random() < params.goal_bias:
        return goal.copy()
    lo = np.tile(w.bounds.lo, num_robots)
    hi = np.tile(w.bounds.hi, num_robots)
    return lo + (hi - lo) * rng.random(lo.shape[0])


def steer(src: np.ndarray, toward: np.ndarray, eps: float) -> np.ndarray:
    """``toward`` if within ``eps`` of ``src``, else the point ``eps`` along
    the straight line to it."""
    d = flat_dist(src, toward)
    if d <= eps:
        return np.array(toward, dtype=float)
    return src + (toward - src) * (eps / d)


class Planner:
    """One RRT or RRT* run over a fixed workspace and strategy.

    Parameters
    ----------
    workspace : Workspace
        Environment; its first ``num_robots`` starts/goals are used.
    num_robots : int
        Team size R.
    strategy : str or Strategy
        Certificate strategy name, or an already built instance.
    params : PlannerParams
    star : bool
        Run RRT* (choose-parent and rewiring) instead of RRT.
    cutoff : float
        Certificate store size after which the strategy falls back to
        standard checks.
    """

    def __init__(self, workspace: Workspace, num_robots: int,
                 strategy: Union[str, Strategy] = "none",
                 params: PlannerParams = PlannerParams(), star: bool = False,
                 cutoff: float = math.inf):
        if not 1 <= num_robots <= workspace.num_robots:
            raise ValueError(f"workspace has {workspace.num_robots} robots, asked for {num_robots}")
        self.w = workspace
        self.r = num_robots
        self.dim = num_robots * workspace.dim
        self.params = params.resolve(workspace, num_robots)
        self.star = star
        if isinstance(strategy, str):
            strategy = make_strategy(strategy, workspace, num_robots, cutoff)
        self.strategy = strategy
        self.checker = strategy.checker
        self.rng = np.random.default_rng(self.params.rng_seed)
        self.goal = np.array(workspace.goals[:num_robots], dtype=float).reshape(-1)
        self.tree = PlanTree(self.dim, max(self.params.iterations + 1, 16))
        self.iteration = 0

        start = np.array(workspace.starts[:num_robots], dtype=float).reshape(-1)
        out = strategy.check_root(start)
        if not out.free:
            raise ValueError("team start configuration is in collision")
        root = self.tree.add(start, -1, 0.0)
        strategy.commit(root, start, out)

    def near_radius(self) -> float:
        n = len(self.tree)
        if n < 2:
            return 0.0
        p = self.params
        return min(p.step_size, p.rrtstar_gamma * (math.log(n) / n) ** (1.0 / self.dim))

    def step(self) -> IterationEvent:
        self.iteration += 1
        tree = self.tree
        x = sample(self.w, self.r, self.params, self.rng, self.goal)
        p, _ = tree.kd.nearest(x)
        q = steer(tree.config(p), x, self.params.step_size)
        out = self.strategy.check(q, p)
        node = -1
        if out.free and self.checker.edge_free(tree.config(p), q):
            if self.star:
                node = self._extend_star(q, p, out)
            else:
                node = tree.add(q, p, flat_dist(tree.config(p), q))
                self.strategy.commit(node, q, out)
        return IterationEvent(self.iteration, out.check_fraction, node >= 0, node, out)

    def _extend_star(self, q, p, out) -> int:
        tree = self.tree
        near = tree.kd.near(q, self.near_radius())
        lens = {c: flat_dist(tree.config(c), q) for c in near}
        lens.setdefault(p, flat_dist(tree.config(p), q))
        best, best_cost = p, tree.cost[p] + lens[p]
        for cost, c in sorted((tree.cost[c] + lens[c], c) for c in near if c != p):
            if cost >= best_cost:
                break
            if self.checker.edge_free(tree.config(c), q):
                best, best_cost = c, cost
                break
        node = tree.add(q, best, lens[best])
        self.strategy.commit(node, q, out)
        for c in near:
            if c == best:
                continue
            if best_cost + lens[c] < tree.cost[c] and self.checker.edge_free(q, tree.config(c)):
                tree.reparent(c, node, lens[c])
        return node

    def run(self) -> Tuple[PlanTree, TrialLog]:
        log = TrialLog(self.params.iterations)
        t0 = time.perf_counter()
        cc0 = self.checker.t_cc
        for _ in range(self.params.iterations):
            ev = self.step()
            log.append(ev.check_fraction, ev.accepted, ev.node,
                       time.perf_counter() - t0, self.checker.t_cc - cc0)
        return self.tree, log


def run(params: PlannerParams, workspace: Workspace, strategy: Union[str, Strategy] = "none",
        planner: str = "rrt", num_robots: Optional[int] = None,
        cutoff: float = math.inf) -> Tuple[PlanTree, TrialLog]:
    """Run ``params.iterations`` iterations; returns the tree and the per-iteration log."""
    if planner not in PLANNERS:
        raise ValueError(f"unknown planner {planner!r}; choose from {PLANNERS}")
    r = workspace.num_robots if num_robots is None else num_robots
    return Planner(workspace, r, strategy, params, star=planner == "rrtstar",
                   cutoff=cutoff).run()
