"""Collision checking for a robot team, with and without safety certificates.

A team configuration is a flat float array of length ``R * D``; robot ``i``
occupies ``q[i*D:(i+1)*D]``. A certificate ball (center, radius) records the
exact clearance of a checked-free point, and any point strictly inside it
is free without a new check.

Four strategies share one interface (:class:`Strategy`):

``none``
    check every robot, every time.
``basic``
    one certificate per node, a product of R balls taken from a single
    checked node. The sample is certified only if every robot is inside its
    ball; otherwise the whole team is checked.
``partial``
    each node keeps R ball references, possibly from different nodes. Only
    the robots outside their ball are checked.
``shared``
    every robot's checked position goes into one D-dimensional kd-tree, and
    any robot's ball may certify any other robot. The search for robot i
    starts at the entry of robot i of the planner's nearest node.

Only the planner's nearest node is consulted by ``basic`` and ``partial``.
``none`` and ``partial`` stop checking at the first robot found in
collision; ``basic`` always checks the whole team when uncertified and
``shared`` checks every robot without a covering certificate, so their
check fractions count those calls too.
"""
from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from typing import Sequence, Tuple

import numpy as np

from ._jit import njit
from .geometry import Point, dist, team_segment_clear
from .spatial_index import KdTree
from .workspace import Workspace

STRATEGIES = ("none", "basic", "partial", "shared")


def team_config(points: Sequence[Sequence[float]]) -> np.ndarray:
    """Flatten per-robot points into one composite configuration."""
    return np.asarray(points, dtype=float).reshape(-1).copy()


def projection(q: np.ndarray, i: int, d: int) -> np.ndarray:
    return q[i * d:(i + 1) * d]


def projections(q: np.ndarray, d: int) -> Tuple[Point, ...]:
    return tuple(tuple(map(float, row)) for row in q.reshape(-1, d))


def certify_ball(center: Sequence[float], radius: float, q: Sequence[float]) -> bool:
    """``q`` is certified by the ball iff it lies strictly inside it."""
    if radius < 0:
        raise ValueError("radius must be non-negative")
    return dist(center, q) < radius


@dataclass
class CertOutcome:
    free: bool
    checked_robots: Tuple[int, ...]
    num_robots: int
    # clearance of each robot that got a standard check this time
    radii: dict = field(default_factory=dict, repr=False)
    # robot -> ball reused from the nearest node, for certified robots
    inherited: dict = field(default_factory=dict, repr=False)
    fallback: bool = False

    @property
    def check_fraction(self) -> float:
        return len(self.checked_robots) / self.num_robots


class StandardChecker:
    """Exact clearance and edge tests against a workspace, timed.

    ``t_cc`` accumulates wall time spent inside the standard calls only.
    """

    def __init__(self, workspace: Workspace):
        self.w = workspace
        self.d = workspace.dim
        self.t_cc = 0.0
        self.point_calls = 0
        self.edge_calls = 0
        self._args = (workspace._obs_lo, workspace._obs_hi, workspace._b_lo, workspace._b_hi)

    def clearance(self, p: np.ndarray) -> float:
        t = time.perf_counter()
        c = self.w.fast_clearance(p)
        self.t_cc += time.perf_counter() - t
        self.point_calls += 1
        return c

    def edge_free(self, a: np.ndarray, b: np.ndarray) -> bool:
        t = time.perf_counter()
        ok = team_segment_clear(a, b, self.d, *self._args)
        self.t_cc += time.perf_counter() - t
        self.edge_calls += 1
        return ok


def _standard_checks(q, robots, d, checker, num_robots, short_circuit=True) -> CertOutcome:
    checked = []
    radii = {}
    free = True
    for i in robots:
        c = checker.clearance(projection(q, i, d))
        checked.append(i)
        if c <= 0.0:
            free = False
            if short_circuit:
                break
        else:
            radii[i] = c
    return CertOutcome(free, tuple(checked), num_robots, radii)


def check_none(q: np.ndarray, checker: StandardChecker, num_robots: int = None) -> CertOutcome:
    """Standard check of every robot, stopping at the first collision."""
    d = checker.d
    r = num_robots if num_robots is not None else q.shape[0] // d
    return _standard_checks(q, range(r), d, checker, r)


@njit
def _balls_cover(ball_c, ball_r, refs, q, d, out):
    """out[i] = robot i of ``q`` strictly inside ball ``refs[i]``."""
    n = 0
    for i in range(refs.shape[0]):
        b = refs[i]
        ok = False
        if b >= 0:
            s = 0.0
            for j in range(d):
                t = q[i * d + j] - ball_c[b, j]
                s += t * t
            ok = np.sqrt(s) < ball_r[b]
        out[i] = ok
        if ok:
            n += 1
    return n


def cutoff_guard(state: "Strategy", threshold: float) -> bool:
    """True once the certificate store has grown past ``threshold``."""
    return state.store_size() > threshold


class Strategy:
    """Per-run checking state. One instance serves one planner run.

    The planner calls :meth:`check` on every new configuration with the
    handle of its nearest tree node, and :meth:`commit` once the node has
    been added to the tree (node handles are consecutive from 0).
    """

    name = "none"

    def __init__(self, workspace: Workspace, num_robots: int, cutoff: float = math.inf):
        self.w = workspace
        self.r = num_robots
        self.d = workspace.dim
        self.checker = StandardChecker(workspace)
        self.cutoff = cutoff
        self.cut = False
        self.nodes = 0

    def store_size(self) -> int:
        return self.nodes

    def _tripped(self) -> bool:
        if not self.cut and cutoff_guard(self, self.cutoff):
            self.cut = True
        return self.cut

    def check(self, q: np.ndarray, p: int) -> CertOutcome:
        if self._tripped():
            out = check_none(q, self.checker, self.r)
            out.fallback = True
            return out
        return self._check(q, p)

    def _check(self, q, p):
        return check_none(q, self.checker, self.r)

    def check_root(self, q: np.ndarray) -> CertOutcome:
        return check_none(q, self.checker, self.r)

    def commit(self, node: int, q: np.ndarray, outcome: CertOutcome) -> None:
        assert node == self.nodes and outcome.free
        self.nodes += 1


class _BallStrategy(Strategy):
    """Shared bookkeeping of ``basic`` and ``partial``: a ball store plus R
    ball references per node."""

    def __init__(self, workspace, num_robots, cutoff=math.inf, capacity=1024):
        super().__init__(workspace, num_robots, cutoff)
        self.ball_c = np.empty((capacity * num_robots, self.d))
        self.ball_r = np.empty(capacity * num_robots)
        self.nballs = 0
        self.refs = np.full((capacity, num_robots), -1, dtype=np.int64)
        self._mask = np.zeros(num_robots, dtype=np.bool_)

    def _new_ball(self, center, radius) -> int:
        if self.nballs == self.ball_r.shape[0]:
            self.ball_c = np.concatenate([self.ball_c, np.empty_like(self.ball_c)])
            self.ball_r = np.concatenate([self.ball_r, np.empty_like(self.ball_r)])
        self.ball_c[self.nballs] = center
        self.ball_r[self.nballs] = radius
        self.nballs += 1
        return self.nballs - 1

    def _covered(self, q, p) -> np.ndarray:
        _balls_cover(self.ball_c, self.ball_r, self.refs[p], q, self.d, self._mask)
        return self._mask

    def ball(self, node: int, robot: int):
        """Certificate ball (center, radius) referenced by ``node`` for ``robot``."""
        b = self.refs[node, robot]
        return (self.ball_c[b].copy(), float(self.ball_r[b])) if b >= 0 else None

    def commit(self, node, q, outcome):
        super().commit(node, q, outcome)
        if node == self.refs.shape[0]:
            self.refs = np.concatenate([self.refs, np.full_like(self.refs, -1)])
        if outcome.fallback:
            return
        row = self.refs[node]
        for i, c in outcome.radii.items():
            row[i] = self._new_ball(projection(q, i, self.d), c)
        for i, src in outcome.inherited.items():
            row[i] = src


class BasicCertificate(_BallStrategy):
    name = "basic"

    def _check(self, q, p):
        mask = self._covered(q, p)
        if mask.all():
            return CertOutcome(True, (), self.r,
                               inherited={i: self.refs[p, i] for i in range(self.r)})
        return _standard_checks(q, range(self.r), self.d, self.checker, self.r,
                                short_circuit=False)


class PartialCertificate(_BallStrategy):
    name = "partial"

    def _check(self, q, p):
        mask = self._covered(q, p)
        todo = [i for i in range(self.r) if not mask[i]]
        out = _standard_checks(q, todo, self.d, self.checker, self.r)
        out.inherited = {i: self.refs[p, i] for i in range(self.r) if mask[i]}
        return out


class SharedProjection(Strategy):
    """All robots' certificates live in one D-dimensional kd-tree.

    Robots certified by an existing entry are still inserted, with radius 0:
    such entries never certify anything but serve as search seeds for the
    node's descendants.
    """

    name = "shared"

    def __init__(self, workspace, num_robots, cutoff=math.inf, capacity=1024):
        super().__init__(workspace, num_robots, cutoff)
        self.tree = KdTree(self.d, capacity * num_robots)
        self.handles = np.full((capacity, num_robots), -1, dtype=np.int64)
        self.cert_visits = 0

    def store_size(self) -> int:
        return len(self.tree)

    def _check(self, q, p):
        seeds = self.handles[p]
        todo = []
        for i in range(self.r):
            h = self.tree.seeded_first_cert(projection(q, i, self.d), int(seeds[i]))
            self.cert_visits += self.tree.last_visits
            if h is None:
                todo.append(i)
        return _standard_checks(q, todo, self.d, self.checker, self.r, short_circuit=False)

    def commit(self, node, q, outcome):
        super().commit(node, q, outcome)
        if node == self.handles.shape[0]:
            self.handles = np.concatenate([self.handles, np.full_like(self.handles, -1)])
        if outcome.fallback:
            return
        row = self.handles[node]
        for i in range(self.r):
            row[i] = self.tree.insert(projection(q, i, self.d), payload=node,
                                      radius=outcome.radii.get(i, 0.0))


def make_strategy(name: str, workspace: Workspace, num_robots: int,
                  cutoff: float = math.inf) -> Strategy:
    cls = {"none": Strategy, "basic": BasicCertificate,
           "partial": PartialCertificate, "shared": SharedProjection}.get(name)
    if cls is None:
        raise ValueError(f"unknown strategy {name!r}; choose from {STRATEGIES}")
    return cls(workspace, num_robots, cutoff)
