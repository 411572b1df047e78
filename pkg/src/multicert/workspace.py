"""The shared planar environment robots move in.

A workspace is a bounding rectangle, a list of rectangular obstacles and
one start/goal pair per robot. The bounds act as an obstacle: clearance is
capped by the distance to the nearest bounds face, and touching either the
bounds or an obstacle counts as collision.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import List, Sequence, Tuple

import numpy as np

from .geometry import (
    Point,
    Rect,
    Segment,
    as_point,
    dist_point_rect,
    point_clearance,
    segment_clear,
    segment_intersects_rect,
)

R_MAX = 5


class OutOfBounds(ValueError):
    pass


class GenerationFailure(RuntimeError):
    pass


class WorkspaceParseError(ValueError):
    """Malformed workspace file. ``where`` names the offending line or field."""

    def __init__(self, where: str, msg: str):
        super().__init__(f"{where}: {msg}")
        self.where = where


@dataclass(frozen=True)
class Workspace:
    bounds: Rect
    obstacles: Tuple[Rect, ...] = ()
    starts: Tuple[Point, ...] = ()
    goals: Tuple[Point, ...] = ()

    # packed copies for the compiled kernels
    _obs_lo: np.ndarray = field(init=False, repr=False, compare=False)
    _obs_hi: np.ndarray = field(init=False, repr=False, compare=False)
    _b_lo: np.ndarray = field(init=False, repr=False, compare=False)
    _b_hi: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        obstacles = tuple(self.obstacles)
        starts = tuple(as_point(p) for p in self.starts)
        goals = tuple(as_point(p) for p in self.goals)
        object.__setattr__(self, "obstacles", obstacles)
        object.__setattr__(self, "starts", starts)
        object.__setattr__(self, "goals", goals)
        d = self.bounds.dim
        if any(o.dim != d for o in obstacles):
            raise ValueError("obstacle dimension differs from bounds")
        if len(starts) != len(goals):
            raise ValueError(f"{len(starts)} starts but {len(goals)} goals")
        obs_lo = np.array([o.lo for o in obstacles], dtype=float).reshape(-1, d)
        obs_hi = np.array([o.hi for o in obstacles], dtype=float).reshape(-1, d)
        object.__setattr__(self, "_obs_lo", obs_lo)
        object.__setattr__(self, "_obs_hi", obs_hi)
        object.__setattr__(self, "_b_lo", np.array(self.bounds.lo, dtype=float))
        object.__setattr__(self, "_b_hi", np.array(self.bounds.hi, dtype=float))

    @property
    def dim(self) -> int:
        return self.bounds.dim

    @property
    def num_robots(self) -> int:
        return len(self.starts)

    def restrict(self, num_robots: int) -> "Workspace":
        """Keep robots ``0..num_robots-1``; the rest leave the workspace."""
        if not 1 <= num_robots <= self.num_robots:
            raise ValueError(f"need 1..{self.num_robots} robots, got {num_robots}")
        return Workspace(self.bounds, self.obstacles,
                         self.starts[:num_robots], self.goals[:num_robots])

    # -- queries ---------------------------------------------------------

    def clearance(self, p: Sequence[float]) -> float:
        """Distance from ``p`` to the nearest obstacle or bounds face."""
        if not self.bounds.contains(p):
            raise OutOfBounds(f"{tuple(p)} outside {self.bounds}")
        return max(self.fast_clearance(np.asarray(p, dtype=float)), 0.0)

    def fast_clearance(self, p: np.ndarray) -> float:
        """Kernel clearance of an array point; no bounds check, may be <= 0."""
        return point_clearance(p, self._obs_lo, self._obs_hi, self._b_lo, self._b_hi)

    def point_free(self, p: Sequence[float]) -> bool:
        if len(p) != self.dim:
            return False
        return self.fast_clearance(np.asarray(p, dtype=float)) > 0.0

    def segment_free(self, s: Segment) -> bool:
        return bool(segment_clear(np.asarray(s.a, dtype=float), np.asarray(s.b, dtype=float),
                                  self._obs_lo, self._obs_hi, self._b_lo, self._b_hi))

    def brute_clearance(self, p: Sequence[float]) -> float:
        """Reference clearance from a plain loop over the scalar geometry."""
        best = min(min(c - l, h - c) for c, l, h in zip(p, self.bounds.lo, self.bounds.hi))
        for o in self.obstacles:
            best = min(best, dist_point_rect(p, o))
        return max(best, 0.0)

    def brute_segment_free(self, s: Segment) -> bool:
        inside = all(
            l < c < h for q in (s.a, s.b) for c, l, h in zip(q, self.bounds.lo, self.bounds.hi)
        )
        return inside and not any(segment_intersects_rect(s, o) for o in self.obstacles)

    # -- validation ------------------------------------------------------

    def problems(self) -> List[str]:
        """Every violated invariant, as human-readable strings."""
        out = []
        for name, pts in (("start", self.starts), ("goal", self.goals)):
            for i, p in enumerate(pts):
                if len(p) != self.dim:
                    out.append(f"{name} {i} has dimension {len(p)}")
                    continue
                if not all(l < c < h for c, l, h in zip(p, self.bounds.lo, self.bounds.hi)):
                    out.append(f"{name} {i} not strictly inside bounds")
                elif self.brute_clearance(p) <= 0.0:
                    out.append(f"{name} {i} in collision")
        return out

    def validate(self) -> "Workspace":
        problems = self.problems()
        if problems:
            raise ValueError("invalid workspace: " + "; ".join(problems))
        return self


# -- generation --------------------------------------------------------------


@dataclass(frozen=True)
class GenSpec:
    seed: int = 0
    num_obstacles: int = 40
    obstacle_size_range: Tuple[float, float] = (0.02, 0.10)
    num_robots: int = R_MAX
    # keeps starts/goals visibly clear of obstacles; any value > 0 satisfies
    # the workspace invariant
    min_clearance: float = 0.02

    def __post_init__(self):
        lo, hi = self.obstacle_size_range
        if not 0 < lo <= hi < 1:
            raise ValueError(f"need 0 < min <= max < 1, got {self.obstacle_size_range}")
        if self.seed < 0:
            raise ValueError("seed must be unsigned")
        if self.num_obstacles < 0:
            raise ValueError("num_obstacles must be >= 0")
        if not 1 <= self.num_robots <= R_MAX:
            raise ValueError(f"num_robots must be in [1, {R_MAX}]")


MAX_REJECTION_ROUNDS = 10_000


def generate(spec: GenSpec, bounds: Rect = Rect((0.0, 0.0), (1.0, 1.0))) -> Workspace:
    """Random workspace, a pure function of ``spec``.

    Starts and goals are drawn first; each obstacle is then redrawn until it
    keeps every start and goal at least ``spec.min_clearance`` away.
    """
    rng = np.random.default_rng(spec.seed)
    lo = np.array(bounds.lo)
    hi = np.array(bounds.hi)
    extent = hi - lo
    margin = spec.min_clearance * extent

    def interior_point():
        return tuple(float(v) for v in rng.uniform(lo + margin, hi - margin))

    starts = [interior_point() for _ in range(spec.num_robots)]
    goals = [interior_point() for _ in range(spec.num_robots)]
    anchors = starts + goals

    obstacles = []
    rounds = 0
    while len(obstacles) < spec.num_obstacles:
        rounds += 1
        if rounds > MAX_REJECTION_ROUNDS:
            raise GenerationFailure(
                f"placed {len(obstacles)}/{spec.num_obstacles} obstacles in "
                f"{MAX_REJECTION_ROUNDS} rounds"
            )
        size = rng.uniform(*spec.obstacle_size_range, size=len(lo)) * extent
        corner = rng.uniform(lo, hi - size)
        rect = Rect(tuple(float(v) for v in corner), tuple(float(v) for v in corner + size))
        if all(dist_point_rect(a, rect) > spec.min_clearance for a in anchors):
            obstacles.append(rect)
    return Workspace(bounds, tuple(obstacles), tuple(starts), tuple(goals)).validate()


def default_workspace(seed: int = 0) -> Workspace:
    return generate(GenSpec(seed=seed))


# -- file format -------------------------------------------------------------


def _num(x: float) -> str:
    s = format(x, ".17g")
    # JSON reads "-0" as the integer 0
    return "-0.0" if s == "-0" else s


def _vec(p: Sequence[float]) -> str:
    return "[" + ", ".join(_num(c) for c in p) + "]"


def _rect(r: Rect) -> str:
    return '{"lo": ' + _vec(r.lo) + ', "hi": ' + _vec(r.hi) + "}"


def write_workspace(w: Workspace) -> bytes:
    lines = ["{", '  "bounds": ' + _rect(w.bounds) + ","]
    lines.append('  "obstacles": [')
    lines.append(",\n".join("    " + _rect(o) for o in w.obstacles))
    lines.append("  ],")
    lines.append('  "starts": [' + ", ".join(_vec(p) for p in w.starts) + "],")
    lines.append('  "goals": [' + ", ".join(_vec(p) for p in w.goals) + "]")
    lines.append("}")
    return ("\n".join(l for l in lines if l) + "\n").encode("utf-8")


def _parse_vec(v, where, dim=None):
    if not isinstance(v, list) or not all(
        isinstance(c, (int, float)) and not isinstance(c, bool) for c in v
    ):
        raise WorkspaceParseError(where, f"expected a list of numbers, got {v!r}")
    if dim is not None and len(v) != dim:
        raise WorkspaceParseError(where, f"expected {dim} coordinates, got {len(v)}")
    try:
        return as_point(v)
    except ValueError as e:
        raise WorkspaceParseError(where, str(e)) from None


def _parse_rect(v, where, dim=None):
    if not isinstance(v, dict) or set(v) != {"lo", "hi"}:
        raise WorkspaceParseError(where, "expected an object with exactly 'lo' and 'hi'")
    lo = _parse_vec(v["lo"], where + ".lo", dim)
    hi = _parse_vec(v["hi"], where + ".hi", len(lo))
    try:
        return Rect(lo, hi)
    except ValueError as e:
        raise WorkspaceParseError(where, str(e)) from None


def read_workspace(data: bytes) -> Workspace:
    try:
        doc = json.loads(data.decode("utf-8"))
    except UnicodeDecodeError as e:
        raise WorkspaceParseError(f"byte {e.start}", "not UTF-8") from None
    except json.JSONDecodeError as e:
        raise WorkspaceParseError(f"line {e.lineno} column {e.colno}", e.msg) from None
    if not isinstance(doc, dict):
        raise WorkspaceParseError("document", "expected a JSON object")
    missing = {"bounds", "obstacles", "starts", "goals"} - set(doc)
    if missing:
        raise WorkspaceParseError("document", f"missing fields {sorted(missing)}")
    bounds = _parse_rect(doc["bounds"], "bounds")
    d = bounds.dim
    lists = {}
    for key in ("obstacles", "starts", "goals"):
        if not isinstance(doc[key], list):
            raise WorkspaceParseError(key, "expected a list")
        lists[key] = doc[key]
    obstacles = tuple(_parse_rect(o, f"obstacles[{i}]", d) for i, o in enumerate(lists["obstacles"]))
    starts = tuple(_parse_vec(p, f"starts[{i}]", d) for i, p in enumerate(lists["starts"]))
    goals = tuple(_parse_vec(p, f"goals[{i}]", d) for i, p in enumerate(lists["goals"]))
    if len(starts) != len(goals):
        raise WorkspaceParseError("goals", f"{len(starts)} starts but {len(goals)} goals")
    return Workspace(bounds, obstacles, starts, goals)


def load_workspace(path) -> Workspace:
    with open(path, "rb") as f:
        return read_workspace(f.read())


def save_workspace(w: Workspace, path) -> None:
    with open(path, "wb") as f:
        f.write(write_workspace(w))
