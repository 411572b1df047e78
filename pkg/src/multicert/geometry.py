"""Points, segments and axis-aligned rectangles.

Points are plain tuples of floats. All comparisons are exact; the only
rounding is the one inherent in double precision arithmetic. Distances are
computed as ``sqrt`` of a left-to-right sum of squared coordinate
differences everywhere in the package (scalar helpers here and the compiled
kernels), so different code paths agree bit for bit.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence, Tuple

import numpy as np

from ._jit import njit

Point = Tuple[float, ...]


class DimensionMismatch(ValueError):
    """Raised when two geometric objects do not live in the same space."""


def as_point(coords: Sequence[float]) -> Point:
    p = tuple(float(c) for c in coords)
    if not all(math.isfinite(c) for c in p):
        raise ValueError(f"point coordinates must be finite, got {p}")
    return p


def _same_dim(a: Sequence[float], b: Sequence[float]) -> None:
    if len(a) != len(b):
        raise DimensionMismatch(f"dimension {len(a)} != {len(b)}")


@dataclass(frozen=True)
class Rect:
    """Closed axis-aligned box ``[lo, hi]``."""

    lo: Point
    hi: Point

    def __post_init__(self):
        object.__setattr__(self, "lo", as_point(self.lo))
        object.__setattr__(self, "hi", as_point(self.hi))
        _same_dim(self.lo, self.hi)
        if any(l > h for l, h in zip(self.lo, self.hi)):
            raise ValueError(f"Rect corners out of order: lo={self.lo} hi={self.hi}")

    @property
    def dim(self) -> int:
        return len(self.lo)

    def contains(self, p: Sequence[float]) -> bool:
        _same_dim(p, self.lo)
        return all(l <= c <= h for l, c, h in zip(self.lo, p, self.hi))

    def contains_rect(self, other: "Rect") -> bool:
        return self.contains(other.lo) and self.contains(other.hi)


@dataclass(frozen=True)
class Segment:
    a: Point
    b: Point

    def __post_init__(self):
        object.__setattr__(self, "a", as_point(self.a))
        object.__setattr__(self, "b", as_point(self.b))
        _same_dim(self.a, self.b)

    def length(self) -> float:
        return dist(self.a, self.b)


def squared_dist(a: Sequence[float], b: Sequence[float]) -> float:
    _same_dim(a, b)
    s = 0.0
    for x, y in zip(a, b):
        d = x - y
        s += d * d
    return s


def dist(a: Sequence[float], b: Sequence[float]) -> float:
    """Euclidean distance between two points of equal dimension."""
    return math.sqrt(squared_dist(a, b))


def dist_point_rect(p: Sequence[float], r: Rect) -> float:
    """Minimum distance from ``p`` to the closed rectangle ``r`` (0 inside)."""
    _same_dim(p, r.lo)
    s = 0.0
    for c, l, h in zip(p, r.lo, r.hi):
        g = max(l - c, 0.0, c - h)
        s += g * g
    return math.sqrt(s)


def segment_intersects_rect(s: Segment, r: Rect) -> bool:
    """Slab-clipping test: does any point of the closed segment lie in ``r``?"""
    _same_dim(s.a, r.lo)
    t0, t1 = 0.0, 1.0
    for a, b, l, h in zip(s.a, s.b, r.lo, r.hi):
        d = b - a
        if d == 0.0:
            if a < l or a > h:
                return False
            continue
        ta = (l - a) / d
        tb = (h - a) / d
        if ta > tb:
            ta, tb = tb, ta
        if ta > t0:
            t0 = ta
        if tb < t1:
            t1 = tb
        if t0 > t1:
            return False
    return True


# --------------------------------------------------------------------------
# Compiled batch kernels. Same arithmetic as the scalar functions above.
# Obstacles are passed as (M, D) arrays of lower and upper corners.


@njit
def point_clearance(p, obs_lo, obs_hi, b_lo, b_hi):
    """Clearance of ``p``: min of distance to each obstacle and to the bounds
    faces. Non-positive when ``p`` is on or outside the bounds."""
    d = p.shape[0]
    best = np.inf
    for k in range(d):
        face = p[k] - b_lo[k]
        if face < best:
            best = face
        face = b_hi[k] - p[k]
        if face < best:
            best = face
    if best <= 0.0:
        return best
    for j in range(obs_lo.shape[0]):
        s = 0.0
        for k in range(d):
            g = obs_lo[j, k] - p[k]
            if g < 0.0:
                g = 0.0
            g2 = p[k] - obs_hi[j, k]
            if g2 > g:
                g = g2
            s += g * g
        r = np.sqrt(s)
        if r < best:
            best = r
            if best == 0.0:
                return 0.0
    return best


@njit
def _segment_hits_box(a, b, lo, hi):
    t0 = 0.0
    t1 = 1.0
    for k in range(a.shape[0]):
        d = b[k] - a[k]
        if d == 0.0:
            if a[k] < lo[k] or a[k] > hi[k]:
                return False
            continue
        ta = (lo[k] - a[k]) / d
        tb = (hi[k] - a[k]) / d
        if ta > tb:
            ta, tb = tb, ta
        if ta > t0:
            t0 = ta
        if tb < t1:
            t1 = tb
        if t0 > t1:
            return False
    return True


@njit
def _strictly_inside(p, b_lo, b_hi):
    for k in range(p.shape[0]):
        if not (b_lo[k] < p[k] < b_hi[k]):
            return False
    return True


@njit
def segment_clear(a, b, obs_lo, obs_hi, b_lo, b_hi):
    """True iff the closed segment ``ab`` is strictly inside the bounds and
    touches no closed obstacle."""
    if not _strictly_inside(a, b_lo, b_hi) or not _strictly_inside(b, b_lo, b_hi):
        return False
    for j in range(obs_lo.shape[0]):
        if _segment_hits_box(a, b, obs_lo[j], obs_hi[j]):
            return False
    return True


@njit
def team_segment_clear(a, b, dim, obs_lo, obs_hi, b_lo, b_hi):
    """``segment_clear`` for every robot of a flattened team edge; stops at
    the first blocked robot."""
    for i in range(a.shape[0] // dim):
        lo = i * dim
        if not segment_clear(a[lo:lo + dim], b[lo:lo + dim], obs_lo, obs_hi, b_lo, b_hi):
            return False
    return True


@njit
def flat_dist(a, b):
    s = 0.0
    for k in range(a.shape[0]):
        d = a[k] - b[k]
        s += d * d
    return np.sqrt(s)
