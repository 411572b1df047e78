"""Incremental kd-tree with nearest, range and seeded certificate queries.

Entries are never removed or moved, so the integer handle returned by
:meth:`KdTree.insert` is simply the insertion index. Splits cycle through
the axes by depth and sit at the inserted point's coordinate; points whose
coordinate is ``>=`` the split go right.

Besides the point, every entry carries a ball radius (0 unless given) and
every node knows the bounding cell of its subtree and the largest radius
stored below it. That is what lets :meth:`KdTree.seeded_first_cert` prune
whole subtrees: no entry in a subtree can cover ``q`` if the subtree's
largest radius does not exceed the distance from ``q`` to its cell.
"""
from __future__ import annotations

from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np

from ._jit import njit


class EmptyTree(LookupError):
    pass


class InvalidHandle(KeyError):
    pass


# --------------------------------------------------------------------------
# kernels


@njit
def _insert(pts, left, right, parent, axis, radius, maxr, cell_lo, cell_hi, n, p, r):
    k = pts.shape[1]
    for j in range(k):
        pts[n, j] = p[j]
    left[n] = -1
    right[n] = -1
    radius[n] = r
    maxr[n] = r
    if n == 0:
        parent[0] = -1
        axis[0] = 0
        for j in range(k):
            cell_lo[0, j] = -np.inf
            cell_hi[0, j] = np.inf
        return
    node = 0
    while True:
        if r > maxr[node]:
            maxr[node] = r
        a = axis[node]
        if p[a] >= pts[node, a]:
            nxt = right[node]
            if nxt == -1:
                right[node] = n
                break
        else:
            nxt = left[node]
            if nxt == -1:
                left[node] = n
                break
        node = nxt
    parent[n] = node
    a = axis[node]
    axis[n] = (a + 1) % k
    for j in range(k):
        cell_lo[n, j] = cell_lo[node, j]
        cell_hi[n, j] = cell_hi[node, j]
    if right[node] == n:
        cell_lo[n, a] = pts[node, a]
    else:
        cell_hi[n, a] = pts[node, a]


@njit
def _sq_dist(pts, i, q):
    s = 0.0
    for j in range(q.shape[0]):
        d = q[j] - pts[i, j]
        s += d * d
    return s


@njit
def _sq_cell_dist(cell_lo, cell_hi, i, q):
    s = 0.0
    for j in range(q.shape[0]):
        g = cell_lo[i, j] - q[j]
        if g < 0.0:
            g = 0.0
        g2 = q[j] - cell_hi[i, j]
        if g2 > g:
            g = g2
        s += g * g
    return s


@njit
def _nearest(pts, left, right, axis, cell_lo, cell_hi, q, stack):
    best = -1
    best_d2 = np.inf
    visits = 0
    top = 0
    stack[0] = 0
    while top >= 0:
        node = stack[top]
        top -= 1
        if _sq_cell_dist(cell_lo, cell_hi, node, q) > best_d2:
            continue
        visits += 1
        d2 = _sq_dist(pts, node, q)
        if d2 < best_d2 or (d2 == best_d2 and node < best):
            best = node
            best_d2 = d2
        a = axis[node]
        if q[a] >= pts[node, a]:
            near, far = right[node], left[node]
        else:
            near, far = left[node], right[node]
        if far != -1:
            top += 1
            stack[top] = far
        if near != -1:
            top += 1
            stack[top] = near
    return best, best_d2, visits


@njit
def _near(pts, left, right, cell_lo, cell_hi, q, radius, stack, out):
    count = 0
    top = 0
    stack[0] = 0
    while top >= 0:
        node = stack[top]
        top -= 1
        if np.sqrt(_sq_cell_dist(cell_lo, cell_hi, node, q)) > radius:
            continue
        if np.sqrt(_sq_dist(pts, node, q)) <= radius:
            out[count] = node
            count += 1
        if left[node] != -1:
            top += 1
            stack[top] = left[node]
        if right[node] != -1:
            top += 1
            stack[top] = right[node]
    return count


@njit
def _covers(pts, radius, i, q):
    return np.sqrt(_sq_dist(pts, i, q)) < radius[i]


@njit
def _search_subtree(pts, left, right, axis, radius, maxr, cell_lo, cell_hi, start, q, stack):
    """Depth-first search of the subtree at ``start`` for any covering entry,
    near child first. Returns (entry or -1, visits)."""
    visits = 0
    top = 0
    stack[0] = start
    while top >= 0:
        node = stack[top]
        top -= 1
        m = maxr[node]
        if m <= 0.0 or m <= np.sqrt(_sq_cell_dist(cell_lo, cell_hi, node, q)):
            continue
        visits += 1
        if _covers(pts, radius, node, q):
            return node, visits
        a = axis[node]
        if q[a] >= pts[node, a]:
            near, far = right[node], left[node]
        else:
            near, far = left[node], right[node]
        if far != -1:
            top += 1
            stack[top] = far
        if near != -1:
            top += 1
            stack[top] = near
    return -1, visits


@njit
def _seeded_first_cert(pts, left, right, parent, axis, radius, maxr, cell_lo, cell_hi,
                       seed, q, stack):
    found, visits = _search_subtree(pts, left, right, axis, radius, maxr, cell_lo, cell_hi,
                                    seed, q, stack)
    if found != -1:
        return found, visits
    child = seed
    node = parent[seed]
    while node != -1:
        visits += 1
        if _covers(pts, radius, node, q):
            return node, visits
        sib = right[node] if left[node] == child else left[node]
        if sib != -1:
            found, v = _search_subtree(pts, left, right, axis, radius, maxr, cell_lo, cell_hi,
                                       sib, q, stack)
            visits += v
            if found != -1:
                return found, visits
        child = node
        node = parent[node]
    return -1, visits


# --------------------------------------------------------------------------


class KdTree:
    """Append-only kd-tree over ``k``-dimensional points.

    Parameters
    ----------
    k : int
        Dimension of stored points.
    capacity : int
        Initial storage; doubles as needed.
    """

    def __init__(self, k: int, capacity: int = 1024):
        if k < 1:
            raise ValueError("k must be positive")
        self.k = k
        self.size = 0
        self.payloads: List[object] = []
        self.last_visits = 0
        self.total_visits = 0
        self._alloc(max(int(capacity), 16))

    def _alloc(self, cap):
        old = self.size
        k = self.k

        def grow(arr, shape, dtype, fill):
            new = np.full(shape, fill, dtype=dtype)
            if arr is not None:
                new[:old] = arr[:old]
            return new

        g = lambda name: getattr(self, name, None)
        self.pts = grow(g("pts"), (cap, k), float, 0.0)
        self.cell_lo = grow(g("cell_lo"), (cap, k), float, 0.0)
        self.cell_hi = grow(g("cell_hi"), (cap, k), float, 0.0)
        self.left = grow(g("left"), cap, np.int64, -1)
        self.right = grow(g("right"), cap, np.int64, -1)
        self.parent = grow(g("parent"), cap, np.int64, -1)
        self.axis = grow(g("axis"), cap, np.int64, 0)
        self.radius = grow(g("radius"), cap, float, 0.0)
        self.maxr = grow(g("maxr"), cap, float, 0.0)
        # depth of an unbalanced tree is bounded by its size
        self._stack = np.empty(cap + 1, dtype=np.int64)
        self._out = np.empty(cap, dtype=np.int64)
        self.capacity = cap

    def __len__(self):
        return self.size

    def _point(self, p) -> np.ndarray:
        q = np.asarray(p, dtype=float)
        if q.shape != (self.k,):
            raise ValueError(f"expected a {self.k}-dimensional point, got shape {q.shape}")
        return q

    def _check_handle(self, h: int) -> int:
        if not (isinstance(h, (int, np.integer)) and 0 <= h < self.size):
            raise InvalidHandle(h)
        return int(h)

    def insert(self, p, payload=None, radius: float = 0.0) -> int:
        q = self._point(p)
        if not radius >= 0.0:
            raise ValueError("radius must be non-negative")
        if self.size == self.capacity:
            self._alloc(2 * self.capacity)
        _insert(self.pts, self.left, self.right, self.parent, self.axis, self.radius,
                self.maxr, self.cell_lo, self.cell_hi, self.size, q, float(radius))
        self.payloads.append(payload)
        self.size += 1
        return self.size - 1

    def point(self, h: int) -> np.ndarray:
        return self.pts[self._check_handle(h)]

    def payload(self, h: int):
        return self.payloads[self._check_handle(h)]

    def entry_radius(self, h: int) -> float:
        return float(self.radius[self._check_handle(h)])

    def points(self) -> np.ndarray:
        """View of the stored points in insertion order."""
        return self.pts[: self.size]

    def nearest(self, q) -> Tuple[int, float]:
        """Closest entry to ``q`` and its distance; ties go to the earliest entry."""
        if self.size == 0:
            raise EmptyTree("nearest on an empty tree")
        q = self._point(q)
        h, d2, visits = _nearest(self.pts, self.left, self.right, self.axis,
                                 self.cell_lo, self.cell_hi, q, self._stack)
        self._count(visits)
        return int(h), float(np.sqrt(d2))

    def near(self, q, radius: float) -> List[int]:
        """Handles of all entries within ``radius`` (inclusive), in insertion order."""
        if radius < 0:
            raise ValueError("radius must be non-negative")
        if self.size == 0:
            return []
        q = self._point(q)
        n = _near(self.pts, self.left, self.right, self.cell_lo, self.cell_hi, q,
                  float(radius), self._stack, self._out)
        return sorted(self._out[:n].tolist())

    def seeded_first_cert(self, q, seed: int,
                          accept: Optional[Callable[[int, np.ndarray], bool]] = None
                          ) -> Optional[int]:
        """Find any entry whose ball strictly contains ``q``, starting at ``seed``.

        The walk searches the seed's own subtree, then climbs towards the
        root, testing each ancestor and searching the sibling subtree it did
        not come from. A subtree is skipped when its largest radius cannot
        reach ``q``. The walk covers the whole tree, so it returns an entry
        whenever one exists, but not necessarily the closest one.

        ``accept`` replaces the strict ball test; it must only accept entries
        whose ball contains ``q``, otherwise pruning loses completeness.
        """
        seed = self._check_handle(seed)
        q = self._point(q)
        if accept is None:
            h, visits = _seeded_first_cert(self.pts, self.left, self.right, self.parent,
                                           self.axis, self.radius, self.maxr, self.cell_lo,
                                           self.cell_hi, seed, q, self._stack)
        else:
            h, visits = self._seeded_walk(q, seed, accept)
        self._count(visits)
        return None if h == -1 else int(h)

    def first_cert(self, q) -> Optional[int]:
        """Same search as :meth:`seeded_first_cert` but descending from the root."""
        if self.size == 0:
            return None
        q = self._point(q)
        h, visits = _search_subtree(self.pts, self.left, self.right, self.axis, self.radius,
                                    self.maxr, self.cell_lo, self.cell_hi, 0, q, self._stack)
        self._count(visits)
        return None if h == -1 else int(h)

    def _count(self, visits):
        self.last_visits = int(visits)
        self.total_visits += int(visits)

    def _seeded_walk(self, q, seed, accept):
        visits = 0

        def prunable(node):
            m = self.maxr[node]
            return m <= 0.0 or m <= np.sqrt(_sq_cell_dist(self.cell_lo, self.cell_hi, node, q))

        def subtree(start):
            nonlocal visits
            stack = [start]
            while stack:
                node = stack.pop()
                if prunable(node):
                    continue
                visits += 1
                if accept(node, q):
                    return node
                a = self.axis[node]
                if q[a] >= self.pts[node, a]:
                    near, far = self.right[node], self.left[node]
                else:
                    near, far = self.left[node], self.right[node]
                stack.extend(c for c in (far, near) if c != -1)
            return -1

        found = subtree(seed)
        child, node = seed, self.parent[seed]
        while found == -1 and node != -1:
            visits += 1
            if accept(node, q):
                return node, visits
            sib = self.right[node] if self.left[node] == child else self.left[node]
            if sib != -1:
                found = subtree(sib)
            child, node = node, self.parent[node]
        return found, visits


def linear_nearest(points: Sequence[Sequence[float]], q: Sequence[float]) -> Tuple[int, float]:
    """Brute-force nearest neighbour with the same arithmetic as the tree."""
    best, best_d2 = -1, float("inf")
    for i, p in enumerate(points):
        s = 0.0
        for a, b in zip(q, p):
            d = a - b
            s += d * d
        if s < best_d2:
            best, best_d2 = i, s
    return best, float(np.sqrt(best_d2))


def linear_near(points, q, radius) -> List[int]:
    out = []
    for i, p in enumerate(points):
        s = 0.0
        for a, b in zip(q, p):
            d = a - b
            s += d * d
        if np.sqrt(s) <= radius:
            out.append(i)
    return out
