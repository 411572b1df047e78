"""Per-iteration accounting and the difficulty-scaling runtime model.

A trial is logged column-wise in a :class:`TrialLog`. Standard-check time
``t_cc`` counts only the exact clearance and edge calls; certificate ball
tests and kd-tree traversal are part of ``t_total - t_cc``. A difficulty
multiplier ``m`` models slower collision checking by replacing ``t_cc``
with ``m * t_cc`` while leaving the rest of the runtime untouched.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence

import numpy as np


@dataclass(frozen=True)
class TrialRecord:
    iteration: int
    cum_check_fraction: float
    cum_nodes: int
    t_total: float
    t_cc: float

    def __post_init__(self):
        if not 0.0 <= self.t_cc <= self.t_total:
            raise ValueError(f"need 0 <= t_cc <= t_total, got {self.t_cc}, {self.t_total}")


class TrialLog:
    """Column store for one run; row ``i`` describes iteration ``i + 1``."""

    def __init__(self, n: int):
        self.n = 0
        self.check_fraction = np.zeros(n)
        self.accepted = np.zeros(n, dtype=bool)
        self.node = np.full(n, -1, dtype=np.int64)
        self.t_total = np.zeros(n)
        self.t_cc = np.zeros(n)

    def append(self, check_fraction, accepted, node, t_total, t_cc):
        i = self.n
        self.check_fraction[i] = check_fraction
        self.accepted[i] = accepted
        self.node[i] = node
        self.t_total[i] = t_total
        self.t_cc[i] = t_cc
        self.n = i + 1

    def __len__(self):
        return self.n

    @property
    def iteration(self) -> np.ndarray:
        return np.arange(1, self.n + 1)

    @property
    def cum_check_fraction(self) -> np.ndarray:
        return np.cumsum(self.check_fraction[: self.n])

    @property
    def cum_nodes(self) -> np.ndarray:
        # the root exists before the first iteration
        return 1 + np.cumsum(self.accepted[: self.n])

    def record(self, i: int) -> TrialRecord:
        """Cumulative record after iteration ``i`` (1-based)."""
        if not 1 <= i <= self.n:
            raise IndexError(i)
        j = i - 1
        return TrialRecord(i, float(self.cum_check_fraction[j]), int(self.cum_nodes[j]),
                           float(self.t_total[j]), float(self.t_cc[j]))

    def records(self) -> List[TrialRecord]:
        cf, cn = self.cum_check_fraction, self.cum_nodes
        return [TrialRecord(j + 1, float(cf[j]), int(cn[j]), float(self.t_total[j]),
                            float(self.t_cc[j])) for j in range(self.n)]


def check_proportion(fractions: Sequence[float], window: int) -> np.ndarray:
    """Trailing mean of per-iteration check fractions over ``window`` iterations.

    Entry ``j`` of the result averages iterations ``j .. j + window - 1``.
    """
    f = np.asarray(fractions, dtype=float)
    if f.size == 0:
        raise ValueError("empty record stream")
    if not 1 <= window <= f.size:
        raise ValueError(f"window must be in [1, {f.size}]")
    return np.array([math.fsum(f[j:j + window]) / window for j in range(f.size - window + 1)])


def scaled_runtime(rec: TrialRecord, m: float) -> float:
    """Runtime if every standard check took ``m`` times longer."""
    if m < 1:
        raise ValueError("difficulty multiplier must be >= 1")
    return (rec.t_total - rec.t_cc) + m * rec.t_cc


def relative_runtime(strategy_rec: TrialRecord, baseline_rec: TrialRecord, m: float) -> float:
    if strategy_rec.iteration != baseline_rec.iteration:
        raise ValueError("records cover different iteration counts")
    base = scaled_runtime(baseline_rec, m)
    if base == 0:
        raise ZeroDivisionError("baseline scaled runtime is 0")
    return scaled_runtime(strategy_rec, m) / base


def log_buckets(n: int, per_decade: int = 10) -> np.ndarray:
    """Increasing iteration counts, log-spaced from 1 to ``n`` inclusive."""
    if n < 1:
        raise ValueError("n must be >= 1")
    steps = int(math.ceil(math.log10(n) * per_decade)) + 1
    b = np.unique(np.round(np.logspace(0, math.log10(n), max(steps, 1))).astype(np.int64))
    b = b[(b >= 1) & (b <= n)]
    if b[-1] != n:
        b = np.append(b, n)
    return b


def bucket_proportions(fractions: Sequence[float], buckets: Sequence[int]) -> np.ndarray:
    """Mean check fraction over the iterations ``(previous bucket, bucket]``."""
    f = np.asarray(fractions, dtype=float)
    out = np.empty(len(buckets))
    prev = 0
    for k, b in enumerate(buckets):
        out[k] = math.fsum(f[prev:b]) / (b - prev)
        prev = b
    return out


def _mean_std(rows: np.ndarray):
    # fsum keeps the result independent of trial order
    n = rows.shape[0]
    mean = np.array([math.fsum(col) / n for col in rows.T])
    std = np.array([math.sqrt(math.fsum((col - m) ** 2) / n) for col, m in zip(rows.T, mean)])
    return mean, std


@dataclass
class AggregateCurve:
    planner: str
    strategy: str
    robots: int
    bucket_iter: np.ndarray
    mean_prop: np.ndarray
    std_prop: np.ndarray
    # difficulty multiplier -> (mean, std) relative runtime per bucket
    rel_runtime: Dict[float, tuple] = field(default_factory=dict)


def aggregate(trials: Sequence[Sequence[float]], buckets: Optional[Sequence[int]] = None,
              planner: str = "", strategy: str = "", robots: int = 0) -> AggregateCurve:
    """Per-bucket mean and population std of check proportion over trials.

    ``trials`` holds one per-iteration check-fraction sequence per trial.
    """
    if len(trials) == 0:
        raise ValueError("need at least one trial")
    n = min(len(t) for t in trials)
    buckets = log_buckets(n) if buckets is None else np.asarray(buckets)
    rows = np.array([bucket_proportions(t, buckets) for t in trials])
    mean, std = _mean_std(rows)
    return AggregateCurve(planner, strategy, robots, np.asarray(buckets), mean, std)


def relative_runtime_curve(strategy_logs: Sequence[TrialLog], baseline_logs: Sequence[TrialLog],
                           m: float, buckets: Sequence[int]):
    """Mean/std over seed-paired trials of the cumulative relative runtime at
    each bucket."""
    if len(strategy_logs) != len(baseline_logs) or not strategy_logs:
        raise ValueError("need equally many, and at least one, paired trials")
    rows = []
    for s, b in zip(strategy_logs, baseline_logs):
        rows.append([relative_runtime(s.record(i), b.record(i), m) for i in buckets])
    return _mean_std(np.array(rows))


def crossover(buckets: Sequence[int], rel: Sequence[float]) -> Optional[int]:
    """First bucket from which the relative runtime stays above 1, if any."""
    out = None
    for b, r in zip(buckets, rel):
        if r > 1.0:
            if out is None:
                out = int(b)
        else:
            out = None
    return out
