"""End-to-end acceptance criteria, run at their stated scale and tolerance.

The desk matrix (both planners, all strategies, R = 1..5, 10^4 iterations,
5 trials) is run once per session and shared by criteria 1-6.
"""
import math
import time

import numpy as np
import pytest

from multicert.bench_cli import ExperimentSpec, run_matrix
from multicert.metrics import (
    crossover,
    log_buckets,
    relative_runtime_curve,
    scaled_runtime,
)
from multicert.planners import PLANNERS
from multicert.spatial_index import KdTree
from multicert.workspace import default_workspace

SPEC = ExperimentSpec()
N = SPEC.iterations
TEAM_SIZES = tuple(SPEC.team_sizes)


def detail(record_property, text):
    record_property("detail", text)
    print(text)


@pytest.fixture(scope="module")
def ws():
    return default_workspace(0)


@pytest.fixture(scope="module")
def matrix(ws):
    t0 = time.perf_counter()
    results = run_matrix(SPEC, ws, keep_trees=True)
    return results, time.perf_counter() - t0


def mean_over_trials(results, planner, strategy, r, fn):
    return float(np.mean([fn(t) for t in results[planner, strategy, r]]))


def free_oracle(ws, pts):
    """Exact free test of 2-D points by containment, vectorized over rows."""
    lo, hi = np.array(ws.bounds.lo), np.array(ws.bounds.hi)
    free = np.all((pts > lo) & (pts < hi), axis=1)
    for o in ws.obstacles:
        free &= ~np.all((pts >= np.array(o.lo)) & (pts <= np.array(o.hi)), axis=1)
    return free


@pytest.mark.acceptance(1)
def test_criterion_1_certificate_soundness(matrix, ws, record_property):
    results, elapsed = matrix
    violations = certified = 0
    for (planner, strategy, r), trials in results.items():
        for t in trials:
            lg = t.log
            mask = lg.accepted & (lg.check_fraction < 1.0)
            nodes = lg.node[mask]
            certified += nodes.size
            proj = t.configs[nodes].reshape(-1, ws.dim)
            violations += int((~free_oracle(ws, proj)).sum())
    detail(record_property, f"{violations} violations over {certified} certified nodes; "
                            f"matrix ran in {elapsed / 60:.1f} min")
    assert certified > 0
    assert violations == 0
    assert elapsed < 30 * 60


@pytest.mark.acceptance(2)
def test_criterion_2_outcome_equivalence(matrix, record_property):
    results, _ = matrix
    mismatches = cells = 0
    for planner in SPEC.planners:
        for r in TEAM_SIZES:
            for k in range(SPEC.trials):
                ref = results[planner, "none", r][k]
                for s in SPEC.strategies:
                    t = results[planner, s, r][k]
                    cells += 1
                    same = (np.array_equal(t.configs, ref.configs)
                            and np.array_equal(t.parents, ref.parents)
                            and np.array_equal(t.log.node, ref.log.node))
                    mismatches += not same
    detail(record_property, f"{mismatches} mismatching trees out of {cells}")
    assert mismatches == 0


@pytest.mark.acceptance(3)
def test_criterion_3_single_robot_limit(matrix, record_property):
    results, _ = matrix
    lines, passing = [], 0
    for t in results["rrt", "shared", 1]:
        f = t.log.check_fraction
        first, last = float(f[:10].mean()), float(f[N // 10:].mean())
        rejected = float((~t.log.accepted[N // 10:]).mean())
        ok = last < 0.5 * first and last < 0.15
        passing += ok
        lines.append(f"t{t.trial}: first={first:.2f} last={last:.3f} "
                     f"(rejected={rejected:.3f})")
    detail(record_property, f"{passing}/5 trials pass; " + "; ".join(lines))
    assert passing >= 4


@pytest.mark.acceptance(4)
def test_criterion_4_basic_dimensionality(matrix, record_property):
    results, _ = matrix
    ok, parts = True, []
    for planner in SPEC.planners:
        basic = [mean_over_trials(results, planner, "basic", r,
                                  lambda t: t.log.check_fraction.mean()) for r in TEAM_SIZES]
        partial = [mean_over_trials(results, planner, "partial", r,
                                    lambda t: t.log.check_fraction.mean()) for r in TEAM_SIZES]
        monotone = all(b2 >= b1 for b1, b2 in zip(basic, basic[1:]))
        ratios = [b / p for b, p, r in zip(basic, partial, TEAM_SIZES) if r >= 3]
        ok &= monotone and all(x >= 1.5 for x in ratios)
        parts.append(f"{planner}: basic={[round(b, 3) for b in basic]} "
                     f"basic/partial(R>=3)={[round(x, 2) for x in ratios]}")
    detail(record_property, "; ".join(parts))
    assert ok


@pytest.mark.acceptance(5)
def test_criterion_5_strategy_ordering(matrix, record_property):
    results, _ = matrix
    ok, parts = True, []
    for planner in SPEC.planners:
        for r in TEAM_SIZES:
            if r < 2:
                continue
            cost = {s: mean_over_trials(results, planner, s, r,
                                        lambda t: t.log.cum_check_fraction[-1])
                    for s in ("shared", "partial", "basic")}
            good = cost["shared"] < cost["partial"] <= cost["basic"] <= N
            ok &= good
            parts.append(f"{planner} R{r}: {cost['shared']:.0f}<{cost['partial']:.0f}"
                         f"<={cost['basic']:.0f}{'' if good else ' FAIL'}")
    detail(record_property, "; ".join(parts))
    assert ok


@pytest.mark.acceptance(6)
def test_criterion_6_difficulty_scaling(matrix, record_property):
    results, _ = matrix
    buckets = log_buckets(N)
    worst, crossings = 0.0, []
    for planner in SPEC.planners:
        for r in TEAM_SIZES:
            logs = [t.log for t in results[planner, "shared", r]]
            base = [t.log for t in results[planner, "none", r]]
            mean, _ = relative_runtime_curve(logs, base, 1e4, [N])
            worst = max(worst, float(mean[0]))
            raw, _ = relative_runtime_curve(logs, base, 1.0, buckets)
            cx = crossover(buckets, raw)
            crossings.append(f"{planner} R{r}: {cx if cx is not None else 'none'}")
    detail(record_property, f"max relative runtime at m=1e4: {worst:.3f}; "
                            f"crossover at m=1: " + ", ".join(crossings))
    assert worst < 1.0


def _exact_d2(pts, queries):
    # same left-to-right accumulation as the tree, vectorized over both sides
    d2 = np.zeros((queries.shape[0], pts.shape[0]))
    for j in range(pts.shape[1]):
        diff = queries[:, None, j] - pts[None, :, j]
        d2 = d2 + diff * diff
    return d2


@pytest.mark.acceptance(7)
def test_criterion_7_kdtree_oracle(record_property):
    rng = np.random.default_rng(2024)
    t0 = time.perf_counter()
    bad = checked = 0
    for i in range(1000):
        k = 2 + i % 9
        n = int(rng.integers(1, 500))
        pts = rng.random((n, k))
        if i % 4 == 0:
            pts = np.round(pts * 4) / 4  # duplicates and ties
        queries = rng.random((1000, k))
        radii = rng.uniform(0, 0.6, 1000) * math.sqrt(k) / 2
        tree = KdTree(k, capacity=n)
        for p in pts:
            tree.insert(p)
        d2 = _exact_d2(pts, queries)
        best = d2.argmin(axis=1)  # first minimum, i.e. the earliest insertion
        best_d = np.sqrt(d2[np.arange(1000), best])
        within = np.sqrt(d2) <= radii[:, None]
        for j in range(1000):
            h, d = tree.nearest(queries[j])
            bad += h != best[j] or d != best_d[j]
            bad += tree.near(queries[j], radii[j]) != np.flatnonzero(within[j]).tolist()
            checked += 2
    elapsed = time.perf_counter() - t0
    detail(record_property, f"{bad} disagreements in {checked} queries, {elapsed:.1f} s")
    assert bad == 0
    assert elapsed < 60


@pytest.mark.acceptance(8)
def test_criterion_8_seeded_completeness(ws, record_property):
    rng = np.random.default_rng(77)
    eps = 0.05 * math.sqrt(2)
    cases = mismatches = 0
    seeded_visits, root_visits = [], []
    for _ in range(100):
        n = int(rng.integers(20, 2000))
        pts = rng.uniform(0.001, 0.999, (n, 2))
        radii = np.array([ws.clearance(p) for p in pts])
        radii[rng.random(n) < 0.3] = 0.0  # placeholders that certify nothing
        tree = KdTree(2, capacity=n)
        for p, r in zip(pts, radii):
            tree.insert(p, radius=r)
        for _ in range(100):
            seed = int(rng.integers(n))
            ang, rad = rng.uniform(0, 2 * np.pi), 2 * eps * math.sqrt(rng.random())
            q = np.clip(pts[seed] + rad * np.array([math.cos(ang), math.sin(ang)]), 0, 1)
            covering = np.sqrt(_exact_d2(pts, q[None])[0]) < radii
            h = tree.seeded_first_cert(q, seed)
            seeded_visits.append(tree.last_visits)
            tree.first_cert(q)
            root_visits.append(tree.last_visits)
            found = h is not None
            mismatches += found != bool(covering.any()) or (found and not covering[h])
            cases += 1
    s, r = float(np.mean(seeded_visits)), float(np.mean(root_visits))
    detail(record_property, f"{mismatches} mismatches over {cases} cases; "
                            f"mean visits seeded={s:.1f} root={r:.1f}")
    assert mismatches == 0 and cases >= 10_000
    assert s <= r


@pytest.mark.acceptance(9)
def test_criterion_9_difficulty_arithmetic(matrix, record_property):
    results, _ = matrix
    worst, exact, count = 0.0, True, 0
    for trials in results.values():
        for t in trials:
            for i in log_buckets(N):
                rec = t.log.record(int(i))
                s1, s2, s4 = (scaled_runtime(rec, m) for m in (1.0, 1e2, 1e4))
                exact &= s1 == rec.t_total
                # the three points lie on one line of slope t_cc
                if rec.t_cc > 0:
                    worst = max(worst, abs((s2 - s1) / 99 - rec.t_cc) / rec.t_cc,
                                abs((s4 - s1) / 9999 - rec.t_cc) / rec.t_cc)
                count += 1
    detail(record_property, f"{count} records; m=1 exact: {exact}; "
                            f"max relative slope error {worst:.1e}")
    assert exact
    assert worst <= 1e-12
