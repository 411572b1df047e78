"""Benchmark harness: planner x strategy x team size x trial matrix.

Subcommands::

    multicert-bench gen --seed 0 --out ws.json
    multicert-bench run --planner rrt,rrtstar --strategy all --robots 1-5 \\
        --iters 10000 --trials 5 --out-dir results/
    multicert-bench figures --in-dir results/ --out-dir figs/ --difficulty 1,100,10000

Trial ``t`` of every cell uses planner seed ``base_seed + t``, so cells that
differ only by strategy grow identical trees and differ only in checking
cost and time.
"""
from __future__ import annotations

import argparse
import csv
import glob
import logging
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from itertools import product
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .certificates import STRATEGIES
from .metrics import TrialLog, aggregate, crossover, log_buckets, relative_runtime_curve
from .planners import PLANNERS, PlannerParams, run
from .workspace import (
    GenSpec,
    R_MAX,
    Workspace,
    generate,
    load_workspace,
    save_workspace,
    write_workspace,
)

log = logging.getLogger("multicert")

TRIAL_COLUMNS = ["planner", "strategy", "robots", "trial", "iteration", "check_fraction",
                 "cum_check_fraction", "accepted", "t_total_s", "t_cc_s"]
PROPORTION_COLUMNS = ["planner", "strategy", "robots", "bucket_iter", "mean_prop", "std_prop"]
RUNTIME_COLUMNS = ["planner", "strategy", "robots", "difficulty", "bucket_iter",
                   "mean_rel_runtime", "std_rel_runtime"]
CROSSOVER_COLUMNS = ["planner", "strategy", "robots", "difficulty", "crossover_iter"]
DEFAULT_DIFFICULTIES = (1.0, 1e2, 1e4)


class SchemaError(ValueError):
    pass


@dataclass
class ExperimentSpec:
    planners: Sequence[str] = PLANNERS
    strategies: Sequence[str] = STRATEGIES
    team_sizes: Sequence[int] = tuple(range(1, R_MAX + 1))
    iterations: int = 10_000
    trials: int = 5
    difficulties: Sequence[float] = DEFAULT_DIFFICULTIES
    base_seed: int = 0
    cutoff: float = math.inf

    def __post_init__(self):
        if not (self.planners and self.strategies and self.team_sizes):
            raise ValueError("planners, strategies and team sizes must be non-empty")
        for p in self.planners:
            if p not in PLANNERS:
                raise ValueError(f"unknown planner {p!r}")
        for s in self.strategies:
            if s not in STRATEGIES:
                raise ValueError(f"unknown strategy {s!r}")
        for r in self.team_sizes:
            if not 1 <= r <= R_MAX:
                raise ValueError(f"team size {r} outside 1..{R_MAX}")
        if self.iterations < 1 or self.trials < 1:
            raise ValueError("iterations and trials must be >= 1")

    def cells(self):
        return list(product(self.planners, self.strategies, self.team_sizes))


@dataclass
class TrialResult:
    planner: str
    strategy: str
    robots: int
    trial: int
    log: TrialLog
    configs: Optional[np.ndarray] = None
    parents: Optional[np.ndarray] = None


Key = Tuple[str, str, int]


def run_trial(workspace: Workspace, planner: str, strategy: str, robots: int, trial: int,
              iterations: int, base_seed: int = 0, cutoff: float = math.inf,
              keep_tree: bool = True) -> TrialResult:
    params = PlannerParams(iterations=iterations, rng_seed=base_seed + trial)
    tree, tlog = run(params, workspace, strategy, planner, robots, cutoff)
    res = TrialResult(planner, strategy, robots, trial, tlog)
    if keep_tree:
        res.configs = tree.configs().copy()
        res.parents = np.array(tree.parent, dtype=np.int64)
    return res


def warm_up(workspace: Workspace) -> None:
    """Compile every kernel before anything is timed."""
    for planner, strategy in product(PLANNERS, STRATEGIES):
        run_trial(workspace, planner, strategy, min(2, workspace.num_robots), 0, 30,
                  keep_tree=False)


def _job(args):
    return run_trial(*args)


def run_matrix(spec: ExperimentSpec, workspace: Workspace, jobs: int = 1,
               keep_trees: bool = True) -> Dict[Key, List[TrialResult]]:
    """Run every cell and trial; results keyed by (planner, strategy, robots)."""
    if max(spec.team_sizes) > workspace.num_robots:
        raise ValueError(f"workspace has only {workspace.num_robots} robots")
    tasks = [(workspace, p, s, r, t, spec.iterations, spec.base_seed, spec.cutoff, keep_trees)
             for (p, s, r) in spec.cells() for t in range(spec.trials)]
    if jobs > 1:
        with ProcessPoolExecutor(jobs, initializer=warm_up, initargs=(workspace,)) as ex:
            results = list(ex.map(_job, tasks))
    else:
        warm_up(workspace)
        results = []
        for i, task in enumerate(tasks):
            results.append(_job(task))
            log.info("trial %d/%d done: %s %s R=%d t=%d", i + 1, len(tasks), *task[1:5])
    out: Dict[Key, List[TrialResult]] = {}
    for res in results:
        out.setdefault((res.planner, res.strategy, res.robots), []).append(res)
    return out


# -- CSV output --------------------------------------------------------------


def _fmt(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return repr(float(x))
    return str(x)


def write_trial_csv(path: str, trials: Sequence[TrialResult]) -> int:
    rows = 0
    with open(path, "w", newline="", encoding="utf-8") as f:
        w = csv.writer(f)
        w.writerow(TRIAL_COLUMNS)
        for res in sorted(trials, key=lambda r: r.trial):
            lg = res.log
            cum = lg.cum_check_fraction
            for j in range(len(lg)):
                w.writerow([res.planner, res.strategy, res.robots, res.trial, j + 1,
                            _fmt(lg.check_fraction[j]), _fmt(cum[j]), _fmt(lg.accepted[j]),
                            _fmt(lg.t_total[j]), _fmt(lg.t_cc[j])])
                rows += 1
    return rows


def write_tree_csv(path: str, res: TrialResult, dim: int) -> None:
    with open(path, "w", newline="", encoding="utf-8") as f:
        w = csv.writer(f)
        r = res.configs.shape[1] // dim
        w.writerow(["node", "parent"] + [f"r{i}_x{k}" for i in range(r) for k in range(dim)])
        for n, (par, q) in enumerate(zip(res.parents, res.configs)):
            w.writerow([n, int(par)] + [_fmt(v) for v in q])


def _write_rows(path, header, rows):
    with open(path, "w", newline="", encoding="utf-8") as f:
        w = csv.writer(f)
        w.writerow(header)
        w.writerows([[_fmt(v) for v in row] for row in rows])


def cell_filename(planner, strategy, robots) -> str:
    return f"trials_{planner}_{strategy}_R{robots}.csv"


# -- aggregation -------------------------------------------------------------


def write_figures(results: Dict[Key, List[TrialResult]], out_dir: str,
                  difficulties: Sequence[float] = DEFAULT_DIFFICULTIES) -> Dict[str, list]:
    """Aggregate per-trial logs into figure-ready CSVs; returns the row lists."""
    os.makedirs(out_dir, exist_ok=True)
    prop_rows, rt_rows, cross_rows = [], [], []
    for key in sorted(results):
        planner, strategy, robots = key
        trials = sorted(results[key], key=lambda r: r.trial)
        n = min(len(t.log) for t in trials)
        buckets = log_buckets(n)
        curve = aggregate([t.log.check_fraction[:n] for t in trials], buckets,
                          planner, strategy, robots)
        prop_rows += [[planner, strategy, robots, int(b), m, s]
                      for b, m, s in zip(buckets, curve.mean_prop, curve.std_prop)]
        base = {t.trial: t for t in results.get((planner, "none", robots), [])}
        paired = [t for t in trials if t.trial in base]
        if not paired:
            continue
        for m in difficulties:
            mean, std = relative_runtime_curve([t.log for t in paired],
                                               [base[t.trial].log for t in paired], m, buckets)
            rt_rows += [[planner, strategy, robots, float(m), int(b), a, s]
                        for b, a, s in zip(buckets, mean, std)]
            cx = crossover(buckets, mean)
            cross_rows.append([planner, strategy, robots, float(m), "" if cx is None else cx])

    _write_rows(os.path.join(out_dir, "proportion.csv"), PROPORTION_COLUMNS, prop_rows)
    for planner in sorted({r[0] for r in prop_rows}):
        _write_rows(os.path.join(out_dir, f"fig_proportion_{planner}.csv"), PROPORTION_COLUMNS,
                    [r for r in prop_rows if r[0] == planner])
    if rt_rows:
        _write_rows(os.path.join(out_dir, "relative_runtime.csv"), RUNTIME_COLUMNS, rt_rows)
        _write_rows(os.path.join(out_dir, "crossover.csv"), CROSSOVER_COLUMNS, cross_rows)
        for planner, m in sorted({(r[0], r[3]) for r in rt_rows}):
            name = f"fig_runtime_{planner}_m{m:g}.csv"
            _write_rows(os.path.join(out_dir, name), RUNTIME_COLUMNS,
                        [r for r in rt_rows if r[0] == planner and r[3] == m])
    return {"proportion": prop_rows, "relative_runtime": rt_rows, "crossover": cross_rows}


def read_trial_csvs(paths: Sequence[str]) -> Dict[Key, List[TrialResult]]:
    """Rebuild trial logs from per-trial CSVs. Row order does not matter."""
    raw: Dict[tuple, list] = {}
    for path in paths:
        with open(path, newline="", encoding="utf-8") as f:
            reader = csv.reader(f)
            header = next(reader, None)
            if header != TRIAL_COLUMNS:
                raise SchemaError(f"{path}: expected columns {TRIAL_COLUMNS}, got {header}")
            for lineno, row in enumerate(reader, start=2):
                if len(row) != len(TRIAL_COLUMNS):
                    raise SchemaError(f"{path}:{lineno}: expected {len(TRIAL_COLUMNS)} fields")
                try:
                    key = (row[0], row[1], int(row[2]), int(row[3]))
                    raw.setdefault(key, []).append(
                        (int(row[4]), float(row[5]), row[7] == "1", float(row[8]), float(row[9])))
                except ValueError as e:
                    raise SchemaError(f"{path}:{lineno}: {e}") from None
    out: Dict[Key, List[TrialResult]] = {}
    for (planner, strategy, robots, trial), rows in sorted(raw.items()):
        rows.sort()
        its = [r[0] for r in rows]
        if its != list(range(1, len(rows) + 1)):
            raise SchemaError(f"{planner}/{strategy}/R{robots}/trial {trial}: "
                              "iterations are not 1..n exactly once")
        lg = TrialLog(len(rows))
        for _, cf, acc, tt, tc in rows:
            lg.append(cf, acc, -1, tt, tc)
        out.setdefault((planner, strategy, robots), []).append(
            TrialResult(planner, strategy, robots, trial, lg))
    return out


# -- commands ----------------------------------------------------------------


def cmd_gen_workspace(spec: GenSpec, out_path: str) -> Workspace:
    w = generate(spec)
    save_workspace(w, out_path)
    return w


def cmd_run(spec: ExperimentSpec, workspace: Workspace, out_dir: str, jobs: int = 1,
            trees: bool = False) -> Dict[Key, List[TrialResult]]:
    os.makedirs(out_dir, exist_ok=True)
    with open(os.path.join(out_dir, "workspace.json"), "wb") as f:
        f.write(write_workspace(workspace))
    results = run_matrix(spec, workspace, jobs, keep_trees=trees)
    for key in sorted(results):
        write_trial_csv(os.path.join(out_dir, cell_filename(*key)), results[key])
        if trees:
            os.makedirs(os.path.join(out_dir, "trees"), exist_ok=True)
            for res in results[key]:
                name = f"tree_{key[0]}_{key[1]}_R{key[2]}_t{res.trial}.csv"
                write_tree_csv(os.path.join(out_dir, "trees", name), res, workspace.dim)
    write_figures(results, out_dir, spec.difficulties)
    return results


def cmd_figures(in_dir: str, out_dir: str,
                difficulties: Sequence[float] = DEFAULT_DIFFICULTIES) -> Dict[str, list]:
    paths = sorted(glob.glob(os.path.join(in_dir, "trials_*.csv")))
    if not paths:
        raise SchemaError(f"no trials_*.csv files in {in_dir}")
    return write_figures(read_trial_csvs(paths), out_dir, difficulties)


# -- argument parsing --------------------------------------------------------


def _choices(text: str, allowed: Sequence[str]) -> List[str]:
    if text == "all":
        return list(allowed)
    items = [t.strip() for t in text.split(",") if t.strip()]
    bad = [t for t in items if t not in allowed]
    if bad or not items:
        raise argparse.ArgumentTypeError(f"expected 'all' or a comma list of {list(allowed)}")
    return items


def _int_list(text: str) -> List[int]:
    out = []
    for part in text.split(","):
        if "-" in part:
            a, b = part.split("-")
            out.extend(range(int(a), int(b) + 1))
        else:
            out.append(int(part))
    return out


def _float_list(text: str) -> List[float]:
    return [float(t) for t in text.split(",")]


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="multicert-bench",
                                     description="Multi-robot certificate benchmark harness.")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen", help="generate a random workspace file")
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--obstacles", type=int, default=40)
    g.add_argument("--size-min", type=float, default=0.02)
    g.add_argument("--size-max", type=float, default=0.10)
    g.add_argument("--robots", type=int, default=R_MAX)
    g.add_argument("--out", required=True)

    r = sub.add_parser("run", help="run the experiment matrix")
    r.add_argument("--planner", type=lambda t: _choices(t, PLANNERS), default=list(PLANNERS))
    r.add_argument("--strategy", type=lambda t: _choices(t, STRATEGIES),
                   default=list(STRATEGIES))
    r.add_argument("--robots", type=_int_list, default=list(range(1, R_MAX + 1)),
                   help="team sizes, e.g. 1-5 or 1,3")
    r.add_argument("--iters", type=int, default=10_000)
    r.add_argument("--trials", type=int, default=5)
    r.add_argument("--seed", type=int, default=0, help="base seed; trial t uses seed+t")
    r.add_argument("--workspace", help="workspace JSON (default: generated with seed 0)")
    r.add_argument("--cutoff", type=float, default=math.inf,
                   help="certificate store size beyond which standard checks are used")
    r.add_argument("--difficulty", type=_float_list, default=list(DEFAULT_DIFFICULTIES))
    r.add_argument("--jobs", type=int, default=1)
    r.add_argument("--trees", action="store_true", help="also write every final tree")
    r.add_argument("--out-dir", required=True)

    f = sub.add_parser("figures", help="aggregate per-trial CSVs into figure CSVs")
    f.add_argument("--in-dir", required=True)
    f.add_argument("--out-dir", required=True)
    f.add_argument("--difficulty", type=_float_list, default=list(DEFAULT_DIFFICULTIES))
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(message)s")
    try:
        if args.command == "gen":
            spec = GenSpec(args.seed, args.obstacles, (args.size_min, args.size_max), args.robots)
            cmd_gen_workspace(spec, args.out)
        elif args.command == "run":
            w = load_workspace(args.workspace).validate() if args.workspace else generate(GenSpec())
            spec = ExperimentSpec(args.planner, args.strategy, args.robots, args.iters,
                                  args.trials, args.difficulty, args.seed, args.cutoff)
            cmd_run(spec, w, args.out_dir, args.jobs, args.trees)
        else:
            cmd_figures(args.in_dir, args.out_dir, args.difficulty)
    except (OSError, ValueError, RuntimeError) as e:
        print(f"multicert-bench: error: {e}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
