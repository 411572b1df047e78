"""
Three ways to share certificates across a team
==============================================

With R robots a team configuration has 2R coordinates. ``basic`` keeps a
product of balls and certifies a sample only if every robot lands in its
ball. ``partial`` lets each robot fall back to a check on its own.
``shared`` pools every robot's balls in one planar index, so a ball earned
by one robot certifies the others too.

Strategies never change what the planner does, only how much checking it
pays for. The trees below are identical.
"""
import numpy as np

from multicert import PlannerParams, default_workspace, run

ws = default_workspace(0)
params = PlannerParams(iterations=5000, rng_seed=3)

trees = {}
for strategy in ("none", "basic", "partial", "shared"):
    tree, log = run(params, ws, strategy, "rrt", num_robots=3)
    trees[strategy] = tree
    print(f"{strategy:>8}: {log.cum_check_fraction[-1]:7.1f} full-team checks "
          f"over {len(log)} iterations, {len(tree)} nodes")

same = all(np.array_equal(t.configs(), trees["none"].configs()) for t in trees.values())
print("identical trees:", same)
