"""
Certificates for a single robot
===============================

A point that has been collision checked stores its clearance, the distance
to the nearest obstacle. Any later sample strictly inside that ball is free
without a new check. Watch the share of checked samples fall as the tree
fills the workspace.
"""
import numpy as np

from multicert import PlannerParams, default_workspace, run
from multicert.metrics import bucket_proportions

ws = default_workspace(0)
print(f"{len(ws.obstacles)} obstacles, start {ws.starts[0]}, goal {ws.goals[0]}")

tree, log = run(PlannerParams(iterations=10_000, rng_seed=1), ws, "shared", "rrt", num_robots=1)

# mean check fraction per decade of iterations
decades = [10, 100, 1000, 10_000]
for end, prop in zip(decades, bucket_proportions(log.check_fraction, decades)):
    print(f"iterations up to {end:>6}: {prop:.3f} of samples checked")

# what is left at the end is mostly samples that really are in collision,
# and nothing can certify those
late = slice(1000, None)
print("rejected share of late iterations:", np.round(1 - log.accepted[late].mean(), 3))
print("tree size:", len(tree))
