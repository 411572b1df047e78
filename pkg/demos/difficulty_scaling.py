"""
When does certificate bookkeeping pay off?
==========================================

Certificates trade exact collision checks for ball tests and index lookups.
Here the recorded check time is multiplied by ``m`` to model an expensive
checker, while the rest of the runtime stays as measured. Ratios below 1
mean the certificate run was faster than plain checking.
"""
from multicert import PlannerParams, default_workspace, relative_runtime, run

ws = default_workspace(0)
params = PlannerParams(iterations=5000, rng_seed=0)

_, base = run(params, ws, "none", "rrt", num_robots=3)
_, shared = run(params, ws, "shared", "rrt", num_robots=3)

for m in (1, 1e2, 1e4):
    ratio = relative_runtime(shared.record(5000), base.record(5000), m)
    print(f"m = {m:>7g}: shared / baseline runtime = {ratio:.3f}")
