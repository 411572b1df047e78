"""Multi-robot RRT/RRT* with safety-certificate collision checking."""
from .certificates import (
    STRATEGIES,
    BasicCertificate,
    CertOutcome,
    PartialCertificate,
    SharedProjection,
    StandardChecker,
    Strategy,
    certify_ball,
    check_none,
    cutoff_guard,
    make_strategy,
    team_config,
)
from .geometry import Rect, Segment, dist, dist_point_rect, segment_intersects_rect
from .metrics import TrialLog, TrialRecord, aggregate, check_proportion, relative_runtime, scaled_runtime
from .planners import Planner, PlannerParams, PlanTree, goal_cost, run, sample, steer
from .spatial_index import KdTree
from .workspace import GenSpec, Workspace, default_workspace, generate, read_workspace, write_workspace

__version__ = "0.1.0"
