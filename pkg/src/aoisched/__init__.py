"""Age of Information analysis and scheduling for two-source status update systems."""

from .ctmc import AbsorbingChain, Generator, SingularSystem, exp_action, resolvent_moment, stationary
from .sbpsq import (
    MetricReport,
    SchedProb,
    SystemParams,
    aoi_cdf,
    aoi_moment,
    aoi_pdf,
    paoi_cdf,
    paoi_moment,
    paoi_pdf,
    swap_sources,
    weighted_metrics,
)
from .schedopt import PolicySpec, heuristic_policy, ops_optimize
from .simkit import ConfigError, SimConfig, SimStats, replicate, simulate

__version__ = "0.1.0"
