"""
Coarse line-width workbench: certificates or superfat tree minors for finite graphs.
"""

from coarse_linewidth.core import decide, decide_async, verify_payload
from coarse_linewidth.domain.graph import Graph
from coarse_linewidth.domain.metric import TieBreakerSpec
from coarse_linewidth.domain.pipeline import PipelineOutcome, run_pipeline
from coarse_linewidth.domain.schedule import Schedule, custom_schedule, make_schedule
from coarse_linewidth.infrastructure import Dispatcher, EventLoop, Worker

__all__ = [
    "decide",
    "decide_async",
    "verify_payload",
    "Graph",
    "TieBreakerSpec",
    "PipelineOutcome",
    "run_pipeline",
    "Schedule",
    "make_schedule",
    "custom_schedule",
    "Dispatcher",
    "EventLoop",
    "Worker",
]
