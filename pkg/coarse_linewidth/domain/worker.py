"""
Domain interface for the Worker component.

A worker owns a dedicated thread with its own event loop and runs pipeline jobs,
one per connected component, off the caller's thread.
"""

import concurrent.futures
import threading
from dataclasses import dataclass, field
from typing import Awaitable, Optional, Protocol, Tuple, TypeVar

from coarse_linewidth.config import Settings
from coarse_linewidth.domain.graph import Graph
from coarse_linewidth.domain.metric import TieBreaker
from coarse_linewidth.domain.pipeline import PipelineOutcome
from coarse_linewidth.domain.schedule import Schedule

T = TypeVar("T")


@dataclass(frozen=True)
class ComponentJob:
    """
    One connected component, relabelled to ``0..n-1``.

    ``mapping[i]`` is the vertex of the input graph that component vertex ``i`` stands for.
    Setting ``cancel`` stops the run at its next checkpoint; jobs of one decision share it.
    """

    index: int
    graph: Graph
    tiebreaker: TieBreaker
    schedule: Schedule
    mapping: Tuple[int, ...]
    settings: Settings
    cancel: threading.Event = field(default_factory=threading.Event, compare=False)


class WorkerInterface(Protocol):
    """Contract for components that run pipeline jobs on a private event loop."""

    def start(self) -> None:
        """Start the worker thread and its event loop."""
        ...

    def run_coroutine(self, coro: Awaitable[T]) -> Optional[concurrent.futures.Future[T]]:
        """
        Submit a coroutine to the worker's event loop.

        Returns:
            A Future for the coroutine's result, or None if the worker is unavailable.
        """
        ...

    async def solve(self, job: ComponentJob) -> PipelineOutcome:
        """Run one component job to completion without blocking the event loop."""
        ...

    def shutdown(self) -> None:
        """Stop the event loop and join the thread."""
        ...

    def busy_jobs(self) -> int:
        """Number of jobs whose pipeline is still running on a worker thread."""
        ...

    def is_running(self) -> bool:
        ...
