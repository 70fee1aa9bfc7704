"""
Worker that runs pipeline jobs on its event loop thread.

The pipeline itself is synchronous and CPU bound; each job is handed to the loop's
default executor so that several components can be in flight at once and the loop
stays responsive to cancellation and timeouts.
"""

import asyncio
import concurrent.futures
import logging
import threading
from typing import Awaitable, Optional, TypeVar

from coarse_linewidth.domain.pipeline import PipelineOutcome, run_pipeline
from coarse_linewidth.domain.worker import ComponentJob, WorkerInterface
from coarse_linewidth.infrastructure.event_loop import EventLoop

logger = logging.getLogger(__name__)
T = TypeVar("T")


class Worker(WorkerInterface):
    """Dedicated thread with its own event loop for pipeline jobs."""

    def __init__(self) -> None:
        self._event_loop = EventLoop()
        self._busy = 0
        self._busy_lock = threading.Lock()
        logger.debug("Worker initialized with dedicated event loop")

    def start(self) -> None:
        """Start the worker thread and its event loop."""
        self._event_loop.start()
        logger.debug("Worker started with event loop running")

    def run_coroutine(self, coro: Awaitable[T]) -> Optional[concurrent.futures.Future[T]]:
        """
        Execute a coroutine in the worker's event loop.

        Returns:
            A Future representing the eventual result, or None if execution failed
        """
        return self._event_loop.run_coroutine(coro)

    def _run_job(self, job: ComponentJob) -> PipelineOutcome:
        with self._busy_lock:
            self._busy += 1
        try:
            return run_pipeline(
                job.graph, job.tiebreaker, job.schedule, job.settings, job.cancel
            )
        finally:
            with self._busy_lock:
                self._busy -= 1

    async def solve(self, job: ComponentJob) -> PipelineOutcome:
        """
        Run the pipeline on one component in the loop's executor.

        Cancelling the awaiting task also sets ``job.cancel`` so the executor thread
        stops at its next checkpoint.
        """
        logger.debug(
            f"Component {job.index}: {job.graph.vertex_count} vertices, "
            f"{job.graph.edge_count} edges"
        )
        try:
            return await asyncio.to_thread(self._run_job, job)
        except asyncio.CancelledError:
            job.cancel.set()
            raise

    def busy_jobs(self) -> int:
        """Number of jobs whose pipeline is still running on an executor thread."""
        with self._busy_lock:
            return self._busy

    def shutdown(self) -> None:
        """Shutdown the worker and clean up resources."""
        self._event_loop.shutdown()
        logger.debug("Worker shutdown completed")

    def is_running(self) -> bool:
        return self._event_loop.is_running()
