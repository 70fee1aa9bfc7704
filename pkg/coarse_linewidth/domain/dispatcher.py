"""
Domain interface for the Dispatcher component.

The dispatcher is the entry point of a decision run: it splits the input graph into
connected components, runs the pipeline on each one through a worker, and merges the
per-component outcomes in component order.
"""

import concurrent.futures
from typing import Optional, Protocol, runtime_checkable

from coarse_linewidth.domain.graph import Graph
from coarse_linewidth.domain.metric import TieBreakerSpec
from coarse_linewidth.domain.pipeline import PipelineOutcome
from coarse_linewidth.domain.schedule import Schedule


@runtime_checkable
class DispatcherInterface(Protocol):
    """Contract for running the pipeline on arbitrary (possibly disconnected) graphs."""

    def decide(
        self,
        graph: Graph,
        schedule: Schedule,
        tiebreak: TieBreakerSpec = TieBreakerSpec(),
        timeout: Optional[float] = None,
    ) -> PipelineOutcome:
        """
        Run the pipeline and wait for the merged outcome (blocking mode).

        Args:
            graph: Input graph; components are decided independently.
            schedule: Separation tables and budgets.
            tiebreak: Edge ranking description, restricted to each component.
            timeout: Seconds to wait before giving up.

        Returns:
            A certificate for the whole graph, or the witness of the first component
            (in order of least vertex) that has one.

        Raises:
            TimeoutError: If the run takes longer than ``timeout``.
            WorkerNotRunningError: If the worker is not available.
            CoarseWidthError: Anything the pipeline raises.

        Example:
            outcome = dispatcher.decide(graph, make_schedule(2, 1), timeout=60)
        """
        ...

    def decide_async(
        self,
        graph: Graph,
        schedule: Schedule,
        tiebreak: TieBreakerSpec = TieBreakerSpec(),
    ) -> concurrent.futures.Future[PipelineOutcome]:
        """
        Start a run and return immediately (non-blocking mode).

        Example:
            future = dispatcher.decide_async(graph, schedule)
            outcome = future.result(timeout=60)
        """
        ...

    def shutdown(self) -> None:
        """Cancel the runs still in flight and release the worker."""
        ...
