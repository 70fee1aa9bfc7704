"""
Dispatcher that decides arbitrary graphs component by component.

This module provides the concrete implementation of the DispatcherInterface: the input
graph is split into connected components, each component runs through the worker, and
the outcomes are merged in order of least vertex.
"""

import asyncio
import concurrent.futures
import logging
import threading
from typing import Awaitable, List, Optional, Sequence, Set, TypeVar

from coarse_linewidth.config import Settings, get_settings
from coarse_linewidth.domain.decomposition import concatenate_certificates
from coarse_linewidth.domain.dispatcher import DispatcherInterface
from coarse_linewidth.domain.graph import Graph, components
from coarse_linewidth.domain.metric import TieBreakerSpec
from coarse_linewidth.domain.pipeline import (
    CERTIFICATE,
    WITNESS,
    AuditEntry,
    PipelineOutcome,
    verify_outcome,
)
from coarse_linewidth.domain.schedule import Schedule
from coarse_linewidth.domain.worker import ComponentJob
from coarse_linewidth.exceptions import (
    InvariantViolation,
    PreconditionError,
    WorkerNotRunningError,
)
from coarse_linewidth.infrastructure.worker import Worker

logger = logging.getLogger(__name__)
T = TypeVar("T")


def split_components(
    graph: Graph,
    schedule: Schedule,
    tiebreak: TieBreakerSpec,
    settings: Settings,
    cancel: Optional[threading.Event] = None,
) -> List[ComponentJob]:
    """One job per connected component, ordered by least vertex, all sharing ``cancel``."""
    if graph.vertex_count == 0:
        raise PreconditionError("the graph has no vertices")
    if cancel is None:
        cancel = threading.Event()
    tb = tiebreak.materialize(graph)
    jobs = []
    for index, members in enumerate(sorted(components(graph), key=min)):
        sub, order = graph.induced_subgraph(members)
        jobs.append(
            ComponentJob(
                index, sub, tb.restrict(order), schedule, tuple(order), settings, cancel
            )
        )
    return jobs


def merge_outcomes(
    graph: Graph, jobs: Sequence[ComponentJob], outcomes: Sequence[PipelineOutcome]
) -> PipelineOutcome:
    """
    Lift per-component outcomes back to ``graph``.

    The witness of the first component that has one wins; otherwise the component
    certificates are concatenated.
    """
    schedule = jobs[0].schedule
    audit: List[AuditEntry] = []
    for job, outcome in zip(jobs, outcomes):
        for entry in outcome.audit:
            detail = dict(entry.detail)
            if len(jobs) > 1:
                detail["component"] = job.index
            audit.append(AuditEntry(entry.century, entry.op, detail))
    witness = next(
        (
            outcome.witness.map_vertices(job.mapping)
            for job, outcome in zip(jobs, outcomes)
            if outcome.kind == WITNESS and outcome.witness is not None
        ),
        None,
    )
    if witness is not None:
        merged = PipelineOutcome(WITNESS, schedule, witness=witness, audit=tuple(audit))
    else:
        lifted = [
            outcome.certificate.map_vertices(job.mapping)
            for job, outcome in zip(jobs, outcomes)
            if outcome.certificate is not None
        ]
        certificate = concatenate_certificates(graph, lifted)
        merged = PipelineOutcome(
            CERTIFICATE, schedule, certificate=certificate, audit=tuple(audit)
        )
    verdict = verify_outcome(graph, merged)
    if not verdict:
        raise InvariantViolation("merge_outcomes", verdict.reason or "", schedule.ell)
    return merged


class Dispatcher(DispatcherInterface):
    """
    Dispatcher that runs decisions on a dedicated worker.
    """

    def __init__(self, settings: Optional[Settings] = None) -> None:
        self._settings = settings or get_settings()
        self._worker = Worker()
        self._running: Set[threading.Event] = set()
        self._worker.start()
        logger.debug("Dispatcher initialized and worker started")

    @property
    def settings(self) -> Settings:
        return self._settings

    async def _decide(self, graph: Graph, jobs: Sequence[ComponentJob]) -> PipelineOutcome:
        cancel = jobs[0].cancel
        self._running.add(cancel)
        try:
            outcomes = await asyncio.gather(*(self._worker.solve(job) for job in jobs))
        except BaseException:
            # a failed or cancelled component stops its siblings too
            cancel.set()
            raise
        finally:
            self._running.discard(cancel)
        return merge_outcomes(graph, jobs, outcomes)

    def execute(self, task: Awaitable[T], timeout: Optional[float] = None) -> T:
        """
        Execute a coroutine on the worker and wait for its completion.

        Raises:
            TimeoutError: If the task takes longer than timeout seconds
            WorkerNotRunningError: If the worker is not available
        """
        future = self._worker.run_coroutine(task)
        if future is None:
            raise WorkerNotRunningError("Worker is not available to execute task")

        try:
            if timeout is not None:
                return future.result(timeout=timeout)
            return future.result()
        except (asyncio.TimeoutError, concurrent.futures.TimeoutError):
            future.cancel()
            raise TimeoutError(f"Task took longer than {timeout} seconds")
        except Exception as e:
            if not future.done():
                future.cancel()
            raise e

    def execute_async(self, task: Awaitable[T]) -> concurrent.futures.Future[T]:
        """Start a coroutine on the worker and return its Future immediately."""
        future = self._worker.run_coroutine(task)
        if future is None:
            raise WorkerNotRunningError("Worker is not available to execute task")
        return future

    def decide(
        self,
        graph: Graph,
        schedule: Schedule,
        tiebreak: TieBreakerSpec = TieBreakerSpec(),
        timeout: Optional[float] = None,
    ) -> PipelineOutcome:
        jobs = split_components(graph, schedule, tiebreak, self._settings)
        logger.info(f"Deciding {graph!r} as {len(jobs)} component(s)")
        timeout = self._settings.timeout if timeout is None else timeout
        try:
            return self.execute(self._decide(graph, jobs), timeout)
        except TimeoutError:
            jobs[0].cancel.set()
            raise

    def decide_async(
        self,
        graph: Graph,
        schedule: Schedule,
        tiebreak: TieBreakerSpec = TieBreakerSpec(),
    ) -> concurrent.futures.Future[PipelineOutcome]:
        jobs = split_components(graph, schedule, tiebreak, self._settings)
        logger.debug(f"Deciding {graph!r} in fire-and-forget mode")
        return self.execute_async(self._decide(graph, jobs))

    def shutdown(self) -> None:
        """Cancel the decisions still running and stop the worker."""
        for cancel in list(getattr(self, "_running", ())):
            cancel.set()
        worker = getattr(self, "_worker", None)
        if worker is not None:
            worker.shutdown()
        logger.debug("Dispatcher shut down")

    def __del__(self) -> None:
        """Cleanup when the dispatcher is destroyed."""
        self.shutdown()
