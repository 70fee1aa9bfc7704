"""
Module-level entry points backed by a lazily created dispatcher.
"""

import asyncio
import atexit
import concurrent.futures
import logging
from typing import Any, Mapping, Optional, Union

from coarse_linewidth.config import Settings
from coarse_linewidth.domain.decomposition import (
    decomposition_width,
    verify_line_decomposition,
    verify_quasi_bound,
)
from coarse_linewidth.domain.graph import Graph
from coarse_linewidth.domain.metric import TieBreakerSpec
from coarse_linewidth.domain.minors import (
    verify_fat_minor,
    verify_quasi_isometry,
    verify_superfat,
)
from coarse_linewidth.domain.pipeline import PipelineOutcome, verify_outcome
from coarse_linewidth.domain.schedule import Schedule
from coarse_linewidth.domain.verdict import Verdict
from coarse_linewidth.exceptions import GraphFormatError
from coarse_linewidth.infrastructure import codec
from coarse_linewidth.infrastructure.dispatcher import Dispatcher

logger = logging.getLogger(__name__)

PAYLOAD_KINDS = ("certificate", "witness", "fatminor", "decomposition", "qi", "outcome")

_dispatcher: Optional[Dispatcher] = None


def _get_dispatcher(settings: Optional[Settings] = None) -> Dispatcher:
    global _dispatcher

    if _dispatcher is None:
        _dispatcher = Dispatcher(settings)
    elif settings is not None and settings != _dispatcher.settings:
        logger.debug("Settings changed, replacing the dispatcher")
        _dispatcher.shutdown()
        _dispatcher = Dispatcher(settings)
    return _dispatcher


def shutdown() -> None:
    """
    Stop the global dispatcher, cancelling any decision still running.

    Safe to call more than once; the next ``decide`` creates a fresh dispatcher.
    """
    global _dispatcher

    if _dispatcher is not None:
        _dispatcher.shutdown()
        _dispatcher = None
        logger.debug("Global dispatcher shut down")


atexit.register(shutdown)


def decide(
    graph: Graph,
    schedule: Schedule,
    tiebreak: TieBreakerSpec = TieBreakerSpec(),
    timeout: Optional[float] = None,
    fire_and_forget: bool = False,
    settings: Optional[Settings] = None,
) -> Union[PipelineOutcome, concurrent.futures.Future[PipelineOutcome]]:
    """
    Decide a graph: a quasi-line-width certificate or a superfat H_ell witness.

    Components run in parallel on a dedicated worker thread; the caller's thread (and
    any event loop it runs) is never used for the computation.

    Args:
        graph: The input graph, connected or not.
        schedule: Separation tables for ``(c, ell)``.
        tiebreak: Edge ranking used for every Lambda comparison.
        timeout: Seconds to wait for the result. Only applies when fire_and_forget=False.
        fire_and_forget: Return a Future immediately instead of blocking.
        settings: Search limits; the environment settings when omitted. Settings that
            differ from the current ones replace the global dispatcher, cancelling runs
            still in flight on the old one.

    Returns:
        - If fire_and_forget=False: The verified PipelineOutcome
        - If fire_and_forget=True: A concurrent.futures.Future[PipelineOutcome]

    Raises:
        TimeoutError: If the run times out (only when fire_and_forget=False)
        WorkerNotRunningError: If the worker is not available
        CoarseWidthError: Anything the pipeline raises (only when fire_and_forget=False)

    Examples:
        outcome = decide(graph, make_schedule(2, 1, "paper"))

        future = decide(graph, schedule, fire_and_forget=True)
        outcome = future.result(timeout=300)
    """
    dispatcher = _get_dispatcher(settings)

    if fire_and_forget:
        return dispatcher.decide_async(graph, schedule, tiebreak)
    else:
        return dispatcher.decide(graph, schedule, tiebreak, timeout)


async def decide_async(
    graph: Graph,
    schedule: Schedule,
    tiebreak: TieBreakerSpec = TieBreakerSpec(),
    settings: Optional[Settings] = None,
) -> PipelineOutcome:
    """
    Await a decision from inside a running event loop.

    The computation still runs on the dispatcher's worker thread; the caller's loop only
    waits on the wrapped future.

    Examples:
        outcome = await decide_async(graph, make_schedule(2, 1, "minimal"))
    """
    future = _get_dispatcher(settings).decide_async(graph, schedule, tiebreak)
    return await asyncio.wrap_future(future)


def verify_payload(
    graph: Graph,
    kind: str,
    document: Mapping[str, Any],
    ell: Optional[int] = None,
    a: Optional[int] = None,
    b: Optional[int] = None,
    target: Optional[Graph] = None,
) -> Verdict:
    """
    Run the verifier matching ``kind`` on a decoded JSON payload.

    Args:
        graph: Host graph the payload refers to.
        kind: One of ``PAYLOAD_KINDS``.
        document: The payload document.
        ell: Pattern depth for witnesses; the witness's own depth when omitted.
        a: Center count for certificates; the certificate's own when omitted.
        b: Radius for certificates; the certificate's own when omitted.
        target: Coarse graph for ``qi`` payloads.

    Raises:
        GraphFormatError: On an unknown kind or a malformed payload.
    """
    if kind == "certificate":
        certificate = codec.certificate_from_dict(document, graph)
        return verify_quasi_bound(graph, certificate, a, b)
    if kind == "witness":
        model = codec.witness_from_dict(document, graph)
        return verify_superfat(graph, model.ell if ell is None else ell, model)
    if kind == "fatminor":
        fat = codec.fat_minor_from_dict(document, graph)
        return verify_fat_minor(graph, fat.pattern, fat)
    if kind == "decomposition":
        decomposition = codec.decomposition_from_dict(document, graph)
        verdict = verify_line_decomposition(graph, graph.vertices, decomposition)
        if verdict:
            logger.info(f"Decomposition verified with width {decomposition_width(decomposition)}")
        return verdict
    if kind == "qi":
        if target is None:
            raise GraphFormatError("qi payloads need a target graph")
        return verify_quasi_isometry(graph, target, codec.qi_from_dict(document))
    if kind == "outcome":
        return verify_outcome(graph, codec.outcome_from_dict(document, graph))
    raise GraphFormatError(f"unknown payload kind {kind!r}, expected one of {PAYLOAD_KINDS}")
