"""
Tests for the Dispatcher: component splitting, merging and task execution.

The Dispatcher should:
1. Decide any graph by running its components on the worker
2. Lift component outcomes back to the input graph
3. Handle the task lifecycle (timeouts, errors, fire-and-forget)
4. Stop timed-out runs instead of leaving them on the executor
5. Release its worker when shut down or destroyed
"""

import asyncio
import concurrent.futures
import time

import pytest

from coarse_linewidth import core
from coarse_linewidth.config import Settings
from coarse_linewidth.domain.dispatcher import DispatcherInterface
from coarse_linewidth.domain.graph import Graph
from coarse_linewidth.domain.metric import TieBreakerSpec
from coarse_linewidth.domain.minors import vertex_part, verify_superfat
from coarse_linewidth.domain.pipeline import (
    CERTIFICATE,
    WITNESS,
    PipelineOutcome,
    run_pipeline,
    verify_outcome,
)
from coarse_linewidth.exceptions import GraphFormatError, PreconditionError
from coarse_linewidth.infrastructure import Dispatcher
from coarse_linewidth.infrastructure.codec import witness_to_dict
from coarse_linewidth.infrastructure.dispatcher import merge_outcomes, split_components
from tests.conftest import star_graph
from tests.test_minors import hand_built_claw


def disjoint_union(*graphs: Graph) -> Graph:
    edges = []
    offset = 0
    for graph in graphs:
        edges.extend((u + offset, v + offset) for u, v in graph.edges)
        offset += graph.vertex_count
    return Graph.from_edge_list(offset, edges)


@pytest.fixture
def dispatcher_fixture():
    """
    Fixture that provides a clean Dispatcher instance and ensures proper cleanup.
    """
    dispatcher = Dispatcher(Settings())
    yield dispatcher
    # Cleanup will happen automatically in __del__


def test_dispatcher_should_implement_interface():
    """Test that Dispatcher implements the DispatcherInterface."""
    dispatcher = Dispatcher(Settings())
    assert isinstance(dispatcher, DispatcherInterface)


def test_split_components_should_order_jobs_by_least_vertex(minimal_schedule):
    """Test one relabelled job per component."""
    graph = Graph.from_edge_list(6, [(3, 4), (0, 5), (1, 2)])
    jobs = split_components(graph, minimal_schedule, TieBreakerSpec(), Settings())
    assert [job.mapping for job in jobs] == [(0, 5), (1, 2), (3, 4)]
    assert [job.index for job in jobs] == [0, 1, 2]
    assert all(job.graph.edges == ((0, 1),) for job in jobs)
    assert all(job.tiebreaker.edge_count == 1 for job in jobs)
    with pytest.raises(PreconditionError):
        split_components(
            Graph.from_edge_list(0, []), minimal_schedule, TieBreakerSpec(), Settings()
        )


def test_merge_outcomes_should_prefer_a_component_witness(minimal_schedule):
    """Test that a witness found in the second component is lifted to the input graph."""
    graph = disjoint_union(Graph.from_edge_list(3, [(0, 1), (1, 2)]), star_graph(3, 20))
    jobs = split_components(graph, minimal_schedule, TieBreakerSpec(), Settings())
    assert jobs[1].graph == star_graph(3, 20)
    first = run_pipeline(jobs[0].graph, jobs[0].tiebreaker, minimal_schedule)
    second = PipelineOutcome(WITNESS, minimal_schedule, witness=hand_built_claw())
    merged = merge_outcomes(graph, jobs, [first, second])
    assert merged.kind == WITNESS
    lifted = frozenset(v + 3 for v in second.witness.eta[vertex_part(1)])
    assert merged.witness.eta[vertex_part(1)] == lifted
    assert verify_superfat(graph, 1, merged.witness)
    assert {entry.detail["component"] for entry in merged.audit} == {0}


def test_dispatcher_should_decide_a_connected_graph(dispatcher_fixture, paper_schedule):
    """Test a blocking decision on a path."""
    graph = Graph.from_edge_list(6, [(i, i + 1) for i in range(5)])
    outcome = dispatcher_fixture.decide(graph, paper_schedule)
    assert outcome.kind == CERTIFICATE
    assert verify_outcome(graph, outcome)
    assert all("component" not in entry.detail for entry in outcome.audit)


def test_dispatcher_should_merge_certificates_of_components(
    dispatcher_fixture, minimal_schedule
):
    """Test that a disconnected graph gets one certificate covering every component."""
    graph = Graph.from_edge_list(7, [(0, 1), (1, 2), (3, 4), (5, 6)])
    outcome = dispatcher_fixture.decide(graph, minimal_schedule, TieBreakerSpec("seeded", 3))
    assert outcome.kind == CERTIFICATE
    assert outcome.certificate.subject == frozenset(range(7))
    assert verify_outcome(graph, outcome)
    assert {entry.detail["component"] for entry in outcome.audit} == {0, 1, 2}


def test_dispatcher_decide_async_should_return_future(dispatcher_fixture, minimal_schedule):
    """Test that decide_async hands back a Future with the outcome."""
    graph = Graph.from_edge_list(30, [(i, i + 1) for i in range(29)])
    future = dispatcher_fixture.decide_async(graph, minimal_schedule)
    assert isinstance(future, concurrent.futures.Future)
    outcome = future.result(timeout=60)
    assert outcome.kind == CERTIFICATE
    assert verify_outcome(graph, outcome)


def test_dispatcher_should_raise_preconditions_before_dispatching(
    dispatcher_fixture, paper_schedule
):
    """Test that an empty graph is refused in the caller's thread."""
    with pytest.raises(PreconditionError):
        dispatcher_fixture.decide(Graph.from_edge_list(0, []), paper_schedule)


def test_dispatcher_should_execute_simple_task(dispatcher_fixture):
    """Test that dispatcher can execute a simple async task."""

    async def simple_task():
        return "success"

    assert dispatcher_fixture.execute(simple_task()) == "success"


def test_dispatcher_should_handle_timeout(dispatcher_fixture):
    """Test that dispatcher respects timeout constraints."""

    async def slow_task():
        await asyncio.sleep(0.2)
        return "completed"

    with pytest.raises(TimeoutError):
        dispatcher_fixture.execute(slow_task(), timeout=0.1)


def test_dispatcher_should_cancel_task_on_timeout(dispatcher_fixture):
    """Test that dispatcher properly cancels tasks on timeout."""
    completion_flag = False

    async def monitored_task():
        nonlocal completion_flag
        await asyncio.sleep(0.3)
        completion_flag = True
        return "done"

    with pytest.raises(TimeoutError):
        dispatcher_fixture.execute(monitored_task(), timeout=0.1)

    time.sleep(0.5)
    assert not completion_flag


def test_dispatcher_should_propagate_exceptions(dispatcher_fixture):
    """Test that dispatcher properly propagates exceptions from tasks."""

    async def failing_task():
        raise PreconditionError("component failed")

    with pytest.raises(PreconditionError, match="component failed"):
        dispatcher_fixture.execute(failing_task())


def test_dispatcher_execute_async_should_run_tasks_concurrently(dispatcher_fixture):
    """Test that several execute_async calls overlap on the worker loop."""

    async def numbered_task(number: int):
        await asyncio.sleep(0.1)
        return f"component_{number}"

    start_time = time.time()
    futures = [dispatcher_fixture.execute_async(numbered_task(i)) for i in range(3)]
    results = [future.result(timeout=1.0) for future in futures]

    assert time.time() - start_time < 0.25
    assert results == ["component_0", "component_1", "component_2"]


def test_dispatcher_should_cleanup_resources_on_deletion():
    """Test that dispatcher properly cleans up resources when deleted."""
    dispatcher = Dispatcher(Settings())
    worker = dispatcher._worker

    async def simple_task():
        return "done"

    dispatcher.execute(simple_task())
    assert worker.is_running()

    del dispatcher

    assert not worker.is_running()


def test_decide_should_reuse_the_global_dispatcher(minimal_schedule):
    """Test the blocking and fire-and-forget facade on one dispatcher."""
    graph = Graph.from_edge_list(4, [(0, 1), (1, 2), (2, 3)])
    outcome = core.decide(graph, minimal_schedule, settings=Settings())
    dispatcher = core._dispatcher
    future = core.decide(graph, minimal_schedule, fire_and_forget=True, settings=Settings())
    assert isinstance(future, concurrent.futures.Future)
    assert future.result(timeout=60).certificate.subject == outcome.certificate.subject
    assert core._dispatcher is dispatcher


@pytest.mark.asyncio
async def test_decide_async_should_not_block_the_running_loop(minimal_schedule):
    """Test awaiting a decision while the caller's loop keeps serving other tasks."""
    graph = Graph.from_edge_list(40, [(i, i + 1) for i in range(39)])
    ticks = []

    async def ticker():
        for _ in range(3):
            ticks.append(1)
            await asyncio.sleep(0)

    outcome, _ = await asyncio.gather(
        core.decide_async(graph, minimal_schedule, settings=Settings()), ticker()
    )
    assert outcome.kind == CERTIFICATE
    assert len(ticks) == 3


def test_verify_payload_should_dispatch_on_the_kind(minimal_schedule):
    """Test the payload kinds accepted by the facade."""
    graph = star_graph(3, 20)
    document = witness_to_dict(hand_built_claw())
    assert core.verify_payload(graph, "witness", document)
    assert core.verify_payload(graph, "decomposition", {"bags": [list(graph.vertices)]})
    with pytest.raises(GraphFormatError):
        core.verify_payload(graph, "qi", {"phi": [0], "L": 1, "C": 0})
    with pytest.raises(GraphFormatError):
        core.verify_payload(graph, "drawing", {})


def test_split_components_should_share_one_cancel_flag(minimal_schedule):
    """Test that every job of a decision sees the same flag."""
    graph = Graph.from_edge_list(4, [(0, 1), (2, 3)])
    jobs = split_components(graph, minimal_schedule, TieBreakerSpec(), Settings())
    jobs[1].cancel.set()
    assert jobs[0].cancel.is_set()


def test_dispatcher_should_stop_a_timed_out_run(dispatcher_fixture, paper_schedule):
    """Test that a timed-out decide returns and the worker goes idle."""
    graph = Graph.from_edge_list(5000, [(i, i + 1) for i in range(4999)])
    worker = dispatcher_fixture._worker

    with pytest.raises(TimeoutError):
        dispatcher_fixture.decide(graph, paper_schedule, timeout=0.001)

    deadline = time.monotonic() + 60
    while worker.busy_jobs() and time.monotonic() < deadline:
        time.sleep(0.01)
    assert worker.busy_jobs() == 0


def test_dispatcher_shutdown_should_cancel_fire_and_forget_runs(paper_schedule):
    """Test that shutdown cancels a pending decision and stops the worker."""
    dispatcher = Dispatcher(Settings())
    graph = Graph.from_edge_list(5000, [(i, i + 1) for i in range(4999)])
    future = dispatcher.decide_async(graph, paper_schedule)

    dispatcher.shutdown()

    assert future.cancelled()
    assert not dispatcher._worker.is_running()


def test_core_shutdown_should_clear_the_global_dispatcher(minimal_schedule):
    """Test that shutdown stops the global dispatcher and a later decide recreates it."""
    graph = Graph.from_edge_list(3, [(0, 1), (1, 2)])
    core.decide(graph, minimal_schedule, settings=Settings())
    worker = core._dispatcher._worker

    core.shutdown()
    core.shutdown()

    assert core._dispatcher is None
    assert not worker.is_running()
    assert core.decide(graph, minimal_schedule, settings=Settings()).kind == CERTIFICATE
    assert core._dispatcher is not None


def test_decide_should_shut_down_a_replaced_dispatcher(minimal_schedule):
    """Test that new settings stop the worker of the previous global dispatcher."""
    graph = Graph.from_edge_list(3, [(0, 1), (1, 2)])
    core.decide(graph, minimal_schedule, settings=Settings())
    previous = core._dispatcher

    core.decide(graph, minimal_schedule, settings=Settings(search_budget=1_000))

    assert core._dispatcher is not previous
    assert not previous._worker.is_running()
