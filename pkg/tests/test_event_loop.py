"""
Tests del EventLoop que ejecuta el pipeline fuera del hilo del llamador.

Verifican:
1. Ciclo de vida (start, running, shutdown)
2. Ejecución de corrutinas y de awaitables que no son corrutinas
3. Que el trabajo pesado enviado a un executor no bloquea el loop
4. Que shutdown cancela lo pendiente y los loops vivos se detienen al salir
"""

import asyncio
import concurrent.futures
import threading

import pytest

from coarse_linewidth.domain.metric import TieBreaker
from coarse_linewidth.domain.pipeline import run_pipeline
from coarse_linewidth.infrastructure import EventLoop
from coarse_linewidth.infrastructure.event_loop import shutdown_live_loops
from tests.conftest import path_graph


@pytest.fixture
def event_loop_fixture():
    """
    Fixture que proporciona una instancia limpia de EventLoop.
    """
    loop = EventLoop(name="CwlTestLoop")
    yield loop
    if loop.is_running():
        loop.shutdown()


def test_should_start_in_clean_state(event_loop_fixture):
    """Test que verifica estado inicial limpio."""
    assert not event_loop_fixture.is_running()


def test_start_should_be_idempotent(event_loop_fixture):
    """Test que verifica que start() no crea un segundo loop."""
    event_loop_fixture.start()
    original_loop = event_loop_fixture._loop

    event_loop_fixture.start()

    assert event_loop_fixture.is_running()
    assert event_loop_fixture._loop is original_loop


def test_should_run_on_a_named_daemon_thread(event_loop_fixture):
    """Test que verifica que el loop vive en su propio hilo daemon."""

    async def current():
        return threading.current_thread()

    thread = event_loop_fixture.run_coroutine(current()).result(timeout=1.0)

    assert thread.name == "CwlTestLoop"
    assert thread.daemon
    assert thread is not threading.current_thread()


def test_should_accept_awaitables_that_are_not_coroutines(event_loop_fixture):
    """Test que verifica que un Future del loop también se puede enviar."""
    event_loop_fixture.start()
    loop = event_loop_fixture._loop
    pending = asyncio.run_coroutine_threadsafe(_make_future(), loop).result(timeout=1.0)

    # When: enviamos un awaitable que no es corrutina
    future = event_loop_fixture.run_coroutine(pending)
    loop.call_soon_threadsafe(pending.set_result, "listo")

    # Then: se resuelve con su valor
    assert future.result(timeout=1.0) == "listo"


async def _make_future() -> asyncio.Future:
    return asyncio.get_running_loop().create_future()


def test_should_run_the_pipeline_in_the_executor(event_loop_fixture, minimal_schedule):
    """Test que verifica que el pipeline corre vía to_thread sin bloquear el loop."""
    graph = path_graph(50)

    async def decide_and_tick():
        ticks = []

        async def ticker():
            for _ in range(3):
                ticks.append(1)
                await asyncio.sleep(0)

        outcome, _ = await asyncio.gather(
            asyncio.to_thread(run_pipeline, graph, TieBreaker.lex(graph), minimal_schedule),
            ticker(),
        )
        return outcome, len(ticks)

    outcome, ticks = event_loop_fixture.run_coroutine(decide_and_tick()).result(timeout=60)

    assert outcome.certificate.subject == frozenset(range(50))
    assert ticks == 3


def test_should_handle_coroutine_exceptions(event_loop_fixture):
    """Test que verifica que las excepciones llegan al Future."""

    async def failing_coroutine():
        raise ValueError("grafo vacío")

    future = event_loop_fixture.run_coroutine(failing_coroutine())

    with pytest.raises(ValueError, match="grafo vacío"):
        future.result(timeout=1.0)


def test_shutdown_should_be_safe_to_call_multiple_times(event_loop_fixture):
    """Test que verifica que shutdown() es seguro de llamar varias veces."""
    event_loop_fixture.start()
    event_loop_fixture.shutdown()

    event_loop_fixture.shutdown()

    assert not event_loop_fixture.is_running()
    assert event_loop_fixture._loop is None


def test_run_coroutine_should_auto_start_if_not_running(event_loop_fixture):
    """Test que verifica auto-inicio al enviar la primera corrutina."""

    async def first():
        return "auto_started"

    future = event_loop_fixture.run_coroutine(first())

    assert event_loop_fixture.is_running()
    assert future.result(timeout=1.0) == "auto_started"


def test_should_run_jobs_on_its_own_executor(event_loop_fixture):
    """Test que verifica que to_thread usa el pool propio del loop."""

    async def job_thread():
        return await asyncio.to_thread(lambda: threading.current_thread().name)

    name = event_loop_fixture.run_coroutine(job_thread()).result(timeout=5.0)

    assert name.startswith("CwlTestLoop-job")


def test_shutdown_should_cancel_pending_coroutines(event_loop_fixture):
    """Test que verifica que shutdown() cancela las corrutinas que siguen esperando."""

    async def never_ends():
        await asyncio.sleep(3600)

    future = event_loop_fixture.run_coroutine(never_ends())
    event_loop_fixture.shutdown()

    with pytest.raises(concurrent.futures.CancelledError):
        future.result(timeout=1.0)
    assert not event_loop_fixture.is_running()


def test_shutdown_live_loops_should_stop_every_running_loop():
    """Test que verifica el hook de salida sobre varios loops vivos."""
    loops = [EventLoop(name=f"CwlExitLoop{i}") for i in range(2)]
    for loop in loops:
        loop.start()

    shutdown_live_loops()

    assert not any(loop.is_running() for loop in loops)
