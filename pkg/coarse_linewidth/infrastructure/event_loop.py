"""
EventLoop component that runs pipeline coroutines on a dedicated thread.

Each loop owns the thread pool its pipeline jobs run in. Loops still alive when the
interpreter exits are stopped by an ``atexit`` hook, before finalization can freeze
their daemon thread.
"""

import asyncio
import atexit
import concurrent.futures
import logging
import threading
import weakref
from typing import Awaitable, Coroutine, Optional, TypeVar

logger = logging.getLogger(__name__)
T = TypeVar("T")

_live_loops: "weakref.WeakSet[EventLoop]" = weakref.WeakSet()


def shutdown_live_loops() -> None:
    """Stop every event loop that is still running."""
    for loop in list(_live_loops):
        loop.shutdown()


atexit.register(shutdown_live_loops)


class EventLoop:
    """
    Event loop living on its own daemon thread, with a private job executor.

    The caller's thread never runs the loop, so decisions can be requested from
    scripts, notebooks or servers that already own a loop.
    """

    def __init__(self, name: str = "CoarseWidthWorker", max_jobs: Optional[int] = None) -> None:
        self._name = name
        self._max_jobs = max_jobs
        self._loop: Optional[asyncio.AbstractEventLoop] = None
        self._thread: Optional[threading.Thread] = None
        self._executor: Optional[concurrent.futures.ThreadPoolExecutor] = None
        self._is_running = False

    def start(self) -> None:
        """Start the event loop in a dedicated thread."""
        if self._is_running:
            logger.debug("EventLoop is already running")
            return

        try:
            self._loop = asyncio.new_event_loop()
            self._executor = concurrent.futures.ThreadPoolExecutor(
                max_workers=self._max_jobs, thread_name_prefix=f"{self._name}-job"
            )
            self._loop.set_default_executor(self._executor)
            self._thread = threading.Thread(
                target=self._run_loop_forever, daemon=True, name=self._name
            )
            self._thread.start()
            self._is_running = True
            _live_loops.add(self)
            logger.info(f"Started event loop thread {self._name}")

        except Exception as e:
            logger.error(f"Failed to start event loop: {e}")
            self._is_running = False

    def _run_loop_forever(self) -> None:
        asyncio.set_event_loop(self._loop)
        if self._loop:
            self._loop.run_forever()

    def run_coroutine(self, coro: Awaitable[T]) -> Optional[concurrent.futures.Future[T]]:
        """
        Schedule a coroutine on the loop thread, starting the loop if needed.

        Returns:
            A concurrent.futures.Future for the result, or None if scheduling failed
        """
        if not self._is_running:
            self.start()

        if not self._is_running or self._loop is None:
            logger.error("No event loop available")
            return None

        try:
            if not isinstance(coro, Coroutine):

                async def wrapper():
                    return await coro

                coro_to_run = wrapper()
            else:
                coro_to_run = coro

            return asyncio.run_coroutine_threadsafe(coro_to_run, self._loop)
        except Exception as e:
            logger.error(f"Failed to run coroutine: {e}")
            return None

    async def _cancel_pending(self) -> None:
        current = asyncio.current_task()
        pending = [task for task in asyncio.all_tasks() if task is not current]
        for task in pending:
            task.cancel()
        if pending:
            await asyncio.gather(*pending, return_exceptions=True)

    def shutdown(self, timeout: float = 2.0) -> None:
        """
        Cancel pending coroutines, stop the loop, join its thread and drop queued jobs.

        Jobs already running in the executor are not waited for; they see their
        cancellation flag through the cancelled coroutines and stop on their own.
        """
        if not self._is_running:
            return
        _live_loops.discard(self)

        loop, thread, executor = self._loop, self._thread, self._executor
        try:
            if loop is not None and not loop.is_closed():
                logger.info(f"Shutting down event loop thread {self._name}")
                if thread is not None and thread.is_alive():
                    try:
                        asyncio.run_coroutine_threadsafe(self._cancel_pending(), loop).result(
                            timeout
                        )
                    except Exception as e:
                        logger.debug(f"Pending tasks not drained: {e!r}")
                    loop.call_soon_threadsafe(loop.stop)
                    thread.join(timeout=timeout)
                if thread is None or not thread.is_alive():
                    loop.close()
                else:
                    logger.warning(f"Event loop thread {self._name} did not stop in {timeout}s")
            if executor is not None:
                executor.shutdown(wait=False, cancel_futures=True)

        except Exception as e:
            logger.error(f"Error during shutdown: {e}")
        finally:
            self._loop = None
            self._thread = None
            self._executor = None
            self._is_running = False

    def is_running(self) -> bool:
        return self._is_running and self._loop is not None and not self._loop.is_closed()
