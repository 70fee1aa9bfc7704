"""
Infrastructure layer: worker threads, JSON codec and graph corpus.
"""

from coarse_linewidth.infrastructure.dispatcher import Dispatcher
from coarse_linewidth.infrastructure.event_loop import EventLoop
from coarse_linewidth.infrastructure.worker import Worker

__all__ = ["Dispatcher", "EventLoop", "Worker"]
