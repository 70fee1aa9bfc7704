"""
Shared fixtures and graph builders.
"""

import pytest
from hypothesis import strategies as st

from coarse_linewidth.config import Settings
from coarse_linewidth.domain.graph import Graph
from coarse_linewidth.domain.schedule import make_schedule
from coarse_linewidth.infrastructure.corpus import CorpusSpec, generate


def path_graph(n: int) -> Graph:
    return generate(CorpusSpec("path", {"n": n}))


def cycle_graph(n: int) -> Graph:
    return generate(CorpusSpec("cycle", {"n": n}))


def star_graph(arms: int, arm_len: int) -> Graph:
    """Subdivided star; arm h runs 0, base_h, ..., base_h + arm_len - 1, h."""
    return generate(CorpusSpec("subdivided_star", {"arms": arms, "arm_len": arm_len}))


def arm(h: int, arm_len: int, arms: int = 3) -> list:
    """Vertices of arm ``h`` of ``star_graph(arms, arm_len)``, center first."""
    base = arms + 1 + (h - 1) * arm_len
    return [0] + list(range(base, base + arm_len)) + [h]


def complete_graph(n: int) -> Graph:
    return Graph.from_edge_list(n, [(u, v) for u in range(n) for v in range(u + 1, n)])


@st.composite
def small_graphs(draw, min_vertices: int = 1, max_vertices: int = 7, connected: bool = False):
    """Random simple graphs; connected ones get a random spanning tree first."""
    n = draw(st.integers(min_vertices, max_vertices))
    pairs = [(u, v) for u in range(n) for v in range(u + 1, n)]
    edges = set()
    if connected:
        for v in range(1, n):
            edges.add((draw(st.integers(0, v - 1)), v))
    if pairs:
        edges |= set(draw(st.lists(st.sampled_from(pairs), max_size=2 * n)))
    return Graph.from_edge_list(n, sorted(edges))


@pytest.fixture
def paper_schedule():
    return make_schedule(2, 1, "paper")


@pytest.fixture
def minimal_schedule():
    return make_schedule(2, 1, "minimal")


@pytest.fixture
def small_settings():
    """Settings with tight caps so the oracle limits are easy to hit."""
    return Settings(search_budget=500, pathwidth_cap=6, minor_pattern_cap=4)
