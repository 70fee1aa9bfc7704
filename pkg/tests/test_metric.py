"""
Tests for the tie-broken metric: Lambda order, geodesics and Voronoi cells.
"""

import networkx as nx
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from coarse_linewidth.domain.graph import Graph, is_connected_induced
from coarse_linewidth.domain.metric import (
    LambdaPath,
    TieBreaker,
    TieBreakerSpec,
    adjoins,
    lambda_closest,
    lambda_compare,
    lambda_geodesic,
    lambda_key,
    voronoi_partition,
)
from coarse_linewidth.exceptions import GraphFormatError, PreconditionError
from tests.conftest import cycle_graph, path_graph, small_graphs


def brute_geodesic(graph: Graph, tb: TieBreaker, v: int, targets) -> tuple:
    """Best shortest path from v to the target set by exhaustive search."""
    host = graph.to_networkx()
    lengths = nx.single_source_shortest_path_length(host, v)
    d = min(lengths[x] for x in targets if x in lengths)
    candidates = [
        LambdaPath(tuple(p))
        for x in targets
        if lengths.get(x) == d
        for p in nx.all_shortest_paths(host, v, x)
    ]
    return max(candidates, key=lambda p: lambda_key(tb, p)).vertices


def test_tiebreaker_spec_should_parse_cli_forms():
    """Test the 'lex' and 'seed:<n>' forms and their documents."""
    assert TieBreakerSpec.parse("lex") == TieBreakerSpec()
    seeded = TieBreakerSpec.parse("seed:7")
    assert seeded == TieBreakerSpec("seeded", 7)
    assert TieBreakerSpec.from_dict(seeded.to_dict()) == seeded
    with pytest.raises(GraphFormatError):
        TieBreakerSpec.parse("seed:x")
    with pytest.raises(GraphFormatError):
        TieBreakerSpec("seeded")


def test_seeded_tiebreaker_should_be_reproducible():
    """Test that one seed always gives the same ranking."""
    graph = cycle_graph(8)
    first = TieBreaker.seeded(graph, 3)
    second = TieBreaker.seeded(graph, 3)
    assert [first.rank(*e) for e in graph.edges] == [second.rank(*e) for e in graph.edges]
    assert sorted(first.rank(*e) for e in graph.edges) == list(range(8))


def test_tiebreaker_restrict_should_keep_relative_order():
    """Test that restricting to an induced subgraph keeps the edge order."""
    graph = path_graph(5)
    tb = TieBreaker.seeded(graph, 11)
    restricted = tb.restrict([1, 2, 3])
    kept = [(1, 2), (2, 3)]
    expected_first = tb.rank(*kept[0]) < tb.rank(*kept[1])
    assert (restricted.rank(0, 1) < restricted.rank(1, 2)) == expected_first


def test_lambda_compare_should_prefer_shorter_paths_then_least_edge():
    """Test the Lambda order on the two 0-2 paths of a 4-cycle."""
    graph = cycle_graph(4)
    tb = TieBreaker.lex(graph)
    via_one = LambdaPath.of(graph, [0, 1, 2])
    via_three = LambdaPath.of(graph, [0, 3, 2])
    assert lambda_compare(tb, via_one, via_three) == -1
    assert lambda_compare(tb, via_three, via_one) == 1
    assert lambda_compare(tb, LambdaPath.of(graph, [0, 1]), via_three) == -1
    assert lambda_key(tb, via_one) > lambda_key(tb, via_three)


def test_lambda_compare_should_reject_comparing_a_path_with_itself():
    """Test that a path and its reversal are the same path."""
    graph = path_graph(3)
    tb = TieBreaker.lex(graph)
    path = LambdaPath.of(graph, [0, 1, 2])
    with pytest.raises(PreconditionError):
        lambda_compare(tb, path, path.reversed())


def test_lambda_path_should_reject_non_edges_and_repeats():
    """Test path validation."""
    graph = path_graph(4)
    with pytest.raises(GraphFormatError):
        LambdaPath.of(graph, [0, 2])
    with pytest.raises(GraphFormatError):
        LambdaPath((0, 1, 0))


@settings(max_examples=60, deadline=None)
@given(small_graphs(min_vertices=2, connected=True), st.integers(0, 50), st.data())
def test_lambda_geodesic_should_match_brute_force(graph, seed, data):
    """Test the Lambda DP against the maximum key over all shortest paths."""
    tb = TieBreaker.seeded(graph, seed)
    v = data.draw(st.sampled_from(list(graph.vertices)))
    targets = data.draw(st.sets(st.sampled_from(list(graph.vertices)), min_size=1))
    path = lambda_geodesic(graph, tb, v, targets)
    assert path.start == v
    assert path.end in targets
    assert path.vertices == brute_geodesic(graph, tb, v, targets)


def test_voronoi_partition_should_break_ties_by_least_edge():
    """Test that the midpoint of a path goes to the side holding the least edge."""
    graph = path_graph(7)
    tb = TieBreaker.lex(graph)
    partition = voronoi_partition(graph, tb, [{0}, {6}])
    assert partition.cell(0) == {0, 1, 2, 3}
    assert partition.cell(1) == {4, 5, 6}
    assert partition.adjoins(0, 1)
    assert partition[frozenset({6})] == {4, 5, 6}
    assert adjoins(graph, tb, [{0}, {6}], {0}, {6})


def test_voronoi_partition_should_reject_bad_families():
    """Test that overlapping, disconnected and empty buildings are refused."""
    graph = path_graph(5)
    tb = TieBreaker.lex(graph)
    with pytest.raises(PreconditionError):
        voronoi_partition(graph, tb, [{0, 1}, {1, 2}])
    with pytest.raises(PreconditionError):
        voronoi_partition(graph, tb, [{0, 2}])
    with pytest.raises(PreconditionError):
        voronoi_partition(graph, tb, [set()])


def test_voronoi_partition_should_need_a_building_in_every_component():
    """Test that a component without buildings is refused."""
    graph = Graph.from_edge_list(4, [(0, 1), (2, 3)])
    with pytest.raises(PreconditionError):
        voronoi_partition(graph, TieBreaker.lex(graph), [{0}])


@settings(max_examples=50, deadline=None)
@given(small_graphs(min_vertices=3, connected=True), st.integers(0, 50), st.data())
def test_voronoi_cells_should_partition_and_agree_with_lambda_closest(graph, seed, data):
    """Test that cells are connected, cover V(G) and follow the Lambda-closest building."""
    tb = TieBreaker.seeded(graph, seed)
    sites = data.draw(
        st.lists(st.sampled_from(list(graph.vertices)), min_size=1, max_size=3, unique=True)
    )
    family = [{s} for s in sites]
    partition = voronoi_partition(graph, tb, family)
    cells = partition.cells()
    assert sum(len(cell) for cell in cells) == graph.vertex_count
    assert frozenset().union(*cells) == frozenset(graph.vertices)
    for i, cell in enumerate(cells):
        assert sites[i] in cell
        assert is_connected_induced(graph, cell)
    for v in graph.vertices:
        assert partition.owner[v] == lambda_closest(graph, tb, family, v)
