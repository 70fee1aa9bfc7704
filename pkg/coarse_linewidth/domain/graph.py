"""
Finite simple graphs and the ambient distance functions.

Vertices are dense integer ids ``0..n-1`` and adjacency lists are sorted, so every
iteration order in the package is canonical. Distances are always measured in the
whole graph; helpers that take a ``within`` set are the only exception and are used
for paths that must stay inside a subgraph.
"""

import logging
import math
from collections import deque
from typing import Dict, FrozenSet, Iterable, Iterator, List, Optional, Sequence, Set, Tuple, Union

import networkx as nx

from coarse_linewidth.exceptions import GraphFormatError, PreconditionError

logger = logging.getLogger(__name__)

Vertex = int
VertexSet = FrozenSet[int]
Edge = Tuple[int, int]
Distance = Union[int, float]

INFINITY = math.inf


def canonical_edge(u: int, v: int) -> Edge:
    return (u, v) if u < v else (v, u)


class Graph:
    """
    Immutable finite simple undirected graph.

    The sorted neighbour lists are cached next to the networkx view: the hot BFS loops
    read the tuples directly, everything else (components, induced connectivity,
    generators) goes through networkx.

    Examples:
        graph = Graph.from_edge_list(3, [(0, 1), (1, 2)])
        graph.neighbors(1)  # (0, 2)
    """

    __slots__ = ("_n", "_edges", "_adjacency", "_nx")

    def __init__(self, vertex_count: int, edges: Sequence[Edge]) -> None:
        self._n = vertex_count
        self._edges: Tuple[Edge, ...] = tuple(edges)
        neighbours: List[List[int]] = [[] for _ in range(vertex_count)]
        for u, v in self._edges:
            neighbours[u].append(v)
            neighbours[v].append(u)
        self._adjacency: Tuple[Tuple[int, ...], ...] = tuple(
            tuple(sorted(row)) for row in neighbours
        )
        self._nx: Optional[nx.Graph] = None

    @classmethod
    def from_edge_list(cls, n: int, pairs: Iterable[Sequence[int]]) -> "Graph":
        """
        Build a graph from an edge list, collapsing duplicates.

        Raises:
            GraphFormatError: On a loop, an out-of-range endpoint or a negative size.
        """
        if n < 0:
            raise GraphFormatError(f"vertex count must be non-negative, got {n}")
        edges = set()
        for pair in pairs:
            if len(pair) != 2:
                raise GraphFormatError(f"edge {pair!r} does not have two endpoints")
            u, v = int(pair[0]), int(pair[1])
            if not (0 <= u < n and 0 <= v < n):
                raise GraphFormatError(f"edge ({u}, {v}) has an endpoint outside 0..{n - 1}")
            if u == v:
                raise GraphFormatError(f"loop at vertex {u}")
            edges.add(canonical_edge(u, v))
        return cls(n, sorted(edges))

    @classmethod
    def from_networkx(cls, graph: nx.Graph) -> "Graph":
        """Convert a networkx graph, relabelling nodes to ``0..n-1`` in sorted order."""
        nodes = sorted(graph.nodes)
        index = {node: i for i, node in enumerate(nodes)}
        return cls.from_edge_list(len(nodes), ((index[u], index[v]) for u, v in graph.edges))

    @property
    def vertex_count(self) -> int:
        return self._n

    @property
    def edges(self) -> Tuple[Edge, ...]:
        return self._edges

    @property
    def edge_count(self) -> int:
        return len(self._edges)

    @property
    def vertices(self) -> range:
        return range(self._n)

    @property
    def adjacency(self) -> Tuple[Tuple[int, ...], ...]:
        return self._adjacency

    def neighbors(self, v: int) -> Tuple[int, ...]:
        self.check_vertex(v)
        return self._adjacency[v]

    def has_edge(self, u: int, v: int) -> bool:
        return v in self._adjacency[u]

    def to_networkx(self) -> nx.Graph:
        if self._nx is None:
            graph = nx.Graph()
            graph.add_nodes_from(range(self._n))
            graph.add_edges_from(self._edges)
            self._nx = graph
        return self._nx

    def check_vertex(self, v: int) -> None:
        if not isinstance(v, int) or not 0 <= v < self._n:
            raise GraphFormatError(f"vertex {v!r} is not in 0..{self._n - 1}")

    def vertex_set(self, members: Iterable[int]) -> VertexSet:
        """Validate ids and freeze them into a vertex set."""
        result = frozenset(members)
        for v in result:
            self.check_vertex(v)
        return result

    def induced_subgraph(self, members: Iterable[int]) -> Tuple["Graph", List[int]]:
        """
        Relabelled copy of ``G[members]``.

        Returns:
            The subgraph and the list mapping its ids back to ids of this graph.
            The relabelling preserves the vertex order.
        """
        order = sorted(self.vertex_set(members))
        index = {v: i for i, v in enumerate(order)}
        edges = [
            (index[u], index[v]) for u, v in self._edges if u in index and v in index
        ]
        return Graph(len(order), edges), order

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Graph):
            return NotImplemented
        return self._n == other._n and self._edges == other._edges

    def __hash__(self) -> int:
        return hash((self._n, self._edges))

    def __repr__(self) -> str:
        return f"Graph(n={self._n}, m={len(self._edges)})"


def bfs_distances(
    graph: Graph,
    sources: Iterable[int],
    cutoff: Optional[int] = None,
    within: Optional[VertexSet] = None,
) -> Dict[int, int]:
    """
    Multi-source BFS.

    Args:
        graph: Host graph.
        sources: Start vertices (distance 0).
        cutoff: Stop expanding past this distance.
        within: Restrict the search to this vertex set (sources outside it are ignored).

    Returns:
        Map from every reached vertex to its distance.
    """
    adjacency = graph.adjacency
    dist: Dict[int, int] = {}
    queue: deque = deque()
    for s in sources:
        if within is not None and s not in within:
            continue
        if s not in dist:
            dist[s] = 0
            queue.append(s)
    while queue:
        u = queue.popleft()
        du = dist[u]
        if cutoff is not None and du >= cutoff:
            continue
        for w in adjacency[u]:
            if w not in dist and (within is None or w in within):
                dist[w] = du + 1
                queue.append(w)
    return dist


def bfs_tree(
    graph: Graph, root: int, within: Optional[VertexSet] = None
) -> Tuple[Dict[int, int], Dict[int, Optional[int]]]:
    """BFS distances and parent pointers from a single root."""
    adjacency = graph.adjacency
    dist: Dict[int, int] = {root: 0}
    parent: Dict[int, Optional[int]] = {root: None}
    queue = deque([root])
    while queue:
        u = queue.popleft()
        for w in adjacency[u]:
            if w not in dist and (within is None or w in within):
                dist[w] = dist[u] + 1
                parent[w] = u
                queue.append(w)
    return dist, parent


def distance(graph: Graph, u: int, v: int) -> Distance:
    """Ambient distance between two vertices, infinity when disconnected."""
    graph.check_vertex(u)
    graph.check_vertex(v)
    try:
        return nx.shortest_path_length(graph.to_networkx(), u, v)
    except nx.NetworkXNoPath:
        return INFINITY


def set_distance(
    graph: Graph, xs: Iterable[int], ys: Iterable[int], cutoff: Optional[int] = None
) -> Distance:
    """
    Ambient distance between two nonempty vertex sets.

    With ``cutoff`` the search stops early and reports infinity for anything farther.

    Raises:
        PreconditionError: If either set is empty.
    """
    sources = graph.vertex_set(xs)
    targets = graph.vertex_set(ys)
    if not sources or not targets:
        raise PreconditionError("set_distance needs two nonempty sets")
    if sources & targets:
        return 0
    adjacency = graph.adjacency
    seen = set(sources)
    frontier = sorted(sources)
    depth = 0
    while frontier:
        if cutoff is not None and depth >= cutoff:
            break
        depth += 1
        following = []
        for u in frontier:
            for w in adjacency[u]:
                if w in seen:
                    continue
                if w in targets:
                    return depth
                seen.add(w)
                following.append(w)
        frontier = following
    return INFINITY


def ball(graph: Graph, xs: Iterable[int], r: int) -> VertexSet:
    """All vertices at ambient distance at most ``r`` from ``xs``."""
    sources = graph.vertex_set(xs)
    if not sources:
        raise PreconditionError("ball needs a nonempty centre set")
    return frozenset(bfs_distances(graph, sources, cutoff=r))


def boundary(graph: Graph, xs: Iterable[int]) -> VertexSet:
    """Vertices of ``xs`` with a neighbour outside ``xs``."""
    members = graph.vertex_set(xs)
    adjacency = graph.adjacency
    return frozenset(v for v in members if any(w not in members for w in adjacency[v]))


def touches(graph: Graph, xs: Iterable[int], ys: Iterable[int]) -> bool:
    """True if the sets intersect or an edge joins them."""
    first = graph.vertex_set(xs)
    second = graph.vertex_set(ys)
    if first & second:
        return True
    if len(first) > len(second):
        first, second = second, first
    adjacency = graph.adjacency
    return any(w in second for v in first for w in adjacency[v])


def is_connected_induced(graph: Graph, xs: Iterable[int]) -> bool:
    """True iff ``G[xs]`` is nonempty and connected."""
    members = graph.vertex_set(xs)
    if not members:
        return False
    return nx.is_connected(graph.to_networkx().subgraph(members))


def components(graph: Graph, within: Optional[Iterable[int]] = None) -> List[VertexSet]:
    """Connected components (of ``G[within]`` when given), ordered by least vertex."""
    host = graph.to_networkx()
    if within is not None:
        host = host.subgraph(graph.vertex_set(within))
    return sorted((frozenset(c) for c in nx.connected_components(host)), key=min)


def pseudo_peripheral(graph: Graph, xs: Iterable[int]) -> int:
    """A far-out vertex of ``G[xs]`` found by a double BFS sweep from its least vertex."""
    members = graph.vertex_set(xs)
    start = min(members)
    for _ in range(2):
        dist = bfs_distances(graph, [start], within=members)
        start = max(dist, key=lambda v: (dist[v], -v))
    return start


def shortest_path(
    graph: Graph,
    xs: Iterable[int],
    ys: Iterable[int],
    within: Optional[VertexSet] = None,
) -> Optional[List[int]]:
    """
    A shortest path from ``xs`` to ``ys``, optionally inside ``within``.

    BFS expands neighbours in sorted order, so the result is canonical.

    Returns:
        The vertex sequence from the ``xs`` end to the ``ys`` end, or None if unreachable.
    """
    sources = sorted(set(xs))
    targets = set(ys)
    adjacency = graph.adjacency
    parent: Dict[int, Optional[int]] = {}
    queue: deque = deque()
    for s in sources:
        if within is not None and s not in within:
            continue
        parent[s] = None
        queue.append(s)
    hit: Optional[int] = None
    for s in queue:
        if s in targets:
            hit = s
            break
    while queue and hit is None:
        u = queue.popleft()
        for w in adjacency[u]:
            if w in parent or (within is not None and w not in within):
                continue
            parent[w] = u
            if w in targets:
                hit = w
                break
            queue.append(w)
    if hit is None:
        return None
    path = [hit]
    while parent[path[-1]] is not None:
        path.append(parent[path[-1]])  # type: ignore[arg-type]
    path.reverse()
    return path


def connected_sets(
    adjacency: Sequence[Sequence[int]], anchor: int, blocked: Set[int], max_size: int
) -> Iterator[FrozenSet[int]]:
    """
    Every connected vertex set containing ``anchor`` and avoiding ``blocked``, each once.

    Works on any adjacency list, so it also enumerates connected sets of auxiliary
    graphs whose nodes are buildings or other units.
    """
    if max_size < 1:
        return
    start = [u for u in adjacency[anchor] if u not in blocked]
    stack = [(frozenset([anchor]), start, frozenset([anchor, *start]))]
    while stack:
        current, extension, closed = stack.pop()
        yield current
        if len(current) >= max_size:
            continue
        remaining = list(extension)
        grown = []
        while remaining:
            w = remaining.pop()
            fresh = [u for u in adjacency[w] if u not in closed and u not in blocked]
            grown.append((current | {w}, remaining + fresh, closed | set(fresh)))
        stack.extend(reversed(grown))
