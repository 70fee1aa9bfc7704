"""
Tie-broken geodesics and Voronoi partitions.

A tie-breaker ranks every edge. Paths are ordered by length first, then by which
side of their symmetric difference holds the least-ranked edge; the least path
from a vertex to a set is its Λ-geodesic. All geodesics to one source family are
computed together by a layered dynamic programme over the BFS DAG: each vertex
keeps the predecessor whose chain wins the comparison, and two chains are compared
by walking them in lockstep until they merge.
"""

import logging
import random
from collections.abc import Mapping
from dataclasses import dataclass
from typing import (
    Dict,
    FrozenSet,
    Iterable,
    Iterator,
    List,
    Optional,
    Sequence,
    Set,
    Tuple,
)

from coarse_linewidth.domain.graph import (
    Edge,
    Graph,
    VertexSet,
    canonical_edge,
    is_connected_induced,
)
from coarse_linewidth.exceptions import (
    GraphFormatError,
    InvariantViolation,
    PreconditionError,
)

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class TieBreakerSpec:
    """
    Serializable description of a tie-breaker.

    ``lex`` ranks edges by (smaller endpoint, larger endpoint); ``seeded`` ranks them by
    a random permutation drawn from ``seed``.
    """

    kind: str = "lex"
    seed: Optional[int] = None

    def __post_init__(self) -> None:
        if self.kind not in ("lex", "seeded"):
            raise GraphFormatError(f"unknown tie-breaker kind {self.kind!r}")
        if self.kind == "seeded" and self.seed is None:
            raise GraphFormatError("seeded tie-breaker needs a seed")

    @classmethod
    def parse(cls, text: str) -> "TieBreakerSpec":
        """Parse the CLI form ``lex`` or ``seed:<n>``."""
        if text == "lex":
            return cls()
        if text.startswith("seed:"):
            try:
                return cls("seeded", int(text[5:]))
            except ValueError:
                pass
        raise GraphFormatError(f"tie-breaker must be 'lex' or 'seed:<n>', got {text!r}")

    def to_dict(self) -> Dict[str, object]:
        if self.kind == "lex":
            return {"kind": "lex"}
        return {"kind": "seeded", "seed": self.seed}

    @classmethod
    def from_dict(cls, data: Mapping) -> "TieBreakerSpec":
        return cls(str(data.get("kind", "lex")), data.get("seed"))

    def materialize(self, graph: Graph) -> "TieBreaker":
        if self.kind == "lex":
            return TieBreaker.lex(graph)
        assert self.seed is not None
        return TieBreaker.seeded(graph, self.seed)


class TieBreaker:
    """
    Total ranking of the edges of one graph.

    Examples:
        tb = TieBreaker.lex(graph)
        tb.rank(0, 1)  # 0 for the least edge
    """

    __slots__ = ("_ranks", "_m", "spec")

    def __init__(self, ranks: Dict[Edge, int], spec: TieBreakerSpec) -> None:
        if sorted(ranks.values()) != list(range(len(ranks))):
            raise GraphFormatError("edge ranks must be a bijection onto 0..m-1")
        self._ranks = ranks
        self._m = len(ranks)
        self.spec = spec

    @classmethod
    def lex(cls, graph: Graph) -> "TieBreaker":
        return cls({e: i for i, e in enumerate(graph.edges)}, TieBreakerSpec())

    @classmethod
    def seeded(cls, graph: Graph, seed: int) -> "TieBreaker":
        order = list(graph.edges)
        random.Random(seed).shuffle(order)
        return cls({e: i for i, e in enumerate(order)}, TieBreakerSpec("seeded", seed))

    @property
    def edge_count(self) -> int:
        return self._m

    def rank(self, u: int, v: int) -> int:
        try:
            return self._ranks[canonical_edge(u, v)]
        except KeyError:
            raise GraphFormatError(f"({u}, {v}) is not an edge") from None

    def weight(self, u: int, v: int) -> int:
        """The additive key contribution ``2^(m-1-rank)`` of one edge."""
        return 1 << (self._m - 1 - self.rank(u, v))

    def restrict(self, mapping: Sequence[int]) -> "TieBreaker":
        """
        Ranking for an induced subgraph whose vertex ``i`` is vertex ``mapping[i]`` here.

        Relative order of the surviving edges is preserved.
        """
        index = {v: i for i, v in enumerate(mapping)}
        kept = sorted(
            (rank, canonical_edge(index[u], index[v]))
            for (u, v), rank in self._ranks.items()
            if u in index and v in index
        )
        return TieBreaker({e: i for i, (_, e) in enumerate(kept)}, self.spec)


@dataclass(frozen=True)
class LambdaPath:
    """A simple path given by its vertex sequence."""

    vertices: Tuple[int, ...]

    def __post_init__(self) -> None:
        if not self.vertices:
            raise GraphFormatError("a path needs at least one vertex")
        if len(set(self.vertices)) != len(self.vertices):
            raise GraphFormatError(f"path {self.vertices} repeats a vertex")

    @classmethod
    def of(cls, graph: Graph, vertices: Iterable[int]) -> "LambdaPath":
        """Build a path, checking that consecutive vertices are adjacent."""
        path = cls(tuple(vertices))
        for u, v in zip(path.vertices, path.vertices[1:]):
            if not graph.has_edge(u, v):
                raise GraphFormatError(f"({u}, {v}) is not an edge")
        return path

    @property
    def length(self) -> int:
        return len(self.vertices) - 1

    @property
    def start(self) -> int:
        return self.vertices[0]

    @property
    def end(self) -> int:
        return self.vertices[-1]

    @property
    def edges(self) -> FrozenSet[Edge]:
        return frozenset(canonical_edge(u, v) for u, v in zip(self.vertices, self.vertices[1:]))

    @property
    def vertex_set(self) -> VertexSet:
        return frozenset(self.vertices)

    @property
    def interior(self) -> VertexSet:
        return frozenset(self.vertices[1:-1])

    def reversed(self) -> "LambdaPath":
        return LambdaPath(tuple(reversed(self.vertices)))


def lambda_compare(tb: TieBreaker, first: LambdaPath, second: LambdaPath) -> int:
    """
    Compare two paths in the tie-broken order.

    Returns:
        -1 if ``first`` comes first, 1 if ``second`` does.

    Raises:
        PreconditionError: When both arguments are the same path.
    """
    if first.length != second.length:
        return -1 if first.length < second.length else 1
    mine = first.edges
    theirs = second.edges
    if mine == theirs:
        if first.vertices in (second.vertices, tuple(reversed(second.vertices))):
            raise PreconditionError("cannot compare a path to itself")
        # only trivial paths share an empty edge set
        return -1 if first.start < second.start else 1
    least = min(mine ^ theirs, key=lambda e: tb.rank(*e))
    return -1 if least in mine else 1


def lambda_key(tb: TieBreaker, path: LambdaPath) -> int:
    """Additive key of a path; among equal-length paths, larger keys come first."""
    return sum(tb.weight(u, v) for u, v in path.edges)


@dataclass
class LambdaForest:
    """
    Λ-geodesics from every reached vertex to a labelled source family.

    ``parent[v]`` is the next vertex of v's geodesic, ``owner[v]`` the label of the
    source it ends in.
    """

    dist: Dict[int, int]
    parent: Dict[int, Optional[int]]
    owner: Dict[int, int]

    def chain(self, v: int) -> Iterator[int]:
        current: Optional[int] = v
        while current is not None:
            yield current
            current = self.parent[current]

    def path(self, v: int) -> LambdaPath:
        if v not in self.dist:
            raise PreconditionError(f"vertex {v} was not reached")
        return LambdaPath(tuple(self.chain(v)))


def _winning_parent(
    tb: TieBreaker, parent: Dict[int, Optional[int]], w: int, a: int, b: int
) -> int:
    """Pick the predecessor of ``w`` whose chain gives the Λ-shorter path."""
    best_a = tb.rank(w, a)
    best_b = tb.rank(w, b)
    x: Optional[int] = a
    y: Optional[int] = b
    while x != y and x is not None and y is not None:
        px, py = parent[x], parent[y]
        if px is not None:
            best_a = min(best_a, tb.rank(x, px))
        if py is not None:
            best_b = min(best_b, tb.rank(y, py))
        x, y = px, py
    return a if best_a < best_b else b


def lambda_forest(
    graph: Graph,
    tb: TieBreaker,
    sources: Mapping,
    within: Optional[VertexSet] = None,
    cutoff: Optional[int] = None,
    stop_at: Optional[int] = None,
) -> LambdaForest:
    """
    Run the layered Λ-DP from a labelled source family.

    Args:
        graph: Host graph.
        tb: Edge ranking of ``graph``.
        sources: Map from source vertex to its label.
        within: Restrict paths to this vertex set.
        cutoff: Do not settle vertices farther than this.
        stop_at: Stop once this vertex is settled.
    """
    adjacency = graph.adjacency
    dist: Dict[int, int] = {}
    parent: Dict[int, Optional[int]] = {}
    owner: Dict[int, int] = {}
    layer: List[int] = []
    for s in sorted(sources):
        if within is not None and s not in within:
            continue
        dist[s] = 0
        parent[s] = None
        owner[s] = sources[s]
        layer.append(s)
    depth = 0
    while layer and (stop_at is None or stop_at not in dist):
        if cutoff is not None and depth >= cutoff:
            break
        depth += 1
        choice: Dict[int, int] = {}
        for u in layer:
            for w in adjacency[u]:
                if w in dist or (within is not None and w not in within):
                    continue
                current = choice.get(w)
                if current is None:
                    choice[w] = u
                else:
                    choice[w] = _winning_parent(tb, parent, w, current, u)
        layer = sorted(choice)
        for w in layer:
            u = choice[w]
            dist[w] = depth
            parent[w] = u
            owner[w] = owner[u]
    return LambdaForest(dist, parent, owner)


def lambda_geodesic(graph: Graph, tb: TieBreaker, v: int, xs: Iterable[int]) -> LambdaPath:
    """
    The Λ-geodesic from ``v`` to the set ``xs``.

    Raises:
        PreconditionError: If ``xs`` is empty or not reachable from ``v``.
    """
    graph.check_vertex(v)
    targets = graph.vertex_set(xs)
    if not targets:
        raise PreconditionError("lambda_geodesic needs a nonempty target set")
    forest = lambda_forest(graph, tb, {x: 0 for x in targets}, stop_at=v)
    if v not in forest.dist:
        raise PreconditionError(f"vertex {v} cannot reach the target set")
    return forest.path(v)


def _validate_family(graph: Graph, family: Sequence[Iterable[int]]) -> Tuple[VertexSet, ...]:
    buildings = tuple(graph.vertex_set(members) for members in family)
    seen: Set[int] = set()
    for i, members in enumerate(buildings):
        if not members:
            raise PreconditionError(f"building {i} is empty")
        if seen & members:
            raise PreconditionError(f"building {i} overlaps an earlier building")
        if not is_connected_induced(graph, members):
            raise PreconditionError(f"building {i} does not induce a connected subgraph")
        seen |= members
    return buildings


class VoronoiPartition(Mapping):
    """
    Voronoi cells of a family of disjoint buildings.

    Behaves as a read-only map from building to cell. Buildings are also addressable
    by their index in the family through ``cell(i)`` and ``owner``.
    """

    def __init__(self, graph: Graph, buildings: Tuple[VertexSet, ...], forest: LambdaForest):
        self.graph = graph
        self.buildings = buildings
        self.forest = forest
        members: List[Set[int]] = [set() for _ in buildings]
        for v, label in forest.owner.items():
            members[label].add(v)
        self._cells = tuple(frozenset(m) for m in members)
        self._index = {b: i for i, b in enumerate(buildings)}
        self._touching: Optional[FrozenSet[Tuple[int, int]]] = None

    @property
    def owner(self) -> Dict[int, int]:
        return self.forest.owner

    def cell(self, i: int) -> VertexSet:
        return self._cells[i]

    def cells(self) -> Tuple[VertexSet, ...]:
        return self._cells

    def index_of(self, building: VertexSet) -> int:
        return self._index[building]

    def touching_pairs(self) -> FrozenSet[Tuple[int, int]]:
        """Index pairs ``(i, j)``, ``i < j``, whose cells are joined by an edge."""
        if self._touching is None:
            owner = self.forest.owner
            pairs = set()
            for u, v in self.graph.edges:
                a, b = owner[u], owner[v]
                if a != b:
                    pairs.add((a, b) if a < b else (b, a))
            self._touching = frozenset(pairs)
        return self._touching

    def adjoins(self, i: int, j: int) -> bool:
        if i == j:
            raise PreconditionError("a building does not adjoin itself")
        return ((i, j) if i < j else (j, i)) in self.touching_pairs()

    def neighbours(self, i: int) -> List[int]:
        result = []
        for a, b in self.touching_pairs():
            if a == i:
                result.append(b)
            elif b == i:
                result.append(a)
        return sorted(result)

    def __getitem__(self, building: VertexSet) -> VertexSet:
        return self._cells[self._index[frozenset(building)]]

    def __iter__(self) -> Iterator[VertexSet]:
        return iter(self.buildings)

    def __len__(self) -> int:
        return len(self.buildings)


def voronoi_partition(
    graph: Graph, tb: TieBreaker, family: Sequence[Iterable[int]]
) -> VoronoiPartition:
    """
    Partition ``V(G)`` into the Voronoi cells of ``family``.

    Raises:
        PreconditionError: On empty, overlapping or disconnected buildings, or when some
            component of the graph holds no building.
    """
    buildings = _validate_family(graph, family)
    sources = {v: i for i, members in enumerate(buildings) for v in members}
    forest = lambda_forest(graph, tb, sources)
    if len(forest.dist) != graph.vertex_count:
        raise PreconditionError("some component of the graph contains no building")
    partition = VoronoiPartition(graph, buildings, forest)
    for i, cell in enumerate(partition.cells()):
        if not is_connected_induced(graph, cell):
            raise InvariantViolation("voronoi_partition", "cell connectivity", detail=f"cell {i}")
    logger.debug(f"Voronoi partition of {len(buildings)} buildings computed")
    return partition


def adjoins(
    graph: Graph,
    tb: TieBreaker,
    family: Sequence[Iterable[int]],
    xs: Iterable[int],
    ys: Iterable[int],
) -> bool:
    """True iff the cells of two distinct members of ``family`` touch."""
    partition = voronoi_partition(graph, tb, family)
    first, second = frozenset(xs), frozenset(ys)
    if first == second:
        raise PreconditionError("a building does not adjoin itself")
    return partition.adjoins(partition.index_of(first), partition.index_of(second))


def lambda_closest(
    graph: Graph, tb: TieBreaker, family: Sequence[Iterable[int]], v: int
) -> int:
    """
    Index of the building whose Λ-geodesic from ``v`` wins, folding in family order.

    Buildings in other components than ``v`` are skipped.
    """
    best: Optional[Tuple[int, LambdaPath]] = None
    for i, members in enumerate(family):
        try:
            path = lambda_geodesic(graph, tb, v, members)
        except PreconditionError:
            continue
        if best is None or lambda_compare(tb, path, best[1]) < 0:
            best = (i, path)
    if best is None:
        raise PreconditionError(f"no building is reachable from vertex {v}")
    return best[0]


__all__ = [
    "TieBreakerSpec",
    "TieBreaker",
    "LambdaPath",
    "LambdaForest",
    "VoronoiPartition",
    "lambda_compare",
    "lambda_key",
    "lambda_forest",
    "lambda_geodesic",
    "voronoi_partition",
    "adjoins",
    "lambda_closest",
]
