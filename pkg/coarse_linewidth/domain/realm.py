"""
Buildings, societies and realms of one century.

A society or realm is a family of disjoint connected buildings, each a house, fort
or castle, whose ranks are ``k-1``, ``k`` and ``k+1`` in century ``k``. Verifiers
check every defining bullet numerically and name the first one violated.
"""

import logging
from dataclasses import dataclass, replace
from enum import Enum
from typing import Callable, Dict, Iterable, List, Optional, Sequence, Set, Tuple

import networkx as nx

from coarse_linewidth.domain.decomposition import (
    QuasiBoundCertificate,
    augmented_certificate,
    certify_cell_union,
    layered_certificate,
    margin_certificate,
    point_certificate,
    verify_quasi_bound,
)
from coarse_linewidth.domain.graph import (
    Graph,
    VertexSet,
    bfs_distances,
    boundary,
    is_connected_induced,
)
from coarse_linewidth.domain.metric import (
    LambdaForest,
    LambdaPath,
    TieBreaker,
    VoronoiPartition,
    lambda_compare,
    lambda_forest,
    voronoi_partition,
)
from coarse_linewidth.domain.minors import SuperfatModel, singleton_model, verify_superfat
from coarse_linewidth.domain.schedule import Schedule
from coarse_linewidth.domain.verdict import Verdict
from coarse_linewidth.exceptions import InvariantViolation, PreconditionError

logger = logging.getLogger(__name__)


class BuildingClass(str, Enum):
    HOUSE = "house"
    FORT = "fort"
    CASTLE = "castle"

    def rank(self, century: int) -> int:
        return century + {"house": -1, "fort": 0, "castle": 1}[self.value]


@dataclass(frozen=True)
class Building:
    """
    A connected vertex set with its class.

    Forts and castles carry the certificate of their quasi-bound and a superfat model
    of the pattern tree of their rank inside them.
    """

    vertices: VertexSet
    kind: BuildingClass
    certificate: Optional[QuasiBoundCertificate] = None
    witness: Optional[SuperfatModel] = None

    def rank(self, century: int) -> int:
        return self.kind.rank(century)

    @property
    def is_house(self) -> bool:
        return self.kind is BuildingClass.HOUSE

    @property
    def is_fort(self) -> bool:
        return self.kind is BuildingClass.FORT

    @property
    def is_castle(self) -> bool:
        return self.kind is BuildingClass.CASTLE


@dataclass(frozen=True)
class RealmState:
    """
    Buildings of century ``century``, ordered by least vertex.

    ``kind`` is ``society`` (houses and forts only) or ``realm``.
    """

    century: int
    buildings: Tuple[Building, ...]
    kind: str = "society"

    def __post_init__(self) -> None:
        if self.kind not in ("society", "realm"):
            raise PreconditionError(f"unknown state kind {self.kind!r}")

    @classmethod
    def of(cls, century: int, buildings: Iterable[Building], kind: str) -> "RealmState":
        ordered = sorted(buildings, key=lambda b: min(b.vertices))
        return cls(century, tuple(ordered), kind)

    @property
    def family(self) -> Tuple[VertexSet, ...]:
        return tuple(b.vertices for b in self.buildings)

    def rank(self, i: int) -> int:
        return self.buildings[i].rank(self.century)

    def indices(self, kind: BuildingClass) -> List[int]:
        return [i for i, b in enumerate(self.buildings) if b.kind is kind]

    @property
    def houses(self) -> List[int]:
        return self.indices(BuildingClass.HOUSE)

    @property
    def forts(self) -> List[int]:
        return self.indices(BuildingClass.FORT)

    @property
    def castles(self) -> List[int]:
        return self.indices(BuildingClass.CASTLE)

    def owner_map(self) -> Dict[int, int]:
        """Vertex to index of the building containing it."""
        return {v: i for i, b in enumerate(self.buildings) for v in b.vertices}

    def partition(self, graph: Graph, tb: TieBreaker) -> VoronoiPartition:
        return voronoi_partition(graph, tb, self.family)


def first_too_close(
    graph: Graph,
    sources: Iterable[int],
    owner: Dict[int, int],
    radius_of: Callable[[int], int],
    skip: Iterable[int] = (),
) -> Optional[Tuple[int, int]]:
    """
    First building within its allowed radius of ``sources``.

    Returns:
        ``(building index, distance)`` for the nearest offender, or None.
    """
    skipped = set(skip)
    candidates = {owner[v] for v in owner} - skipped
    if not candidates:
        return None
    cutoff = max(radius_of(i) for i in candidates)
    reach = bfs_distances(graph, sorted(sources), cutoff=cutoff)
    for v, d in sorted(reach.items(), key=lambda item: (item[1], item[0])):
        i = owner.get(v)
        if i is None or i in skipped:
            continue
        if d <= radius_of(i):
            return i, d
    return None


def house_components(partition: VoronoiPartition, members: Sequence[int]) -> List[Tuple[int, ...]]:
    """Maximal adjoin-connected subsets of ``members``, each sorted, ordered by least index."""
    touching = nx.Graph()
    touching.add_nodes_from(members)
    chosen = set(members)
    for i, j in partition.touching_pairs():
        if i in chosen and j in chosen:
            touching.add_edge(i, j)
    return sorted((tuple(sorted(c)) for c in nx.connected_components(touching)), key=min)


def building_certificate(
    graph: Graph, building: Building, a: Optional[int], b: int
) -> Optional[QuasiBoundCertificate]:
    """The building's own certificate when it fits ``(a, b)``, otherwise a layered one."""
    own = building.certificate
    if own is not None and own.subject == building.vertices and own.b <= b:
        if a is None or own.center_count <= a:
            return own
    return layered_certificate(graph, building.vertices, a, b)


def community_certificate(
    graph: Graph, state: RealmState, members: Sequence[int], a: int, b: int
) -> Optional[QuasiBoundCertificate]:
    """Certificate for the union of a set of pairwise distant houses."""
    subject = frozenset().union(*(state.buildings[i].vertices for i in members))
    parts = []
    for i in members:
        part = building_certificate(graph, state.buildings[i], None, b)
        if part is None:
            break
        parts.append(part)
    else:
        certificate = augmented_certificate(graph, subject, parts, (), a, b)
        if certificate is not None:
            return certificate
    return layered_certificate(graph, subject, a, b)


def cell_union_certificate(
    graph: Graph,
    state: RealmState,
    partition: VoronoiPartition,
    members: Sequence[int],
    a: int,
    b: int,
) -> Optional[QuasiBoundCertificate]:
    """Certificate for the union of the Voronoi cells of ``members``."""
    if b < 0:
        return None
    pieces = []
    for i in members:
        building = state.buildings[i]
        own = building_certificate(graph, building, None, b)
        piece = margin_certificate(graph, building.vertices, partition.cell(i), own, b)
        if piece is None:
            return None
        pieces.append(piece)
    return certify_cell_union(graph, pieces, a, b)


def _check_covering(graph: Graph, sched: Schedule, state: RealmState) -> Verdict:
    every = frozenset().union(*state.family) if state.buildings else frozenset()
    if not every:
        return Verdict.failed("covering: no buildings")
    reach = bfs_distances(graph, every, cutoff=sched.d0)
    if len(reach) != graph.vertex_count:
        far = min(v for v in graph.vertices if v not in reach)
        return Verdict.failed(f"covering: vertex {far} is farther than d0={sched.d0}")
    return Verdict.passed()


def _check_separation(graph: Graph, sched: Schedule, state: RealmState) -> Verdict:
    k = state.century
    owner = state.owner_map()
    for i, building in enumerate(state.buildings):
        if not is_connected_induced(graph, building.vertices):
            return Verdict.failed(f"building: building {i} is not connected")
        rank = state.rank(i)
        hit = first_too_close(
            graph,
            building.vertices,
            owner,
            lambda j: sched.separation(k, rank + state.rank(j)),
            skip=[i],
        )
        if hit is not None:
            j, d = hit
            return Verdict.failed(f"separation: buildings {i} and {j} are at distance {d}")
    return Verdict.passed()


def _check_witness(graph: Graph, sched: Schedule, state: RealmState, i: int) -> Verdict:
    building = state.buildings[i]
    model = building.witness
    rank = state.rank(i)
    if model is None:
        return Verdict.failed(f"witness: {building.kind.value} {i} carries no H_{rank} model")
    if model.ell != rank or model.c != sched.c:
        return Verdict.failed(f"witness: {building.kind.value} {i} model is not a c-superfat H_{rank}")
    if not model.image <= building.vertices:
        return Verdict.failed(f"witness: {building.kind.value} {i} model leaves the building")
    return verify_superfat(graph, rank, model).prefixed(f"witness: {building.kind.value} {i}")


def _check_certificate(
    graph: Graph, state: RealmState, i: int, bound: Tuple[int, int], label: str
) -> Verdict:
    building = state.buildings[i]
    certificate = building.certificate
    if certificate is None or certificate.subject != building.vertices:
        return Verdict.failed(f"{label} quasi-bound: building {i} has no certificate")
    a, b = bound
    return verify_quasi_bound(graph, certificate, a, b).prefixed(f"{label} quasi-bound: building {i}")


def verify_society(
    graph: Graph, tb: TieBreaker, sched: Schedule, state: RealmState
) -> Verdict:
    """
    Check the five society bullets: covering, separation, fort witnesses, fort
    quasi-bounds, and the quasi-bound of cell unions of maximal adjoin-connected houses.
    """
    if state.kind != "society":
        raise PreconditionError("verify_society needs a society")
    if state.castles:
        return Verdict.failed("classes: a society has no castles")
    verdict = _check_covering(graph, sched, state)
    if verdict:
        verdict = _check_separation(graph, sched, state)
    if not verdict:
        return verdict
    k = state.century
    for i in state.forts:
        verdict = _check_witness(graph, sched, state, i)
        if verdict:
            verdict = _check_certificate(graph, state, i, sched.budget(k), "fort")
        if not verdict:
            return verdict
    houses = state.houses
    if houses:
        partition = state.partition(graph, tb)
        a, b = sched.house_union_bound(k)
        for group in house_components(partition, houses):
            if cell_union_certificate(graph, state, partition, group, a, b) is None:
                return Verdict.failed(
                    f"house union quasi-bound: houses {list(group)} exceed ({a}, {b})"
                )
    return Verdict.passed()


def verify_realm(graph: Graph, tb: TieBreaker, sched: Schedule, state: RealmState) -> Verdict:
    """
    Check the six realm bullets. Communities are checked through every maximal
    community and every single house.
    """
    if state.kind != "realm":
        raise PreconditionError("verify_realm needs a realm")
    verdict = _check_covering(graph, sched, state)
    if verdict:
        verdict = _check_separation(graph, sched, state)
    if not verdict:
        return verdict
    k = state.century
    for i in state.forts + state.castles:
        verdict = _check_witness(graph, sched, state, i)
        if not verdict:
            return verdict
    for i in state.forts:
        verdict = _check_certificate(graph, state, i, sched.budget(k), "fort")
        if not verdict:
            return verdict
    for i in state.castles:
        verdict = _check_certificate(graph, state, i, sched.castle_bound(k), "castle")
        if not verdict:
            return verdict
    houses = state.houses
    if houses:
        partition = state.partition(graph, tb)
        a, b = sched.budget(k)
        groups = house_components(partition, houses)
        groups.extend((i,) for i in houses if (i,) not in groups)
        for group in groups:
            if community_certificate(graph, state, group, a, b) is None:
                return Verdict.failed(f"community quasi-bound: houses {list(group)} exceed ({a}, {b})")
    return Verdict.passed()


def initial_society(graph: Graph, tb: TieBreaker, sched: Schedule) -> RealmState:
    """
    Century-0 society of singleton forts on a greedy maximal d0-scattered set.

    Raises:
        PreconditionError: If the graph is empty or disconnected.
        InvariantViolation: If the constructed society does not verify.
    """
    if graph.vertex_count == 0 or not nx.is_connected(graph.to_networkx()):
        raise PreconditionError("initial_society needs a nonempty connected graph")
    blocked: Set[int] = set()
    chosen: List[int] = []
    for v in graph.vertices:
        if v in blocked:
            continue
        chosen.append(v)
        blocked.update(bfs_distances(graph, [v], cutoff=sched.d0))
    alpha, beta = sched.budget(0)
    forts = [
        Building(
            frozenset([v]),
            BuildingClass.FORT,
            point_certificate(graph, [v]).relabel(alpha, beta),
            singleton_model(v, sched.c),
        )
        for v in chosen
    ]
    society = RealmState.of(0, forts, "society")
    verdict = verify_society(graph, tb, sched, society)
    if not verdict:
        raise InvariantViolation("initial_society", verdict.reason or "", century=0)
    logger.info(f"Initial society has {len(forts)} forts")
    return society


class _HouseGrowth:
    """Incremental state for growing houses one vertex at a time without moving cells."""

    def __init__(self, graph: Graph, tb: TieBreaker, sched: Schedule, state: RealmState):
        self.graph = graph
        self.tb = tb
        self.sched = sched
        self.state = state
        self.members: List[Set[int]] = [set(b.vertices) for b in state.buildings]
        self.owner = state.owner_map()
        partition = state.partition(graph, tb)
        forest = partition.forest
        self.forest = LambdaForest(dict(forest.dist), dict(forest.parent), dict(forest.owner))
        self.cells = [set(cell) for cell in partition.cells()]

    def separated(self, i: int, u: int) -> bool:
        k = self.state.century
        rank = self.state.rank(i)
        hit = first_too_close(
            self.graph,
            [u],
            self.owner,
            lambda j: self.sched.separation(k, rank + self.state.rank(j)),
            skip=[i],
        )
        return hit is None

    def cells_stay(self, i: int, u: int) -> Optional[LambdaForest]:
        cell = frozenset(self.cells[i])
        sources = {v: i for v in self.members[i] | {u}}
        local = lambda_forest(self.graph, self.tb, sources, within=cell)
        adjacency = self.graph.adjacency
        rim = sorted({w for x in cell for w in adjacency[x] if w not in cell})
        for w in rim:
            current = self.forest.path(w)
            best: Optional[LambdaPath] = None
            for x in adjacency[w]:
                if x not in cell:
                    continue
                candidate = LambdaPath((w,) + local.path(x).vertices)
                if best is None or lambda_compare(self.tb, candidate, best) < 0:
                    best = candidate
            if best is not None and lambda_compare(self.tb, best, current) < 0:
                logger.debug(f"Growing house {i} by {u} would move vertex {w}")
                return None
        return local

    def grow_once(self, i: int) -> bool:
        members = self.members[i]
        adjacency = self.graph.adjacency
        frontier = sorted({w for v in members for w in adjacency[v] if w not in members})
        for u in frontier:
            if u in self.owner or not self.separated(i, u):
                continue
            local = self.cells_stay(i, u)
            if local is None:
                continue
            members.add(u)
            self.owner[u] = i
            self.forest.dist.update(local.dist)
            self.forest.parent.update(local.parent)
            self.forest.owner.update(local.owner)
            return True
        return False

    def run(self) -> RealmState:
        grown = 0
        changed = True
        while changed:
            changed = False
            for i in self.state.houses:
                while self.grow_once(i):
                    grown += 1
                    changed = True
        buildings = [
            replace(b, vertices=frozenset(self.members[i])) if b.is_house else b
            for i, b in enumerate(self.state.buildings)
        ]
        logger.debug(f"House growth absorbed {grown} vertices")
        return RealmState.of(self.state.century, buildings, "realm")


def society_to_realm(
    graph: Graph, tb: TieBreaker, sched: Schedule, society: RealmState
) -> RealmState:
    """
    Grow houses until no house can absorb a neighbouring vertex, then check the result
    is a realm.

    A house absorbs a vertex only when separation still holds and no Voronoi cell changes.

    Raises:
        InvariantViolation: If the saturated family fails a realm bullet or a house
            boundary vertex is farther than d0 from the boundary of its cell.
    """
    if society.kind != "society":
        raise PreconditionError("society_to_realm needs a society")
    k = society.century
    realm = _HouseGrowth(graph, tb, sched, society).run()
    partition = realm.partition(graph, tb)
    for i in realm.houses:
        rim = boundary(graph, realm.buildings[i].vertices)
        cell_rim = boundary(graph, partition.cell(i))
        if not rim or not cell_rim:
            continue
        reach = bfs_distances(graph, cell_rim, cutoff=sched.d0)
        if any(v not in reach for v in rim):
            raise InvariantViolation(
                "society_to_realm", "house boundary within d0 of its cell boundary", century=k
            )
    verdict = verify_realm(graph, tb, sched, realm)
    if not verdict:
        raise InvariantViolation("society_to_realm", verdict.reason or "", century=k)
    return realm
