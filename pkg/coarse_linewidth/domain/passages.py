"""
Passages between buildings, the adjoin structure of houses and forts, and castle moves.
"""

import itertools
import logging
import threading
from collections import deque
from dataclasses import dataclass, field
from typing import Dict, FrozenSet, Iterable, List, Optional, Sequence, Set, Tuple, Union

import networkx as nx

from coarse_linewidth.config import Settings, get_settings
from coarse_linewidth.domain.decomposition import (
    QuasiBoundCertificate,
    augmented_certificate,
    layered_certificate,
)
from coarse_linewidth.domain.graph import (
    Graph,
    VertexSet,
    bfs_distances,
    connected_sets,
    distance,
    is_connected_induced,
)
from coarse_linewidth.domain.metric import (
    LambdaPath,
    TieBreaker,
    VoronoiPartition,
    lambda_compare,
    lambda_forest,
)
from coarse_linewidth.domain.minors import SuperfatModel, claw_combine, fit_hub, verify_superfat
from coarse_linewidth.domain.realm import (
    Building,
    BuildingClass,
    RealmState,
    building_certificate,
    first_too_close,
    house_components,
    verify_realm,
)
from coarse_linewidth.domain.schedule import Schedule
from coarse_linewidth.domain.verdict import Verdict
from coarse_linewidth.exceptions import (
    InvariantViolation,
    PreconditionError,
    RunCancelled,
    SearchBudgetExhausted,
)

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class Passage:
    """An induced path from building ``ends[0]`` to building ``ends[1]``."""

    path: LambdaPath
    ends: Tuple[int, int]

    @property
    def length(self) -> int:
        return self.path.length

    def sort_key(self) -> Tuple:
        return (self.ends, self.length, self.path.vertices)


def verify_passage(
    graph: Graph,
    sched: Schedule,
    realm: RealmState,
    passage: Passage,
    max_len: Optional[int] = None,
) -> Verdict:
    """Check that a path is a passage of the realm, and no longer than ``max_len``."""
    k, c = realm.century, sched.c
    vertices = passage.path.vertices
    owner = realm.owner_map()
    first, last = owner.get(vertices[0]), owner.get(vertices[-1])
    if first is None or last is None or first == last or (first, last) != passage.ends:
        return Verdict.failed("ends: path does not join two distinct buildings as recorded")
    if realm.buildings[first].is_castle or realm.buildings[last].is_castle:
        return Verdict.failed("ends: passages join houses and forts only")
    for u, v in zip(vertices, vertices[1:]):
        if not graph.has_edge(u, v):
            return Verdict.failed(f"path: ({u}, {v}) is not an edge")
    position = {v: t for t, v in enumerate(vertices)}
    for t, v in enumerate(vertices):
        for w in graph.adjacency[v]:
            if w in position and abs(position[w] - t) != 1:
                return Verdict.failed(f"induced: chord ({v}, {w})")
    ends = realm.buildings[first].vertices | realm.buildings[last].vertices
    if any(v in ends for v in vertices[1:-1]):
        return Verdict.failed("interior: an internal vertex lies in an end building")
    if max_len is not None and passage.length > max_len:
        return Verdict.failed(f"length: {passage.length} exceeds {max_len}")
    hit = first_too_close(
        graph,
        vertices,
        owner,
        lambda y: sched.separation(k, k + 1 + realm.rank(y)),
        skip=[first, last],
    )
    if hit is not None:
        return Verdict.failed(f"remoteness: building {hit[0]} is at distance {hit[1]}")
    if passage.length < c:
        return Verdict.failed("end segment: path is shorter than c")
    for building, segment in ((first, vertices[: c + 1]), (last, vertices[::-1][: c + 1])):
        reach = bfs_distances(graph, realm.buildings[building].vertices, cutoff=c)
        close = {v for v in vertices if v in reach}
        if close != set(segment):
            return Verdict.failed(f"end segment: c-neighbourhood of building {building} on the path")
        if distance(graph, segment[0], segment[-1]) != c:
            return Verdict.failed(f"end segment: segment at building {building} is not a geodesic")
    return Verdict.passed()


def _oriented(path: Sequence[int], owner: Dict[int, int]) -> Optional[Passage]:
    vertices = tuple(path)
    first, last = owner.get(vertices[0]), owner.get(vertices[-1])
    if first is None or last is None or first == last:
        return None
    if first > last:
        vertices = vertices[::-1]
        first, last = last, first
    return Passage(LambdaPath(vertices), (first, last))


def _induced_paths(
    graph: Graph,
    realm: RealmState,
    start_building: int,
    max_len: int,
    budget: List[int],
) -> Iterable[Tuple[int, ...]]:
    owner = realm.owner_map()
    members = realm.buildings[start_building].vertices
    adjacency = graph.adjacency
    for root in sorted(members):
        stack = [(root,)]
        while stack:
            path = stack.pop()
            budget[0] -= 1
            if budget[0] < 0:
                raise SearchBudgetExhausted(0, "passage enumeration")
            tip = path[-1]
            if len(path) > 1 and owner.get(tip) is not None:
                yield path
                continue
            if len(path) - 1 >= max_len:
                continue
            inside = set(path)
            for w in sorted(adjacency[tip], reverse=True):
                if w in inside or w in members:
                    continue
                if any(x in inside for x in adjacency[w] if x != tip):
                    continue
                stack.append(path + (w,))


def find_passages(
    graph: Graph,
    tb: TieBreaker,
    sched: Schedule,
    realm: RealmState,
    max_len: Optional[int] = None,
    exhaustive: bool = False,
    partition: Optional[VoronoiPartition] = None,
    settings: Optional[Settings] = None,
) -> List[Passage]:
    """
    Passages of length at most ``max_len`` over a canonical candidate family.

    Candidates are the Λ-least shortest path between every pair of houses and forts,
    and for every edge between two cells the two cell geodesics spliced through it.
    With ``exhaustive`` every induced path up to ``max_len`` is also tried, within the
    search budget.
    """
    if realm.kind != "realm":
        raise PreconditionError("find_passages needs a realm")
    k = realm.century
    max_len = sched.passage_limit(k) if max_len is None else max_len
    partition = partition or realm.partition(graph, tb)
    owner = realm.owner_map()
    ends = [i for i, b in enumerate(realm.buildings) if not b.is_castle]
    candidates: Dict[Tuple[int, ...], Passage] = {}

    def offer(path: Sequence[int]) -> None:
        passage = _oriented(path, owner)
        if passage is not None and passage.length <= max_len:
            candidates.setdefault(passage.path.vertices, passage)

    for j in ends:
        target = realm.buildings[j].vertices
        forest = lambda_forest(graph, tb, {v: j for v in target}, cutoff=max_len)
        for i in ends:
            if i >= j:
                continue
            reached = [v for v in realm.buildings[i].vertices if v in forest.dist]
            if not reached:
                continue
            nearest = min(forest.dist[v] for v in reached)
            best: Optional[LambdaPath] = None
            for v in sorted(reached):
                if forest.dist[v] != nearest:
                    continue
                path = forest.path(v)
                if best is None or lambda_compare(tb, path, best) < 0:
                    best = path
            offer(best.vertices)  # type: ignore[union-attr]

    cells = partition.forest
    chosen = set(ends)
    for u, v in graph.edges:
        a, b = cells.owner[u], cells.owner[v]
        if a == b or a not in chosen or b not in chosen:
            continue
        left = cells.path(u).vertices[::-1]
        right = cells.path(v).vertices
        if len(left) + len(right) - 1 <= max_len:
            offer(left + right)

    if exhaustive:
        settings = settings or get_settings()
        budget = [settings.search_budget]
        try:
            for i in ends:
                for path in _induced_paths(graph, realm, i, max_len, budget):
                    offer(path)
        except SearchBudgetExhausted:
            logger.warning("Exhaustive passage enumeration stopped at the search budget")

    passages = [
        p for p in candidates.values() if verify_passage(graph, sched, realm, p, max_len)
    ]
    passages.sort(key=Passage.sort_key)
    logger.debug(f"Found {len(passages)} passages out of {len(candidates)} candidates")
    return passages


@dataclass(frozen=True)
class StructureViolation:
    """A community adjoining three forts, or a fort semiadjoining three forts."""

    kind: str
    centre: Tuple[int, ...]
    forts: Tuple[int, ...]
    via: Tuple[Tuple[int, ...], ...] = ()


@dataclass(frozen=True)
class StructureReport:
    """
    Adjoin structure of a set of houses and forts.

    ``numbering`` maps each adjoin-connected component (by position in ``components``)
    that holds a fort to its forts in interval order, or None when the semiadjoin
    graph of its forts is not a path or cycle.
    """

    components: Tuple[Tuple[int, ...], ...]
    communities: Tuple[Tuple[int, ...], ...]
    community_forts: Dict[Tuple[int, ...], FrozenSet[int]]
    semiadjoin: Dict[int, FrozenSet[int]]
    peripheral: FrozenSet[int]
    numbering: Dict[int, Optional[Tuple[int, ...]]]
    violations: Tuple[StructureViolation, ...] = field(default=())

    @property
    def ok(self) -> bool:
        return not self.violations


def _structure(
    partition: VoronoiPartition, realm: RealmState, members: Sequence[int]
) -> Tuple[
    List[Tuple[int, ...]],
    Dict[Tuple[int, ...], FrozenSet[int]],
    Dict[int, FrozenSet[int]],
    Dict[Tuple[int, int], Tuple[Tuple[int, ...], ...]],
    FrozenSet[int],
]:
    forts = [i for i in members if realm.buildings[i].is_fort]
    houses = [i for i in members if realm.buildings[i].is_house]
    communities = house_components(partition, houses)
    community_forts = {
        group: frozenset(f for f in forts if any(partition.adjoins(h, f) for h in group))
        for group in communities
    }
    semi: Dict[int, Set[int]] = {f: set() for f in forts}
    via: Dict[Tuple[int, int], List[Tuple[int, ...]]] = {}
    for x, y in itertools.combinations(forts, 2):
        if partition.adjoins(x, y):
            semi[x].add(y)
            semi[y].add(x)
    for group, adjoined in community_forts.items():
        for x, y in itertools.combinations(sorted(adjoined), 2):
            semi[x].add(y)
            semi[y].add(x)
            via.setdefault((x, y), []).append(group)
    peripheral = {f for f in forts if len(semi[f]) <= 1}
    for group, adjoined in community_forts.items():
        if len(adjoined) <= 1 and all(f in peripheral for f in adjoined):
            peripheral.update(group)
    return (
        communities,
        community_forts,
        {f: frozenset(s) for f, s in semi.items()},
        {pair: tuple(groups) for pair, groups in via.items()},
        frozenset(peripheral),
    )


def peripheral_members(
    partition: VoronoiPartition, realm: RealmState, members: Sequence[int]
) -> FrozenSet[int]:
    """Members of a set of houses and forts that are peripheral in it."""
    return _structure(partition, realm, members)[4]


def _interval_order(forts: Sequence[int], semi: Dict[int, FrozenSet[int]]) -> Optional[Tuple[int, ...]]:
    if not forts:
        return ()
    inside = set(forts)
    neighbours = {f: sorted(semi[f] & inside) for f in forts}
    if any(len(n) > 2 for n in neighbours.values()):
        return None
    ends = [f for f in sorted(forts) if len(neighbours[f]) <= 1]
    current = ends[0] if ends else min(forts)
    order = [current]
    previous = None
    while True:
        following = [g for g in neighbours[current] if g != previous and g not in order]
        if not following:
            break
        previous, current = current, following[0]
        order.append(current)
    if len(order) != len(forts):
        return None
    return tuple(order)


def classify_rebel_structure(
    graph: Graph,
    tb: TieBreaker,
    sched: Schedule,
    realm: RealmState,
    members: Optional[Sequence[int]] = None,
    partition: Optional[VoronoiPartition] = None,
) -> StructureReport:
    """
    Adjoin components, communities, semiadjoin relation, peripheral members and fort
    numbering of a set of houses and forts (all of them by default).

    Configurations that an optimal realm excludes are reported as violations.
    """
    partition = partition or realm.partition(graph, tb)
    if members is None:
        members = [i for i, b in enumerate(realm.buildings) if not b.is_castle]
    members = sorted(members)
    communities, community_forts, semi, via, peripheral = _structure(partition, realm, members)
    components = house_components(partition, members)
    numbering: Dict[int, Optional[Tuple[int, ...]]] = {}
    for index, component in enumerate(components):
        forts = [i for i in component if realm.buildings[i].is_fort]
        if forts:
            numbering[index] = _interval_order(forts, semi)
    violations: List[StructureViolation] = []
    for group in communities:
        adjoined = community_forts[group]
        if len(adjoined) >= 3:
            violations.append(StructureViolation("community", group, tuple(sorted(adjoined))))
    for f in sorted(semi):
        if len(semi[f]) >= 3:
            others = tuple(sorted(semi[f]))
            used = tuple(
                g
                for other in others
                for g in via.get((min(f, other), max(f, other)), ())[:1]
                if not partition.adjoins(f, other)
            )
            violations.append(StructureViolation("fort", (f,), others, used))
    return StructureReport(
        tuple(components),
        tuple(communities),
        community_forts,
        semi,
        peripheral,
        numbering,
        tuple(violations),
    )


@dataclass(frozen=True)
class CastleMove:
    """
    Three leaf forts joined through a hub of forts, communities and passages.

    ``castle`` is the new building, ``absorbed`` the buildings it swallows, and
    ``witness`` its superfat model of the next pattern tree. ``certificate`` is None
    when the move ends the run with a witness.
    """

    leaves: Tuple[int, int, int]
    hub_members: Tuple[int, ...]
    passages: Tuple[Passage, ...]
    hub: VertexSet
    castle: VertexSet
    absorbed: Tuple[int, ...]
    witness: SuperfatModel
    certificate: Optional[QuasiBoundCertificate] = None


class _MoveSearch:
    def __init__(
        self,
        graph: Graph,
        tb: TieBreaker,
        sched: Schedule,
        realm: RealmState,
        settings: Settings,
        cancel: Optional[threading.Event] = None,
    ) -> None:
        self.graph = graph
        self.cancel = cancel
        self.sched = sched
        self.realm = realm
        self.k = realm.century
        self.budget = settings.search_budget
        self.partition = realm.partition(graph, tb)
        self.owner = realm.owner_map()
        passages = find_passages(graph, tb, sched, realm, partition=self.partition, settings=settings)
        self.by_pair: Dict[Tuple[int, int], Passage] = {}
        for passage in passages:
            self.by_pair.setdefault(passage.ends, passage)
        self.report = classify_rebel_structure(graph, tb, sched, realm, partition=self.partition)
        self.units: List[Tuple[int, ...]] = [(f,) for f in realm.forts]
        self.inner: Dict[int, Tuple[Passage, ...]] = {}
        for group in self.report.communities:
            links = self._spanning(list(group))
            if links is None:
                continue
            self.inner[len(self.units)] = links
            self.units.append(group)
        self.unit_of = {b: u for u, unit in enumerate(self.units) for b in unit}
        self.unit_links: Dict[Tuple[int, int], Passage] = {}
        for (a, b), passage in sorted(self.by_pair.items()):
            ua, ub = self.unit_of.get(a), self.unit_of.get(b)
            if ua is None or ub is None or ua == ub:
                continue
            self.unit_links.setdefault((min(ua, ub), max(ua, ub)), passage)
        self.unit_adjacency: List[List[int]] = [[] for _ in self.units]
        for ua, ub in self.unit_links:
            self.unit_adjacency[ua].append(ub)
            self.unit_adjacency[ub].append(ua)
        self.tried = 0

    def _link(self, a: int, b: int) -> Optional[Passage]:
        return self.by_pair.get((min(a, b), max(a, b)))

    def _spanning(self, members: List[int]) -> Optional[Tuple[Passage, ...]]:
        """Passages connecting the members of a community, or None."""
        if len(members) == 1:
            return ()
        reached = {members[0]}
        queue = deque([members[0]])
        links = []
        while queue:
            a = queue.popleft()
            for b in members:
                if b in reached:
                    continue
                passage = self._link(a, b)
                if passage is not None:
                    reached.add(b)
                    links.append(passage)
                    queue.append(b)
        return tuple(links) if len(reached) == len(members) else None

    def _connecting(self, units: Sequence[int]) -> Optional[List[Passage]]:
        chosen = set(units)
        start = min(units)
        reached = {start}
        queue = deque([start])
        links: List[Passage] = []
        while queue:
            a = queue.popleft()
            for b in sorted(self.unit_adjacency[a]):
                if b in chosen and b not in reached:
                    reached.add(b)
                    links.append(self.unit_links[(min(a, b), max(a, b))])
                    queue.append(b)
        if reached != chosen:
            return None
        for u in units:
            links.extend(self.inner.get(u, ()))
        return links

    def _leaf_passage(self, fort: int, hub_members: Sequence[int]) -> Optional[Passage]:
        options = [p for h in hub_members if (p := self._link(fort, h)) is not None]
        if not options:
            return None
        return min(options, key=lambda p: (p.length, p.path.vertices))

    def try_units(
        self, units: Sequence[int], preferred: Optional[Sequence[int]] = None
    ) -> Optional[CastleMove]:
        hub_members = sorted(b for u in units for b in self.units[u])
        if len(units) > 4:
            return None
        connecting = self._connecting(units)
        if connecting is None:
            return None
        pool = preferred if preferred is not None else self.realm.forts
        leaves = []
        for fort in sorted(pool):
            if fort in hub_members:
                continue
            passage = self._leaf_passage(fort, hub_members)
            if passage is not None:
                leaves.append((fort, passage))
        for triple in itertools.combinations(leaves, 3):
            self.tried += 1
            if self.cancel is not None and self.cancel.is_set():
                raise RunCancelled("castle move search")
            if self.tried > self.budget:
                raise SearchBudgetExhausted(self.tried, "castle move search")
            move = self.build(hub_members, triple, connecting)
            if move is not None:
                return move
        return None

    def build(
        self,
        hub_members: Sequence[int],
        leaves: Sequence[Tuple[int, Passage]],
        connecting: Sequence[Passage],
    ) -> Optional[CastleMove]:
        graph, realm, sched, k = self.graph, self.realm, self.sched, self.k
        forts = [f for f, _ in leaves]
        passages = [p for _, p in leaves] + list(connecting)
        leaf_vertices = frozenset().union(*(realm.buildings[f].vertices for f in forts))
        hub_vertices = frozenset().union(*(realm.buildings[h].vertices for h in hub_members))
        routes = frozenset().union(*(p.path.vertex_set for p in passages))
        hub = (hub_vertices | routes) - leaf_vertices
        if not hub or not is_connected_induced(graph, hub):
            return None
        castle = hub | leaf_vertices
        absorbed = set(forts) | set(hub_members)
        for v in sorted(castle):
            i = self.owner.get(v)
            if i is None or i in absorbed:
                continue
            building = realm.buildings[i]
            if building.vertices <= castle and realm.rank(i) <= k:
                absorbed.add(i)
            else:
                return None
        hit = first_too_close(
            graph,
            hub,
            self.owner,
            lambda y: sched.separation(k, k + 1 + realm.rank(y)),
            skip=absorbed,
        )
        if hit is not None:
            return None
        models = [realm.buildings[f].witness for f in forts]
        if any(m is None for m in models):
            return None
        fitted = fit_hub(graph, hub, [m.image for m in models], castle, sched.c)  # type: ignore[union-attr]
        if fitted is None:
            return None
        core, legs = fitted
        try:
            witness = claw_combine(graph, k, models, core, legs)  # type: ignore[arg-type]
        except PreconditionError as error:
            logger.debug(f"Claw rejected leaves {forts}: {error.reason}")
            return None
        certificate = None
        if k + 1 < sched.ell:
            certificate = self._castle_certificate(castle, sorted(absorbed))
            if certificate is None:
                return None
        return CastleMove(
            tuple(forts),  # type: ignore[arg-type]
            tuple(hub_members),
            tuple(passages),
            hub,
            castle,
            tuple(sorted(absorbed)),
            witness,
            certificate,
        )

    def _castle_certificate(
        self, castle: VertexSet, absorbed: Sequence[int]
    ) -> Optional[QuasiBoundCertificate]:
        graph, realm = self.graph, self.realm
        a, b = self.sched.castle_bound(self.k)
        _, beta = self.sched.budget(self.k)
        parts = [building_certificate(graph, realm.buildings[i], None, beta) for i in absorbed]
        covered = frozenset().union(*(realm.buildings[i].vertices for i in absorbed))
        certificate = None
        if all(p is not None for p in parts):
            certificate = augmented_certificate(graph, castle, parts, castle - covered, a, b)  # type: ignore[arg-type]
        if certificate is None:
            certificate = layered_certificate(graph, castle, a, b)
        return certificate

    def seeds(self) -> List[Tuple[List[int], Optional[Tuple[int, ...]]]]:
        found = []
        for violation in self.report.violations:
            if violation.kind == "community":
                unit = self.unit_of.get(violation.centre[0])
                if unit is not None:
                    found.append(([unit], violation.forts))
            else:
                units = {self.unit_of[violation.centre[0]]}
                units.update(self.unit_of[g[0]] for g in violation.via if g[0] in self.unit_of)
                if len(units) <= 4:
                    found.append((sorted(units), violation.forts))
        return found

    def run(self) -> Optional[CastleMove]:
        for units, preferred in self.seeds():
            move = self.try_units(units, preferred)
            if move is not None:
                return move
        blocked: Set[int] = set()
        for anchor in range(len(self.units)):
            for chosen in connected_sets(self.unit_adjacency, anchor, blocked, 4):
                move = self.try_units(sorted(chosen))
                if move is not None:
                    return move
            blocked.add(anchor)
        return None


def find_castle_move(
    graph: Graph,
    tb: TieBreaker,
    sched: Schedule,
    realm: RealmState,
    settings: Optional[Settings] = None,
    cancel: Optional[threading.Event] = None,
) -> Optional[CastleMove]:
    """
    Search for three forts, up to four hub units (forts or communities) and passages
    whose union is a castle carrying a superfat model of the next pattern tree.

    Structure violations found by ``classify_rebel_structure`` are tried first. Every
    returned move has its witness already assembled and, unless it ends the run, its
    castle certificate.

    Raises:
        RunCancelled: If ``cancel`` is set while candidates are being tried.
    """
    if realm.kind != "realm":
        raise PreconditionError("find_castle_move needs a realm")
    if realm.century >= sched.ell or len(realm.forts) < 3:
        return None
    search = _MoveSearch(graph, tb, sched, realm, settings or get_settings(), cancel)
    try:
        move = search.run()
    except SearchBudgetExhausted as error:
        logger.warning(f"Castle move search stopped: {error}")
        return None
    if move is not None:
        logger.debug(f"Castle move on leaves {move.leaves} through {move.hub_members}")
    return move


def apply_castle_move(
    graph: Graph,
    tb: TieBreaker,
    sched: Schedule,
    realm: RealmState,
    move: CastleMove,
) -> Union[RealmState, SuperfatModel]:
    """
    Replace the absorbed buildings by the castle, or return the witness when the castle
    would reach the last century.

    Raises:
        InvariantViolation: If the witness or the new realm fails verification.
    """
    k = realm.century
    if k + 1 == sched.ell:
        verdict = verify_superfat(graph, sched.ell, move.witness)
        if not verdict:
            raise InvariantViolation("apply_castle_move", "witness", century=k, detail=verdict.reason or "")
        logger.info(f"Castle move in century {k} yields an H_{sched.ell} witness")
        return move.witness
    if move.certificate is None:
        raise PreconditionError("castle move carries no certificate")
    castle = Building(move.castle, BuildingClass.CASTLE, move.certificate, move.witness)
    kept = [b for i, b in enumerate(realm.buildings) if i not in set(move.absorbed)]
    updated = RealmState.of(k, kept + [castle], "realm")
    verdict = verify_realm(graph, tb, sched, updated)
    if not verdict:
        raise InvariantViolation("apply_castle_move", verdict.reason or "", century=k)
    logger.info(f"Castle of {len(move.castle)} vertices built in century {k}")
    return updated
