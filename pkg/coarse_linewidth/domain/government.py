"""
Provinces, governments, cabals and revolutions over a saturated realm.

A government groups the castles of a realm (and eventually some houses and forts) into
provinces, each carried by a connected framework. Everything not in a province is a
rebel. Revolutions merge three provinces of one type with a cabal of rebels into a
province of the next type, until the government is stable.
"""

import itertools
import logging
import threading
from collections.abc import Mapping
from dataclasses import dataclass
from typing import (
    Callable,
    Dict,
    FrozenSet,
    Iterator,
    List,
    Optional,
    Sequence,
    Set,
    Tuple,
    Union,
)

import networkx as nx

from coarse_linewidth.domain.decomposition import (
    QuasiBoundCertificate,
    augmented_certificate,
    layered_certificate,
    verify_quasi_bound,
)
from coarse_linewidth.domain.graph import (
    Graph,
    VertexSet,
    bfs_distances,
    is_connected_induced,
)
from coarse_linewidth.domain.metric import (
    LambdaForest,
    TieBreaker,
    VoronoiPartition,
    lambda_forest,
)
from coarse_linewidth.domain.minors import (
    SuperfatModel,
    claw_combine,
    fit_hub,
    restrict_superfat,
    verify_superfat,
)
from coarse_linewidth.domain.passages import classify_rebel_structure, peripheral_members
from coarse_linewidth.domain.realm import (
    Building,
    BuildingClass,
    RealmState,
    building_certificate,
    first_too_close,
    house_components,
    verify_society,
)
from coarse_linewidth.domain.schedule import Schedule, claimed_bounds
from coarse_linewidth.domain.verdict import Verdict
from coarse_linewidth.exceptions import InvariantViolation, PreconditionError, RunCancelled

logger = logging.getLogger(__name__)

Stronghold = Tuple[str, int]
"""``("province", p)`` for the framework of province p, ``("rebel", i)`` for building i."""

Observer = Callable[[str, Dict[str, object]], None]


@dataclass(frozen=True)
class Province:
    """Realm buildings grouped under one framework, with its certificate and witness."""

    members: FrozenSet[int]
    type: int
    framework: VertexSet
    certificate: QuasiBoundCertificate
    witness: SuperfatModel


@dataclass(frozen=True)
class Government:
    """Provinces over a realm, ordered by their least member."""

    realm: RealmState
    provinces: Tuple[Province, ...]

    @classmethod
    def of(cls, realm: RealmState, provinces: Sequence[Province]) -> "Government":
        return cls(realm, tuple(sorted(provinces, key=lambda p: min(p.members))))

    @property
    def century(self) -> int:
        return self.realm.century

    @property
    def rebels(self) -> List[int]:
        governed = set().union(*(p.members for p in self.provinces))
        return [i for i in range(len(self.realm.buildings)) if i not in governed]

    def strongholds(self) -> List[Tuple[Stronghold, VertexSet]]:
        found: List[Tuple[Stronghold, VertexSet]] = [
            (("province", p), province.framework) for p, province in enumerate(self.provinces)
        ]
        found.extend((("rebel", i), self.realm.buildings[i].vertices) for i in self.rebels)
        return found


class LocalPartition(Mapping):
    """
    Local vertices of every stronghold.

    Behaves as a read-only map from stronghold to its local set.
    """

    def __init__(self, graph: Graph, labels: Sequence[Stronghold], forest: LambdaForest):
        self.graph = graph
        self.labels = tuple(labels)
        self.forest = forest
        self._index = {label: i for i, label in enumerate(self.labels)}
        members: List[Set[int]] = [set() for _ in self.labels]
        for v, i in forest.owner.items():
            members[i].add(v)
        self._sets = tuple(frozenset(m) for m in members)
        self._talking: Optional[FrozenSet[Tuple[int, int]]] = None

    def talk_pairs(self) -> FrozenSet[Tuple[int, int]]:
        """Index pairs of strongholds whose local sets are joined by an edge."""
        if self._talking is None:
            owner = self.forest.owner
            pairs = set()
            for u, v in self.graph.edges:
                a, b = owner.get(u), owner.get(v)
                if a is not None and b is not None and a != b:
                    pairs.add((a, b) if a < b else (b, a))
            self._talking = frozenset(pairs)
        return self._talking

    def talks(self, x: Stronghold, y: Stronghold) -> bool:
        if x == y:
            raise PreconditionError("a stronghold does not talk to itself")
        a, b = self._index[x], self._index[y]
        return ((a, b) if a < b else (b, a)) in self.talk_pairs()

    def talk_graph(self) -> nx.Graph:
        graph = nx.Graph()
        graph.add_nodes_from(self.labels)
        graph.add_edges_from((self.labels[a], self.labels[b]) for a, b in self.talk_pairs())
        return graph

    def __getitem__(self, label: Stronghold) -> VertexSet:
        return self._sets[self._index[label]]

    def __iter__(self) -> Iterator[Stronghold]:
        return iter(self.labels)

    def __len__(self) -> int:
        return len(self.labels)


def local_partition(graph: Graph, tb: TieBreaker, gov: Government) -> LocalPartition:
    """
    Split ``V(G)`` into the local sets of the strongholds.

    Raises:
        InvariantViolation: If strongholds overlap, or a rebel's local set leaves its
            realm cell.
    """
    strongholds = gov.strongholds()
    sources: Dict[int, int] = {}
    for index, (label, members) in enumerate(strongholds):
        for v in members:
            if v in sources:
                raise InvariantViolation(
                    "local_partition", "disjoint strongholds", gov.century, f"vertex {v}"
                )
            sources[v] = index
    forest = lambda_forest(graph, tb, sources)
    locals_ = LocalPartition(graph, [label for label, _ in strongholds], forest)
    cells = gov.realm.partition(graph, tb)
    for label, _ in strongholds:
        if label[0] == "rebel" and not locals_[label] <= cells.cell(label[1]):
            raise InvariantViolation(
                "local_partition", "rebel locals inside cell", gov.century, f"rebel {label[1]}"
            )
    for a, b in locals_.talk_pairs():
        x, y = locals_.labels[a], locals_.labels[b]
        if x[0] == y[0] == "rebel" and not cells.adjoins(x[1], y[1]):
            raise InvariantViolation(
                "local_partition", "talking rebels adjoin", gov.century, f"{x[1]} and {y[1]}"
            )
    return locals_


def talks_to(
    graph: Graph, tb: TieBreaker, gov: Government, x: Stronghold, y: Stronghold
) -> bool:
    """True iff a channel joins the two strongholds."""
    return local_partition(graph, tb, gov).talks(x, y)


def primordial_government(
    graph: Graph, tb: TieBreaker, sched: Schedule, realm: RealmState
) -> Government:
    """
    Every castle as a singleton province of type k+1 with itself as framework.

    Raises:
        InvariantViolation: If a castle reaches the last century or the government fails
            verification.
    """
    k = realm.century
    if realm.castles and k + 1 > sched.ell - 1:
        raise InvariantViolation("primordial_government", "type range", k)
    provinces = []
    for i in realm.castles:
        castle = realm.buildings[i]
        if castle.certificate is None or castle.witness is None:
            raise InvariantViolation("primordial_government", "castle payload", k, f"castle {i}")
        provinces.append(
            Province(frozenset([i]), k + 1, castle.vertices, castle.certificate, castle.witness)
        )
    gov = Government.of(realm, provinces)
    verdict = verify_government(graph, tb, sched, gov)
    if not verdict:
        raise InvariantViolation("primordial_government", verdict.reason or "", k)
    logger.debug(f"Primordial government of {len(provinces)} provinces in century {k}")
    return gov


def _check_province(
    graph: Graph,
    sched: Schedule,
    gov: Government,
    cells: VoronoiPartition,
    p: int,
) -> Verdict:
    realm, k = gov.realm, gov.century
    province = gov.provinces[p]
    t, framework = province.type, province.framework
    if not k + 1 <= t <= sched.ell - 1:
        return Verdict.failed(f"type range: province {p} has type {t}")
    covered = frozenset().union(*(realm.buildings[i].vertices for i in province.members))
    if not covered <= framework or not is_connected_induced(graph, framework):
        return Verdict.failed(f"framework connected: province {p}")
    reach = bfs_distances(graph, covered, cutoff=sched.d0 * (t - k), within=framework)
    if len(reach) != len(framework):
        return Verdict.failed(f"framework radius: province {p}")
    if t - k - 1 >= 0 and max(reach.values(), default=0) > sched.d0 * (t - k - 1):
        logger.warning(
            f"Province {p} framework radius {max(reach.values())} exceeds the claimed "
            f"{sched.d0 * (t - k - 1)}"
        )
    castles = [i for i in province.members if realm.buildings[i].is_castle]
    if len(castles) != 3 ** (t - k - 1):
        return Verdict.failed(f"castle count: province {p} holds {len(castles)} castles")
    rest = sorted(i for i in province.members if not realm.buildings[i].is_castle)
    peripheral = peripheral_members(cells, realm, rest)
    forts = [i for i in peripheral if realm.buildings[i].is_fort]
    if len(forts) > 3 ** (t - k) - 1:
        return Verdict.failed(f"peripheral forts: province {p} has {len(forts)}")
    houses = [i for i in rest if realm.buildings[i].is_house]
    groups = [g for g in house_components(cells, houses) if any(h in peripheral for h in g)]
    if len(groups) > max(3 ** (t - k) - 2, 0):
        return Verdict.failed(f"peripheral communities: province {p} has {len(groups)}")
    witness = province.witness
    if witness.ell != t or witness.c != sched.c or not witness.image <= framework:
        return Verdict.failed(f"framework witness: province {p}")
    verdict = verify_superfat(graph, t, witness)
    if not verdict:
        return verdict.prefixed(f"framework witness: province {p}")
    a, b = sched.small_bound(k)
    certificate = province.certificate
    if certificate.subject != framework:
        return Verdict.failed(f"small framework: province {p} certificate subject")
    return verify_quasi_bound(graph, certificate, a, b).prefixed(f"small framework: province {p}")


def verify_government(
    graph: Graph, tb: TieBreaker, sched: Schedule, gov: Government
) -> Verdict:
    """Check the government bullets, the province counting rules and smallness."""
    realm, k = gov.realm, gov.century
    seen: Set[int] = set()
    for p, province in enumerate(gov.provinces):
        if not province.members or province.members & seen:
            return Verdict.failed(f"disjoint provinces: province {p}")
        if any(not 0 <= i < len(realm.buildings) for i in province.members):
            return Verdict.failed(f"disjoint provinces: province {p} names unknown buildings")
        seen |= province.members
    for i in realm.castles:
        if i not in seen:
            return Verdict.failed(f"castles governed: castle {i} is a rebel")
    cells = realm.partition(graph, tb)
    for p in range(len(gov.provinces)):
        verdict = _check_province(graph, sched, gov, cells, p)
        if not verdict:
            return verdict
    framework_owner = {v: p for p, prov in enumerate(gov.provinces) for v in prov.framework}
    rebels = gov.rebels
    rebel_owner = {v: i for i in rebels for v in realm.buildings[i].vertices}
    for p, province in enumerate(gov.provinces):
        t = province.type
        hit = first_too_close(
            graph,
            province.framework,
            framework_owner,
            lambda q: sched.separation(k, t + gov.provinces[q].type),
            skip=[p],
        )
        if hit is not None:
            return Verdict.failed(f"framework separation: provinces {p} and {hit[0]}")
        hit = first_too_close(
            graph,
            province.framework,
            rebel_owner,
            lambda i: sched.separation(k, t + realm.rank(i)),
        )
        if hit is not None:
            return Verdict.failed(f"rebel separation: province {p} and rebel {hit[0]}")
    return Verdict.passed()


@dataclass(frozen=True)
class Cabal:
    """
    A set of rebels fit for a revolution.

    ``provinces`` are the three type-``j`` provinces the cabal talks to.
    """

    members: FrozenSet[int]
    leaders: Tuple[int, ...]
    leading_networks: Tuple[FrozenSet[int], ...]
    j: int
    provinces: Tuple[int, int, int]


class _CabalContext:
    def __init__(self, graph: Graph, tb: TieBreaker, sched: Schedule, gov: Government):
        self.graph, self.tb, self.sched, self.gov = graph, tb, sched, gov
        self.realm = gov.realm
        self.k = gov.century
        self.locals = local_partition(graph, tb, gov)
        self.cells = self.realm.partition(graph, tb)
        self.rebels = gov.rebels
        talk = self.locals.talk_graph()
        self.rebel_talk = nx.Graph()
        self.rebel_talk.add_nodes_from(self.rebels)
        self.province_talk: Dict[int, Set[int]] = {i: set() for i in self.rebels}
        for x, y in talk.edges:
            if x[0] == y[0] == "rebel":
                self.rebel_talk.add_edge(x[1], y[1])
            elif x[0] != y[0]:
                rebel, province = (x, y) if x[0] == "rebel" else (y, x)
                self.province_talk[rebel[1]].add(province[1])
        houses = [i for i in self.rebels if self.realm.buildings[i].is_house]
        self.networks = [
            frozenset(c) for c in nx.connected_components(self.rebel_talk.subgraph(houses))
        ]
        self.networks.sort(key=min)
        self.network_of = {h: n for n in self.networks for h in n}

    def in_communication(self, members: Set[int]) -> bool:
        return bool(members) and nx.is_connected(self.rebel_talk.subgraph(members))

    def provinces_of_type(self, members: Set[int], j: int) -> List[int]:
        talking = set().union(*(self.province_talk[i] for i in members))
        return sorted(p for p in talking if self.gov.provinces[p].type == j)

    def dangerous(self, members: Set[int]) -> Optional[Tuple[int, Tuple[int, int, int]]]:
        if not self.in_communication(members):
            return None
        for j in range(self.k + 1, self.sched.ell):
            found = self.provinces_of_type(members, j)
            if len(found) >= 3:
                return j, (found[0], found[1], found[2])
        return None

    def talks_between(self, first: Set[int], second: Set[int]) -> bool:
        return any(self.rebel_talk.has_edge(x, y) for x in first for y in second)

    def verify(self, cabal: Cabal) -> Verdict:
        members = set(cabal.members)
        rebels = set(self.rebels)
        if not members or not members <= rebels:
            return Verdict.failed("communication: members must be rebels")
        if not self.in_communication(members):
            return Verdict.failed("communication: members are not in communication")
        for network in self.networks:
            if network & members and not network <= members:
                return Verdict.failed("organized: a network is split")
        if len(cabal.leaders) > 2 or len(cabal.leading_networks) > 3:
            return Verdict.failed("designation: too many leaders or leading networks")
        if any(x not in members or not self.realm.buildings[x].is_fort for x in cabal.leaders):
            return Verdict.failed("designation: leaders must be forts of the cabal")
        if any(n not in self.networks or not n <= members for n in cabal.leading_networks):
            return Verdict.failed("designation: leading networks must be networks of the cabal")
        designated = set(cabal.leaders).union(*cabal.leading_networks)
        peripheral = peripheral_members(self.cells, self.realm, sorted(members))
        if not peripheral <= designated:
            return Verdict.failed("peripheral members: undesignated peripheral member")
        for x in members:
            if x in designated:
                continue
            if any(y not in members for y in self.rebel_talk.neighbors(x)):
                return Verdict.failed(f"outside contact: member {x} talks outside the cabal")
        if not self.k + 1 <= cabal.j <= self.sched.ell - 1:
            return Verdict.failed("three provinces: type out of range")
        if len(set(cabal.provinces)) != 3:
            return Verdict.failed("three provinces: provinces must be distinct")
        talking = set().union(*(self.province_talk[i] for i in members))
        for p in cabal.provinces:
            if p not in talking or self.gov.provinces[p].type != cabal.j:
                return Verdict.failed(f"three provinces: province {p}")
        if len(members) > 1 and frozenset(members) not in self.networks:
            for j in range(self.k + 1, self.sched.ell):
                if len(self.provinces_of_type(members, j)) > 4:
                    return Verdict.failed(f"few provinces: more than four of type {j}")
        return Verdict.passed()

    def recipe(self, component: Set[int]) -> Optional[Cabal]:
        realm = self.realm
        inner = [n for n in self.networks if n <= component]
        for network in inner:
            danger = self.dangerous(set(network))
            if danger is not None:
                return Cabal(network, (), (network,), danger[0], danger[1])
        forts = [i for i in component if realm.buildings[i].is_fort]
        if not forts:
            return None
        report = classify_rebel_structure(
            self.graph, self.tb, self.sched, realm, sorted(component), self.cells
        )
        order = report.numbering.get(0)
        if order is None or len(report.components) != 1:
            logger.debug(f"No interval numbering for rebels {sorted(component)}")
            return None
        talks_fort = {
            network: {f for f in forts if self.talks_between(set(network), {f})}
            for network in inner
        }

        def window(first: int, last: int) -> Set[int]:
            chosen = set(order[first : last + 1])
            for network in inner:
                if talks_fort[network] & chosen:
                    chosen |= network
            return chosen

        span = None
        for width in range(len(order)):
            for first in range(len(order) - width):
                if self.dangerous(window(first, first + width)) is not None:
                    span = (first, first + width)
                    break
            if span is not None:
                break
        if span is None:
            return None
        first, last = span
        core = set(order[first : last + 1])
        middle = set(order[first + 1 : last])
        for network in inner:
            if talks_fort[network] & middle:
                core |= network
        extra = [n for n in inner if n <= window(first, last) and not n <= core]
        for size in range(4):
            for added in itertools.combinations(extra, size):
                members = core.union(*added)
                danger = self.dangerous(members)
                if danger is None:
                    continue
                leaders = tuple(sorted({order[first], order[last]}))
                return Cabal(frozenset(members), leaders, tuple(added), danger[0], danger[1])
        return None


def verify_cabal(
    graph: Graph, tb: TieBreaker, sched: Schedule, gov: Government, cabal: Cabal
) -> Verdict:
    """Check the six cabal bullets."""
    return _CabalContext(graph, tb, sched, gov).verify(cabal)


def find_cabal(
    graph: Graph, tb: TieBreaker, sched: Schedule, gov: Government
) -> Optional[Cabal]:
    """
    Search every maximal in-communication set of rebels for a cabal.

    A dangerous network is a cabal on its own. Otherwise the forts are numbered along
    their interval, the narrowest dangerous window is taken, and the fewest extra
    networks are added to keep it dangerous.
    """
    if gov.century + 1 > sched.ell - 1 or len(gov.provinces) < 3:
        return None
    context = _CabalContext(graph, tb, sched, gov)
    for component in sorted(nx.connected_components(context.rebel_talk), key=min):
        if context.dangerous(set(component)) is None:
            continue
        cabal = context.recipe(set(component))
        if cabal is None:
            continue
        verdict = context.verify(cabal)
        if verdict:
            logger.debug(f"Cabal {sorted(cabal.members)} talks to provinces {cabal.provinces}")
            return cabal
        logger.debug(f"Candidate cabal rejected: {verdict.reason}")
    return None


def _revolution_certificate(
    graph: Graph,
    sched: Schedule,
    gov: Government,
    framework: VertexSet,
    cabal_locals: VertexSet,
    castles: Sequence[int],
) -> Optional[QuasiBoundCertificate]:
    k = gov.century
    a, b = sched.small_bound(k)
    _, beta = sched.budget(k)
    parts = [layered_certificate(graph, cabal_locals, None, beta + sched.d0)]
    parts.extend(building_certificate(graph, gov.realm.buildings[i], None, b) for i in castles)
    covered = cabal_locals.union(*(gov.realm.buildings[i].vertices for i in castles))
    certificate = None
    if all(part is not None for part in parts):
        certificate = augmented_certificate(
            graph, framework, parts, framework - covered, a, b  # type: ignore[arg-type]
        )
    if certificate is None:
        logger.debug("Revolution certificate assembly failed, trying a layered one")
        certificate = layered_certificate(graph, framework, a, b)
    return certificate


def apply_revolution(
    graph: Graph, tb: TieBreaker, sched: Schedule, gov: Government, cabal: Cabal
) -> Union[Government, SuperfatModel]:
    """
    Merge the cabal and its three provinces into one province of type ``j+1``, or return
    the witness when that type reaches the last century.

    Raises:
        PreconditionError: If the cabal does not verify.
        InvariantViolation: If the claw, the certificate or the new government fails.
    """
    k = gov.century
    context = _CabalContext(graph, tb, sched, gov)
    verdict = context.verify(cabal)
    if not verdict:
        raise PreconditionError(f"not a cabal: {verdict.reason}")
    locals_ = context.locals
    cabal_locals = frozenset().union(*(locals_[("rebel", i)] for i in cabal.members))
    framework = cabal_locals.union(*(locals_[("province", p)] for p in cabal.provinces))
    models = [gov.provinces[p].witness for p in cabal.provinces]
    fitted = fit_hub(graph, framework, [m.image for m in models], framework, sched.c)
    if fitted is None:
        raise InvariantViolation("apply_revolution", "claw hub", k)
    hub, legs = fitted
    try:
        witness = claw_combine(graph, cabal.j, models, hub, legs)
    except PreconditionError as error:
        raise InvariantViolation("apply_revolution", "claw", k, error.reason) from error
    if cabal.j + 1 == sched.ell:
        logger.info(f"Revolution in century {k} yields an H_{sched.ell} witness")
        return witness
    members = frozenset(cabal.members).union(*(gov.provinces[p].members for p in cabal.provinces))
    castles = sorted(i for i in members if gov.realm.buildings[i].is_castle)
    certificate = _revolution_certificate(graph, sched, gov, framework, cabal_locals, castles)
    if certificate is None:
        raise InvariantViolation("apply_revolution", "small framework", k)
    claimed = claimed_bounds(sched, k)["small framework"]
    if certificate.center_count > claimed[0]:
        logger.warning(
            f"Revolution certificate uses {certificate.center_count} centers, claimed {claimed[0]}"
        )
    merged = Province(members, cabal.j + 1, framework, certificate, witness)
    kept = [prov for p, prov in enumerate(gov.provinces) if p not in cabal.provinces]
    updated = Government.of(gov.realm, kept + [merged])
    verdict = verify_government(graph, tb, sched, updated)
    if not verdict:
        raise InvariantViolation("apply_revolution", verdict.reason or "", k)
    logger.info(f"Revolution in century {k} builds a type-{cabal.j + 1} province")
    return updated


def stabilize_government(
    graph: Graph,
    tb: TieBreaker,
    sched: Schedule,
    gov: Government,
    observer: Optional[Observer] = None,
    cancel: Optional[threading.Event] = None,
) -> Union[Government, SuperfatModel]:
    """
    Apply revolutions until no cabal remains.

    ``observer`` is called with the name and detail of every applied revolution.

    Raises:
        RunCancelled: If ``cancel`` is set between two revolutions.
    """
    while True:
        if cancel is not None and cancel.is_set():
            raise RunCancelled("revolutions")
        cabal = find_cabal(graph, tb, sched, gov)
        if cabal is None:
            return gov
        result = apply_revolution(graph, tb, sched, gov, cabal)
        if observer is not None:
            observer(
                "revolution",
                {
                    "members": sorted(cabal.members),
                    "type": cabal.j + 1,
                    "provinces": list(cabal.provinces),
                },
            )
        if isinstance(result, SuperfatModel):
            return result
        gov = result


def advance_century(
    graph: Graph, tb: TieBreaker, sched: Schedule, gov: Government
) -> RealmState:
    """
    The society of century k+1: rebels become houses and frameworks become forts.

    Raises:
        PreconditionError: At the last century.
        InvariantViolation: If the new society fails verification.
    """
    k = gov.century
    if k >= sched.ell:
        raise PreconditionError("no century follows the last one")
    alpha, beta = sched.budget(k + 1)
    buildings = [
        Building(gov.realm.buildings[i].vertices, BuildingClass.HOUSE) for i in gov.rebels
    ]
    for province in gov.provinces:
        certificate = province.certificate
        if not certificate.fits(alpha, beta):
            raise InvariantViolation("advance_century", "fort certificate", k + 1)
        buildings.append(
            Building(
                province.framework,
                BuildingClass.FORT,
                certificate.relabel(alpha, beta),
                restrict_superfat(province.witness, k + 1),
            )
        )
    society = RealmState.of(k + 1, buildings, "society")
    verdict = verify_society(graph, tb, sched, society)
    if not verdict:
        raise InvariantViolation("advance_century", verdict.reason or "", k + 1)
    logger.info(
        f"Century {k + 1} society: {len(society.houses)} houses, {len(society.forts)} forts"
    )
    return society
