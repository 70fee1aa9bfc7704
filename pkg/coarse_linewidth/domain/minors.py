"""
Pattern trees, minor models and their fat variants.

Models of a pattern H map every vertex and every edge of H (together, the parts of H)
to vertex sets of the host. Parts are tuples: ``("v", i)`` for vertex i and
``("e", i, j)`` with ``i < j`` for the edge ij.
"""

import logging
from collections import deque
from dataclasses import dataclass
from typing import Dict, Iterable, List, Mapping, Optional, Sequence, Set, Tuple

import networkx as nx

from coarse_linewidth.config import Settings, get_settings
from coarse_linewidth.domain.graph import (
    INFINITY,
    Graph,
    VertexSet,
    bfs_distances,
    components,
    connected_sets,
    is_connected_induced,
    set_distance,
    shortest_path,
)
from coarse_linewidth.domain.metric import LambdaPath
from coarse_linewidth.domain.verdict import Verdict
from coarse_linewidth.exceptions import (
    GraphFormatError,
    InvariantViolation,
    OracleCapExceeded,
    PreconditionError,
    SearchBudgetExhausted,
)

logger = logging.getLogger(__name__)

Part = Tuple


def vertex_part(v: int) -> Part:
    return ("v", v)


def edge_part(u: int, v: int) -> Part:
    return ("e", u, v) if u < v else ("e", v, u)


def part_name(part: Part) -> str:
    """``("v", 3)`` -> ``"v3"``, ``("e", 0, 1)`` -> ``"e0-1"``."""
    if part[0] == "v":
        return f"v{part[1]}"
    return f"e{part[1]}-{part[2]}"


def parse_part(name: str) -> Part:
    try:
        if name.startswith("v"):
            return vertex_part(int(name[1:]))
        if name.startswith("e"):
            u, v = name[1:].split("-")
            return edge_part(int(u), int(v))
    except ValueError:
        pass
    raise GraphFormatError(f"bad part name {name!r}")


def pattern_parts(pattern: Graph) -> List[Part]:
    """All parts of a pattern, vertices first, in canonical order."""
    return [vertex_part(v) for v in pattern.vertices] + [edge_part(u, v) for u, v in pattern.edges]


def _incident(x: Part, y: Part) -> bool:
    if x[0] == y[0]:
        return False
    vertex, edge = (x, y) if x[0] == "v" else (y, x)
    return vertex[1] in edge[1:]


@dataclass(frozen=True)
class PatternTree:
    """
    The tree H_ell: every vertex has degree one or three and every root-to-leaf path
    has length ell. Vertices are numbered breadth first from the root 0, the root's
    children are 1, 2, 3 and every other internal vertex has two children.
    """

    ell: int
    graph: Graph
    children: Tuple[Tuple[int, ...], ...]
    parent: Tuple[Optional[int], ...]

    @property
    def root(self) -> int:
        return 0

    def parts(self) -> List[Part]:
        return pattern_parts(self.graph)

    def subtree(self, v: int) -> List[int]:
        """Vertices below and including ``v``, breadth first."""
        order = [v]
        for x in order:
            order.extend(self.children[x])
        return order

    def branch(self, i: int) -> List[int]:
        """Vertices of the branch B_i hanging from root child ``i``."""
        if self.ell == 0 or i not in (1, 2, 3):
            raise PreconditionError(f"H_{self.ell} has no branch {i}")
        return self.subtree(i)

    def branch_parts(self, i: int) -> List[Part]:
        """Parts of B_i together with the root edge e_i."""
        members = self.branch(i)
        parts = [vertex_part(v) for v in members]
        parts.extend(edge_part(v, w) for v in members for w in self.children[v])
        parts.append(edge_part(0, i))
        return parts


def build_pattern_tree(ell: int) -> PatternTree:
    """Canonical H_ell with ``3 * 2**ell - 2`` vertices."""
    if ell < 0:
        raise PreconditionError("pattern depth must be non-negative")
    children: List[List[int]] = [[]]
    parent: List[Optional[int]] = [None]
    depth = [0]
    queue = deque([0])
    while queue:
        v = queue.popleft()
        if depth[v] == ell:
            continue
        for _ in range(3 if v == 0 else 2):
            w = len(children)
            children.append([])
            parent.append(v)
            depth.append(depth[v] + 1)
            children[v].append(w)
            queue.append(w)
    edges = [(parent[w], w) for w in range(1, len(children))]
    graph = Graph.from_edge_list(len(children), edges)  # type: ignore[arg-type]
    return PatternTree(ell, graph, tuple(tuple(c) for c in children), tuple(parent))


@dataclass(frozen=True)
class MinorModel:
    """Branch sets indexed by pattern vertex."""

    branch_sets: Tuple[VertexSet, ...]


def verify_minor_model(graph: Graph, pattern: Graph, model: MinorModel) -> Verdict:
    """Check disjointness, connectivity and edge coverage of a minor model."""
    if len(model.branch_sets) != pattern.vertex_count:
        return Verdict.failed("shape: one branch set per pattern vertex is required")
    owner: Dict[int, int] = {}
    for v, members in enumerate(model.branch_sets):
        if not members:
            return Verdict.failed(f"nonempty: branch set {v} is empty")
        for x in members:
            graph.check_vertex(x)
            if x in owner:
                return Verdict.failed(f"disjoint: branch sets {owner[x]} and {v} share vertex {x}")
            owner[x] = v
        if not is_connected_induced(graph, members):
            return Verdict.failed(f"connected: branch set {v} is not connected")
    joined = {
        (min(owner[u], owner[w]), max(owner[u], owner[w]))
        for u, w in graph.edges
        if u in owner and w in owner and owner[u] != owner[w]
    }
    for u, v in pattern.edges:
        if (u, v) not in joined:
            return Verdict.failed(f"edge: no edge joins branch sets {u} and {v}")
    return Verdict.passed()


@dataclass(frozen=True)
class MinorSearchResult:
    """
    Outcome of a budgeted minor search.

    ``status`` is ``found``, ``absent`` (the whole space was covered) or ``unknown``.
    """

    model: Optional[MinorModel]
    status: str
    explored: int


class _BudgetSpent(Exception):
    pass


def _is_tree(pattern: Graph) -> bool:
    return pattern.vertex_count >= 1 and nx.is_tree(pattern.to_networkx())


def find_minor_model(
    graph: Graph,
    pattern: Graph,
    budget: Optional[int] = None,
    settings: Optional[Settings] = None,
) -> MinorSearchResult:
    """
    Backtracking search for a minor model of a tree pattern.

    Pattern vertices are placed breadth first; each gets a connected set containing a
    free neighbour of its parent's set. Every connected set is tried, so a search that
    finishes without running out of budget proves absence.

    Raises:
        OracleCapExceeded: If the pattern exceeds the configured size.
        PreconditionError: If the pattern is not a tree.
    """
    settings = settings or get_settings()
    budget = settings.search_budget if budget is None else budget
    if pattern.vertex_count > settings.minor_pattern_cap:
        raise OracleCapExceeded(
            f"minor search is capped at {settings.minor_pattern_cap} pattern vertices"
        )
    if not _is_tree(pattern):
        raise PreconditionError("minor search supports tree patterns only")
    n = graph.vertex_count
    pattern_degree = max((len(pattern.adjacency[v]) for v in pattern.vertices), default=0)
    host_degree = max((len(graph.adjacency[v]) for v in graph.vertices), default=0)
    if pattern.vertex_count > n or pattern.edge_count > graph.edge_count:
        return MinorSearchResult(None, "absent", 0)
    if pattern_degree >= 3 and host_degree <= 2:
        return MinorSearchResult(None, "absent", 0)

    order = list(nx.bfs_tree(pattern.to_networkx(), 0))
    parent = {0: None}
    for v in order:
        for w in pattern.adjacency[v]:
            parent.setdefault(w, v)
    child_count = {v: sum(1 for w in pattern.adjacency[v] if parent.get(w) == v) for v in order}
    adjacency = graph.adjacency
    sets: Dict[int, VertexSet] = {}
    used: Set[int] = set()
    explored = 0

    def place(index: int) -> bool:
        nonlocal explored
        if index == len(order):
            return True
        h = order[index]
        max_size = n - len(used) - (len(order) - index - 1)
        if index == 0:
            anchors = [v for v in graph.vertices if v not in used]
        else:
            owner = sets[parent[h]]  # type: ignore[index]
            anchors = sorted({w for v in owner for w in adjacency[v] if w not in used})
        blocked = set(used)
        for anchor in anchors:
            for candidate in connected_sets(adjacency, anchor, blocked, max_size):
                explored += 1
                if explored > budget:
                    raise _BudgetSpent
                outside = {w for v in candidate for w in adjacency[v]} - candidate - used
                if len(outside) < child_count[h]:
                    continue
                sets[h] = candidate
                used.update(candidate)
                if place(index + 1):
                    return True
                used.difference_update(candidate)
                del sets[h]
            blocked.add(anchor)
        return False

    try:
        found = place(0)
    except _BudgetSpent:
        logger.warning(f"Minor search stopped after {explored} states without an answer")
        return MinorSearchResult(None, "unknown", explored)
    if not found:
        return MinorSearchResult(None, "absent", explored)
    model = MinorModel(tuple(sets[v] for v in pattern.vertices))
    verdict = verify_minor_model(graph, pattern, model)
    if not verdict:
        raise InvariantViolation("find_minor_model", "model verification", detail=verdict.reason or "")
    return MinorSearchResult(model, "found", explored)


@dataclass(frozen=True)
class FatMinorModel:
    """Parts of ``pattern`` mapped to vertex sets, claimed to be ``c``-fat."""

    pattern: Graph
    eta: Mapping[Part, VertexSet]
    c: int

    @property
    def image(self) -> VertexSet:
        return frozenset().union(*self.eta.values())


def verify_fat_minor(graph: Graph, pattern: Graph, model: FatMinorModel) -> Verdict:
    """Check the fat-minor conditions with ambient distances."""
    expected = pattern_parts(pattern)
    if set(model.eta) != set(expected):
        return Verdict.failed("shape: parts do not match the pattern")
    owner: Dict[int, Part] = {}
    for part in expected:
        members = model.eta[part]
        if not members:
            return Verdict.failed(f"nonempty: part {part_name(part)} is empty")
        for x in members:
            graph.check_vertex(x)
            if x in owner:
                return Verdict.failed(
                    f"disjoint: parts {part_name(owner[x])} and {part_name(part)} share vertex {x}"
                )
            owner[x] = part
        if not is_connected_induced(graph, members):
            return Verdict.failed(f"connected: part {part_name(part)} is not connected")
    adjacency = graph.adjacency
    for u, v in pattern.edges:
        edge = edge_part(u, v)
        for end in (u, v):
            if not any(owner.get(w) == edge for x in model.eta[vertex_part(end)] for w in adjacency[x]):
                return Verdict.failed(
                    f"incidence: no edge joins {part_name(vertex_part(end))} and {part_name(edge)}"
                )
    for part in expected:
        reach = bfs_distances(graph, model.eta[part], cutoff=model.c)
        for x in sorted(reach):
            other = owner.get(x)
            if other is None or other == part or _incident(part, other):
                continue
            return Verdict.failed(
                f"distance: parts {part_name(part)} and {part_name(other)} are within c={model.c}"
            )
    return Verdict.passed()


@dataclass(frozen=True)
class SuperfatModel:
    """A fat model of a pattern tree H_ell, claimed to be ``c``-superfat."""

    tree: PatternTree
    eta: Mapping[Part, VertexSet]
    c: int

    @property
    def ell(self) -> int:
        return self.tree.ell

    @property
    def fat(self) -> FatMinorModel:
        return FatMinorModel(self.tree.graph, self.eta, self.c)

    @property
    def image(self) -> VertexSet:
        return frozenset().union(*self.eta.values())

    def branch_image(self, i: int) -> VertexSet:
        return frozenset().union(*(self.eta[p] for p in self.tree.branch_parts(i)))

    def map_vertices(self, mapping: Sequence[int]) -> "SuperfatModel":
        """Same model with host vertex ``x`` renamed to ``mapping[x]``."""
        eta = {p: frozenset(mapping[x] for x in members) for p, members in self.eta.items()}
        return SuperfatModel(self.tree, eta, self.c)


def verify_superfat(graph: Graph, ell: int, model: SuperfatModel) -> Verdict:
    """
    Fat check plus more than ``3c`` between the three root branches.

    Raises:
        PreconditionError: If the model's pattern is not H_ell.
    """
    if model.tree.ell != ell:
        raise PreconditionError(f"model pattern is H_{model.tree.ell}, expected H_{ell}")
    verdict = verify_fat_minor(graph, model.tree.graph, model.fat)
    if not verdict or ell == 0:
        return verdict
    branches = [model.branch_image(i) for i in (1, 2, 3)]
    for i in range(3):
        reach = bfs_distances(graph, branches[i], cutoff=3 * model.c)
        for j in range(i + 1, 3):
            if any(x in reach for x in branches[j]):
                return Verdict.failed(
                    f"branch separation: branches {i + 1} and {j + 1} are within 3c={3 * model.c}"
                )
    return Verdict.passed()


def restrict_superfat(model: SuperfatModel, ell: int) -> SuperfatModel:
    """The top ``ell`` levels of a superfat H_t model, a superfat H_ell model."""
    if ell > model.ell:
        raise PreconditionError(f"cannot restrict H_{model.ell} to a deeper H_{ell}")
    tree = build_pattern_tree(ell)
    return SuperfatModel(tree, {p: model.eta[p] for p in tree.parts()}, model.c)


def singleton_model(v: int, c: int) -> SuperfatModel:
    """The H_0 model on one vertex."""
    return SuperfatModel(build_pattern_tree(0), {vertex_part(0): frozenset([v])}, c)


def _graft(new_tree: PatternTree, top: int, old_tree: PatternTree, first: Sequence[int]) -> Dict[int, int]:
    """Map the subtree of ``new_tree`` at ``top`` onto ``old_tree`` with ``top`` -> root."""
    mapping = {top: 0}
    pending = [(top, list(first))]
    while pending:
        new, olds = pending.pop()
        for new_child, old_child in zip(new_tree.children[new], olds):
            mapping[new_child] = old_child
            pending.append((new_child, list(old_tree.children[old_child])))
    return mapping


def claw_combine(
    graph: Graph,
    t: int,
    models: Sequence[SuperfatModel],
    hub: Iterable[int],
    legs: Sequence[LambdaPath],
) -> SuperfatModel:
    """
    Join three superfat H_t models through a hub into a superfat H_{t+1} model.

    The hub becomes the new root part. Each leg is a geodesic of length ``c+1`` from the
    hub to one model, and the hub is at distance exactly ``c+1`` from every model.

    Raises:
        PreconditionError: With the failing hypothesis named.
        InvariantViolation: If the assembled model does not verify.
    """
    if len(models) != 3 or len(legs) != 3:
        raise PreconditionError("claw_combine needs three models and three legs")
    c = models[0].c
    if c < 2:
        raise PreconditionError("claw_combine needs c >= 2")
    if any(m.c != c or m.ell != t for m in models):
        raise PreconditionError(f"all models must be c={c} models of H_{t}")
    hub_set = graph.vertex_set(hub)
    if not is_connected_induced(graph, hub_set):
        raise PreconditionError("hub does not induce a connected subgraph")
    images = [m.image for m in models]
    for i in range(3):
        for j in range(i + 1, 3):
            if set_distance(graph, images[i], images[j], cutoff=5 * c + 1) <= 5 * c:
                raise PreconditionError(f"models {i} and {j} are within 5c={5 * c}")
    for h in range(3):
        if set_distance(graph, images[h], hub_set, cutoff=c + 2) != c + 1:
            raise PreconditionError(f"hub is not at distance exactly c+1={c + 1} from model {h}")
        leg = legs[h]
        if leg.length != c + 1 or leg.start not in hub_set or leg.end not in images[h]:
            raise PreconditionError(f"leg {h} is not a length-{c + 1} path from the hub to model {h}")
        for u, v in zip(leg.vertices, leg.vertices[1:]):
            if not graph.has_edge(u, v):
                raise PreconditionError(f"leg {h} uses the non-edge ({u}, {v})")

    tree = build_pattern_tree(t + 1)
    eta: Dict[Part, VertexSet] = {vertex_part(0): hub_set}
    for h in (1, 2, 3):
        model, leg = models[h - 1], legs[h - 1]
        landing = leg.end
        if t == 0:
            eta[vertex_part(h)] = model.eta[vertex_part(0)]
            eta[edge_part(0, h)] = leg.interior
            continue
        root_part = model.eta[vertex_part(0)]
        choices = [i for i in (1, 2, 3) if landing in model.branch_image(i)] or [3, 2, 1]
        chosen = None
        for i in choices:
            others = [j for j in (1, 2, 3) if j != i]
            if all(
                set_distance(graph, leg.vertex_set, model.branch_image(j), cutoff=c + 1) > c
                for j in others
            ):
                chosen = (i, others)
                break
        if chosen is None:
            raise PreconditionError(f"leg {h - 1} comes within c of two branches of its model")
        dropped, kept = chosen
        mapping = _graft(tree, h, model.tree, kept)
        for new, old in mapping.items():
            eta[vertex_part(new)] = model.eta[vertex_part(old)]
            for child in tree.children[new]:
                eta[edge_part(new, child)] = model.eta[edge_part(old, mapping[child])]
        if landing in root_part:
            eta[edge_part(0, h)] = leg.interior
        else:
            eta[edge_part(0, h)] = (leg.vertex_set - {leg.start}) | model.branch_image(dropped)

    result = SuperfatModel(tree, eta, c)
    allowed = hub_set.union(*images, *(leg.vertex_set for leg in legs))
    if not result.image <= allowed:
        raise InvariantViolation("claw_combine", "containment")
    verdict = verify_superfat(graph, t + 1, result)
    if not verdict:
        raise InvariantViolation("claw_combine", "output superfat", detail=verdict.reason or "")
    logger.debug(f"Combined three H_{t} models into an H_{t + 1} model")
    return result


def fit_hub(
    graph: Graph,
    core: Iterable[int],
    images: Sequence[VertexSet],
    region: Iterable[int],
    c: int,
) -> Optional[Tuple[VertexSet, Tuple[LambdaPath, ...]]]:
    """
    Trim ``core`` to a hub at distance exactly ``c+1`` from each of three model images.

    Vertices within ``c`` of an image are removed. The largest remaining piece of the
    core is kept and, where it falls short of an image, extended along a shortest path
    inside ``region`` avoiding the removed ball. Legs are shortest paths of length
    ``c+1`` from the hub to each image, taken inside ``region`` when possible.

    Returns:
        The hub and its three legs, or None if no such hub exists inside ``region``.
    """
    targets = [graph.vertex_set(image) for image in images]
    everything = frozenset().union(*targets)
    area = graph.vertex_set(region) | everything
    near = frozenset(bfs_distances(graph, everything, cutoff=c))
    allowed = area - near
    rings = []
    for image in targets:
        reach = bfs_distances(graph, image, cutoff=c + 1)
        rings.append(frozenset(v for v in allowed if reach.get(v) == c + 1))
    pool = graph.vertex_set(core) & allowed
    pieces = sorted(components(graph, pool), key=lambda piece: (-len(piece), min(piece)))
    for piece in pieces:
        hub = set(piece)
        for ring in rings:
            if hub & ring:
                continue
            route = shortest_path(graph, hub, ring, within=allowed)
            if route is None:
                break
            hub.update(route)
        else:
            legs = []
            for image, ring in zip(targets, rings):
                start = min(hub & ring)
                route = shortest_path(graph, [start], image, within=area)
                if route is None or len(route) != c + 2:
                    route = shortest_path(graph, [start], image)
                legs.append(LambdaPath(tuple(route)))  # type: ignore[arg-type]
            return frozenset(hub), tuple(legs)
    logger.debug("No hub at distance c+1 from all three models")
    return None


@dataclass(frozen=True)
class SuperfatSearchResult:
    """
    Outcome of a budgeted superfat search.

    ``status`` is ``found``, ``absent`` (the host has no vertex of degree three, so not
    even a claw minor exists) or ``unknown``. ``exhausted`` is set when the budget ran
    out before every candidate hub was tried.
    """

    model: Optional[SuperfatModel]
    status: str
    explored: int
    exhausted: bool = False


class _SuperfatSearch:
    """
    Grow superfat models bottom up around candidate hubs.

    A hub is a ball around a branch vertex; the pieces left outside its c-neighbourhood
    host the three lower models, which are joined by ``fit_hub`` and ``claw_combine``.
    """

    def __init__(self, graph: Graph, c: int, budget: int) -> None:
        self.graph = graph
        self.c = c
        self.budget = budget
        self.explored = 0
        self._cache: Dict[Tuple[int, VertexSet], Optional[SuperfatModel]] = {}

    def tick(self) -> None:
        self.explored += 1
        if self.explored > self.budget:
            raise _BudgetSpent()

    def find(self, ell: int, region: VertexSet) -> Optional[SuperfatModel]:
        key = (ell, region)
        if key not in self._cache:
            self._cache[key] = self._find(ell, region)
        return self._cache[key]

    def _find(self, ell: int, region: VertexSet) -> Optional[SuperfatModel]:
        if not region:
            return None
        if ell == 0:
            return singleton_model(min(region), self.c)
        adjacency = self.graph.adjacency
        degree = {v: sum(1 for w in adjacency[v] if w in region) for v in region}
        for h in sorted((v for v in region if degree[v] >= 3), key=lambda v: (-degree[v], v)):
            dist = bfs_distances(self.graph, [h], within=region)
            top = max(dist.values())
            for radius in range(top - self.c):
                self.tick()
                model = self._around(ell, region, dist, radius)
                if model is not None:
                    return model
        return None

    def _around(
        self, ell: int, region: VertexSet, dist: Dict[int, int], radius: int
    ) -> Optional[SuperfatModel]:
        c = self.c
        core = frozenset(v for v, d in dist.items() if d <= radius)
        outside = frozenset(v for v, d in dist.items() if d > radius + c)
        pieces = sorted(components(self.graph, outside), key=lambda p: (-len(p), min(p)))
        if len(pieces) < 3:
            return None
        lower = [(piece, self.find(ell - 1, piece)) for piece in pieces]
        usable = [model for _, model in lower if model is not None]
        for i in range(len(usable)):
            for j in range(i + 1, len(usable)):
                for k in range(j + 1, len(usable)):
                    self.tick()
                    model = self._join(ell, region, core, (usable[i], usable[j], usable[k]))
                    if model is not None:
                        return model
        return None

    def _join(
        self,
        ell: int,
        region: VertexSet,
        core: VertexSet,
        models: Tuple[SuperfatModel, SuperfatModel, SuperfatModel],
    ) -> Optional[SuperfatModel]:
        images = [model.image for model in models]
        for a in range(3):
            for b in range(a + 1, 3):
                gap = set_distance(self.graph, images[a], images[b], cutoff=5 * self.c + 1)
                if gap <= 5 * self.c:
                    return None
        fitted = fit_hub(self.graph, core, images, region, self.c)
        if fitted is None:
            return None
        hub, legs = fitted
        try:
            return claw_combine(self.graph, ell - 1, models, hub, legs)
        except (PreconditionError, InvariantViolation) as error:
            logger.debug(f"Discarded H_{ell} candidate: {error}")
            return None


def find_superfat_model(
    graph: Graph,
    ell: int,
    c: int,
    budget: Optional[int] = None,
    settings: Optional[Settings] = None,
) -> SuperfatSearchResult:
    """
    Budgeted search for a c-superfat H_ell model, for ``ell <= 2``.

    The search is constructive and incomplete: a miss is reported as ``unknown`` unless
    the host has no branch vertex at all.

    Raises:
        PreconditionError: If ``ell`` is outside ``0..2`` or ``c < 2``.
    """
    if not 0 <= ell <= 2:
        raise PreconditionError("superfat search supports ell in 0..2")
    if c < 2:
        raise PreconditionError("superfat search needs c >= 2")
    settings = settings or get_settings()
    budget = settings.search_budget if budget is None else budget
    if graph.vertex_count == 0:
        return SuperfatSearchResult(None, "absent", 0)
    if ell >= 1 and max(len(graph.adjacency[v]) for v in graph.vertices) <= 2:
        return SuperfatSearchResult(None, "absent", 0)
    search = _SuperfatSearch(graph, c, budget)
    try:
        model = search.find(ell, frozenset(graph.vertices))
    except _BudgetSpent:
        logger.warning(f"Superfat search for H_{ell} ran out of budget after {budget} steps")
        return SuperfatSearchResult(None, "unknown", search.explored, exhausted=True)
    if model is None:
        return SuperfatSearchResult(None, "unknown", search.explored)
    verdict = verify_superfat(graph, ell, model)
    if not verdict:
        raise InvariantViolation(
            "find_superfat_model", "model verification", detail=verdict.reason or ""
        )
    return SuperfatSearchResult(model, "found", search.explored)


@dataclass(frozen=True)
class QuasiIsometryMap:
    """Vertex map ``phi`` claimed to be an ``(L, C)``-quasi-isometry."""

    phi: Tuple[int, ...]
    L: int
    C: int


def verify_quasi_isometry(graph: Graph, target: Graph, qi: QuasiIsometryMap) -> Verdict:
    """Check the upper bound, lower bound and density conditions over all pairs."""
    if qi.L < 1 or qi.C < 0:
        return Verdict.failed(f"shape: need L >= 1 and C >= 0, got L={qi.L}, C={qi.C}")
    if len(qi.phi) != graph.vertex_count:
        return Verdict.failed("shape: phi must map every vertex")
    for x in qi.phi:
        target.check_vertex(x)
    source_dist = dict(nx.all_pairs_shortest_path_length(graph.to_networkx()))
    target_dist = dict(nx.all_pairs_shortest_path_length(target.to_networkx()))
    phi = qi.phi
    for u in graph.vertices:
        row = source_dist[u]
        image_row = target_dist[phi[u]]
        for v in range(u + 1, graph.vertex_count):
            d = row.get(v, INFINITY)
            d_image = image_row.get(phi[v], INFINITY)
            if d_image > qi.L * d + qi.C:
                return Verdict.failed(f"upper bound: pair ({u}, {v})")
            if d > qi.L * d_image + qi.C:
                return Verdict.failed(f"lower bound: pair ({u}, {v})")
    if target.vertex_count:
        if not qi.phi:
            return Verdict.failed("density: empty image")
        reached = bfs_distances(target, set(qi.phi), cutoff=qi.C)
        far = [y for y in target.vertices if y not in reached]
        if far:
            return Verdict.failed(f"density: vertex {far[0]} is farther than C={qi.C} from the image")
    return Verdict.passed()


def _transfer_sets(
    graph: Graph, target: Graph, qi: QuasiIsometryMap, model: FatMinorModel
) -> Optional[MinorModel]:
    pattern = model.pattern
    phi = qi.phi
    merged: Dict[int, Set[int]] = {v: set(model.eta[vertex_part(v)]) for v in pattern.vertices}
    for u, v in pattern.edges:
        merged[u].update(model.eta[edge_part(u, v)])
    claimed: Set[int] = set()
    chosen: Dict[int, Set[int]] = {}
    for v in pattern.vertices:
        raw = {phi[x] for x in merged[v]}
        for a in sorted(merged[v]):
            for b in graph.adjacency[a]:
                if b > a and b in merged[v] and phi[a] != phi[b]:
                    route = shortest_path(target, [phi[a]], [phi[b]])
                    if route is not None:
                        raw.update(route)
        raw -= claimed
        if not raw:
            return None
        anchor = {phi[x] for x in model.eta[vertex_part(v)]}
        pieces = components(target, raw)
        best = max(pieces, key=lambda piece: (len(piece & anchor), -min(piece)))
        chosen[v] = set(best)
        claimed |= best
    for u, v in pattern.edges:
        if any(w in chosen[v] for x in chosen[u] for w in target.adjacency[x]):
            continue
        avoid = claimed - chosen[u] - chosen[v]
        allowed = frozenset(target.vertices) - avoid
        route = shortest_path(target, chosen[u], chosen[v], within=allowed)
        if route is None:
            return None
        extra = set(route[1:-1])
        chosen[u] |= extra
        claimed |= extra
    return MinorModel(tuple(frozenset(chosen[v]) for v in pattern.vertices))


def transfer_fat_minor(
    graph: Graph,
    target: Graph,
    qi: QuasiIsometryMap,
    model: FatMinorModel,
    settings: Optional[Settings] = None,
) -> MinorModel:
    """
    Carry a fat minor of ``graph`` across a quasi-isometry to a plain minor of ``target``.

    Each pattern vertex absorbs the parts of the edges it is the smaller end of; the
    images of these sets are connected along images of host edges and then separated
    greedily in pattern order. A construction that fails verification falls back to
    the minor search on ``target``.

    Raises:
        PreconditionError: When ``c < L(L+C)+C`` or an input does not verify.
        SearchBudgetExhausted: When the fallback search runs out of budget.
    """
    threshold = qi.L * (qi.L + qi.C) + qi.C
    if model.c < threshold:
        raise PreconditionError(f"c={model.c} is below L(L+C)+C={threshold}")
    verdict = verify_fat_minor(graph, model.pattern, model)
    if not verdict:
        raise PreconditionError(f"fat model does not verify: {verdict.reason}")
    verdict = verify_quasi_isometry(graph, target, qi)
    if not verdict:
        raise PreconditionError(f"map is not a quasi-isometry: {verdict.reason}")
    built = _transfer_sets(graph, target, qi, model)
    if built is not None and verify_minor_model(target, model.pattern, built):
        return built
    logger.warning("Transfer construction failed verification, falling back to minor search")
    result = find_minor_model(target, model.pattern, settings=settings)
    if result.model is not None:
        return result.model
    if result.status == "unknown":
        raise SearchBudgetExhausted(result.explored, "fallback minor search")
    raise InvariantViolation("transfer_fat_minor", "minor existence")


def fat_threshold(L: int, C: int) -> int:
    return L * (L + C) + C


__all__ = [
    "Part",
    "PatternTree",
    "MinorModel",
    "MinorSearchResult",
    "FatMinorModel",
    "SuperfatModel",
    "QuasiIsometryMap",
    "build_pattern_tree",
    "verify_minor_model",
    "find_minor_model",
    "SuperfatSearchResult",
    "find_superfat_model",
    "verify_fat_minor",
    "verify_superfat",
    "restrict_superfat",
    "singleton_model",
    "claw_combine",
    "fit_hub",
    "fat_threshold",
    "pattern_parts",
    "verify_quasi_isometry",
    "transfer_fat_minor",
    "vertex_part",
    "edge_part",
    "part_name",
    "parse_part",
]
