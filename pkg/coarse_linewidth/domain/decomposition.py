"""
Line-decompositions and quasi-bound certificates.

A certificate for a set X is a line-decomposition of G[X] together with, for every
bag, at most ``a`` centers that reach the whole bag within ambient distance ``b``,
and the same kind of center set for the boundary of X. Builders in this module
never trust their own arithmetic: each returned certificate has been verified.
"""

import itertools
import logging
from dataclasses import dataclass, replace
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

import networkx as nx

from coarse_linewidth.config import Settings, get_settings
from coarse_linewidth.domain.graph import (
    Graph,
    VertexSet,
    bfs_distances,
    bfs_tree,
    boundary,
    components,
    pseudo_peripheral,
)
from coarse_linewidth.domain.verdict import Verdict
from coarse_linewidth.exceptions import (
    InvariantViolation,
    OracleCapExceeded,
    PreconditionError,
)

logger = logging.getLogger(__name__)

EMPTY: VertexSet = frozenset()


@dataclass(frozen=True)
class LineDecomposition:
    """Ordered sequence of bags."""

    bags: Tuple[VertexSet, ...]

    @classmethod
    def of(cls, bags: Iterable[Iterable[int]]) -> "LineDecomposition":
        return cls(tuple(frozenset(bag) for bag in bags))

    @property
    def vertices(self) -> VertexSet:
        return frozenset().union(*self.bags)

    def __len__(self) -> int:
        return len(self.bags)


def verify_line_decomposition(
    graph: Graph, subject: Iterable[int], decomposition: LineDecomposition
) -> Verdict:
    """
    Check the three axioms of a line-decomposition of ``G[subject]``.

    Raises:
        PreconditionError: If a bag holds a vertex outside ``subject``.
    """
    members = graph.vertex_set(subject)
    first: Dict[int, int] = {}
    last: Dict[int, int] = {}
    count: Dict[int, int] = {}
    for t, bag in enumerate(decomposition.bags):
        stray = bag - members
        if stray:
            raise PreconditionError(f"bag {t} holds vertices outside the subject: {sorted(stray)[:5]}")
        for v in bag:
            first.setdefault(v, t)
            last[v] = t
            count[v] = count.get(v, 0) + 1
    missing = members - first.keys()
    if missing:
        return Verdict.failed(f"covering: vertex {min(missing)} is in no bag")
    adjacency = graph.adjacency
    bags = decomposition.bags
    for u in sorted(members):
        for w in adjacency[u]:
            if w <= u or w not in members:
                continue
            lo, hi = max(first[u], first[w]), min(last[u], last[w])
            if lo > hi or not any(u in bags[t] and w in bags[t] for t in range(lo, hi + 1)):
                return Verdict.failed(f"edge coverage: edge ({u}, {w}) is in no bag")
    for v in sorted(members):
        if last[v] - first[v] + 1 != count[v]:
            return Verdict.failed(f"interval: bags holding vertex {v} are not consecutive")
    return Verdict.passed()


def decomposition_width(decomposition: LineDecomposition) -> int:
    """Largest bag size minus one."""
    if not decomposition.bags:
        raise PreconditionError("a decomposition needs at least one bag")
    return max(len(bag) for bag in decomposition.bags) - 1


def exact_pathwidth(
    graph: Graph, settings: Optional[Settings] = None
) -> Tuple[int, LineDecomposition]:
    """
    Exact path-width through the vertex-separation dynamic programme over subsets.

    Returns:
        The width and a decomposition attaining it.

    Raises:
        OracleCapExceeded: If the graph has more vertices than the configured cap.
    """
    settings = settings or get_settings()
    n = graph.vertex_count
    if n > settings.pathwidth_cap:
        raise OracleCapExceeded(
            f"exact path-width is capped at {settings.pathwidth_cap} vertices, got {n}"
        )
    if n == 0:
        return 0, LineDecomposition((EMPTY,))
    masks = [sum(1 << w for w in graph.adjacency[v]) for v in range(n)]
    full = (1 << n) - 1
    best = [0] * (1 << n)
    last = [0] * (1 << n)
    for subset in range(1, full + 1):
        outside = full ^ subset
        frontier = 0
        value = n + 1
        choice = -1
        bits = subset
        while bits:
            low = bits & -bits
            v = low.bit_length() - 1
            bits ^= low
            if masks[v] & outside:
                frontier += 1
            previous = best[subset ^ low]
            if previous < value:
                value, choice = previous, v
        best[subset] = max(value, frontier)
        last[subset] = choice
    order: List[int] = []
    subset = full
    while subset:
        v = last[subset]
        order.append(v)
        subset ^= 1 << v
    order.reverse()
    bags = []
    placed = 0
    for v in order:
        outside = full ^ placed
        frontier = {u for u in range(n) if placed >> u & 1 and masks[u] & outside}
        bags.append(frozenset(frontier | {v}))
        placed |= 1 << v
    decomposition = LineDecomposition(tuple(bags))
    width = best[full]
    if decomposition_width(decomposition) != width:
        raise InvariantViolation("exact_pathwidth", "width of the emitted decomposition")
    logger.debug(f"Exact path-width of {graph} is {width}")
    return width, decomposition


@dataclass(frozen=True)
class QuasiCenter:
    """At most ``k`` centers reaching a set within distance ``r``."""

    centers: VertexSet
    k: int
    r: int
    greedy: bool = False


def verify_quasi_size(graph: Graph, subject: Iterable[int], qc: QuasiCenter) -> Verdict:
    """Check that ``subject`` has quasi-size at most ``(qc.k, qc.r)`` via ``qc.centers``."""
    members = graph.vertex_set(subject)
    if len(qc.centers) > qc.k:
        return Verdict.failed(f"quasi-size: {len(qc.centers)} centers exceed k={qc.k}")
    if not members:
        return Verdict.passed()
    if not qc.centers:
        return Verdict.failed("quasi-size: no centers for a nonempty set")
    reached = bfs_distances(graph, qc.centers, cutoff=qc.r)
    far = [v for v in members if v not in reached]
    if far:
        return Verdict.failed(f"quasi-size: vertex {min(far)} is farther than {qc.r} from the centers")
    return Verdict.passed()


def greedy_cover(
    graph: Graph, subject: Iterable[int], r: int, hint: Iterable[int] = ()
) -> VertexSet:
    """
    Centers reaching ``subject`` within ``r``, chosen greedily.

    Uncovered vertices are taken deepest first in a BFS tree rooted at a far vertex,
    and each gets the ancestor ``r`` levels up as its center. Optimal on trees.
    """
    centers = set(hint)
    uncovered = set(subject)
    if centers:
        uncovered.difference_update(bfs_distances(graph, centers, cutoff=r))
    while uncovered:
        start = min(uncovered)
        spread = bfs_distances(graph, [start])
        root = max((v for v in uncovered if v in spread), key=lambda v: (spread[v], -v))
        depth, parent = bfs_tree(graph, root)
        for v in sorted((v for v in uncovered if v in depth), key=lambda v: (-depth[v], v)):
            if v not in uncovered:
                continue
            center = v
            for _ in range(min(r, depth[v])):
                center = parent[center]  # type: ignore[assignment]
            centers.add(center)
            uncovered.difference_update(bfs_distances(graph, [center], cutoff=r))
    return frozenset(centers)


def find_quasi_center(
    graph: Graph,
    subject: Iterable[int],
    k: int,
    r: int,
    settings: Optional[Settings] = None,
) -> Optional[QuasiCenter]:
    """
    Search for at most ``k`` centers reaching ``subject`` within ``r``.

    Small candidate pools are searched exhaustively; larger ones greedily, and a greedy
    answer is flagged. Every returned center set verifies.
    """
    settings = settings or get_settings()
    members = graph.vertex_set(subject)
    if not members:
        return QuasiCenter(EMPTY, k, r)
    if k <= 0:
        return None
    pool = sorted(bfs_distances(graph, members, cutoff=r))
    exact = len(pool) <= settings.exact_center_pool or (
        k <= settings.exact_center_small_k and len(pool) <= settings.exact_center_small_k_pool
    )
    if exact:
        index = {v: i for i, v in enumerate(sorted(members))}
        target = (1 << len(index)) - 1
        reach = []
        for c in pool:
            mask = 0
            for v in bfs_distances(graph, [c], cutoff=r):
                if v in index:
                    mask |= 1 << index[v]
            reach.append(mask)
        for size in range(1, min(k, len(pool)) + 1):
            for combo in itertools.combinations(range(len(pool)), size):
                mask = 0
                for i in combo:
                    mask |= reach[i]
                if mask == target:
                    return QuasiCenter(frozenset(pool[i] for i in combo), k, r)
        return None
    centers = greedy_cover(graph, members, r)
    if len(centers) > k:
        logger.debug(f"Greedy cover used {len(centers)} centers, more than k={k}")
        return None
    return QuasiCenter(centers, k, r, greedy=True)


@dataclass(frozen=True)
class QuasiBoundCertificate:
    """
    Checkable form of "``subject`` has quasi-bound at most ``(a, b)``".

    ``boundary_centers`` is None when only the quasi-line-width part is certified.
    """

    subject: VertexSet
    decomposition: LineDecomposition
    bag_centers: Tuple[VertexSet, ...]
    a: int
    b: int
    boundary_centers: Optional[VertexSet] = None

    @property
    def bags(self) -> Tuple[VertexSet, ...]:
        return self.decomposition.bags

    @property
    def center_count(self) -> int:
        counts = [len(c) for c in self.bag_centers]
        if self.boundary_centers is not None:
            counts.append(len(self.boundary_centers))
        return max(counts, default=0)

    def relabel(self, a: int, b: int) -> "QuasiBoundCertificate":
        """Same certificate claimed at different parameters."""
        return replace(self, a=a, b=b)

    def fits(self, a: int, b: int) -> bool:
        return self.center_count <= a and self.b <= b

    def map_vertices(self, mapping: Sequence[int]) -> "QuasiBoundCertificate":
        """Same certificate with vertex ``x`` renamed to ``mapping[x]``."""

        def rename(members: VertexSet) -> VertexSet:
            return frozenset(mapping[x] for x in members)

        return QuasiBoundCertificate(
            rename(self.subject),
            LineDecomposition(tuple(rename(bag) for bag in self.bags)),
            tuple(rename(c) for c in self.bag_centers),
            self.a,
            self.b,
            None if self.boundary_centers is None else rename(self.boundary_centers),
        )


def verify_quasi_bound(
    graph: Graph,
    certificate: QuasiBoundCertificate,
    a: Optional[int] = None,
    b: Optional[int] = None,
    require_boundary: bool = True,
) -> Verdict:
    """
    Verify a certificate bag by bag, at its own parameters unless ``a``/``b`` are given.
    """
    a = certificate.a if a is None else a
    b = certificate.b if b is None else b
    try:
        verdict = verify_line_decomposition(graph, certificate.subject, certificate.decomposition)
    except PreconditionError as error:
        return Verdict.failed(f"line-decomposition: {error.reason}")
    if not verdict:
        return verdict.prefixed("line-decomposition")
    if len(certificate.bag_centers) != len(certificate.bags):
        return Verdict.failed("quasi-size: bag and center counts differ")
    for t, (bag, centers) in enumerate(zip(certificate.bags, certificate.bag_centers)):
        verdict = verify_quasi_size(graph, bag, QuasiCenter(centers, a, b))
        if not verdict:
            return verdict.prefixed(f"bag {t}")
    if require_boundary:
        if certificate.boundary_centers is None:
            return Verdict.failed("boundary quasi-size: no boundary centers")
        verdict = verify_quasi_size(
            graph, boundary(graph, certificate.subject), QuasiCenter(certificate.boundary_centers, a, b)
        )
        if not verdict:
            return verdict.prefixed("boundary")
    return Verdict.passed()


def _centers_for(
    graph: Graph,
    subject: VertexSet,
    a: Optional[int],
    b: int,
    hint: Iterable[int] = (),
) -> Optional[VertexSet]:
    hint = frozenset(hint)
    if not subject:
        return EMPTY
    cover = greedy_cover(graph, subject, b, hint)
    if a is None or len(cover) <= a:
        return cover
    found = find_quasi_center(graph, subject, a, b)
    return found.centers if found is not None else None


def _finish(
    graph: Graph,
    subject: VertexSet,
    bags: Sequence[VertexSet],
    centers: Sequence[VertexSet],
    a: Optional[int],
    b: int,
    boundary_hint: Iterable[int] = (),
    require_boundary: bool = True,
) -> Optional[QuasiBoundCertificate]:
    boundary_centers = _centers_for(graph, boundary(graph, subject), a, b, boundary_hint)
    if boundary_centers is None and require_boundary:
        return None
    decomposition = LineDecomposition(tuple(bags))
    count = max([len(c) for c in centers] + [len(boundary_centers or EMPTY)], default=0)
    certificate = QuasiBoundCertificate(
        subject, decomposition, tuple(centers), a if a is not None else max(count, 1), b, boundary_centers
    )
    verdict = verify_quasi_bound(graph, certificate, require_boundary=require_boundary)
    if not verdict:
        logger.debug(f"Discarding assembled certificate: {verdict.reason}")
        return None
    return certificate


def certify_decomposition(
    graph: Graph,
    subject: Iterable[int],
    decomposition: LineDecomposition,
    a: Optional[int],
    b: int,
    hints: Optional[Sequence[Iterable[int]]] = None,
) -> Optional[QuasiBoundCertificate]:
    """Attach centers at radius ``b`` (at most ``a`` per bag when given) to a decomposition."""
    members = graph.vertex_set(subject)
    centers = []
    for t, bag in enumerate(decomposition.bags):
        found = _centers_for(graph, bag, a, b, hints[t] if hints is not None else ())
        if found is None:
            return None
        centers.append(found)
    return _finish(graph, members, decomposition.bags, centers, a, b)


def point_certificate(graph: Graph, subject: Iterable[int]) -> QuasiBoundCertificate:
    """One bag holding ``subject``, with every vertex its own center."""
    members = graph.vertex_set(subject)
    return QuasiBoundCertificate(
        members,
        LineDecomposition((members,)),
        (members,),
        max(len(members), 1),
        0,
        boundary(graph, members),
    )


def layered_certificate(
    graph: Graph, subject: Iterable[int], a: Optional[int], b: int
) -> Optional[QuasiBoundCertificate]:
    """
    Certificate from BFS layers of each component of ``G[subject]``.

    Bags are unions of two consecutive layers, components are concatenated.
    """
    members = graph.vertex_set(subject)
    bags: List[VertexSet] = []
    for component in components(graph, members):
        root = pseudo_peripheral(graph, component)
        depth = bfs_distances(graph, [root], within=component)
        layers: List[set] = [set() for _ in range(max(depth.values()) + 1)]
        for v, d in depth.items():
            layers[d].add(v)
        if len(layers) == 1:
            bags.append(frozenset(layers[0]))
        for i in range(len(layers) - 1):
            bags.append(frozenset(layers[i] | layers[i + 1]))
    if not bags:
        bags.append(EMPTY)
    return certify_decomposition(graph, members, LineDecomposition(tuple(bags)), a, b)


def augmented_certificate(
    graph: Graph,
    subject: Iterable[int],
    parts: Sequence[QuasiBoundCertificate],
    extra: Iterable[int],
    a: Optional[int],
    b: int,
) -> Optional[QuasiBoundCertificate]:
    """
    Concatenate the decompositions of ``parts`` and add ``extra`` to every bag.

    Valid when ``subject`` is the disjoint union of the parts and ``extra`` and no edge
    joins two different parts; the result is verified either way.
    """
    members = graph.vertex_set(subject)
    extra_set = graph.vertex_set(extra)
    covered = frozenset().union(*(p.subject for p in parts)) if parts else EMPTY
    if covered | extra_set != members:
        raise PreconditionError("parts and extra set do not make up the subject")
    extra_centers = greedy_cover(graph, extra_set, b) if extra_set else EMPTY
    bags: List[VertexSet] = []
    centers: List[VertexSet] = []
    for part in parts:
        if part.b > b:
            return None
        for bag, own in zip(part.bags, part.bag_centers):
            bags.append(bag | extra_set)
            centers.append(own | extra_centers)
    if not bags:
        bags.append(extra_set)
        centers.append(extra_centers)
    if a is not None and any(len(c) > a for c in centers):
        for t, bag in enumerate(bags):
            if len(centers[t]) > a:
                found = find_quasi_center(graph, bag, a, b)
                if found is None:
                    return None
                centers[t] = found.centers
    hint = frozenset().union(*(p.boundary_centers or EMPTY for p in parts)) if parts else EMPTY
    return _finish(graph, members, bags, centers, a, b, hint | extra_centers)


def compose_line_decompositions(
    graph: Graph,
    pieces: Sequence[QuasiBoundCertificate],
    outer: LineDecomposition,
    k: int,
) -> QuasiBoundCertificate:
    """
    Splice piece decompositions into an outer decomposition over their boundaries.

    Each outer bag must be the union of at most ``k`` piece boundaries. Every piece is
    inserted right after the first outer bag meeting it, each of its bags joined with
    that outer bag; pieces with empty boundary are appended at the end. The result has
    parameters ``((k+1)a, b)`` for the largest piece parameters ``(a, b)``.

    Raises:
        PreconditionError: On overlapping pieces, an invalid outer decomposition, or an
            outer bag that is not a union of at most ``k`` boundaries.
        InvariantViolation: If the spliced certificate does not verify.
    """
    if not pieces:
        raise PreconditionError("compose needs at least one piece")
    seen: set = set()
    for i, piece in enumerate(pieces):
        if seen & piece.subject:
            raise PreconditionError(f"piece {i} overlaps an earlier piece")
        seen |= piece.subject
    union = frozenset(seen)
    rims = [boundary(graph, piece.subject) for piece in pieces]
    rim_union = frozenset().union(*rims)
    try:
        verdict = verify_line_decomposition(graph, rim_union, outer)
    except PreconditionError as error:
        raise PreconditionError(f"outer decomposition: {error.reason}") from None
    if not verdict:
        raise PreconditionError(f"outer decomposition: {verdict.reason}")
    owner = {v: i for i, rim in enumerate(rims) for v in rim}
    outer_centers: List[VertexSet] = []
    first: Dict[int, int] = {}
    for t, bag in enumerate(outer.bags):
        members = sorted({owner[v] for v in bag})
        if len(members) > k or frozenset().union(*(rims[i] for i in members)) != bag:
            raise PreconditionError(f"outer bag {t} is not a union of at most {k} piece boundaries")
        centers: set = set()
        for i in members:
            first.setdefault(i, t)
            if pieces[i].boundary_centers is None:
                raise PreconditionError(f"piece {i} has no boundary centers")
            centers |= pieces[i].boundary_centers
        outer_centers.append(frozenset(centers))
    a = max(piece.a for piece in pieces)
    b = max(piece.b for piece in pieces)
    bags: List[VertexSet] = []
    bag_centers: List[VertexSet] = []
    for t, bag in enumerate(outer.bags):
        bags.append(bag)
        bag_centers.append(outer_centers[t])
        for i in sorted(i for i, s in first.items() if s == t):
            for inner, own in zip(pieces[i].bags, pieces[i].bag_centers):
                bags.append(bag | inner)
                bag_centers.append(outer_centers[t] | own)
    for i, piece in enumerate(pieces):
        if not rims[i]:
            bags.extend(piece.bags)
            bag_centers.extend(piece.bag_centers)
    a_out = (k + 1) * a
    rim_hint = frozenset().union(*(piece.boundary_centers or EMPTY for piece in pieces))
    outer_rim = boundary(graph, union)
    boundary_centers: Optional[VertexSet] = _prune_centers(graph, outer_rim, rim_hint, b)
    if boundary_centers is None or len(boundary_centers) > a_out:
        boundary_centers = None
    certificate = QuasiBoundCertificate(
        union, LineDecomposition(tuple(bags)), tuple(bag_centers), a_out, b, boundary_centers
    )
    verdict = verify_quasi_bound(graph, certificate, require_boundary=boundary_centers is not None)
    if not verdict:
        raise InvariantViolation("compose_line_decompositions", "splice", detail=verdict.reason or "")
    logger.debug(f"Composed {len(pieces)} pieces into {len(bags)} bags at ({a_out}, {b})")
    return certificate


def _prune_centers(
    graph: Graph, subject: VertexSet, candidates: VertexSet, r: int
) -> Optional[VertexSet]:
    """Keep the candidates needed to reach ``subject`` within ``r``, in canonical order."""
    if not subject:
        return EMPTY
    uncovered = set(subject)
    chosen = []
    for c in sorted(candidates):
        reach = bfs_distances(graph, [c], cutoff=r)
        if any(v in reach for v in uncovered):
            chosen.append(c)
            uncovered.difference_update(reach)
        if not uncovered:
            return frozenset(chosen)
    return None


def outer_by_adjacency(
    graph: Graph, subjects: Sequence[VertexSet]
) -> Tuple[LineDecomposition, int]:
    """
    Outer decomposition over piece boundaries from BFS layers of the piece-touching graph.

    Returns:
        The decomposition and the largest number of pieces in one bag.
    """
    rims = [boundary(graph, s) for s in subjects]
    owner = {v: i for i, rim in enumerate(rims) for v in rim}
    touching = nx.Graph()
    touching.add_nodes_from(i for i, rim in enumerate(rims) if rim)
    for u, v in graph.edges:
        if u in owner and v in owner and owner[u] != owner[v]:
            touching.add_edge(owner[u], owner[v])
    bags: List[VertexSet] = []
    k = 1
    for group in sorted(nx.connected_components(touching), key=min):
        start = min(group)
        for _ in range(2):
            lengths = nx.single_source_shortest_path_length(touching, start)
            start = max(lengths, key=lambda i: (lengths[i], -i))
        lengths = nx.single_source_shortest_path_length(touching, start)
        layers: List[List[int]] = [[] for _ in range(max(lengths.values()) + 1)]
        for i, d in lengths.items():
            layers[d].append(i)
        windows = [layers] if len(layers) == 1 else [layers[i : i + 2] for i in range(len(layers) - 1)]
        for window in windows:
            members = [i for layer in window for i in layer]
            k = max(k, len(members))
            bags.append(frozenset().union(*(rims[i] for i in members)))
    if not bags:
        bags.append(EMPTY)
    return LineDecomposition(tuple(bags)), k


def certify_cell_union(
    graph: Graph, pieces: Sequence[QuasiBoundCertificate], a: int, b: int
) -> Optional[QuasiBoundCertificate]:
    """
    Certificate for the union of disjoint pieces at ``(a, b)``.

    Composes the pieces along their touching structure, re-centers the composed bags if
    the composition arithmetic overshoots ``a``, and falls back to a layered
    certificate of the union.
    """
    subjects = [p.subject for p in pieces]
    union = frozenset().union(*subjects)
    try:
        outer, k = outer_by_adjacency(graph, subjects)
        composed = compose_line_decompositions(graph, pieces, outer, k)
    except PreconditionError as error:
        logger.debug(f"Composition unavailable: {error.reason}")
        composed = None
    if composed is not None:
        if composed.boundary_centers is not None and composed.fits(a, b):
            return composed.relabel(a, b)
        recentered = certify_decomposition(
            graph, union, composed.decomposition, a, b, hints=composed.bag_centers
        )
        if recentered is not None:
            return recentered
    logger.debug("Falling back to a layered certificate for a cell union")
    return layered_certificate(graph, union, a, b)


def margin_certificate(
    graph: Graph,
    building: VertexSet,
    cell: VertexSet,
    own: Optional[QuasiBoundCertificate],
    b: int,
) -> Optional[QuasiBoundCertificate]:
    """Certificate for a Voronoi cell: the building's certificate plus the cell margin in every bag."""
    if own is not None and own.subject == building:
        piece = augmented_certificate(graph, cell, [own], cell - building, None, b)
        if piece is not None:
            return piece
    return layered_certificate(graph, cell, None, b)


def concatenate_certificates(
    graph: Graph, certificates: Sequence[QuasiBoundCertificate]
) -> QuasiBoundCertificate:
    """Join certificates of sets with no edges between them (e.g. components)."""
    subject = frozenset().union(*(c.subject for c in certificates))
    bags: List[VertexSet] = []
    centers: List[VertexSet] = []
    for certificate in certificates:
        bags.extend(certificate.bags)
        centers.extend(certificate.bag_centers)
    rims = [c.boundary_centers for c in certificates]
    boundary_centers: Optional[VertexSet] = None
    if all(r is not None for r in rims):
        boundary_centers = frozenset().union(*rims)  # type: ignore[arg-type]
    return QuasiBoundCertificate(
        subject,
        LineDecomposition(tuple(bags) or (EMPTY,)),
        tuple(centers) or (EMPTY,),
        max((c.a for c in certificates), default=1),
        max((c.b for c in certificates), default=0),
        boundary_centers,
    )
