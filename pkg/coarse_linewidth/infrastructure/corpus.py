"""
Deterministic graph families used as pipeline inputs and test fixtures.
"""

import logging
import random
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Mapping, Optional, Tuple

import networkx as nx

from coarse_linewidth.domain.graph import Edge, Graph
from coarse_linewidth.domain.minors import build_pattern_tree
from coarse_linewidth.exceptions import GraphFormatError

logger = logging.getLogger(__name__)

FAMILIES = ("path", "cycle", "grid", "subdivided_star", "subdivided_tree", "random_tree")


@dataclass(frozen=True)
class CorpusSpec:
    """
    A graph family plus its size parameters.

    Examples:
        CorpusSpec("path", {"n": 5})
        CorpusSpec("subdivided_star", {"arms": 3, "arm_len": 20})
        CorpusSpec("subdivided_tree", {"ell": 2, "stretch": 9})
        CorpusSpec("random_tree", {"n": 40, "seed": 7})
    """

    family: str
    params: Mapping[str, int] = field(default_factory=dict)

    def param(self, name: str, minimum: int = 1) -> int:
        if name not in self.params:
            raise GraphFormatError(f"{self.family} needs the parameter {name!r}")
        value = int(self.params[name])
        if value < minimum:
            raise GraphFormatError(f"{self.family}: {name} must be at least {minimum}, got {value}")
        return value


def _subdivide(n: int, edges: List[Edge], times: int) -> Graph:
    """Replace every edge by a path with ``times`` new interior vertices.

    Original vertices keep their ids; interior vertices follow in edge order.
    """
    pairs: List[Tuple[int, int]] = []
    fresh = n
    for u, v in edges:
        chain = [u] + list(range(fresh, fresh + times)) + [v]
        fresh += times
        pairs.extend(zip(chain, chain[1:]))
    return Graph.from_edge_list(fresh, pairs)


def path(spec: CorpusSpec) -> Graph:
    return Graph.from_networkx(nx.path_graph(spec.param("n")))


def cycle(spec: CorpusSpec) -> Graph:
    return Graph.from_networkx(nx.cycle_graph(spec.param("n", minimum=3)))


def grid(spec: CorpusSpec) -> Graph:
    """``rows x cols`` grid; vertex ``r * cols + c`` is cell ``(r, c)``."""
    return Graph.from_networkx(nx.grid_2d_graph(spec.param("rows"), spec.param("cols")))


def subdivided_star(spec: CorpusSpec) -> Graph:
    """K_{1,arms} with every edge subdivided ``arm_len`` times; the center is vertex 0."""
    arms = spec.param("arms")
    star = nx.star_graph(arms)
    return _subdivide(arms + 1, sorted(star.edges), spec.param("arm_len", minimum=0))


def subdivided_tree(spec: CorpusSpec) -> Graph:
    """H_ell with every edge subdivided ``stretch`` times; pattern vertices keep their ids."""
    tree = build_pattern_tree(spec.param("ell", minimum=0))
    return _subdivide(
        tree.graph.vertex_count, list(tree.graph.edges), spec.param("stretch", minimum=0)
    )


def random_tree(spec: CorpusSpec) -> Graph:
    """Uniform labelled tree on ``n`` vertices drawn from ``seed`` via a Prufer sequence."""
    n = spec.param("n")
    seed = spec.param("seed", minimum=0)
    if n <= 2:
        return Graph.from_networkx(nx.path_graph(n))
    rng = random.Random(seed)
    sequence = [rng.randrange(n) for _ in range(n - 2)]
    return Graph.from_networkx(nx.from_prufer_sequence(sequence))


_GENERATORS: Dict[str, Callable[[CorpusSpec], Graph]] = {
    "path": path,
    "cycle": cycle,
    "grid": grid,
    "subdivided_star": subdivided_star,
    "subdivided_tree": subdivided_tree,
    "random_tree": random_tree,
}


def generate(spec: CorpusSpec) -> Graph:
    """
    Build the graph a corpus spec describes.

    Raises:
        GraphFormatError: On an unknown family or a missing or non-positive parameter.
    """
    generator: Optional[Callable[[CorpusSpec], Graph]] = _GENERATORS.get(spec.family)
    if generator is None:
        raise GraphFormatError(f"unknown family {spec.family!r}, expected one of {FAMILIES}")
    graph = generator(spec)
    logger.debug(f"Generated {spec.family} {dict(spec.params)}: {graph!r}")
    return graph
