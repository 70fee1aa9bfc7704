"""
Tests for pattern trees, minor models, fat and superfat models and their searches.
"""

import networkx as nx
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from coarse_linewidth.config import Settings
from coarse_linewidth.domain.decomposition import exact_pathwidth
from coarse_linewidth.domain.graph import Graph, ball
from coarse_linewidth.domain.metric import LambdaPath
from coarse_linewidth.domain.minors import (
    FatMinorModel,
    MinorModel,
    QuasiIsometryMap,
    SuperfatModel,
    _transfer_sets,
    build_pattern_tree,
    claw_combine,
    edge_part,
    fat_threshold,
    find_minor_model,
    find_superfat_model,
    fit_hub,
    parse_part,
    part_name,
    restrict_superfat,
    singleton_model,
    transfer_fat_minor,
    verify_fat_minor,
    verify_minor_model,
    verify_quasi_isometry,
    verify_superfat,
    vertex_part,
)
from coarse_linewidth.exceptions import (
    GraphFormatError,
    OracleCapExceeded,
    PreconditionError,
)
from coarse_linewidth.infrastructure.corpus import CorpusSpec, generate
from tests.conftest import arm, cycle_graph, path_graph, small_graphs, star_graph


def hand_built_claw(c: int = 2) -> SuperfatModel:
    """H_1 model in star_graph(3, 20): hub to depth 6, edge parts at 7-8, the rest below."""
    tree = build_pattern_tree(1)
    eta = {vertex_part(0): frozenset(v for h in (1, 2, 3) for v in arm(h, 20)[:7])}
    for h in (1, 2, 3):
        line = arm(h, 20)
        eta[edge_part(0, h)] = frozenset(line[7:9])
        eta[vertex_part(h)] = frozenset(line[9:])
    return SuperfatModel(tree, eta, c)


@pytest.mark.parametrize("ell, size", [(0, 1), (1, 4), (2, 10), (3, 22)])
def test_pattern_tree_should_have_the_canonical_shape(ell, size):
    """Test vertex counts and degrees of H_ell."""
    tree = build_pattern_tree(ell)
    assert tree.graph.vertex_count == size == 3 * 2**ell - 2
    degrees = {len(tree.graph.adjacency[v]) for v in tree.graph.vertices}
    assert degrees <= {0, 1, 3}
    if ell >= 1:
        assert tree.children[0] == (1, 2, 3)


def test_part_names_should_parse_back():
    """Test the textual part names used in witness documents."""
    assert part_name(vertex_part(3)) == "v3"
    assert part_name(edge_part(1, 0)) == "e0-1"
    assert parse_part("e0-1") == edge_part(0, 1)
    with pytest.raises(GraphFormatError):
        parse_part("x1")


def test_find_minor_model_should_find_a_claw_in_a_subdivided_star():
    """Test the minor search on a positive instance."""
    graph = star_graph(3, 2)
    claw = build_pattern_tree(1).graph
    result = find_minor_model(graph, claw)
    assert result.status == "found"
    assert verify_minor_model(graph, claw, result.model)


def test_find_minor_model_should_prove_absence():
    """Test that a path has no claw minor and a 3x3 grid has no H_2 minor."""
    claw = build_pattern_tree(1).graph
    assert find_minor_model(path_graph(8), claw).status == "absent"
    grid = generate(CorpusSpec("grid", {"rows": 3, "cols": 3}))
    assert find_minor_model(grid, build_pattern_tree(2).graph).status == "absent"


def test_find_minor_model_should_refuse_unsupported_patterns():
    """Test the tree requirement and the pattern cap."""
    with pytest.raises(PreconditionError):
        find_minor_model(path_graph(5), cycle_graph(3))
    with pytest.raises(OracleCapExceeded):
        find_minor_model(
            path_graph(5), build_pattern_tree(2).graph, settings=Settings(minor_pattern_cap=4)
        )


@settings(max_examples=40, deadline=None)
@given(small_graphs(min_vertices=1, max_vertices=7))
def test_find_minor_model_should_find_claws_exactly_at_branch_vertices(graph):
    """Test that a claw minor exists iff some vertex has degree three or more."""
    claw = build_pattern_tree(1).graph
    result = find_minor_model(graph, claw)
    expected = any(len(graph.adjacency[v]) >= 3 for v in graph.vertices)
    assert result.status == ("found" if expected else "absent")
    if expected:
        assert verify_minor_model(graph, claw, result.model)


def test_verify_minor_model_should_report_overlaps():
    """Test that branch sets must be disjoint."""
    graph = star_graph(3, 0)
    claw = build_pattern_tree(1).graph
    sets = (frozenset({0}), frozenset({1}), frozenset({2}), frozenset({3}))
    assert verify_minor_model(graph, claw, MinorModel(sets))
    overlapping = (frozenset({0, 1}), frozenset({1}), frozenset({2}), frozenset({3}))
    verdict = verify_minor_model(graph, claw, MinorModel(overlapping))
    assert verdict.reason.startswith("disjoint")


def test_verify_superfat_should_accept_a_hand_built_claw():
    """Test a superfat H_1 model with generous spacing."""
    graph = star_graph(3, 20)
    model = hand_built_claw()
    assert verify_fat_minor(graph, model.tree.graph, model.fat)
    assert verify_superfat(graph, 1, model)


def test_verify_superfat_should_fail_when_c_is_inflated():
    """Test that claiming a larger c breaks the distance condition."""
    graph = star_graph(3, 20)
    verdict = verify_superfat(graph, 1, hand_built_claw(c=3))
    assert not verdict
    assert verdict.reason.startswith("distance")


def test_verify_superfat_should_check_branch_separation():
    """Test that branches closer than 3c fail even when the model is fat."""
    graph = star_graph(3, 20)
    model = hand_built_claw()
    tight = dict(model.eta)
    for h in (1, 2, 3):
        line = arm(h, 20)
        tight[vertex_part(0)] = tight[vertex_part(0)] - frozenset(line[2:7])
        tight[edge_part(0, h)] = frozenset(line[2:4])
        tight[vertex_part(h)] = frozenset(line[4:])
    verdict = verify_superfat(graph, 1, SuperfatModel(model.tree, tight, 2))
    assert not verdict
    assert verdict.reason.startswith("branch separation")


def test_restrict_superfat_should_keep_the_top_levels():
    """Test restriction to H_0 and its refusal to deepen."""
    graph = star_graph(3, 20)
    model = hand_built_claw()
    root = restrict_superfat(model, 0)
    assert root.eta == {vertex_part(0): model.eta[vertex_part(0)]}
    assert verify_superfat(graph, 0, root)
    with pytest.raises(PreconditionError):
        restrict_superfat(model, 2)


def test_claw_combine_should_join_three_singletons_into_a_claw():
    """Test combining three leaf models through a hub at distance c+1."""
    graph = star_graph(3, 7)
    hub = ball(graph, [0], 5)
    models = [singleton_model(h, 2) for h in (1, 2, 3)]
    legs = [LambdaPath.of(graph, arm(h, 7)[5:]) for h in (1, 2, 3)]
    combined = claw_combine(graph, 0, models, hub, legs)
    assert combined.ell == 1
    assert combined.eta[vertex_part(0)] == hub
    assert combined.eta[edge_part(0, 2)] == frozenset(arm(2, 7)[6:8])
    assert verify_superfat(graph, 1, combined)


def test_claw_combine_should_name_the_failing_hypothesis():
    """Test that a hub at the wrong distance is refused."""
    graph = star_graph(3, 7)
    models = [singleton_model(h, 2) for h in (1, 2, 3)]
    legs = [LambdaPath.of(graph, arm(h, 7)[5:]) for h in (1, 2, 3)]
    with pytest.raises(PreconditionError, match="distance exactly"):
        claw_combine(graph, 0, models, ball(graph, [0], 4), legs)


def test_fit_hub_should_trim_the_core_to_distance_c_plus_one():
    """Test that the hub keeps only vertices farther than c from every model."""
    graph = star_graph(3, 7)
    images = [frozenset({h}) for h in (1, 2, 3)]
    fitted = fit_hub(graph, ball(graph, [0], 6), images, graph.vertices, 2)
    assert fitted is not None
    hub, legs = fitted
    assert hub == ball(graph, [0], 5)
    assert [leg.vertices for leg in legs] == [tuple(arm(h, 7)[5:]) for h in (1, 2, 3)]


def test_find_superfat_model_should_find_a_claw_in_a_long_star():
    """Test the constructive search on a subdivided star."""
    graph = star_graph(3, 20)
    result = find_superfat_model(graph, 1, 2)
    assert result.status == "found"
    assert verify_superfat(graph, 1, result.model)
    assert {result.model.eta[vertex_part(h)] for h in (1, 2, 3)} == {
        frozenset({1}),
        frozenset({2}),
        frozenset({3}),
    }


def test_find_superfat_model_should_report_absence_and_exhaustion():
    """Test the absent and unknown outcomes."""
    assert find_superfat_model(path_graph(30), 1, 2).status == "absent"
    spent = find_superfat_model(star_graph(3, 20), 1, 2, budget=0)
    assert spent.status == "unknown"
    assert spent.exhausted
    assert find_superfat_model(star_graph(3, 2), 1, 2).status == "unknown"


def test_find_superfat_model_should_validate_parameters():
    """Test the supported depth range and fatness."""
    with pytest.raises(PreconditionError):
        find_superfat_model(path_graph(3), 3, 2)
    with pytest.raises(PreconditionError):
        find_superfat_model(path_graph(3), 1, 1)


def test_verify_quasi_isometry_should_accept_a_contraction_onto_a_claw():
    """Test a (2, 1)-quasi-isometry from a subdivided star onto K_{1,3}."""
    graph = star_graph(3, 1)
    claw = build_pattern_tree(1).graph
    phi = (0, 1, 2, 3, 1, 2, 3)
    assert verify_quasi_isometry(graph, claw, QuasiIsometryMap(phi, 2, 1))
    verdict = verify_quasi_isometry(graph, claw, QuasiIsometryMap(phi, 1, 0))
    assert not verdict
    assert verdict.reason.startswith("lower bound")
    verdict = verify_quasi_isometry(Graph.from_edge_list(1, []), claw, QuasiIsometryMap((0,), 1, 0))
    assert verdict.reason.startswith("density")



@pytest.mark.parametrize("L, C", [(0, 0), (0, 3), (1, -1)])
def test_verify_quasi_isometry_should_reject_degenerate_constants(L, C):
    """Test that L < 1 or C < 0 fails up front, even across disconnected pairs."""
    split = Graph.from_edge_list(2, [])
    single = Graph.from_edge_list(1, [])
    verdict = verify_quasi_isometry(split, single, QuasiIsometryMap((0, 0), L, C))
    assert not verdict
    assert verdict.reason.startswith("shape: need L >= 1")


def test_transfer_fat_minor_should_carry_a_model_across_the_identity():
    """Test the transfer along an isometry and its threshold check."""
    graph = star_graph(3, 20)
    fat = hand_built_claw().fat
    identity = tuple(graph.vertices)
    assert fat_threshold(1, 0) == 1
    model = transfer_fat_minor(graph, graph, QuasiIsometryMap(identity, 1, 0), fat)
    assert verify_minor_model(graph, fat.pattern, model)
    assert fat_threshold(2, 1) == 7
    with pytest.raises(PreconditionError, match="below"):
        transfer_fat_minor(graph, graph, QuasiIsometryMap(identity, 2, 1), fat)


def test_verify_fat_minor_should_report_missing_parts():
    """Test the shape check of fat models."""
    graph = star_graph(3, 20)
    fat = hand_built_claw().fat
    eta = dict(fat.eta)
    del eta[edge_part(0, 1)]
    verdict = verify_fat_minor(graph, fat.pattern, FatMinorModel(fat.pattern, eta, 2))
    assert verdict.reason.startswith("shape")


def lower_bound_fixture(ell: int, stretch: int, radius: int, c: int):
    """H_ell subdivided ``stretch`` times with a c-fat model: balls at branch vertices."""
    tree = build_pattern_tree(ell)
    pattern = tree.graph
    graph = generate(CorpusSpec("subdivided_tree", {"ell": ell, "stretch": stretch}))
    eta = {vertex_part(v): {v} for v in pattern.vertices}
    fresh = pattern.vertex_count
    for u, v in pattern.edges:
        chain = list(range(fresh, fresh + stretch))
        fresh += stretch
        eta[vertex_part(u)].update(chain[:radius])
        eta[vertex_part(v)].update(chain[stretch - radius :])
        eta[edge_part(u, v)] = chain[radius : stretch - radius]
    return graph, FatMinorModel(pattern, {p: frozenset(s) for p, s in eta.items()}, c)


def test_claimed_quasi_isometries_into_thin_graphs_should_be_rejected():
    """Test that a 6-fat H_2 host maps onto no path-width-1 fixture at (1, 2)."""
    graph, fat = lower_bound_fixture(2, 20, 3, 6)
    assert verify_fat_minor(graph, fat.pattern, fat)
    assert fat.c > fat_threshold(1, 2)
    width, _ = exact_pathwidth(fat.pattern)
    assert width == 2
    fixture = path_graph(43)
    assert exact_pathwidth(path_graph(12))[0] == 1 < width
    depth = graph.to_networkx()
    levels = nx.single_source_shortest_path_length(depth, 0)
    for phi in (tuple(levels[v] for v in graph.vertices), (0,) * graph.vertex_count):
        qi = QuasiIsometryMap(phi, 1, 2)
        assert not verify_quasi_isometry(graph, fixture, qi)
        with pytest.raises(PreconditionError, match="not a quasi-isometry"):
            transfer_fat_minor(graph, fixture, qi, fat)


def test_transfer_fat_minor_should_carry_a_fat_h2_along_the_identity():
    """Test the positive direction of the transfer on the same host."""
    graph, fat = lower_bound_fixture(2, 20, 3, 6)
    identity = QuasiIsometryMap(tuple(graph.vertices), 1, 2)
    model = transfer_fat_minor(graph, graph, identity, fat)
    assert verify_minor_model(graph, fat.pattern, model)


def halving_map(ell: int, half: int) -> tuple:
    """Contract every subdivided edge of length 2*half+1 onto one of length ``half``."""
    pattern = build_pattern_tree(ell).graph
    n = pattern.vertex_count
    phi = list(range(n))
    for index, (u, v) in enumerate(pattern.edges):
        for i in range(2 * half):
            q = (i + 1) // 2
            if q == 0:
                phi.append(u)
            elif q == half:
                phi.append(v)
            else:
                phi.append(n + index * (half - 1) + q - 1)
    return tuple(phi)


@settings(max_examples=8, deadline=None)
@given(st.integers(1, 2), st.integers(17, 24), st.data())
def test_transfer_fat_minor_should_build_its_model_along_halving_maps(ell, half, data):
    """Test that the transfer construction itself yields the minor across a (3, 2) map."""
    radius = data.draw(st.integers(8, half - 9))
    graph, fat = lower_bound_fixture(ell, 2 * half, radius, fat_threshold(3, 2))
    assert verify_fat_minor(graph, fat.pattern, fat)
    target = generate(CorpusSpec("subdivided_tree", {"ell": ell, "stretch": half - 1}))
    qi = QuasiIsometryMap(halving_map(ell, half), 3, 2)
    assert verify_quasi_isometry(graph, target, qi)

    built = _transfer_sets(graph, target, qi, fat)

    assert built is not None
    assert verify_minor_model(target, fat.pattern, built)
    assert transfer_fat_minor(graph, target, qi, fat) == built
