"""
Tests for JSON documents and the graph corpus.
"""

import pytest

from coarse_linewidth.domain.decomposition import verify_quasi_bound
from coarse_linewidth.domain.graph import Graph
from coarse_linewidth.domain.metric import TieBreaker
from coarse_linewidth.domain.minors import verify_superfat
from coarse_linewidth.domain.pipeline import run_pipeline
from coarse_linewidth.exceptions import GraphFormatError, ScheduleError
from coarse_linewidth.infrastructure.codec import (
    certificate_from_dict,
    certificate_to_dict,
    dumps,
    graph_from_dict,
    graph_to_dict,
    loads,
    outcome_from_dict,
    outcome_to_dict,
    read_document,
    schedule_from_dict,
    schedule_to_dict,
    witness_from_dict,
    witness_to_dict,
    write_document,
)
from coarse_linewidth.infrastructure.corpus import CorpusSpec, generate
from tests.conftest import path_graph, star_graph
from tests.test_minors import hand_built_claw


def test_graph_documents_should_keep_vertices_and_edges():
    """Test the graph document and its validation."""
    graph = Graph.from_edge_list(4, [(2, 1), (0, 1), (1, 2)])
    document = graph_to_dict(graph)
    assert document == {"n": 4, "edges": [[0, 1], [1, 2]]}
    assert graph_from_dict(document).edges == graph.edges
    with pytest.raises(GraphFormatError):
        graph_from_dict({"n": 3})
    with pytest.raises(GraphFormatError):
        graph_from_dict({"n": 2, "edges": [[0, 2]]})
    with pytest.raises(GraphFormatError):
        graph_from_dict({"n": 2, "edges": [[1, 1]]})


def test_schedule_documents_should_resolve_named_modes(paper_schedule, minimal_schedule):
    """Test short named documents and full tables."""
    assert schedule_from_dict({"c": 2, "ell": 1, "mode": "paper"}) == paper_schedule
    assert schedule_from_dict(schedule_to_dict(minimal_schedule)) == minimal_schedule
    custom = schedule_from_dict({"c": 2, "ell": 1, "delta": [[50, 22, 10], [46, 22, 10]]})
    assert custom.mode == "custom"
    assert custom.d0 == 50
    with pytest.raises(ScheduleError):
        schedule_from_dict({"c": 2, "ell": 1, "delta": [[46, 22, 9], [46, 22, 10]]})


def test_certificate_documents_should_verify_after_reading(minimal_schedule):
    """Test that a written certificate still verifies at its bound."""
    graph = path_graph(60)
    outcome = run_pipeline(graph, TieBreaker.lex(graph), minimal_schedule)
    document = loads(dumps(certificate_to_dict(outcome.certificate)))
    assert document["subject"] == list(range(60))
    certificate = certificate_from_dict(document, graph)
    assert verify_quasi_bound(graph, certificate, certificate.a, certificate.b)
    document["bags"][0] = [999]
    with pytest.raises(GraphFormatError):
        certificate_from_dict(document, graph)


def test_witness_documents_should_name_parts():
    """Test part names and the part check on reading."""
    graph = star_graph(3, 20)
    document = witness_to_dict(hand_built_claw())
    assert sorted(document["eta"]) == ["e0-1", "e0-2", "e0-3", "v0", "v1", "v2", "v3"]
    assert verify_superfat(graph, 1, witness_from_dict(document, graph))
    del document["eta"]["e0-1"]
    with pytest.raises(GraphFormatError, match="parts"):
        witness_from_dict(document)


def test_outcome_documents_should_carry_the_audit(minimal_schedule):
    """Test the outcome document of a run."""
    graph = path_graph(50)
    outcome = run_pipeline(graph, TieBreaker.lex(graph), minimal_schedule)
    document = outcome_to_dict(outcome)
    assert document["outcome"] == "certificate"
    assert document["schedule"]["mode"] == "minimal"
    assert document["audit"][0]["op"] == "initial_society"
    restored = outcome_from_dict(loads(dumps(document)), graph)
    assert restored.audit == outcome.audit
    assert restored.certificate.subject == outcome.certificate.subject
    with pytest.raises(GraphFormatError):
        outcome_from_dict(dict(document, outcome="draw"))


def test_dumps_should_be_canonical():
    """Test sorted keys and compact separators."""
    assert dumps({"b": [1, 2], "a": 0}) == '{"a":0,"b":[1,2]}'


def test_loads_should_report_malformed_json():
    """Test that decoding errors become format errors."""
    with pytest.raises(GraphFormatError, match="invalid JSON"):
        loads("{not json")


def test_documents_should_round_trip_through_files(tmp_path):
    """Test writing and reading a document on disk."""
    target = tmp_path / "graph.json"
    write_document(graph_to_dict(path_graph(3)), target)
    assert target.read_text(encoding="utf-8") == '{"edges":[[0,1],[1,2]],"n":3}\n'
    assert read_document(target) == {"edges": [[0, 1], [1, 2]], "n": 3}


def test_write_document_should_default_to_stdout(capsys):
    """Test output to stdout when no path is given."""
    write_document({"ok": True})
    assert capsys.readouterr().out == '{"ok":true}\n'


@pytest.mark.parametrize(
    "spec, vertices, edges",
    [
        (CorpusSpec("path", {"n": 5}), 5, 4),
        (CorpusSpec("cycle", {"n": 6}), 6, 6),
        (CorpusSpec("grid", {"rows": 2, "cols": 3}), 6, 7),
        (CorpusSpec("subdivided_star", {"arms": 3, "arm_len": 4}), 16, 15),
        (CorpusSpec("subdivided_star", {"arms": 4, "arm_len": 0}), 5, 4),
        (CorpusSpec("subdivided_tree", {"ell": 1, "stretch": 2}), 10, 9),
        (CorpusSpec("random_tree", {"n": 12, "seed": 3}), 12, 11),
    ],
)
def test_generate_should_build_each_family(spec, vertices, edges):
    """Test the sizes of every corpus family."""
    graph = generate(spec)
    assert graph.vertex_count == vertices
    assert graph.edge_count == edges


def test_generate_should_be_deterministic_for_a_seed():
    """Test that equal seeds give equal random trees."""
    first = generate(CorpusSpec("random_tree", {"n": 30, "seed": 11}))
    second = generate(CorpusSpec("random_tree", {"n": 30, "seed": 11}))
    assert first.edges == second.edges


def test_subdivided_star_should_number_arms_from_the_center():
    """Test that arm vertices follow the center and the leaves."""
    graph = generate(CorpusSpec("subdivided_star", {"arms": 3, "arm_len": 2}))
    assert graph.neighbors(0) == (4, 6, 8)
    assert graph.has_edge(5, 1)
    assert graph.has_edge(7, 2)


@pytest.mark.parametrize(
    "spec",
    [
        CorpusSpec("tree", {"n": 4}),
        CorpusSpec("path", {}),
        CorpusSpec("cycle", {"n": 2}),
        CorpusSpec("subdivided_star", {"arms": 3, "arm_len": -1}),
    ],
)
def test_generate_should_reject_bad_specs(spec):
    """Test unknown families and missing or out-of-range parameters."""
    with pytest.raises(GraphFormatError):
        generate(spec)
