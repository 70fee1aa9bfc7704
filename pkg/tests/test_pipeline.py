"""
Tests for the century pipeline and its terminal outcomes.
"""

import threading

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from coarse_linewidth.domain.graph import Graph
from coarse_linewidth.domain.metric import TieBreaker
from coarse_linewidth.domain.pipeline import (
    CERTIFICATE,
    WITNESS,
    PipelineOutcome,
    extract_certificate,
    run_pipeline,
    verify_outcome,
)
from coarse_linewidth.domain.realm import Building, BuildingClass, RealmState
from coarse_linewidth.domain.schedule import make_schedule
from coarse_linewidth.exceptions import PreconditionError, RunCancelled
from coarse_linewidth.infrastructure.corpus import CorpusSpec, generate
from tests.conftest import cycle_graph, path_graph, star_graph
from tests.test_minors import hand_built_claw


@pytest.mark.parametrize("graph", [path_graph(1), path_graph(30), cycle_graph(20)])
def test_run_pipeline_should_certify_paths_and_cycles(graph, paper_schedule):
    """Test that graphs without a claw end with a certificate for V(G)."""
    outcome = run_pipeline(graph, TieBreaker.lex(graph), paper_schedule)
    assert outcome.kind == CERTIFICATE
    assert not outcome.is_witness
    assert outcome.certificate.subject == frozenset(graph.vertices)
    assert verify_outcome(graph, outcome)
    assert outcome.certificate.fits(*paper_schedule.final_bound())


def test_run_pipeline_should_record_the_audit_log(minimal_schedule):
    """Test the audit trail of a run on a long path."""
    graph = path_graph(100)
    outcome = run_pipeline(graph, TieBreaker.lex(graph), minimal_schedule)
    assert outcome.kind == CERTIFICATE
    ops = [entry.op for entry in outcome.audit]
    assert ops[0] == "initial_society"
    assert ops[-1] == "extract_certificate"
    assert "advance_century" in ops
    assert outcome.audit[0].detail == {"forts": 3}
    assert outcome.audit[0].to_dict() == {
        "century": 0,
        "op": "initial_society",
        "detail": {"forts": 3},
    }


def test_run_pipeline_should_not_depend_on_the_tiebreaker_for_the_outcome_kind(
    minimal_schedule,
):
    """Test that a seeded ranking still certifies a path."""
    graph = path_graph(60)
    outcome = run_pipeline(graph, TieBreaker.seeded(graph, 5), minimal_schedule)
    assert outcome.kind == CERTIFICATE
    assert verify_outcome(graph, outcome)


def test_run_pipeline_should_check_its_preconditions(paper_schedule):
    """Test empty, disconnected and mismatched inputs."""
    empty = Graph.from_edge_list(0, [])
    with pytest.raises(PreconditionError):
        run_pipeline(empty, TieBreaker.lex(empty), paper_schedule)
    split = Graph.from_edge_list(4, [(0, 1), (2, 3)])
    with pytest.raises(PreconditionError):
        run_pipeline(split, TieBreaker.lex(split), paper_schedule)
    graph = path_graph(5)
    with pytest.raises(PreconditionError):
        run_pipeline(graph, TieBreaker.lex(path_graph(4)), paper_schedule)


def test_run_pipeline_should_stop_when_cancelled(minimal_schedule):
    """Test that a set flag stops the run before its first step."""
    graph = path_graph(30)
    cancel = threading.Event()
    cancel.set()
    with pytest.raises(RunCancelled) as error:
        run_pipeline(graph, TieBreaker.lex(graph), minimal_schedule, cancel=cancel)
    assert error.value.where == "initial_society"
    outcome = run_pipeline(graph, TieBreaker.lex(graph), minimal_schedule, cancel=threading.Event())
    assert verify_outcome(graph, outcome)


def test_extract_certificate_should_cover_the_graph(minimal_schedule):
    """Test extraction from a last-century society of one house."""
    graph = path_graph(40)
    tb = TieBreaker.lex(graph)
    house = Building(frozenset({0, 1, 2}), BuildingClass.HOUSE)
    society = RealmState.of(1, [house], "society")
    certificate = extract_certificate(graph, tb, minimal_schedule, society)
    assert certificate.subject == frozenset(graph.vertices)
    assert (certificate.a, certificate.b) == minimal_schedule.final_bound()
    early = RealmState.of(0, society.buildings, "society")
    with pytest.raises(PreconditionError):
        extract_certificate(graph, tb, minimal_schedule, early)


def test_verify_outcome_should_check_witnesses_against_the_schedule(minimal_schedule):
    """Test a hand-built witness outcome and a fatness mismatch."""
    graph = star_graph(3, 20)
    outcome = PipelineOutcome(WITNESS, minimal_schedule, witness=hand_built_claw())
    assert outcome.is_witness
    assert verify_outcome(graph, outcome)
    wrong = PipelineOutcome(WITNESS, minimal_schedule, witness=hand_built_claw(c=3))
    assert verify_outcome(graph, wrong).reason == "witness: fatness differs from the schedule"
    empty = PipelineOutcome(WITNESS, minimal_schedule)
    assert verify_outcome(graph, empty).reason.startswith("outcome")


def test_verify_outcome_should_refuse_partial_certificates(paper_schedule):
    """Test that a certificate must have V(G) as its subject."""
    graph = path_graph(30)
    outcome = run_pipeline(graph, TieBreaker.lex(graph), paper_schedule)
    larger = path_graph(31)
    verdict = verify_outcome(larger, outcome)
    assert verdict.reason == "certificate: subject is not V(G)"


@pytest.mark.slow
@pytest.mark.parametrize("arm_len", [30, 60])
def test_run_pipeline_should_verify_on_long_subdivided_stars(arm_len):
    """Test that either outcome on a long star is verified."""
    graph = star_graph(3, arm_len)
    schedule = make_schedule(2, 1, "minimal")
    outcome = run_pipeline(graph, TieBreaker.lex(graph), schedule)
    assert outcome.kind in (CERTIFICATE, WITNESS)
    assert verify_outcome(graph, outcome)


@pytest.mark.slow
@settings(max_examples=15, deadline=None)
@given(st.integers(2, 80), st.integers(0, 1000))
def test_run_pipeline_should_verify_on_random_trees(n, seed):
    """Test that every random tree gets a verified outcome."""
    graph = generate(CorpusSpec("random_tree", {"n": n, "seed": seed}))
    schedule = make_schedule(2, 1, "minimal")
    outcome = run_pipeline(graph, TieBreaker.lex(graph), schedule)
    assert verify_outcome(graph, outcome)


@pytest.mark.slow
@pytest.mark.parametrize("family", ["path", "cycle"])
@pytest.mark.parametrize("n", [5000, 20000])
def test_run_pipeline_should_certify_long_paths_and_cycles(family, n, paper_schedule):
    """Test the desk-scale dichotomy on long claw-free graphs."""
    graph = generate(CorpusSpec(family, {"n": n}))
    outcome = run_pipeline(graph, TieBreaker.lex(graph), paper_schedule)
    assert outcome.kind == CERTIFICATE
    assert (outcome.certificate.a, outcome.certificate.b) == (21, 2431)
    assert verify_outcome(graph, outcome)


@pytest.mark.slow
def test_run_pipeline_should_emit_one_verified_outcome_on_a_huge_star(paper_schedule):
    """Test a subdivided star whose arms outgrow the d0 of the paper-mode schedule."""
    graph = star_graph(3, 4100)
    outcome = run_pipeline(graph, TieBreaker.lex(graph), paper_schedule)
    assert (outcome.certificate is None) == outcome.is_witness
    assert verify_outcome(graph, outcome)


@pytest.mark.slow
def test_run_pipeline_should_verify_the_designed_depth_two_instance():
    """Test a subdivided H_2 stretched well past the minimal d0 for two centuries."""
    schedule = make_schedule(2, 2, "minimal")
    graph = generate(CorpusSpec("subdivided_tree", {"ell": 2, "stretch": 5 * schedule.d0}))
    outcome = run_pipeline(graph, TieBreaker.lex(graph), schedule)
    assert verify_outcome(graph, outcome)
    ops = {entry.op for entry in outcome.audit}
    assert {"initial_society", "castle_move"} <= ops
    assert ops <= {
        "initial_society",
        "society_to_realm",
        "castle_move",
        "primordial_government",
        "revolution",
        "advance_century",
        "extract_certificate",
    }
