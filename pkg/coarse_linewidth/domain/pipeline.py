"""
The century state machine: from singleton forts to a certificate or a witness.
"""

import logging
import threading
from dataclasses import dataclass, field
from typing import Any, Dict, List, Mapping, Optional, Tuple

from coarse_linewidth.config import Settings, get_settings
from coarse_linewidth.domain.decomposition import QuasiBoundCertificate, verify_quasi_bound
from coarse_linewidth.domain.graph import Graph, is_connected_induced
from coarse_linewidth.domain.government import (
    advance_century,
    primordial_government,
    stabilize_government,
)
from coarse_linewidth.domain.metric import TieBreaker
from coarse_linewidth.domain.minors import SuperfatModel, verify_superfat
from coarse_linewidth.domain.passages import apply_castle_move, find_castle_move
from coarse_linewidth.domain.realm import (
    RealmState,
    cell_union_certificate,
    initial_society,
    society_to_realm,
)
from coarse_linewidth.domain.schedule import Schedule
from coarse_linewidth.domain.verdict import Verdict
from coarse_linewidth.exceptions import InvariantViolation, PreconditionError, RunCancelled

logger = logging.getLogger(__name__)

CERTIFICATE = "certificate"
WITNESS = "witness"


@dataclass(frozen=True)
class AuditEntry:
    century: int
    op: str
    detail: Mapping[str, Any] = field(default_factory=dict)

    def to_dict(self) -> Dict[str, Any]:
        return {"century": self.century, "op": self.op, "detail": dict(self.detail)}


@dataclass(frozen=True)
class PipelineOutcome:
    """
    Terminal result of a run: a certificate for all of ``V(G)`` or a superfat witness.

    Examples:
        outcome = run_pipeline(graph, TieBreaker.lex(graph), make_schedule(2, 1))
        if outcome.kind == "witness":
            print(outcome.witness.image)
    """

    kind: str
    schedule: Schedule
    certificate: Optional[QuasiBoundCertificate] = None
    witness: Optional[SuperfatModel] = None
    audit: Tuple[AuditEntry, ...] = ()

    @property
    def is_witness(self) -> bool:
        return self.kind == WITNESS


def extract_certificate(
    graph: Graph, tb: TieBreaker, sched: Schedule, society: RealmState
) -> QuasiBoundCertificate:
    """
    Certificate for ``V(G)`` at the final bound, from a last-century society of houses.

    Raises:
        PreconditionError: If the society is not at the last century or holds a fort.
        InvariantViolation: If no certificate could be assembled or it fails verification.
    """
    if society.century != sched.ell or society.kind != "society":
        raise PreconditionError("extract_certificate needs the last-century society")
    if society.forts or society.castles:
        raise PreconditionError("a last-century fort is a witness, not a certificate")
    a, b = sched.final_bound()
    partition = society.partition(graph, tb)
    certificate = cell_union_certificate(graph, society, partition, society.houses, a, b)
    if certificate is None:
        raise InvariantViolation("extract_certificate", "final quasi-bound", sched.ell)
    certificate = certificate.relabel(a, b)
    if certificate.subject != frozenset(graph.vertices):
        raise InvariantViolation("extract_certificate", "covering", sched.ell)
    verdict = verify_quasi_bound(graph, certificate, a, b)
    if not verdict:
        raise InvariantViolation(
            "extract_certificate", "final quasi-bound", sched.ell, verdict.reason or ""
        )
    logger.info(f"Certificate with {certificate.center_count} centers per bag at ({a}, {b})")
    return certificate


def verify_outcome(graph: Graph, outcome: PipelineOutcome) -> Verdict:
    """A witness must be a superfat H_ell model, a certificate must cover ``V(G)`` at the final bound."""
    sched = outcome.schedule
    if outcome.kind == WITNESS:
        if outcome.witness is None or outcome.certificate is not None:
            return Verdict.failed("outcome: a witness outcome carries exactly a witness")
        if outcome.witness.c != sched.c:
            return Verdict.failed("witness: fatness differs from the schedule")
        return verify_superfat(graph, sched.ell, outcome.witness).prefixed("witness")
    if outcome.kind == CERTIFICATE:
        if outcome.certificate is None or outcome.witness is not None:
            return Verdict.failed("outcome: a certificate outcome carries exactly a certificate")
        if outcome.certificate.subject != frozenset(graph.vertices):
            return Verdict.failed("certificate: subject is not V(G)")
        a, b = sched.final_bound()
        return verify_quasi_bound(graph, outcome.certificate, a, b).prefixed("certificate")
    return Verdict.failed(f"outcome: unknown kind {outcome.kind!r}")


class _Run:
    def __init__(
        self,
        graph: Graph,
        tb: TieBreaker,
        sched: Schedule,
        settings: Settings,
        cancel: Optional[threading.Event] = None,
    ) -> None:
        self.graph = graph
        self.tb = tb
        self.sched = sched
        self.settings = settings
        self.cancel = cancel
        self.audit: List[AuditEntry] = []

    def checkpoint(self, where: str) -> None:
        if self.cancel is not None and self.cancel.is_set():
            logger.info(f"Pipeline cancelled before {where}")
            raise RunCancelled(where)

    def record(self, century: int, op: str, detail: Mapping[str, Any]) -> None:
        self.audit.append(AuditEntry(century, op, detail))

    def finish(
        self,
        witness: Optional[SuperfatModel] = None,
        certificate: Optional[QuasiBoundCertificate] = None,
    ) -> PipelineOutcome:
        kind = WITNESS if witness is not None else CERTIFICATE
        outcome = PipelineOutcome(kind, self.sched, certificate, witness, tuple(self.audit))
        verdict = verify_outcome(self.graph, outcome)
        if not verdict:
            raise InvariantViolation("run_pipeline", verdict.reason or "", self.sched.ell)
        return outcome

    def saturate(self, realm: RealmState) -> RealmState | SuperfatModel:
        k = realm.century
        while True:
            self.checkpoint("castle_move")
            move = find_castle_move(
                self.graph, self.tb, self.sched, realm, self.settings, self.cancel
            )
            if move is None:
                return realm
            result = apply_castle_move(self.graph, self.tb, self.sched, realm, move)
            self.record(
                k,
                "castle_move",
                {
                    "leaves": list(move.leaves),
                    "hub": list(move.hub_members),
                    "absorbed": list(move.absorbed),
                    "size": len(move.castle),
                },
            )
            if isinstance(result, SuperfatModel):
                return result
            realm = result

    def run(self) -> PipelineOutcome:
        graph, tb, sched = self.graph, self.tb, self.sched
        self.checkpoint("initial_society")
        society = initial_society(graph, tb, sched)
        self.record(0, "initial_society", {"forts": len(society.forts)})
        for k in range(sched.ell):
            logger.info(f"Century {k}: {len(society.buildings)} buildings")
            self.checkpoint("society_to_realm")
            realm = society_to_realm(graph, tb, sched, society)
            self.record(
                k,
                "society_to_realm",
                {"houses": len(realm.houses), "covered": sum(len(x) for x in realm.family)},
            )
            saturated = self.saturate(realm)
            if isinstance(saturated, SuperfatModel):
                return self.finish(witness=saturated)
            self.checkpoint("primordial_government")
            gov = primordial_government(graph, tb, sched, saturated)
            self.record(k, "primordial_government", {"provinces": len(gov.provinces)})
            century = k
            stable = stabilize_government(
                graph,
                tb,
                sched,
                gov,
                lambda op, detail: self.record(century, op, detail),
                self.cancel,
            )
            if isinstance(stable, SuperfatModel):
                return self.finish(witness=stable)
            self.checkpoint("advance_century")
            society = advance_century(graph, tb, sched, stable)
            self.record(
                k + 1,
                "advance_century",
                {"houses": len(society.houses), "forts": len(society.forts)},
            )
        for i in society.forts:
            witness = society.buildings[i].witness
            if witness is not None and witness.ell == sched.ell:
                return self.finish(witness=witness)
        self.checkpoint("extract_certificate")
        certificate = extract_certificate(graph, tb, sched, society)
        self.record(sched.ell, "extract_certificate", {"bags": len(certificate.bags)})
        return self.finish(certificate=certificate)


def run_pipeline(
    graph: Graph,
    tb: TieBreaker,
    sched: Schedule,
    settings: Optional[Settings] = None,
    cancel: Optional[threading.Event] = None,
) -> PipelineOutcome:
    """
    Run every century on a connected graph and return a verified outcome.

    ``cancel`` is polled between steps and inside the move searches; a run whose flag
    is set stops with ``RunCancelled`` instead of finishing.

    Raises:
        PreconditionError: If the graph is empty or disconnected, or the tie-breaker
            belongs to another graph.
        RunCancelled: If ``cancel`` was set before the run finished.
        InvariantViolation: If a self-check fails, naming the century, the operation
            and the violated bullet.
    """
    if graph.vertex_count == 0:
        raise PreconditionError("the graph has no vertices")
    if not is_connected_induced(graph, graph.vertices):
        raise PreconditionError("run_pipeline needs a connected graph")
    if tb.edge_count != graph.edge_count:
        raise PreconditionError("tie-breaker does not rank the edges of this graph")
    logger.info(
        f"Pipeline on {graph.vertex_count} vertices, c={sched.c}, ell={sched.ell}, "
        f"{sched.mode} schedule"
    )
    return _Run(graph, tb, sched, settings or get_settings(), cancel).run()
