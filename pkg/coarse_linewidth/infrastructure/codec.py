"""
Canonical JSON for graphs, schedules, certificates, witnesses and outcomes.

Every document is written with sorted keys and sorted vertex lists, so equal objects
serialize to equal bytes.
"""

import json
import logging
import sys
from dataclasses import replace
from pathlib import Path
from typing import Any, Dict, List, Mapping, Optional, Union

from coarse_linewidth.domain.decomposition import LineDecomposition, QuasiBoundCertificate
from coarse_linewidth.domain.graph import Graph, VertexSet
from coarse_linewidth.domain.metric import TieBreakerSpec
from coarse_linewidth.domain.minors import (
    FatMinorModel,
    QuasiIsometryMap,
    SuperfatModel,
    build_pattern_tree,
    parse_part,
    part_name,
)
from coarse_linewidth.domain.pipeline import (
    CERTIFICATE,
    WITNESS,
    AuditEntry,
    PipelineOutcome,
)
from coarse_linewidth.domain.schedule import Schedule, custom_schedule, make_schedule
from coarse_linewidth.exceptions import GraphFormatError

logger = logging.getLogger(__name__)

Document = Dict[str, Any]


def _sorted(members: VertexSet) -> List[int]:
    return sorted(members)


def _field(data: Mapping, key: str) -> Any:
    try:
        return data[key]
    except (KeyError, TypeError):
        raise GraphFormatError(f"document is missing {key!r}") from None


def _vertex_set(graph: Optional[Graph], raw: Any) -> VertexSet:
    if not isinstance(raw, list):
        raise GraphFormatError(f"expected a vertex list, got {type(raw).__name__}")
    members = frozenset(int(v) for v in raw)
    return graph.vertex_set(members) if graph is not None else members


def graph_to_dict(graph: Graph) -> Document:
    return {"n": graph.vertex_count, "edges": [list(e) for e in graph.edges]}


def graph_from_dict(data: Mapping) -> Graph:
    """
    Raises:
        GraphFormatError: On missing fields, loops or out-of-range endpoints.
    """
    n = _field(data, "n")
    edges = _field(data, "edges")
    if not isinstance(n, int) or not isinstance(edges, list):
        raise GraphFormatError("graph documents need an integer 'n' and an 'edges' list")
    return Graph.from_edge_list(n, edges)


def schedule_to_dict(schedule: Schedule) -> Document:
    return {
        "c": schedule.c,
        "ell": schedule.ell,
        "d0": schedule.d0,
        "mode": schedule.mode,
        "delta": [list(row) for row in schedule.delta],
        "alpha": list(schedule.alpha),
        "beta": list(schedule.beta),
    }


def schedule_from_dict(data: Mapping) -> Schedule:
    """
    Rebuild a schedule; ``paper`` and ``minimal`` documents only need ``c`` and ``ell``.

    Raises:
        ScheduleError: If the tables violate the axioms.
    """
    c, ell = int(_field(data, "c")), int(_field(data, "ell"))
    mode = data.get("mode", "custom")
    if mode in ("paper", "minimal") and "delta" not in data:
        return make_schedule(c, ell, mode)
    budgets = None
    if "alpha" in data and "beta" in data:
        budgets = {"alpha": data["alpha"], "beta": data["beta"]}
    schedule = custom_schedule(c, ell, _field(data, "delta"), data.get("d0"), budgets)
    if mode in ("paper", "minimal"):
        named = make_schedule(c, ell, mode)
        if replace(schedule, mode=mode) == named:
            return named
        logger.warning(f"Schedule document claims mode {mode!r} but its tables differ")
    return schedule


def certificate_to_dict(certificate: QuasiBoundCertificate) -> Document:
    return {
        "subject": _sorted(certificate.subject),
        "bags": [_sorted(bag) for bag in certificate.bags],
        "centers": [_sorted(c) for c in certificate.bag_centers],
        "a": certificate.a,
        "b": certificate.b,
        "boundary_centers": (
            None
            if certificate.boundary_centers is None
            else _sorted(certificate.boundary_centers)
        ),
    }


def certificate_from_dict(data: Mapping, graph: Optional[Graph] = None) -> QuasiBoundCertificate:
    rim = data.get("boundary_centers")
    return QuasiBoundCertificate(
        _vertex_set(graph, _field(data, "subject")),
        LineDecomposition(tuple(_vertex_set(graph, bag) for bag in _field(data, "bags"))),
        tuple(_vertex_set(graph, c) for c in _field(data, "centers")),
        int(_field(data, "a")),
        int(_field(data, "b")),
        None if rim is None else _vertex_set(graph, rim),
    )


def decomposition_to_dict(decomposition: LineDecomposition) -> Document:
    return {"bags": [_sorted(bag) for bag in decomposition.bags]}


def decomposition_from_dict(data: Mapping, graph: Optional[Graph] = None) -> LineDecomposition:
    return LineDecomposition(tuple(_vertex_set(graph, bag) for bag in _field(data, "bags")))


def _eta_to_dict(eta: Mapping) -> Document:
    return {part_name(p): _sorted(members) for p, members in sorted(eta.items())}


def witness_to_dict(model: SuperfatModel) -> Document:
    return {"ell": model.ell, "c": model.c, "eta": _eta_to_dict(model.eta)}


def witness_from_dict(data: Mapping, graph: Optional[Graph] = None) -> SuperfatModel:
    """
    Raises:
        GraphFormatError: If the parts do not match the parts of H_ell.
    """
    tree = build_pattern_tree(int(_field(data, "ell")))
    eta = {parse_part(name): _vertex_set(graph, raw) for name, raw in _field(data, "eta").items()}
    if set(eta) != set(tree.parts()):
        raise GraphFormatError(f"witness parts do not match H_{tree.ell}")
    return SuperfatModel(tree, eta, int(_field(data, "c")))


def fat_minor_to_dict(model: FatMinorModel) -> Document:
    return {"pattern": graph_to_dict(model.pattern), "c": model.c, "eta": _eta_to_dict(model.eta)}


def fat_minor_from_dict(data: Mapping, graph: Optional[Graph] = None) -> FatMinorModel:
    pattern = graph_from_dict(_field(data, "pattern"))
    eta = {parse_part(name): _vertex_set(graph, raw) for name, raw in _field(data, "eta").items()}
    return FatMinorModel(pattern, eta, int(_field(data, "c")))


def qi_to_dict(qi: QuasiIsometryMap) -> Document:
    return {"phi": list(qi.phi), "L": qi.L, "C": qi.C}


def qi_from_dict(data: Mapping) -> QuasiIsometryMap:
    return QuasiIsometryMap(
        tuple(int(x) for x in _field(data, "phi")), int(_field(data, "L")), int(_field(data, "C"))
    )


def tiebreak_to_dict(spec: TieBreakerSpec) -> Document:
    return spec.to_dict()


def tiebreak_from_dict(data: Mapping) -> TieBreakerSpec:
    return TieBreakerSpec.from_dict(data)


def outcome_to_dict(outcome: PipelineOutcome) -> Document:
    """``{"outcome", "payload", "schedule", "audit"}``."""
    if outcome.kind == WITNESS and outcome.witness is not None:
        payload = witness_to_dict(outcome.witness)
    elif outcome.certificate is not None:
        payload = certificate_to_dict(outcome.certificate)
    else:
        raise GraphFormatError("outcome carries neither a certificate nor a witness")
    return {
        "outcome": outcome.kind,
        "payload": payload,
        "schedule": schedule_to_dict(outcome.schedule),
        "audit": [entry.to_dict() for entry in outcome.audit],
    }


def outcome_from_dict(data: Mapping, graph: Optional[Graph] = None) -> PipelineOutcome:
    kind = _field(data, "outcome")
    schedule = schedule_from_dict(_field(data, "schedule"))
    audit = tuple(
        AuditEntry(int(_field(e, "century")), str(_field(e, "op")), dict(e.get("detail", {})))
        for e in data.get("audit", [])
    )
    payload = _field(data, "payload")
    if kind == WITNESS:
        return PipelineOutcome(
            WITNESS, schedule, witness=witness_from_dict(payload, graph), audit=audit
        )
    if kind == CERTIFICATE:
        return PipelineOutcome(
            CERTIFICATE, schedule, certificate=certificate_from_dict(payload, graph), audit=audit
        )
    raise GraphFormatError(f"unknown outcome {kind!r}")


def dumps(document: Any) -> str:
    return json.dumps(document, sort_keys=True, separators=(",", ":"))


def loads(text: str) -> Any:
    try:
        return json.loads(text)
    except json.JSONDecodeError as error:
        raise GraphFormatError(f"invalid JSON: {error}") from error


def read_document(path: Union[str, Path]) -> Any:
    """Read a JSON document from a file, or from stdin for ``-``."""
    if str(path) == "-":
        return loads(sys.stdin.read())
    return loads(Path(path).read_text(encoding="utf-8"))


def write_document(document: Any, path: Optional[Union[str, Path]] = None) -> None:
    """Write a JSON document to a file, or to stdout when ``path`` is None or ``-``."""
    text = dumps(document) + "\n"
    if path is None or str(path) == "-":
        sys.stdout.write(text)
        return
    Path(path).write_text(text, encoding="utf-8")
    logger.debug(f"Wrote {len(text)} bytes to {path}")
